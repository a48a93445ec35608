#pragma once

#include "lobsim/params.hpp"
#include "lobsim/book.hpp"
#include "lobsim/rng.hpp"
#include "lobsim/flow.hpp"
#include "lobsim/generator.hpp"
#include "lobsim/stationary.hpp"
#include "lobsim/stats.hpp"
#include "lobsim/toy.hpp"
#include "lobsim/io.hpp"
#include "lobsim/config.hpp"
