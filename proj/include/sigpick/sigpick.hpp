#pragma once

#include "sigpick/argcav.hpp"
#include "sigpick/builtin.hpp"
#include "sigpick/common.hpp"
#include "sigpick/evaluator.hpp"
#include "sigpick/game.hpp"
#include "sigpick/geometry.hpp"
#include "sigpick/io.hpp"
#include "sigpick/solver.hpp"
#include "sigpick/strategy.hpp"
