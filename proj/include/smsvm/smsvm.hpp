#pragma once

#include "smsvm/cross_validation.hpp"
#include "smsvm/dataset.hpp"
#include "smsvm/linesearch.hpp"
#include "smsvm/model.hpp"
#include "smsvm/objective.hpp"
#include "smsvm/rng.hpp"
#include "smsvm/sgd.hpp"
#include "smsvm/solver.hpp"
