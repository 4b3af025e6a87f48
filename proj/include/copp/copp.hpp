#pragma once

#include "copp/baselines.hpp"
#include "copp/bench.hpp"
#include "copp/conformal.hpp"
#include "copp/dataset.hpp"
#include "copp/extensions.hpp"
#include "copp/logistic.hpp"
#include "copp/policy.hpp"
#include "copp/prediction_set.hpp"
#include "copp/pseudo.hpp"
#include "copp/quantile_forest.hpp"
#include "copp/rng.hpp"
#include "copp/sequential.hpp"
#include "copp/synthetic.hpp"
#include "copp/weighted_quantile.hpp"
