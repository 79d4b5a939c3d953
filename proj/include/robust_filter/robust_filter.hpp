#pragma once

#include "adversary.hpp"
#include "baselines.hpp"
#include "core.hpp"
#include "csv.hpp"
#include "filter_common.hpp"
#include "filter_covariance.hpp"
#include "filter_mean.hpp"
#include "naive_prune.hpp"
#include "rng.hpp"
#include "scenario.hpp"
#include "spectral.hpp"
#include "tail.hpp"
