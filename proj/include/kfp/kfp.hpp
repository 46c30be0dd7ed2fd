#pragma once

#include "kfp/bounds.hpp"
#include "kfp/config.hpp"
#include "kfp/controls.hpp"
#include "kfp/estimators.hpp"
#include "kfp/experiments.hpp"
#include "kfp/girsanov.hpp"
#include "kfp/integrate.hpp"
#include "kfp/model.hpp"
#include "kfp/observables.hpp"
#include "kfp/ou_oracle.hpp"
#include "kfp/parallel.hpp"
#include "kfp/rng.hpp"
#include "kfp/weights.hpp"
