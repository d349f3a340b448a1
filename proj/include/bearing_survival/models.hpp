#pragma once

#include "bearing_survival/models/common.hpp"
#include "bearing_survival/models/cox.hpp"
#include "bearing_survival/models/coxboost.hpp"
#include "bearing_survival/models/forest.hpp"
#include "bearing_survival/models/kaplan_meier.hpp"
#include "bearing_survival/models/regression_tree.hpp"
#include "bearing_survival/models/serialization.hpp"
#include "bearing_survival/models/weibull_aft.hpp"
