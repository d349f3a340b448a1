#pragma once

#include "bearing_survival/dataset.hpp"
#include "bearing_survival/error.hpp"
#include "bearing_survival/events.hpp"
#include "bearing_survival/experiment.hpp"
#include "bearing_survival/features.hpp"
#include "bearing_survival/io.hpp"
#include "bearing_survival/loaders.hpp"
#include "bearing_survival/metrics.hpp"
#include "bearing_survival/models.hpp"
#include "bearing_survival/pipeline.hpp"
#include "bearing_survival/signal.hpp"
#include "bearing_survival/simulate.hpp"
