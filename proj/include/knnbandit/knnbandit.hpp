#pragma once

// Umbrella header for the full library.

#include "knnbandit/rng.hpp"
#include "knnbandit/knn_store.hpp"
#include "knnbandit/ucb.hpp"
#include "knnbandit/policy.hpp"
#include "knnbandit/baselines.hpp"
#include "knnbandit/environments.hpp"
#include "knnbandit/hard_instance.hpp"
#include "knnbandit/probes.hpp"
#include "knnbandit/simulate.hpp"
#include "knnbandit/dataset.hpp"
#include "knnbandit/config.hpp"
#include "knnbandit/builders.hpp"
#include "knnbandit/csvio.hpp"
