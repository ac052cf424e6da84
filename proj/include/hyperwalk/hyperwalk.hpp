#pragma once

#include "hyperwalk/error.hpp"
#include "hyperwalk/rng.hpp"
#include "hyperwalk/log.hpp"
#include "hyperwalk/hypergraph.hpp"
#include "hyperwalk/walks.hpp"
#include "hyperwalk/sgns.hpp"
#include "hyperwalk/neural.hpp"
#include "hyperwalk/split.hpp"
#include "hyperwalk/dhe_model.hpp"
#include "hyperwalk/datasets.hpp"
#include "hyperwalk/metrics.hpp"
#include "hyperwalk/pipeline.hpp"
