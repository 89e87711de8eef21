#pragma once

#include "cluster.hpp"
#include "data.hpp"
#include "error.hpp"
#include "experiment.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "random.hpp"
#include "sim.hpp"
#include "spectral.hpp"
