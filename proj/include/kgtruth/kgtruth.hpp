#pragma once

// Umbrella header: conditional truth discovery over knowledge triples,
// reference baselines, synthetic benchmarks and the file formats around them.

#include "kgtruth/baselines.hpp"
#include "kgtruth/common.hpp"
#include "kgtruth/dataset.hpp"
#include "kgtruth/embeddings.hpp"
#include "kgtruth/engine.hpp"
#include "kgtruth/index.hpp"
#include "kgtruth/io.hpp"
#include "kgtruth/metrics.hpp"
#include "kgtruth/synthbench.hpp"
