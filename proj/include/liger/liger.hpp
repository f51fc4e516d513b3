#pragma once

#include "liger/bench.hpp"
#include "liger/dataset.hpp"
#include "liger/error.hpp"
#include "liger/extend.hpp"
#include "liger/io.hpp"
#include "liger/label_model.hpp"
#include "liger/metrics.hpp"
#include "liger/parallel.hpp"
#include "liger/partition.hpp"
#include "liger/random.hpp"
#include "liger/smoothness.hpp"
#include "liger/synthetic.hpp"
#include "liger/tune.hpp"
