#pragma once

// Umbrella header for the kernel online-learning library: coverage-based
// approximation of SGD in a reproducing-kernel feature space with a provably
// bounded support set.

#include "avm/coverage.hpp"
#include "avm/data.hpp"
#include "avm/kernel.hpp"
#include "avm/learner.hpp"
#include "avm/loss.hpp"
#include "avm/metrics.hpp"
#include "avm/model.hpp"
#include "avm/multiclass.hpp"
#include "avm/rng.hpp"
#include "avm/snapshot.hpp"
#include "avm/sparse_vector.hpp"
