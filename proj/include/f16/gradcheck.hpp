// Copyright 2026 The f16kit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "f16/aligner.hpp"
#include "f16/rng.hpp"
#include "f16/tensor.hpp"

namespace f16 {

// Gradient verification against the central finite-difference oracle, run
// entirely in 64-bit. Used by the verify-grad command and the test suite.

/// Per-element relative error, max over elements:
/// |a_i - b_i| / max(1, |a_i|, |b_i|).
double rel_err(const Tensor64& a, const Tensor64& b);

/// Uniform random tensor on [lo, hi), entries drawn in flat index order.
Tensor64 random_tensor(const std::vector<std::size_t>& dims, Rng& rng, double lo,
                       double hi);

struct GradCheckCase {
  std::string name;
  double max_rel_err = 0.0;
};

/// One analytic-vs-finite-difference comparison per backward pass: linear
/// (dx, dw, db), GELU, 2x2 max pool, and the full window-aligner + head
/// pipeline (both pooling placements) on a p=4, d=3, h=5, w=2, C=2 instance.
/// Max-pool cases deterministically re-draw inputs whose pooled blocks have
/// a top-two gap below 1e-3, where the subgradient is not unique.
std::vector<GradCheckCase> run_gradient_checks(std::uint64_t seed);

/// Convenience: the worst max_rel_err across n_seeds full check rounds
/// (seeds seed, seed+1, ...).
double worst_gradient_error(std::uint64_t seed, int n_seeds);

}  // namespace f16
