#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "vg3d/geometry.hpp"

namespace vg3d {

// Square assignment cost matrix, side n = max(n_pred, n_gt). Real prediction/GT
// pairs hold -IoU; padding rows/columns hold cost 0.
struct CostMatrix {
    std::size_t n_pred = 0;
    std::size_t n_gt = 0;
    std::size_t n = 0;
    std::vector<double> entries;  // n*n, row-major

    double at(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
    double& at(std::size_t i, std::size_t j) { return entries[i * n + j]; }
};

// Throws std::invalid_argument when both lists are empty; callers handle the
// zero-target / no-prediction cases before matching.
CostMatrix build_cost_matrix(std::span<const Aabb> pred_boxes, std::span<const Aabb> gt_boxes);

struct Assignment {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (row, col), sorted by row
    double total_cost = 0.0;
};

// Minimum-cost perfect matching, O(n^3) Kuhn-Munkres with potentials.
// Deterministic: rows are processed in increasing index order, so ties between
// equal-cost optima always resolve the same way. Throws on non-finite entries.
Assignment hungarian(const CostMatrix& cost);

// Exact minimum over all n! permutations; test oracle. Throws when n > 9.
Assignment brute_force_assignment(const CostMatrix& cost);

}  // namespace vg3d
