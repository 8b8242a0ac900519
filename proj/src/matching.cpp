#include "vg3d/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace vg3d {

CostMatrix build_cost_matrix(std::span<const Aabb> pred_boxes, std::span<const Aabb> gt_boxes) {
    if (pred_boxes.empty() && gt_boxes.empty()) {
        throw std::invalid_argument("build_cost_matrix: no boxes on either side");
    }
    CostMatrix m;
    m.n_pred = pred_boxes.size();
    m.n_gt = gt_boxes.size();
    m.n = std::max(m.n_pred, m.n_gt);
    m.entries.assign(m.n * m.n, 0.0);
    for (std::size_t i = 0; i < m.n_pred; ++i) {
        for (std::size_t j = 0; j < m.n_gt; ++j) {
            m.at(i, j) = -iou(pred_boxes[i], gt_boxes[j]);
        }
    }
    return m;
}

namespace {

double sum_matched(const CostMatrix& cost, const std::vector<std::size_t>& col_of_row) {
    double total = 0.0;
    for (std::size_t i = 0; i < col_of_row.size(); ++i) {
        total += cost.at(i, col_of_row[i]);
    }
    return total;
}

Assignment from_row_solution(const CostMatrix& cost, const std::vector<std::size_t>& col_of_row) {
    Assignment a;
    a.pairs.reserve(cost.n);
    for (std::size_t i = 0; i < cost.n; ++i) {
        a.pairs.emplace_back(i, col_of_row[i]);
    }
    a.total_cost = sum_matched(cost, col_of_row);
    return a;
}

}  // namespace

Assignment hungarian(const CostMatrix& cost) {
    const std::size_t n = cost.n;
    if (n == 0 || cost.entries.size() != n * n) {
        throw std::invalid_argument("hungarian: malformed cost matrix");
    }
    for (double e : cost.entries) {
        if (!std::isfinite(e)) {
            throw std::invalid_argument("hungarian: non-finite cost entry");
        }
    }

    constexpr double kInf = std::numeric_limits<double>::infinity();
    // 1-based potentials over rows (u) and columns (v); p[j] is the row matched
    // to column j, p[0] the row currently being inserted.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);

    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            std::size_t j1 = 0;
            double delta = kInf;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        // Augment along the alternating path back to the inserted row.
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<std::size_t> col_of_row(n, 0);
    for (std::size_t j = 1; j <= n; ++j) {
        col_of_row[p[j] - 1] = j - 1;
    }
    return from_row_solution(cost, col_of_row);
}

Assignment brute_force_assignment(const CostMatrix& cost) {
    const std::size_t n = cost.n;
    if (n == 0 || cost.entries.size() != n * n) {
        throw std::invalid_argument("brute_force_assignment: malformed cost matrix");
    }
    if (n > 9) {
        throw std::invalid_argument("brute_force_assignment: n > 9 exceeds the factorial guard");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::size_t> best = perm;
    double best_cost = sum_matched(cost, perm);
    while (std::next_permutation(perm.begin(), perm.end())) {
        const double c = sum_matched(cost, perm);
        if (c < best_cost) {
            best_cost = c;
            best = perm;
        }
    }
    return from_row_solution(cost, best);
}

}  // namespace vg3d
