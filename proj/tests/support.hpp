// Shared test helpers: random generators and independent oracles. Everything
// here must stay independent of the implementation paths it checks.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "vg3d/geometry.hpp"
#include "vg3d/matching.hpp"

namespace vg3d::testsupport {

inline Aabb random_box(std::mt19937& rng, double span = 4.0, double max_extent = 2.0) {
    std::uniform_real_distribution<double> pos(-span, span);
    std::uniform_real_distribution<double> ext(0.1, max_extent);
    const Vec3 lo{pos(rng), pos(rng), pos(rng)};
    const Vec3 size{ext(rng), ext(rng), ext(rng)};
    return {lo, lo + size};
}

// Monte-Carlo IoU: sample the union's bounding hull, estimate intersection and
// union volumes by hit counting. Returns (estimate, standard error).
struct MonteCarloIou {
    double estimate = 0.0;
    double sigma = 0.0;
};

inline MonteCarloIou monte_carlo_iou(const Aabb& a, const Aabb& b, std::size_t samples,
                                     std::mt19937& rng) {
    const Vec3 lo{std::min(a.min_corner.x, b.min_corner.x), std::min(a.min_corner.y, b.min_corner.y),
                  std::min(a.min_corner.z, b.min_corner.z)};
    const Vec3 hi{std::max(a.max_corner.x, b.max_corner.x), std::max(a.max_corner.y, b.max_corner.y),
                  std::max(a.max_corner.z, b.max_corner.z)};
    std::uniform_real_distribution<double> ux(lo.x, hi.x), uy(lo.y, hi.y), uz(lo.z, hi.z);
    std::size_t in_intersection = 0;
    std::size_t in_union = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        const Vec3 p{ux(rng), uy(rng), uz(rng)};
        const bool ina = a.contains(p);
        const bool inb = b.contains(p);
        in_intersection += ina && inb;
        in_union += ina || inb;
    }
    MonteCarloIou out;
    if (in_union == 0) {
        return out;
    }
    const double n_union = double(in_union);
    const double p_hat = double(in_intersection) / n_union;
    out.estimate = p_hat;
    // Binomial error of the intersection fraction conditioned on union hits.
    out.sigma = std::sqrt(std::max(p_hat * (1.0 - p_hat), 1e-12) / n_union);
    return out;
}

inline CostMatrix random_cost_matrix(std::mt19937& rng, std::size_t n) {
    std::uniform_real_distribution<double> unif(-1.0, 0.0);
    CostMatrix m;
    m.n = m.n_pred = m.n_gt = n;
    m.entries.resize(n * n);
    for (double& e : m.entries) {
        e = unif(rng);
    }
    return m;
}

}  // namespace vg3d::testsupport
