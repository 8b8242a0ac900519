#include "vg3d/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "vg3d/matching.hpp"

namespace vg3d {

namespace {

void check_batch(const FeatureBatch& batch) {
    if (batch.n < 1 || batch.d < 1) {
        throw std::invalid_argument("contrastive loss: empty batch");
    }
    if (batch.temperature <= 0.0) {
        throw std::invalid_argument("contrastive loss: temperature must be positive");
    }
    if (batch.sentence_features.size() != batch.n * batch.d ||
        batch.object_features.size() != batch.n * batch.d) {
        throw std::invalid_argument("contrastive loss: feature arrays must be n*d");
    }
}

// Row-normalized copies; throws on a zero-norm row.
std::vector<double> unit_rows(const std::vector<double>& rows, std::size_t n, std::size_t d,
                              std::vector<double>* norms_out) {
    std::vector<double> unit(n * d);
    if (norms_out) {
        norms_out->resize(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            sq += rows[i * d + k] * rows[i * d + k];
        }
        const double norm = std::sqrt(sq);
        if (norm == 0.0) {
            throw std::invalid_argument("contrastive loss: zero-norm feature row");
        }
        if (norms_out) {
            (*norms_out)[i] = norm;
        }
        for (std::size_t k = 0; k < d; ++k) {
            unit[i * d + k] = rows[i * d + k] / norm;
        }
    }
    return unit;
}

// K[i*n + j] = cos(O_i, S_j)
std::vector<double> cosine_matrix(const std::vector<double>& unit_o,
                                  const std::vector<double>& unit_s, std::size_t n,
                                  std::size_t d) {
    std::vector<double> k(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                dot += unit_o[i * d + c] * unit_s[j * d + c];
            }
            k[i * n + j] = dot;
        }
    }
    return k;
}

double log_sum_exp(std::span<const double> scaled) {
    const double m = *std::max_element(scaled.begin(), scaled.end());
    double sum = 0.0;
    for (double v : scaled) {
        sum += std::exp(v - m);
    }
    return m + std::log(sum);
}

}  // namespace

ContrastiveLoss contrastive_loss(const FeatureBatch& batch) {
    check_batch(batch);
    const std::size_t n = batch.n, d = batch.d;
    const double inv_tau = 1.0 / batch.temperature;
    const std::vector<double> unit_s = unit_rows(batch.sentence_features, n, d, nullptr);
    const std::vector<double> unit_o = unit_rows(batch.object_features, n, d, nullptr);
    const std::vector<double> k = cosine_matrix(unit_o, unit_s, n, d);

    std::vector<double> row(n), col(n);
    double loss_o_to_s = 0.0;  // softmax over each row of K
    double loss_s_to_o = 0.0;  // softmax over each column of K
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            row[j] = k[i * n + j] * inv_tau;
            col[j] = k[j * n + i] * inv_tau;
        }
        loss_o_to_s += log_sum_exp(row) - k[i * n + i] * inv_tau;
        loss_s_to_o += log_sum_exp(col) - k[i * n + i] * inv_tau;
    }
    ContrastiveLoss out;
    out.object_to_sentence = loss_o_to_s / double(n);
    out.sentence_to_object = loss_s_to_o / double(n);
    out.total = 0.5 * (out.object_to_sentence + out.sentence_to_object);
    return out;
}

ContrastiveGrad contrastive_grad(const FeatureBatch& batch) {
    check_batch(batch);
    const std::size_t n = batch.n, d = batch.d;
    const double inv_tau = 1.0 / batch.temperature;
    std::vector<double> norm_s, norm_o;
    const std::vector<double> unit_s = unit_rows(batch.sentence_features, n, d, &norm_s);
    const std::vector<double> unit_o = unit_rows(batch.object_features, n, d, &norm_o);
    const std::vector<double> k = cosine_matrix(unit_o, unit_s, n, d);

    // dL/dK = (rowsoftmax(K/tau) + colsoftmax(K/tau) - 2I) / (2 n tau)
    std::vector<double> g(n * n, 0.0);
    std::vector<double> scaled(n);
    const double coef = inv_tau / (2.0 * double(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            scaled[j] = k[i * n + j] * inv_tau;
        }
        const double lse = log_sum_exp(scaled);
        for (std::size_t j = 0; j < n; ++j) {
            g[i * n + j] += coef * std::exp(scaled[j] - lse);
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            scaled[i] = k[i * n + j] * inv_tau;
        }
        const double lse = log_sum_exp(scaled);
        for (std::size_t i = 0; i < n; ++i) {
            g[i * n + j] += coef * std::exp(scaled[i] - lse);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        g[i * n + i] -= 2.0 * coef;
    }

    // Backprop K = unit_o * unit_s^T to the unit rows, then through the
    // normalization x_hat = x/|x|: dL/dx = (dL/dx_hat - (x_hat . dL/dx_hat) x_hat)/|x|.
    ContrastiveGrad out;
    out.d_sentence.assign(n * d, 0.0);
    out.d_object.assign(n * d, 0.0);
    std::vector<double> d_unit(d);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(d_unit.begin(), d_unit.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double w = g[i * n + j];
            for (std::size_t c = 0; c < d; ++c) {
                d_unit[c] += w * unit_s[j * d + c];
            }
        }
        double proj = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            proj += d_unit[c] * unit_o[i * d + c];
        }
        for (std::size_t c = 0; c < d; ++c) {
            out.d_object[i * d + c] = (d_unit[c] - proj * unit_o[i * d + c]) / norm_o[i];
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(d_unit.begin(), d_unit.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double w = g[i * n + j];
            for (std::size_t c = 0; c < d; ++c) {
                d_unit[c] += w * unit_o[i * d + c];
            }
        }
        double proj = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            proj += d_unit[c] * unit_s[j * d + c];
        }
        for (std::size_t c = 0; c < d; ++c) {
            out.d_sentence[j * d + c] = (d_unit[c] - proj * unit_s[j * d + c]) / norm_s[j];
        }
    }
    return out;
}

double bce_reference_loss(std::span<const double> logits, const TargetLabels& labels) {
    if (logits.size() != labels.labels.size()) {
        throw std::invalid_argument("bce_reference_loss: logits and labels differ in length");
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double z = logits[i];
        const double y = labels.labels[i] ? 1.0 : 0.0;
        // max(z,0) - z*y + log(1 + exp(-|z|)): the standard stable form.
        loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    return loss;
}

double multiclass_reference_loss(std::span<const double> logits, std::size_t target_index) {
    if (logits.empty()) {
        throw std::invalid_argument("multiclass_reference_loss: no logits");
    }
    if (target_index >= logits.size()) {
        throw std::out_of_range("multiclass_reference_loss: target index out of range");
    }
    return log_sum_exp(logits) - logits[target_index];
}

TargetLabels assign_training_targets(std::span<const Aabb> proposals, std::span<const Aabb> gts,
                                     AssignStrategy strategy, double tau_train) {
    if (tau_train <= 0.0 || tau_train >= 1.0) {
        throw std::invalid_argument("assign_training_targets: tau_train must lie in (0,1)");
    }
    TargetLabels out;
    out.strategy = strategy;
    out.tau_train = tau_train;
    out.labels.assign(proposals.size(), 0);
    if (proposals.empty() || gts.empty()) {
        return out;
    }
    if (strategy == AssignStrategy::All) {
        for (std::size_t i = 0; i < proposals.size(); ++i) {
            double best = 0.0;
            for (const Aabb& gt : gts) {
                best = std::max(best, iou(proposals[i], gt));
            }
            out.labels[i] = best > tau_train ? 1 : 0;
        }
        return out;
    }
    const CostMatrix cost = build_cost_matrix(proposals, gts);
    const Assignment match = hungarian(cost);
    for (const auto& [row, col] : match.pairs) {
        if (row >= proposals.size() || col >= gts.size()) {
            continue;
        }
        if (-cost.at(row, col) > tau_train) {
            out.labels[row] = 1;
        }
    }
    return out;
}

}  // namespace vg3d
