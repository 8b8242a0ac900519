#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vg3d/geometry.hpp"

namespace vg3d {

// Sentence features S and mean target-object features O paired row-by-row,
// with the softmax temperature. Rows must have nonzero norm (cosine
// similarity is undefined otherwise).
struct FeatureBatch {
    std::size_t n = 0;  // batch size
    std::size_t d = 0;  // feature dimension
    std::vector<double> sentence_features;  // n*d row-major
    std::vector<double> object_features;    // n*d row-major
    double temperature = 0.07;
};

struct ContrastiveLoss {
    double total = 0.0;
    double object_to_sentence = 0.0;
    double sentence_to_object = 0.0;
};

// Symmetric contrastive loss over cosine similarities: each direction is the
// mean over rows of -log softmax(cos / tau) with the diagonal as the positive;
// total is the mean of the two directions. Log-sum-exp stabilized.
ContrastiveLoss contrastive_loss(const FeatureBatch& batch);

struct ContrastiveGrad {
    std::vector<double> d_sentence;  // n*d
    std::vector<double> d_object;    // n*d
};

// Analytic gradient of contrastive_loss().total through the cosine
// normalization and both softmax directions.
ContrastiveGrad contrastive_grad(const FeatureBatch& batch);

enum class AssignStrategy { All, Hungarian };

struct TargetLabels {
    std::vector<int> labels;  // one per proposal, 1 = positive
    AssignStrategy strategy = AssignStrategy::Hungarian;
    double tau_train = 0.5;
};

// Sum of per-proposal binary cross-entropies between sigmoid(logit) and the
// label (a sum, not a mean). Throws on length mismatch.
double bce_reference_loss(std::span<const double> logits, const TargetLabels& labels);

// -log softmax(logits)[target_index]; the single-target reference loss.
double multiclass_reference_loss(std::span<const double> logits, std::size_t target_index);

// Training-target assignment. All: positive iff max-over-GT IoU > tau_train.
// Hungarian: positive iff matched to a GT with IoU > tau_train, so each GT
// admits at most one positive.
TargetLabels assign_training_targets(std::span<const Aabb> proposals, std::span<const Aabb> gts,
                                     AssignStrategy strategy, double tau_train);

}  // namespace vg3d
