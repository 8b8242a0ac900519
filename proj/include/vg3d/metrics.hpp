#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vg3d/dataset.hpp"
#include "vg3d/geometry.hpp"
#include "vg3d/scenario.hpp"

namespace vg3d {

struct EvalConfig {
    std::vector<double> iou_thresholds{0.25, 0.5};  // ascending, each in (0,1]
    double prediction_threshold = 0.1;              // tau_pred
    bool strict_iou = true;    // true: IoU > tau counts; false: IoU >= tau
    bool strict_score = true;  // true: score > tau_pred kept; false: >=
};

struct GroundingPair {
    std::string scene_id;
    int ann_id = 0;
    Scenario scenario = Scenario::Mt;
    std::vector<Aabb> gt_boxes;
    std::vector<ScoredBox> predictions;
};

struct PairResult {
    std::size_t tp = 0;
    std::size_t n_pred = 0;
    std::size_t n_gt = 0;
    double f1 = 0.0;
};

// ZT / ST / MT by target count; the distractor split compares semantic
// classes of scene objects against the description's target class.
// Throws std::invalid_argument when a target id is absent from the scene.
Scenario classify_scenario(std::span<const int> target_ids, const std::string& target_class,
                           const SceneRecord& scene);

// Boxes whose score passes tau_pred (strict > by default).
std::vector<Aabb> filter_predictions(std::span<const ScoredBox> predictions,
                                     const EvalConfig& config);

// Hungarian-matched TP counting over already-filtered boxes. n_gt = 0 applies
// the zero-target rule: f1 = 1 iff no prediction survived filtering.
PairResult evaluate_boxes(std::span<const Aabb> pred_boxes, std::span<const Aabb> gt_boxes,
                          double tau_eval, const EvalConfig& config);

// filter_predictions + evaluate_boxes.
PairResult evaluate_pair(const GroundingPair& pair, double tau_eval, const EvalConfig& config);

struct ScenarioScore {
    double f1 = 0.0;
    std::size_t pairs = 0;
};

// One aggregated slice at a fixed tau_eval. Scenarios with zero pairs are
// absent from the map and excluded from "all".
struct EvalSlice {
    std::map<Scenario, ScenarioScore> scenarios;
    double all_f1 = 0.0;
    std::size_t total_pairs = 0;
};

// Scenario score = mean of per-pair f1 inside the scenario; "all" = mean over
// every pair (the pair-count-weighted mean of the scenario scores).
// Throws std::invalid_argument on an empty input.
EvalSlice aggregate(std::span<const std::pair<Scenario, PairResult>> results);

struct EvalReport {
    EvalConfig config;
    std::vector<std::pair<double, EvalSlice>> slices;  // one per tau_eval, ascending
    std::map<Scenario, std::size_t> counts;
};

EvalReport evaluate(std::span<const GroundingPair> pairs, const EvalConfig& config);

// Fixed JSON schema:
// {"config": {...}, "f1": {"0.25": {"zt_wo_d": x, ..., "all": x}, ...},
//  "counts": {"zt_wo_d": n, ...}}
std::string report_to_json(const EvalReport& report);

// Legacy single-target Acc@tau: fraction of pairs whose top-scoring
// prediction reaches IoU >= tau (inclusive). Throws unless every pair has
// exactly one GT box.
double accuracy_single_target(std::span<const GroundingPair> pairs, double tau);

struct SweepRow {
    double tau_pred = 0.0;
    EvalSlice slice;
};

struct SweepTable {
    double tau_eval = 0.0;
    std::vector<SweepRow> rows;
};

// One full aggregate per grid value; grid values in [0,1], ascending.
SweepTable threshold_sweep(std::span<const GroundingPair> pairs, std::span<const double> tau_pred_grid,
                           double tau_eval, const EvalConfig& config);

// Columns: tau_pred, zt_wo_d, zt_w_d, st_wo_d, st_w_d, mt, all. Absent
// scenarios leave an empty cell.
std::string sweep_to_csv(const SweepTable& table);
std::string sweep_to_json(const SweepTable& table);

struct AttributeScore {
    double f1 = 0.0;
    std::size_t pairs = 0;
};

// Keeps only descriptions flagged with exactly one attribute, then reports the
// mean per-pair f1 per attribute. Keys: spatial, color, texture, shape.
std::map<std::string, AttributeScore> attribute_breakdown(
    std::span<const std::pair<GroundingPair, AttributeFlags>> pairs, double tau_eval,
    const EvalConfig& config);

}  // namespace vg3d
