#include "vg3d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "vg3d/matching.hpp"
#include "vg3d/version.hpp"

namespace vg3d {

namespace {

// Compensated summation keeps scenario means identical no matter how callers
// parallelize the per-pair map; the reduction itself is always sequential.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

std::string format_threshold(double tau) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", tau);
    return buf;
}

bool passes_iou(double value, double tau, const EvalConfig& config) {
    return config.strict_iou ? value > tau : value >= tau;
}

}  // namespace

Scenario classify_scenario(std::span<const int> target_ids, const std::string& target_class,
                           const SceneRecord& scene) {
    for (int id : target_ids) {
        if (scene.find_object(id) == nullptr) {
            throw std::invalid_argument("classify_scenario: target object " + std::to_string(id) +
                                        " absent from scene " + scene.scene_id);
        }
    }
    if (target_ids.size() >= 2) {
        return Scenario::Mt;
    }
    if (target_ids.empty()) {
        for (const SceneObject& obj : scene.objects) {
            if (obj.label == target_class) {
                return Scenario::ZtWithDistractor;
            }
        }
        return Scenario::ZtWithoutDistractor;
    }
    const int target = target_ids[0];
    const SceneObject* target_obj = scene.find_object(target);
    for (const SceneObject& obj : scene.objects) {
        if (obj.object_id != target && obj.label == target_obj->label) {
            return Scenario::StWithDistractor;
        }
    }
    return Scenario::StWithoutDistractor;
}

std::vector<Aabb> filter_predictions(std::span<const ScoredBox> predictions,
                                     const EvalConfig& config) {
    std::vector<Aabb> kept;
    for (const ScoredBox& p : predictions) {
        const bool keep = config.strict_score ? p.score > config.prediction_threshold
                                              : p.score >= config.prediction_threshold;
        if (keep) {
            kept.push_back(p.aabb);
        }
    }
    return kept;
}

PairResult evaluate_boxes(std::span<const Aabb> pred_boxes, std::span<const Aabb> gt_boxes,
                          double tau_eval, const EvalConfig& config) {
    PairResult r;
    r.n_pred = pred_boxes.size();
    r.n_gt = gt_boxes.size();
    if (r.n_gt == 0) {
        // Zero-target rule: recall fixed to 1, precision 1 iff nothing was
        // predicted, so f1 is exactly 0 or 1.
        r.f1 = r.n_pred == 0 ? 1.0 : 0.0;
        return r;
    }
    if (r.n_pred == 0) {
        r.f1 = 0.0;
        return r;
    }
    const CostMatrix cost = build_cost_matrix(pred_boxes, gt_boxes);
    const Assignment match = hungarian(cost);
    for (const auto& [row, col] : match.pairs) {
        if (row >= r.n_pred || col >= r.n_gt) {
            continue;  // padding
        }
        if (passes_iou(-cost.at(row, col), tau_eval, config)) {
            ++r.tp;
        }
    }
    r.f1 = 2.0 * double(r.tp) / double(r.n_pred + r.n_gt);
    return r;
}

PairResult evaluate_pair(const GroundingPair& pair, double tau_eval, const EvalConfig& config) {
    const std::vector<Aabb> boxes = filter_predictions(pair.predictions, config);
    return evaluate_boxes(boxes, pair.gt_boxes, tau_eval, config);
}

EvalSlice aggregate(std::span<const std::pair<Scenario, PairResult>> results) {
    if (results.empty()) {
        throw std::invalid_argument("aggregate: no pair results");
    }
    std::map<Scenario, KahanSum> sums;
    std::map<Scenario, std::size_t> counts;
    KahanSum all;
    for (const auto& [scenario, result] : results) {
        sums[scenario].add(result.f1);
        counts[scenario] += 1;
        all.add(result.f1);
    }
    EvalSlice slice;
    for (const auto& [scenario, sum] : sums) {
        slice.scenarios[scenario] = {sum.sum / double(counts[scenario]), counts[scenario]};
    }
    slice.total_pairs = results.size();
    slice.all_f1 = all.sum / double(results.size());
    return slice;
}

EvalReport evaluate(std::span<const GroundingPair> pairs, const EvalConfig& config) {
    EvalReport report;
    report.config = config;
    for (const GroundingPair& pair : pairs) {
        report.counts[pair.scenario] += 1;
    }

    std::vector<std::vector<Aabb>> filtered;
    filtered.reserve(pairs.size());
    for (const GroundingPair& pair : pairs) {
        filtered.push_back(filter_predictions(pair.predictions, config));
    }
    for (double tau : config.iou_thresholds) {
        std::vector<std::pair<Scenario, PairResult>> results;
        results.reserve(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            results.emplace_back(pairs[i].scenario,
                                 evaluate_boxes(filtered[i], pairs[i].gt_boxes, tau, config));
        }
        report.slices.emplace_back(tau, aggregate(results));
    }
    return report;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["config"] = {
        {"version", kVersion},
        {"iou_thresholds", report.config.iou_thresholds},
        {"prediction_threshold", report.config.prediction_threshold},
        {"strict_iou", report.config.strict_iou},
        {"strict_score", report.config.strict_score},
        // Scenarios with zero pairs are omitted from "f1" and "counts" and do
        // not enter the micro-averaged "all".
        {"empty_scenarios", "excluded"},
    };
    nlohmann::ordered_json f1 = nlohmann::ordered_json::object();
    for (const auto& [tau, slice] : report.slices) {
        nlohmann::ordered_json entry = nlohmann::ordered_json::object();
        for (Scenario s : kAllScenarios) {
            const auto it = slice.scenarios.find(s);
            if (it != slice.scenarios.end()) {
                entry[std::string(scenario_key(s))] = it->second.f1;
            }
        }
        entry["all"] = slice.all_f1;
        f1[format_threshold(tau)] = std::move(entry);
    }
    j["f1"] = std::move(f1);
    nlohmann::ordered_json counts = nlohmann::ordered_json::object();
    for (Scenario s : kAllScenarios) {
        const auto it = report.counts.find(s);
        if (it != report.counts.end() && it->second > 0) {
            counts[std::string(scenario_key(s))] = it->second;
        }
    }
    j["counts"] = std::move(counts);
    return j.dump(2) + "\n";
}

double accuracy_single_target(std::span<const GroundingPair> pairs, double tau) {
    if (pairs.empty()) {
        throw std::invalid_argument("accuracy_single_target: no pairs");
    }
    std::size_t hits = 0;
    for (const GroundingPair& pair : pairs) {
        if (pair.gt_boxes.size() != 1) {
            throw std::invalid_argument("accuracy_single_target: pair " + pair.scene_id + "/" +
                                        std::to_string(pair.ann_id) + " has " +
                                        std::to_string(pair.gt_boxes.size()) + " GT boxes");
        }
        if (pair.predictions.empty()) {
            continue;  // no candidate, counts as a miss
        }
        const ScoredBox* top = &pair.predictions[0];
        for (const ScoredBox& p : pair.predictions) {
            if (p.score > top->score) {
                top = &p;
            }
        }
        if (iou(top->aabb, pair.gt_boxes[0]) >= tau) {
            ++hits;
        }
    }
    return double(hits) / double(pairs.size());
}

SweepTable threshold_sweep(std::span<const GroundingPair> pairs,
                           std::span<const double> tau_pred_grid, double tau_eval,
                           const EvalConfig& config) {
    for (std::size_t i = 0; i < tau_pred_grid.size(); ++i) {
        if (tau_pred_grid[i] < 0.0 || tau_pred_grid[i] > 1.0) {
            throw std::invalid_argument("threshold_sweep: grid value outside [0,1]");
        }
        if (i > 0 && tau_pred_grid[i] < tau_pred_grid[i - 1]) {
            throw std::invalid_argument("threshold_sweep: grid not ascending");
        }
    }
    SweepTable table;
    table.tau_eval = tau_eval;
    for (double tau_pred : tau_pred_grid) {
        EvalConfig point = config;
        point.prediction_threshold = tau_pred;
        std::vector<std::pair<Scenario, PairResult>> results;
        results.reserve(pairs.size());
        for (const GroundingPair& pair : pairs) {
            results.emplace_back(pair.scenario, evaluate_pair(pair, tau_eval, point));
        }
        table.rows.push_back({tau_pred, aggregate(results)});
    }
    return table;
}

std::string sweep_to_csv(const SweepTable& table) {
    std::string out = "tau_pred,zt_wo_d,zt_w_d,st_wo_d,st_w_d,mt,all\n";
    for (const SweepRow& row : table.rows) {
        out += nlohmann::json(row.tau_pred).dump();
        for (Scenario s : kAllScenarios) {
            out += ",";
            const auto it = row.slice.scenarios.find(s);
            if (it != row.slice.scenarios.end()) {
                out += nlohmann::json(it->second.f1).dump();
            }
        }
        out += "," + nlohmann::json(row.slice.all_f1).dump() + "\n";
    }
    return out;
}

std::string sweep_to_json(const SweepTable& table) {
    nlohmann::ordered_json j;
    j["tau_eval"] = table.tau_eval;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const SweepRow& row : table.rows) {
        nlohmann::ordered_json entry;
        entry["tau_pred"] = row.tau_pred;
        for (Scenario s : kAllScenarios) {
            const auto it = row.slice.scenarios.find(s);
            if (it != row.slice.scenarios.end()) {
                entry[std::string(scenario_key(s))] = it->second.f1;
            }
        }
        entry["all"] = row.slice.all_f1;
        rows.push_back(std::move(entry));
    }
    j["rows"] = std::move(rows);
    return j.dump(2) + "\n";
}

std::map<std::string, AttributeScore> attribute_breakdown(
    std::span<const std::pair<GroundingPair, AttributeFlags>> pairs, double tau_eval,
    const EvalConfig& config) {
    std::map<std::string, KahanSum> sums;
    std::map<std::string, std::size_t> counts;
    for (const auto& [pair, flags] : pairs) {
        if (flags.count_set() != 1) {
            continue;  // mixed or unlabeled descriptions are discarded
        }
        const char* key = flags.spatial ? "spatial"
                          : flags.color ? "color"
                          : flags.texture ? "texture"
                                          : "shape";
        sums[key].add(evaluate_pair(pair, tau_eval, config).f1);
        counts[key] += 1;
    }
    std::map<std::string, AttributeScore> out;
    for (const auto& [key, sum] : sums) {
        out[key] = {sum.sum / double(counts[key]), counts[key]};
    }
    return out;
}

}  // namespace vg3d
