// vg3d - batch evaluation CLI for flexible-count 3D visual grounding.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error, 3 internal error.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vg3d/dataset.hpp"
#include "vg3d/losses.hpp"
#include "vg3d/matching.hpp"
#include "vg3d/metrics.hpp"
#include "vg3d/renderer.hpp"
#include "vg3d/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitInternal = 3;

struct ValidationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Outputs land whole or not at all: write a sibling temp file, then rename.
void write_atomic(const std::string& path, const std::string& content) {
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) {
            throw IoFailure("cannot open for writing: " + tmp.string());
        }
        out << content;
        if (!out) {
            throw IoFailure("write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        throw IoFailure("cannot rename " + tmp.string() + " to " + path);
    }
}

void require_file(const std::string& path, const char* what) {
    if (!fs::exists(path)) {
        throw IoFailure(std::string(what) + " not found: " + path);
    }
}

void print_diagnostics(const std::vector<vg3d::Diagnostic>& diagnostics) {
    for (const vg3d::Diagnostic& d : diagnostics) {
        std::cerr << "error: " << d.to_string() << "\n";
    }
}

struct DatasetInputs {
    std::string scenes;
    std::string descriptions;
    std::string labels;
};

vg3d::LabelVocabulary load_vocab(const std::string& path) {
    require_file(path, "label vocabulary");
    return vg3d::LabelVocabulary::load(path);
}

vg3d::Dataset load_validated(const DatasetInputs& in) {
    require_file(in.scenes, "scenes file");
    require_file(in.descriptions, "descriptions file");
    const vg3d::LabelVocabulary vocab = load_vocab(in.labels);
    vg3d::LoadResult result = vg3d::load_dataset(in.scenes, in.descriptions, vocab);
    if (!result.ok()) {
        print_diagnostics(result.diagnostics);
        throw ValidationFailure("dataset validation failed with " +
                                std::to_string(result.diagnostics.size()) + " diagnostic(s)");
    }
    return std::move(result.dataset);
}

std::vector<vg3d::PredictionRecord> load_validated_predictions(const std::string& path,
                                                               const vg3d::Dataset& dataset) {
    require_file(path, "predictions file");
    vg3d::PredictionLoadResult result = vg3d::load_predictions(path, dataset);
    if (!result.ok()) {
        print_diagnostics(result.diagnostics);
        throw ValidationFailure("prediction validation failed with " +
                                std::to_string(result.diagnostics.size()) + " diagnostic(s)");
    }
    return std::move(result.records);
}

// Join descriptions with predictions into per-description grounding pairs.
// Descriptions without a prediction record get an empty prediction list.
std::vector<vg3d::GroundingPair> build_pairs(const vg3d::Dataset& dataset,
                                             const std::vector<vg3d::PredictionRecord>& predictions) {
    std::map<std::pair<std::string, int>, const vg3d::PredictionRecord*> by_key;
    for (const vg3d::PredictionRecord& rec : predictions) {
        by_key[{rec.scene_id, rec.ann_id}] = &rec;
    }
    std::vector<vg3d::GroundingPair> pairs;
    pairs.reserve(dataset.descriptions.size());
    for (const vg3d::DescriptionRecord& desc : dataset.descriptions) {
        const vg3d::SceneRecord* scene = dataset.find_scene(desc.scene_id);
        vg3d::GroundingPair pair;
        pair.scene_id = desc.scene_id;
        pair.ann_id = desc.ann_id;
        pair.scenario = vg3d::classify_scenario(desc.object_ids, desc.target_class, *scene);
        for (int id : desc.object_ids) {
            pair.gt_boxes.push_back(scene->find_object(id)->aabb);
        }
        const auto it = by_key.find({desc.scene_id, desc.ann_id});
        if (it != by_key.end()) {
            pair.predictions = it->second->boxes;
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

// Parallel per-pair map with a sequential reduce; byte-identical for any
// worker count because pair order is preserved.
std::vector<std::pair<vg3d::Scenario, vg3d::PairResult>> map_pairs(
    const std::vector<vg3d::GroundingPair>& pairs, double tau_eval, const vg3d::EvalConfig& config,
    int workers) {
    std::vector<std::pair<vg3d::Scenario, vg3d::PairResult>> results(pairs.size());
    if (workers <= 1 || pairs.size() < 2) {
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            results[i] = {pairs[i].scenario, vg3d::evaluate_pair(pairs[i], tau_eval, config)};
        }
        return results;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < pairs.size(); i = next.fetch_add(1)) {
            results[i] = {pairs[i].scenario, vg3d::evaluate_pair(pairs[i], tau_eval, config)};
        }
    };
    std::vector<std::thread> threads;
    const int count = std::min<int>(workers, int(pairs.size()));
    threads.reserve(std::size_t(count));
    for (int t = 0; t < count; ++t) {
        threads.emplace_back(worker);
    }
    for (std::thread& t : threads) {
        t.join();
    }
    return results;
}

vg3d::EvalReport run_eval(const std::vector<vg3d::GroundingPair>& pairs,
                          const vg3d::EvalConfig& config, int workers) {
    vg3d::EvalReport report;
    report.config = config;
    for (const vg3d::GroundingPair& pair : pairs) {
        report.counts[pair.scenario] += 1;
    }
    for (double tau : config.iou_thresholds) {
        const auto results = map_pairs(pairs, tau, config, workers);
        report.slices.emplace_back(tau, vg3d::aggregate(results));
    }
    return report;
}

std::vector<double> parse_grid(const std::string& spec) {
    // "start:stop:step" or a comma-separated list.
    std::vector<double> grid;
    if (spec.find(':') != std::string::npos) {
        double start = 0.0, stop = 1.0, step = 0.05;
        if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3 || step <= 0.0) {
            throw ValidationFailure("bad --grid, expected start:stop:step");
        }
        for (int k = 0;; ++k) {
            const double v = start + k * step;
            if (v > stop + 1e-12) {
                break;
            }
            grid.push_back(std::min(v, stop));
        }
    } else {
        std::string token;
        std::istringstream ss(spec);
        while (std::getline(ss, token, ',')) {
            grid.push_back(std::stod(token));
        }
    }
    if (grid.empty()) {
        throw ValidationFailure("empty --grid");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 0.0 || grid[i] > 1.0) {
            throw ValidationFailure("--grid values must lie in [0,1]");
        }
        if (i > 0 && grid[i] < grid[i - 1]) {
            throw ValidationFailure("--grid values must ascend");
        }
    }
    return grid;
}

std::string predictions_to_jsonl(const std::vector<vg3d::PredictionRecord>& records) {
    std::string out;
    for (const vg3d::PredictionRecord& rec : records) {
        json boxes = json::array();
        for (const vg3d::ScoredBox& b : rec.boxes) {
            boxes.push_back({{"aabb",
                              {{"min", {b.aabb.min_corner.x, b.aabb.min_corner.y, b.aabb.min_corner.z}},
                               {"max", {b.aabb.max_corner.x, b.aabb.max_corner.y, b.aabb.max_corner.z}}}},
                             {"score", b.score}});
        }
        out += json{{"scene_id", rec.scene_id}, {"ann_id", rec.ann_id}, {"boxes", boxes}}.dump();
        out += "\n";
    }
    return out;
}

struct CommonEvalOptions {
    DatasetInputs inputs;
    std::string predictions;
    std::string out_path;
    std::vector<double> iou_thresholds{0.25, 0.5};
    double tau_pred = 0.1;
    bool strict_iou = true;
    bool strict_score = true;
    int workers = 1;
};

void add_dataset_flags(CLI::App* cmd, DatasetInputs* inputs) {
    cmd->add_option("--scenes", inputs->scenes, "Scene records (JSONL)")->required();
    cmd->add_option("--descriptions", inputs->descriptions, "Description records (JSONL)")
        ->required();
    cmd->add_option("--labels", inputs->labels, "Label vocabulary (JSON array)")->required();
}

void add_eval_flags(CLI::App* cmd, CommonEvalOptions* opt) {
    add_dataset_flags(cmd, &opt->inputs);
    cmd->add_option("--predictions", opt->predictions, "Prediction records (JSONL)")->required();
    cmd->add_option("--iou", opt->iou_thresholds, "IoU thresholds (tau_eval)")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--tau-pred", opt->tau_pred, "Prediction score threshold (tau_pred)")
        ->capture_default_str();
    cmd->add_flag("--strict-iou,!--no-strict-iou", opt->strict_iou,
                  "Count IoU strictly greater than tau_eval (default on)");
    cmd->add_flag("--strict-score,!--no-strict-score", opt->strict_score,
                  "Keep scores strictly greater than tau_pred (default on)");
    cmd->add_option("--workers", opt->workers, "Worker threads")->capture_default_str();
}

vg3d::EvalConfig to_config(const CommonEvalOptions& opt) {
    vg3d::EvalConfig config;
    config.iou_thresholds = opt.iou_thresholds;
    std::sort(config.iou_thresholds.begin(), config.iou_thresholds.end());
    config.prediction_threshold = opt.tau_pred;
    config.strict_iou = opt.strict_iou;
    config.strict_score = opt.strict_score;
    for (double tau : config.iou_thresholds) {
        if (tau <= 0.0 || tau > 1.0) {
            throw ValidationFailure("--iou values must lie in (0,1]");
        }
    }
    if (config.prediction_threshold < 0.0 || config.prediction_threshold > 1.0) {
        throw ValidationFailure("--tau-pred must lie in [0,1]");
    }
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Flexible-count 3D visual grounding benchmark toolkit"};
    app.set_version_flag("--version", std::string("vg3d ") + vg3d::kVersion);
    app.require_subcommand(1);

    // ---- eval ----
    CommonEvalOptions eval_opt;
    CLI::App* cmd_eval = app.add_subcommand("eval", "Hungarian-matched F1 with scenario breakdown");
    add_eval_flags(cmd_eval, &eval_opt);
    cmd_eval->add_option("--out", eval_opt.out_path, "Report path (JSON)")->required();

    // ---- sweep ----
    CommonEvalOptions sweep_opt;
    std::string sweep_grid = "0:1:0.05";
    double sweep_tau_eval = 0.5;
    std::string sweep_csv;
    CLI::App* cmd_sweep = app.add_subcommand("sweep", "F1 across a tau_pred grid");
    add_eval_flags(cmd_sweep, &sweep_opt);
    cmd_sweep->add_option("--grid", sweep_grid, "tau_pred grid, start:stop:step or list")
        ->capture_default_str();
    cmd_sweep->add_option("--tau-eval", sweep_tau_eval, "IoU threshold for the sweep")
        ->capture_default_str();
    cmd_sweep->add_option("--out", sweep_opt.out_path, "Curve output path (JSON)")->required();
    cmd_sweep->add_option("--csv", sweep_csv, "Optional plot-ready CSV path");

    // ---- stats ----
    DatasetInputs stats_inputs;
    std::string stats_out;
    CLI::App* cmd_stats = app.add_subcommand("stats", "Dataset statistics by split and scenario");
    add_dataset_flags(cmd_stats, &stats_inputs);
    cmd_stats->add_option("--out", stats_out, "Stats output path (JSON); stdout when omitted");

    // ---- validate ----
    DatasetInputs validate_inputs;
    std::string validate_predictions;
    CLI::App* cmd_validate = app.add_subcommand("validate", "Check dataset files and exit");
    add_dataset_flags(cmd_validate, &validate_inputs);
    cmd_validate->add_option("--predictions", validate_predictions,
                             "Optional prediction records to cross-check");

    // ---- baseline ----
    DatasetInputs baseline_inputs;
    std::string baseline_out;
    std::string baseline_lexicon;
    CLI::App* cmd_baseline =
        app.add_subcommand("baseline", "Lexical class-mention grounder (writes predictions)");
    add_dataset_flags(cmd_baseline, &baseline_inputs);
    cmd_baseline->add_option("--lexicon", baseline_lexicon,
                             "Class synonym table (JSON); identity when omitted");
    cmd_baseline->add_option("--out", baseline_out, "Predictions output path (JSONL)")->required();

    // ---- render ----
    std::string render_ply, render_predictions, render_scene_id, render_out_dir;
    vg3d::RenderConfig render_config;
    CLI::App* cmd_render = app.add_subcommand("render", "Multi-view images of box-cropped points");
    cmd_render->add_option("--ply", render_ply, "Scene point cloud (PLY)")->required();
    cmd_render->add_option("--predictions", render_predictions, "Boxes to render (JSONL)")
        ->required();
    cmd_render->add_option("--scene-id", render_scene_id,
                           "Only render records of this scene (default: all)");
    cmd_render->add_option("--out", render_out_dir, "Output directory")->required();
    cmd_render->add_option("--views", render_config.n_views, "Views per box")->capture_default_str();
    cmd_render->add_option("--elevation", render_config.elevation_deg, "Camera elevation (deg)")
        ->capture_default_str();
    cmd_render->add_option("--distance", render_config.distance_m, "Camera distance (m)")
        ->capture_default_str();
    cmd_render->add_option("--radius", render_config.point_radius_m, "Point radius (m)")
        ->capture_default_str();
    cmd_render->add_option("--size", render_config.size_px, "Image size (px)")
        ->capture_default_str();

    // ---- assign ----
    DatasetInputs assign_inputs;
    std::string assign_predictions, assign_out, assign_strategy = "hungarian";
    double assign_tau_train = 0.5;
    CLI::App* cmd_assign =
        app.add_subcommand("assign", "Training-target labels for proposals (all|hungarian)");
    add_dataset_flags(cmd_assign, &assign_inputs);
    cmd_assign->add_option("--predictions", assign_predictions, "Proposal records (JSONL)")
        ->required();
    cmd_assign->add_option("--strategy", assign_strategy, "all or hungarian")
        ->check(CLI::IsMember({"all", "hungarian"}))
        ->capture_default_str();
    cmd_assign->add_option("--tau-train", assign_tau_train, "IoU threshold for positives")
        ->capture_default_str();
    cmd_assign->add_option("--out", assign_out, "Labels output path (JSONL)")->required();

    // ---- losses selftest ----
    CLI::App* cmd_losses = app.add_subcommand("losses", "Loss utilities");
    cmd_losses->require_subcommand(1);
    unsigned losses_seed = 7;
    CLI::App* cmd_selftest =
        cmd_losses->add_subcommand("selftest", "Gradient check against finite differences");
    cmd_selftest->add_option("--seed", losses_seed, "Random seed")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_eval) {
            const vg3d::Dataset dataset = load_validated(eval_opt.inputs);
            const auto predictions = load_validated_predictions(eval_opt.predictions, dataset);
            const auto pairs = build_pairs(dataset, predictions);
            if (pairs.empty()) {
                throw ValidationFailure("no description records to evaluate");
            }
            const vg3d::EvalReport report =
                run_eval(pairs, to_config(eval_opt), eval_opt.workers);
            write_atomic(eval_opt.out_path, vg3d::report_to_json(report));
        } else if (*cmd_sweep) {
            const vg3d::Dataset dataset = load_validated(sweep_opt.inputs);
            const auto predictions = load_validated_predictions(sweep_opt.predictions, dataset);
            const auto pairs = build_pairs(dataset, predictions);
            if (pairs.empty()) {
                throw ValidationFailure("no description records to evaluate");
            }
            const std::vector<double> grid = parse_grid(sweep_grid);
            const vg3d::EvalConfig base = to_config(sweep_opt);
            // Same rows as threshold_sweep, with the per-pair map fanned out
            // across workers; the reduce stays sequential.
            vg3d::SweepTable table;
            table.tau_eval = sweep_tau_eval;
            for (double tau_pred : grid) {
                vg3d::EvalConfig point = base;
                point.prediction_threshold = tau_pred;
                const auto results = map_pairs(pairs, sweep_tau_eval, point, sweep_opt.workers);
                table.rows.push_back({tau_pred, vg3d::aggregate(results)});
            }
            write_atomic(sweep_opt.out_path, vg3d::sweep_to_json(table));
            if (!sweep_csv.empty()) {
                write_atomic(sweep_csv, vg3d::sweep_to_csv(table));
            }
        } else if (*cmd_stats) {
            const vg3d::Dataset dataset = load_validated(stats_inputs);
            const std::string out = vg3d::stats_to_json(vg3d::compute_stats(dataset));
            if (stats_out.empty()) {
                std::cout << out;
            } else {
                write_atomic(stats_out, out);
            }
        } else if (*cmd_validate) {
            const vg3d::Dataset dataset = load_validated(validate_inputs);
            if (!validate_predictions.empty()) {
                load_validated_predictions(validate_predictions, dataset);
            }
            std::cout << "ok: " << dataset.scenes.size() << " scene(s), "
                      << dataset.descriptions.size() << " description(s)\n";
        } else if (*cmd_baseline) {
            const vg3d::Dataset dataset = load_validated(baseline_inputs);
            const vg3d::LabelVocabulary vocab = load_vocab(baseline_inputs.labels);
            vg3d::Lexicon lexicon;
            if (baseline_lexicon.empty()) {
                lexicon = vg3d::Lexicon::identity(vocab);
            } else {
                require_file(baseline_lexicon, "lexicon");
                lexicon = vg3d::Lexicon::load(baseline_lexicon);
            }
            std::vector<vg3d::PredictionRecord> records;
            records.reserve(dataset.descriptions.size());
            for (const vg3d::DescriptionRecord& desc : dataset.descriptions) {
                records.push_back(
                    vg3d::lexical_baseline(desc, *dataset.find_scene(desc.scene_id), lexicon));
            }
            write_atomic(baseline_out, predictions_to_jsonl(records));
        } else if (*cmd_render) {
            require_file(render_ply, "PLY file");
            require_file(render_predictions, "predictions file");
            const vg3d::PointCloud cloud = vg3d::load_ply(render_ply);
            // Rendering takes boxes as-is; there is no description cross-check.
            std::vector<vg3d::PredictionRecord> records;
            {
                std::ifstream in(render_predictions);
                std::string line;
                std::size_t line_no = 0;
                while (std::getline(in, line)) {
                    ++line_no;
                    if (line.find_first_not_of(" \t\r") == std::string::npos) {
                        continue;
                    }
                    json j = json::parse(line, nullptr, false);
                    if (j.is_discarded() || !j.is_object()) {
                        throw ValidationFailure("bad prediction record at line " +
                                                std::to_string(line_no));
                    }
                    vg3d::PredictionRecord rec;
                    try {
                        rec.scene_id = j.value("scene_id", std::string());
                        rec.ann_id = j.value("ann_id", 0);
                        for (const auto& jb : j.value("boxes", json::array())) {
                            vg3d::ScoredBox box;
                            const auto& lo = jb.at("aabb").at("min");
                            const auto& hi = jb.at("aabb").at("max");
                            box.aabb.min_corner = {lo.at(0), lo.at(1), lo.at(2)};
                            box.aabb.max_corner = {hi.at(0), hi.at(1), hi.at(2)};
                            box.score = jb.value("score", 1.0);
                            rec.boxes.push_back(box);
                        }
                    } catch (const json::exception&) {
                        throw ValidationFailure("bad prediction record at line " +
                                                std::to_string(line_no));
                    }
                    if (render_scene_id.empty() || rec.scene_id == render_scene_id) {
                        records.push_back(std::move(rec));
                    }
                }
            }
            // Validate every box before the first file is written so a bad
            // record cannot leave partial output behind.
            for (const vg3d::PredictionRecord& rec : records) {
                for (const vg3d::ScoredBox& box : rec.boxes) {
                    if (!box.aabb.valid() || box.aabb.extent().norm() == 0.0) {
                        throw ValidationFailure("degenerate box in record " + rec.scene_id + "/" +
                                                std::to_string(rec.ann_id));
                    }
                }
            }
            std::error_code ec;
            fs::create_directories(render_out_dir, ec);
            std::size_t images = 0;
            for (const vg3d::PredictionRecord& rec : records) {
                for (std::size_t b = 0; b < rec.boxes.size(); ++b) {
                    const auto views =
                        vg3d::render_proposal(cloud, rec.boxes[b].aabb, render_config);
                    for (std::size_t k = 0; k < views.size(); ++k) {
                        std::string name = rec.scene_id + "_" + std::to_string(rec.ann_id);
                        if (rec.boxes.size() > 1) {
                            name += "_box" + std::to_string(b);
                        }
                        name += "_view" + std::to_string(k) + ".ppm";
                        vg3d::write_image(views[k], (fs::path(render_out_dir) / name).string());
                        ++images;
                    }
                }
            }
            std::cout << "wrote " << images << " image(s) to " << render_out_dir << "\n";
        } else if (*cmd_assign) {
            const vg3d::Dataset dataset = load_validated(assign_inputs);
            const auto predictions = load_validated_predictions(assign_predictions, dataset);
            const vg3d::AssignStrategy strategy = assign_strategy == "all"
                                                      ? vg3d::AssignStrategy::All
                                                      : vg3d::AssignStrategy::Hungarian;
            std::string out;
            for (const vg3d::PredictionRecord& rec : predictions) {
                const vg3d::SceneRecord* scene = dataset.find_scene(rec.scene_id);
                std::vector<vg3d::Aabb> proposals;
                for (const vg3d::ScoredBox& b : rec.boxes) {
                    proposals.push_back(b.aabb);
                }
                std::vector<vg3d::Aabb> gts;
                for (const vg3d::DescriptionRecord& desc : dataset.descriptions) {
                    if (desc.scene_id == rec.scene_id && desc.ann_id == rec.ann_id) {
                        for (int id : desc.object_ids) {
                            gts.push_back(scene->find_object(id)->aabb);
                        }
                        break;
                    }
                }
                const vg3d::TargetLabels labels =
                    vg3d::assign_training_targets(proposals, gts, strategy, assign_tau_train);
                out += json{{"scene_id", rec.scene_id},
                            {"ann_id", rec.ann_id},
                            {"strategy", assign_strategy},
                            {"tau_train", assign_tau_train},
                            {"labels", labels.labels}}
                           .dump();
                out += "\n";
            }
            write_atomic(assign_out, out);
        } else if (*cmd_selftest) {
            // Analytic contrastive gradients against central finite differences.
            // Rows are redrawn while tiny; the difference quotient needs the
            // step to stay small against the row scale.
            std::mt19937 rng(losses_seed);
            std::uniform_real_distribution<double> unif(-1.0, 1.0);
            auto fill_rows = [&](std::vector<double>& rows, std::size_t n, std::size_t d) {
                rows.resize(n * d);
                for (std::size_t i = 0; i < n; ++i) {
                    double norm_sq = 0.0;
                    do {
                        norm_sq = 0.0;
                        for (std::size_t c = 0; c < d; ++c) {
                            rows[i * d + c] = unif(rng);
                            norm_sq += rows[i * d + c] * rows[i * d + c];
                        }
                    } while (norm_sq < 0.04);
                }
            };
            double worst = 0.0;
            const double temperatures[] = {0.05, 0.5, 1.0};
            for (int trial = 0; trial < 100; ++trial) {
                vg3d::FeatureBatch batch;
                batch.n = 2 + rng() % 7;
                batch.d = 2 + rng() % 15;
                batch.temperature = temperatures[trial % 3];
                fill_rows(batch.sentence_features, batch.n, batch.d);
                fill_rows(batch.object_features, batch.n, batch.d);
                const vg3d::ContrastiveGrad grad = vg3d::contrastive_grad(batch);
                const double h = 1e-5;
                double max_abs = 0.0, max_err = 0.0;
                auto probe = [&](std::vector<double>& field, const std::vector<double>& analytic) {
                    for (std::size_t i = 0; i < field.size(); ++i) {
                        const double saved = field[i];
                        field[i] = saved + h;
                        const double up = vg3d::contrastive_loss(batch).total;
                        field[i] = saved - h;
                        const double down = vg3d::contrastive_loss(batch).total;
                        field[i] = saved;
                        const double fd = (up - down) / (2.0 * h);
                        max_abs = std::max(max_abs, std::abs(fd));
                        max_err = std::max(max_err, std::abs(fd - analytic[i]));
                    }
                };
                probe(batch.sentence_features, grad.d_sentence);
                probe(batch.object_features, grad.d_object);
                worst = std::max(worst, max_err / std::max(max_abs, 1e-12));
            }
            std::cout << "gradient selftest: max relative error " << worst << "\n";
            if (!(worst < 1e-4)) {
                std::cerr << "selftest failed: relative error " << worst << " >= 1e-4\n";
                return kExitInternal;
            }
        }
    } catch (const ValidationFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const IoFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitOk;
}
