#include "vg3d/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "vg3d/metrics.hpp"

namespace vg3d {

using nlohmann::json;

const SceneObject* SceneRecord::find_object(int object_id) const {
    for (const SceneObject& obj : objects) {
        if (obj.object_id == object_id) {
            return &obj;
        }
    }
    return nullptr;
}

std::string Diagnostic::to_string() const {
    std::string out = scene_id;
    if (ann_id >= 0) {
        out += "/" + std::to_string(ann_id);
    }
    return out + " [" + field + "]: " + message;
}

std::string_view split_key(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "unknown";
}

std::optional<Split> parse_split(std::string_view s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    return std::nullopt;
}

bool LabelVocabulary::contains(const std::string& label) const {
    return std::find(labels.begin(), labels.end(), label) != labels.end();
}

LabelVocabulary LabelVocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open label vocabulary: " + path);
    }
    json j = json::parse(in);
    LabelVocabulary vocab;
    if (!j.is_array()) {
        throw std::runtime_error("label vocabulary must be a JSON array of strings: " + path);
    }
    for (const auto& item : j) {
        vocab.labels.push_back(item.get<std::string>());
    }
    return vocab;
}

Lexicon Lexicon::identity(const LabelVocabulary& vocab) {
    Lexicon lex;
    for (const std::string& label : vocab.labels) {
        lex.synonyms[label] = {};
    }
    return lex;
}

Lexicon Lexicon::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open lexicon: " + path);
    }
    json j = json::parse(in);
    Lexicon lex;
    for (const auto& [key, value] : j.items()) {
        std::vector<std::string> syns;
        for (const auto& s : value) {
            syns.push_back(s.get<std::string>());
        }
        lex.synonyms[key] = std::move(syns);
    }
    return lex;
}

const SceneRecord* Dataset::find_scene(const std::string& scene_id) const {
    const auto it = scene_index.find(scene_id);
    return it == scene_index.end() ? nullptr : &scenes[it->second];
}

namespace {

// Tolerant accessors: wrong-typed fields fall back instead of throwing, so a
// bad record becomes a diagnostic rather than aborting the whole load.
std::string get_string(const json& j, const char* key, const std::string& fallback = {}) {
    const auto it = j.find(key);
    return it != j.end() && it->is_string() ? it->get<std::string>() : fallback;
}

bool get_bool(const json& j, const char* key, bool fallback) {
    const auto it = j.find(key);
    return it != j.end() && it->is_boolean() ? it->get<bool>() : fallback;
}

json get_array(const json& j, const char* key) {
    const auto it = j.find(key);
    return it != j.end() && it->is_array() ? *it : json::array();
}

// Members named by the file schema; coordinates are meters.
bool parse_aabb(const json& j, Aabb* out, std::string* error) {
    if (!j.is_object() || !j.contains("min") || !j.contains("max")) {
        *error = "aabb must hold min and max arrays";
        return false;
    }
    const auto& lo = j["min"];
    const auto& hi = j["max"];
    if (!lo.is_array() || lo.size() != 3 || !hi.is_array() || hi.size() != 3) {
        *error = "aabb min/max must be 3-element arrays";
        return false;
    }
    for (int k = 0; k < 3; ++k) {
        if (!lo[k].is_number() || !hi[k].is_number()) {
            *error = "aabb coordinates must be numbers";
            return false;
        }
    }
    out->min_corner = {lo[0].get<double>(), lo[1].get<double>(), lo[2].get<double>()};
    out->max_corner = {hi[0].get<double>(), hi[1].get<double>(), hi[2].get<double>()};
    if (!out->valid()) {
        *error = "aabb has min > max on some axis";
        return false;
    }
    return true;
}

template <typename Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;  // blank line
        }
        fn(line, line_no);
    }
}

}  // namespace

LoadResult load_dataset(const std::string& scenes_path, const std::string& descriptions_path,
                        const LabelVocabulary& vocab) {
    LoadResult result;
    Dataset& ds = result.dataset;
    auto diag = [&result](std::string scene_id, int ann_id, std::string field, std::string msg) {
        result.diagnostics.push_back({std::move(scene_id), ann_id, std::move(field), std::move(msg)});
    };

    for_each_jsonl(scenes_path, [&](const std::string& line, std::size_t line_no) {
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            diag("scenes:" + std::to_string(line_no), -1, "json", "unparseable scene record");
            return;
        }
        if (!j.contains("scene_id") || !j["scene_id"].is_string()) {
            diag("scenes:" + std::to_string(line_no), -1, "scene_id", "missing or non-string scene_id");
            return;
        }
        SceneRecord scene;
        scene.scene_id = j["scene_id"].get<std::string>();
        if (ds.scene_index.count(scene.scene_id)) {
            diag(scene.scene_id, -1, "scene_id", "duplicate scene record");
            return;
        }
        std::set<int> seen_ids;
        for (const auto& jo : get_array(j, "objects")) {
            SceneObject obj;
            if (!jo.contains("object_id") || !jo["object_id"].is_number_integer()) {
                diag(scene.scene_id, -1, "object_id", "object without integer object_id");
                continue;
            }
            obj.object_id = jo["object_id"].get<int>();
            if (!seen_ids.insert(obj.object_id).second) {
                diag(scene.scene_id, -1, "object_id",
                     "duplicate object_id " + std::to_string(obj.object_id));
                continue;
            }
            obj.label = get_string(jo, "label");
            if (!vocab.contains(obj.label)) {
                diag(scene.scene_id, -1, "label",
                     "unknown label '" + obj.label + "' on object " + std::to_string(obj.object_id));
            }
            std::string err;
            if (!jo.contains("aabb") || !parse_aabb(jo["aabb"], &obj.aabb, &err)) {
                diag(scene.scene_id, -1, "aabb",
                     err.empty() ? "object " + std::to_string(obj.object_id) + " missing aabb" : err);
                continue;
            }
            scene.objects.push_back(std::move(obj));
        }
        ds.scene_index[scene.scene_id] = ds.scenes.size();
        ds.scenes.push_back(std::move(scene));
    });

    std::set<std::pair<std::string, int>> seen_keys;
    for_each_jsonl(descriptions_path, [&](const std::string& line, std::size_t line_no) {
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            diag("descriptions:" + std::to_string(line_no), -1, "json",
                 "unparseable description record");
            return;
        }
        DescriptionRecord rec;
        rec.scene_id = get_string(j, "scene_id");
        if (!j.contains("ann_id") || !j["ann_id"].is_number_integer()) {
            diag(rec.scene_id, -1, "ann_id", "missing integer ann_id");
            return;
        }
        rec.ann_id = j["ann_id"].get<int>();
        if (!seen_keys.insert({rec.scene_id, rec.ann_id}).second) {
            diag(rec.scene_id, rec.ann_id, "ann_id", "duplicate (scene_id, ann_id)");
            return;
        }
        const SceneRecord* scene = ds.find_scene(rec.scene_id);
        if (scene == nullptr) {
            diag(rec.scene_id, rec.ann_id, "scene_id", "references unknown scene");
            return;
        }
        rec.description = get_string(j, "description");
        for (const auto& id : get_array(j, "object_ids")) {
            if (!id.is_number_integer()) {
                diag(rec.scene_id, rec.ann_id, "object_ids", "non-integer object id");
                return;
            }
            rec.object_ids.push_back(id.get<int>());
        }
        for (int id : rec.object_ids) {
            if (scene->find_object(id) == nullptr) {
                diag(rec.scene_id, rec.ann_id, "object_ids",
                     "object " + std::to_string(id) + " absent from scene");
                return;
            }
        }
        if (std::set<int>(rec.object_ids.begin(), rec.object_ids.end()).size() !=
            rec.object_ids.size()) {
            diag(rec.scene_id, rec.ann_id, "object_ids", "repeated target object id");
            return;
        }
        rec.target_class = get_string(j, "target_class");
        if (rec.target_class.empty()) {
            diag(rec.scene_id, rec.ann_id, "target_class", "missing target_class");
            return;
        }
        if (!vocab.contains(rec.target_class)) {
            diag(rec.scene_id, rec.ann_id, "target_class",
                 "unknown target_class '" + rec.target_class + "'");
            return;
        }
        if (j.contains("attributes") && j["attributes"].is_object()) {
            const auto& a = j["attributes"];
            rec.attributes.spatial = get_bool(a, "spatial", false);
            rec.attributes.color = get_bool(a, "color", false);
            rec.attributes.texture = get_bool(a, "texture", false);
            rec.attributes.shape = get_bool(a, "shape", false);
        }
        const std::string split_str = get_string(j, "split", "val");
        const auto split = parse_split(split_str);
        if (!split) {
            diag(rec.scene_id, rec.ann_id, "split", "unknown split '" + split_str + "'");
            return;
        }
        rec.split = *split;
        ds.descriptions.push_back(std::move(rec));
    });

    return result;
}

PredictionLoadResult load_predictions(const std::string& path, const Dataset& dataset) {
    PredictionLoadResult result;
    std::set<std::pair<std::string, int>> known;
    for (const DescriptionRecord& d : dataset.descriptions) {
        known.insert({d.scene_id, d.ann_id});
    }
    std::set<std::pair<std::string, int>> seen;
    auto diag = [&result](std::string scene_id, int ann_id, std::string field, std::string msg) {
        result.diagnostics.push_back({std::move(scene_id), ann_id, std::move(field), std::move(msg)});
    };
    for_each_jsonl(path, [&](const std::string& line, std::size_t line_no) {
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            diag("predictions:" + std::to_string(line_no), -1, "json",
                 "unparseable prediction record");
            return;
        }
        PredictionRecord rec;
        rec.scene_id = get_string(j, "scene_id");
        if (!j.contains("ann_id") || !j["ann_id"].is_number_integer()) {
            diag(rec.scene_id, -1, "ann_id", "missing integer ann_id");
            return;
        }
        rec.ann_id = j["ann_id"].get<int>();
        if (!known.count({rec.scene_id, rec.ann_id})) {
            diag(rec.scene_id, rec.ann_id, "ann_id", "no matching description record");
            return;
        }
        if (!seen.insert({rec.scene_id, rec.ann_id}).second) {
            diag(rec.scene_id, rec.ann_id, "ann_id", "duplicate prediction record");
            return;
        }
        for (const auto& jb : get_array(j, "boxes")) {
            ScoredBox box;
            std::string err;
            if (!jb.contains("aabb") || !parse_aabb(jb["aabb"], &box.aabb, &err)) {
                diag(rec.scene_id, rec.ann_id, "aabb", err.empty() ? "box missing aabb" : err);
                return;
            }
            if (!jb.contains("score") || !jb["score"].is_number()) {
                diag(rec.scene_id, rec.ann_id, "score", "box missing numeric score");
                return;
            }
            box.score = jb["score"].get<double>();
            if (box.score < 0.0 || box.score > 1.0) {
                diag(rec.scene_id, rec.ann_id, "score", "score outside [0,1]");
                return;
            }
            rec.boxes.push_back(box);
        }
        result.records.push_back(std::move(rec));
    });
    return result;
}

std::size_t SplitStats::zero_target() const {
    const auto get = [this](Scenario s) {
        const auto it = scenario_counts.find(s);
        return it == scenario_counts.end() ? std::size_t(0) : it->second;
    };
    return get(Scenario::ZtWithoutDistractor) + get(Scenario::ZtWithDistractor);
}

std::size_t SplitStats::single_target() const {
    const auto get = [this](Scenario s) {
        const auto it = scenario_counts.find(s);
        return it == scenario_counts.end() ? std::size_t(0) : it->second;
    };
    return get(Scenario::StWithoutDistractor) + get(Scenario::StWithDistractor);
}

std::size_t SplitStats::multi_target() const {
    const auto it = scenario_counts.find(Scenario::Mt);
    return it == scenario_counts.end() ? std::size_t(0) : it->second;
}

namespace {
std::vector<std::string> tokenize_lower(const std::string& text);
}

StatReport compute_stats(const Dataset& dataset) {
    StatReport report;
    std::map<Split, std::set<std::string>> split_scenes;
    std::set<std::string> all_scenes;
    std::map<Split, std::set<std::string>> split_vocab;
    std::set<std::string> all_vocab;

    for (const DescriptionRecord& rec : dataset.descriptions) {
        const SceneRecord* scene = dataset.find_scene(rec.scene_id);
        const Scenario scenario = classify_scenario(rec.object_ids, rec.target_class, *scene);
        const std::vector<std::string> tokens = tokenize_lower(rec.description);
        for (SplitStats* stats : {&report.splits[rec.split], &report.total}) {
            stats->descriptions += 1;
            stats->scenario_counts[scenario] += 1;
            stats->spatial += rec.attributes.spatial;
            stats->color += rec.attributes.color;
            stats->texture += rec.attributes.texture;
            stats->shape += rec.attributes.shape;
            stats->total_words += tokens.size();
        }
        split_vocab[rec.split].insert(tokens.begin(), tokens.end());
        all_vocab.insert(tokens.begin(), tokens.end());
        split_scenes[rec.split].insert(rec.scene_id);
        all_scenes.insert(rec.scene_id);
    }

    auto finish = [&dataset](SplitStats* stats, const std::set<std::string>& scene_ids,
                             const std::set<std::string>& vocab_words) {
        stats->scenes = scene_ids.size();
        for (const std::string& id : scene_ids) {
            stats->objects += dataset.find_scene(id)->objects.size();
        }
        stats->unique_words = vocab_words.size();
        if (stats->descriptions > 0) {
            stats->avg_description_length = double(stats->total_words) / double(stats->descriptions);
        }
        if (stats->scenes > 0) {
            stats->avg_descriptions_per_scene = double(stats->descriptions) / double(stats->scenes);
            stats->avg_objects_per_scene = double(stats->objects) / double(stats->scenes);
        }
        if (stats->objects > 0) {
            stats->avg_descriptions_per_object = double(stats->descriptions) / double(stats->objects);
        }
    };
    for (auto& [split, stats] : report.splits) {
        finish(&stats, split_scenes[split], split_vocab[split]);
    }
    finish(&report.total, all_scenes, all_vocab);
    return report;
}

namespace {

json split_stats_to_json(const SplitStats& stats) {
    json scenarios = json::object();
    for (Scenario s : kAllScenarios) {
        const auto it = stats.scenario_counts.find(s);
        scenarios[std::string(scenario_key(s))] = it == stats.scenario_counts.end() ? 0 : it->second;
    }
    return json{
        {"descriptions", stats.descriptions},
        {"scenes", stats.scenes},
        {"objects", stats.objects},
        {"scenarios", scenarios},
        {"targets",
         {{"zero", stats.zero_target()},
          {"single", stats.single_target()},
          {"multiple", stats.multi_target()}}},
        {"attributes",
         {{"spatial", stats.spatial},
          {"color", stats.color},
          {"texture", stats.texture},
          {"shape", stats.shape}}},
        {"language",
         {{"total_words", stats.total_words},
          {"unique_words", stats.unique_words},
          {"avg_description_length", stats.avg_description_length}}},
        {"avg_descriptions_per_scene", stats.avg_descriptions_per_scene},
        {"avg_objects_per_scene", stats.avg_objects_per_scene},
        {"avg_descriptions_per_object", stats.avg_descriptions_per_object},
    };
}

}  // namespace

std::string stats_to_json(const StatReport& report) {
    json j;
    json splits = json::object();
    for (const auto& [split, stats] : report.splits) {
        splits[std::string(split_key(split))] = split_stats_to_json(stats);
    }
    j["splits"] = std::move(splits);
    j["total"] = split_stats_to_json(report.total);
    return j.dump(2) + "\n";
}

AutocheckResult zero_target_autocheck(const DescriptionRecord& candidate,
                                      const SceneRecord& scene) {
    for (const SceneObject& obj : scene.objects) {
        if (obj.label == candidate.target_class) {
            return AutocheckResult::NeedsReview;
        }
    }
    return AutocheckResult::AutoClear;
}

namespace {

std::vector<std::string> tokenize_lower(const std::string& text) {
    std::vector<std::string> tokens;
    std::string token;
    for (char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            token += char(std::tolower(static_cast<unsigned char>(ch)));
        } else if (!token.empty()) {
            tokens.push_back(std::move(token));
            token.clear();
        }
    }
    if (!token.empty()) {
        tokens.push_back(std::move(token));
    }
    return tokens;
}

bool contains_subsequence(const std::vector<std::string>& haystack,
                          const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > haystack.size()) {
        return false;
    }
    for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        if (std::equal(needle.begin(), needle.end(), haystack.begin() + i)) {
            return true;
        }
    }
    return false;
}

}  // namespace

PredictionRecord lexical_baseline(const DescriptionRecord& description, const SceneRecord& scene,
                                  const Lexicon& lexicon) {
    const std::vector<std::string> tokens = tokenize_lower(description.description);
    PredictionRecord out;
    out.scene_id = description.scene_id;
    out.ann_id = description.ann_id;
    for (const SceneObject& obj : scene.objects) {
        std::vector<std::string> terms = {obj.label};
        const auto it = lexicon.synonyms.find(obj.label);
        if (it != lexicon.synonyms.end()) {
            terms.insert(terms.end(), it->second.begin(), it->second.end());
        }
        const bool mentioned = std::any_of(terms.begin(), terms.end(), [&](const std::string& t) {
            return contains_subsequence(tokens, tokenize_lower(t));
        });
        if (mentioned) {
            out.boxes.push_back({obj.aabb, 1.0});
        }
    }
    return out;
}

}  // namespace vg3d
