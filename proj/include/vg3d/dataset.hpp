#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "vg3d/geometry.hpp"
#include "vg3d/scenario.hpp"

namespace vg3d {

struct SceneObject {
    int object_id = 0;
    std::string label;
    Aabb aabb;
};

struct SceneRecord {
    std::string scene_id;
    std::vector<SceneObject> objects;

    const SceneObject* find_object(int object_id) const;
};

struct AttributeFlags {
    bool spatial = false;
    bool color = false;
    bool texture = false;
    bool shape = false;

    int count_set() const {
        return int(spatial) + int(color) + int(texture) + int(shape);
    }
};

enum class Split { Train, Val, Test };

std::string_view split_key(Split s);
std::optional<Split> parse_split(std::string_view s);

struct DescriptionRecord {
    std::string scene_id;
    int ann_id = 0;
    std::string description;
    std::vector<int> object_ids;  // targets; empty for zero-target records
    std::string target_class;     // always present, ZT records included
    AttributeFlags attributes;
    Split split = Split::Val;
};

struct ScoredBox {
    Aabb aabb;
    double score = 0.0;
};

struct PredictionRecord {
    std::string scene_id;
    int ann_id = 0;
    std::vector<ScoredBox> boxes;
};

// A validation finding with record coordinates. ann_id < 0 means the
// diagnostic concerns a scene rather than a description.
struct Diagnostic {
    std::string scene_id;
    int ann_id = -1;
    std::string field;
    std::string message;

    std::string to_string() const;
};

struct LabelVocabulary {
    std::vector<std::string> labels;

    bool contains(const std::string& label) const;
    static LabelVocabulary load(const std::string& path);  // JSON array of strings
};

// Class -> synonym list for the lexical baseline; a class always matches its
// own name, synonyms extend the match set.
struct Lexicon {
    std::map<std::string, std::vector<std::string>> synonyms;

    static Lexicon identity(const LabelVocabulary& vocab);
    static Lexicon load(const std::string& path);  // JSON object class -> [synonyms]
};

struct Dataset {
    std::vector<SceneRecord> scenes;
    std::vector<DescriptionRecord> descriptions;
    std::unordered_map<std::string, std::size_t> scene_index;  // scene_id -> scenes[]

    const SceneRecord* find_scene(const std::string& scene_id) const;
};

struct LoadResult {
    Dataset dataset;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return diagnostics.empty(); }
};

// Parses and cross-validates line-delimited JSON scene and description files.
// Record-level problems (unknown label, dangling object id, duplicate keys,
// malformed boxes) become diagnostics; unreadable files throw.
LoadResult load_dataset(const std::string& scenes_path, const std::string& descriptions_path,
                        const LabelVocabulary& vocab);

struct PredictionLoadResult {
    std::vector<PredictionRecord> records;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return diagnostics.empty(); }
};

// Loads predictions and checks each (scene_id, ann_id) resolves to a loaded
// description and every score lies in [0,1].
PredictionLoadResult load_predictions(const std::string& path, const Dataset& dataset);

struct SplitStats {
    std::size_t descriptions = 0;
    std::size_t scenes = 0;
    std::size_t objects = 0;
    std::map<Scenario, std::size_t> scenario_counts;
    std::size_t spatial = 0;
    std::size_t color = 0;
    std::size_t texture = 0;
    std::size_t shape = 0;
    // Language statistics over lower-cased tokens, punctuation excluded.
    std::size_t total_words = 0;
    std::size_t unique_words = 0;
    double avg_description_length = 0.0;
    double avg_descriptions_per_scene = 0.0;
    double avg_objects_per_scene = 0.0;
    double avg_descriptions_per_object = 0.0;

    std::size_t zero_target() const;
    std::size_t single_target() const;
    std::size_t multi_target() const;
};

struct StatReport {
    std::map<Split, SplitStats> splits;  // only splits that appear
    SplitStats total;
};

StatReport compute_stats(const Dataset& dataset);
std::string stats_to_json(const StatReport& report);

enum class AutocheckResult { AutoClear, NeedsReview };

// Zero-target screening: a candidate description auto-clears iff no scene
// object carries its target class; otherwise a human has to look.
AutocheckResult zero_target_autocheck(const DescriptionRecord& candidate, const SceneRecord& scene);

// Emits the boxes of every scene object whose class (or a declared synonym)
// appears as a whole-token sequence in the lower-cased description, score 1.
PredictionRecord lexical_baseline(const DescriptionRecord& description, const SceneRecord& scene,
                                  const Lexicon& lexicon);

}  // namespace vg3d
