// Integration tests driving the vg3d binary end to end.
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kCli = VG3D_CLI_PATH;
const std::string kFixtureDir = VG3D_TEST_DATA_DIR "/fixture";
const std::string kLabelsPath = VG3D_LABELS_PATH;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("vg3d_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

int run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string dataset_flags() {
    return "--scenes " + kFixtureDir + "/scenes.jsonl --descriptions " + kFixtureDir +
           "/descriptions.jsonl --labels " + kLabelsPath;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("validate") {
    CHECK(run("validate " + dataset_flags()) == 0);
    CHECK(run("validate " + dataset_flags() + " --predictions " + kFixtureDir +
              "/predictions.jsonl") == 0);

    SUBCASE("missing file exits 2") {
        CHECK(run("validate --scenes /nonexistent.jsonl --descriptions " + kFixtureDir +
                  "/descriptions.jsonl --labels " + kLabelsPath) == 2);
    }
    SUBCASE("validation failure exits 1") {
        TempDir tmp;
        const fs::path bad = tmp.path / "bad.jsonl";
        std::ofstream(bad) << R"({"scene_id": "scene_a", "ann_id": 1, "description": "x", )"
                           << R"("object_ids": [99], "target_class": "chair", "split": "val"})"
                           << "\n";
        CHECK(run("validate --scenes " + kFixtureDir + "/scenes.jsonl --descriptions " +
                  bad.string() + " --labels " + kLabelsPath) == 1);
    }
}

TEST_CASE("eval writes the fixture report") {
    TempDir tmp;
    const fs::path out = tmp.path / "report.json";
    REQUIRE(run("eval " + dataset_flags() + " --predictions " + kFixtureDir +
                "/predictions.jsonl --out " + out.string()) == 0);
    const json report = json::parse(read_file(out));
    CHECK(report["config"]["prediction_threshold"] == 0.1);
    CHECK(report["counts"]["mt"] == 3);
    CHECK(report["f1"]["0.25"]["zt_wo_d"] == 1.0);
    CHECK(report["f1"]["0.50"].contains("all"));

    SUBCASE("custom thresholds appear as report keys") {
        const fs::path out2 = tmp.path / "report2.json";
        REQUIRE(run("eval " + dataset_flags() + " --predictions " + kFixtureDir +
                    "/predictions.jsonl --iou 0.1,0.75 --out " + out2.string()) == 0);
        const json r2 = json::parse(read_file(out2));
        CHECK(r2["f1"].contains("0.10"));
        CHECK(r2["f1"].contains("0.75"));
    }
}

TEST_CASE("eval with all-empty predictions scores ZT 1.0 and the rest 0.0") {
    TempDir tmp;
    const fs::path preds = tmp.path / "empty.jsonl";
    {
        std::ofstream out(preds);
        const std::pair<const char*, int> keys[] = {
            {"scene_a", 1}, {"scene_a", 2}, {"scene_a", 3}, {"scene_a", 4},
            {"scene_a", 5}, {"scene_b", 6}, {"scene_b", 7}, {"scene_b", 8},
            {"scene_b", 9}, {"scene_b", 10}, {"scene_a", 11}, {"scene_a", 12}};
        for (const auto& [scene, ann] : keys) {
            out << json{{"scene_id", scene}, {"ann_id", ann}, {"boxes", json::array()}} << "\n";
        }
    }
    const fs::path out = tmp.path / "report.json";
    REQUIRE(run("eval " + dataset_flags() + " --predictions " + preds.string() + " --out " +
                out.string()) == 0);
    const json report = json::parse(read_file(out));
    for (const char* tau : {"0.25", "0.50"}) {
        CHECK(report["f1"][tau]["zt_wo_d"] == 1.0);
        CHECK(report["f1"][tau]["zt_w_d"] == 1.0);
        CHECK(report["f1"][tau]["st_wo_d"] == 0.0);
        CHECK(report["f1"][tau]["st_w_d"] == 0.0);
        CHECK(report["f1"][tau]["mt"] == 0.0);
    }
}

TEST_CASE("eval is byte-identical across worker counts") {
    TempDir tmp;
    const fs::path one = tmp.path / "w1.json";
    const fs::path eight = tmp.path / "w8.json";
    REQUIRE(run("eval " + dataset_flags() + " --predictions " + kFixtureDir +
                "/predictions.jsonl --workers 1 --out " + one.string()) == 0);
    REQUIRE(run("eval " + dataset_flags() + " --predictions " + kFixtureDir +
                "/predictions.jsonl --workers 8 --out " + eight.string()) == 0);
    CHECK(read_file(one) == read_file(eight));
}

TEST_CASE("worker determinism holds on a generated 300-description corpus") {
    TempDir tmp;
    std::mt19937 rng(6060);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const char* classes[] = {"chair", "table", "sofa", "bed", "sink"};

    const fs::path scenes = tmp.path / "scenes.jsonl";
    const fs::path descs = tmp.path / "descs.jsonl";
    const fs::path preds = tmp.path / "preds.jsonl";
    {
        std::ofstream sf(scenes), df(descs), pf(preds);
        int ann = 0;
        for (int s = 0; s < 30; ++s) {
            const std::string sid = "gen_" + std::to_string(s);
            json objects = json::array();
            std::vector<json> boxes;
            for (int o = 0; o < 8; ++o) {
                const double x = 2.0 * o;
                json aabb = {{"min", {x, 0.0, 0.0}}, {"max", {x + 1.0, 1.0, 1.0}}};
                objects.push_back(
                    {{"object_id", o + 1}, {"label", classes[o % 5]}, {"aabb", aabb}});
                boxes.push_back(aabb);
            }
            sf << json{{"scene_id", sid}, {"objects", objects}} << "\n";
            for (int d = 0; d < 10; ++d) {
                ++ann;
                const int n_targets = int(rng() % 3);
                std::vector<int> pool = {1, 2, 3, 4, 5, 6, 7, 8};
                std::shuffle(pool.begin(), pool.end(), rng);
                json ids = json::array();
                for (int t = 0; t < n_targets; ++t) {
                    ids.push_back(pool[std::size_t(t)]);
                }
                df << json{{"scene_id", sid},
                           {"ann_id", ann},
                           {"description", "generated"},
                           {"object_ids", ids},
                           {"target_class", classes[rng() % 5]},
                           {"split", "val"}}
                   << "\n";
                json pboxes = json::array();
                for (std::size_t b = 0; b < rng() % 4; ++b) {
                    const double x = 2.0 * double(rng() % 8) + unif(rng) - 0.5;
                    pboxes.push_back(
                        {{"aabb", {{"min", {x, 0.0, 0.0}}, {"max", {x + 1.0, 1.0, 1.0}}}},
                         {"score", unif(rng)}});
                }
                pf << json{{"scene_id", sid}, {"ann_id", ann}, {"boxes", pboxes}} << "\n";
            }
        }
    }
    const std::string flags = "--scenes " + scenes.string() + " --descriptions " + descs.string() +
                              " --labels " + kLabelsPath + " --predictions " + preds.string();
    const fs::path w1 = tmp.path / "w1.json";
    const fs::path w7 = tmp.path / "w7.json";
    REQUIRE(run("eval " + flags + " --workers 1 --out " + w1.string()) == 0);
    REQUIRE(run("eval " + flags + " --workers 7 --out " + w7.string()) == 0);
    const std::string a = read_file(w1);
    CHECK(a == read_file(w7));
    CHECK(!a.empty());
}

TEST_CASE("sweep single-point grid equals eval at that tau_pred") {
    TempDir tmp;
    const fs::path eval_out = tmp.path / "eval.json";
    const fs::path sweep_out = tmp.path / "sweep.json";
    const fs::path csv_out = tmp.path / "sweep.csv";
    REQUIRE(run("eval " + dataset_flags() + " --predictions " + kFixtureDir +
                "/predictions.jsonl --tau-pred 0.3 --out " + eval_out.string()) == 0);
    REQUIRE(run("sweep " + dataset_flags() + " --predictions " + kFixtureDir +
                "/predictions.jsonl --grid 0.3 --tau-eval 0.5 --out " + sweep_out.string() +
                " --csv " + csv_out.string()) == 0);
    const json eval_report = json::parse(read_file(eval_out));
    const json sweep_report = json::parse(read_file(sweep_out));
    REQUIRE(sweep_report["rows"].size() == 1);
    const json& row = sweep_report["rows"][0];
    for (const char* key : {"zt_wo_d", "zt_w_d", "st_wo_d", "st_w_d", "mt", "all"}) {
        CHECK(row[key] == eval_report["f1"]["0.50"][key]);
    }
    const std::string csv = read_file(csv_out);
    CHECK(csv.rfind("tau_pred,", 0) == 0);

    SUBCASE("21-point grid matches 21 single evaluations") {
        const fs::path grid_out = tmp.path / "grid.json";
        REQUIRE(run("sweep " + dataset_flags() + " --predictions " + kFixtureDir +
                    "/predictions.jsonl --grid 0:1:0.05 --tau-eval 0.5 --out " +
                    grid_out.string()) == 0);
        const json grid_report = json::parse(read_file(grid_out));
        REQUIRE(grid_report["rows"].size() == 21);
        for (const json& grid_row : grid_report["rows"]) {
            const double tau_pred = grid_row["tau_pred"].get<double>();
            const fs::path point = tmp.path / "point.json";
            std::ostringstream flags;
            flags << "eval " << dataset_flags() << " --predictions " << kFixtureDir
                  << "/predictions.jsonl --iou 0.5 --tau-pred " << std::setprecision(17)
                  << tau_pred << " --out " << point.string();
            REQUIRE(run(flags.str()) == 0);
            const json point_report = json::parse(read_file(point));
            CHECK(grid_row["all"] == point_report["f1"]["0.50"]["all"]);
        }
    }
}

TEST_CASE("sweep is byte-identical across worker counts") {
    TempDir tmp;
    const fs::path one = tmp.path / "w1.json";
    const fs::path four = tmp.path / "w4.json";
    const std::string flags = dataset_flags() + " --predictions " + kFixtureDir +
                              "/predictions.jsonl --grid 0:1:0.1 --tau-eval 0.25";
    REQUIRE(run("sweep " + flags + " --workers 1 --out " + one.string()) == 0);
    REQUIRE(run("sweep " + flags + " --workers 4 --out " + four.string()) == 0);
    CHECK(read_file(one) == read_file(four));
}

TEST_CASE("stats reports the fixture hand counts") {
    TempDir tmp;
    const fs::path out = tmp.path / "stats.json";
    REQUIRE(run("stats " + dataset_flags() + " --out " + out.string()) == 0);
    const json stats = json::parse(read_file(out));
    const json& val = stats["splits"]["val"];
    CHECK(val["descriptions"] == 12);
    CHECK(val["scenes"] == 2);
    CHECK(val["objects"] == 9);
    CHECK(val["scenarios"]["zt_wo_d"] == 2);
    CHECK(val["scenarios"]["zt_w_d"] == 2);
    CHECK(val["scenarios"]["st_wo_d"] == 3);
    CHECK(val["scenarios"]["st_w_d"] == 2);
    CHECK(val["scenarios"]["mt"] == 3);
    CHECK(val["attributes"]["spatial"] == 5);
    CHECK(val["attributes"]["color"] == 3);
    CHECK(val["attributes"]["texture"] == 2);
    CHECK(val["attributes"]["shape"] == 2);
}

TEST_CASE("baseline feeds eval end to end") {
    TempDir tmp;
    const fs::path preds = tmp.path / "baseline.jsonl";
    const fs::path report = tmp.path / "report.json";
    REQUIRE(run("baseline " + dataset_flags() + " --out " + preds.string()) == 0);
    REQUIRE(fs::exists(preds));
    REQUIRE(run("eval " + dataset_flags() + " --predictions " + preds.string() + " --out " +
                report.string()) == 0);
    const json j = json::parse(read_file(report));
    CHECK(j["f1"]["0.50"]["all"].is_number());
}

TEST_CASE("assign: hungarian positives are a subset of all positives") {
    TempDir tmp;
    const fs::path hung = tmp.path / "hungarian.jsonl";
    const fs::path all = tmp.path / "all.jsonl";
    const std::string preds = kFixtureDir + "/predictions.jsonl";
    REQUIRE(run("assign " + dataset_flags() + " --predictions " + preds +
                " --strategy hungarian --tau-train 0.5 --out " + hung.string()) == 0);
    REQUIRE(run("assign " + dataset_flags() + " --predictions " + preds +
                " --strategy all --tau-train 0.5 --out " + all.string()) == 0);

    std::istringstream hs(read_file(hung)), as(read_file(all));
    std::string hline, aline;
    int rows = 0;
    while (std::getline(hs, hline) && std::getline(as, aline)) {
        const json h = json::parse(hline);
        const json a = json::parse(aline);
        REQUIRE(h["labels"].size() == a["labels"].size());
        for (std::size_t i = 0; i < h["labels"].size(); ++i) {
            CHECK(h["labels"][i].get<int>() <= a["labels"][i].get<int>());
        }
        ++rows;
    }
    CHECK(rows == 12);
}

TEST_CASE("render writes three PPMs per proposal") {
    TempDir tmp;
    // A dense cloud spanning the fixture's first chair box.
    const fs::path ply = tmp.path / "scene.ply";
    {
        std::ofstream out(ply);
        std::mt19937 rng(4);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const int n = 500;
        out << "ply\nformat ascii 1.0\nelement vertex " << n << "\n";
        out << "property float x\nproperty float y\nproperty float z\n";
        out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
        out << "end_header\n";
        for (int i = 0; i < n; ++i) {
            out << unif(rng) << " " << unif(rng) << " " << unif(rng) << " 200 30 30\n";
        }
    }
    const fs::path preds = tmp.path / "boxes.jsonl";
    std::ofstream(preds) << R"({"scene_id": "scene_a", "ann_id": 4, "boxes": [{"aabb": )"
                         << R"({"min": [0.0, 0.0, 0.0], "max": [1.0, 1.0, 1.0]}, "score": 0.9}]})"
                         << "\n";
    const fs::path out_dir = tmp.path / "views";
    REQUIRE(run("render --ply " + ply.string() + " --predictions " + preds.string() +
                " --scene-id scene_a --out " + out_dir.string()) == 0);
    for (int k = 0; k < 3; ++k) {
        const fs::path img = out_dir / ("scene_a_4_view" + std::to_string(k) + ".ppm");
        REQUIRE(fs::exists(img));
        const std::string bytes = read_file(img);
        CHECK(bytes.rfind("P6\n224 224\n255\n", 0) == 0);
        CHECK(bytes.size() == 15 + 224 * 224 * 3);
    }

    SUBCASE("a degenerate box fails validation before any file is written") {
        const fs::path bad = tmp.path / "bad.jsonl";
        std::ofstream(bad) << R"({"scene_id": "scene_a", "ann_id": 4, "boxes": [{"aabb": )"
                           << R"({"min": [0.0, 0.0, 0.0], "max": [1.0, 1.0, 1.0]}, "score": 0.9}, )"
                           << R"({"aabb": {"min": [2.0, 2.0, 2.0], "max": [2.0, 2.0, 2.0]}, "score": 0.9}]})"
                           << "\n";
        const fs::path bad_dir = tmp.path / "bad_views";
        CHECK(run("render --ply " + ply.string() + " --predictions " + bad.string() + " --out " +
                  bad_dir.string()) == 1);
        CHECK((!fs::exists(bad_dir) || fs::is_empty(bad_dir)));
    }
    SUBCASE("multi-box records get a box infix") {
        const fs::path multi = tmp.path / "multi.jsonl";
        std::ofstream(multi)
            << R"({"scene_id": "scene_a", "ann_id": 5, "boxes": [)"
            << R"({"aabb": {"min": [0.0, 0.0, 0.0], "max": [1.0, 1.0, 1.0]}, "score": 0.9}, )"
            << R"({"aabb": {"min": [0.2, 0.2, 0.2], "max": [0.8, 0.8, 0.8]}, "score": 0.8}]})"
            << "\n";
        const fs::path multi_dir = tmp.path / "multi_views";
        REQUIRE(run("render --ply " + ply.string() + " --predictions " + multi.string() +
                    " --out " + multi_dir.string() + " --size 64") == 0);
        for (int b = 0; b < 2; ++b) {
            for (int k = 0; k < 3; ++k) {
                CHECK(fs::exists(multi_dir / ("scene_a_5_box" + std::to_string(b) + "_view" +
                                              std::to_string(k) + ".ppm")));
            }
        }
    }
}

TEST_CASE("losses selftest passes") {
    CHECK(run("losses selftest") == 0);
}

TEST_CASE("help exists for every subcommand") {
    CHECK(run("--help") == 0);
    for (const char* sub : {"eval", "sweep", "stats", "validate", "baseline", "render", "assign"}) {
        CHECK(run(std::string(sub) + " --help") == 0);
    }
    CHECK(run("losses selftest --help") == 0);
}
