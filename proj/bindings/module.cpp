#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vg3d/dataset.hpp"
#include "vg3d/geometry.hpp"
#include "vg3d/losses.hpp"
#include "vg3d/matching.hpp"
#include "vg3d/metrics.hpp"
#include "vg3d/renderer.hpp"
#include "vg3d/version.hpp"

namespace py = pybind11;
using namespace vg3d;

namespace {

Vec3 to_vec3(py::handle obj) {
    const auto seq = py::cast<std::vector<double>>(obj);
    if (seq.size() != 3) {
        throw py::value_error("expected a 3-element sequence");
    }
    return {seq[0], seq[1], seq[2]};
}

Aabb to_aabb(py::handle obj) {
    const auto pair = py::cast<py::tuple>(obj);
    if (pair.size() != 2) {
        throw py::value_error("expected (min, max)");
    }
    Aabb box{to_vec3(pair[0]), to_vec3(pair[1])};
    if (!box.valid()) {
        throw py::value_error("box has min > max on some axis");
    }
    return box;
}

std::vector<Aabb> to_boxes(py::handle obj) {
    std::vector<Aabb> boxes;
    for (py::handle item : py::cast<py::sequence>(obj)) {
        boxes.push_back(to_aabb(item));
    }
    return boxes;
}

std::vector<Vec3> to_points(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2 || arr.shape(1) != 3) {
        throw py::value_error("expected an (N,3) array");
    }
    std::vector<Vec3> points(std::size_t(arr.shape(0)));
    const auto view = arr.unchecked<2>();
    for (py::ssize_t i = 0; i < arr.shape(0); ++i) {
        points[std::size_t(i)] = {view(i, 0), view(i, 1), view(i, 2)};
    }
    return points;
}

py::array_t<double> from_points(const std::vector<Vec3>& points) {
    py::array_t<double> arr({py::ssize_t(points.size()), py::ssize_t(3)});
    auto view = arr.mutable_unchecked<2>();
    for (std::size_t i = 0; i < points.size(); ++i) {
        view(py::ssize_t(i), 0) = points[i].x;
        view(py::ssize_t(i), 1) = points[i].y;
        view(py::ssize_t(i), 2) = points[i].z;
    }
    return arr;
}

FeatureBatch to_batch(const py::array_t<double, py::array::c_style | py::array::forcecast>& s,
                      const py::array_t<double, py::array::c_style | py::array::forcecast>& o,
                      double temperature) {
    if (s.ndim() != 2 || o.ndim() != 2 || s.shape(0) != o.shape(0) || s.shape(1) != o.shape(1)) {
        throw py::value_error("sentence and object features must share an (n,d) shape");
    }
    FeatureBatch batch;
    batch.n = std::size_t(s.shape(0));
    batch.d = std::size_t(s.shape(1));
    batch.temperature = temperature;
    batch.sentence_features.assign(s.data(), s.data() + batch.n * batch.d);
    batch.object_features.assign(o.data(), o.data() + batch.n * batch.d);
    return batch;
}

py::array_t<double> grad_array(const std::vector<double>& flat, std::size_t n, std::size_t d) {
    py::array_t<double> arr({py::ssize_t(n), py::ssize_t(d)});
    std::copy(flat.begin(), flat.end(), arr.mutable_data());
    return arr;
}

}  // namespace

PYBIND11_MODULE(_vg3d, m) {
    m.doc() = "Flexible-count 3D visual grounding evaluation toolkit";
    m.attr("__version__") = kVersion;

    // Boxes are (min, max) pairs of 3-sequences throughout.
    m.def(
        "volume", [](py::handle box) { return volume(to_aabb(box)); }, py::arg("box"),
        "Volume of an axis-aligned box in cubic meters.");
    m.def(
        "iou", [](py::handle a, py::handle b) { return iou(to_aabb(a), to_aabb(b)); },
        py::arg("a"), py::arg("b"), "Intersection over union of two axis-aligned boxes.");
    m.def(
        "aabb_from_points",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pts) {
            const auto points = to_points(pts);
            const Aabb box = aabb_from_points(points);
            return py::make_tuple(
                py::make_tuple(box.min_corner.x, box.min_corner.y, box.min_corner.z),
                py::make_tuple(box.max_corner.x, box.max_corner.y, box.max_corner.z));
        },
        py::arg("points"), "Tight bounding box of an (N,3) point array.");
    m.def(
        "crop",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& positions,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& colors,
           py::handle box) {
            PointCloud cloud;
            cloud.positions = to_points(positions);
            cloud.colors = to_points(colors);
            const PointCloud out = crop(cloud, to_aabb(box));
            return py::make_tuple(from_points(out.positions), from_points(out.colors));
        },
        py::arg("positions"), py::arg("colors"), py::arg("box"),
        "Points (and colors) inside the closed box, order preserved.");

    m.def(
        "hungarian",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& cost) {
            if (cost.ndim() != 2 || cost.shape(0) != cost.shape(1)) {
                throw py::value_error("expected a square cost matrix");
            }
            CostMatrix m2;
            m2.n = std::size_t(cost.shape(0));
            m2.n_pred = m2.n_gt = m2.n;
            m2.entries.assign(cost.data(), cost.data() + m2.n * m2.n);
            const Assignment a = hungarian(m2);
            return py::make_tuple(a.pairs, a.total_cost);
        },
        py::arg("cost"), "Minimum-cost perfect matching: (pairs, total_cost).");
    m.def(
        "build_cost_matrix",
        [](py::handle pred_boxes, py::handle gt_boxes) {
            const auto pred = to_boxes(pred_boxes);
            const auto gt = to_boxes(gt_boxes);
            const CostMatrix cm = build_cost_matrix(pred, gt);
            py::array_t<double> arr({py::ssize_t(cm.n), py::ssize_t(cm.n)});
            std::copy(cm.entries.begin(), cm.entries.end(), arr.mutable_data());
            return arr;
        },
        py::arg("pred_boxes"), py::arg("gt_boxes"),
        "Square -IoU cost matrix padded with zeros to max(#pred, #gt).");

    m.def(
        "evaluate_boxes",
        [](py::handle pred_boxes, py::handle gt_boxes, double tau_eval, bool strict_iou) {
            EvalConfig config;
            config.strict_iou = strict_iou;
            const auto pred = to_boxes(pred_boxes);
            const auto gt = to_boxes(gt_boxes);
            const PairResult r = evaluate_boxes(pred, gt, tau_eval, config);
            return py::dict(py::arg("tp") = r.tp, py::arg("n_pred") = r.n_pred,
                            py::arg("n_gt") = r.n_gt, py::arg("f1") = r.f1);
        },
        py::arg("pred_boxes"), py::arg("gt_boxes"), py::arg("tau_eval"),
        py::arg("strict_iou") = true,
        "Hungarian-matched TP count and F1 for one description-scene pair.");

    m.def(
        "contrastive_loss",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& s,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& o,
           double temperature) {
            const ContrastiveLoss loss = contrastive_loss(to_batch(s, o, temperature));
            return py::make_tuple(loss.total, loss.object_to_sentence, loss.sentence_to_object);
        },
        py::arg("sentence_features"), py::arg("object_features"), py::arg("temperature") = 0.07,
        "Symmetric contrastive loss: (total, object_to_sentence, sentence_to_object).");
    m.def(
        "contrastive_grad",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& s,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& o,
           double temperature) {
            const FeatureBatch batch = to_batch(s, o, temperature);
            const ContrastiveGrad g = contrastive_grad(batch);
            return py::make_tuple(grad_array(g.d_sentence, batch.n, batch.d),
                                  grad_array(g.d_object, batch.n, batch.d));
        },
        py::arg("sentence_features"), py::arg("object_features"), py::arg("temperature") = 0.07,
        "Analytic gradients of the total contrastive loss (d_sentence, d_object).");
    m.def(
        "bce_reference_loss",
        [](const std::vector<double>& logits, const std::vector<int>& labels) {
            TargetLabels t;
            t.labels = labels;
            return bce_reference_loss(logits, t);
        },
        py::arg("logits"), py::arg("labels"),
        "Sum of per-proposal binary cross-entropies.");
    m.def(
        "multiclass_reference_loss",
        [](const std::vector<double>& logits, std::size_t target_index) {
            return multiclass_reference_loss(logits, target_index);
        },
        py::arg("logits"), py::arg("target_index"), "-log softmax(logits)[target_index].");
    m.def(
        "assign_training_targets",
        [](py::handle proposals, py::handle gts, const std::string& strategy, double tau_train) {
            const AssignStrategy s = strategy == "all" ? AssignStrategy::All
                                                       : AssignStrategy::Hungarian;
            if (strategy != "all" && strategy != "hungarian") {
                throw py::value_error("strategy must be 'all' or 'hungarian'");
            }
            return assign_training_targets(to_boxes(proposals), to_boxes(gts), s, tau_train)
                .labels;
        },
        py::arg("proposals"), py::arg("gts"), py::arg("strategy") = "hungarian",
        py::arg("tau_train") = 0.5, "Per-proposal binary training-target labels.");

    m.def(
        "make_cameras",
        [](py::handle box, int n_views, double elevation_deg, double distance_m) {
            py::list out;
            for (const CameraPose& pose :
                 make_cameras(to_aabb(box), n_views, elevation_deg, distance_m)) {
                out.append(py::dict(
                    py::arg("eye") = py::make_tuple(pose.eye.x, pose.eye.y, pose.eye.z),
                    py::arg("target") =
                        py::make_tuple(pose.target.x, pose.target.y, pose.target.z),
                    py::arg("up") = py::make_tuple(pose.up.x, pose.up.y, pose.up.z),
                    py::arg("vertical_fov_deg") = pose.vertical_fov_deg));
            }
            return out;
        },
        py::arg("box"), py::arg("n_views") = 3, py::arg("elevation_deg") = 45.0,
        py::arg("distance_m") = 1.0, "Ring of look-at camera poses around the box center.");
    m.def(
        "render_proposal",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& positions,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& colors,
           py::handle box, int n_views, double elevation_deg, double distance_m,
           double point_radius_m, int size_px) {
            PointCloud cloud;
            cloud.positions = to_points(positions);
            cloud.colors = to_points(colors);
            RenderConfig config;
            config.n_views = n_views;
            config.elevation_deg = elevation_deg;
            config.distance_m = distance_m;
            config.point_radius_m = point_radius_m;
            config.size_px = size_px;
            py::list out;
            for (const ImageBuffer& img : render_proposal(cloud, to_aabb(box), config)) {
                py::array_t<std::uint8_t> arr(
                    {py::ssize_t(img.height), py::ssize_t(img.width), py::ssize_t(3)});
                std::copy(img.rgb.begin(), img.rgb.end(), arr.mutable_data());
                out.append(std::move(arr));
            }
            return out;
        },
        py::arg("positions"), py::arg("colors"), py::arg("box"), py::arg("n_views") = 3,
        py::arg("elevation_deg") = 45.0, py::arg("distance_m") = 1.0,
        py::arg("point_radius_m") = 0.025, py::arg("size_px") = 224,
        "Crop the cloud by the box and splat one (H,W,3) uint8 image per view.");
    m.def("load_ply", [](const std::string& path) {
        const PointCloud cloud = load_ply(path);
        return py::make_tuple(from_points(cloud.positions), from_points(cloud.colors));
    });
}
