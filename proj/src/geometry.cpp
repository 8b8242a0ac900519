#include "vg3d/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace vg3d {

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

Vec3 Vec3::normalized() const {
    const double n = norm();
    if (n == 0.0) {
        throw std::invalid_argument("cannot normalize zero vector");
    }
    return {x / n, y / n, z / n};
}

double volume(const Aabb& box) {
    const Vec3 e = box.extent();
    if (e.x < 0.0 || e.y < 0.0 || e.z < 0.0) {
        return 0.0;
    }
    return e.x * e.y * e.z;
}

double iou(const Aabb& a, const Aabb& b) {
    const double ix = std::min(a.max_corner.x, b.max_corner.x) - std::max(a.min_corner.x, b.min_corner.x);
    const double iy = std::min(a.max_corner.y, b.max_corner.y) - std::max(a.min_corner.y, b.min_corner.y);
    const double iz = std::min(a.max_corner.z, b.max_corner.z) - std::max(a.min_corner.z, b.min_corner.z);
    if (ix <= 0.0 || iy <= 0.0 || iz <= 0.0) {
        return 0.0;
    }
    const double inter = ix * iy * iz;
    const double uni = volume(a) + volume(b) - inter;
    if (uni <= 0.0) {
        return 0.0;
    }
    return inter / uni;
}

Aabb aabb_from_points(std::span<const Vec3> points) {
    if (points.empty()) {
        throw std::invalid_argument("aabb_from_points: empty point set");
    }
    Aabb box{points[0], points[0]};
    for (const Vec3& p : points.subspan(1)) {
        box.min_corner.x = std::min(box.min_corner.x, p.x);
        box.min_corner.y = std::min(box.min_corner.y, p.y);
        box.min_corner.z = std::min(box.min_corner.z, p.z);
        box.max_corner.x = std::max(box.max_corner.x, p.x);
        box.max_corner.y = std::max(box.max_corner.y, p.y);
        box.max_corner.z = std::max(box.max_corner.z, p.z);
    }
    return box;
}

bool PointCloud::consistent() const {
    const std::size_t n = positions.size();
    if (colors.size() != n) {
        return false;
    }
    if (!normals.empty() && normals.size() != n) {
        return false;
    }
    for (const Vec3& c : colors) {
        if (c.x < 0.0 || c.x > 1.0 || c.y < 0.0 || c.y > 1.0 || c.z < 0.0 || c.z > 1.0) {
            return false;
        }
    }
    for (const Vec3& nrm : normals) {
        if (std::abs(nrm.norm() - 1.0) > 1e-4) {
            return false;
        }
    }
    return true;
}

PointCloud crop(const PointCloud& cloud, const Aabb& box) {
    PointCloud out;
    for (std::size_t i = 0; i < cloud.positions.size(); ++i) {
        if (!box.contains(cloud.positions[i])) {
            continue;
        }
        out.positions.push_back(cloud.positions[i]);
        if (i < cloud.colors.size()) {
            out.colors.push_back(cloud.colors[i]);
        }
        if (cloud.has_normals()) {
            out.normals.push_back(cloud.normals[i]);
        }
    }
    return out;
}

}  // namespace vg3d
