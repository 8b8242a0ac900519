#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vg3d {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    bool operator==(const Vec3& o) const = default;

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const;
    Vec3 normalized() const;  // throws std::invalid_argument on zero vector
};

// Axis-aligned box, componentwise min/max corners in meters.
struct Aabb {
    Vec3 min_corner;
    Vec3 max_corner;

    bool valid() const {
        return min_corner.x <= max_corner.x && min_corner.y <= max_corner.y &&
               min_corner.z <= max_corner.z;
    }
    Vec3 center() const { return (min_corner + max_corner) * 0.5; }
    Vec3 extent() const { return max_corner - min_corner; }
    // Closed-box membership: boundary points are inside.
    bool contains(const Vec3& p) const {
        return p.x >= min_corner.x && p.x <= max_corner.x && p.y >= min_corner.y &&
               p.y <= max_corner.y && p.z >= min_corner.z && p.z <= max_corner.z;
    }
    bool operator==(const Aabb& o) const = default;
};

double volume(const Aabb& box);

// |a∩b| / |a∪b| in [0,1]. Defined 0 when the union has zero volume, so two
// coincident degenerate boxes never count as a detection.
double iou(const Aabb& a, const Aabb& b);

// Tight hull over the points. Throws std::invalid_argument on an empty set.
Aabb aabb_from_points(std::span<const Vec3> points);

// Colored point set; colors are per-channel in [0,1], normals optional.
struct PointCloud {
    std::vector<Vec3> positions;
    std::vector<Vec3> colors;
    std::vector<Vec3> normals;  // empty, or one unit vector per point

    std::size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }
    bool has_normals() const { return !normals.empty(); }
    // Checks row-count agreement, color range, and normal unit length (1e-4).
    bool consistent() const;
};

// Points inside the closed box, order preserved, with their colors/normals.
PointCloud crop(const PointCloud& cloud, const Aabb& box);

}  // namespace vg3d
