#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vg3d/geometry.hpp"

namespace vg3d {

struct CameraPose {
    Vec3 eye;
    Vec3 target;
    Vec3 up{0.0, 0.0, 1.0};
    double vertical_fov_deg = 60.0;
};

struct RenderConfig {
    int n_views = 3;
    double elevation_deg = 45.0;
    double distance_m = 1.0;
    double point_radius_m = 0.025;
    int size_px = 224;
    double vertical_fov_deg = 60.0;
    std::array<std::uint8_t, 3> background{128, 128, 128};
};

struct ImageBuffer {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel
    std::vector<double> depth;      // camera-space depth, +inf where empty

    const std::uint8_t* pixel(int x, int y) const { return &rgb[(std::size_t(y) * width + x) * 3]; }
    double depth_at(int x, int y) const { return depth[std::size_t(y) * width + x]; }
    bool operator==(const ImageBuffer& o) const = default;
};

// Poses on a ring around the box center: azimuths k*(360/n_views) degrees,
// eyes at the given distance and elevation, aimed at the center, up = +z.
// Throws on a degenerate box (zero diagonal).
std::vector<CameraPose> make_cameras(const Aabb& box, int n_views = 3, double elevation_deg = 45.0,
                                     double distance_m = 1.0, double vertical_fov_deg = 60.0);

// Perspective point splatting with a z-buffer. Each point becomes a filled
// disc; the projected radius is the world radius scaled by focal/depth,
// clamped to at least one pixel. Nearest depth wins per pixel. Pure and
// deterministic: identical inputs give byte-identical buffers.
ImageBuffer render(const PointCloud& cloud, const CameraPose& camera,
                   double point_radius_m = 0.025, int size_px = 224,
                   std::array<std::uint8_t, 3> background = {128, 128, 128});

// crop(scene, box), then one render per make_cameras pose.
std::vector<ImageBuffer> render_proposal(const PointCloud& scene_cloud, const Aabb& box,
                                         const RenderConfig& config = {});

// Binary PPM (P6, maxval 255). Throws std::runtime_error on I/O failure.
void write_image(const ImageBuffer& img, const std::string& path);

// PLY point clouds, ASCII or binary little-endian, properties x,y,z and
// red,green,blue; unknown properties are skipped.
PointCloud load_ply(const std::string& path);

void write_ply(const PointCloud& cloud, const std::string& path, bool binary = true);

}  // namespace vg3d
