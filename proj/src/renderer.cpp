#include "vg3d/renderer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace vg3d {

std::vector<CameraPose> make_cameras(const Aabb& box, int n_views, double elevation_deg,
                                     double distance_m, double vertical_fov_deg) {
    if (!box.valid()) {
        throw std::invalid_argument("make_cameras: invalid box");
    }
    if (box.extent().norm() == 0.0) {
        throw std::invalid_argument("make_cameras: degenerate box (zero diagonal)");
    }
    if (n_views < 1) {
        throw std::invalid_argument("make_cameras: need at least one view");
    }
    if (distance_m <= 0.0) {
        throw std::invalid_argument("make_cameras: distance must be positive");
    }
    if (elevation_deg <= -90.0 || elevation_deg >= 90.0) {
        // At the poles the +z up vector becomes parallel to the view direction.
        throw std::invalid_argument("make_cameras: elevation must lie in (-90, 90)");
    }
    const Vec3 center = box.center();
    const double elev = elevation_deg * std::numbers::pi / 180.0;
    std::vector<CameraPose> poses;
    poses.reserve(std::size_t(n_views));
    for (int k = 0; k < n_views; ++k) {
        const double azim = (360.0 / n_views) * k * std::numbers::pi / 180.0;
        CameraPose pose;
        pose.eye = center + Vec3{std::cos(elev) * std::cos(azim), std::cos(elev) * std::sin(azim),
                                 std::sin(elev)} *
                                distance_m;
        pose.target = center;
        pose.up = {0.0, 0.0, 1.0};
        pose.vertical_fov_deg = vertical_fov_deg;
        poses.push_back(pose);
    }
    return poses;
}

namespace {

constexpr double kNearClip = 1e-6;

struct ViewBasis {
    Vec3 eye;
    Vec3 right;
    Vec3 up;
    Vec3 forward;
    double focal_px = 0.0;
};

ViewBasis make_basis(const CameraPose& camera, int size_px) {
    ViewBasis b;
    b.eye = camera.eye;
    b.forward = (camera.target - camera.eye).normalized();
    const Vec3 side = b.forward.cross(camera.up);
    if (side.norm() == 0.0) {
        throw std::invalid_argument("render: up vector parallel to view direction");
    }
    b.right = side.normalized();
    b.up = b.right.cross(b.forward);
    const double fov = camera.vertical_fov_deg * std::numbers::pi / 180.0;
    b.focal_px = (double(size_px) / 2.0) / std::tan(fov / 2.0);
    return b;
}

std::uint8_t to_byte(double channel) {
    const double v = std::round(channel * 255.0);
    return std::uint8_t(std::clamp(v, 0.0, 255.0));
}

}  // namespace

ImageBuffer render(const PointCloud& cloud, const CameraPose& camera, double point_radius_m,
                   int size_px, std::array<std::uint8_t, 3> background) {
    if (size_px < 1) {
        throw std::invalid_argument("render: image size must be positive");
    }
    ImageBuffer img;
    img.width = size_px;
    img.height = size_px;
    img.rgb.resize(std::size_t(size_px) * size_px * 3);
    for (std::size_t i = 0; i < img.rgb.size(); i += 3) {
        img.rgb[i] = background[0];
        img.rgb[i + 1] = background[1];
        img.rgb[i + 2] = background[2];
    }
    img.depth.assign(std::size_t(size_px) * size_px, std::numeric_limits<double>::infinity());
    if (cloud.empty()) {
        return img;
    }

    const ViewBasis basis = make_basis(camera, size_px);
    const double half = double(size_px) / 2.0;
    for (std::size_t p = 0; p < cloud.positions.size(); ++p) {
        const Vec3 rel = cloud.positions[p] - basis.eye;
        const double zv = basis.forward.dot(rel);
        if (zv <= kNearClip) {
            continue;  // behind or on the camera plane
        }
        const double px = half + basis.focal_px * basis.right.dot(rel) / zv;
        const double py = half - basis.focal_px * basis.up.dot(rel) / zv;
        const double pr = std::max(1.0, basis.focal_px * point_radius_m / zv);

        const int x0 = std::max(0, int(std::floor(px - pr)));
        const int x1 = std::min(size_px - 1, int(std::ceil(px + pr)));
        const int y0 = std::max(0, int(std::floor(py - pr)));
        const int y1 = std::min(size_px - 1, int(std::ceil(py + pr)));
        if (x0 > x1 || y0 > y1) {
            continue;
        }
        const Vec3 color = p < cloud.colors.size() ? cloud.colors[p] : Vec3{0.5, 0.5, 0.5};
        const std::uint8_t r = to_byte(color.x);
        const std::uint8_t g = to_byte(color.y);
        const std::uint8_t b = to_byte(color.z);
        for (int iy = y0; iy <= y1; ++iy) {
            const double dy = iy + 0.5 - py;
            for (int ix = x0; ix <= x1; ++ix) {
                const double dx = ix + 0.5 - px;
                if (dx * dx + dy * dy > pr * pr) {
                    continue;
                }
                const std::size_t idx = std::size_t(iy) * size_px + ix;
                if (zv < img.depth[idx]) {
                    img.depth[idx] = zv;
                    img.rgb[idx * 3] = r;
                    img.rgb[idx * 3 + 1] = g;
                    img.rgb[idx * 3 + 2] = b;
                }
            }
        }
    }
    return img;
}

std::vector<ImageBuffer> render_proposal(const PointCloud& scene_cloud, const Aabb& box,
                                         const RenderConfig& config) {
    const std::vector<CameraPose> cameras = make_cameras(
        box, config.n_views, config.elevation_deg, config.distance_m, config.vertical_fov_deg);
    const PointCloud cropped = crop(scene_cloud, box);
    std::vector<ImageBuffer> views;
    views.reserve(cameras.size());
    for (const CameraPose& camera : cameras) {
        views.push_back(
            render(cropped, camera, config.point_radius_m, config.size_px, config.background));
    }
    return views;
}

void write_image(const ImageBuffer& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.rgb.data()), std::streamsize(img.rgb.size()));
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

namespace {

enum class PlyType { Char, Uchar, Short, Ushort, Int, Uint, Float, Double };

std::size_t ply_type_size(PlyType t) {
    switch (t) {
        case PlyType::Char:
        case PlyType::Uchar: return 1;
        case PlyType::Short:
        case PlyType::Ushort: return 2;
        case PlyType::Int:
        case PlyType::Uint:
        case PlyType::Float: return 4;
        case PlyType::Double: return 8;
    }
    return 0;
}

PlyType parse_ply_type(const std::string& name) {
    if (name == "char" || name == "int8") return PlyType::Char;
    if (name == "uchar" || name == "uint8") return PlyType::Uchar;
    if (name == "short" || name == "int16") return PlyType::Short;
    if (name == "ushort" || name == "uint16") return PlyType::Ushort;
    if (name == "int" || name == "int32") return PlyType::Int;
    if (name == "uint" || name == "uint32") return PlyType::Uint;
    if (name == "float" || name == "float32") return PlyType::Float;
    if (name == "double" || name == "float64") return PlyType::Double;
    throw std::runtime_error("unsupported PLY property type: " + name);
}

double decode_ply_value(PlyType t, const char* bytes) {
    switch (t) {
        case PlyType::Char: {
            std::int8_t v;
            std::memcpy(&v, bytes, 1);
            return v;
        }
        case PlyType::Uchar: {
            std::uint8_t v;
            std::memcpy(&v, bytes, 1);
            return v;
        }
        case PlyType::Short: {
            std::int16_t v;
            std::memcpy(&v, bytes, 2);
            return v;
        }
        case PlyType::Ushort: {
            std::uint16_t v;
            std::memcpy(&v, bytes, 2);
            return v;
        }
        case PlyType::Int: {
            std::int32_t v;
            std::memcpy(&v, bytes, 4);
            return v;
        }
        case PlyType::Uint: {
            std::uint32_t v;
            std::memcpy(&v, bytes, 4);
            return v;
        }
        case PlyType::Float: {
            float v;
            std::memcpy(&v, bytes, 4);
            return v;
        }
        case PlyType::Double: {
            double v;
            std::memcpy(&v, bytes, 8);
            return v;
        }
    }
    return 0.0;
}

struct PlyProperty {
    PlyType type = PlyType::Float;
    std::string name;
    bool is_list = false;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;

    bool fixed_size() const {
        for (const PlyProperty& p : properties) {
            if (p.is_list) {
                return false;
            }
        }
        return true;
    }
    std::size_t record_size() const {
        std::size_t total = 0;
        for (const PlyProperty& p : properties) {
            total += ply_type_size(p.type);
        }
        return total;
    }
};

// Color properties may be uchar (0..255) or float (already normalized).
double normalize_color(PlyType t, double raw) {
    switch (t) {
        case PlyType::Float:
        case PlyType::Double: return std::clamp(raw, 0.0, 1.0);
        default: return std::clamp(raw / 255.0, 0.0, 1.0);
    }
}

}  // namespace

PointCloud load_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open PLY: " + path);
    }
    std::string line;
    if (!std::getline(in, line) || (line != "ply" && line != "ply\r")) {
        throw std::runtime_error("not a PLY file: " + path);
    }
    bool binary = false;
    std::vector<PlyElement> elements;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "comment" || word == "obj_info" || word.empty()) {
            continue;
        }
        if (word == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii") {
                binary = false;
            } else if (fmt == "binary_little_endian") {
                binary = true;
            } else {
                throw std::runtime_error("unsupported PLY format: " + fmt);
            }
        } else if (word == "element") {
            PlyElement e;
            ls >> e.name >> e.count;
            elements.push_back(std::move(e));
        } else if (word == "property") {
            if (elements.empty()) {
                throw std::runtime_error("PLY property before element");
            }
            std::string type_name;
            ls >> type_name;
            PlyProperty p;
            if (type_name == "list") {
                std::string count_type, value_type;
                ls >> count_type >> value_type >> p.name;
                p.is_list = true;
            } else {
                p.type = parse_ply_type(type_name);
                ls >> p.name;
            }
            elements.back().properties.push_back(std::move(p));
        } else if (word == "end_header") {
            break;
        } else {
            throw std::runtime_error("unexpected PLY header line: " + line);
        }
    }

    PointCloud cloud;
    for (const PlyElement& element : elements) {
        if (element.name != "vertex") {
            if (element.count == 0) {
                continue;
            }
            // Skip leading non-vertex elements; give up once vertices are read.
            if (!cloud.positions.empty()) {
                break;
            }
            if (!element.fixed_size()) {
                throw std::runtime_error("PLY: list-typed element precedes vertex data");
            }
            if (binary) {
                in.ignore(std::streamsize(element.count * element.record_size()));
            } else {
                for (std::size_t i = 0; i < element.count; ++i) {
                    std::getline(in, line);
                }
            }
            continue;
        }
        if (!element.fixed_size()) {
            throw std::runtime_error("PLY: list properties on vertex element are unsupported");
        }
        int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
        for (std::size_t p = 0; p < element.properties.size(); ++p) {
            const std::string& name = element.properties[p].name;
            if (name == "x") ix = int(p);
            else if (name == "y") iy = int(p);
            else if (name == "z") iz = int(p);
            else if (name == "red" || name == "r") ir = int(p);
            else if (name == "green" || name == "g") ig = int(p);
            else if (name == "blue" || name == "b") ib = int(p);
        }
        if (ix < 0 || iy < 0 || iz < 0) {
            throw std::runtime_error("PLY vertex element lacks x/y/z properties");
        }
        cloud.positions.reserve(element.count);
        cloud.colors.reserve(element.count);
        std::vector<double> values(element.properties.size(), 0.0);
        std::vector<char> buffer(element.record_size());
        for (std::size_t row = 0; row < element.count; ++row) {
            if (binary) {
                in.read(buffer.data(), std::streamsize(buffer.size()));
                if (!in) {
                    throw std::runtime_error("PLY: truncated vertex data");
                }
                std::size_t offset = 0;
                for (std::size_t p = 0; p < element.properties.size(); ++p) {
                    values[p] = decode_ply_value(element.properties[p].type, buffer.data() + offset);
                    offset += ply_type_size(element.properties[p].type);
                }
            } else {
                for (std::size_t p = 0; p < element.properties.size(); ++p) {
                    if (!(in >> values[p])) {
                        throw std::runtime_error("PLY: truncated vertex data");
                    }
                }
            }
            cloud.positions.push_back({values[ix], values[iy], values[iz]});
            if (ir >= 0 && ig >= 0 && ib >= 0) {
                cloud.colors.push_back({normalize_color(element.properties[ir].type, values[ir]),
                                        normalize_color(element.properties[ig].type, values[ig]),
                                        normalize_color(element.properties[ib].type, values[ib])});
            } else {
                cloud.colors.push_back({0.5, 0.5, 0.5});
            }
        }
        if (!binary) {
            std::getline(in, line);  // consume the trailing newline
        }
    }
    return cloud;
}

void write_ply(const PointCloud& cloud, const std::string& path, bool binary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << "ply\n";
    out << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n");
    out << "element vertex " << cloud.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "end_header\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.positions[i];
        const Vec3 c = i < cloud.colors.size() ? cloud.colors[i] : Vec3{0.5, 0.5, 0.5};
        if (binary) {
            const float xyz[3] = {float(p.x), float(p.y), float(p.z)};
            const std::uint8_t rgb[3] = {to_byte(c.x), to_byte(c.y), to_byte(c.z)};
            out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
            out.write(reinterpret_cast<const char*>(rgb), sizeof(rgb));
        } else {
            out << float(p.x) << " " << float(p.y) << " " << float(p.z) << " " << int(to_byte(c.x))
                << " " << int(to_byte(c.y)) << " " << int(to_byte(c.z)) << "\n";
        }
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

}  // namespace vg3d
