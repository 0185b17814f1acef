#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vekit/errors.hpp"
#include "vekit/math.hpp"

namespace vekit {

// Plain-text indexed triangle mesh: lines "v x y z" (meters) and
// "f i j k" (1-based vertex indices). Blank lines and '#' comments allowed.
struct TriangleMeshData {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;  // 0-based after load
    int degenerate_dropped = 0;

    AABB bounds() const {
        AABB box = AABB::empty();
        for (const Vec3& v : vertices) box.expand(v);
        return box;
    }
};

struct MeshFormatError : Error {
    int line;
    MeshFormatError(int line_, const std::string& msg)
        : Error("mesh:" + std::to_string(line_) + ": " + msg), line(line_) {}
};

struct EmptyMeshError : Error {
    explicit EmptyMeshError(const std::string& msg) : Error(msg) {}
};

inline TriangleMeshData parse_mesh_asset(std::string_view text) {
    TriangleMeshData mesh;
    std::vector<std::array<long, 3>> faces;
    std::vector<int> face_lines;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        std::string_view line = text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        std::istringstream ss{std::string(line)};
        std::string tag;
        if (!(ss >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            std::string sx, sy, sz, extra;
            if (!(ss >> sx >> sy >> sz) || (ss >> extra))
                throw MeshFormatError(line_no, "vertex line needs exactly three coordinates");
            Vec3 v;
            if (!parse_double(sx, v.x) || !parse_double(sy, v.y) || !parse_double(sz, v.z))
                throw MeshFormatError(line_no, "non-numeric vertex coordinate");
            if (!is_finite(v)) throw MeshFormatError(line_no, "non-finite vertex coordinate");
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::string si, sj, sk, extra;
            if (!(ss >> si >> sj >> sk) || (ss >> extra))
                throw MeshFormatError(line_no, "face line needs exactly three indices");
            std::array<long, 3> f{};
            if (!parse_long(si, f[0]) || !parse_long(sj, f[1]) || !parse_long(sk, f[2]))
                throw MeshFormatError(line_no, "non-numeric face index");
            faces.push_back(f);
            face_lines.push_back(line_no);
        } else {
            throw MeshFormatError(line_no, "unknown line tag '" + tag + "'");
        }
    }

    const long n = static_cast<long>(mesh.vertices.size());
    for (std::size_t i = 0; i < faces.size(); ++i) {
        for (long idx : faces[i]) {
            if (idx < 1 || idx > n)
                throw MeshFormatError(face_lines[i], "face index " + std::to_string(idx) + " out of range");
        }
        std::array<int, 3> tri{static_cast<int>(faces[i][0] - 1), static_cast<int>(faces[i][1] - 1),
                               static_cast<int>(faces[i][2] - 1)};
        const Vec3& a = mesh.vertices[tri[0]];
        const Vec3& b = mesh.vertices[tri[1]];
        const Vec3& c = mesh.vertices[tri[2]];
        double area = 0.5 * length(cross(b - a, c - a));
        if (area < 1e-12) {
            ++mesh.degenerate_dropped;
            continue;
        }
        mesh.triangles.push_back(tri);
    }

    if (mesh.vertices.size() < 3) throw EmptyMeshError("mesh has fewer than three vertices");
    if (mesh.triangles.empty()) throw EmptyMeshError("mesh has no valid triangles");
    return mesh;
}

inline TriangleMeshData load_mesh_asset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open mesh asset '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed reading mesh asset '" + path.string() + "'");
    return parse_mesh_asset(buf.str());
}

}  // namespace vekit
