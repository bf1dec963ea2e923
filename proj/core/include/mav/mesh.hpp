#pragma once

#include <array>
#include <string>
#include <vector>

#include "mav/vecmath.hpp"

namespace mav {

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;

    Box3 bounds() const {
        Box3 b;
        for (const Vec3& v : vertices) b.expand(v);
        return b;
    }
};

// Area-weighted vertex normals: per vertex the normalized sum of adjacent face
// cross products. Faces with near-zero area contribute nothing.
std::vector<Vec3> vertex_normals(const TriMesh& mesh);

// Adjoint of vertex_normals: given dL/d(normalized vertex normal), accumulates
// dL/d(vertex position) into vertex_grads. Needs the unnormalized sums, so it
// recomputes them.
void vertex_normals_backward(const TriMesh& mesh,
                             const std::vector<Vec3>& normal_grads,
                             std::vector<Vec3>& vertex_grads);

// True when every edge is shared by exactly two faces.
bool is_watertight(const TriMesh& mesh);

// V - E + F.
long euler_characteristic(const TriMesh& mesh);

void write_obj(const std::string& path, const TriMesh& mesh);

// ASCII PLY. `vertex_weights` (optional, row-major #vertices x J) round-trips
// through per-vertex float properties w0..w{J-1}.
void write_ply(const std::string& path, const TriMesh& mesh,
               const std::vector<double>* vertex_weights = nullptr, int joint_count = 0);
TriMesh read_ply(const std::string& path, std::vector<double>* vertex_weights = nullptr,
                 int* joint_count = nullptr);

}  // namespace mav
