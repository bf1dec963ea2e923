#pragma once

#include <array>
#include <vector>

#include "mav/sdfgrid.hpp"
#include "mav/vecmath.hpp"

namespace mav {

// Zero-isosurface triangle mesh extracted by marching tetrahedra. Every vertex
// lies on a grid edge whose endpoint SDF signs differ; the provenance record
// keeps the differentiable link back to the field values.
struct ExtractedMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;

    struct Provenance {
        int grid_a = 0, grid_b = 0;  // grid vertex indices, a < b
        double s_a = 0, s_b = 0;     // field values at extraction time
        double t = 0;                // vertex = p_a + t * (p_b - p_a)
    };
    std::vector<Provenance> provenance;

    bool empty() const { return faces.empty(); }
};

// Deterministic extraction; triangle winding is chosen so normals point toward
// positive SDF. Exact zeros at grid vertices are perturbed by +1e-10 before
// sign classification.
ExtractedMesh marching_tetrahedra(const SdfGrid& sdf);

// Accumulates dL/d(field values) from dL/d(mesh vertices), holding the sign
// pattern (topology) fixed:
//   dv/ds_a = (p_b - p_a) * (-s_b) / (s_a - s_b)^2
//   dv/ds_b = (p_b - p_a) *   s_a  / (s_a - s_b)^2
void mt_backward(const ExtractedMesh& mesh, const TetGrid& grid,
                 const std::vector<Vec3>& vertex_grads, std::vector<double>& value_grads);

}  // namespace mav
