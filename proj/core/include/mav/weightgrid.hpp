#pragma once

#include <string>
#include <vector>

#include "mav/marching_tet.hpp"
#include "mav/skeleton.hpp"
#include "mav/vecmath.hpp"

namespace mav {

// Cached diffused skinning weight field on a regular grid. Rows are
// nonnegative and sum to one.
struct WeightGrid {
    int resolution = 0;
    Box3 bounds;
    int joint_count = 0;
    std::vector<double> weights;  // row-major, node-major: [#nodes][J]

    int node_index(int x, int y, int z) const {
        return x + resolution * (y + resolution * z);
    }
    size_t node_count() const {
        return size_t(resolution) * resolution * resolution;
    }
    const double* row(int node) const { return weights.data() + size_t(node) * joint_count; }
    double* row(int node) { return weights.data() + size_t(node) * joint_count; }
};

struct DiffusionParams {
    int resolution = 32;
    Box3 bounds;               // default: template bounds dilated 10 cm
    double lambda_surface = 100.0;  // data term weight
    double lambda_ring = 25.0;      // one-ring surface constraint (gradient-term stand-in)
    double lambda_smooth = 1.0;     // squared-Laplacian smoothness
    int max_iterations = 5000;
    double residual_tol = 1e-6;
};

struct DiffusionReport {
    int iterations = 0;
    double residual = 0;
    bool converged = false;
    std::vector<double> energy_trace;  // discretized energy per iteration
};

// Spreads template surface weights into the volume by minimizing the
// discretized diffusion energy with damped Jacobi iterations (safe damping from
// a power-iteration bound). Nodes are initialized from the nearest template
// vertex; after convergence rows are clamped to >= 0 and renormalized.
WeightGrid diffuse_weights(const TemplateSurface& surface, const DiffusionParams& params,
                           DiffusionReport* report = nullptr);

// The discretized energy the solver minimizes (exposed for the monotonicity
// property test).
double diffusion_energy(const WeightGrid& grid, const std::vector<double>& node_mass,
                        const std::vector<double>& node_target, double lambda_smooth);

// Trilinear interpolation followed by renormalization. Points outside the
// bounds are clamped to the nearest cell; `clamped` (optional) reports it.
std::vector<double> query_weights(const WeightGrid& grid, const Vec3& point,
                                  bool* clamped = nullptr);

// query_weights + LBS per canonical vertex.
std::vector<Vec3> skin_mesh(const std::vector<Vec3>& canonical_vertices,
                            const WeightGrid& grid,
                            const std::vector<RigidTransform>& transforms);

// Binary checkpoint: header (magic, R, J, bounds) + float32 rows, x-fastest.
void save_weight_grid(const std::string& path, const WeightGrid& grid);
WeightGrid load_weight_grid(const std::string& path);

}  // namespace mav
