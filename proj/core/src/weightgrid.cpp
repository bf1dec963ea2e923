#include "mav/weightgrid.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

#include "mav/parallel.hpp"
#include "mav/rng.hpp"

namespace mav {

namespace {

constexpr char kMagic[8] = {'M', 'A', 'V', 'W', 'G', 'T', '0', '1'};

struct GridShape {
    int R;
    Box3 bounds;
    int J;

    int node(int x, int y, int z) const { return x + R * (y + R * z); }
    size_t nodes() const { return size_t(R) * R * R; }

    // Cell coordinates + trilinear weights for a point (clamped to the grid).
    void locate(const Vec3& p, int cell[3], double frac[3], bool* clamped) const {
        Vec3 e = bounds.extent();
        double coords[3] = {(p.x - bounds.lo.x) / e.x * (R - 1),
                            (p.y - bounds.lo.y) / e.y * (R - 1),
                            (p.z - bounds.lo.z) / e.z * (R - 1)};
        if (clamped) *clamped = false;
        for (int a = 0; a < 3; ++a) {
            if (coords[a] < 0 || coords[a] > R - 1) {
                coords[a] = std::clamp(coords[a], 0.0, double(R - 1));
                if (clamped) *clamped = true;
            }
            cell[a] = std::min(int(coords[a]), R - 2);
            frac[a] = coords[a] - cell[a];
        }
    }
};

// Graph Laplacian with grid-unit stencil: (L w)_j = sum_nbr (w_nbr - w_j).
void apply_laplacian(const GridShape& g, const std::vector<double>& in,
                     std::vector<double>& out) {
    int R = g.R, J = g.J;
    parallel_for(0, g.nodes(), [&](int64_t n) {
        int x = int(n % R), y = int((n / R) % R), z = int(n / (int64_t(R) * R));
        double* dst = out.data() + n * J;
        const double* center = in.data() + n * J;
        int deg = 0;
        for (int j = 0; j < J; ++j) dst[j] = 0;
        auto add = [&](int nbr) {
            const double* src = in.data() + size_t(nbr) * J;
            for (int j = 0; j < J; ++j) dst[j] += src[j];
            ++deg;
        };
        if (x > 0) add(g.node(x - 1, y, z));
        if (x < R - 1) add(g.node(x + 1, y, z));
        if (y > 0) add(g.node(x, y - 1, z));
        if (y < R - 1) add(g.node(x, y + 1, z));
        if (z > 0) add(g.node(x, y, z - 1));
        if (z < R - 1) add(g.node(x, y, z + 1));
        for (int j = 0; j < J; ++j) dst[j] -= deg * center[j];
    });
}

int node_degree(const GridShape& g, int64_t n) {
    int R = g.R;
    int x = int(n % R), y = int((n / R) % R), z = int(n / (int64_t(R) * R));
    return (x > 0) + (x < R - 1) + (y > 0) + (y < R - 1) + (z > 0) + (z < R - 1);
}

}  // namespace

double diffusion_energy(const WeightGrid& grid, const std::vector<double>& node_mass,
                        const std::vector<double>& node_target, double lambda_smooth) {
    GridShape g{grid.resolution, grid.bounds, grid.joint_count};
    std::vector<double> lap(grid.weights.size());
    apply_laplacian(g, grid.weights, lap);
    double energy = 0;
    for (size_t n = 0; n < g.nodes(); ++n) {
        for (int j = 0; j < g.J; ++j) {
            double d = grid.weights[n * g.J + j] - node_target[n * g.J + j];
            energy += node_mass[n] * d * d;
            energy += lambda_smooth * lap[n * g.J + j] * lap[n * g.J + j];
        }
    }
    return energy;
}

WeightGrid diffuse_weights(const TemplateSurface& surface, const DiffusionParams& params,
                           DiffusionReport* report) {
    surface.validate();
    if (params.lambda_surface <= 0 || params.lambda_ring <= 0 || params.lambda_smooth <= 0)
        throw std::invalid_argument("diffuse_weights: lambdas must be positive");

    WeightGrid grid;
    grid.resolution = params.resolution;
    grid.bounds = params.bounds.valid() ? params.bounds : surface.mesh.bounds().dilated(0.1);
    grid.joint_count = surface.joint_count;
    GridShape g{grid.resolution, grid.bounds, grid.joint_count};
    int J = g.J;
    grid.weights.assign(g.nodes() * J, 0.0);

    // Data term: splat template vertices to their 8 cell nodes; the surface
    // gradient term is approximated by also constraining the one-ring of each
    // splatted node (see module notes).
    std::vector<double> mass(g.nodes(), 0.0);
    std::vector<double> target_accum(g.nodes() * J, 0.0);
    auto splat = [&](int node, double amount, const double* wt) {
        mass[node] += amount;
        for (int j = 0; j < J; ++j) target_accum[size_t(node) * J + j] += amount * wt[j];
    };
    int R = g.R;
    for (size_t v = 0; v < surface.mesh.vertices.size(); ++v) {
        const double* wt = surface.surface_weights.data() + v * J;
        int cell[3];
        double frac[3];
        g.locate(surface.mesh.vertices[v], cell, frac, nullptr);
        for (int corner = 0; corner < 8; ++corner) {
            int cx = cell[0] + (corner & 1);
            int cy = cell[1] + ((corner >> 1) & 1);
            int cz = cell[2] + ((corner >> 2) & 1);
            double alpha = ((corner & 1) ? frac[0] : 1 - frac[0]) *
                           (((corner >> 1) & 1) ? frac[1] : 1 - frac[1]) *
                           (((corner >> 2) & 1) ? frac[2] : 1 - frac[2]);
            if (alpha < 1e-12) continue;
            splat(g.node(cx, cy, cz), params.lambda_surface * alpha, wt);
            double ring = params.lambda_ring * alpha / 6.0;
            if (cx > 0) splat(g.node(cx - 1, cy, cz), ring, wt);
            if (cx < R - 1) splat(g.node(cx + 1, cy, cz), ring, wt);
            if (cy > 0) splat(g.node(cx, cy - 1, cz), ring, wt);
            if (cy < R - 1) splat(g.node(cx, cy + 1, cz), ring, wt);
            if (cz > 0) splat(g.node(cx, cy, cz - 1), ring, wt);
            if (cz < R - 1) splat(g.node(cx, cy, cz + 1), ring, wt);
        }
    }
    std::vector<double> target(g.nodes() * J, 0.0);
    for (size_t n = 0; n < g.nodes(); ++n)
        if (mass[n] > 0)
            for (int j = 0; j < J; ++j) target[n * J + j] = target_accum[n * J + j] / mass[n];

    // Warm start: nearest template vertex (subsampled).
    size_t stride = std::max<size_t>(1, surface.mesh.vertices.size() / 2000);
    parallel_for(0, g.nodes(), [&](int64_t n) {
        int x = int(n % R), y = int((n / R) % R), z = int(n / (int64_t(R) * R));
        Vec3 e = grid.bounds.extent();
        Vec3 p{grid.bounds.lo.x + e.x * x / (R - 1), grid.bounds.lo.y + e.y * y / (R - 1),
               grid.bounds.lo.z + e.z * z / (R - 1)};
        size_t best = 0;
        double best_d = 1e30;
        for (size_t v = 0; v < surface.mesh.vertices.size(); v += stride) {
            double d = length_sq(surface.mesh.vertices[v] - p);
            if (d < best_d) { best_d = d; best = v; }
        }
        for (int j = 0; j < J; ++j)
            grid.weights[n * J + j] = surface.surface_weights[best * J + j];
    });

    // Diagonally preconditioned conjugate gradient on the normal equations
    // A w = b with A = 2 mass I + 2 lambda L^2 (SPD) and b = 2 mass target.
    std::vector<double> diag(g.nodes());
    for (size_t n = 0; n < g.nodes(); ++n) {
        double deg = node_degree(g, int64_t(n));
        diag[n] = 2.0 * mass[n] + 2.0 * params.lambda_smooth * (deg * deg + deg);
    }
    auto apply_A = [&](const std::vector<double>& x, std::vector<double>& tmp,
                       std::vector<double>& out) {
        apply_laplacian(g, x, tmp);
        apply_laplacian(g, tmp, out);
        parallel_for(0, g.nodes(), [&](int64_t n) {
            for (int j = 0; j < J; ++j) {
                out[n * J + j] = 2.0 * params.lambda_smooth * out[n * J + j] +
                                 2.0 * mass[n] * x[n * J + j];
            }
        });
    };

    {
        size_t dim = grid.weights.size();
        std::vector<double> tmp(dim), r(dim), z(dim), p(dim), Ap(dim);
        apply_A(grid.weights, tmp, Ap);
        for (size_t n = 0; n < g.nodes(); ++n)
            for (int j = 0; j < J; ++j) {
                size_t i = n * J + j;
                r[i] = 2.0 * mass[n] * target[i] - Ap[i];
            }
        double rz = 0;
        for (size_t i = 0; i < dim; ++i) {
            z[i] = r[i] / diag[i / J];
            rz += r[i] * z[i];
        }
        p = z;

        DiffusionReport local;
        DiffusionReport& rep = report ? *report : local;
        for (int it = 0; it < params.max_iterations; ++it) {
            double res = 0;
            for (double v : r) res = std::max(res, std::abs(v));
            rep.iterations = it + 1;
            rep.residual = res;
            if (report)
                rep.energy_trace.push_back(
                    diffusion_energy(grid, mass, target, params.lambda_smooth));
            if (res < params.residual_tol) {
                rep.converged = true;
                break;
            }
            apply_A(p, tmp, Ap);
            double pAp = 0;
            for (size_t i = 0; i < dim; ++i) pAp += p[i] * Ap[i];
            if (pAp <= 0) break;
            double alpha = rz / pAp;
            for (size_t i = 0; i < dim; ++i) {
                grid.weights[i] += alpha * p[i];
                r[i] -= alpha * Ap[i];
            }
            double rz_new = 0;
            for (size_t i = 0; i < dim; ++i) {
                z[i] = r[i] / diag[i / J];
                rz_new += r[i] * z[i];
            }
            for (size_t i = 0; i < dim; ++i) p[i] = z[i] + (rz_new / rz) * p[i];
            rz = rz_new;
        }
        if (!rep.converged)
            std::fprintf(stderr,
                         "diffuse_weights: not converged after %d iterations "
                         "(residual %.3g); using best iterate\n",
                         rep.iterations, rep.residual);
    }

    // Project back to valid weight rows.
    for (size_t n = 0; n < g.nodes(); ++n) {
        double sum = 0;
        for (int j = 0; j < J; ++j) {
            double& w = grid.weights[n * J + j];
            w = std::max(w, 0.0);
            sum += w;
        }
        if (sum <= 1e-12) {
            for (int j = 0; j < J; ++j) grid.weights[n * J + j] = 1.0 / J;
        } else {
            for (int j = 0; j < J; ++j) grid.weights[n * J + j] /= sum;
        }
    }
    return grid;
}

std::vector<double> query_weights(const WeightGrid& grid, const Vec3& point, bool* clamped) {
    GridShape g{grid.resolution, grid.bounds, grid.joint_count};
    int cell[3];
    double frac[3];
    g.locate(point, cell, frac, clamped);
    std::vector<double> out(grid.joint_count, 0.0);
    for (int corner = 0; corner < 8; ++corner) {
        int cx = cell[0] + (corner & 1);
        int cy = cell[1] + ((corner >> 1) & 1);
        int cz = cell[2] + ((corner >> 2) & 1);
        double alpha = ((corner & 1) ? frac[0] : 1 - frac[0]) *
                       (((corner >> 1) & 1) ? frac[1] : 1 - frac[1]) *
                       (((corner >> 2) & 1) ? frac[2] : 1 - frac[2]);
        const double* row = grid.row(g.node(cx, cy, cz));
        for (int j = 0; j < grid.joint_count; ++j) out[j] += alpha * row[j];
    }
    double sum = 0;
    for (double w : out) sum += w;
    for (double& w : out) w /= sum;
    return out;
}

std::vector<Vec3> skin_mesh(const std::vector<Vec3>& canonical_vertices,
                            const WeightGrid& grid,
                            const std::vector<RigidTransform>& transforms) {
    if (int(transforms.size()) != grid.joint_count)
        throw std::invalid_argument("skin_mesh: transform count mismatch");
    std::vector<Vec3> posed(canonical_vertices.size());
    parallel_for(0, int64_t(canonical_vertices.size()), [&](int64_t n) {
        std::vector<double> w = query_weights(grid, canonical_vertices[n]);
        posed[n] = blend_transforms(w.data(), transforms).apply(canonical_vertices[n]);
    });
    return posed;
}

void save_weight_grid(const std::string& path, const WeightGrid& grid) {
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "wb"), std::fclose);
    if (!f) throw std::runtime_error("save_weight_grid: cannot open " + path);
    std::fwrite(kMagic, 1, 8, f.get());
    int32_t header[2] = {grid.resolution, grid.joint_count};
    std::fwrite(header, 4, 2, f.get());
    double box[6] = {grid.bounds.lo.x, grid.bounds.lo.y, grid.bounds.lo.z,
                     grid.bounds.hi.x, grid.bounds.hi.y, grid.bounds.hi.z};
    std::fwrite(box, 8, 6, f.get());
    std::vector<float> vals(grid.weights.begin(), grid.weights.end());
    if (std::fwrite(vals.data(), 4, vals.size(), f.get()) != vals.size())
        throw std::runtime_error("save_weight_grid: short write to " + path);
}

WeightGrid load_weight_grid(const std::string& path) {
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "rb"), std::fclose);
    if (!f) throw std::runtime_error("load_weight_grid: cannot open " + path);
    char magic[8];
    if (std::fread(magic, 1, 8, f.get()) != 8 || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("load_weight_grid: bad magic in " + path);
    int32_t header[2];
    double box[6];
    if (std::fread(header, 4, 2, f.get()) != 2 || std::fread(box, 8, 6, f.get()) != 6)
        throw std::runtime_error("load_weight_grid: truncated header in " + path);
    WeightGrid grid;
    grid.resolution = header[0];
    grid.joint_count = header[1];
    grid.bounds = {{box[0], box[1], box[2]}, {box[3], box[4], box[5]}};
    std::vector<float> vals(grid.node_count() * grid.joint_count);
    if (std::fread(vals.data(), 4, vals.size(), f.get()) != vals.size())
        throw std::runtime_error("load_weight_grid: truncated values in " + path);
    grid.weights.assign(vals.begin(), vals.end());
    return grid;
}

}  // namespace mav
