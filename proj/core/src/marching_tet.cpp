#include "mav/marching_tet.hpp"

#include <stdexcept>
#include <unordered_map>

namespace mav {

namespace {

// Even permutations of (0,1,2,3) placing the distinguished vertex first; they
// preserve the positive orientation of the tet.
constexpr int kOnePerm[4][4] = {
    {0, 1, 2, 3}, {1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}};

// Even permutations placing an inside pair first, indexed by the pair.
constexpr int kTwoPerm[4][4][4] = {
    // [i][j] valid for i < j only
    {{0}, {0, 1, 2, 3}, {0, 2, 3, 1}, {0, 3, 1, 2}},
    {{0}, {0}, {1, 2, 0, 3}, {1, 3, 2, 0}},
    {{0}, {0}, {0}, {2, 3, 0, 1}},
    {{0}, {0}, {0}, {0}},
};

}  // namespace

ExtractedMesh marching_tetrahedra(const SdfGrid& sdf) {
    const TetGrid& grid = sdf.grid;
    if (sdf.values.size() != grid.vertices.size())
        throw std::invalid_argument("marching_tetrahedra: value count mismatch");

    // Perturb exact zeros so no isosurface vertex coincides with a grid vertex.
    std::vector<double> s(sdf.values);
    for (double& v : s)
        if (v == 0.0) v = 1e-10;

    ExtractedMesh mesh;
    std::unordered_map<uint64_t, int> edge_vertex;

    auto vertex_on_edge = [&](int a, int b) -> int {
        if (a > b) std::swap(a, b);
        uint64_t key = (uint64_t(uint32_t(a)) << 32) | uint32_t(b);
        auto it = edge_vertex.find(key);
        if (it != edge_vertex.end()) return it->second;
        double sa = s[a], sb = s[b];
        double t = sa / (sa - sb);
        int idx = int(mesh.vertices.size());
        mesh.vertices.push_back(grid.vertices[a] + (grid.vertices[b] - grid.vertices[a]) * t);
        mesh.provenance.push_back({a, b, sa, sb, t});
        edge_vertex.emplace(key, idx);
        return idx;
    };

    for (const auto& tet : grid.tets) {
        int inside[4], n_inside = 0;
        for (int i = 0; i < 4; ++i) inside[i] = s[tet[i]] < 0 ? 1 : 0;
        for (int i = 0; i < 4; ++i) n_inside += inside[i];
        if (n_inside == 0 || n_inside == 4) continue;

        if (n_inside == 1 || n_inside == 3) {
            int k = 0;
            int want = n_inside == 1 ? 1 : 0;
            while (inside[k] != want) ++k;
            const int* p = kOnePerm[k];
            int a = tet[p[0]], b = tet[p[1]], c = tet[p[2]], d = tet[p[3]];
            int vab = vertex_on_edge(a, b);
            int vac = vertex_on_edge(a, c);
            int vad = vertex_on_edge(a, d);
            if (n_inside == 1)
                mesh.faces.push_back({vab, vac, vad});
            else
                mesh.faces.push_back({vab, vad, vac});
        } else {
            int i = 0;
            while (!inside[i]) ++i;
            int j = i + 1;
            while (!inside[j]) ++j;
            const int* p = kTwoPerm[i][j];
            int a = tet[p[0]], b = tet[p[1]], c = tet[p[2]], d = tet[p[3]];
            int vac = vertex_on_edge(a, c);
            int vad = vertex_on_edge(a, d);
            int vbd = vertex_on_edge(b, d);
            int vbc = vertex_on_edge(b, c);
            mesh.faces.push_back({vac, vad, vbd});
            mesh.faces.push_back({vac, vbd, vbc});
        }
    }
    return mesh;
}

void mt_backward(const ExtractedMesh& mesh, const TetGrid& grid,
                 const std::vector<Vec3>& vertex_grads, std::vector<double>& value_grads) {
    if (mesh.provenance.size() != mesh.vertices.size())
        throw std::invalid_argument("mt_backward: provenance missing");
    if (vertex_grads.size() != mesh.vertices.size())
        throw std::invalid_argument("mt_backward: gradient count mismatch");
    for (size_t n = 0; n < mesh.vertices.size(); ++n) {
        const auto& prov = mesh.provenance[n];
        Vec3 edge = grid.vertices[prov.grid_b] - grid.vertices[prov.grid_a];
        double gdot = dot(vertex_grads[n], edge);
        double denom = prov.s_a - prov.s_b;
        value_grads[prov.grid_a] += gdot * (-prov.s_b) / (denom * denom);
        value_grads[prov.grid_b] += gdot * prov.s_a / (denom * denom);
    }
}

}  // namespace mav
