#include "mav/mesh.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mav {

std::vector<Vec3> vertex_normals(const TriMesh& mesh) {
    std::vector<Vec3> accum(mesh.vertices.size());
    for (const auto& f : mesh.faces) {
        Vec3 c = cross(mesh.vertices[f[1]] - mesh.vertices[f[0]],
                       mesh.vertices[f[2]] - mesh.vertices[f[0]]);
        accum[f[0]] += c;
        accum[f[1]] += c;
        accum[f[2]] += c;
    }
    for (Vec3& n : accum) {
        double len = length(n);
        n = len > 1e-20 ? n / len : Vec3{0, 0, 1};
    }
    return accum;
}

void vertex_normals_backward(const TriMesh& mesh,
                             const std::vector<Vec3>& normal_grads,
                             std::vector<Vec3>& vertex_grads) {
    // Recompute unnormalized sums.
    std::vector<Vec3> accum(mesh.vertices.size());
    for (const auto& f : mesh.faces) {
        Vec3 c = cross(mesh.vertices[f[1]] - mesh.vertices[f[0]],
                       mesh.vertices[f[2]] - mesh.vertices[f[0]]);
        accum[f[0]] += c;
        accum[f[1]] += c;
        accum[f[2]] += c;
    }
    // dL/d(unnormalized sum) through the normalization.
    std::vector<Vec3> sum_grads(mesh.vertices.size());
    for (size_t i = 0; i < accum.size(); ++i) {
        double len = length(accum[i]);
        if (len <= 1e-20) continue;
        Vec3 n = accum[i] / len;
        Vec3 g = normal_grads[i];
        sum_grads[i] = (g - n * dot(n, g)) / len;
    }
    // Distribute through the per-face cross products.
    // For c = cross(a, b): dL/da = b x g, dL/db = g x a.
    for (const auto& f : mesh.faces) {
        Vec3 a = mesh.vertices[f[1]] - mesh.vertices[f[0]];
        Vec3 b = mesh.vertices[f[2]] - mesh.vertices[f[0]];
        Vec3 g = sum_grads[f[0]] + sum_grads[f[1]] + sum_grads[f[2]];
        Vec3 ga = cross(b, g);
        Vec3 gb = cross(g, a);
        vertex_grads[f[1]] += ga;
        vertex_grads[f[2]] += gb;
        vertex_grads[f[0]] -= ga + gb;
    }
}

bool is_watertight(const TriMesh& mesh) {
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& f : mesh.faces) {
        for (int e = 0; e < 3; ++e) {
            int a = f[e], b = f[(e + 1) % 3];
            edge_count[{std::min(a, b), std::max(a, b)}]++;
        }
    }
    for (const auto& [edge, count] : edge_count)
        if (count != 2) return false;
    return !mesh.faces.empty();
}

long euler_characteristic(const TriMesh& mesh) {
    std::map<std::pair<int, int>, int> edges;
    for (const auto& f : mesh.faces)
        for (int e = 0; e < 3; ++e) {
            int a = f[e], b = f[(e + 1) % 3];
            edges[{std::min(a, b), std::max(a, b)}] = 1;
        }
    return long(mesh.vertices.size()) - long(edges.size()) + long(mesh.faces.size());
}

void write_obj(const std::string& path, const TriMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_obj: cannot open " + path);
    for (const Vec3& v : mesh.vertices)
        out << "v " << v.x << " " << v.y << " " << v.z << "\n";
    for (const auto& f : mesh.faces)
        out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
}

void write_ply(const std::string& path, const TriMesh& mesh,
               const std::vector<double>* vertex_weights, int joint_count) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_ply: cannot open " + path);
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << mesh.vertices.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    if (vertex_weights)
        for (int j = 0; j < joint_count; ++j) out << "property float w" << j << "\n";
    out << "element face " << mesh.faces.size() << "\n";
    out << "property list uchar int vertex_indices\n";
    out << "end_header\n";
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Vec3& v = mesh.vertices[i];
        out << v.x << " " << v.y << " " << v.z;
        if (vertex_weights)
            for (int j = 0; j < joint_count; ++j)
                out << " " << (*vertex_weights)[i * joint_count + j];
        out << "\n";
    }
    for (const auto& f : mesh.faces)
        out << "3 " << f[0] << " " << f[1] << " " << f[2] << "\n";
}

TriMesh read_ply(const std::string& path, std::vector<double>* vertex_weights,
                 int* joint_count) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_ply: cannot open " + path);
    std::string line;
    std::getline(in, line);
    if (line != "ply") throw std::runtime_error("read_ply: not a PLY file: " + path);

    size_t n_verts = 0, n_faces = 0;
    std::vector<std::string> vertex_props;
    std::string current_element;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt != "ascii")
                throw std::runtime_error("read_ply: only ascii PLY supported: " + path);
        } else if (tok == "element") {
            std::string name;
            size_t count;
            ss >> name >> count;
            current_element = name;
            if (name == "vertex") n_verts = count;
            else if (name == "face") n_faces = count;
        } else if (tok == "property" && current_element == "vertex") {
            std::string type, name;
            ss >> type >> name;
            vertex_props.push_back(name);
        } else if (tok == "end_header") {
            break;
        }
    }

    int J = 0;
    for (const auto& p : vertex_props)
        if (p.size() > 1 && p[0] == 'w') J = std::max(J, std::atoi(p.c_str() + 1) + 1);

    TriMesh mesh;
    mesh.vertices.resize(n_verts);
    if (vertex_weights) vertex_weights->assign(n_verts * J, 0.0);
    if (joint_count) *joint_count = J;

    for (size_t i = 0; i < n_verts; ++i) {
        if (!std::getline(in, line))
            throw std::runtime_error("read_ply: truncated vertex data in " + path);
        std::istringstream ss(line);
        std::vector<double> vals(vertex_props.size());
        for (double& v : vals)
            if (!(ss >> v)) throw std::runtime_error("read_ply: bad vertex line in " + path);
        for (size_t p = 0; p < vertex_props.size(); ++p) {
            const std::string& name = vertex_props[p];
            if (name == "x") mesh.vertices[i].x = vals[p];
            else if (name == "y") mesh.vertices[i].y = vals[p];
            else if (name == "z") mesh.vertices[i].z = vals[p];
            else if (vertex_weights && name[0] == 'w')
                (*vertex_weights)[i * J + std::atoi(name.c_str() + 1)] = vals[p];
        }
    }
    mesh.faces.reserve(n_faces);
    for (size_t i = 0; i < n_faces; ++i) {
        if (!std::getline(in, line))
            throw std::runtime_error("read_ply: truncated face data in " + path);
        std::istringstream ss(line);
        int cnt;
        ss >> cnt;
        if (cnt != 3) throw std::runtime_error("read_ply: non-triangle face in " + path);
        std::array<int, 3> f;
        ss >> f[0] >> f[1] >> f[2];
        mesh.faces.push_back(f);
    }
    return mesh;
}

}  // namespace mav
