#include "mav/bvh.hpp"

#include <algorithm>
#include <cmath>

namespace mav {

bool ray_triangle(const Ray& ray, const Vec3& p0, const Vec3& p1, const Vec3& p2,
                  double& t, double& u, double& v) {
    Vec3 e1 = p1 - p0;
    Vec3 e2 = p2 - p0;
    Vec3 pvec = cross(ray.dir, e2);
    double det = dot(e1, pvec);
    if (std::abs(det) < 1e-14) return false;
    double inv_det = 1.0 / det;
    Vec3 tvec = ray.origin - p0;
    u = dot(tvec, pvec) * inv_det;
    if (u < 0 || u > 1) return false;
    Vec3 qvec = cross(tvec, e1);
    v = dot(ray.dir, qvec) * inv_det;
    if (v < 0 || u + v > 1) return false;
    t = dot(e2, qvec) * inv_det;
    return t > 0;
}

bool ray_box(const Ray& ray, const Box3& box, double t_max) {
    double t0 = 0, t1 = t_max;
    for (int a = 0; a < 3; ++a) {
        double inv = 1.0 / ray.dir[a];
        double near = (box.lo[a] - ray.origin[a]) * inv;
        double far = (box.hi[a] - ray.origin[a]) * inv;
        if (inv < 0) std::swap(near, far);
        t0 = std::max(t0, near);
        t1 = std::min(t1, far);
        if (t0 > t1) return false;
    }
    return true;
}

Bvh::Bvh(const TriMesh& mesh) : mesh_(&mesh) {
    int n = int(mesh.faces.size());
    if (n == 0) return;
    std::vector<Vec3> centroids(n);
    std::vector<Box3> tri_boxes(n);
    std::vector<int> tri_ids(n);
    for (int i = 0; i < n; ++i) {
        tri_ids[i] = i;
        const auto& f = mesh.faces[i];
        Box3 b;
        for (int k = 0; k < 3; ++k) b.expand(mesh.vertices[f[k]]);
        tri_boxes[i] = b;
        centroids[i] = b.center();
    }
    nodes_.reserve(size_t(2) * n);
    build(tri_ids, 0, n, centroids, tri_boxes);
    tris_ = std::move(tri_ids);
}

int Bvh::build(std::vector<int>& tri_ids, int begin, int end,
               const std::vector<Vec3>& centroids, const std::vector<Box3>& tri_boxes) {
    int node_id = int(nodes_.size());
    nodes_.emplace_back();
    Box3 box;
    for (int i = begin; i < end; ++i) box.expand(tri_boxes[tri_ids[i]]);
    nodes_[node_id].box = box;

    if (end - begin <= 4) {
        nodes_[node_id].left = begin;
        nodes_[node_id].count = end - begin;
        return node_id;
    }

    Box3 cbox;
    for (int i = begin; i < end; ++i) cbox.expand(centroids[tri_ids[i]]);
    Vec3 e = cbox.hi - cbox.lo;
    int axis = e.x > e.y ? (e.x > e.z ? 0 : 2) : (e.y > e.z ? 1 : 2);
    int mid = (begin + end) / 2;
    std::nth_element(tri_ids.begin() + begin, tri_ids.begin() + mid, tri_ids.begin() + end,
                     [&](int a, int b) { return centroids[a][axis] < centroids[b][axis]; });

    int left = build(tri_ids, begin, mid, centroids, tri_boxes);
    int right = build(tri_ids, mid, end, centroids, tri_boxes);
    nodes_[node_id].left = left;
    nodes_[node_id].right = right;
    return node_id;
}

Hit Bvh::intersect(const Ray& ray, double t_max) const {
    Hit hit;
    if (nodes_.empty()) return hit;
    hit.t = t_max;
    int stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        if (!ray_box(ray, node.box, hit.t)) continue;
        if (node.count > 0) {
            for (int i = 0; i < node.count; ++i) {
                int face = tris_[node.left + i];
                const auto& f = mesh_->faces[face];
                double t, u, v;
                if (ray_triangle(ray, mesh_->vertices[f[0]], mesh_->vertices[f[1]],
                                 mesh_->vertices[f[2]], t, u, v) &&
                    t < hit.t) {
                    hit.valid = true;
                    hit.face = face;
                    hit.t = t;
                    hit.u = u;
                    hit.v = v;
                }
            }
        } else {
            stack[top++] = node.left;
            stack[top++] = node.right;
        }
    }
    if (!hit.valid) hit.t = std::numeric_limits<double>::infinity();
    return hit;
}

bool Bvh::occluded(const Ray& ray, double t_min, double t_max) const {
    if (nodes_.empty()) return false;
    int stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        if (!ray_box(ray, node.box, t_max)) continue;
        if (node.count > 0) {
            for (int i = 0; i < node.count; ++i) {
                int face = tris_[node.left + i];
                const auto& f = mesh_->faces[face];
                double t, u, v;
                if (ray_triangle(ray, mesh_->vertices[f[0]], mesh_->vertices[f[1]],
                                 mesh_->vertices[f[2]], t, u, v) &&
                    t > t_min && t < t_max)
                    return true;
            }
        } else {
            stack[top++] = node.left;
            stack[top++] = node.right;
        }
    }
    return false;
}

}  // namespace mav
