#pragma once

#include <limits>
#include <vector>

#include "mav/camera.hpp"
#include "mav/mesh.hpp"

namespace mav {

struct Hit {
    bool valid = false;
    int face = -1;
    double t = std::numeric_limits<double>::infinity();
    double u = 0, v = 0;  // barycentrics of face vertices 1 and 2
};

// Binary BVH over triangles, median split on the longest centroid axis,
// leaves hold up to 4 triangles.
class Bvh {
public:
    Bvh() = default;
    explicit Bvh(const TriMesh& mesh);

    bool empty() const { return nodes_.empty(); }

    Hit intersect(const Ray& ray, double t_max =
                      std::numeric_limits<double>::infinity()) const;
    // Any-hit query for shadow rays; t in (t_min, t_max).
    bool occluded(const Ray& ray, double t_min,
                  double t_max = std::numeric_limits<double>::infinity()) const;

private:
    struct Node {
        Box3 box;
        int left = -1;       // internal: child index; leaf: first triangle
        int count = 0;       // leaf triangle count, 0 for internal nodes
        int right = -1;
    };

    int build(std::vector<int>& tri_ids, int begin, int end,
              const std::vector<Vec3>& centroids, const std::vector<Box3>& tri_boxes);

    const TriMesh* mesh_ = nullptr;
    std::vector<Node> nodes_;
    std::vector<int> tris_;  // triangle ids in leaf order
};

// Watertight enough for this artifact: Moller-Trumbore with back/front faces
// both reported.
bool ray_triangle(const Ray& ray, const Vec3& p0, const Vec3& p1, const Vec3& p2,
                  double& t, double& u, double& v);

bool ray_box(const Ray& ray, const Box3& box, double t_max);

}  // namespace mav
