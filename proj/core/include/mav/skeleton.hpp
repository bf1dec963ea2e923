#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mav/mesh.hpp"
#include "mav/vecmath.hpp"

namespace mav {

// Articulated skeleton. Joints are topologically sorted: parent[i] < i, joint 0
// is the unique root (parent -1). Rest transforms are rigid, in the parent's
// frame.
struct Skeleton {
    struct Joint {
        std::string name;
        int parent = -1;  // -1 for the root
        RigidTransform rest_local;
    };
    std::vector<Joint> joints;

    int joint_count() const { return int(joints.size()); }

    // Throws std::invalid_argument when invariants are violated.
    void validate() const;

    // Global rest transforms (canonical frame), composed along parent chains.
    std::vector<RigidTransform> rest_globals() const;
};

// Axis-angle pose, one 3-vector per joint, plus a separate root translation.
struct Pose {
    std::vector<Vec3> axis_angle;
    Vec3 root_translation{};

    static Pose rest(int joint_count) {
        Pose p;
        p.axis_angle.resize(joint_count);
        return p;
    }
    void validate(int joint_count) const;
};

// Per-joint rigid maps M_i taking a canonical point rigged 100% to joint i into
// posed space: M_i = posed_global_i o rest_global_i^-1. The root map includes
// the root translation.
std::vector<RigidTransform> joint_transforms(const Skeleton& skeleton, const Pose& pose);

// Weight-blended posing: out_n = sum_i w_ni * M_i(p_n). Weight rows must sum to
// one within 1e-4 (throws otherwise). `weights` is row-major #points x J.
std::vector<Vec3> lbs_transform(const std::vector<Vec3>& points,
                                const std::vector<double>& weights,
                                const std::vector<RigidTransform>& transforms);

// Blended affine map sum_i w_i M_i for one weight row; its linear part is the
// fixed-weights Jacobian d(posed)/d(canonical) used by the backward pass.
RigidTransform blend_transforms(const double* weights,
                                const std::vector<RigidTransform>& transforms);

// Canonical surface + per-vertex skinning weights (the surface weights that the
// diffusion stage spreads into 3D).
struct TemplateSurface {
    TriMesh mesh;
    std::vector<double> surface_weights;  // row-major #vertices x J
    int joint_count = 0;

    void validate() const;
};

// Procedural capsule-union test body: 5 joints (pelvis root, spine, two arms,
// one leg), surface extracted from the union-of-capsules distance field, and
// smooth per-capsule skinning weights. Fully self-contained substitute for a
// licensed body model.
struct CapsuleBody {
    Skeleton skeleton;
    TemplateSurface surface;
};
CapsuleBody make_capsule_body(int surface_resolution = 48);

// Distance to the capsule-union surface of the rest body (negative inside).
double capsule_body_sdf(const Vec3& p);

// Skeleton text file: one joint per line,
//   name parent_index qw qx qy qz tx ty tz
void write_skeleton(const std::string& path, const Skeleton& skeleton);
Skeleton read_skeleton(const std::string& path);

void write_template(const std::string& path, const TemplateSurface& surface);
TemplateSurface read_template(const std::string& path);

// Pose JSON: {"theta": [3J numbers], "root_translation": [x, y, z]}.
void write_pose(const std::string& path, const Pose& pose);
Pose read_pose(const std::string& path);

}  // namespace mav
