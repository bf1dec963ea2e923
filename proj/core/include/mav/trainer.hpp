#pragma once

#include <string>

#include "mav/checkpoint.hpp"
#include "mav/dataset.hpp"
#include "mav/marching_tet.hpp"
#include "mav/posmap.hpp"
#include "mav/renderer.hpp"

namespace mav {

// Fresh optimization state: SDF initialized from the template surface, weights
// diffused, neutral material, constant light, zero detail maps.
Checkpoint init_checkpoint(const Config& config, const Dataset& dataset);

struct FitResult {
    uint64_t steps_done = 0;
    double final_loss = 0;
    bool nan_halt = false;
};

// Optimization loop: per step, pick a (pose, view) round-robin, extract the
// canonical mesh, apply pose offsets, skin, render, assemble the losses, and
// take per-group Adam steps. Periodically checkpoints into `out_dir` and
// appends metrics.csv (step,loss,psnr). On a non-finite loss the last good
// state is saved and the run halts.
FitResult fit(Checkpoint& ckpt, const Dataset& dataset, const std::string& out_dir);

// Posed detailed mesh plus everything a render needs; `mesh_seconds` reports
// the extraction+offset+skinning stage separately from rendering.
struct PosedAvatar {
    ExtractedMesh canonical;               // pre-offset canonical mesh
    std::vector<Vec3> detailed_canonical;  // canonical + pose offsets
    TriMesh mesh;                          // posed
    std::vector<Vec3> normals;
    CanonicalSquare square;
    int detail_index = 0;  // which training pose's maps were used
};

PosedAvatar pose_avatar(const Checkpoint& ckpt, const Pose& pose,
                        double* mesh_seconds = nullptr);

// Nearest training pose in position-map PCA coefficient space (0 when no
// basis was fitted).
int nearest_detail_index(const Checkpoint& ckpt, const Pose& pose);

// Scene over a posed avatar; the referenced avatar and checkpoint must outlive
// the scene and the returned Bvh/EnvCdf are owned here.
struct AvatarScene {
    Bvh bvh;
    EnvCdf env_cdf;
    Scene scene;
};
void build_avatar_scene(const Checkpoint& ckpt, const PosedAvatar& avatar,
                        AvatarScene& out);

}  // namespace mav
