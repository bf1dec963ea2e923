#pragma once

#include <map>
#include <string>
#include <vector>

#include "mav/adam.hpp"
#include "mav/config.hpp"
#include "mav/detailmaps.hpp"
#include "mav/envmap.hpp"
#include "mav/material.hpp"
#include "mav/pca.hpp"
#include "mav/sdfgrid.hpp"
#include "mav/skeleton.hpp"
#include "mav/weightgrid.hpp"

namespace mav {

// Full optimization state as a directory of small files: config.json,
// state.json, skeleton.txt, template.ply, sdf.bin, weights.bin, material.bin,
// env.pfm, pose{idx}.json, pose{idx}_{vf|vb|feat}.pfm, adam_{group}.bin and
// optionally pca.bin.
struct Checkpoint {
    Config config;
    Skeleton skeleton;
    TemplateSurface surface;
    SdfGrid sdf;
    WeightGrid weights;
    MaterialGrid material;
    EnvMap env;

    std::vector<Pose> poses;          // training poses
    std::vector<DetailMaps> detail;   // one per training pose

    PcaBasis pca;                     // position-map basis, may be empty
    std::vector<std::vector<double>> pca_coeffs;  // per training pose

    uint64_t step = 0;
    std::map<std::string, Adam> adam;  // keyed "sdf", "offsets", "material", "env"
};

void save_checkpoint(const std::string& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& dir);

}  // namespace mav
