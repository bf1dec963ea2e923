#include "mav/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mav {

namespace fs = std::filesystem;
using nlohmann::json;

void save_checkpoint(const std::string& dir, const Checkpoint& ckpt) {
    fs::create_directories(dir);
    fs::path root(dir);

    save_config((root / "config.json").string(), ckpt.config);
    write_skeleton((root / "skeleton.txt").string(), ckpt.skeleton);
    write_template((root / "template.ply").string(), ckpt.surface);
    save_sdf((root / "sdf.bin").string(), ckpt.sdf);
    save_weight_grid((root / "weights.bin").string(), ckpt.weights);
    ckpt.material.save((root / "material.bin").string());
    save_envmap((root / "env.pfm").string(), ckpt.env);

    if (ckpt.poses.size() != ckpt.detail.size())
        throw std::runtime_error("save_checkpoint: pose/detail count mismatch");
    for (size_t i = 0; i < ckpt.poses.size(); ++i) {
        std::string idx = std::to_string(i);
        write_pose((root / ("pose" + idx + ".json")).string(), ckpt.poses[i]);
        save_param_map((root / ("pose" + idx + "_vf.pfm")).string(),
                       ckpt.detail[i].offsets_front);
        save_param_map((root / ("pose" + idx + "_vb.pfm")).string(),
                       ckpt.detail[i].offsets_back);
        save_param_map((root / ("pose" + idx + "_feat.pfm")).string(),
                       ckpt.detail[i].feature);
    }

    for (const auto& [name, state] : ckpt.adam)
        state.save((root / ("adam_" + name + ".bin")).string());

    if (ckpt.pca.component_count() > 0 || !ckpt.pca.mean.empty())
        save_pca((root / "pca.bin").string(), ckpt.pca);

    json state;
    state["step"] = ckpt.step;
    state["pose_count"] = ckpt.poses.size();
    json groups = json::array();
    for (const auto& [name, unused] : ckpt.adam) groups.push_back(name);
    state["adam_groups"] = groups;
    state["pca_coeffs"] = ckpt.pca_coeffs;
    std::ofstream out(root / "state.json");
    if (!out) throw std::runtime_error("save_checkpoint: cannot write state.json");
    out << state.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& dir) {
    fs::path root(dir);
    if (!fs::exists(root / "state.json"))
        throw std::runtime_error("load_checkpoint: no state.json in " + dir);

    Checkpoint ckpt;
    ckpt.config = load_config((root / "config.json").string());
    ckpt.skeleton = read_skeleton((root / "skeleton.txt").string());
    ckpt.surface = read_template((root / "template.ply").string());
    ckpt.sdf = load_sdf((root / "sdf.bin").string());
    ckpt.weights = load_weight_grid((root / "weights.bin").string());
    ckpt.material = MaterialGrid::load((root / "material.bin").string());
    ckpt.env = load_envmap((root / "env.pfm").string());

    std::ifstream in(root / "state.json");
    json state = json::parse(std::string(std::istreambuf_iterator<char>(in), {}));
    ckpt.step = state.at("step").get<uint64_t>();
    size_t pose_count = state.at("pose_count").get<size_t>();
    if (state.contains("pca_coeffs"))
        ckpt.pca_coeffs = state["pca_coeffs"].get<std::vector<std::vector<double>>>();

    for (size_t i = 0; i < pose_count; ++i) {
        std::string idx = std::to_string(i);
        ckpt.poses.push_back(read_pose((root / ("pose" + idx + ".json")).string()));
        DetailMaps maps;
        maps.offsets_front =
            load_param_map((root / ("pose" + idx + "_vf.pfm")).string());
        maps.offsets_back = load_param_map((root / ("pose" + idx + "_vb.pfm")).string());
        maps.feature = load_param_map((root / ("pose" + idx + "_feat.pfm")).string(),
                                      ckpt.config.feature_channels);
        ckpt.detail.push_back(std::move(maps));
    }

    if (state.contains("adam_groups"))
        for (const json& name : state["adam_groups"]) {
            std::string n = name.get<std::string>();
            ckpt.adam.emplace(n, Adam::load((root / ("adam_" + n + ".bin")).string()));
        }

    if (fs::exists(root / "pca.bin")) ckpt.pca = load_pca((root / "pca.bin").string());
    return ckpt;
}

}  // namespace mav
