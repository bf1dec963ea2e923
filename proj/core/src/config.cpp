#include "mav/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mav {

using nlohmann::json;

void Config::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("config: ") + what);
    };
    require(grid_resolution >= 2 && grid_resolution <= 512, "grid_resolution out of range");
    require(weight_resolution >= 2 && weight_resolution <= 512,
            "weight_resolution out of range");
    require(detail_resolution >= 2 && detail_resolution <= 4096,
            "detail_resolution out of range");
    require(feature_channels >= 0 && feature_channels <= 64,
            "feature_channels out of range");
    require(material_resolution >= 2 && material_resolution <= 256,
            "material_resolution out of range");
    require(env_width >= 1 && env_height >= 1 && env_width <= 4096 && env_height <= 2048,
            "env size out of range");
    require(spp_train >= 1 && spp_infer >= 1, "spp must be >= 1");
    require(steps >= 1, "steps must be >= 1");
    require(lr_sdf > 0 && lr_offsets > 0 && lr_material > 0 && lr_env > 0,
            "learning rates must be positive");
    require(checkpoint_every >= 1, "checkpoint_every must be >= 1");
    require(eikonal_samples >= 0 && material_smooth_samples >= 0,
            "sample counts must be >= 0");
    try {
        weights.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

namespace {

struct Field {
    const char* key;
    std::function<void(Config&, const json&)> read;
    std::function<json(const Config&)> write;
};

std::vector<Field> schema() {
    std::vector<Field> fields;
    auto add = [&](const char* key, auto Config::*member) {
        using M = std::decay_t<decltype(std::declval<Config>().*member)>;
        fields.push_back(Field{
            key, [member](Config& c, const json& v) { c.*member = v.get<M>(); },
            [member](const Config& c) { return json(c.*member); }});
    };
    add("grid_resolution", &Config::grid_resolution);
    add("weight_resolution", &Config::weight_resolution);
    add("detail_resolution", &Config::detail_resolution);
    add("feature_channels", &Config::feature_channels);
    add("material_resolution", &Config::material_resolution);
    add("env_width", &Config::env_width);
    add("env_height", &Config::env_height);
    add("spp_train", &Config::spp_train);
    add("spp_infer", &Config::spp_infer);
    add("steps", &Config::steps);
    add("seed", &Config::seed);
    add("lr_sdf", &Config::lr_sdf);
    add("lr_offsets", &Config::lr_offsets);
    add("lr_material", &Config::lr_material);
    add("lr_env", &Config::lr_env);
    add("checkpoint_every", &Config::checkpoint_every);
    add("eikonal_samples", &Config::eikonal_samples);
    add("material_smooth_samples", &Config::material_smooth_samples);
    add("optimize_sdf", &Config::optimize_sdf);
    add("optimize_offsets", &Config::optimize_offsets);
    add("optimize_material", &Config::optimize_material);
    add("optimize_env", &Config::optimize_env);
    add("dataset", &Config::dataset);
    return fields;
}

std::vector<std::pair<const char*, double LossWeights::*>> weight_schema() {
    return {{"lambda_lpips", &LossWeights::lpips},
            {"lambda_sdf", &LossWeights::sdf},
            {"lambda_mat_albedo", &LossWeights::mat_albedo},
            {"lambda_mat_rough", &LossWeights::mat_rough},
            {"lambda_offset_start", &LossWeights::offset_start},
            {"lambda_offset_end", &LossWeights::offset_end},
            {"lambda_light", &LossWeights::light},
            {"lambda_normal", &LossWeights::normal}};
}

}  // namespace

Config parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: root must be an object");

    Config config;
    auto fields = schema();
    std::set<std::string> known;
    for (const Field& f : fields) known.insert(f.key);
    known.insert("loss_weights");

    for (auto it = doc.begin(); it != doc.end(); ++it)
        if (!known.count(it.key()))
            throw ConfigError("config: unknown key \"" + it.key() + "\"");

    try {
        for (const Field& f : fields)
            if (doc.contains(f.key)) f.read(config, doc[f.key]);
        if (doc.contains("loss_weights")) {
            const json& lw = doc["loss_weights"];
            if (!lw.is_object()) throw ConfigError("config: loss_weights must be an object");
            std::set<std::string> known_w;
            for (auto& [key, member] : weight_schema()) known_w.insert(key);
            for (auto it = lw.begin(); it != lw.end(); ++it)
                if (!known_w.count(it.key()))
                    throw ConfigError("config: unknown key \"loss_weights." + it.key() +
                                      "\"");
            for (auto& [key, member] : weight_schema())
                if (lw.contains(key)) config.weights.*member = lw[key].get<double>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (config.weights.lpips > 0)
        std::fprintf(stderr, "warning: lambda_lpips is accepted but ignored\n");
    config.validate();
    return config;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const Config& config) {
    json doc;
    for (const Field& f : schema()) doc[f.key] = f.write(config);
    json lw;
    for (auto& [key, member] : weight_schema()) lw[key] = config.weights.*member;
    doc["loss_weights"] = lw;
    return doc.dump(2) + "\n";
}

void save_config(const std::string& path, const Config& config) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_config: cannot open " + path);
    out << config_to_json(config);
}

}  // namespace mav
