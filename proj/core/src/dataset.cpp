#include "mav/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mav/config.hpp"

namespace mav {

namespace fs = std::filesystem;
using nlohmann::json;

std::string DatasetManifest::resolve(const std::string& rel) const {
    fs::path p(rel);
    if (p.is_absolute()) return rel;
    return (fs::path(root) / p).string();
}

namespace {

void require_file(const DatasetManifest& m, const std::string& rel, const char* what) {
    if (rel.empty()) throw ConfigError(std::string("manifest: missing ") + what);
    if (!fs::exists(m.resolve(rel)))
        throw ConfigError("manifest: " + std::string(what) + " not found: " + m.resolve(rel));
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("manifest: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    json doc;
    try {
        doc = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("manifest: invalid JSON: ") + e.what());
    }

    DatasetManifest m;
    m.root = fs::path(path).parent_path().string();
    if (m.root.empty()) m.root = ".";
    try {
        m.skeleton_path = doc.at("skeleton").get<std::string>();
        m.template_path = doc.at("template").get<std::string>();
        for (const json& jf : doc.at("frames")) {
            FrameRef frame;
            frame.pose = jf.at("pose").get<std::string>();
            for (const json& jv : jf.at("views")) {
                ViewRef view;
                view.image = jv.at("image").get<std::string>();
                view.mask = jv.at("mask").get<std::string>();
                view.camera = jv.at("camera").get<std::string>();
                if (jv.contains("normal")) view.normal = jv["normal"].get<std::string>();
                frame.views.push_back(std::move(view));
            }
            m.frames.push_back(std::move(frame));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("manifest: ") + e.what());
    }

    require_file(m, m.skeleton_path, "skeleton");
    require_file(m, m.template_path, "template");
    for (const FrameRef& f : m.frames) {
        require_file(m, f.pose, "pose file");
        for (const ViewRef& v : f.views) {
            require_file(m, v.image, "image");
            require_file(m, v.mask, "mask");
            require_file(m, v.camera, "camera");
            if (!v.normal.empty()) require_file(m, v.normal, "normal map");
        }
    }
    return m;
}

void save_manifest(const std::string& path, const DatasetManifest& manifest) {
    json doc;
    doc["skeleton"] = manifest.skeleton_path;
    doc["template"] = manifest.template_path;
    json frames = json::array();
    for (const FrameRef& f : manifest.frames) {
        json jf;
        jf["pose"] = f.pose;
        json views = json::array();
        for (const ViewRef& v : f.views) {
            json jv;
            jv["image"] = v.image;
            jv["mask"] = v.mask;
            jv["camera"] = v.camera;
            if (!v.normal.empty()) jv["normal"] = v.normal;
            views.push_back(jv);
        }
        jf["views"] = views;
        frames.push_back(jf);
    }
    doc["frames"] = frames;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_manifest: cannot open " + path);
    out << doc.dump(2) << "\n";
}

size_t Dataset::view_count() const {
    size_t n = 0;
    for (const Frame& f : frames) n += f.views.size();
    return n;
}

Dataset load_dataset(const DatasetManifest& manifest) {
    Dataset ds;
    ds.skeleton = read_skeleton(manifest.resolve(manifest.skeleton_path));
    ds.surface = read_template(manifest.resolve(manifest.template_path));
    if (ds.surface.joint_count != ds.skeleton.joint_count())
        throw ConfigError("dataset: template joint count does not match skeleton");

    for (const FrameRef& fr : manifest.frames) {
        Frame frame;
        frame.pose = read_pose(manifest.resolve(fr.pose));
        frame.pose.validate(ds.skeleton.joint_count());
        for (const ViewRef& vr : fr.views) {
            View view;
            view.camera = load_camera(manifest.resolve(vr.camera));
            view.image = read_image(manifest.resolve(vr.image));
            view.mask = read_image(manifest.resolve(vr.mask));
            if (view.image.width != view.camera.width ||
                view.image.height != view.camera.height)
                throw ConfigError("dataset: image size does not match camera: " + vr.image);
            if (view.mask.width != view.camera.width ||
                view.mask.height != view.camera.height)
                throw ConfigError("dataset: mask size does not match camera: " + vr.mask);
            if (view.image.channels != 3)
                throw ConfigError("dataset: image must be 3-channel: " + vr.image);
            if (view.mask.channels != 1)
                throw ConfigError("dataset: mask must be 1-channel: " + vr.mask);
            if (!vr.normal.empty()) {
                Image n = read_image(manifest.resolve(vr.normal));
                if (n.width != view.camera.width || n.height != view.camera.height ||
                    n.channels != 3)
                    throw ConfigError("dataset: normal map shape mismatch: " + vr.normal);
                view.normal = std::move(n);
            }
            frame.views.push_back(std::move(view));
        }
        ds.frames.push_back(std::move(frame));
    }
    return ds;
}

}  // namespace mav
