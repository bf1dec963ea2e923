#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mav/camera.hpp"
#include "mav/image.hpp"
#include "mav/skeleton.hpp"

namespace mav {

// Manifest JSON:
// {
//   "skeleton": "skeleton.txt",
//   "template": "template.ply",
//   "frames": [
//     {"pose": "pose0.json",
//      "views": [{"image": "...", "mask": "...", "camera": "...",
//                 "normal": "..." (optional)}]}
//   ]
// }
// Paths are relative to the manifest directory.
struct ViewRef {
    std::string image, mask, camera;
    std::string normal;  // empty when absent
};

struct FrameRef {
    std::string pose;
    std::vector<ViewRef> views;
};

struct DatasetManifest {
    std::string root;  // manifest directory
    std::string skeleton_path, template_path;
    std::vector<FrameRef> frames;

    std::string resolve(const std::string& rel) const;
};

// Parses and checks that every referenced file exists. Throws ConfigError.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const DatasetManifest& manifest);

struct View {
    Image image;   // sRGB, 3ch
    Image mask;    // 1ch
    Camera camera;
    std::optional<Image> normal;  // camera-space, 3ch
};

struct Frame {
    Pose pose;
    std::vector<View> views;
};

struct Dataset {
    Skeleton skeleton;
    TemplateSurface surface;
    std::vector<Frame> frames;

    size_t view_count() const;
};

// Loads everything into memory; validates image sizes against the cameras.
// Throws ConfigError on inconsistency.
Dataset load_dataset(const DatasetManifest& manifest);

}  // namespace mav
