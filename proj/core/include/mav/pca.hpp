#pragma once

#include <string>
#include <vector>

#include "mav/image.hpp"

namespace mav {

// PCA basis over flattened training position maps. Components are orthonormal
// under the flattened inner product.
struct PcaBasis {
    int width = 0, height = 0, channels = 0;
    std::vector<double> mean;                      // flattened map
    std::vector<std::vector<double>> components;   // K orthonormal vectors
    std::vector<double> singular_values;

    int component_count() const { return int(components.size()); }
};

// Fits mean + top-K principal components. Requires at least 2 maps and
// K <= #maps (throws otherwise).
PcaBasis pca_fit(const std::vector<Image>& maps, int k);

// mean + basis * basis^T * (map - mean).
Image pca_project(const Image& map, const PcaBasis& basis);

// Coefficients of (map - mean) in the basis; used for nearest-pose lookup.
std::vector<double> pca_coefficients(const Image& map, const PcaBasis& basis);

void save_pca(const std::string& path, const PcaBasis& basis);
PcaBasis load_pca(const std::string& path);

}  // namespace mav
