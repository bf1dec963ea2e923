#pragma once

#include <string>
#include <vector>

#include "mav/vecmath.hpp"

namespace mav {

// Decoded material at a surface point: linear-color diffuse albedo in [0,1],
// roughness in [0.03, 1]. Metallic is fixed at zero for the whole artifact.
struct MaterialSample {
    Vec3 kd;
    double ks = 0.03;
};

// Canonical material field: a trilinear grid of unconstrained albedo+roughness
// parameters plus a linear head mapping the sampled pose feature into additive
// pre-squash perturbations. A sigmoid squash keeps decoded values in range for
// any parameter setting.
class MaterialGrid {
public:
    static constexpr int kChannels = 4;  // rgb albedo + roughness
    static constexpr double kRoughnessFloor = 0.03;

    MaterialGrid() = default;
    MaterialGrid(int resolution, const Box3& bounds, int feature_channels);

    int resolution() const { return resolution_; }
    const Box3& bounds() const { return bounds_; }
    int feature_channels() const { return feature_channels_; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& blend_weights() { return blend_; }
    const std::vector<double>& blend_weights() const { return blend_; }

    // `clamped` (optional) reports out-of-box queries (clamped to the border).
    MaterialSample query(const Vec3& point, const std::vector<double>& feature,
                         bool* clamped = nullptr) const;

    struct Grads {
        std::vector<double>* values = nullptr;  // same layout as values()
        std::vector<double>* blend = nullptr;   // same layout as blend_weights()
    };
    // Adjoint of query(): routes (dL/dkd, dL/dks) into grid values, blend
    // weights and the feature vector, and returns dL/d(point).
    Vec3 query_backward(const Vec3& point, const std::vector<double>& feature,
                        const Vec3& kd_grad, double ks_grad, Grads grads,
                        std::vector<double>* feature_grad = nullptr) const;

    void save(const std::string& path) const;
    static MaterialGrid load(const std::string& path);

private:
    // Pre-squash parameter vector at a point (trilinear + feature head).
    void raw_params(const Vec3& point, const std::vector<double>& feature, double u[4],
                    bool* clamped) const;

    int resolution_ = 0;
    Box3 bounds_;
    int feature_channels_ = 0;
    std::vector<double> values_;  // [#nodes][4]
    std::vector<double> blend_;   // [4][feature_channels]
};

// Mean absolute material difference between surface samples and their
// epsilon-perturbed twins. The epsilon draws are provided by the caller so
// finite-difference checks can freeze them.
double material_smoothness_loss(const MaterialGrid& grid,
                                const std::vector<Vec3>& surface_samples,
                                const std::vector<Vec3>& epsilon_offsets,
                                const std::vector<std::vector<double>>& features);
void material_smoothness_backward(const MaterialGrid& grid,
                                  const std::vector<Vec3>& surface_samples,
                                  const std::vector<Vec3>& epsilon_offsets,
                                  const std::vector<std::vector<double>>& features,
                                  double upstream, MaterialGrid::Grads grads);

}  // namespace mav
