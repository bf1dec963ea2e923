#include "mav/pca.hpp"

#include <Eigen/Dense>

#include <cstdio>
#include <memory>
#include <stdexcept>

namespace mav {

PcaBasis pca_fit(const std::vector<Image>& maps, int k) {
    if (maps.size() < 2) throw std::invalid_argument("pca_fit: need at least 2 maps");
    if (k > int(maps.size())) throw std::invalid_argument("pca_fit: K exceeds map count");

    size_t dim = maps[0].data.size();
    for (const Image& m : maps)
        if (m.data.size() != dim || m.width != maps[0].width || m.height != maps[0].height)
            throw std::invalid_argument("pca_fit: inconsistent map shapes");

    PcaBasis basis;
    basis.width = maps[0].width;
    basis.height = maps[0].height;
    basis.channels = maps[0].channels;
    basis.mean.assign(dim, 0.0);
    for (const Image& m : maps)
        for (size_t i = 0; i < dim; ++i) basis.mean[i] += m.data[i];
    for (double& v : basis.mean) v /= double(maps.size());

    // Thin SVD via the N x N Gram matrix (N = #maps << dim).
    int N = int(maps.size());
    Eigen::MatrixXd X(N, dim);
    for (int r = 0; r < N; ++r)
        for (size_t i = 0; i < dim; ++i) X(r, i) = maps[r].data[i] - basis.mean[i];
    Eigen::MatrixXd G = X * X.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);

    // Eigenvalues ascending; take the top K with meaningful energy.
    for (int c = 0; c < k; ++c) {
        int idx = N - 1 - c;
        double lambda = std::max(eig.eigenvalues()(idx), 0.0);
        double sigma = std::sqrt(lambda);
        if (sigma < 1e-10) break;
        Eigen::VectorXd comp = X.transpose() * eig.eigenvectors().col(idx) / sigma;
        basis.components.emplace_back(comp.data(), comp.data() + dim);
        basis.singular_values.push_back(sigma);
    }
    return basis;
}

std::vector<double> pca_coefficients(const Image& map, const PcaBasis& basis) {
    if (map.data.size() != basis.mean.size())
        throw std::invalid_argument("pca_coefficients: map shape mismatch");
    std::vector<double> coeffs(basis.component_count(), 0.0);
    for (int c = 0; c < basis.component_count(); ++c) {
        double dotp = 0;
        for (size_t i = 0; i < basis.mean.size(); ++i)
            dotp += basis.components[c][i] * (map.data[i] - basis.mean[i]);
        coeffs[c] = dotp;
    }
    return coeffs;
}

Image pca_project(const Image& map, const PcaBasis& basis) {
    std::vector<double> coeffs = pca_coefficients(map, basis);
    Image out(basis.width, basis.height, basis.channels);
    for (size_t i = 0; i < basis.mean.size(); ++i) {
        double v = basis.mean[i];
        for (int c = 0; c < basis.component_count(); ++c)
            v += coeffs[c] * basis.components[c][i];
        out.data[i] = float(v);
    }
    return out;
}

void save_pca(const std::string& path, const PcaBasis& basis) {
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "wb"), std::fclose);
    if (!f) throw std::runtime_error("save_pca: cannot open " + path);
    int32_t header[4] = {basis.width, basis.height, basis.channels,
                         basis.component_count()};
    std::fwrite(header, 4, 4, f.get());
    std::fwrite(basis.mean.data(), 8, basis.mean.size(), f.get());
    std::fwrite(basis.singular_values.data(), 8, basis.singular_values.size(), f.get());
    for (const auto& comp : basis.components)
        std::fwrite(comp.data(), 8, comp.size(), f.get());
}

PcaBasis load_pca(const std::string& path) {
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "rb"), std::fclose);
    if (!f) throw std::runtime_error("load_pca: cannot open " + path);
    int32_t header[4];
    if (std::fread(header, 4, 4, f.get()) != 4)
        throw std::runtime_error("load_pca: truncated header in " + path);
    PcaBasis basis;
    basis.width = header[0];
    basis.height = header[1];
    basis.channels = header[2];
    size_t dim = size_t(basis.width) * basis.height * basis.channels;
    basis.mean.resize(dim);
    basis.singular_values.resize(header[3]);
    if (std::fread(basis.mean.data(), 8, dim, f.get()) != dim ||
        std::fread(basis.singular_values.data(), 8, header[3], f.get()) != size_t(header[3]))
        throw std::runtime_error("load_pca: truncated data in " + path);
    basis.components.resize(header[3]);
    for (auto& comp : basis.components) {
        comp.resize(dim);
        if (std::fread(comp.data(), 8, dim, f.get()) != dim)
            throw std::runtime_error("load_pca: truncated component in " + path);
    }
    return basis;
}

}  // namespace mav
