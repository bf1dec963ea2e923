#include "mav/adam.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace mav {

Adam::Adam(size_t size, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw std::invalid_argument("Adam::step: size mismatch");
    ++t_;
    double c1 = 1.0 - std::pow(beta1_, double(t_));
    double c2 = 1.0 - std::pow(beta2_, double(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
        double mhat = m_[i] / c1;
        double vhat = v_[i] / c2;
        params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
}

void Adam::save(const std::string& path) const {
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "wb"), std::fclose);
    if (!f) throw std::runtime_error("Adam::save: cannot open " + path);
    double header[4] = {lr_, beta1_, beta2_, eps_};
    uint64_t meta[2] = {t_, uint64_t(m_.size())};
    std::fwrite(header, 8, 4, f.get());
    std::fwrite(meta, 8, 2, f.get());
    std::fwrite(m_.data(), 8, m_.size(), f.get());
    if (std::fwrite(v_.data(), 8, v_.size(), f.get()) != v_.size())
        throw std::runtime_error("Adam::save: short write to " + path);
}

Adam Adam::load(const std::string& path) {
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "rb"), std::fclose);
    if (!f) throw std::runtime_error("Adam::load: cannot open " + path);
    double header[4];
    uint64_t meta[2];
    if (std::fread(header, 8, 4, f.get()) != 4 || std::fread(meta, 8, 2, f.get()) != 2)
        throw std::runtime_error("Adam::load: truncated header in " + path);
    Adam a(size_t(meta[1]), header[0], header[1], header[2], header[3]);
    a.t_ = meta[0];
    if (std::fread(a.m_.data(), 8, a.m_.size(), f.get()) != a.m_.size() ||
        std::fread(a.v_.data(), 8, a.v_.size(), f.get()) != a.v_.size())
        throw std::runtime_error("Adam::load: truncated data in " + path);
    return a;
}

}  // namespace mav
