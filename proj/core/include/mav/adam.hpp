#pragma once

#include <string>
#include <vector>

namespace mav {

// Bias-corrected Adam over a flat parameter vector.
class Adam {
public:
    Adam() = default;
    explicit Adam(size_t size, double lr = 1e-3, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);

    void step(std::vector<double>& params, const std::vector<double>& grads);

    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }
    uint64_t step_count() const { return t_; }

    void save(const std::string& path) const;
    static Adam load(const std::string& path);

private:
    double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    uint64_t t_ = 0;
    std::vector<double> m_, v_;
};

}  // namespace mav
