#pragma once

#include "deimlab/tensor.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace deimlab {

/// Adaptive-moment gradient descent with bias correction.
class Adam {
public:
    explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    /// Apply one update. `params` and `grads` must line up; moment buffers
    /// are allocated on first use.
    void step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads) {
        if (m_.empty()) {
            for (const Tensor* p : params) {
                m_.push_back(Tensor::zeros(p->shape()));
                v_.push_back(Tensor::zeros(p->shape()));
            }
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            Tensor& p = *params[k];
            const Tensor& g = grads[k];
            Tensor& m = m_[k];
            Tensor& v = v_[k];
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
                v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                p[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    void set_learning_rate(double lr) { lr_ = lr; }
    long steps_taken() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Tensor> m_, v_;
};

} // namespace deimlab
