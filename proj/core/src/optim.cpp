#include "caudg/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace caudg {

void zero_grad(const std::vector<Parameter>& params) {
    for (const auto& p : params) {
        p.node->ensure_grad();
        p.node->zero_grad();
    }
}

void adam_step(std::vector<Parameter>& params, AdamState& state) {
    state.step_count += 1;
    const AdamConfig& h = state.hyper;
    const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step_count));

    for (auto& p : params) {
        Tensor& value = p.node->value;
        Tensor& grad = p.node->ensure_grad();
        if (!grad.all_finite()) {
            throw std::runtime_error("adam_step: non-finite gradient for parameter '" + p.id + "'");
        }
        auto [m_it, m_new] = state.first_moment.try_emplace(p.id, Tensor::zeros(value.shape));
        auto [v_it, v_new] = state.second_moment.try_emplace(p.id, Tensor::zeros(value.shape));
        Tensor& m = m_it->second;
        Tensor& v = v_it->second;
        if (!m.same_shape(value) || !v.same_shape(value)) {
            throw std::runtime_error("adam_step: moment shape mismatch for parameter '" + p.id + "'");
        }
        for (std::size_t i = 0; i < value.numel(); ++i) {
            const double g = grad.data[i];
            m.data[i] = h.beta1 * m.data[i] + (1.0 - h.beta1) * g;
            v.data[i] = h.beta2 * v.data[i] + (1.0 - h.beta2) * g * g;
            const double m_hat = m.data[i] / bc1;
            const double v_hat = v.data[i] / bc2;
            value.data[i] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
        }
    }
}

}  // namespace caudg
