#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "caudg/autodiff.hpp"

namespace caudg {

/// A named trainable leaf. The node persists across steps; its gradient is
/// zeroed at the start of each optimization step and accumulated by backward().
struct Parameter {
    std::string id;
    Var node;
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moment buffers per parameter plus the shared step counter.
struct AdamState {
    AdamConfig hyper;
    std::uint64_t step_count = 0;
    std::unordered_map<std::string, Tensor> first_moment;
    std::unordered_map<std::string, Tensor> second_moment;

    explicit AdamState(AdamConfig cfg = {}) : hyper(cfg) {}
};

void zero_grad(const std::vector<Parameter>& params);

/// Standard bias-corrected Adam update over all parameters with gradients.
/// Throws if any gradient entry is non-finite, naming the parameter.
void adam_step(std::vector<Parameter>& params, AdamState& state);

}  // namespace caudg
