#pragma once

#include <functional>
#include <random>

#include "caudg/autodiff.hpp"
#include "caudg/gaussian.hpp"

namespace caudg {

/// Per-sample, per-channel spatial mean and biased variance of a feature map,
/// both shaped [B, C, 1, 1].
struct StyleStats {
    Tensor mu;
    Tensor sigma2;
};

/// Tail-sampled replacement styles with acceptance metadata, [B, C, 1, 1].
struct SampledStyle {
    Tensor mu_bar;
    Tensor sigma_bar;  // strictly positive
    std::vector<int> draws_used_mu;
    std::vector<int> draws_used_sigma;
    std::vector<bool> fallback_mu;
    std::vector<bool> fallback_sigma;
};

/// Mean/variance of a [B, C, 1, W] map along the spatial axes.
StyleStats spatial_stats(const Tensor& z);

/// Fits the batch Gaussian over per-sample rows [B, C].
StyleGaussian fit_style_gaussian(const std::vector<std::vector<double>>& rows);

/// Replaces each (b, c) channel's style: sigma_bar * (z - mu)/sqrt(sigma2 + 1e-6) + mu_bar.
/// Differentiable in z only; the statistics and the sampled styles are
/// constants of the op (the augmentation is an intervention, not a learnable path).
Var ids_transform(const Var& z, const StyleStats& stats, const SampledStyle& sampled);

struct IdsOptions {
    double eps = 1e-4;
    int max_draws = 100;
    double sigma_floor = 1e-3;
};

/// Inhomogeneous domain sampling: spatial stats -> batch Gaussians over the mu
/// rows and the sigma rows -> one independent tail draw per sample -> restyle.
/// Returns the restyled map; `sampled_out`, when non-null, receives the
/// acceptance metadata.
Var ids(const Var& z, const IdsOptions& opts, std::mt19937_64& rng,
        SampledStyle* sampled_out = nullptr);

using IdsFn = std::function<Var(const Var&)>;

/// The identity augmentation (ablation "w/o IDS" and the ERM baseline).
inline IdsFn identity_ids() {
    return [](const Var& z) { return z; };
}

}  // namespace caudg
