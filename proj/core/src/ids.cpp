#include "caudg/ids.hpp"

#include <cmath>
#include <stdexcept>

#include "node_factory.hpp"

namespace caudg {

namespace {
constexpr double kVarianceRidge = 1e-6;

void require_map(const Tensor& z, const char* op) {
    if (z.rank() != 4 || z.dim(2) != 1) {
        throw std::invalid_argument(std::string(op) + ": expected [B, C, 1, W], got " +
                                    z.shape_str());
    }
}

std::vector<std::vector<double>> stat_rows(const Tensor& stat) {
    const std::size_t b = stat.dim(0), c = stat.dim(1);
    std::vector<std::vector<double>> rows(b, std::vector<double>(c));
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < c; ++j) rows[i][j] = stat.at4(i, j, 0, 0);
    }
    return rows;
}
}  // namespace

StyleStats spatial_stats(const Tensor& z) {
    require_map(z, "spatial_stats");
    const std::size_t b = z.dim(0), c = z.dim(1), w = z.dim(3);
    StyleStats s{Tensor({b, c, 1, 1}), Tensor({b, c, 1, 1})};
    for (std::size_t n = 0; n < b; ++n) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double* row = &z.data[(n * c + ch) * w];
            double m = 0.0;
            for (std::size_t i = 0; i < w; ++i) m += row[i];
            m /= static_cast<double>(w);
            double v = 0.0;
            for (std::size_t i = 0; i < w; ++i) {
                const double d = row[i] - m;
                v += d * d;
            }
            v /= static_cast<double>(w);
            s.mu.at4(n, ch, 0, 0) = m;
            s.sigma2.at4(n, ch, 0, 0) = v;
        }
    }
    return s;
}

StyleGaussian fit_style_gaussian(const std::vector<std::vector<double>>& rows) {
    return StyleGaussian::fit(rows);
}

Var ids_transform(const Var& z, const StyleStats& stats, const SampledStyle& sampled) {
    require_map(z->value, "ids_transform");
    const std::size_t b = z->value.dim(0), c = z->value.dim(1), w = z->value.dim(3);
    const std::vector<std::size_t> stat_shape{b, c, 1, 1};
    if (stats.mu.shape != stat_shape || stats.sigma2.shape != stat_shape ||
        sampled.mu_bar.shape != stat_shape || sampled.sigma_bar.shape != stat_shape) {
        throw std::invalid_argument("ids_transform: style shapes do not match input " +
                                    z->value.shape_str());
    }

    // Per-(b, c) affine restyle; slope captured for the backward pass.
    Tensor slope({b, c});
    Tensor out(z->value.shape);
    for (std::size_t n = 0; n < b; ++n) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double mu = stats.mu.at4(n, ch, 0, 0);
            const double inv_sd = 1.0 / std::sqrt(stats.sigma2.at4(n, ch, 0, 0) + kVarianceRidge);
            const double a = sampled.sigma_bar.at4(n, ch, 0, 0) * inv_sd;
            const double shift = sampled.mu_bar.at4(n, ch, 0, 0);
            slope.at(n, ch) = a;
            const double* src = &z->value.data[(n * c + ch) * w];
            double* dst = &out.data[(n * c + ch) * w];
            for (std::size_t i = 0; i < w; ++i) dst[i] = a * (src[i] - mu) + shift;
        }
    }
    return detail::make_op(std::move(out), {z}, [slope](Node& self) {
        const std::size_t b = self.value.dim(0), c = self.value.dim(1), w = self.value.dim(3);
        Tensor& gz = self.parents[0]->ensure_grad();
        for (std::size_t n = 0; n < b; ++n) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double a = slope.at(n, ch);
                const double* g = &self.grad.data[(n * c + ch) * w];
                double* dst = &gz.data[(n * c + ch) * w];
                for (std::size_t i = 0; i < w; ++i) dst[i] += a * g[i];
            }
        }
    });
}

Var ids(const Var& z, const IdsOptions& opts, std::mt19937_64& rng, SampledStyle* sampled_out) {
    require_map(z->value, "ids");
    const std::size_t b = z->value.dim(0), c = z->value.dim(1);
    if (b < 2) {
        throw std::invalid_argument("ids: batch size must be >= 2, got " + std::to_string(b));
    }

    const StyleStats stats = spatial_stats(z->value);
    std::vector<std::vector<double>> mu_rows = stat_rows(stats.mu);
    std::vector<std::vector<double>> sigma_rows = stat_rows(stats.sigma2);
    for (auto& row : sigma_rows) {
        for (double& v : row) v = std::sqrt(v);
    }
    const StyleGaussian mu_model = fit_style_gaussian(mu_rows);
    const StyleGaussian sigma_model = fit_style_gaussian(sigma_rows);

    SampledStyle sampled;
    sampled.mu_bar = Tensor({b, c, 1, 1});
    sampled.sigma_bar = Tensor({b, c, 1, 1});
    sampled.draws_used_mu.resize(b);
    sampled.draws_used_sigma.resize(b);
    sampled.fallback_mu.resize(b);
    sampled.fallback_sigma.resize(b);
    for (std::size_t n = 0; n < b; ++n) {
        TailSample mu_draw = sample_tail(mu_model, opts.eps, rng, opts.max_draws);
        TailSample sigma_draw = sample_tail(sigma_model, opts.eps, rng, opts.max_draws);
        sampled.draws_used_mu[n] = mu_draw.draws_used;
        sampled.draws_used_sigma[n] = sigma_draw.draws_used;
        sampled.fallback_mu[n] = mu_draw.fallback;
        sampled.fallback_sigma[n] = sigma_draw.fallback;
        for (std::size_t ch = 0; ch < c; ++ch) {
            sampled.mu_bar.at4(n, ch, 0, 0) = mu_draw.value[ch];
            sampled.sigma_bar.at4(n, ch, 0, 0) = std::max(sigma_draw.value[ch], opts.sigma_floor);
        }
    }
    if (sampled_out) *sampled_out = sampled;
    return ids_transform(z, stats, sampled);
}

}  // namespace caudg
