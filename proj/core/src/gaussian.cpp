#include "caudg/gaussian.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "caudg/rng.hpp"

namespace caudg {

namespace {
/// In-place lower Cholesky; returns false if a pivot is not strictly positive.
bool cholesky(const std::vector<std::vector<double>>& a, std::vector<std::vector<double>>& l) {
    const std::size_t n = a.size();
    l.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            if (i == j) {
                if (s <= 0.0) return false;
                l[i][j] = std::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    return true;
}
}  // namespace

StyleGaussian StyleGaussian::fit(const std::vector<std::vector<double>>& rows) {
    const std::size_t b = rows.size();
    if (b < 2) {
        throw std::invalid_argument("StyleGaussian::fit: need at least 2 samples, got " +
                                    std::to_string(b));
    }
    const std::size_t c = rows[0].size();
    for (const auto& r : rows) {
        if (r.size() != c) throw std::invalid_argument("StyleGaussian::fit: ragged input rows");
    }

    StyleGaussian g;
    g.mean_.assign(c, 0.0);
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < c; ++j) g.mean_[j] += r[j];
    }
    for (std::size_t j = 0; j < c; ++j) g.mean_[j] /= static_cast<double>(b);

    g.cov_.assign(c, std::vector<double>(c, 0.0));
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < c; ++i) {
            const double di = r[i] - g.mean_[i];
            for (std::size_t j = 0; j <= i; ++j) {
                g.cov_[i][j] += di * (r[j] - g.mean_[j]);
            }
        }
    }
    double trace = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            g.cov_[i][j] /= static_cast<double>(b);
            g.cov_[j][i] = g.cov_[i][j];
        }
        trace += g.cov_[i][i];
    }

    g.delta_ = std::max(1e-6, 1e-6 * trace / static_cast<double>(c));
    for (std::size_t i = 0; i < c; ++i) g.cov_[i][i] += g.delta_;

    if (!cholesky(g.cov_, g.chol_)) {
        // Ridged full covariance failed to factor; keep only the diagonal.
        g.diagonal_fallback_ = true;
        std::vector<std::vector<double>> diag(c, std::vector<double>(c, 0.0));
        for (std::size_t i = 0; i < c; ++i) diag[i][i] = g.cov_[i][i];
        g.cov_ = diag;
        if (!cholesky(g.cov_, g.chol_)) {
            throw std::runtime_error("StyleGaussian::fit: diagonal fallback failed to factor");
        }
    }
    g.log_det_half_ = 0.0;
    for (std::size_t i = 0; i < c; ++i) g.log_det_half_ += std::log(g.chol_[i][i]);
    return g;
}

double StyleGaussian::log_density(const std::vector<double>& x) const {
    const std::size_t c = dim();
    if (x.size() != c) {
        throw std::invalid_argument("StyleGaussian::log_density: dim mismatch");
    }
    // Solve L v = (x - mean) by forward substitution; Mahalanobis = ||v||^2.
    std::vector<double> v(c);
    for (std::size_t i = 0; i < c; ++i) {
        double s = x[i] - mean_[i];
        for (std::size_t k = 0; k < i; ++k) s -= chol_[i][k] * v[k];
        v[i] = s / chol_[i][i];
    }
    double maha = 0.0;
    for (double t : v) maha += t * t;
    const double log_norm =
        0.5 * static_cast<double>(c) * std::log(2.0 * std::numbers::pi) + log_det_half_;
    return -log_norm - 0.5 * maha;
}

std::vector<double> StyleGaussian::sample(std::mt19937_64& rng) const {
    const std::size_t c = dim();
    std::vector<double> n(c);
    for (double& t : n) t = draw_normal(rng);
    std::vector<double> x(mean_);
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t k = 0; k <= i; ++k) x[i] += chol_[i][k] * n[k];
    }
    return x;
}

TailSample sample_tail(const StyleGaussian& model, double eps, std::mt19937_64& rng,
                       int max_draws) {
    if (!(eps > 0.0)) {
        throw std::invalid_argument("sample_tail: eps must be > 0");
    }
    for (double m : model.mean()) {
        if (!std::isfinite(m)) throw std::invalid_argument("sample_tail: non-finite model mean");
    }
    const double log_eps = std::log(eps);

    TailSample best;
    double best_log_density = std::numeric_limits<double>::infinity();
    for (int i = 0; i < max_draws; ++i) {
        std::vector<double> x = model.sample(rng);
        const double ld = model.log_density(x);
        if (ld < log_eps) {
            return TailSample{std::move(x), i + 1, false};
        }
        if (ld < best_log_density) {
            best_log_density = ld;
            best.value = std::move(x);
        }
    }
    best.draws_used = max_draws;
    best.fallback = true;
    return best;
}

}  // namespace caudg
