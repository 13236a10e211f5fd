#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace caudg {

/// Batch-level Gaussian over per-sample style vectors (the mu or sigma rows of
/// a feature-map batch). Covariance is the biased outer-product estimate plus
/// a ridge delta*I; a diagonal fallback keeps the factorization usable when
/// the ridged matrix still fails to factor.
class StyleGaussian {
public:
    /// rows: [B, C] per-sample vectors, B >= 2.
    static StyleGaussian fit(const std::vector<std::vector<double>>& rows);

    const std::vector<double>& mean() const { return mean_; }
    const std::vector<std::vector<double>>& covariance() const { return cov_; }
    double ridge_delta() const { return delta_; }
    bool diagonal_fallback() const { return diagonal_fallback_; }
    std::size_t dim() const { return mean_.size(); }

    /// log N(x | mean, covariance) with the C-dimensional normalizer.
    double log_density(const std::vector<double>& x) const;

    /// One draw mean + L * n with n iid standard normal.
    std::vector<double> sample(std::mt19937_64& rng) const;

private:
    std::vector<double> mean_;
    std::vector<std::vector<double>> cov_;     // after ridge
    std::vector<std::vector<double>> chol_;    // lower-triangular factor
    double delta_ = 0.0;
    double log_det_half_ = 0.0;                // sum log L_ii
    bool diagonal_fallback_ = false;
};

/// Result of tail sampling one style vector (Eq.-(4)-style acceptance).
struct TailSample {
    std::vector<double> value;
    int draws_used = 0;
    bool fallback = false;  // set when max_draws exhausted; value is the min-density draw
};

/// Rejection-samples from `model` until the density is below `eps` (compared
/// in log space). After `max_draws` failures the lowest-density draw is
/// returned with the fallback flag set.
TailSample sample_tail(const StyleGaussian& model, double eps, std::mt19937_64& rng,
                       int max_draws = 100);

}  // namespace caudg
