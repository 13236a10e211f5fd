#include "caudg/hsic.hpp"

#include <stdexcept>

namespace caudg {

namespace {
std::size_t batch_of(const Var& f, const char* op) {
    if (f->value.rank() != 2) {
        throw std::invalid_argument(std::string(op) + ": expected [B, D] features, got " +
                                    f->value.shape_str());
    }
    return f->value.dim(0);
}

void require_same_batch(const Var& fc, const Var& fd, const char* op) {
    if (batch_of(fc, op) != batch_of(fd, op)) {
        throw std::invalid_argument(std::string(op) + ": batch mismatch " + fc->value.shape_str() +
                                    " vs " + fd->value.shape_str());
    }
}
}  // namespace

Var hsic(const Var& fc, const Var& fd) {
    require_same_batch(fc, fd, "hsic");
    const std::size_t b = fc->value.dim(0);
    if (b < 2) {
        throw std::invalid_argument("hsic: batch size must be >= 2, got " + std::to_string(b));
    }
    // trace(K H L H) = <H K H, H L H> for symmetric K, L and idempotent H.
    auto kc = center_bilateral(gram(row_normalize(fc)));
    auto lc = center_bilateral(gram(row_normalize(fd)));
    const double denom = static_cast<double>(b - 1) * static_cast<double>(b - 1);
    return scale(dot_all(kc, lc), 1.0 / denom);
}

Var orth_penalty(const Var& fc, const Var& fd) {
    require_same_batch(fc, fd, "orth_penalty");
    if (fc->value.dim(1) != fd->value.dim(1)) {
        throw std::invalid_argument("orth_penalty: feature dim mismatch " + fc->value.shape_str() +
                                    " vs " + fd->value.shape_str());
    }
    return mean_all(square(rowwise_dot(row_normalize(fc), row_normalize(fd))));
}

Var corr_penalty(const Var& fc, const Var& fd) {
    require_same_batch(fc, fd, "corr_penalty");
    const std::size_t b = fc->value.dim(0);
    if (b < 2) {
        throw std::invalid_argument("corr_penalty: batch size must be >= 2, got " +
                                    std::to_string(b));
    }
    auto cross = matmul_tn(standardize_cols(fc), standardize_cols(fd));
    return mean_all(square(scale(cross, 1.0 / static_cast<double>(b))));
}

}  // namespace caudg
