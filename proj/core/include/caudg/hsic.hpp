#pragma once

#include "caudg/autodiff.hpp"

namespace caudg {

/// Linear-kernel Hilbert-Schmidt independence criterion between two feature
/// batches of shape [B, D_c] and [B, D_d], B >= 2. Rows are L2-normalized per
/// sample, K and L are the cosine Gram matrices, and the estimate is
/// trace(K H L H) / (B - 1)^2 with H = I - (1/B) 11^T. Differentiable in both
/// arguments; symmetric; zero for constant-row batches.
Var hsic(const Var& fc, const Var& fd);

/// Mean squared per-sample inner product of the row-normalized batches.
/// Zero iff every sample's two feature vectors are orthogonal. Requires
/// matching feature dimensions.
Var orth_penalty(const Var& fc, const Var& fd);

/// Mean squared entry of the cross-correlation matrix
/// standardize(Fc)^T standardize(Fd) / B (columns z-scored over the batch
/// with ridge 1e-8). Requires B >= 2.
Var corr_penalty(const Var& fc, const Var& fd);

}  // namespace caudg
