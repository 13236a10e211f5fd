#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "caudg/tensor.hpp"

namespace caudg {

class Node;
using Var = std::shared_ptr<Node>;

/// One vertex of the forward graph. Ops create nodes after their parents,
/// so descending creation order is a valid reverse topological order.
class Node {
public:
    Tensor value;
    Tensor grad;  // allocated on first accumulation, same shape as value
    bool requires_grad = false;
    std::string name;
    std::uint64_t order = 0;
    std::vector<Var> parents;
    std::function<void(Node&)> backward_fn;

    Tensor& ensure_grad();
    bool has_grad() const { return grad.numel() == value.numel() && grad.numel() > 0; }
    void zero_grad();
};

/// Leaf with no gradient tracking.
Var constant(Tensor value);
/// Leaf that participates in backward (model parameters, gradient-checked inputs).
Var leaf(Tensor value, std::string name = "");
/// Copy of `v`'s value with the graph cut (stop-gradient).
Var detach(const Var& v);

/// Reverse-mode sweep from a scalar loss; gradients accumulate (+=) into
/// every reachable leaf with requires_grad. Throws if `loss` is not scalar
/// or no differentiable forward pass is recorded beneath it.
void backward(const Var& loss);

// ---------------------------------------------------------------------------
// Layer ops (rank-4 activations are [B, C, 1, W], matrices are [B, D])
// ---------------------------------------------------------------------------

/// Valid (no padding) 1-D convolution along the width axis.
/// x: [B, C_in, 1, W], w: [F, C_in, 1, K], b: [F] -> [B, F, 1, (W-K)/stride + 1]
Var conv1d(const Var& x, const Var& w, const Var& b, std::size_t stride = 1);

/// Non-overlapping max pooling along width; remainder columns are dropped.
/// Backward routes to the first maximal element of each window.
Var maxpool1d(const Var& x, std::size_t width);

/// y = x * W^T + b with x: [B, D_in], W: [D_out, D_in], b: [D_out].
Var fully_connected(const Var& x, const Var& w, const Var& b);

/// Batch normalization over [B, D]. Train mode normalizes with batch statistics
/// (biased variance, ridge 1e-5) and updates `running_mean`/`running_var` with
/// momentum 0.1; eval mode normalizes with the running statistics.
Var batch_norm(const Var& x, const Var& gamma, const Var& beta, Tensor& running_mean,
               Tensor& running_var, bool train);

Var relu(const Var& x);

/// Mean over the batch of -log softmax(logits)[label], max-shifted.
Var softmax_cross_entropy(const Var& logits, const std::vector<int>& labels);

/// [B, C, 1, W] -> [B, C*W], row-major.
Var flatten(const Var& x);

// ---------------------------------------------------------------------------
// Elementwise / reduction ops
// ---------------------------------------------------------------------------

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var square(const Var& a);
/// Elementwise min(x, 0); subgradient 0 at the kink.
Var min_zero(const Var& a);
Var sum_all(const Var& a);
Var mean_all(const Var& a);

// ---------------------------------------------------------------------------
// Matrix ops used by the independence and consistency losses
// ---------------------------------------------------------------------------

/// Each row divided by max(||row||_2, 1e-12); zero rows pass through scaled.
Var row_normalize(const Var& a);

/// a * a^T for a: [B, D] -> [B, B].
Var gram(const Var& a);

/// H K H for the centering matrix H = I - (1/B) 11^T, computed as
/// K_ij - rowmean_i - colmean_j + totalmean. Self-adjoint, so the backward
/// pass applies the same centering to the upstream gradient.
Var center_bilateral(const Var& k);

/// sum_ij A_ij * B_ij (Frobenius inner product).
Var dot_all(const Var& a, const Var& b);

/// a^T * b for a: [B, D1], b: [B, D2] -> [D1, D2].
Var matmul_tn(const Var& a, const Var& b);

/// Per-row inner products of equal-shape matrices: [B, D] x [B, D] -> [B].
Var rowwise_dot(const Var& a, const Var& b);

/// Per-row L1 distance: sum_d |a_bd - b_bd| -> [B]. Subgradient 0 where equal.
Var rowwise_l1(const Var& a, const Var& b);

/// Column z-scoring over the batch: (x - mean) / sqrt(var + ridge).
Var standardize_cols(const Var& a, double ridge = 1e-8);

}  // namespace caudg
