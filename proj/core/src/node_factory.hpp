#pragma once

#include <functional>
#include <vector>

#include "caudg/autodiff.hpp"

namespace caudg::detail {

/// Creates an op node: value, parents, and the gradient closure. Parents and
/// the closure are dropped when no parent requires grad.
Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn);

}  // namespace caudg::detail
