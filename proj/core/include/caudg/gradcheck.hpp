#pragma once

#include <functional>

#include "caudg/tensor.hpp"

namespace caudg {

/// Central-difference check of an analytic gradient in double precision.
/// `fn` evaluates the scalar objective at a point; `analytic` is the gradient
/// to verify. Returns the maximum relative error over coordinates, with
/// relative error |a - n| / max(1e-8, |a| + |n|).
double finite_difference_check(const std::function<double(const Tensor&)>& fn, const Tensor& point,
                               const Tensor& analytic, double h = 1e-5);

}  // namespace caudg
