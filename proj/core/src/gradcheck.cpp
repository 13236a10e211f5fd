#include "caudg/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace caudg {

double finite_difference_check(const std::function<double(const Tensor&)>& fn, const Tensor& point,
                               const Tensor& analytic, double h) {
    if (!point.same_shape(analytic)) {
        throw std::invalid_argument("finite_difference_check: gradient shape " +
                                    analytic.shape_str() + " does not match point " +
                                    point.shape_str());
    }
    Tensor probe = point;
    double worst = 0.0;
    for (std::size_t i = 0; i < probe.numel(); ++i) {
        const double orig = probe.data[i];
        probe.data[i] = orig + h;
        const double fp = fn(probe);
        probe.data[i] = orig - h;
        const double fm = fn(probe);
        probe.data[i] = orig;
        const double numeric = (fp - fm) / (2.0 * h);
        const double a = analytic.data[i];
        const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace caudg
