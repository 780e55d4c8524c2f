#pragma once

#include <complex>
#include <functional>

namespace simstack::quad {

struct Result {
    std::complex<double> value;
    double error_estimate = 0.0;
};

/// Adaptive Gauss-Legendre: bisects until the 20-point rule on an interval
/// agrees with the sum over its halves to within the interval's share of
/// `abs_tol`.
Result integrate(const std::function<std::complex<double>(double)>& f, double a, double b, double abs_tol,
                 int max_depth = 48);

}  // namespace simstack::quad
