#include "simstack/quadrature.hpp"

#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

namespace simstack::quad {

namespace {

using Rule = boost::math::quadrature::gauss<double, 20>;

std::complex<double> gauss20(const std::function<std::complex<double>(double)>& f, double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    const auto& x = Rule::abscissa();
    const auto& w = Rule::weights();
    std::complex<double> sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sum += w[i] * (f(mid - half * x[i]) + f(mid + half * x[i]));
    }
    return half * sum;
}

void refine(const std::function<std::complex<double>(double)>& f, double a, double b,
            std::complex<double> whole, double tol, int depth, Result& acc) {
    const double mid = 0.5 * (a + b);
    const auto left = gauss20(f, a, mid);
    const auto right = gauss20(f, mid, b);
    const double diff = std::abs(left + right - whole);
    // Roundoff floor keeps the recursion finite when tol is below machine precision.
    const double floor = 1e-15 * std::abs(left + right);
    if (diff <= std::max(tol, floor) || depth <= 0 || mid <= a || mid >= b) {
        acc.value += left + right;
        acc.error_estimate += diff;
        return;
    }
    refine(f, a, mid, left, 0.5 * tol, depth - 1, acc);
    refine(f, mid, b, right, 0.5 * tol, depth - 1, acc);
}

}  // namespace

Result integrate(const std::function<std::complex<double>(double)>& f, double a, double b, double abs_tol,
                 int max_depth) {
    Result acc{0.0, 0.0};
    if (a == b) return acc;
    refine(f, a, b, gauss20(f, a, b), abs_tol, max_depth, acc);
    return acc;
}

}  // namespace simstack::quad
