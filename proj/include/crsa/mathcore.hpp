#pragma once

#include <cmath>
#include <concepts>
#include <limits>

#include "crsa/errors.hpp"

namespace crsa {

namespace detail {
inline double erfc_of(double x) { return std::erfc(x); }
inline long double erfc_of(long double x) { return std::erfc(x); }
inline float erfc_of(float x) { return std::erfc(x); }
}  // namespace detail

/// Gaussian tail Q(z) = Pr{N(0,1) > z} = erfc(z/sqrt 2)/2.
///
/// Templated so callers that need to resolve probabilities close to one
/// (Q of a large negative argument) can work in long double. Everything else
/// in the library uses the double instantiation.
template <std::floating_point Real>
Real q_func(Real z)
{
    if (!std::isfinite(z)) {
        throw DomainError("q_func: argument must be finite");
    }
    constexpr Real inv_sqrt2 =
        static_cast<Real>(0.707106781186547524400844362104849039L);
    return detail::erfc_of(z * inv_sqrt2) / Real{2};
}

/// Inverse of q_func by monotone bisection.
///
/// The bracket [-h, h] starts at h = 8 and doubles until Q(h) < p, so tail
/// probabilities down to the smallest subnormal are resolved. Bisection runs
/// until the bracket stops shrinking in Real, which is tighter than the 1e-12
/// tolerance the ROC formulas need.
template <std::floating_point Real>
Real q_inv(Real p)
{
    if (!(p > Real{0} && p < Real{1})) {
        throw DomainError("q_inv: probability must lie in (0, 1)");
    }
    Real hi = Real{8};
    while (q_func(hi) >= p && hi < std::numeric_limits<Real>::max_exponent) {
        hi *= Real{2};
    }
    // 1 - p is at least one ulp of 1, far above Q(-h) - 1 for any h >= 8.
    Real lo = -hi;
    for (int iter = 0; iter < 512; ++iter) {
        const Real mid = lo + (hi - lo) / Real{2};
        if (mid == lo || mid == hi) {
            break;
        }
        if (q_func(mid) > p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo + (hi - lo) / Real{2};
}

/// maximize (a x + f)/(c x - d) + K x  s.t.  0 <= x <= (d - w)/c,  x <= 1.
///
/// Numerator constants a, f and the bound w may be zero (they vanish for an
/// idle primary or b_s = 0); c, d, K must be strictly positive and c <= d so
/// that c x - d <= 0 on the feasible set, which makes the objective concave.
struct FractionalProgram {
    double a = 0.0;
    double f = 0.0;
    double c = 1.0;
    double d = 1.0;
    double K = 1.0;
    double w = 0.0;

    [[nodiscard]] bool feasible() const noexcept { return d >= w; }
    /// Right end of the feasible interval, min(1, (d - w)/c).
    [[nodiscard]] double upper_bound() const noexcept;
    [[nodiscard]] double objective(double x) const noexcept;
};

struct FractionalSolution {
    double x_star = 0.0;
    double objective = 0.0;
};

/// Closed-form maximizer: the smaller stationary root
/// x2 = (d - sqrt((a d + c f)/K))/c clipped to [0, min(1, (d - w)/c)].
///
/// Throws InfeasibleError when d < w and DomainError when c > d or a
/// constant is outside its allowed range.
FractionalSolution solve_fractional(const FractionalProgram& prog);

/// Analytic second derivative 2c(ad + cf)/(cx - d)^3 of the objective.
double fractional_second_derivative(const FractionalProgram& prog, double x) noexcept;

}  // namespace crsa
