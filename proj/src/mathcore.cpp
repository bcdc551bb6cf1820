#include "crsa/mathcore.hpp"

#include <algorithm>
#include <cmath>

namespace crsa {

double FractionalProgram::upper_bound() const noexcept
{
    return std::min(1.0, (d - w) / c);
}

double FractionalProgram::objective(double x) const noexcept
{
    return (a * x + f) / (c * x - d) + K * x;
}

double fractional_second_derivative(const FractionalProgram& prog, double x) noexcept
{
    const double denom = prog.c * x - prog.d;
    return 2.0 * prog.c * (prog.a * prog.d + prog.c * prog.f) / (denom * denom * denom);
}

FractionalSolution solve_fractional(const FractionalProgram& prog)
{
    const auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
    const auto finite_pos = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!finite_nonneg(prog.a) || !finite_nonneg(prog.f) || !finite_nonneg(prog.w)) {
        throw DomainError("solve_fractional: a, f, w must be finite and non-negative");
    }
    if (!finite_pos(prog.c) || !finite_pos(prog.d) || !finite_pos(prog.K)) {
        throw DomainError("solve_fractional: c, d, K must be finite and positive");
    }
    if (!prog.feasible()) {
        throw InfeasibleError("solve_fractional: d < w, feasible set is empty");
    }
    if (prog.c > prog.d) {
        throw DomainError("solve_fractional: requires c <= d for concavity");
    }

    const double root = (prog.d - std::sqrt((prog.a * prog.d + prog.c * prog.f) / prog.K)) / prog.c;
    const double x = std::max(std::min({root, (prog.d - prog.w) / prog.c, 1.0}), 0.0);
    return {x, prog.objective(x)};
}

}  // namespace crsa
