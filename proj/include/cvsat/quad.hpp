#pragma once

#include <functional>

namespace cvsat::quad {

inline constexpr double kAbsTol = 1e-10;
inline constexpr double kRelTol = 1e-6;

/// Adaptive Gauss-Kronrod integration of f over [a, b].
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = kAbsTol, double rel_tol = kRelTol);

/// Adaptive integration of f over [a, inf).
double integrate_upper(const std::function<double(double)>& f, double a,
                       double abs_tol = kAbsTol, double rel_tol = kRelTol);

}  // namespace cvsat::quad
