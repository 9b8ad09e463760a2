#pragma once

namespace sdnguard::stats {

/// psi(x) for x > 0: recurrence up to x >= 10, then the asymptotic series.
double digamma(double x);

/// I_x(a, b) by Lentz's continued fraction; x in [0,1], a, b > 0.
double regularized_incomplete_beta(double x, double a, double b);

/// Upper tail P(F > f) of Fisher's F(d1, d2).
double f_survival(double f, double d1, double d2);

}  // namespace sdnguard::stats
