#pragma once

namespace tracelens::stats {

// Upper regularized incomplete gamma Q(a, x) = Γ(a, x) / Γ(a), a > 0, x >= 0.
double RegularizedGammaQ(double a, double x);

// P(X >= statistic) for X ~ χ²(degrees_of_freedom).
double ChiSquareSurvival(double statistic, double degrees_of_freedom);

// P(K > lambda) for the Kolmogorov distribution, i.e. the asymptotic
// p-value of a KS test whose scaled statistic is sqrt(n) * D.
double KolmogorovSurvival(double lambda);

}  // namespace tracelens::stats
