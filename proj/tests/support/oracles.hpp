#pragma once

// Reference computations the library is checked against. Nothing here calls
// into tracelens: the χ² side uses Boost.Math and the Kolmogorov side a
// 50-digit evaluation of the alternating series.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oracle {

using Big = boost::multiprecision::cpp_bin_float_50;

inline std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline std::string DataPath(const std::string& name) {
  return std::string(TRACELENS_TEST_DATA) + "/" + name;
}

// χ² goodness of fit with cells of expected mass below 1e-9 folded into the
// previous cell (or the next one when no previous cell exists).
inline double ChiSquareAd(const std::vector<double>& observed, const std::vector<double>& target) {
  long double total = 0;
  for (double o : observed) total += o;
  if (total <= 0) return 0.0;
  std::vector<std::pair<long double, long double>> cells;
  long double carry_o = 0, carry_e = 0;
  for (size_t i = 0; i < observed.size(); ++i) {
    const long double e = static_cast<long double>(target[i]) * total;
    if (e < 1e-9L) {
      if (cells.empty()) {
        carry_o += observed[i];
        carry_e += e;
      } else {
        cells.back().first += observed[i];
        cells.back().second += e;
      }
      continue;
    }
    cells.emplace_back(observed[i] + carry_o, e + carry_e);
    carry_o = carry_e = 0;
  }
  if (cells.size() < 2) return 0.0;
  long double stat = 0;
  for (const auto& [o, e] : cells) stat += (o - e) * (o - e) / e;
  boost::math::chi_squared dist(static_cast<double>(cells.size() - 1));
  const double p = boost::math::cdf(boost::math::complement(dist, static_cast<double>(stat)));
  return std::clamp(1.0 - p, 0.0, 1.0);
}

// P(K > lambda) = 2 Σ_{k≥1} (-1)^{k-1} exp(-2 k² λ²), summed to 50 digits.
inline double KolmogorovSurvival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  const Big l(lambda);
  Big sum = 0;
  for (int k = 1; k < 100000; ++k) {
    const Big term = exp(Big(-2) * k * k * l * l);
    sum += (k % 2 == 1) ? term : Big(-term);
    if (term < Big("1e-60")) break;
  }
  Big q = 2 * sum;
  if (q > 1) q = 1;
  if (q < 0) q = 0;
  return static_cast<double>(q);
}

inline double KsAd(const std::vector<double>& observed, const std::vector<double>& target) {
  Big total = 0, target_total = 0;
  for (double o : observed) total += o;
  for (double t : target) target_total += t;
  if (total <= 0 || target_total <= 0) return 0.0;
  Big co = 0, ct = 0, d = 0;
  for (size_t i = 0; i < observed.size(); ++i) {
    co += observed[i];
    ct += target[i];
    const Big diff = abs(co / total - ct / target_total);
    if (diff > d) d = diff;
  }
  const double lambda = static_cast<double>(sqrt(total) * d);
  return std::clamp(1.0 - KolmogorovSurvival(lambda), 0.0, 1.0);
}

inline std::vector<double> RandomSimplex(std::mt19937_64& rng, size_t n, double floor = 0.0) {
  std::uniform_real_distribution<double> u(floor, 1.0);
  std::vector<double> w(n);
  double sum = 0;
  for (double& x : w) sum += (x = u(rng));
  for (double& x : w) x /= sum;
  return w;
}

// Synthetic table: `nominal` N columns named n0.., `quantitative` Q columns
// q0.., one "year" T column; a sprinkling of NA cells in the Q columns.
inline std::string SyntheticCsv(size_t rows, size_t nominal, size_t quantitative, uint64_t seed,
                                bool with_nulls = true) {
  std::mt19937_64 rng(seed);
  std::ostringstream out;
  for (size_t c = 0; c < nominal; ++c) out << "n" << c << ',';
  for (size_t c = 0; c < quantitative; ++c) out << "q" << c << ',';
  out << "year\n";
  std::uniform_int_distribution<int> cat(0, 5);
  std::uniform_int_distribution<int> year(1990, 2020);
  std::normal_distribution<double> value(50.0, 20.0);
  std::uniform_int_distribution<int> null_roll(0, 49);
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < nominal; ++c) out << "c" << (cat(rng) + static_cast<int>(c) % 3) << ',';
    for (size_t c = 0; c < quantitative; ++c) {
      if (with_nulls && null_roll(rng) == 0) {
        out << "NA,";
      } else {
        out << std::round(value(rng) * 100.0) / 100.0 << ',';
      }
    }
    out << year(rng) << '\n';
  }
  return out.str();
}

}  // namespace oracle
