#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace pfsa {

// Absolute tolerance for all stochasticity checks (row sums, distributions).
inline constexpr double kStochasticTol = 1e-12;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// All entropies and divergences are in bits.
inline double log2_safe(double x) { return std::log2(x); }

// Binary entropy h_b(p), with h_b(0) = h_b(1) = 0.
inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

// KL divergence between Bernoulli(p) and Bernoulli(q) in bits.
// Conventions: 0*log(0/q) = 0; p>0 with q=0 gives +inf.
inline double binary_kl(double p, double q) {
  double d = 0.0;
  if (p > 0.0) {
    if (q <= 0.0) return kInfinity;
    d += p * std::log2(p / q);
  }
  if (p < 1.0) {
    if (q >= 1.0) return kInfinity;
    d += (1.0 - p) * std::log2((1.0 - p) / (1.0 - q));
  }
  return d;
}

// Entropy of a finite distribution in bits. Zero entries contribute zero.
inline double row_entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

// Categorical KL divergence in bits, same conventions as binary_kl.
inline double row_kl(const std::vector<double>& p, const std::vector<double>& q) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return kInfinity;
    d += p[i] * std::log2(p[i] / q[i]);
  }
  return d;
}

// Neumaier compensated summation. The enumeration oracles sum 2^n terms
// and are checked against closed forms at 1e-12, which plain accumulation
// does not reliably reach.
class KahanSum {
 public:
  void add(double v) {
    double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

}  // namespace pfsa
