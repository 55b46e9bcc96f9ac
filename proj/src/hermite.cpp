#include "wicksg/hermite.hpp"

#include <cmath>
#include <stdexcept>

namespace wicksg::chaos {

double hermite_eval(int n, double x) {
  if (n < 0) throw std::invalid_argument("hermite_eval: negative degree");
  if (n == 0) return 1.0;
  double prev = 1.0, cur = x;
  for (int k = 1; k < n; ++k) {
    const double next = x * cur - k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

std::vector<double> hermite_eval_upto(int n, double x) {
  std::vector<double> he(static_cast<std::size_t>(n) + 1);
  he[0] = 1.0;
  if (n >= 1) he[1] = x;
  for (int k = 1; k < n; ++k) he[static_cast<std::size_t>(k) + 1] = x * he[static_cast<std::size_t>(k)] - k * he[static_cast<std::size_t>(k) - 1];
  return he;
}

namespace {
// 0! .. 20! hold exactly in 64-bit integers; beyond that switch to lgamma.
constexpr int kExactMax = 20;
const double* exact_factorials() {
  static double table[kExactMax + 1];
  static const bool init = [] {
    unsigned long long f = 1;
    table[0] = 1.0;
    for (int n = 1; n <= kExactMax; ++n) {
      f *= static_cast<unsigned long long>(n);
      table[n] = static_cast<double>(f);
    }
    return true;
  }();
  (void)init;
  return table;
}
} // namespace

double factorial(int n) {
  if (n < 0) throw std::invalid_argument("factorial: negative argument");
  if (n <= kExactMax) return exact_factorials()[n];
  return std::exp(std::lgamma(static_cast<double>(n) + 1.0));
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  if (n <= kExactMax) return exact_factorials()[n] / (exact_factorials()[k] * exact_factorials()[n - k]);
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

double chi(int i, int j, int k) {
  if (k < 0 || k > i || k > j) return 0.0;
  return factorial(k) * binomial(i, k) * binomial(j, k);
}

std::map<int, double> product_expansion(int i, int j) {
  if (i < 0 || j < 0) throw std::invalid_argument("product_expansion: negative degree");
  std::map<int, double> terms;
  for (int k = 0; k <= std::min(i, j); ++k) terms[i + j - 2 * k] = chi(i, j, k);
  return terms;
}

double hermite_triple_expectation(int i, int j, int n) {
  const int s = i + j - n;
  if (s < 0 || s % 2 != 0 || s > 2 * std::min(i, j)) return 0.0;
  return chi(i, j, s / 2) * factorial(n);
}

} // namespace wicksg::chaos
