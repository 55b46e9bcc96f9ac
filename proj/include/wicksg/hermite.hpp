#ifndef WICKSG_HERMITE_HPP
#define WICKSG_HERMITE_HPP

#include <map>
#include <vector>

namespace wicksg::chaos {

/// Probabilists' Hermite polynomial He_n(x) by the three-term recurrence
/// He_{n+1} = x He_n - n He_{n-1}, He_0 = 1, He_1 = x.
double hermite_eval(int n, double x);

/// He_0(x) .. He_n(x).
std::vector<double> hermite_eval_upto(int n, double x);

/// n! as a double; exact below 21, exp(lgamma) beyond.
double factorial(int n);

/// binom(n, k) as a double (0 when k < 0 or k > n).
double binomial(int n, int k);

/// chi(i, j, k) = i! j! / (k! (i-k)! (j-k)!) = k! binom(i,k) binom(j,k).
double chi(int i, int j, int k);

/// Linearization He_i He_j = sum_k chi(i,j,k) He_{i+j-2k}, 0 <= k <= min(i,j).
/// Returned as degree -> coefficient.
std::map<int, double> product_expansion(int i, int j);

/// E[He_i He_j He_n] for one dimension; zero unless i+j-n is even,
/// non-negative and at most 2 min(i,j).
double hermite_triple_expectation(int i, int j, int n);

} // namespace wicksg::chaos

#endif
