#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "corrlab/error.hpp"

namespace corrlab {

using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Kahan-Babuska (Neumaier) compensated accumulator.
class CompensatedSum {
public:
    void add(double x)
    {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

class CompensatedComplexSum {
public:
    void add(cplx z)
    {
        re_.add(z.real());
        im_.add(z.imag());
    }
    cplx value() const { return {re_.value(), im_.value()}; }

private:
    CompensatedSum re_, im_;
};

// Pairwise (tree) reduction; result independent of how the caller split work.
double pairwise_sum(std::span<const double> xs);
cplx pairwise_sum(std::span<const cplx> xs);

// Fractional part of alpha*n in [0,1), using an error-free product so that
// large n do not lose phase accuracy.
inline double frac_product(double alpha, double n)
{
    double p = alpha * n;
    double err = std::fma(alpha, n, -p);
    double fp = p - std::floor(p);
    double r = fp + err;
    r -= std::floor(r);
    return r;
}

// e(x) = exp(2 pi i x), reducing x mod 1 first.
inline cplx e_of(double x)
{
    double f = x - std::floor(x);
    return {std::cos(two_pi * f), std::sin(two_pi * f)};
}

struct GaussRule {
    std::vector<double> nodes;    // on [-1,1]
    std::vector<double> weights;
};

// n-point Gauss-Legendre rule, cached per n.
const GaussRule& gauss_legendre(int n);

struct QuadResult {
    cplx value;
    double abs_integral = 0.0;   // estimate of the integral of |f|
    int panels = 0;
    int nodes = 0;
};

struct QuadOptions {
    int initial_panels = 1;
    int order = 16;              // Gauss points per panel
    double rel_tol = 1e-8;
    int max_panels = 1 << 16;
    int min_doublings = 1;
};

// Composite Gauss-Legendre with panel doubling until successive estimates
// agree to rel_tol relative to max(|I|, integral of |f|).
template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadOptions& opt = {})
{
    const GaussRule& rule = gauss_legendre(opt.order);
    auto run = [&](int panels, double& absint) {
        CompensatedComplexSum acc;
        CompensatedSum absacc;
        double h = (b - a) / panels;
        for (int p = 0; p < panels; ++p) {
            double lo = a + h * p;
            double mid = lo + 0.5 * h;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                double x = mid + 0.5 * h * rule.nodes[i];
                cplx v = cplx(f(x));
                double w = 0.5 * h * rule.weights[i];
                acc.add(w * v);
                absacc.add(w * std::abs(v));
            }
        }
        absint = absacc.value();
        return acc.value();
    };
    int panels = std::max(1, opt.initial_panels);
    double absint = 0.0;
    cplx prev = run(panels, absint);
    for (int doubling = 1;; ++doubling) {
        if (panels * 2 > opt.max_panels)
            fail(ErrorKind::NonConvergence,
                 "quadrature did not stabilise within " + std::to_string(opt.max_panels) +
                     " panels on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
        panels *= 2;
        cplx cur = run(panels, absint);
        double scale = std::max(std::abs(cur), absint);
        if (doubling >= opt.min_doublings && std::abs(cur - prev) <= opt.rel_tol * scale)
            return {cur, absint, panels, panels * opt.order};
        prev = cur;
    }
}

// Integer helpers.
std::int64_t gcd64(std::int64_t a, std::int64_t b);
std::uint64_t isqrt(std::uint64_t n);
std::uint64_t iroot(std::uint64_t n, int k);   // floor(n^(1/k))
double binomial(int n, int k);

struct PrimePower {
    std::int64_t p;
    int e;
};

// Trial-division factorisation for moderate |n|; n != 0.
std::vector<PrimePower> factorize(std::int64_t n);
int moebius(std::int64_t n);
std::int64_t euler_phi(std::int64_t n);
std::int64_t divisor_count(std::int64_t n);
std::vector<std::int64_t> divisors(std::int64_t n);
bool is_prime(std::int64_t n);

// Primes up to n inclusive (Eratosthenes, odd-only).
std::vector<std::int64_t> primes_up_to(std::int64_t n);

} // namespace corrlab
