#include "corrlab/local.hpp"

#include <cmath>
#include <functional>

#include "json.hpp"

#include "corrlab/error.hpp"
#include "corrlab/numeric.hpp"
#include "corrlab/sieve.hpp"

namespace corrlab {

namespace {

int valuation(std::int64_t h, std::int64_t p)
{
    h = h < 0 ? -h : h;
    int v = 0;
    while (h % p == 0) {
        h /= p;
        ++v;
    }
    return v;
}

void require_prime(std::int64_t p)
{
    if (!is_prime(p))
        fail(ErrorKind::InvalidArgument, std::to_string(p) + " is not prime");
}

// sum_{s >= 0} x^s C(s + m + r, r) for m >= 0, written as a finite positive
// sum: sum_{i=0}^{r} C(m - 1 + r - i, r - i) (1 - x)^{-(i+1)} (m >= 1), and
// (1 - x)^{-(r+1)} when m = 0.
double nb_tail(double x, int m, int r)
{
    if (m == 0)
        return std::pow(1.0 - x, -(r + 1));
    double s = 0;
    for (int i = 0; i <= r; ++i)
        s += binomial(m - 1 + r - i, r - i) * std::pow(1.0 - x, -(i + 1));
    return s;
}

// Euler product over primes, with a tail bound of the form c / p_max fitted
// from the last half of the range, plus exact terms for p | h above p_max.
LocalFactorResult euler_product(std::int64_t h, std::int64_t p_max, bool keep,
                                const std::function<double(std::int64_t)>& factor)
{
    require(p_max >= 2, "p_max must be at least 2");
    LocalFactorResult r;
    r.p_max = p_max;
    CompensatedSum logsum;
    double c = 0;
    const auto primes = primes_up_to(2 * p_max);
    for (std::int64_t p : primes) {
        double f = factor(p);
        if (p <= p_max) {
            if (!(f > 0))
                fail(ErrorKind::InvalidArgument,
                     "local factor at p = " + std::to_string(p) + " is not positive");
            logsum.add(std::log(f));
            if (keep)
                r.per_prime[p] = f;
            if (2 * p > p_max && h % p != 0)
                c = std::max(c, std::abs(std::log(f)) * static_cast<double>(p) * p);
        } else {
            r.tail_proxy += std::abs(f - 1.0);
        }
    }
    r.value = std::exp(logsum.value());
    // sum_{p > P} 1/p^2 < 1/P
    r.tail_bound = c / static_cast<double>(p_max);
    if (h != 0)
        for (const auto& pp : factorize(h))
            if (pp.p > p_max)
                r.tail_bound += std::abs(std::log(factor(pp.p)));
    return r;
}

} // namespace

LocalFactorResult twin_prime_constant(std::int64_t p_max, bool keep_factors)
{
    require(p_max >= 3, "twin_prime_constant: p_max must be at least 3");
    LocalFactorResult r;
    r.p_max = p_max;
    CompensatedSum logsum;
    for (std::int64_t p : primes_up_to(2 * p_max)) {
        if (p == 2)
            continue;
        double x = 1.0 / static_cast<double>((p - 1) * (p - 1));
        if (p <= p_max) {
            logsum.add(std::log1p(-x));
            if (keep_factors)
                r.per_prime[p] = 1.0 - x;
        } else {
            r.tail_proxy += x;
        }
    }
    r.value = std::exp(logsum.value());
    r.tail_bound = 2.0 / static_cast<double>(p_max);
    return r;
}

SingularSeriesValue singular_series(std::int64_t h, std::int64_t p_max)
{
    require(h != 0, "singular_series: h = 0 is excluded");
    SingularSeriesValue s;
    s.h = h;
    s.p_max = p_max;
    if (h % 2 != 0)
        return s;
    auto pi2 = twin_prime_constant(p_max);
    double v = 2.0 * pi2.value;
    for (const auto& pp : factorize(h))
        if (pp.p > 2)
            v *= static_cast<double>(pp.p - 1) / static_cast<double>(pp.p - 2);
    s.value = v;
    s.tail_bound = pi2.tail_bound;
    return s;
}

double expected_dk_local(int k, std::int64_t p)
{
    return std::pow(1.0 - 1.0 / static_cast<double>(p), 1 - k);
}

double local_factor_dkdl(int k, int l, std::int64_t p, std::int64_t h)
{
    require(k >= 1 && l >= 1, "local_factor_dkdl: k, l must be positive");
    require(h != 0, "local_factor_dkdl: h must be non-zero");
    require_prime(p);
    const double x = 1.0 / static_cast<double>(p);
    const double unit = 1.0 - x;
    const int v = valuation(h, p);
    auto Ck = [k](int j) { return binomial(j + k - 1, k - 1); };
    auto Cl = [l](int j) { return binomial(j + l - 1, l - 1); };

    double total = 0;
    // v_p(n) = j < v: both valuations equal j.
    for (int j = 0; j < v; ++j)
        total += unit * std::pow(x, j) * Ck(j) * Cl(j);
    // j > v: v_p(n+h) = v.
    total += Cl(v) * unit * std::pow(x, v + 1) * nb_tail(x, v + 1, k - 1);
    // j = v: n = p^v m with m a unit; v_p(m + h/p^v) = s has probability
    // (p-2)/(p-1) for s = 0 and p^{-s} for s >= 1.
    const double shifted = x * nb_tail(x, v + 1, l - 1);
    total += unit * std::pow(x, v) * Ck(v) *
             ((static_cast<double>(p - 2) / static_cast<double>(p - 1)) * Cl(v) + shifted);
    return total / (expected_dk_local(k, p) * expected_dk_local(l, p));
}

double local_factor_dk_lambda(int k, std::int64_t p, std::int64_t h)
{
    require(k >= 1, "local_factor_dk_lambda: k must be positive");
    require(h != 0, "local_factor_dk_lambda: h must be non-zero");
    require_prime(p);
    const double q = 1.0 - 1.0 / static_cast<double>(p);
    if (h % p == 0)
        return std::pow(q, k - 1);
    return (static_cast<double>(p) / static_cast<double>(p - 1)) *
           (std::pow(q, 1 - k) - 1.0 / static_cast<double>(p)) * std::pow(q, k - 1);
}

double local_factor_lambda_lambda(std::int64_t p, std::int64_t h)
{
    require(h != 0, "local_factor_lambda_lambda: h must be non-zero");
    require_prime(p);
    const double c = static_cast<double>(p) / static_cast<double>(p - 1);
    // P(p does not divide n and n + h)
    const double both = h % p == 0 ? 1.0 - 1.0 / static_cast<double>(p)
                                   : 1.0 - 2.0 / static_cast<double>(p);
    return c * c * both;
}

LocalFactorResult leading_coeff_P(int k, int l, std::int64_t h, std::int64_t p_max,
                                  bool keep_factors)
{
    require(h != 0, "leading_coeff_P: h must be non-zero");
    auto r = euler_product(h, p_max, keep_factors,
                           [&](std::int64_t p) { return local_factor_dkdl(k, l, p, h); });
    double fact = 1;
    for (int i = 2; i < k; ++i)
        fact *= i;
    for (int i = 2; i < l; ++i)
        fact *= i;
    r.value /= fact;
    return r;
}

LocalFactorResult leading_coeff_Q(int k, std::int64_t h, std::int64_t p_max, bool keep_factors)
{
    require(h != 0, "leading_coeff_Q: h must be non-zero");
    auto r = euler_product(h, p_max, keep_factors,
                           [&](std::int64_t p) { return local_factor_dk_lambda(k, p, h); });
    double fact = 1;
    for (int i = 2; i < k; ++i)
        fact *= i;
    r.value /= fact;
    return r;
}

double ramanujan_sum(std::int64_t q, std::int64_t h)
{
    require(q >= 1, "ramanujan_sum: q must be positive");
    std::int64_t r = 1;
    for (const auto& [p, a] : factorize(q)) {
        std::int64_t pa1 = 1;
        for (int i = 1; i < a; ++i)
            pa1 *= p;
        const std::int64_t pa = pa1 * p;
        if (h % pa == 0)
            r *= pa - pa1;
        else if (h % pa1 == 0)
            r *= -pa1;
        else
            return 0.0;
    }
    return static_cast<double>(r);
}

double singular_series_via_ramanujan(std::int64_t h, std::int64_t Qmax)
{
    require(h != 0, "singular_series_via_ramanujan: h must be non-zero");
    require(Qmax >= 1, "singular_series_via_ramanujan: Qmax must be positive");
    FnTable mu = sieve_moebius(1, Qmax);
    std::vector<std::int64_t> phi(static_cast<std::size_t>(Qmax + 1));
    for (std::int64_t n = 0; n <= Qmax; ++n)
        phi[static_cast<std::size_t>(n)] = n;
    for (std::int64_t p = 2; p <= Qmax; ++p)
        if (phi[static_cast<std::size_t>(p)] == p)
            for (std::int64_t m = p; m <= Qmax; m += p)
                phi[static_cast<std::size_t>(m)] -= phi[static_cast<std::size_t>(m)] / p;
    CompensatedSum s;
    for (std::int64_t q = 1; q <= Qmax; ++q) {
        if (mu.at(q) == 0.0)
            continue;
        // squarefree q: c_q(h) = mu(q/g) phi(g), g = gcd(q, h)
        const std::int64_t g = gcd64(q, h);
        const double c = mu.at(q / g) * static_cast<double>(phi[static_cast<std::size_t>(g)]);
        const double f = static_cast<double>(phi[static_cast<std::size_t>(q)]);
        s.add(c / (f * f));
    }
    return s.value();
}

std::string prediction_json(std::int64_t h, const std::string& kind, double value,
                            std::int64_t p_max, double tail_bound)
{
    nlohmann::ordered_json j;
    j["h"] = h;
    j["kind"] = kind;
    j["value"] = value;
    j["p_max"] = p_max;
    j["tail_bound"] = tail_bound;
    return j.dump();
}

} // namespace corrlab
