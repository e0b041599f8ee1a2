#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "corrlab/local.hpp"
#include "corrlab/numeric.hpp"

using namespace corrlab;

namespace {

int capped_valuation(std::uint64_t n, std::uint64_t p, int cap)
{
    if (n == 0)
        return cap;
    int v = 0;
    while (n % p == 0 && v < cap) {
        n /= p;
        ++v;
    }
    return v;
}

struct Estimate {
    double mean, sigma;
};

// Monte Carlo over n uniform mod p^20 (valuations truncated at 20).
// g(j_n, j_{n+h}) is the local weight product.
template <class G>
Estimate monte_carlo(std::uint64_t p, std::int64_t h, G g, int samples = 10'000'000)
{
    std::uint64_t mod = 1;
    for (int i = 0; i < 20; ++i)
        mod *= p;
    std::mt19937_64 rng(12345 + p);
    std::uniform_int_distribution<std::uint64_t> pick(0, mod - 1);
    const auto hm = static_cast<std::uint64_t>(((h % static_cast<std::int64_t>(mod)) +
                                                static_cast<std::int64_t>(mod)) %
                                               static_cast<std::int64_t>(mod));
    double s = 0, s2 = 0;
    for (int i = 0; i < samples; ++i) {
        std::uint64_t n = pick(rng);
        std::uint64_t m = (n + hm) % mod;
        double w = g(capped_valuation(n, p, 20), capped_valuation(m, p, 20));
        s += w;
        s2 += w * w;
    }
    double mean = s / samples;
    double var = s2 / samples - mean * mean;
    return {mean, std::sqrt(var / samples)};
}

} // namespace

TEST_CASE("twin prime constant")
{
    CHECK(twin_prime_constant(3).value == 0.75);
    auto big = twin_prime_constant(10'000'000);
    CHECK(big.value == doctest::Approx(0.6601618197153586).epsilon(1e-13));
    CHECK(big.tail_bound == doctest::Approx(2e-7));
    CHECK(big.tail_proxy <= big.tail_bound);
    // Known limit 0.6601618158468695...; must lie within the tail bound.
    CHECK(std::abs(std::log(0.66016181584686957 / big.value)) <= big.tail_bound);
    double prev = 1.0;
    for (std::int64_t p : {3, 5, 7, 100, 1000, 100000}) {
        auto r = twin_prime_constant(p);
        CHECK(r.value < prev);
        prev = r.value;
    }
    CHECK(twin_prime_constant(1000).tail_bound > twin_prime_constant(2000).tail_bound);
}

TEST_CASE("singular series")
{
    CHECK(singular_series(3, 1000).value == 0.0);
    CHECK(singular_series(-7, 1000).value == 0.0);
    auto s2 = singular_series(2, 10'000'000);
    CHECK(s2.value == doctest::Approx(1.3203236394307172).epsilon(1e-13));
    auto s6 = singular_series(6, 10'000'000);
    CHECK(s6.value == doctest::Approx(2 * s2.value).epsilon(1e-15));
    CHECK(singular_series(-6, 1000).value == singular_series(6, 1000).value);
    for (std::int64_t h : {2, 4, 8, 10, 30, 210})
        CHECK(singular_series(h, 1000).value >= 2 * twin_prime_constant(1000).value);
    CHECK_THROWS_AS(singular_series(0, 100), Error);
}

TEST_CASE("local factor d_k d_l: trivial and closed-form oracle values")
{
    for (int l = 1; l <= 4; ++l)
        for (std::int64_t p : {2, 3, 7})
            for (std::int64_t h : {1, 2, 9, 28})
                CHECK(local_factor_dkdl(1, l, p, h) == doctest::Approx(1.0).epsilon(1e-14));
    // Values from a 400-term series evaluation done outside the library.
    CHECK(local_factor_dkdl(2, 2, 3, 1) == doctest::Approx(8.0 / 9.0).epsilon(1e-14));
    CHECK(local_factor_dkdl(2, 2, 2, 2) == doctest::Approx(9.0 / 8.0).epsilon(1e-14));
    CHECK(local_factor_dkdl(3, 2, 2, 12) == doctest::Approx(47.0 / 32.0).epsilon(1e-14));
    CHECK(local_factor_dkdl(3, 4, 5, 250) == doctest::Approx(2.22208).epsilon(1e-13));
    CHECK(local_factor_dkdl(2, 3, 3, 9) == doctest::Approx(122.0 / 81.0).epsilon(1e-14));
    CHECK_THROWS_AS(local_factor_dkdl(2, 2, 4, 1), Error);
}

TEST_CASE("local factor d_2 d_2 matches Monte Carlo within 3 sigma")
{
    auto d2 = [](int j) { return j + 1.0; };
    for (auto [p, h] : {std::pair<std::uint64_t, std::int64_t>{3, 1}, {2, 2}}) {
        const double Ed = 1.0 / (1.0 - 1.0 / static_cast<double>(p));
        auto est = monte_carlo(p, h, [&](int a, int b) { return d2(a) * d2(b) / (Ed * Ed); });
        double exact = local_factor_dkdl(2, 2, static_cast<std::int64_t>(p), h);
        CHECK(std::abs(est.mean - exact) <= 3 * est.sigma);
    }
}

TEST_CASE("local factor d_k Lambda")
{
    for (std::int64_t p : {2, 3, 5, 11})
        CHECK(local_factor_dk_lambda(1, p, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(local_factor_dk_lambda(2, 5, 10) == doctest::Approx(0.8).epsilon(1e-15));
    // Monte Carlo: p = 2, h = 1, k = 2; Lambda_2(m) = 2 * [2 does not divide m].
    auto est = monte_carlo(2, 1, [](int a, int b) { return (a + 1.0) * (b == 0 ? 2.0 : 0.0) / 2.0; });
    CHECK(std::abs(est.mean - local_factor_dk_lambda(2, 2, 1)) <= 3 * est.sigma);
    auto est2 = monte_carlo(3, 3, [](int a, int b) {
        return (a + 1.0) * (b == 0 ? 1.5 : 0.0) / 1.5;
    });
    CHECK(std::abs(est2.mean - local_factor_dk_lambda(2, 3, 3)) <= 3 * est2.sigma);
}

TEST_CASE("local factor depends on h only through v_p(h)")
{
    for (int k = 2; k <= 4; ++k)
        for (int l = 1; l <= 3; ++l)
            for (std::int64_t p : {2, 3, 5}) {
                for (std::int64_t pv : {std::int64_t{1}, p, p * p, p * p * p}) {
                    double ref = local_factor_dkdl(k, l, p, pv);
                    for (std::int64_t u : {7, 11, 13, 17, 19}) {
                        if (u % p == 0)
                            continue;
                        CHECK(std::abs(local_factor_dkdl(k, l, p, pv * u) - ref) <= 1e-12);
                        CHECK(std::abs(local_factor_dkdl(k, l, p, -pv * u) - ref) <= 1e-12);
                    }
                }
            }
}

TEST_CASE("leading coefficient of the divisor correlation")
{
    const double c = 6.0 / (std::numbers::pi * std::numbers::pi);
    for (std::int64_t h : {1, 2, 6, 12}) {
        double sigma = 0;
        for (std::int64_t d : divisors(h))
            sigma += 1.0 / static_cast<double>(d);
        auto r = leading_coeff_P(2, 2, h, 100000);
        CHECK(std::abs(r.value - c * sigma) <= 2e-5);
        CHECK(r.tail_bound > 0);
        CHECK(std::abs(std::log(r.value / (c * sigma))) <= r.tail_bound);
    }
    // A prime factor of h beyond p_max only enters through the tail bound.
    auto a = leading_coeff_P(2, 2, 1, 1000);
    auto b = leading_coeff_P(2, 2, 1009, 1000);
    CHECK(a.value == b.value);
    CHECK(b.tail_bound > a.tail_bound);
    CHECK(std::abs(std::log(local_factor_dkdl(2, 2, 1009, 1009))) <= b.tail_bound);
}

TEST_CASE("leading coefficient Q and per-prime factors")
{
    auto r = leading_coeff_Q(2, 6, 1000, true);
    CHECK(r.per_prime.size() == 168);
    for (auto [p, f] : r.per_prime)
        CHECK(f > 0);
    double prod = 1;
    for (auto [p, f] : r.per_prime)
        prod *= f;
    CHECK(prod == doctest::Approx(r.value).epsilon(1e-12));
    auto q1 = leading_coeff_Q(1, 6, 1000);
    CHECK(q1.value == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("ramanujan sums")
{
    CHECK(ramanujan_sum(1, 17) == 1.0);
    for (std::int64_t q : {1, 6, 12, 30, 97})
        CHECK(ramanujan_sum(q, 0) == static_cast<double>(euler_phi(q)));
    CHECK(ramanujan_sum(3, 1) == -1.0);
    // Direct exponential sums.
    for (std::int64_t q = 1; q <= 60; ++q)
        for (std::int64_t h = -5; h <= 40; ++h) {
            cplx s = 0;
            for (std::int64_t b = 1; b <= q; ++b)
                if (gcd64(b, q) == 1)
                    s += e_of(static_cast<double>(b * h % q) / static_cast<double>(q));
            REQUIRE(std::abs(s.imag()) < 1e-9);
            REQUIRE(ramanujan_sum(q, h) == std::round(s.real()));
        }
    // multiplicativity in q
    for (std::int64_t q1 = 1; q1 <= 200; ++q1)
        for (std::int64_t q2 = 1; q1 * q2 <= 200; ++q2)
            if (gcd64(q1, q2) == 1)
                for (std::int64_t h : {1, 2, 6, 12, 60, 210})
                    REQUIRE(ramanujan_sum(q1 * q2, h) == ramanujan_sum(q1, h) * ramanujan_sum(q2, h));
}

TEST_CASE("singular series via Ramanujan expansion")
{
    CHECK(singular_series_via_ramanujan(7, 1) == 1.0);
    CHECK(singular_series_via_ramanujan(8, 2) == 2.0);
    // fast path agrees with the general Ramanujan sum
    for (std::int64_t h : {2, 6, 30, 5}) {
        double direct = 0;
        for (std::int64_t q = 1; q <= 500; ++q)
            if (moebius(q) != 0) {
                double f = static_cast<double>(euler_phi(q));
                direct += ramanujan_sum(q, h) / (f * f);
            }
        CHECK(singular_series_via_ramanujan(h, 500) == doctest::Approx(direct).epsilon(1e-12));
    }
    for (std::int64_t h : {2, 4, 6, 30})
        CHECK(std::abs(singular_series_via_ramanujan(h, 20000) - singular_series(h, 1000000).value) <
              1e-2);
}

TEST_CASE("singular series agrees with the product of Lambda local factors")
{
    for (std::int64_t h : {2, 4, 6, 30}) {
        const std::int64_t p_max = 100000;
        double logp = 0;
        for (std::int64_t p : primes_up_to(p_max))
            logp += std::log(local_factor_lambda_lambda(p, h));
        auto s = singular_series(h, p_max);
        CHECK(std::abs(logp - std::log(s.value)) <= 1e-12 + s.tail_bound);
    }
    CHECK(local_factor_lambda_lambda(2, 3) == 0.0);
}

TEST_CASE("prediction json")
{
    std::string j = prediction_json(12, "d2d2-leading", 1.5, 1000, 1e-3);
    CHECK(j == "{\"h\":12,\"kind\":\"d2d2-leading\",\"value\":1.5,\"p_max\":1000,\"tail_bound\":0.001}");
}
