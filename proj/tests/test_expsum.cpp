#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "corrlab/expsum.hpp"

using namespace corrlab;

namespace {

// O(M^2) scan over windows with the same prefix arithmetic.
double brute_maximal(const std::vector<cplx>& terms)
{
    std::vector<cplx> P(terms.size() + 1);
    for (std::size_t i = 0; i < terms.size(); ++i)
        P[i + 1] = P[i] + terms[i];
    double best = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i)
        for (std::size_t j = i + 1; j < P.size(); ++j)
            best = std::max(best, std::abs(P[j] - P[i]));
    return best;
}

// Windows summed term by term in long double.
long double sequential_maximal(const std::vector<cplx>& terms)
{
    long double best = 0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        long double re = 0, im = 0;
        for (std::size_t j = i; j < terms.size(); ++j) {
            re += terms[j].real();
            im += terms[j].imag();
            best = std::max(best, std::sqrt(re * re + im * im));
        }
    }
    return best;
}

std::vector<cplx> random_terms(std::mt19937_64& rng, std::size_t n)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<cplx> t(n);
    for (auto& z : t)
        z = {u(rng), u(rng)};
    return t;
}

// Fourth-order central difference of deriv(order - 1).
double numeric_derivative(const Phase& p, double w, int order, double h)
{
    auto f = [&](double x) { return p.deriv(x, order - 1); };
    return (8 * (f(w + h) - f(w - h)) - (f(w + 2 * h) - f(w - 2 * h))) / (12 * h);
}

void check_derivatives(const Phase& p, double lo, double hi, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    for (int i = 0; i < 100; ++i) {
        double w = u(rng);
        for (int k = 1; k <= 4; ++k) {
            double exact = p.deriv(w, k);
            double num = numeric_derivative(p, w, k, 1e-3 * std::abs(w));
            INFO("seed " << seed << " order " << k << " at " << w);
            CHECK(std::abs(num - exact) <= 1e-6 * std::abs(exact) + 1e-300);
        }
    }
}

} // namespace

TEST_CASE("maximal sum: trivial cases")
{
    std::vector<cplx> ones(37, 1.0);
    auto r = maximal_sum(ones);
    CHECK(r.value == 37.0);
    CHECK(r.first == 0);
    CHECK(r.last == 36);

    std::vector<cplx> alt(40);
    for (std::size_t i = 0; i < alt.size(); ++i)
        alt[i] = i % 2 ? -1.0 : 1.0;
    CHECK(maximal_sum(alt).value == 1.0);

    std::vector<cplx> zero(5, 0.0);
    CHECK(maximal_sum(zero).value == 0.0);
    CHECK(maximal_sum(std::vector<cplx>{cplx(3, 4)}).value == 5.0);
}

TEST_CASE("maximal sum: exact against brute force")
{
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> len(1, 200);
    for (int i = 0; i < 100; ++i) {
        auto t = random_terms(rng, len(rng));
        auto r = maximal_sum(t);
        CHECK(r.value == brute_maximal(t));
        CHECK(window_sum(t, r.first, r.last) == r.value);
        CHECK(std::abs(r.value - static_cast<double>(sequential_maximal(t))) <= 1e-12 * r.value);
        cplx full = 0;
        for (auto z : t)
            full += z;
        CHECK(r.value >= std::abs(full) * (1 - 1e-15));
    }
}

TEST_CASE("maximal sum: exact on structured phases")
{
    // Collinear and near-collinear prefix walks stress the hull.
    for (double theta : {0.0, 1e-9, 0.3, 1.0}) {
        std::vector<cplx> t;
        for (int m = 0; m < 150; ++m)
            t.push_back(e_of(theta * m * m));
        CHECK(maximal_sum(t).value == brute_maximal(t));
    }
    auto t = phase_terms(Phase::log_ratio(1e5, 3), 500, 1000);
    CHECK(maximal_sum(t).value == brute_maximal(t));
}

TEST_CASE("maximal sum is invariant under a global rotation")
{
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
        auto t = random_terms(rng, 150);
        double v = maximal_sum(t).value;
        cplx rot = e_of(0.1234 * i);
        for (auto& z : t)
            z *= rot;
        CHECK(std::abs(maximal_sum(t).value - v) <= 1e-12 * v);
    }
}

TEST_CASE("phase derivatives against finite differences")
{
    check_derivatives(Phase::monomial(1e3, 50, -1.0), 50, 100, 1);
    check_derivatives(Phase::monomial(7.0, 10, 2.5), 10, 20, 2);
    check_derivatives(Phase::log_ratio(1e5, 7), 500, 1000, 3);
    check_derivatives(Phase::balanced_main(2000, 5, 100), 100, 200, 4);
    check_derivatives(Phase::log_scale(1e4, 200), 200, 400, 5);
    Phase dual = legendre_transform(Phase::balanced_main(2000, 5, 100), 25, 400);
    check_derivatives(dual, dual.domain_lo() * 0.9, dual.domain_hi() * 1.1, 6);
}

TEST_CASE("Legendre transform")
{
    Phase quad = Phase::custom([](double x, int k) {
        return k == 0 ? 0.5 * x * x : k == 1 ? x : k == 2 ? 1.0 : 0.0;
    });
    Phase dual = legendre_transform(quad, -10, 10);
    for (double t : {-3.0, 0.5, 7.25})
        CHECK(dual(t) == doctest::Approx(-0.5 * t * t).epsilon(1e-13));

    // Envelope: d phi*/dt = -u(t).
    Phase bal = legendre_transform(Phase::balanced_main(3000, 10, 150), 40, 600);
    for (double t : {-5.0, -3.0, -1.0}) {
        double h = 1e-4;
        double fd = (bal(t + h) - bal(t - h)) / (2 * h);
        CHECK(std::abs(fd + bal.dual_point(t)) <= 1e-6 * bal.dual_point(t));
        CHECK(bal.deriv(t, 1) == -bal.dual_point(t));
    }

    CHECK_THROWS_AS(legendre_transform(Phase::monomial(1, 1, 3.0), -1, 1), Error);
    CHECK_THROWS_AS(dual(25.0), Error);
}

TEST_CASE("Legendre involution on convex phases")
{
    std::vector<std::pair<Phase, std::pair<double, double>>> cases = {
        {Phase::monomial(3.0, 2.0, 2.5), {1.0, 5.0}},
        {Phase::log_scale(-40.0, 3.0), {1.0, 9.0}},
        {Phase::balanced_main(500, 2, 40), {20.0, 80.0}},
        {Phase::custom([](double x, int k) {
             double e = std::exp(x);
             return k == 0 ? e + x * x : k == 1 ? e + 2 * x : k == 2 ? e + 2 : e;
         }),
         {-2.0, 2.0}},
    };
    for (auto& [phi, dom] : cases) {
        Phase once = legendre_transform(phi, dom.first, dom.second);
        Phase twice = legendre_transform(once, once.domain_lo(), once.domain_hi());
        for (int i = 0; i < 100; ++i) {
            double x = -dom.second + (dom.second - dom.first) * (i + 0.5) / 100;
            double expect = phi(-x);
            CHECK(std::abs(twice(x) - expect) <= 1e-9 * std::max(1.0, std::abs(expect)));
        }
    }
}

TEST_CASE("two-term expansion of the dual balanced phase")
{
    auto r = legendre_expansion_check(2000, 5, 100);
    CHECK(r.max_residual <= 2 * r.shape);
    // beta = 0 leaves only the leading term.
    auto r0 = legendre_expansion_check(2000, 0, 100);
    CHECK(r0.max_residual <= 1e-9 * legendre_two_term(2000, 0, 100, -2000 / (std::numbers::pi * 100)));
}

TEST_CASE("y_tilde")
{
    CHECK(y_tilde(1e5, 100, 1e4, 1.0) == 0.0);
    // t = 0: every ell contributes the M1 + 1 terms of [M1, 2M1].
    std::int64_t L = y_tilde_ell_max(100, 20, 1.0);
    CHECK(L == 5);
    CHECK(y_tilde(0.0, 100, 20, 1.0) == doctest::Approx(20.0 / 100 * L * 101).epsilon(1e-14));

    // Long double oracle with sequential windows.
    double t = 1e5, H = 250, Q = 1.0;
    std::int64_t M1 = 500;
    long double acc = 0;
    for (std::int64_t ell = 1; ell <= y_tilde_ell_max(M1, H, Q); ++ell) {
        std::vector<cplx> terms;
        for (std::int64_t m = M1; m <= 2 * M1; ++m) {
            long double ph = t * std::log(static_cast<long double>(m + ell) / (m - ell));
            terms.emplace_back(static_cast<double>(std::cos(ph)), static_cast<double>(std::sin(ph)));
        }
        acc += sequential_maximal(terms);
    }
    double oracle = static_cast<double>(H / M1 * acc);
    CHECK(y_tilde(t, M1, H, Q) == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("f(alpha, beta)")
{
    CHECK(f_alpha_beta(0, 0, 50) == 51.0);
    std::vector<cplx> terms;
    for (int m = 10; m <= 20; ++m)
        terms.push_back(e_of(3.7 / std::numbers::pi * 10.0 / m + 1.1 / (3 * std::numbers::pi) * std::pow(10.0 / m, 3)));
    CHECK(f_alpha_beta(3.7, 1.1, 10) == brute_maximal(terms));

    auto st = f_stability(200, 1e3, 4e4, 50, 200, 17);
    CHECK(st.samples == 200);
    CHECK(st.worst_ratio < 10.0);
}

TEST_CASE("balanced Taylor split")
{
    CHECK(taylor_split_check(1e6, 0, 100).max_remainder == 0.0);
    auto r = taylor_split_check(1e6, 10, 1000);
    CHECK(r.argmax == 1000);
    CHECK(r.max_remainder <= 2 * r.shape);
    // Series remainder against long double subtraction.
    for (double m : {1000.0, 1500.0, 2000.0}) {
        long double x = 10.0L / m;
        long double direct = 1e6L / (2 * std::numbers::pi_v<long double>) * std::log((1 + x) / (1 - x)) -
                             1e6L / std::numbers::pi_v<long double> * x -
                             1e6L / (3 * std::numbers::pi_v<long double>) * x * x * x;
        CHECK(taylor_remainder(1e6, 10, m) == doctest::Approx(static_cast<double>(direct)).epsilon(1e-6));
    }
    // Reflection about 3M1/2: remainder falls monotonically, so the reflected
    // point differs by the measured asymmetry only.
    double a = taylor_remainder(1e6, 10, 1100), b = taylor_remainder(1e6, 10, 1900);
    CHECK(a > b);
}

TEST_CASE("B-process")
{
    const std::int64_t M = 200;
    const double X = 1e4;
    auto r = b_process_compare(Phase::log_scale(X, double(M)), M, X);
    MESSAGE("B-process direct " << r.direct << " transformed " << r.transformed << " residual " << r.residual);
    CHECK(r.residual <= 10 * r.sqrt_M);

    CHECK_THROWS_AS(b_process_compare(Phase::monomial(0.0, 1, 2.0), M, X), Error);
    CHECK_THROWS_AS(b_process_compare(Phase::log_scale(X, double(M)), M, 1e9), Error);

    auto mono = b_process_compare(Phase::monomial(X, double(M), -1.0), M, X);
    CHECK(mono.dual_length >= X / M / 4);
    CHECK(mono.dual_length <= 4 * X / M);
}

TEST_CASE("report experiments")
{
    auto r = rs_fourth_moment_experiment(20, 100, -1.0);
    CHECK(std::isfinite(r.ratio));
    CHECK(r.ratio > 0);
    CHECK(rs_fourth_moment_experiment(20, 100, -1.0).ratio == r.ratio);
    auto z = rs_fourth_moment_experiment(20, 100, -1.0, std::vector<cplx>(21, 0.0));
    CHECK(z.lhs == 0.0);

    auto y = y_tilde_vs_exponent_pair(2e4, 100, 50, 1.0);
    CHECK(std::isfinite(y.ratio));
    CHECK(y.ratio > 0);
    CHECK(exponent_pair_bound(1e4, 1, 100) == doctest::Approx(std::pow(100.0, 2.0 / 7 + 0.5)));
}
