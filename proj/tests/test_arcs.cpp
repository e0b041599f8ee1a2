#include "doctest.h"

#include <cmath>
#include <random>

#include "corrlab/arcs.hpp"
#include "corrlab/local.hpp"
#include "corrlab/sieve.hpp"

using namespace corrlab;

TEST_CASE("exp_sum basics")
{
    FnTable lam = sieve_lambda(10001, 20000);
    double total = 0, abs_total = 0;
    for (double v : lam.values) {
        total += v;
        abs_total += std::abs(v);
    }
    CHECK(std::abs(exp_sum(lam, 0.0).real() - total) <= 1e-12 * total);
    CHECK(std::abs(exp_sum(lam, 0.0).imag()) <= 1e-12 * total);
    for (double a : {0.1, 0.3333, 0.77, 1e-5})
        CHECK(std::abs(exp_sum(lam, a)) <= abs_total);

    // naive oracle at alpha = 1/3
    std::complex<long double> naive = 0;
    for (std::int64_t n = 10001; n <= 20000; ++n) {
        long double ph = 2.0L * std::numbers::pi_v<long double> * (n % 3) / 3.0L;
        naive += static_cast<long double>(lam.at(n)) * std::complex<long double>(std::cos(ph), std::sin(ph));
    }
    cplx s = exp_sum(lam, 1.0 / 3.0);
    CHECK(std::abs(s.real() - static_cast<double>(naive.real())) <= 1e-9 * abs_total);
    CHECK(std::abs(s.imag() - static_cast<double>(naive.imag())) <= 1e-9 * abs_total);
}

TEST_CASE("exp_sum alternating sums at alpha = 1/2")
{
    for (std::int64_t X : {1000, 1001, 4096, 777}) {
        FnTable one = constant_table(X + 1, 2 * X);
        cplx s = exp_sum(one, 0.5);
        double expect = X % 2 == 0 ? 0.0 : ((X + 1) % 2 == 0 ? 1.0 : -1.0);
        CHECK(std::abs(s.real() - expect) < 1e-9);
        CHECK(std::abs(s.imag()) < 1e-9);
    }
}

TEST_CASE("exp_sum keeps its phase far from the origin")
{
    // alpha = k / 2^20 is exact, so e(alpha n) can be computed in integers.
    const std::int64_t lo = 1'000'000'000'000LL, len = 50000;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> v(len);
    for (double& x : v)
        x = u(rng);
    FnTable f = custom_table("r", lo, v);
    const std::int64_t k = 348653, M = 1 << 20;
    CompensatedComplexSum exact;
    for (std::int64_t i = 0; i < len; ++i) {
        std::int64_t r = static_cast<std::int64_t>((static_cast<__int128>(k) * (lo + i)) % M);
        exact.add(v[static_cast<std::size_t>(i)] * e_of(static_cast<double>(r) / M));
    }
    cplx s = exp_sum(f, static_cast<double>(k) / M);
    CHECK(std::abs(s - exact.value()) < 1e-9 * f.l1_norm());
}

TEST_CASE("arc systems")
{
    auto single = build_arcs(1000000, 0.1, 1.0);
    CHECK(single.qmax == 1);
    CHECK(single.arcs.size() == 1);
    CHECK(single.arcs[0].center == 0.0);

    auto a = build_arcs(1000000, 1.2, 2.5);
    std::size_t phis = 0;
    for (std::int64_t q = 1; q <= a.qmax; ++q)
        phis += static_cast<std::size_t>(euler_phi(q));
    CHECK(a.qmax == 23);
    CHECK(a.arcs.size() == phis);
    CHECK(std::abs(a.measure() - 2 * a.delta * static_cast<double>(phis)) <= 1e-12);
    for (std::size_t i = 1; i < a.arcs.size(); ++i)
        CHECK(a.arcs[i].center - a.arcs[i - 1].center > 2 * a.delta);

    CHECK_THROWS_AS(build_arcs(1000000, 2.0, 3.0), Error);
    CHECK_THROWS_AS(make_arcs(100, 1.0, 0.6), Error);
    CHECK(make_arcs(100, 1.0, 0.5).measure() == 1.0);
}

TEST_CASE("full circle main term is the correlation (Plancherel)")
{
    const std::int64_t X = 150;
    FnTable lam = sieve_lambda(1, 3 * X);
    FnTable f = lam.slice(X + 1, 2 * X);
    FnTable g = lam.slice(X + 1, 2 * X + 20);
    auto full = make_arcs(X, 1.0, 0.5);
    for (std::int64_t h : {0, 2, 6, 20}) {
        double c = correlate_direct(f, g, X, h);
        MainTermOptions kq;
        kq.method = MainTermMethod::Kernel;
        CHECK(major_arc_mt(f, g, full, h, kq).value == doctest::Approx(c).epsilon(1e-12));
        MainTermOptions qq;
        qq.method = MainTermMethod::Quadrature;
        auto r = major_arc_mt(f, g, full, h, qq);
        CHECK(std::abs(r.value - c) <= 1e-7 * f.l2_norm() * g.l2_norm());
    }
}

TEST_CASE("Fejer-type single arc main term")
{
    const std::int64_t X = 1000;
    FnTable f = constant_table(X + 1, 2 * X);
    FnTable g = constant_table(X + 1, 2 * X + 200);
    auto arc = make_arcs(X, 1.0, 0.05);
    for (std::int64_t h : {0, 10, 100}) {
        MainTermOptions kq, qq;
        kq.method = MainTermMethod::Kernel;
        qq.method = MainTermMethod::Quadrature;
        double k = major_arc_mt(f, g, arc, h, kq).value;
        double q = major_arc_mt(f, g, arc, h, qq).value;
        CHECK(std::abs(k - q) <= 1e-6 * X);
        CHECK(std::abs(k - static_cast<double>(X)) <= 0.01 * X);  // g covers n + h
    }
}

TEST_CASE("major arcs plus minor arcs reproduce the correlation")
{
    const std::int64_t X = 300;
    FnTable lam = sieve_lambda(1, 3 * X);
    FnTable f = lam.slice(X + 1, 2 * X);
    FnTable g = lam.slice(X + 1, 2 * X + 10);
    auto arcs = make_arcs(X, 3.0, 0.02);
    for (std::int64_t h : {2, 4, 6}) {
        MainTermOptions qq;
        qq.method = MainTermMethod::Quadrature;
        double major = major_arc_mt(f, g, arcs, h, qq).value;
        MainTermOptions kq;
        kq.method = MainTermMethod::Kernel;
        CHECK(std::abs(major_arc_mt(f, g, arcs, h, kq).value - major) <= 1e-6 * std::abs(major));
        double minor = minor_arc_integral(f, g, arcs, h);
        double c = correlate_direct(f, g, X, h);
        CHECK(std::abs(major + minor - c) <= 1e-6 * c);
    }
}

TEST_CASE("minor arc l2")
{
    FnTable lam = sieve_lambda(2001, 3000);
    double norm2 = lam.l2_norm() * lam.l2_norm();
    CHECK(minor_arc_l2(lam, 0.1, 0.5) == doctest::Approx(norm2).epsilon(1e-8));
    std::vector<double> spike(50, 0.0);
    spike[17] = 3.0;
    FnTable s = custom_table("spike", 100, spike);
    CHECK(minor_arc_l2(s, 0.3, 0.01) == doctest::Approx(2 * 0.01 * 9.0).epsilon(1e-12));
    double part = minor_arc_l2(lam, 0.37, 1.0 / 64);
    CHECK(part < norm2);
}

TEST_CASE("parseval check is exact")
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-2, 2);
    std::uniform_int_distribution<std::int64_t> off(1, 5000), len(1, 1000);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> fv(static_cast<std::size_t>(len(rng))), gv(static_cast<std::size_t>(len(rng)));
        for (double& x : fv)
            x = u(rng);
        for (double& x : gv)
            x = u(rng);
        FnTable f = custom_table("f", off(rng), fv), g = custom_table("g", off(rng), gv);
        std::int64_t h = std::uniform_int_distribution<std::int64_t>(-3000, 3000)(rng);
        auto r = parseval_check(f, g, h);
        CHECK(r.abs_err <= 1e-9 * r.scale);
        auto self = parseval_check(f, f, 0);
        CHECK(std::abs(self.rhs - f.l2_norm() * f.l2_norm()) <= 1e-10 * f.l2_norm() * f.l2_norm());
    }
    FnTable d = custom_table("delta", 77, {2.5});
    auto r = parseval_check(d, d, 0);
    CHECK(r.lhs == 6.25);
    CHECK(r.rhs == doctest::Approx(6.25).epsilon(1e-15));
    FnTable d3 = sieve_dk(3, 10001, 20000);
    FnTable d3g = sieve_dk(3, 10001, 20107);
    auto r7 = parseval_check(d3, d3g, 7);
    CHECK(r7.abs_err <= 1e-9 * r7.scale);
    CHECK(r7.lhs == correlate_direct(d3, d3g, 10000, 7));
}

TEST_CASE("major arc approximation of S_Lambda improves with X")
{
    double prev = 1e9;
    for (std::int64_t X : {100000, 1000000}) {
        FnTable lam = sieve_lambda(X + 1, 2 * X);
        double worst = 0;
        for (std::int64_t q = 1; q <= 5; ++q)
            for (std::int64_t a = 0; a < q; ++a) {
                if (gcd64(a, q) != 1)
                    continue;
                for (int j = -4; j <= 4; ++j)
                    worst = std::max(worst, kog_discrepancy(lam, X, a, q, 25.0 * j / static_cast<double>(X)));
            }
        CHECK(worst < prev);
        prev = worst;
    }
    CHECK(prev < 0.05);
}

TEST_CASE("averaged experiment: profiles for each kind")
{
    ExperimentParams p;
    p.X = 100000;
    p.h0 = 0;
    p.H = 100;
    p.A = 1.0;
    p.p_max = 10000;
    p.even_only = true;
    auto r = averaged_theorem_experiment(p);
    CHECK(r.profile.count == 100);
    CHECK(r.profile.mean_abs_norm_error < 0.1);
    CHECK(r.series.values.size() == 201);

    p.H = 0;
    p.h0 = 2;
    auto single = averaged_theorem_experiment(p);
    CHECK(single.profile.count == 1);

    ExperimentParams d;
    d.kind = ExperimentKind::DkDl;
    d.X = 20000;
    d.h0 = 0;
    d.H = 20;
    d.p_max = 2000;
    auto rd = averaged_theorem_experiment(d);
    CHECK(rd.profile.count == 40);
    CHECK(std::isfinite(rd.profile.mean_abs_norm_error));

    ExperimentParams t = d;
    t.kind = ExperimentKind::LambdaDk;
    t.k = 2;
    auto rt = averaged_theorem_experiment(t);
    CHECK(std::isfinite(rt.profile.mean_abs_norm_error));

    ExperimentParams gb;
    gb.kind = ExperimentKind::Goldbach;
    gb.X = 20000;
    gb.h0 = 20100;
    gb.H = 100;
    gb.p_max = 10000;
    gb.even_only = true;
    auto rg = averaged_theorem_experiment(gb);
    CHECK(rg.profile.count == 101);
    CHECK(rg.profile.mean_abs_norm_error < 0.2);
    FnTable lam = sieve_lambda(1, 20200);
    CHECK(rg.series.value(20100) == doctest::Approx(goldbach_sum(lam, 20100)).epsilon(1e-12));
}

TEST_CASE("averaged experiment with major arc main terms")
{
    ExperimentParams p;
    p.X = 20000;
    p.h0 = 0;
    p.H = 8;
    p.B = 0.5;
    p.Bp = 2.0;
    p.p_max = 10000;
    p.major_arc_prediction = true;
    auto r = averaged_theorem_experiment(p);
    REQUIRE(r.major_arc_terms.has_value());
    // Arcs around a/q, q <= qmax, contribute roughly the Ramanujan expansion
    // of the singular series truncated at qmax (loosely, at this tiny X).
    auto arcs = build_arcs(p.X, p.B, p.Bp);
    CHECK(arcs.qmax == 3);
    for (std::int64_t h : {1, 2, 3, 4, 6}) {
        double mt = (*r.major_arc_terms)[static_cast<std::size_t>(h + 8)];
        double expect = singular_series_via_ramanujan(h, arcs.qmax) * static_cast<double>(p.X);
        CHECK(std::abs(mt - expect) < 0.1 * (std::abs(expect) + static_cast<double>(p.X)));
    }
}
