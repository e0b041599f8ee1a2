#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "corrlab/dirichlet.hpp"
#include "corrlab/sieve.hpp"

using namespace corrlab;

namespace {

// Slow oracle: long double phases straight from the definition.
cplx slow_D(const FnTable& f, double t)
{
    long double re = 0, im = 0;
    for (std::int64_t n = std::max<std::int64_t>(1, f.lo); n <= f.hi; ++n) {
        long double a = f.at(n) / std::sqrt(static_cast<long double>(n));
        long double ph = -static_cast<long double>(t) * std::log(static_cast<long double>(n));
        re += a * std::cos(ph);
        im += a * std::sin(ph);
    }
    return {static_cast<double>(re), static_cast<double>(im)};
}

FnTable delta_at(std::int64_t n0, double v = 1.0)
{
    return custom_table("delta", n0, {v});
}

FnTable random_table(std::mt19937_64& rng, std::int64_t lo, std::int64_t size)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(size));
    for (auto& x : v)
        x = u(rng);
    return custom_table("random", lo, v);
}

} // namespace

TEST_CASE("characters: small moduli")
{
    auto c1 = characters(1);
    REQUIRE(c1.size() == 1);
    CHECK(c1[0].is_principal);
    CHECK(c1[0](17) == cplx(1.0));

    auto c4 = characters(4);
    REQUIRE(c4.size() == 2);
    CHECK(c4[0].is_principal);
    CHECK(std::abs(c4[1](3) - cplx(-1.0)) < 1e-15);
    CHECK(c4[1](2) == cplx(0.0));
    CHECK(c4[1].is_primitive);
    CHECK_FALSE(c4[0].is_primitive);
}

TEST_CASE("characters: group axioms, orthogonality and primitive counts")
{
    for (std::int64_t q = 1; q <= 60; ++q) {
        auto chars = characters(q);
        REQUIRE(static_cast<std::int64_t>(chars.size()) == euler_phi(q));
        int primitive = 0;
        for (std::size_t i = 0; i < chars.size(); ++i) {
            const auto& chi = chars[i];
            CHECK(std::abs(chi(1) - cplx(1.0)) < 1e-14);
            primitive += chi.is_primitive;
            for (std::int64_t a = 0; a < q; ++a) {
                if (gcd64(a, q) != 1) {
                    CHECK(chi(a) == cplx(0.0));
                    continue;
                }
                for (std::int64_t b = 0; b < q; ++b)
                    CHECK(std::abs(chi(a * b) - chi(a) * chi(b)) < 1e-12);
            }
            for (std::size_t j = 0; j < chars.size(); ++j) {
                cplx s = 0;
                for (std::int64_t a = 0; a < q; ++a)
                    s += chi(a) * std::conj(chars[j](a));
                double expect = i == j ? static_cast<double>(euler_phi(q)) : 0.0;
                CHECK(std::abs(s - expect) < 1e-10);
            }
        }
        // Number of primitive characters mod q is sum_{d|q} mu(q/d) phi(d).
        std::int64_t expect = 0;
        for (auto d : divisors(q))
            expect += moebius(q / d) * euler_phi(d);
        CHECK(primitive == expect);
    }
}

TEST_CASE("gauss sums: principal, primitive and bound")
{
    auto one = characters(1);
    CHECK(std::abs(gauss_sum(one[0]) - cplx(1.0)) < 1e-14);
    for (std::int64_t q = 1; q <= 50; ++q) {
        auto chars = characters(q);
        CHECK(std::abs(gauss_sum(chars[0]) - cplx(moebius(q))) < 1e-10);
        for (auto& chi : chars) {
            double a = std::abs(gauss_sum(chi));
            CHECK(a <= std::sqrt(double(q)) + 1e-10);
            if (chi.is_primitive)
                CHECK(std::abs(a - std::sqrt(double(q))) < 1e-10);
            else
                CHECK(std::abs(a - std::sqrt(double(q))) > 1e-6);
        }
    }
}

TEST_CASE("eval_D: definitions and oracle")
{
    DirichletEval d(delta_at(49, 3.0));
    CHECK(std::abs(d.eval(0.0) - cplx(3.0 / 7.0)) < 1e-15);

    // Dilation by 2 of an even-supported table matches the plain table of n -> f(2n).
    std::mt19937_64 rng(7);
    FnTable f = random_table(rng, 1, 400);
    for (std::int64_t n = 1; n <= 400; n += 2)
        f.values[static_cast<std::size_t>(n - 1)] = 0.0;
    std::vector<double> half;
    for (std::int64_t n = 1; n <= 200; ++n)
        half.push_back(f.at(2 * n));
    FnTable g = custom_table("half", 1, half);
    for (double t : {0.0, 3.5, 70.0})
        CHECK(std::abs(DirichletEval(f, 2).eval(t) - DirichletEval(g).eval(t)) < 1e-12);

    FnTable one = constant_table(1001, 2000);
    DirichletEval ctx(one);
    cplx fast = ctx.eval(50.0), slow = slow_D(one, 50.0);
    CHECK(std::abs(fast - slow) < 1e-9);
    CHECK(std::abs(fast) <= ctx.abs_bound());

    // Principal character mod 1 twist is the plain evaluation.
    DirichletEval tw(one, 1, characters(1)[0]);
    CHECK(std::abs(tw.eval(12.25) - ctx.eval(12.25)) < 1e-12);
}

TEST_CASE("eval_D_grid matches pointwise evaluation across resyncs")
{
    FnTable lam = sieve_lambda(1, 3000);
    DirichletEval ctx(lam);
    auto grid = ctx.eval_grid(10.0, 0.37, 2500);
    double bound = ctx.abs_bound();
    double worst = 0.0;
    for (std::size_t j = 0; j < grid.size(); j += 97)
        worst = std::max(worst, std::abs(grid[j] - ctx.eval(10.0 + 0.37 * double(j))));
    worst = std::max(worst, std::abs(grid.back() - ctx.eval(10.0 + 0.37 * 2499.0)));
    CHECK(worst < 1e-10 * bound);

    std::vector<double> ts{-5.0, 0.0, 1e3, 12345.678};
    auto vals = eval_D_grid(ctx, ts);
    for (std::size_t i = 0; i < ts.size(); ++i)
        CHECK(std::abs(vals[i] - eval_D(ctx, ts[i])) == 0.0);
}

TEST_CASE("twisted sums recover progressions by orthogonality")
{
    std::mt19937_64 rng(11);
    FnTable f = random_table(rng, 1, 600);
    for (std::int64_t q1 : {5, 12, 21}) {
        auto chars = characters(q1);
        for (std::int64_t a : {std::int64_t{1}, q1 - 1}) {
            for (double t : {0.0, 17.0}) {
                cplx lhs = 0;
                for (auto& chi : chars)
                    lhs += std::conj(chi(a)) * DirichletEval(f, 1, chi).eval(t);
                FnTable prog = f;
                for (std::int64_t n = 1; n <= 600; ++n)
                    if (n % q1 != a % q1)
                        prog.values[static_cast<std::size_t>(n - 1)] = 0.0;
                cplx rhs = double(euler_phi(q1)) * slow_D(prog, t);
                CHECK(std::abs(lhs - rhs) < 1e-10);
            }
        }
    }
}

TEST_CASE("edc_check")
{
    std::mt19937_64 rng(3);
    FnTable f = random_table(rng, 1, 500);
    auto r1 = edc_check(f, 1, 0, 4.0);
    CHECK(std::abs(r1.lhs - r1.rhs) < 1e-12 * r1.rhs);
    CHECK(r1.holds);

    auto r6 = edc_check(f, 6, 5, 10.0);
    CHECK(r6.holds);

    FnTable m7 = f;
    for (std::int64_t n = 1; n <= 500; ++n)
        if (n % 7)
            m7.values[static_cast<std::size_t>(n - 1)] = 0.0;
    auto r7 = edc_check(m7, 7, 3, 2.0);
    CHECK(r7.holds);
    // Only the q0 = 7 term survives, and it alone accounts for the right side.
    double only = std::abs(DirichletEval(m7, 7, characters(1)[0]).eval(2.0));
    CHECK(std::abs(r7.rhs - 2.0 / std::sqrt(7.0) * only) < 1e-12 * r7.rhs);
}

TEST_CASE("mean value: closed form against quadrature")
{
    CHECK(mvt_closed_form(delta_at(13, 2.0), 5.0, 40.0) == doctest::Approx(40.0 * 4.0 / 13.0).epsilon(1e-15));

    // Two points: one off-diagonal sinc term written out by hand.
    std::vector<double> v(8, 0.0);
    v[0] = 1.5;
    v[7] = -0.75;
    FnTable two = custom_table("two", 3, v);
    double T0 = 2.0, T = 30.0, lam = std::log(10.0 / 3.0);
    double oracle = T * (1.5 * 1.5 / 3 + 0.75 * 0.75 / 10) +
                    2 * 1.5 * -0.75 / std::sqrt(30.0) * (std::sin((T0 + T) * lam) - std::sin(T0 * lam)) / lam;
    CHECK(mvt_closed_form(two, T0, T) == doctest::Approx(oracle).epsilon(1e-13));
    CHECK(mvt_quadrature(two, T0, T) == doctest::Approx(oracle).epsilon(1e-8));

    FnTable lam_t = sieve_lambda(1001, 2000);
    double cf = mvt_closed_form(lam_t, 0.0, 100.0);
    double qd = mvt_quadrature(lam_t, 0.0, 100.0);
    CHECK(std::abs(cf - qd) <= 1e-6 * std::abs(cf));
}

TEST_CASE("mean value property: 20 random tables")
{
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::int64_t> lo_d(1, 2000), size_d(1, 500);
    std::uniform_real_distribution<double> T0_d(-100, 100), T_d(1, 200);
    for (int i = 0; i < 20; ++i) {
        FnTable f = random_table(rng, lo_d(rng), size_d(rng));
        double T0 = T0_d(rng), T = T_d(rng);
        double cf = mvt_closed_form(f, T0, T), qd = mvt_quadrature(f, T0, T);
        CHECK(std::abs(cf - qd) <= 1e-6 * std::abs(cf));
    }
}

TEST_CASE("truncated Perron")
{
    FnTable d = delta_at(100);
    auto above = perron_truncated(d, 130.5, 400.0);
    auto below = perron_truncated(d, 80.5, 400.0);
    CHECK(above.exact == 1.0);
    CHECK(below.exact == 0.0);
    CHECK(above.err <= above.shape);
    CHECK(below.err <= below.shape);

    FnTable d2 = sieve_dk(2, 1001, 2000);
    std::vector<double> errs;
    for (double T : {50.0, 100.0, 200.0, 400.0, 800.0})
        errs.push_back(perron_truncated(d2, 2500.5, T).err);
    CHECK(errs.back() < errs.front());
    int decreases = 0;
    for (std::size_t i = 1; i < errs.size(); ++i)
        decreases += errs[i] < errs[i - 1];
    CHECK(decreases >= 3);

    auto r = perron_truncated(d2, 2500, 1000.0);
    double sup = 0;
    for (double v : d2.values)
        sup = std::max(sup, v);
    CHECK(r.err <= 10.0 * sup * 2000.0 * std::log(1000.0) / 1000.0);
}

TEST_CASE("Heath-Brown identity reconstructs Lambda")
{
    for (int K : {1, 2, 3}) {
        std::int64_t X = 1000;
        auto pieces = heath_brown_decompose(K, X);
        CHECK(pieces.size() == static_cast<std::size_t>(K));
        FnTable lam = sieve_lambda(X + 1, 2 * X);
        auto chk = verify_pieces(pieces, lam, X + 1, 2 * X);
        CHECK(chk.max_abs_error <= 1e-9);
    }
    auto pieces = heath_brown_decompose(3, 10000);
    auto chk = verify_pieces(pieces, sieve_lambda(10001, 20000), 10001, 20000);
    CHECK(chk.max_abs_error <= 1e-9);
}

namespace {

void check_pieces(const std::vector<DecompositionPiece>& pieces, const FnTable& target)
{
    auto chk = verify_pieces(pieces, target, target.lo, target.hi);
    CHECK(chk.max_abs_error <= 1e-9);
    for (auto& p : pieces) {
        if (p.shape == PieceShape::Small)
            continue;
        // alpha on [N, 2N) and beta_i on [M_i, 2M_i) confine the support.
        double lo = static_cast<double>(p.N), hi = 2.0 * static_cast<double>(p.N);
        for (auto M : p.M) {
            lo *= static_cast<double>(M);
            hi *= 2.0 * static_cast<double>(M);
        }
        for (std::int64_t n = p.values.lo; n <= p.values.hi; ++n)
            if (p.values.at(n) != 0.0) {
                CHECK(static_cast<double>(n) >= lo);
                CHECK(static_cast<double>(n) < hi);
            }
    }
}

FnTable dilated(const FnTable& f, std::int64_t q0, std::int64_t lo, std::int64_t hi)
{
    std::vector<double> v;
    for (std::int64_t n = lo; n <= hi; ++n)
        v.push_back(f.at(q0 * n));
    return custom_table("target", lo, v);
}

} // namespace

TEST_CASE("combinatorial decomposition: d_2 and Lambda")
{
    CombParams p;
    p.target = DecompTarget::Dk;
    p.k = 2;
    p.m = 3;
    p.eps = 0.1;
    p.X = 10000;
    p.H0 = std::pow(10000.0, 1.0 / 3 + 0.1);
    auto pieces = comb_decompose(p);
    check_pieces(pieces, sieve_dk(2, 10001, 20000));
    for (auto& pc : pieces)
        if (pc.shape == PieceShape::TypeDj)
            for (auto& b : pc.beta_kinds)
                CHECK(b == "1");

    p.target = DecompTarget::Lambda;
    p.m = 5;
    p.eps = 0.15;
    p.H0 = std::pow(10000.0, 0.2 + 0.15);
    pieces = comb_decompose(p);
    check_pieces(pieces, sieve_lambda(10001, 20000));
    bool has_dj = false, has_ii = false;
    for (auto& pc : pieces) {
        has_dj |= pc.shape == PieceShape::TypeDj;
        has_ii |= pc.shape == PieceShape::TypeII;
    }
    CHECK(has_dj);
    CHECK(has_ii);
    CHECK(pieces_json(pieces).front() == '[');
}

TEST_CASE("combinatorial decomposition with dilation")
{
    CombParams p;
    p.target = DecompTarget::Lambda;
    p.m = 4;
    p.eps = 0.1;
    p.X = 10000;
    p.H0 = std::pow(10000.0, 0.35);
    p.q0 = 9;
    auto pieces = comb_decompose(p);
    REQUIRE(pieces.size() == 1);
    CHECK(pieces[0].shape == PieceShape::Small);
    double l = std::log(10000.0);
    CHECK(pieces[0].l2_squared <= l * l * l);
    auto [lo, hi] = dilated_window(10000, 9);
    check_pieces(pieces, dilated(sieve_lambda(1, 20000), 9, lo, hi));

    p.target = DecompTarget::Dk;
    p.k = 3;
    for (std::int64_t q0 : {4, 6, 12}) {
        p.q0 = q0;
        pieces = comb_decompose(p);
        std::tie(lo, hi) = dilated_window(10000, q0);
        check_pieces(pieces, dilated(sieve_dk(3, 1, 20000), q0, lo, hi));
        int small = 0;
        for (auto& pc : pieces)
            small += pc.shape == PieceShape::Small;
        CHECK(small == 1);
    }
}

TEST_CASE("dilation factor g")
{
    FnTable d3 = sieve_dk(3, 1, 12 * 600);
    for (std::int64_t q0 : {2, 8, 12, 30}) {
        FnTable g = dilation_factor_g(3, q0, 600);
        double dkq = d3.at(q0);
        for (std::int64_t n = 1; n <= 600; ++n) {
            double s = 0;
            for (auto d : divisors(n))
                s += g.at(d) * d3.at(n / d);
            CHECK(std::abs(dkq * s - sieve_dk(3, q0 * n, q0 * n).values[0]) < 1e-9);
        }
    }
}

TEST_CASE("combinatorial decomposition: range errors name the inequality")
{
    CombParams p;
    p.X = 10000;
    p.m = 3;
    p.eps = 0.1;
    p.H0 = 10.0;
    try {
        comb_decompose(p);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidArgument);
        CHECK(std::string(e.what()).find("X^(1/m+eps)") != std::string::npos);
    }
    p.eps = 0.5;
    CHECK_THROWS_AS(comb_decompose(p), Error);
}

TEST_CASE("moment experiments")
{
    auto r = fourth_moment_experiment(100, 1, 50.0);
    CHECK(std::isfinite(r.ratio));
    CHECK(r.ratio > 0);
    CHECK(r.to_json().find("\"experiment\":\"fourth_moment\"") != std::string::npos);
    auto again = fourth_moment_experiment(100, 1, 50.0);
    CHECK(again.ratio == r.ratio);

    auto rl = fourth_moment_experiment(100, 3, 20.0, true);
    CHECK(std::isfinite(rl.ratio));

    // Integration by parts against the directly tabulated L 1_{[1,X]}.
    FnTable L = sieve_log(1, 300);
    for (std::int64_t q1 : {1, 5})
        for (auto& chi : characters(q1))
            for (double t : {0.0, 9.0, 140.0}) {
                cplx direct = DirichletEval(L, 1, chi).eval(t);
                cplx via = log_variant_via_identity(300, chi, t);
                CHECK(std::abs(direct - via) < 1e-8);
            }

    auto j = jutila_experiment(2, 100.0, 20.0, {130.0}, 100);
    CHECK(j.lhs == fourth_moment_integral(100, 2, 130.0, 150.0));
    CHECK(std::isfinite(j.ratio));
    CHECK_THROWS_AS(jutila_experiment(2, 100.0, 20.0, {130.0, 140.0}, 100), Error);
}

TEST_CASE("good-cancellation report")
{
    auto rep = good_cancellation_report(CancelKind::Moebius, {1024, 4096, 16384}, 1.0, 1.5, 3);
    REQUIRE(rep.rows.size() == 3);
    for (auto& r : rep.rows) {
        CHECK(std::isfinite(r.worst_ratio));
        CHECK(r.worst_ratio > 0);
    }
    CHECK(std::isfinite(rep.decay_exponent));
}
