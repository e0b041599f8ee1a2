#include "corrlab/identities.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>

#include "corrlab/arcs.hpp"
#include "corrlab/corr.hpp"
#include "corrlab/dirichlet.hpp"
#include "corrlab/error.hpp"
#include "corrlab/expsum.hpp"
#include "corrlab/fn_table.hpp"
#include "corrlab/local.hpp"
#include "corrlab/numeric.hpp"
#include "corrlab/sieve.hpp"

namespace corrlab {

namespace {

class Suite {
public:
    // measured <= tol passes; an exception counts as a failure with measured = inf.
    void check(const std::string& module, const std::string& name, double tol,
               const std::function<double()>& measure)
    {
        IdentityCheck c{module, name, 0.0, tol, false};
        try {
            c.measured = measure();
            c.passed = std::isfinite(c.measured) && c.measured <= tol;
        } catch (const std::exception&) {
            c.measured = INFINITY;
        }
        results.push_back(std::move(c));
    }

    // The call must throw corrlab::Error.
    void rejects(const std::string& module, const std::string& name,
                 const std::function<void()>& call)
    {
        IdentityCheck c{module, name, 0.0, 0.0, false};
        try {
            call();
            c.measured = 1.0;
        } catch (const Error&) {
            c.passed = true;
        } catch (const std::exception&) {
            c.measured = 1.0;
        }
        results.push_back(std::move(c));
    }

    std::vector<IdentityCheck> results;
};

double max_gap(const FnTable& a, const FnTable& b)
{
    if (a.lo != b.lo || a.size() != b.size())
        return INFINITY;
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

FnTable random_table(std::uint64_t seed, std::int64_t lo, std::int64_t size)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<double> v(static_cast<std::size_t>(size));
    for (double& x : v)
        x = g(rng);
    return custom_table("random", lo, std::move(v));
}

void sieve_checks(Suite& s)
{
    s.check("sieve", "Lambda(1) = 0", 0, [] { return std::abs(sieve_lambda(1, 1).at(1)); });
    s.check("sieve", "Lambda(8) = log 2", 1e-15,
            [] { return std::abs(sieve_lambda(8, 8).at(8) - std::log(2.0)); });
    s.check("sieve", "d_k(1) = 1 for k <= 5", 0, [] {
        double m = 0;
        for (int k = 1; k <= 5; ++k)
            m = std::max(m, std::abs(sieve_dk(k, 1, 1).at(1) - 1.0));
        return m;
    });
    s.check("sieve", "d_2(6) = 4", 0, [] { return std::abs(sieve_dk(2, 1, 6).at(6) - 4.0); });
    s.check("sieve", "mu(1) = 1 and mu(12) = 0", 0, [] {
        FnTable mu = sieve_moebius(1, 12);
        return std::abs(mu.at(1) - 1.0) + std::abs(mu.at(12));
    });
    s.check("sieve", "(1*1)(n) = d_2(n) for n <= 100", 1e-12, [] {
        FnTable one = constant_table(1, 100);
        return max_gap(dirichlet_convolve(one, one, 1, 100), sieve_dk(2, 1, 100));
    });
    s.check("sieve", "(mu*1)(n) = [n = 1] for n <= 100", 1e-12, [] {
        FnTable unit = constant_table(1, 100, 0.0);
        unit.values[0] = 1.0;
        return max_gap(dirichlet_convolve(sieve_moebius(1, 100), constant_table(1, 100), 1, 100),
                       unit);
    });
    s.check("sieve", "d_2 divisor-bound constant at most 1 for n >= 2", 0, [] {
        return std::max(0.0, divisor_bound_check(sieve_dk(2, 2, 5000), 1).witnessed_constant - 1.0);
    });
    s.check("sieve", "Lambda(n) <= log n certificate", 0, [] {
        return std::max(0.0,
                        divisor_bound_check(sieve_lambda(1, 5000), 1).witnessed_constant - 1.0);
    });
    s.check("sieve", "cache write and read reproduce a table bitwise", 0, [] {
        namespace fs = std::filesystem;
        fs::path dir = fs::temp_directory_path() /
                       ("corrlab-identity-" + std::to_string(std::random_device{}()));
        fs::create_directories(dir);
        FnTable t = sieve_dk(3, 1000, 3000);
        write_table(t, dir / "t.bin");
        FnTable back = read_table(dir / "t.bin");
        fs::remove_all(dir);
        if (back.kind != t.kind || back.k != t.k || back.lo != t.lo || back.hi != t.hi)
            return 1.0;
        return back.values == t.values ? 0.0 : 1.0;
    });
}

void corr_checks(Suite& s)
{
    s.check("corr", "f = g = 1 on (X,2X]: value X - h for 0 <= h <= X", 1e-9, [] {
        const std::int64_t X = 1000;
        FnTable f = constant_table(X + 1, 2 * X);
        FnTable g = constant_table(X + 1, 3 * X);
        std::fill(g.values.begin() + X, g.values.end(), 0.0);
        auto series = correlate(f, g, X, X / 2, X / 2);
        double m = 0;
        for (std::int64_t h = 0; h <= X; ++h)
            m = std::max(m, std::abs(series.value(h) - static_cast<double>(X - h)));
        return m;
    });
    s.check("corr", "Lambda-Lambda at odd h is small against X", 1e-2, [] {
        const std::int64_t X = 100000;
        FnTable lam = sieve_lambda(X + 1, 2 * X + 8);
        auto series = correlate(lam.slice(X + 1, 2 * X), lam, X, 4, 3);
        double m = 0;
        for (std::int64_t h : {1, 3, 5, 7})
            m = std::max(m, std::abs(series.value(h)) / static_cast<double>(X));
        return m;
    });
    s.check("corr", "Goldbach sum at odd N is small", 1e-2, [] {
        FnTable lam = sieve_lambda(1, 20001);
        return goldbach_sum(lam, 20001) / 20001.0;
    });
    s.check("corr", "profile with exact main terms has no exceptional shifts", 0, [] {
        CorrelationSeries c;
        c.X = 100000;
        c.H = 10;
        c.norm = 100000;
        c.values.assign(21, 5.0);
        c.main_terms = c.values;
        return static_cast<double>(error_profile(c, 1.0).exceptional_count);
    });
    s.check("corr", "profile offset by 2X log^-A X flags every shift", 0, [] {
        CorrelationSeries c;
        c.X = 100000;
        c.H = 10;
        c.norm = 100000;
        c.values.assign(21, 5.0);
        c.main_terms = c.values;
        for (double& m : *c.main_terms)
            m += 2 * c.norm / std::log(100000.0);
        return std::abs(static_cast<double>(error_profile(c, 1.0).exceptional_count) - 21.0);
    });
    s.check("corr", "H = 0 gives a single-shift profile", 0, [] {
        FnTable one = constant_table(1, 400);
        auto series = correlate(one.slice(101, 200), one, 100, 3, 0);
        series.main_terms = series.values;
        return std::abs(static_cast<double>(error_profile(series, 1.0).count) - 1.0);
    });
}

void local_checks(Suite& s)
{
    s.check("local", "twin prime constant with p_max = 3 is 3/4", 0,
            [] { return std::abs(twin_prime_constant(3).value - 0.75); });
    s.check("local", "twin prime constant decreases in p_max", 0, [] {
        double prev = 1.0, worst = 0;
        for (std::int64_t p : {3, 5, 7, 100, 1000, 100000}) {
            double v = twin_prime_constant(p).value;
            worst = std::max(worst, v - prev);
            prev = v;
        }
        return worst > 0 ? worst : 0.0;
    });
    s.check("local", "singular series at h = 6 is 4 Pi_2", 1e-14, [] {
        const double pi2 = twin_prime_constant(100000).value;
        return std::abs(singular_series(6, 100000).value - 4 * pi2) / (4 * pi2);
    });
    s.check("local", "d_1 d_l local factor is 1", 1e-14, [] {
        double m = 0;
        for (int l = 1; l <= 4; ++l)
            for (std::int64_t p : {2, 3, 7})
                for (std::int64_t h : {1, 2, 9, 28})
                    m = std::max(m, std::abs(local_factor_dkdl(1, l, p, h) - 1.0));
        return m;
    });
    s.check("local", "d_1 Lambda local factor is 1 when p does not divide h", 1e-15, [] {
        double m = 0;
        for (std::int64_t p : {2, 3, 5, 11})
            m = std::max(m, std::abs(local_factor_dk_lambda(1, p, 1) - 1.0));
        return m;
    });
    s.check("local", "leading coefficient P_{2,2,2} = (6/pi^2)(3/2)", 1e-6, [] {
        return std::abs(leading_coeff_P(2, 2, 2, 1000000).value -
                        1.5 * 6.0 / (std::numbers::pi * std::numbers::pi));
    });
    s.check("local", "c_1(h) = 1 and c_q(0) = phi(q)", 0, [] {
        double m = 0;
        for (std::int64_t h : {0, 1, 17, 360})
            m = std::max(m, std::abs(ramanujan_sum(1, h) - 1.0));
        for (std::int64_t q : {1, 6, 12, 30, 97})
            m = std::max(m, std::abs(ramanujan_sum(q, 0) - static_cast<double>(euler_phi(q))));
        return m;
    });
    s.check("local", "Ramanujan expansion truncated at Qmax = 1 and 2", 0, [] {
        return std::abs(singular_series_via_ramanujan(7, 1) - 1.0) +
               std::abs(singular_series_via_ramanujan(8, 2) - 2.0);
    });
}

void arcs_checks(Suite& s)
{
    s.check("arcs", "S_f(0) is the sum of f", 1e-12, [] {
        FnTable lam = sieve_lambda(1001, 3000);
        double total = 0;
        for (double v : lam.values)
            total += v;
        return std::abs(exp_sum(lam, 0.0) - cplx(total, 0)) / total;
    });
    s.check("arcs", "S_1(1/2) is the alternating sum", 1e-9, [] {
        double m = 0;
        for (std::int64_t X : {1000, 1001, 777}) {
            cplx v = exp_sum(constant_table(X + 1, 2 * X), 0.5);
            double expect = X % 2 == 0 ? 0.0 : 1.0;
            m = std::max(m, std::abs(v - cplx(expect, 0)));
        }
        return m;
    });
    s.check("arcs", "Q < 2 gives a single arc at 0", 0, [] {
        auto a = build_arcs(1000000, 0.1, 1.0);
        return a.arcs.size() == 1 && a.arcs[0].center == 0.0 ? 0.0 : 1.0;
    });
    s.check("arcs", "arc count is the sum of phi(q) for q <= Q", 0, [] {
        auto a = build_arcs(1000000, 1.2, 2.5);
        std::int64_t phis = 0;
        for (std::int64_t q = 1; q <= a.qmax; ++q)
            phis += euler_phi(q);
        return std::abs(static_cast<double>(a.arcs.size()) - static_cast<double>(phis));
    });
    s.check("arcs", "arc measure is 2 delta sum phi(q)", 1e-12, [] {
        auto a = build_arcs(1000000, 1.2, 2.5);
        return std::abs(a.measure() - 2 * a.delta * static_cast<double>(a.arcs.size()));
    });
    s.check("arcs", "full-circle main term equals the correlation", 1e-12, [] {
        const std::int64_t X = 150;
        FnTable lam = sieve_lambda(1, 3 * X);
        FnTable f = lam.slice(X + 1, 2 * X), g = lam.slice(X + 1, 2 * X + 20);
        auto full = make_arcs(X, 1.0, 0.5);
        MainTermOptions kq;
        kq.method = MainTermMethod::Kernel;
        double m = 0;
        for (std::int64_t h : {0, 2, 6, 20}) {
            double c = correlate_direct(f, g, X, h);
            m = std::max(m, std::abs(major_arc_mt(f, g, full, h, kq).value - c) / c);
        }
        return m;
    });
    s.check("arcs", "full-width L2 integral is the squared l2 norm", 1e-8, [] {
        FnTable lam = sieve_lambda(1, 2000);
        double n2 = lam.l2_norm() * lam.l2_norm();
        return std::abs(minor_arc_l2(lam, 0.1, 0.5) - n2) / n2;
    });
    s.check("arcs", "L2 integral of a spike is 2 width |f(n0)|^2", 1e-12, [] {
        FnTable spike = custom_table("spike", 77, {3.0});
        return std::abs(minor_arc_l2(spike, 0.3, 0.01) - 2 * 0.01 * 9.0) / 0.18;
    });
    s.check("arcs", "Parseval identity on random tables of support 1000", 1e-9, [] {
        double m = 0;
        for (std::uint64_t seed : {1, 2, 3}) {
            FnTable f = random_table(seed, 1, 1000), g = random_table(seed + 10, 1, 1000);
            for (std::int64_t h : {0, 1, 17, 500}) {
                auto r = parseval_check(f, g, h);
                m = std::max(m, r.abs_err / r.scale);
            }
        }
        return m;
    });
    s.check("arcs", "Parseval identity on a spike at h = 0", 1e-12, [] {
        FnTable d = custom_table("spike", 40, {2.5});
        auto r = parseval_check(d, d, 0);
        return std::abs(r.lhs - 6.25) + std::abs(r.rhs - 6.25);
    });
}

void dirichlet_checks(Suite& s)
{
    s.check("dirichlet", "q1 = 1 has exactly the principal character", 0, [] {
        auto c = characters(1);
        return c.size() == 1 && c[0].is_principal ? 0.0 : 1.0;
    });
    s.check("dirichlet", "nonprincipal character rows sum to 0", 1e-12, [] {
        double m = 0;
        for (std::int64_t q : {5, 12, 21})
            for (auto& chi : characters(q)) {
                if (chi.is_principal)
                    continue;
                cplx sum = 0;
                for (std::int64_t n = 0; n < q; ++n)
                    sum += chi(n);
                m = std::max(m, std::abs(sum));
            }
        return m;
    });
    s.check("dirichlet", "Gauss sum of the character mod 1 is 1", 1e-15,
            [] { return std::abs(gauss_sum(characters(1)[0]) - cplx(1, 0)); });
    s.check("dirichlet", "D[delta_n0](1/2) = f(n0)/sqrt(n0)", 1e-15, [] {
        FnTable d = custom_table("delta", 13, {2.0});
        return std::abs(DirichletEval(d).eval(0.0) - cplx(2.0 / std::sqrt(13.0), 0));
    });
    s.check("dirichlet", "dilation q0 = 2 matches the table n -> f(2n)", 1e-12, [] {
        FnTable f = random_table(7, 1, 400);
        for (std::int64_t n = 1; n <= 400; n += 2)
            f.values[static_cast<std::size_t>(n - 1)] = 0.0;
        std::vector<double> half;
        for (std::int64_t n = 1; 2 * n <= 400; ++n)
            half.push_back(f.at(2 * n));
        FnTable g = custom_table("half", 1, half);
        double m = 0;
        for (double t : {0.0, 3.0, 50.0})
            m = std::max(m, std::abs(DirichletEval(f, 2).eval(t) - DirichletEval(g).eval(t)));
        return m;
    });
    s.check("dirichlet", "edc with q = 1 is an equality", 1e-12, [] {
        auto r = edc_check(random_table(3, 1, 500), 1, 0, 4.0);
        return std::abs(r.lhs - r.rhs) / r.rhs;
    });
    s.check("dirichlet", "mean value of a delta is T f(n0)^2 / n0", 1e-15, [] {
        FnTable d = custom_table("delta", 13, {2.0});
        return std::abs(mvt_closed_form(d, 5.0, 40.0) - 40.0 * 4.0 / 13.0) / (160.0 / 13.0);
    });
    s.check("dirichlet", "Heath-Brown with K = 1 is Moebius inversion", 1e-9, [] {
        const std::int64_t X = 1000;
        auto pieces = heath_brown_decompose(1, X);
        return verify_pieces(pieces, sieve_lambda(X + 1, 2 * X), X + 1, 2 * X).max_abs_error;
    });
    s.check("dirichlet", "d_2 splits exactly into 1*1 pieces", 1e-9, [] {
        CombParams p;
        p.target = DecompTarget::Dk;
        p.k = 2;
        p.m = 3;
        p.X = 1000;
        p.H0 = std::pow(1000.0, 1.0 / 3 + 0.1);
        FnTable d2 = sieve_dk(2, 1001, 2000);
        return verify_pieces(comb_decompose(p), d2, 1001, 2000).max_abs_error;
    });
    s.check("dirichlet", "log variant by integration by parts", 1e-8, [] {
        FnTable L = sieve_log(1, 300);
        double m = 0;
        for (std::int64_t q1 : {1, 5})
            for (auto& chi : characters(q1))
                for (double t : {0.0, 9.0, 140.0})
                    m = std::max(m, std::abs(DirichletEval(L, 1, chi).eval(t) -
                                             log_variant_via_identity(300, chi, t)));
        return m;
    });
    s.check("dirichlet", "single-interval Jutila run is the plain fourth moment", 0, [] {
        auto j = jutila_experiment(2, 100.0, 20.0, {130.0}, 100);
        return std::abs(j.lhs - fourth_moment_integral(100, 2, 130.0, 150.0));
    });
}

void expsum_checks(Suite& s)
{
    s.check("expsum", "maximal sum of M ones is M", 0, [] {
        std::vector<cplx> ones(37, cplx(1, 0));
        auto r = maximal_sum(ones);
        return std::abs(r.value - 37.0) + static_cast<double>(r.first) +
               std::abs(static_cast<double>(r.last) - 36.0);
    });
    s.check("expsum", "maximal sum of an alternating sign sequence is 1", 0, [] {
        std::vector<cplx> alt;
        for (int i = 0; i < 40; ++i)
            alt.emplace_back(i % 2 ? -1.0 : 1.0, 0.0);
        return std::abs(maximal_sum(alt).value - 1.0);
    });
    s.check("expsum", "empty ell-range gives Y~ = 0", 0,
            [] { return std::abs(y_tilde(1e5, 100, 1e4, 1.0)); });
    s.check("expsum", "Y~ at t = 0 is H times the ell count", 1e-14, [] {
        double L = static_cast<double>(y_tilde_ell_max(100, 20, 1.0));
        double expect = 20.0 / 100 * L * 101;
        return std::abs(y_tilde(0.0, 100, 20, 1.0) - expect) / expect;
    });
    s.check("expsum", "f(0, 0) = M1 + 1", 0, [] { return std::abs(f_alpha_beta(0, 0, 50) - 51.0); });
    s.check("expsum", "Taylor remainder vanishes at ell = 0", 0,
            [] { return std::abs(taylor_remainder(1e6, 0, 1500)); });
    s.check("expsum", "x^2/2 is dual to -t^2/2", 1e-13, [] {
        Phase quad = Phase::custom([](double x, int k) {
            return k == 0 ? 0.5 * x * x : k == 1 ? x : k == 2 ? 1.0 : 0.0;
        });
        Phase dual = legendre_transform(quad, -10, 10);
        double m = 0;
        for (double t : {-3.0, 0.5, 7.25})
            m = std::max(m, std::abs(dual(t) + 0.5 * t * t) / (0.5 * t * t));
        return m;
    });
    s.check("expsum", "envelope identity d phi*/dt = -u(t)", 1e-6, [] {
        Phase bal = legendre_transform(Phase::balanced_main(3000, 10, 150), 40, 600);
        double m = 0;
        for (double t : {-5.0, -3.0, -1.0}) {
            const double h = 1e-4;
            double fd = (bal(t + h) - bal(t - h)) / (2 * h);
            m = std::max(m, std::abs(fd + bal.dual_point(t)) / bal.dual_point(t));
        }
        return m;
    });
    s.rejects("expsum", "non-monotone phase derivative is rejected",
              [] { legendre_transform(Phase::monomial(1, 1, 3.0), -1, 1); });
    s.check("expsum", "B-process dual length for a monomial is about X/M", 0, [] {
        const std::int64_t M = 200;
        const double X = 1e4;
        auto r = b_process_compare(Phase::monomial(X, double(M), -1.0), M, X);
        double ratio = r.dual_length / (X / M);
        return ratio >= 0.25 && ratio <= 4 ? 0.0 : std::abs(std::log2(ratio));
    });
    s.check("expsum", "zero coefficients give a zero fourth moment", 0, [] {
        return std::abs(rs_fourth_moment_experiment(20, 100, -1.0, std::vector<cplx>(21, 0.0)).lhs);
    });
}

} // namespace

std::vector<IdentityCheck> run_identity_suite()
{
    Suite s;
    sieve_checks(s);
    corr_checks(s);
    local_checks(s);
    arcs_checks(s);
    dirichlet_checks(s);
    expsum_checks(s);
    return std::move(s.results);
}

} // namespace corrlab
