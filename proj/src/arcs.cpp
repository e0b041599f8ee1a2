#include "corrlab/arcs.hpp"

#include <algorithm>
#include <cmath>

#include "corrlab/error.hpp"
#include "corrlab/fft.hpp"
#include "corrlab/local.hpp"
#include "corrlab/parallel.hpp"
#include "corrlab/sieve.hpp"

namespace corrlab {

namespace {

constexpr std::int64_t kResync = 1024;

// sin(pi x) with exact zeros at integers.
double sin_pi(double x)
{
    double r = std::nearbyint(x);
    double s = std::sin(std::numbers::pi * (x - r));
    return std::fmod(r, 2.0) == 0.0 ? s : -s;
}

// max |n - m + h| for n in f, m in g.
double max_frequency(const FnTable& f, const FnTable& g, std::int64_t h)
{
    return static_cast<double>(
        std::max(std::abs(f.hi - g.lo + h), std::abs(f.lo - g.hi + h)));
}

QuadOptions oscillation_options(double length, double freq, double rel_tol)
{
    QuadOptions q;
    q.order = 16;
    q.rel_tol = rel_tol;
    // at least 8 nodes per period of the fastest oscillation
    double periods = length * std::max(freq, 1.0);
    q.initial_panels = static_cast<int>(std::min(1e6, std::ceil(periods * 8.0 / q.order)));
    q.initial_panels = std::max(q.initial_panels, 1);
    q.max_panels = std::max(q.initial_panels * 16, 64);
    return q;
}

} // namespace

cplx exp_sum(const FnTable& f, double alpha, std::int64_t a, std::int64_t b)
{
    require(!f.values.empty(), "exp_sum: empty table");
    if (!f.covers(a, b))
        fail(ErrorKind::Coverage, "exp_sum: range outside table");
    const double al = alpha - std::floor(alpha);
    const cplx w = e_of(al);
    CompensatedComplexSum acc;
    cplx z;
    const double* v = f.values.data() + (a - f.lo);
    for (std::int64_t i = 0; i <= b - a; ++i) {
        if (i % kResync == 0)
            z = e_of(frac_product(al, static_cast<double>(a + i)));
        if (v[i] != 0.0)
            acc.add(v[i] * z);
        z *= w;
    }
    return acc.value();
}

cplx exp_sum(const FnTable& f, double alpha) { return exp_sum(f, alpha, f.lo, f.hi); }

std::vector<cplx> exp_sum_many(const FnTable& f, std::span<const double> alphas)
{
    std::vector<cplx> out(alphas.size());
    parallel_for(alphas.size(), [&](std::size_t i) { out[i] = exp_sum(f, alphas[i]); });
    return out;
}

double ArcSystem::measure() const
{
    double phis = 0;
    for (std::int64_t q = 1; q <= qmax; ++q)
        phis += static_cast<double>(euler_phi(q));
    return 2.0 * delta * phis;
}

ArcSystem make_arcs(std::int64_t X, double Q, double delta)
{
    require(Q >= 1.0, "arcs: Q must be at least 1");
    require(delta > 0.0, "arcs: delta must be positive");
    ArcSystem s;
    s.X = X;
    s.Q = Q;
    s.delta = delta;
    s.qmax = static_cast<std::int64_t>(std::floor(Q));
    if (delta > 0.5)
        fail(ErrorKind::InvalidArgument, "arcs: delta = " + format_double(delta) +
                                             " exceeds 1/2, the arc would wrap onto itself");
    const double sep = 1.0 / static_cast<double>(s.qmax * s.qmax);
    if (s.qmax > 1 && !(2.0 * delta < sep))
        fail(ErrorKind::InvalidArgument,
             "arcs: disjointness violated, need 2*delta < 1/qmax^2 (2*delta = " +
                 format_double(2 * delta) + ", 1/qmax^2 = " + format_double(sep) + ")");
    for (std::int64_t q = 1; q <= s.qmax; ++q)
        for (std::int64_t a = 0; a < q; ++a)
            if (gcd64(a, q) == 1)
                s.arcs.push_back({q, a, static_cast<double>(a) / static_cast<double>(q), delta});
    std::sort(s.arcs.begin(), s.arcs.end(),
              [](const Arc& x, const Arc& y) { return x.center < y.center; });
    return s;
}

ArcSystem build_arcs(std::int64_t X, double B, double Bp)
{
    require(X >= 3, "build_arcs: X must be at least 3");
    const double L = std::log(static_cast<double>(X));
    ArcSystem s = make_arcs(X, std::max(1.0, std::pow(L, B)), std::pow(L, Bp) / static_cast<double>(X));
    s.B = B;
    s.Bp = Bp;
    return s;
}

namespace {

// c(D) = sum_n f(n) g(n + D) for every D in [g.lo - f.hi, g.hi - f.lo].
std::vector<double> full_correlation(const FnTable& f, const FnTable& g)
{
    const std::size_t na = f.size(), nb = g.size();
    const std::size_t nout = na + nb - 1;
    if (static_cast<double>(na) * static_cast<double>(nb) <= 4e6) {
        std::vector<double> c(nout);
        for (std::size_t s = 0; s < nout; ++s) {
            // D = g.lo - f.hi + s; pairs (i, j) with j - i = s - (na - 1)
            const auto off = static_cast<std::int64_t>(s) - static_cast<std::int64_t>(na - 1);
            CompensatedSum acc;
            for (std::int64_t i = std::max<std::int64_t>(0, -off);
                 i < static_cast<std::int64_t>(na) && i + off < static_cast<std::int64_t>(nb); ++i)
                acc.add(f.values[static_cast<std::size_t>(i)] * g.values[static_cast<std::size_t>(i + off)]);
            c[s] = acc.value();
        }
        return c;
    }
    std::vector<double> padded(na - 1 + nb, 0.0);
    std::copy(g.values.begin(), g.values.end(), padded.begin() + static_cast<std::ptrdiff_t>(na - 1));
    return fft_cross_correlate(f.values, padded, nout);
}

// K(t) = (sum_{q <= qmax} c_q(t)) sin(2 pi delta t) / (pi t).
class ArcKernel {
public:
    explicit ArcKernel(const ArcSystem& arcs) : delta_(arcs.delta)
    {
        for (std::int64_t q = 1; q <= arcs.qmax; ++q) {
            std::vector<double> row(static_cast<std::size_t>(q));
            for (std::int64_t r = 0; r < q; ++r)
                row[static_cast<std::size_t>(r)] = ramanujan_sum(q, r);
            cq_.push_back(std::move(row));
        }
    }
    double operator()(std::int64_t t) const
    {
        double c = 0;
        for (std::size_t q = 1; q <= cq_.size(); ++q) {
            std::int64_t r = t % static_cast<std::int64_t>(q);
            if (r < 0)
                r += static_cast<std::int64_t>(q);
            c += cq_[q - 1][static_cast<std::size_t>(r)];
        }
        if (c == 0.0)
            return 0.0;
        if (t == 0)
            return c * 2.0 * delta_;
        const double x = 2.0 * delta_ * static_cast<double>(t);
        return c * sin_pi(x) / (std::numbers::pi * static_cast<double>(t));
    }

private:
    double delta_;
    std::vector<std::vector<double>> cq_;
};

void check_arcs_complete(const ArcSystem& arcs)
{
    std::size_t expected = 0;
    for (std::int64_t q = 1; q <= arcs.qmax; ++q)
        expected += static_cast<std::size_t>(euler_phi(q));
    require(arcs.arcs.size() == expected, "kernel route needs the complete Farey arc system");
}

} // namespace

std::vector<double> major_arc_mt_kernel(const FnTable& f, const FnTable& g, const ArcSystem& arcs,
                                        std::int64_t h_lo, std::int64_t h_hi)
{
    require(h_lo <= h_hi, "major_arc_mt_kernel: empty shift range");
    check_arcs_complete(arcs);
    const std::vector<double> c = full_correlation(f, g);
    const std::int64_t d_lo = g.lo - f.hi;
    const std::int64_t d_hi = g.hi - f.lo;
    // K is needed on t = h - D for all h and D.
    const std::int64_t t_lo = h_lo - d_hi, t_hi = h_hi - d_lo;
    ArcKernel kernel(arcs);
    std::vector<double> K(static_cast<std::size_t>(t_hi - t_lo + 1));
    parallel_for((K.size() + 65535) / 65536, [&](std::size_t blk) {
        for (std::size_t i = blk * 65536; i < std::min(K.size(), (blk + 1) * 65536); ++i)
            K[i] = kernel(t_lo + static_cast<std::int64_t>(i));
    });
    std::vector<double> out(static_cast<std::size_t>(h_hi - h_lo + 1));
    parallel_for(out.size(), [&](std::size_t i) {
        const std::int64_t h = h_lo + static_cast<std::int64_t>(i);
        CompensatedSum acc;
        for (std::int64_t D = d_lo; D <= d_hi; ++D) {
            const double cd = c[static_cast<std::size_t>(D - d_lo)];
            if (cd != 0.0)
                acc.add(cd * K[static_cast<std::size_t>(h - D - t_lo)]);
        }
        out[i] = acc.value();
    });
    return out;
}

MainTermResult major_arc_mt(const FnTable& f, const FnTable& g, const ArcSystem& arcs,
                            std::int64_t h, const MainTermOptions& opt)
{
    const double freq = max_frequency(f, g, h);
    const QuadOptions q = oscillation_options(2.0 * arcs.delta, freq, opt.rel_tol);
    const double terms = static_cast<double>(arcs.arcs.size()) * q.initial_panels * q.order * 3.0 *
                         static_cast<double>(f.size() + g.size());
    MainTermMethod method = opt.method;
    if (method == MainTermMethod::Auto)
        method = terms <= opt.quadrature_budget ? MainTermMethod::Quadrature : MainTermMethod::Kernel;

    MainTermResult r;
    r.method = method;
    if (method == MainTermMethod::Kernel) {
        r.value = major_arc_mt_kernel(f, g, arcs, h, h)[0];
        return r;
    }
    CompensatedComplexSum total;
    for (const Arc& arc : arcs.arcs) {
        auto integrand = [&](double alpha) {
            return exp_sum(f, alpha) * std::conj(exp_sum(g, alpha)) *
                   e_of(frac_product(alpha, static_cast<double>(h)));
        };
        QuadResult res = integrate(integrand, arc.center - arc.halfwidth,
                                   arc.center + arc.halfwidth, q);
        total.add(res.value);
        r.nodes += res.nodes;
    }
    const cplx v = total.value();
    r.value = v.real();
    r.imag = v.imag();
    const double scale = std::max(1.0, f.l2_norm() * g.l2_norm());
    if (std::abs(r.imag) > 1e-6 * scale)
        fail(ErrorKind::NonConvergence, "major arc integral has imaginary part " +
                                            format_double(r.imag) + " for real tables");
    return r;
}

double minor_arc_integral(const FnTable& f, const FnTable& g, const ArcSystem& arcs,
                          std::int64_t h, double rel_tol)
{
    std::vector<double> centers;
    for (const Arc& a : arcs.arcs)
        centers.push_back(a.center);
    std::sort(centers.begin(), centers.end());
    centers.push_back(centers.front() + 1.0);
    const double freq = max_frequency(f, g, h);
    CompensatedComplexSum total;
    for (std::size_t i = 0; i + 1 < centers.size(); ++i) {
        const double lo = centers[i] + arcs.delta, hi = centers[i + 1] - arcs.delta;
        if (hi <= lo)
            continue;
        auto integrand = [&](double alpha) {
            return exp_sum(f, alpha) * std::conj(exp_sum(g, alpha)) *
                   e_of(frac_product(alpha, static_cast<double>(h)));
        };
        total.add(integrate(integrand, lo, hi, oscillation_options(hi - lo, freq, rel_tol)).value);
    }
    return total.value().real();
}

double minor_arc_l2(const FnTable& f, double beta, double width, double rel_tol)
{
    require(width > 0.0, "minor_arc_l2: width must be positive");
    width = std::min(width, 0.5);
    const double freq = static_cast<double>(f.hi - f.lo);
    auto integrand = [&](double theta) { return std::norm(exp_sum(f, theta)); };
    return integrate(integrand, beta - width, beta + width,
                     oscillation_options(2 * width, freq, rel_tol))
        .value.real();
}

ParsevalResult parseval_check(const FnTable& f, const FnTable& g, std::int64_t h)
{
    ParsevalResult r;
    CompensatedSum lhs;
    for (std::int64_t n = f.lo; n <= f.hi; ++n)
        if (g.covers(n + h))
            lhs.add(f.at(n) * g.at(n + h));
    r.lhs = lhs.value();
    r.scale = f.l2_norm() * g.l2_norm();

    const std::int64_t base = std::min(f.lo, g.lo);
    const std::int64_t span = std::max(f.hi, g.hi) - base + 1;
    const auto freq = static_cast<std::int64_t>(max_frequency(f, g, h));
    const std::size_t L = next_pow2(static_cast<std::size_t>(std::max(freq + 1, span)));
    std::vector<double> fa(static_cast<std::size_t>(span), 0.0), ga(static_cast<std::size_t>(span), 0.0);
    std::copy(f.values.begin(), f.values.end(), fa.begin() + (f.lo - base));
    std::copy(g.values.begin(), g.values.end(), ga.begin() + (g.lo - base));
    auto F = dft_plus(fa, L);
    auto G = dft_plus(ga, L);
    const auto Ls = static_cast<std::int64_t>(L);
    const std::int64_t hm = ((h % Ls) + Ls) % Ls;
    CompensatedComplexSum acc;
    for (std::int64_t k = 0; k < Ls; ++k) {
        const auto kh = static_cast<std::int64_t>((static_cast<__int128>(k) * hm) % Ls);
        acc.add(F[static_cast<std::size_t>(k)] * std::conj(G[static_cast<std::size_t>(k)]) *
                e_of(static_cast<double>(kh) / static_cast<double>(L)));
    }
    r.rhs = acc.value().real() / static_cast<double>(L);
    r.abs_err = std::abs(r.lhs - r.rhs);
    r.dft_length = L;
    return r;
}

double kog_discrepancy(const FnTable& lam, std::int64_t X, std::int64_t a, std::int64_t q,
                       double beta)
{
    require(q >= 1 && gcd64(a, q) == 1, "kog_discrepancy: need (a, q) = 1");
    const cplx S = exp_sum(lam, static_cast<double>(a) / static_cast<double>(q) + beta, X + 1, 2 * X);
    cplx integral;
    if (beta == 0.0) {
        integral = static_cast<double>(X);
    } else {
        const cplx num = e_of(frac_product(beta, 2.0 * static_cast<double>(X))) -
                         e_of(frac_product(beta, static_cast<double>(X)));
        integral = num / cplx(0.0, two_pi * beta);
    }
    const double coeff = static_cast<double>(moebius(q)) / static_cast<double>(euler_phi(q));
    return std::abs(S - coeff * integral) / static_cast<double>(X);
}

std::string experiment_kind_name(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::LambdaLambda: return "lambda-lambda";
    case ExperimentKind::DkDl: return "dk-dl";
    case ExperimentKind::LambdaDk: return "lambda-dk";
    case ExperimentKind::Goldbach: return "goldbach";
    }
    return "unknown";
}

ResourceEstimate estimate_experiment(const ExperimentParams& p)
{
    const double N = static_cast<double>(2 * p.X + std::abs(p.h0) + p.H + 1);
    const double L = static_cast<double>(next_pow2(static_cast<std::size_t>(p.X + 4 * p.H + 2)));
    ResourceEstimate e;
    // two tables plus FFT work space
    e.bytes = 16.0 * N + 40.0 * L;
    e.seconds = 4e-8 * N + 2e-8 * L * std::log2(std::max(L, 2.0));
    if (p.major_arc_prediction)
        e.seconds += 2e-9 * static_cast<double>(p.X) * static_cast<double>(2 * p.H + 1);
    return e;
}

namespace {

// 2 Pi_2 prod_{p | h, p > 2} (p-1)/(p-2), or 0 for odd h.
double singular_series_from(double two_pi2, std::int64_t h)
{
    if (h % 2 != 0)
        return 0.0;
    double v = two_pi2;
    for (const auto& pp : factorize(h))
        if (pp.p > 2)
            v *= static_cast<double>(pp.p - 1) / static_cast<double>(pp.p - 2);
    return v;
}

// integral over [X, 2X] of log^m x
double log_power_integral(std::int64_t X, int m)
{
    QuadOptions q;
    q.rel_tol = 1e-13;
    q.order = 20;
    const auto Xd = static_cast<double>(X);
    return integrate([m](double x) { return std::pow(std::log(x), m); }, Xd, 2 * Xd, q).value.real();
}

// prod_p factor(p, h), reusing the h = 1 product and correcting at p | h.
template <class Factor>
std::vector<double> euler_products_over_shifts(const std::vector<std::int64_t>& hs,
                                               std::int64_t p_max, Factor factor)
{
    CompensatedSum base;
    for (std::int64_t p : primes_up_to(p_max))
        base.add(std::log(factor(p, 1)));
    std::vector<double> out(hs.size(), 0.0);
    for (std::size_t i = 0; i < hs.size(); ++i) {
        if (hs[i] == 0)
            continue;
        double lg = base.value();
        for (const auto& pp : factorize(hs[i]))
            if (pp.p <= p_max)
                lg += std::log(factor(pp.p, hs[i])) - std::log(factor(pp.p, 1));
        out[i] = std::exp(lg);
    }
    return out;
}

} // namespace

ExperimentResult averaged_theorem_experiment(const ExperimentParams& p)
{
    require(p.X >= 3, "experiment: X must be at least 3");
    require(p.H >= 0, "experiment: H must be non-negative");
    ExperimentResult r;
    const double logX = std::log(static_cast<double>(p.X));
    const std::int64_t lo_shift = p.h0 - p.H, hi_shift = p.h0 + p.H;
    std::vector<std::int64_t> hs;
    for (std::int64_t h = lo_shift; h <= hi_shift; ++h)
        hs.push_back(h);
    auto keep = [&](std::int64_t h) {
        if (h == 0)
            return false;
        if (p.kind == ExperimentKind::Goldbach && h < 4)
            return false;
        return !p.even_only || h % 2 == 0;
    };

    auto table = [&](FnKind kind, int k, std::int64_t lo, std::int64_t hi) {
        return p.tables ? p.tables(kind, k, lo, hi) : tabulate(kind, k, lo, hi);
    };

    CorrelationSeries& s = r.series;
    std::vector<double> main(hs.size(), 0.0);
    if (p.kind == ExperimentKind::Goldbach) {
        require(lo_shift >= 4, "experiment: Goldbach needs N >= 4 throughout the window");
        FnTable lam = table(FnKind::VonMangoldt, 0, 1, hi_shift);
        s.X = p.X;
        s.h0 = p.h0;
        s.H = p.H;
        s.values = goldbach_series(lam, lo_shift, hi_shift);
        s.norm = static_cast<double>(p.X);
        const double two_pi2 = 2.0 * twin_prime_constant(p.p_max).value;
        for (std::size_t i = 0; i < hs.size(); ++i)
            main[i] = singular_series_from(two_pi2, hs[i]) * static_cast<double>(hs[i]);
        r.prediction = "singular-series S(N) N";
    } else {
        require(p.X + 1 + lo_shift >= 1, "experiment: window reaches below n = 1");
        const std::int64_t g_lo = p.X + 1 + lo_shift, g_hi = 2 * p.X + hi_shift;
        FnTable f, g;
        switch (p.kind) {
        case ExperimentKind::LambdaLambda:
            f = table(FnKind::VonMangoldt, 0, p.X + 1, 2 * p.X);
            g = table(FnKind::VonMangoldt, 0, g_lo, g_hi);
            break;
        case ExperimentKind::DkDl:
            f = table(FnKind::Divisor, p.k, p.X + 1, 2 * p.X);
            g = table(FnKind::Divisor, p.l, g_lo, g_hi);
            break;
        default:
            f = table(FnKind::VonMangoldt, 0, p.X + 1, 2 * p.X);
            g = table(FnKind::Divisor, p.k, g_lo, g_hi);
            break;
        }
        s = correlate(f, g, p.X, p.h0, p.H);
        if (p.kind == ExperimentKind::LambdaLambda) {
            const double two_pi2 = 2.0 * twin_prime_constant(p.p_max).value;
            for (std::size_t i = 0; i < hs.size(); ++i)
                main[i] = hs[i] == 0 ? 0.0 : singular_series_from(two_pi2, hs[i]) * static_cast<double>(p.X);
            r.prediction = "singular-series S(h) X";
        } else if (p.kind == ExperimentKind::DkDl) {
            const int m = p.k + p.l - 2;
            s.norm = static_cast<double>(p.X) * std::pow(logX, m);
            double fact = 1;
            for (int i = 2; i < p.k; ++i)
                fact *= i;
            for (int i = 2; i < p.l; ++i)
                fact *= i;
            const double I = log_power_integral(p.X, m);
            auto lc = euler_products_over_shifts(hs, p.p_max, [&](std::int64_t q, std::int64_t h) {
                return local_factor_dkdl(p.k, p.l, q, h);
            });
            for (std::size_t i = 0; i < hs.size(); ++i)
                main[i] = lc[i] / fact * I;
            r.prediction = "leading coefficient of P_{k,l,h} times integral of log^{k+l-2}";
        } else {
            const int m = p.k - 1;
            s.norm = static_cast<double>(p.X) * std::pow(logX, m);
            double fact = 1;
            for (int i = 2; i < p.k; ++i)
                fact *= i;
            const double I = log_power_integral(p.X, m);
            auto lc = euler_products_over_shifts(hs, p.p_max, [&](std::int64_t q, std::int64_t h) {
                return local_factor_dk_lambda(p.k, q, h);
            });
            for (std::size_t i = 0; i < hs.size(); ++i)
                main[i] = lc[i] / fact * I;
            r.prediction = "leading coefficient of Q_{k,h} times integral of log^{k-1}";
        }
        if (p.major_arc_prediction) {
            ArcSystem arcs = build_arcs(p.X, p.B, p.Bp);
            // both factors restricted to (X, 2X]
            FnTable g_in = g.slice(std::max(g.lo, p.X + 1), std::min(g.hi, 2 * p.X));
            r.major_arc_terms = major_arc_mt_kernel(f, g_in, arcs, lo_shift, hi_shift);
        }
    }
    s.main_terms = main;
    r.profile = error_profile(s, p.A, keep);
    return r;
}

} // namespace corrlab
