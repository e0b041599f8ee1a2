#include "corrlab/expsum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "corrlab/parallel.hpp"
#include "json.hpp"

namespace corrlab {

namespace {

inline double cross(cplx o, cplx a, cplx b)
{
    return (a.real() - o.real()) * (b.imag() - o.imag()) - (a.imag() - o.imag()) * (b.real() - o.real());
}

} // namespace

MaximalSumResult maximal_sum(std::span<const cplx> terms)
{
    require(!terms.empty(), "maximal sum needs at least one term");
    const std::size_t n = terms.size() + 1;
    std::vector<cplx> P(n);
    for (std::size_t i = 0; i < terms.size(); ++i)
        P[i + 1] = P[i] + terms[i];

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (P[a].real() != P[b].real())
            return P[a].real() < P[b].real();
        if (P[a].imag() != P[b].imag())
            return P[a].imag() < P[b].imag();
        return a < b;
    });
    // Andrew's monotone chain, counter-clockwise, collinear points dropped.
    std::vector<std::size_t> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(P[hull[k - 2]], P[hull[k - 1]], P[idx[i]]) <= 0)
            --k;
        hull[k++] = idx[i];
    }
    for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(P[hull[k - 2]], P[hull[k - 1]], P[idx[i]]) <= 0)
            --k;
        hull[k++] = idx[i];
    }
    hull.resize(k > 1 ? k - 1 : k);

    std::size_t bi = 0, bj = 1;
    double best = std::abs(P[1] - P[0]);
    auto consider = [&](std::size_t a, std::size_t b) {
        if (a == b)
            return;
        double d = std::abs(P[b] - P[a]);
        if (d > best) {
            best = d;
            bi = std::min(a, b);
            bj = std::max(a, b);
        }
    };
    const std::size_t h = hull.size();
    if (h == 2) {
        consider(hull[0], hull[1]);
    } else if (h > 2) {
        // Rotating calipers over antipodal pairs; the neighbour of each
        // antipode is also checked to absorb rounding in the area tests.
        std::size_t j = 1;
        for (std::size_t i = 0; i < h; ++i) {
            std::size_t ni = (i + 1) % h;
            while (std::abs(cross(P[hull[i]], P[hull[ni]], P[hull[(j + 1) % h]])) >
                   std::abs(cross(P[hull[i]], P[hull[ni]], P[hull[j]])))
                j = (j + 1) % h;
            for (std::size_t jj : {j, (j + 1) % h}) {
                consider(hull[i], hull[jj]);
                consider(hull[ni], hull[jj]);
            }
        }
    }
    return {best, bi, bj - 1};
}

double window_sum(std::span<const cplx> terms, std::size_t first, std::size_t last)
{
    require(first <= last && last < terms.size(), "window outside the term array");
    cplx P = 0, Pfirst = 0;
    for (std::size_t i = 0; i <= last; ++i) {
        if (i == first)
            Pfirst = P;
        P += terms[i];
    }
    return std::abs(P - Pfirst);
}

// ---------------------------------------------------------------------------

Phase Phase::monomial(double c, double M, double theta)
{
    require(M > 0, "monomial phase needs M > 0");
    Phase p;
    p.kind_ = Kind::Monomial;
    p.p_[0] = c, p.p_[1] = M, p.p_[2] = theta;
    return p;
}

Phase Phase::log_ratio(double t, double ell)
{
    require(ell >= 0, "log-ratio phase needs ell >= 0");
    Phase p;
    p.kind_ = Kind::LogRatio;
    p.p_[0] = t, p.p_[1] = ell;
    return p;
}

Phase Phase::balanced_main(double alpha, double beta, double M1)
{
    require(M1 > 0, "balanced phase needs M1 > 0");
    Phase p;
    p.kind_ = Kind::BalancedMain;
    p.p_[0] = alpha, p.p_[1] = beta, p.p_[2] = M1;
    return p;
}

Phase Phase::log_scale(double c, double M)
{
    require(M > 0, "log phase needs M > 0");
    Phase p;
    p.kind_ = Kind::LogScale;
    p.p_[0] = c, p.p_[1] = M;
    return p;
}

Phase Phase::custom(std::function<double(double, int)> deriv)
{
    Phase p;
    p.kind_ = Kind::Custom;
    p.custom_ = std::move(deriv);
    return p;
}

double Phase::deriv(double w, int order) const
{
    require(order >= 0 && order <= 4, "phase derivatives are available up to order 4");
    static constexpr double fact[] = {1, 1, 2, 6, 24, 120, 720};
    const double pi = std::numbers::pi;
    switch (kind_) {
    case Kind::Monomial: {
        double c = p_[0], theta = p_[2];
        for (int i = 0; i < order; ++i)
            c *= theta - i;
        return c * std::pow(w / p_[1], theta - order) / std::pow(p_[1], order);
    }
    case Kind::LogRatio: {
        double t = p_[0], ell = p_[1];
        if (order == 0)
            return t / two_pi * std::log1p(2 * ell / (w - ell));
        double s = (order % 2 ? 1.0 : -1.0) * fact[order - 1];
        return t / two_pi * s * (std::pow(w + ell, -order) - std::pow(w - ell, -order));
    }
    case Kind::BalancedMain: {
        double a = p_[0] * p_[2] / pi, b = p_[1] * p_[2] * p_[2] * p_[2] / (3 * pi);
        double sg = order % 2 ? -1.0 : 1.0;
        return sg * (a * fact[order] * std::pow(w, -1 - order) +
                     b * fact[order + 2] / 2 * std::pow(w, -3 - order));
    }
    case Kind::LogScale:
        if (order == 0)
            return p_[0] * std::log(w / p_[1]);
        return p_[0] * (order % 2 ? 1.0 : -1.0) * fact[order - 1] * std::pow(w, -order);
    case Kind::Custom:
        return custom_(w, order);
    case Kind::Dual: {
        double u = dual_point(w);
        if (order == 0)
            return (*base_)(u) - w * u;
        if (order == 1)
            return -u;
        double f2 = base_->deriv(u, 2);
        if (order == 2)
            return -1.0 / f2;
        double f3 = base_->deriv(u, 3);
        if (order == 3)
            return f3 / (f2 * f2 * f2);
        double f4 = base_->deriv(u, 4);
        return f4 / std::pow(f2, 4) - 3 * f3 * f3 / std::pow(f2, 5);
    }
    }
    return 0.0;
}

double Phase::dual_point(double t) const
{
    require(kind_ == Kind::Dual, "dual_point needs a Legendre-transformed phase");
    double slack = 1e-12 * std::max(std::abs(lo_), std::abs(hi_));
    if (t < lo_ - slack || t > hi_ + slack)
        fail(ErrorKind::Range, "t = " + std::to_string(t) + " outside the dual domain [" +
                                   std::to_string(lo_) + ", " + std::to_string(hi_) + "]");
    double a = base_lo_, b = base_hi_;
    bool increasing = base_->deriv(b, 1) > base_->deriv(a, 1);
    double u = 0.5 * (a + b);
    for (int it = 0; it < 200; ++it) {
        double g = base_->deriv(u, 1) - t;
        if (g == 0.0)
            return u;
        if ((g > 0) == increasing)
            b = u;
        else
            a = u;
        double next = u - g / base_->deriv(u, 2);
        if (!(next > a && next < b))
            next = 0.5 * (a + b);
        if (std::abs(next - u) <= 1e-15 * std::abs(next) || b - a <= 4e-16 * std::abs(u))
            return next;
        u = next;
    }
    fail(ErrorKind::NonConvergence, "Legendre root-finder did not converge at t = " + std::to_string(t));
}

Phase legendre_transform(const Phase& phase, double w_lo, double w_hi)
{
    require(w_lo < w_hi, "Legendre transform needs w_lo < w_hi");
    constexpr int samples = 257;
    int sign = 0;
    for (int i = 0; i < samples; ++i) {
        double w = w_lo + (w_hi - w_lo) * i / (samples - 1);
        double d2 = phase.deriv(w, 2);
        int s = d2 > 0 ? 1 : d2 < 0 ? -1 : 0;
        if (s == 0 || (sign != 0 && s != sign))
            fail(ErrorKind::InvalidArgument, "phase derivative is not strictly monotone on [" +
                                                 std::to_string(w_lo) + ", " + std::to_string(w_hi) + "]");
        sign = s;
    }
    Phase out;
    out.kind_ = Phase::Kind::Dual;
    out.base_ = std::make_shared<const Phase>(phase);
    out.base_lo_ = w_lo;
    out.base_hi_ = w_hi;
    double a = phase.deriv(w_lo, 1), b = phase.deriv(w_hi, 1);
    out.lo_ = std::min(a, b);
    out.hi_ = std::max(a, b);
    return out;
}

std::vector<cplx> phase_terms(const Phase& phase, std::int64_t a, std::int64_t b)
{
    require(a <= b, "phase_terms needs a <= b");
    std::vector<cplx> out(static_cast<std::size_t>(b - a + 1));
    for (std::int64_t m = a; m <= b; ++m)
        out[static_cast<std::size_t>(m - a)] = e_of(phase(static_cast<double>(m)));
    return out;
}

// ---------------------------------------------------------------------------

std::int64_t y_tilde_ell_max(std::int64_t M1, double H, double Q, const YTildeOptions& opt)
{
    double top = opt.ell_constant * Q * Q * static_cast<double>(M1) / H;
    return std::min<std::int64_t>(M1 - 1, static_cast<std::int64_t>(std::floor(top)));
}

double y_tilde(double t, std::int64_t M1, double H, double Q, std::int64_t q1, const YTildeOptions& opt)
{
    require(M1 >= 2 && H > 0 && Q > 0 && q1 >= 1, "y_tilde needs M1 >= 2 and H, Q, q1 positive");
    const std::int64_t L = y_tilde_ell_max(M1, H, Q, opt);
    if (L < 1)
        return 0.0;
    std::vector<double> per(static_cast<std::size_t>(L));
    parallel_for(per.size(), [&](std::size_t i) {
        auto ell = static_cast<double>(i + 1);
        per[i] = maximal_sum(phase_terms(Phase::log_ratio(t, ell), M1, 2 * M1)).value;
    });
    CompensatedSum acc;
    for (double v : per)
        acc.add(v);
    return H / static_cast<double>(M1) * acc.value();
}

double f_alpha_beta(double alpha, double beta, std::int64_t M1)
{
    require(M1 >= 2, "f(alpha, beta) needs M1 >= 2");
    return maximal_sum(phase_terms(Phase::balanced_main(alpha, beta, static_cast<double>(M1)), M1, 2 * M1))
        .value;
}

StabilityReport f_stability(std::int64_t M1, double alpha_lo, double alpha_hi, double beta_hi,
                            int samples, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> A(alpha_lo, alpha_hi), Bd(0.0, beta_hi), U(-1.0, 1.0);
    StabilityReport rep;
    for (int i = 0; i < samples; ++i) {
        double a = A(rng), b = Bd(rng), u = U(rng), v = U(rng);
        double f0 = f_alpha_beta(a, b, M1), f1 = f_alpha_beta(a + u, b + v, M1);
        rep.worst_ratio = std::max({rep.worst_ratio, f1 / f0, f0 / f1});
        ++rep.samples;
    }
    return rep;
}

double taylor_remainder(double t, double ell, double m)
{
    // sum_{j >= 2} 2 x^{2j+1} / (2j+1), x = ell/m
    double x = ell / m, x2 = x * x, pw = x2 * x2 * x, s = 0.0;
    for (int j = 2; j < 400; ++j) {
        double term = 2.0 * pw / (2 * j + 1);
        s += term;
        if (term <= 1e-18 * s)
            break;
        pw *= x2;
    }
    return t / two_pi * s;
}

TaylorSplitResult taylor_split_check(double t, double ell, std::int64_t M1)
{
    require(ell >= 0 && ell < 0.5 * static_cast<double>(M1), "Taylor split needs 0 <= ell < M1/2");
    TaylorSplitResult r;
    for (std::int64_t m = M1; m <= 2 * M1; ++m) {
        double v = std::abs(taylor_remainder(t, ell, static_cast<double>(m)));
        if (v > r.max_remainder) {
            r.max_remainder = v;
            r.argmax = m;
        }
    }
    if (r.argmax == 0)
        r.argmax = M1;
    r.shape = std::abs(t) * std::pow(ell / static_cast<double>(M1), 5);
    return r;
}

double legendre_two_term(double alpha, double beta, double M1, double t)
{
    const double pi = std::numbers::pi;
    double r = alpha / (pi * std::abs(t) * M1);
    return 2 * alpha / pi * std::pow(r, -0.5) + beta / (3 * pi) * std::pow(r, -1.5);
}

ExpansionCheck legendre_expansion_check(double alpha, double beta, double M1, int points)
{
    require(alpha > 0 && M1 > 0 && points >= 2, "expansion check needs alpha, M1 > 0");
    Phase dual = legendre_transform(Phase::balanced_main(alpha, beta, M1), M1 / 4, 4 * M1);
    ExpansionCheck r;
    r.shape = beta * beta / (alpha * alpha) * alpha;
    double t0 = alpha / (std::numbers::pi * M1);
    for (int i = 0; i < points; ++i) {
        double t = -t0 * std::pow(2.0, -1.0 + 2.0 * i / (points - 1));
        double res = std::abs(dual(t) - legendre_two_term(alpha, beta, M1, t));
        if (res > r.max_residual) {
            r.max_residual = res;
            r.worst_t = t;
        }
    }
    return r;
}

BProcessResult b_process_compare(const Phase& phase, std::int64_t M, double X)
{
    require(M >= 2 && X > 0, "B-process needs M >= 2 and X > 0");
    double Md = static_cast<double>(M);
    Phase dual = legendre_transform(phase, Md, 2 * Md);
    if (X < Md / 100 || X > 100 * Md * Md)
        fail(ErrorKind::InvalidArgument, "B-process needs M/100 <= X <= 100 M^2");
    for (int j = 1; j <= 4; ++j)
        for (int i = 0; i <= 32; ++i) {
            double w = Md * (1 + i / 32.0);
            double r = std::abs(phase.deriv(w, j)) * std::pow(Md, j) / X;
            if (r < 0.01 || r > 100)
                fail(ErrorKind::InvalidArgument, "derivative " + std::to_string(j) +
                                                     " is not within a factor 100 of X/M^" +
                                                     std::to_string(j));
        }

    BProcessResult res;
    res.sqrt_M = std::sqrt(Md);
    res.direct = maximal_sum(phase_terms(phase, M, 2 * M)).value;
    res.dual_length = dual.domain_hi() - dual.domain_lo();
    const int eps = phase.deriv(Md, 1) > 0 ? 1 : -1;
    const double L0 = X / Md;
    double best = 0.0;
    for (int k = -2; k <= 2; ++k) {
        double L = L0 * std::ldexp(1.0, k);
        double lo = eps > 0 ? L : -2 * L, hi = eps > 0 ? 2 * L : -L;
        lo = std::max(lo, dual.domain_lo());
        hi = std::min(hi, dual.domain_hi());
        auto a = static_cast<std::int64_t>(std::ceil(lo)), b = static_cast<std::int64_t>(std::floor(hi));
        if (a > b)
            continue;
        double v = maximal_sum(phase_terms(dual, a, b)).value;
        if (v > best) {
            best = v;
            res.ell_lo = a;
            res.ell_hi = b;
        }
    }
    res.transformed = Md / std::sqrt(X) * best;
    res.residual = std::abs(res.direct - res.transformed);
    return res;
}

RatioReport rs_fourth_moment_experiment(std::int64_t M, double X, double theta, const std::vector<cplx>& a)
{
    require(M >= 2 && X > 0, "Robert-Sargos experiment needs M >= 2 and X > 0");
    require(theta != 0.0 && theta != 1.0, "theta must differ from 0 and 1");
    const std::size_t n = static_cast<std::size_t>(M + 1);
    std::vector<cplx> coeff = a.empty() ? std::vector<cplx>(n, cplx(1.0)) : a;
    require(coeff.size() == n, "coefficient array must have M+1 entries");
    for (auto& c : coeff)
        require(std::abs(c) <= 1.0 + 1e-12, "coefficients must have modulus at most 1");
    std::vector<double> ph(n);
    for (std::size_t i = 0; i < n; ++i)
        ph[i] = std::pow(static_cast<double>(M + static_cast<std::int64_t>(i)) / static_cast<double>(M), theta);

    RatioReport r;
    r.experiment = "robert_sargos_fourth_moment";
    nlohmann::ordered_json params{{"M", M}, {"X", X}, {"theta", theta}};
    r.params = params.dump();
    double Md = static_cast<double>(M);
    r.rhs_shape = Md * Md * Md * Md + Md * Md * X;
    bool zero = std::all_of(coeff.begin(), coeff.end(), [](cplx c) { return c == cplx(0.0); });
    if (!zero) {
        double spread = std::abs(ph.back() - ph.front());
        QuadOptions opt;
        opt.initial_panels = std::max(8, static_cast<int>(std::ceil(2.0 * X * spread)));
        opt.rel_tol = 1e-7;
        opt.max_panels = 1 << 20;
        std::vector<cplx> terms(n);
        auto q = integrate(
            [&](double t) {
                for (std::size_t i = 0; i < n; ++i)
                    terms[i] = coeff[i] * e_of(frac_product(t, ph[i]));
                double v = maximal_sum(terms).value;
                return (v * v) * (v * v);
            },
            0.0, X, opt);
        r.lhs = q.value.real();
    }
    r.ratio = r.lhs / r.rhs_shape;
    return r;
}

double exponent_pair_bound(double t, double ell, double M1, double kappa, double lambda)
{
    return std::pow(std::abs(t) * ell / (M1 * M1), kappa) * std::pow(M1, lambda + 0.5);
}

RatioReport y_tilde_vs_exponent_pair(double t, std::int64_t M1, double H, double Q)
{
    RatioReport r;
    r.experiment = "y_tilde_exponent_pair";
    nlohmann::ordered_json params{{"t", t}, {"M1", M1}, {"H", H}, {"Q", Q}};
    r.params = params.dump();
    r.lhs = y_tilde(t, M1, H, Q);
    CompensatedSum acc;
    for (std::int64_t ell = 1; ell <= y_tilde_ell_max(M1, H, Q); ++ell)
        acc.add(exponent_pair_bound(t, static_cast<double>(ell), static_cast<double>(M1)));
    r.rhs_shape = H / static_cast<double>(M1) * acc.value();
    r.ratio = r.rhs_shape > 0 ? r.lhs / r.rhs_shape : 0.0;
    return r;
}

} // namespace corrlab
