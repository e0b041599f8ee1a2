#include "corrlab/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "corrlab/parallel.hpp"
#include "corrlab/sieve.hpp"
#include "json.hpp"

namespace corrlab {

namespace {

std::int64_t powmod(std::int64_t b, std::int64_t e, std::int64_t m)
{
    __int128 r = 1, x = b % m;
    while (e > 0) {
        if (e & 1)
            r = r * x % m;
        x = x * x % m;
        e >>= 1;
    }
    return static_cast<std::int64_t>(r);
}

std::int64_t primitive_root_mod_p(std::int64_t p)
{
    if (p == 2)
        return 1;
    auto fs = factorize(p - 1);
    for (std::int64_t g = 2;; ++g) {
        bool ok = true;
        for (auto [l, e] : fs)
            if (powmod(g, (p - 1) / l, p) == 1) {
                ok = false;
                break;
            }
        if (ok)
            return g;
    }
}

// Unit group of Z/p^e as a product of cyclic groups: generator orders and,
// for every residue, its exponent vector (empty rows for non-units).
struct LocalGroup {
    std::int64_t pe = 1;
    std::vector<std::int64_t> orders;
    std::vector<std::vector<std::int64_t>> exps;
};

LocalGroup local_group(std::int64_t p, int e)
{
    LocalGroup g;
    g.pe = 1;
    for (int i = 0; i < e; ++i)
        g.pe *= p;
    g.exps.assign(static_cast<std::size_t>(g.pe), {});
    if (p == 2) {
        if (e == 1) {
            g.exps[1] = {};
            return g;
        }
        std::int64_t o5 = e >= 3 ? g.pe / 4 : 1;
        g.orders = {2};
        if (e >= 3)
            g.orders.push_back(o5);
        for (std::int64_t s = 0; s < 2; ++s) {
            std::int64_t r = s ? g.pe - 1 : 1;
            for (std::int64_t t = 0; t < o5; ++t) {
                std::vector<std::int64_t> v{s};
                if (e >= 3)
                    v.push_back(t);
                g.exps[static_cast<std::size_t>(r)] = v;
                r = r * 5 % g.pe;
            }
        }
        return g;
    }
    std::int64_t root = primitive_root_mod_p(p);
    if (e >= 2 && powmod(root, p - 1, p * p) == 1)
        root += p;
    std::int64_t order = g.pe / p * (p - 1);
    g.orders = {order};
    std::int64_t r = 1;
    for (std::int64_t t = 0; t < order; ++t) {
        g.exps[static_cast<std::size_t>(r)] = {t};
        r = static_cast<std::int64_t>(static_cast<__int128>(r) * root % g.pe);
    }
    return g;
}

bool is_unit_row(const LocalGroup& g, std::int64_t r)
{
    // Residue 1 mod 2 has an empty exponent row but is a unit.
    if (g.orders.empty())
        return gcd64(r, g.pe) == 1;
    return !g.exps[static_cast<std::size_t>(r)].empty();
}

} // namespace

std::vector<Character> characters(std::int64_t q1)
{
    require(q1 >= 1 && q1 <= 10000, "character modulus must lie in [1, 10^4]");
    std::vector<LocalGroup> groups;
    for (auto [p, e] : factorize(q1))
        groups.push_back(local_group(p, e));
    std::vector<std::int64_t> orders;
    for (auto& g : groups)
        orders.insert(orders.end(), g.orders.begin(), g.orders.end());

    // Global exponent vectors of units.
    std::vector<std::vector<std::int64_t>> exps(static_cast<std::size_t>(q1));
    std::vector<char> unit(static_cast<std::size_t>(q1), 0);
    for (std::int64_t n = 0; n < q1; ++n) {
        if (gcd64(n, q1) != 1)
            continue;
        unit[static_cast<std::size_t>(n)] = 1;
        auto& v = exps[static_cast<std::size_t>(n)];
        for (auto& g : groups) {
            std::int64_t r = n % g.pe;
            if (!is_unit_row(g, r))
                continue;
            auto& row = g.exps[static_cast<std::size_t>(r)];
            v.insert(v.end(), row.begin(), row.end());
        }
    }

    std::int64_t count = 1;
    for (auto o : orders)
        count *= o;
    std::vector<Character> out;
    out.reserve(static_cast<std::size_t>(count));
    std::vector<std::int64_t> idx(orders.size(), 0);
    for (std::int64_t c = 0; c < count; ++c) {
        std::int64_t rem = c;
        for (std::size_t i = 0; i < orders.size(); ++i) {
            idx[i] = rem % orders[i];
            rem /= orders[i];
        }
        Character chi;
        chi.modulus = q1;
        chi.values.assign(static_cast<std::size_t>(q1), cplx(0.0));
        chi.is_principal = c == 0;
        for (std::int64_t n = 0; n < q1; ++n) {
            if (!unit[static_cast<std::size_t>(n)])
                continue;
            if (q1 == 1) {
                chi.values[0] = 1.0;
                continue;
            }
            // Sum of fractions j_i e_i / o_i, reduced mod 1 term by term.
            double frac = 0.0;
            auto& v = exps[static_cast<std::size_t>(n)];
            for (std::size_t i = 0; i < orders.size(); ++i)
                frac += static_cast<double>((idx[i] * v[i]) % orders[i]) / static_cast<double>(orders[i]);
            chi.values[static_cast<std::size_t>(n)] = e_of(frac);
        }
        // Induced from q1/p iff trivial on units = 1 mod q1/p.
        chi.is_primitive = true;
        for (auto [p, e] : factorize(q1)) {
            std::int64_t d = q1 / p;
            bool trivial = true;
            for (std::int64_t k = 0; k < p && trivial; ++k) {
                std::int64_t n = (1 + k * d) % q1;
                if (unit[static_cast<std::size_t>(n)] &&
                    std::abs(chi.values[static_cast<std::size_t>(n)] - 1.0) > 1e-9)
                    trivial = false;
            }
            if (trivial) {
                chi.is_primitive = false;
                break;
            }
        }
        out.push_back(std::move(chi));
    }
    return out;
}

cplx gauss_sum(const Character& chi)
{
    CompensatedComplexSum acc;
    for (std::int64_t l = 1; l <= chi.modulus; ++l)
        acc.add(e_of(static_cast<double>(l) / static_cast<double>(chi.modulus)) * std::conj(chi(l)));
    return acc.value();
}

// ---------------------------------------------------------------------------

DirichletEval::DirichletEval(const FnTable& f, std::int64_t q0, std::optional<Character> chi)
{
    require(q0 >= 1, "dilation q0 must be >= 1");
    std::int64_t n0 = std::max<std::int64_t>(1, (f.lo + q0 - 1) / q0);
    std::int64_t n1 = f.hi / q0;
    for (std::int64_t n = n0; n <= n1; ++n) {
        double v = f.at(q0 * n);
        if (v == 0.0)
            continue;
        cplx c = v;
        if (chi) {
            c *= (*chi)(n);
            if (c == cplx(0.0))
                continue;
        }
        double ln = std::log(static_cast<double>(n));
        n_.push_back(n);
        logn_.push_back(ln);
        coeff_.push_back(c / std::sqrt(static_cast<double>(n)));
    }
}

namespace {

// e^{-i t log n} with the rounding error of the product t log n folded in.
inline cplx phase(double t, double ln)
{
    double ph = t * ln;
    double err = std::fma(t, ln, -ph);
    double c = std::cos(ph), s = std::sin(ph);
    return {c - s * err, -(s + c * err)};
}

constexpr std::size_t kResync = 1024;

} // namespace

cplx DirichletEval::eval(double t) const
{
    CompensatedComplexSum acc;
    for (std::size_t i = 0; i < n_.size(); ++i)
        acc.add(coeff_[i] * phase(t, logn_[i]));
    return acc.value();
}

std::vector<cplx> DirichletEval::eval_grid(double t0, double dt, std::size_t count) const
{
    std::vector<cplx> out(count);
    std::size_t blocks = (count + kResync - 1) / kResync;
    parallel_for(blocks, [&](std::size_t b) {
        std::size_t j0 = b * kResync, j1 = std::min(count, j0 + kResync);
        std::vector<CompensatedComplexSum> acc(j1 - j0);
        double tb = t0 + dt * static_cast<double>(j0);
        for (std::size_t i = 0; i < n_.size(); ++i) {
            cplx z = coeff_[i] * phase(tb, logn_[i]);
            cplx w = phase(dt, logn_[i]);
            for (std::size_t j = j0; j < j1; ++j) {
                acc[j - j0].add(z);
                z *= w;
            }
        }
        for (std::size_t j = j0; j < j1; ++j)
            out[j] = acc[j - j0].value();
    });
    return out;
}

std::vector<cplx> DirichletEval::eval_grid(std::span<const double> ts) const
{
    std::vector<cplx> out(ts.size());
    parallel_for(ts.size(), [&](std::size_t i) { out[i] = eval(ts[i]); });
    return out;
}

double DirichletEval::abs_bound() const
{
    CompensatedSum acc;
    for (auto c : coeff_)
        acc.add(std::abs(c));
    return acc.value();
}

cplx eval_D(const DirichletEval& ctx, double t) { return ctx.eval(t); }

std::vector<cplx> eval_D_grid(const DirichletEval& ctx, std::span<const double> ts)
{
    return ctx.eval_grid(ts);
}

EdcResult edc_check(const FnTable& f, std::int64_t q, std::int64_t a, double t)
{
    require(q >= 1 && gcd64(a, q) == 1, "edc_check needs (a, q) = 1");
    CompensatedComplexSum lhs;
    for (std::int64_t n = std::max<std::int64_t>(1, f.lo); n <= f.hi; ++n) {
        double v = f.at(n);
        if (v == 0.0)
            continue;
        double ln = std::log(static_cast<double>(n));
        double fr = static_cast<double>(((a % q) * (n % q)) % q) / static_cast<double>(q);
        lhs.add(v / std::sqrt(static_cast<double>(n)) * e_of(fr) * phase(t, ln));
    }
    CompensatedSum rhs;
    for (std::int64_t q0 : divisors(q)) {
        for (auto& chi : characters(q / q0))
            rhs.add(std::abs(DirichletEval(f, q0, chi).eval(t)));
    }
    EdcResult r;
    r.lhs = std::abs(lhs.value());
    r.rhs = static_cast<double>(divisor_count(q)) / std::sqrt(static_cast<double>(q)) * rhs.value();
    r.holds = r.lhs <= r.rhs * (1.0 + 1e-12) + 1e-300;
    return r;
}

// ---------------------------------------------------------------------------

namespace {

struct Support {
    std::vector<std::int64_t> n;
    std::vector<double> a;
};

Support nonzero_support(const FnTable& f)
{
    Support s;
    for (std::int64_t n = std::max<std::int64_t>(1, f.lo); n <= f.hi; ++n)
        if (f.at(n) != 0.0) {
            s.n.push_back(n);
            s.a.push_back(f.at(n));
        }
    return s;
}

// sin(x)/x
inline double sinc(double x)
{
    if (std::abs(x) < 1e-4)
        return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

// Panels so that each holds about half a period of the fastest frequency.
int oscillation_panels(double length, double freq)
{
    double periods = length * freq / two_pi;
    return std::max(1, static_cast<int>(std::ceil(2.0 * periods)));
}

} // namespace

double mvt_closed_form(const FnTable& f, double T0, double T)
{
    Support s = nonzero_support(f);
    require(s.n.size() <= 10000, "closed-form mean value needs support size <= 10^4");
    const std::size_t S = s.n.size();
    std::vector<double> row(S, 0.0);
    double mid = T0 + 0.5 * T;
    parallel_for(S, [&](std::size_t i) {
        CompensatedSum acc;
        double ni = static_cast<double>(s.n[i]);
        acc.add(T * s.a[i] * s.a[i] / ni);
        for (std::size_t j = i + 1; j < S; ++j) {
            double nj = static_cast<double>(s.n[j]);
            double lam = std::log1p((nj - ni) / ni);
            double w = 2.0 * s.a[i] * s.a[j] / std::sqrt(ni * nj);
            acc.add(w * T * std::cos(lam * mid) * sinc(0.5 * lam * T));
        }
        row[i] = acc.value();
    });
    CompensatedSum total;
    for (double r : row)
        total.add(r);
    return total.value();
}

double mvt_quadrature(const FnTable& f, double T0, double T, double rel_tol)
{
    DirichletEval ctx(f);
    if (ctx.terms() == 0)
        return 0.0;
    Support s = nonzero_support(f);
    double freq = std::log(static_cast<double>(s.n.back()) / static_cast<double>(s.n.front()));
    QuadOptions opt;
    opt.initial_panels = oscillation_panels(T, freq);
    opt.rel_tol = rel_tol;
    opt.max_panels = 1 << 22;
    auto r = integrate([&](double t) { return std::norm(ctx.eval(t)); }, T0, T0 + T, opt);
    return r.value.real();
}

PerronResult perron_truncated(const FnTable& f, double x, double T)
{
    require(x > 0.0 && T > 0.0, "Perron needs x > 0 and T > 0");
    DirichletEval ctx(f);
    Support s = nonzero_support(f);
    PerronResult r;
    CompensatedSum exact;
    double sup = 0.0;
    for (std::size_t i = 0; i < s.n.size(); ++i) {
        if (static_cast<double>(s.n[i]) <= x)
            exact.add(s.a[i]);
        sup = std::max(sup, std::abs(s.a[i]));
    }
    r.exact = exact.value();
    double X = static_cast<double>(f.hi);
    r.shape = sup * X * std::log(2.0 + T) / T;
    if (s.n.empty())
        return r;
    double lx = std::log(x);
    double freq = std::max(std::abs(lx - std::log(static_cast<double>(s.n.front()))),
                           std::abs(lx - std::log(static_cast<double>(s.n.back()))));
    QuadOptions opt;
    opt.initial_panels = oscillation_panels(T, freq);
    opt.rel_tol = 1e-10;
    opt.max_panels = 1 << 22;
    double sx = std::sqrt(x);
    // The integrand is conjugate-symmetric in t for real f, so integrate over [0, T].
    auto q = integrate(
        [&](double t) {
            cplx xs = sx * std::conj(phase(t, lx));
            return ctx.eval(t) * xs / cplx(0.5, t);
        },
        0.0, T, opt);
    r.approx = q.value.real() / std::numbers::pi;
    r.err = std::abs(r.approx - r.exact);
    return r;
}

// ---------------------------------------------------------------------------

std::string piece_shape_name(PieceShape s)
{
    switch (s) {
    case PieceShape::HeathBrown: return "heath_brown";
    case PieceShape::TypeDj: return "type_dj";
    case PieceShape::TypeII: return "type_ii";
    case PieceShape::Small: return "small";
    }
    return "?";
}

std::vector<DecompositionPiece> heath_brown_decompose(int K, std::int64_t X)
{
    require(K >= 1 && K <= 5, "Heath-Brown identity supports 1 <= K <= 5");
    require(X >= 2, "X must be >= 2");
    const std::int64_t top = 2 * X;
    const auto Z = static_cast<std::int64_t>(iroot(static_cast<std::uint64_t>(top), K));
    FnTable L = sieve_log(1, top);
    FnTable one = constant_table(1, top);
    FnTable mu = sieve_moebius(1, top);
    for (std::int64_t n = Z + 1; n <= top; ++n)
        mu.values[static_cast<std::size_t>(n - 1)] = 0.0;

    std::vector<DecompositionPiece> out;
    for (int j = 1; j <= K; ++j) {
        FnTable acc = L;
        for (int i = 0; i < j - 1; ++i)
            acc = dirichlet_convolve(acc, one, 1, top);
        for (int i = 0; i < j; ++i)
            acc = dirichlet_convolve(acc, mu, 1, top);
        DecompositionPiece p;
        p.shape = PieceShape::HeathBrown;
        p.j = j;
        p.coefficient = (j % 2 ? 1.0 : -1.0) * binomial(K, j);
        p.N = Z;
        acc.label = "heath_brown_" + std::to_string(j);
        p.values = std::move(acc);
        out.push_back(std::move(p));
    }
    return out;
}

ReconstructionCheck verify_pieces(const std::vector<DecompositionPiece>& pieces,
                                  const FnTable& target, std::int64_t lo, std::int64_t hi)
{
    require(target.covers(lo, hi), "target table must cover the verification window");
    ReconstructionCheck r;
    for (std::int64_t n = lo; n <= hi; ++n) {
        CompensatedSum acc;
        for (auto& p : pieces)
            acc.add(p.coefficient * p.values.value_or_zero(n));
        double e = std::abs(acc.value() - target.at(n));
        if (e > r.max_abs_error) {
            r.max_abs_error = e;
            r.worst_n = n;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------

std::pair<std::int64_t, std::int64_t> dilated_window(std::int64_t X, std::int64_t q0)
{
    return {X / q0 + 1, 2 * X / q0};
}

FnTable dilation_factor_g(int k, std::int64_t q0, std::int64_t n_max)
{
    require(k >= 1 && q0 >= 1 && n_max >= 1, "dilation factor needs k, q0, n_max >= 1");
    auto dk_pp = [k](int e) { return binomial(e + k - 1, k - 1); };
    auto fs = factorize(q0);
    FnTable g = make_table(FnKind::Custom, 1, n_max, 0, "g");
    // g(p^b) = sum_i (-1)^i C(k,i) d_k(p^{a+b-i}) / d_k(p^a)
    auto local = [&](int a, int b) {
        double s = 0.0;
        for (int i = 0; i <= std::min(b, k); ++i)
            s += (i % 2 ? -1.0 : 1.0) * binomial(k, i) * dk_pp(a + b - i);
        return s / dk_pp(a);
    };
    std::function<void(std::size_t, std::int64_t, double)> walk = [&](std::size_t i, std::int64_t n,
                                                                      double v) {
        if (i == fs.size()) {
            g.values[static_cast<std::size_t>(n - 1)] = v;
            return;
        }
        std::int64_t pb = 1;
        for (int b = 0; n * pb <= n_max; ++b) {
            walk(i + 1, n * pb, v * local(fs[i].e, b));
            if (pb > n_max / fs[i].p)
                break;
            pb *= fs[i].p;
        }
    };
    walk(0, 1, 1.0);
    return g;
}

namespace {

enum class FactorKind { One, Log, Mu, G };

struct Factor {
    FactorKind kind;
    std::int64_t a, b;   // block [a, b]; a is the N of the block
};

// Dense values on [lo, lo + v.size()).
struct Sparse {
    std::int64_t lo = 1;
    std::vector<double> v;
    std::int64_t hi() const { return lo + static_cast<std::int64_t>(v.size()) - 1; }
};

Sparse convolve(const Sparse& x, const Sparse& y, std::int64_t limit)
{
    Sparse out;
    out.lo = x.lo * y.lo;
    if (out.lo > limit || x.v.empty() || y.v.empty())
        return {out.lo, {}};
    std::int64_t top = std::min<std::int64_t>(limit, x.hi() * y.hi());
    out.v.assign(static_cast<std::size_t>(top - out.lo + 1), 0.0);
    for (std::int64_t i = x.lo; i <= x.hi(); ++i) {
        double xi = x.v[static_cast<std::size_t>(i - x.lo)];
        if (xi == 0.0)
            continue;
        if (i * y.lo > top)
            break;
        std::int64_t jmax = std::min(y.hi(), top / i);
        for (std::int64_t j = y.lo; j <= jmax; ++j)
            out.v[static_cast<std::size_t>(i * j - out.lo)] += xi * y.v[static_cast<std::size_t>(j - y.lo)];
    }
    return out;
}

struct CombContext {
    std::int64_t w_lo = 0, w_hi = 0;   // window [w_lo, w_hi]
    double Xq = 0.0;
    double x_eps = 0.0;
    double H0 = 0.0;
    int m = 0;
    std::vector<double> mu;    // on [1, w_hi]
    std::vector<double> g1;    // on [1, g1 top]

    Sparse factor_values(const Factor& f) const
    {
        Sparse s;
        s.lo = f.a;
        s.v.resize(static_cast<std::size_t>(f.b - f.a + 1));
        for (std::int64_t n = f.a; n <= f.b; ++n) {
            double v = 1.0;
            switch (f.kind) {
            case FactorKind::One: v = 1.0; break;
            case FactorKind::Log: v = std::log(static_cast<double>(n)); break;
            case FactorKind::Mu: v = mu[static_cast<std::size_t>(n - 1)]; break;
            case FactorKind::G: v = g1[static_cast<std::size_t>(n - 1)]; break;
            }
            s.v[static_cast<std::size_t>(n - f.a)] = v;
        }
        return s;
    }
};

struct SlotGroup {
    FactorKind kind;
    int count;
    std::vector<Factor> blocks;
};

// Blocks [2^i, 2^{i+1}) covering [1, top].
std::vector<Factor> dyadic_blocks(FactorKind kind, std::int64_t top)
{
    std::vector<Factor> out;
    for (std::int64_t a = 1; a <= top; a *= 2)
        out.push_back({kind, a, std::min(top, 2 * a - 1)});
    return out;
}

const char* factor_name(FactorKind k)
{
    switch (k) {
    case FactorKind::One: return "1";
    case FactorKind::Log: return "L";
    case FactorKind::Mu: return "mu";
    case FactorKind::G: return "g";
    }
    return "?";
}

struct Group {
    PieceShape shape;
    std::vector<Factor> big;
    Sparse alpha;   // summed over combinations, coefficients folded in
    int r = 0;      // number of factors (for the range constants)
};

void accumulate(Sparse& into, const Sparse& x, double w)
{
    if (x.v.empty())
        return;
    if (into.v.empty()) {
        into.lo = x.lo;
    }
    std::int64_t lo = std::min(into.lo, x.lo);
    std::int64_t hi = std::max(into.v.empty() ? x.hi() : into.hi(), x.hi());
    if (lo < into.lo || hi > into.hi() || into.v.empty()) {
        std::vector<double> nv(static_cast<std::size_t>(hi - lo + 1), 0.0);
        for (std::size_t i = 0; i < into.v.size(); ++i)
            nv[static_cast<std::size_t>(into.lo - lo) + i] = into.v[i];
        into.v = std::move(nv);
        into.lo = lo;
    }
    for (std::size_t i = 0; i < x.v.size(); ++i)
        into.v[static_cast<std::size_t>(x.lo - into.lo) + i] += w * x.v[i];
}

std::vector<std::pair<std::int64_t, Sparse>> dyadic_split(const Sparse& s)
{
    std::vector<std::pair<std::int64_t, Sparse>> out;
    if (s.v.empty())
        return out;
    std::int64_t N = 1;
    while (2 * N <= s.lo)
        N *= 2;
    for (; N <= s.hi(); N *= 2) {
        std::int64_t a = std::max(N, s.lo), b = std::min(2 * N - 1, s.hi());
        Sparse part;
        part.lo = a;
        bool nonzero = false;
        for (std::int64_t n = a; n <= b; ++n) {
            double v = s.v[static_cast<std::size_t>(n - s.lo)];
            part.v.push_back(v);
            nonzero |= v != 0.0;
        }
        if (nonzero)
            out.emplace_back(N, std::move(part));
    }
    return out;
}

FnTable window_table(const Sparse& s, std::int64_t lo, std::int64_t hi, const std::string& label,
                     bool* nonzero)
{
    FnTable t = make_table(FnKind::Custom, lo, hi, 0, label);
    *nonzero = false;
    for (std::int64_t n = std::max(lo, s.lo); n <= std::min(hi, s.hi()); ++n) {
        double v = s.v[static_cast<std::size_t>(n - s.lo)];
        t.values[static_cast<std::size_t>(n - lo)] = v;
        *nonzero |= v != 0.0;
    }
    return t;
}

std::string fmt(double x)
{
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

void check_type_dj(DecompositionPiece& p, const CombContext& c, int r, bool all_one_or_log)
{
    double C = std::ldexp(1.0, r + 1);
    std::vector<std::string> v;
    if (p.j >= c.m)
        v.push_back("j = " + std::to_string(p.j) + " >= m");
    if (!all_one_or_log)
        v.push_back("a large factor is not 1 or L");
    if (static_cast<double>(p.N) > C * c.x_eps)
        v.push_back("N = " + std::to_string(p.N) + " exceeds X^eps = " + fmt(c.x_eps));
    if (!p.M.empty() && static_cast<double>(p.M.front()) * C < c.H0)
        v.push_back("M_1 = " + std::to_string(p.M.front()) + " below H0 = " + fmt(c.H0));
    double prod = static_cast<double>(p.N);
    for (auto M : p.M)
        prod *= static_cast<double>(M);
    if (prod * C < c.Xq || prod > C * c.Xq)
        v.push_back("N M_1..M_j = " + fmt(prod) + " not comparable to X");
    for (std::size_t i = 0; i < v.size(); ++i)
        p.violation += (i ? "; " : "") + v[i];
    p.ranges_ok = v.empty();
}

void check_type_ii(DecompositionPiece& p, const CombContext& c, int r)
{
    double C = std::ldexp(1.0, r + 1);
    std::vector<std::string> v;
    double N = static_cast<double>(p.N), M = static_cast<double>(p.M.front());
    if (N * C < c.x_eps)
        v.push_back("N = " + std::to_string(p.N) + " below X^eps = " + fmt(c.x_eps));
    if (N > C * c.H0)
        v.push_back("N = " + std::to_string(p.N) + " exceeds H0 = " + fmt(c.H0));
    if (N * M * C < c.Xq || N * M > C * c.Xq)
        v.push_back("N M = " + fmt(N * M) + " not comparable to X");
    for (std::size_t i = 0; i < v.size(); ++i)
        p.violation += (i ? "; " : "") + v[i];
    p.ranges_ok = v.empty();
}

// Expands the product of the slot groups into dyadic combinations, sorts the
// factors, classifies them and accumulates alpha per group of large factors.
void expand_combinations(const std::vector<SlotGroup>& slots, double coefficient,
                         const CombContext& c, std::map<std::string, Group>& groups)
{
    std::vector<Factor> chosen;
    std::function<void(std::size_t, std::size_t, int, int, double, std::int64_t, double)>
        rec = [&](std::size_t gi, std::size_t start, int left, int run, double mult,
                  std::int64_t lo_prod, double hi_prod) {
            if (gi == slots.size()) {
                if (hi_prod < static_cast<double>(c.w_lo))
                    return;
                std::vector<Factor> fs = chosen;
                std::stable_sort(fs.begin(), fs.end(),
                                 [](const Factor& x, const Factor& y) { return x.a < y.a; });
                const int r = static_cast<int>(fs.size());
                int s = 0;
                double prod = 1.0;
                while (s < r && prod * static_cast<double>(fs[static_cast<std::size_t>(s)].a) <= c.x_eps) {
                    prod *= static_cast<double>(fs[static_cast<std::size_t>(s)].a);
                    ++s;
                }
                if (s == r)
                    s = r - 1;   // desk scale: keep the largest factor out of alpha
                double prod1 = prod * static_cast<double>(fs[static_cast<std::size_t>(s)].a);
                bool type_ii = prod1 <= 2.0 * c.H0;
                int small = type_ii ? s + 1 : s;
                Sparse alpha{1, {1.0}};
                for (int i = 0; i < small; ++i)
                    alpha = convolve(alpha, c.factor_values(fs[static_cast<std::size_t>(i)]), c.w_hi);
                std::string key = type_ii ? "II" : "D";
                std::vector<Factor> big(fs.begin() + small, fs.end());
                for (auto& f : big)
                    key += std::string("|") + factor_name(f.kind) + ":" + std::to_string(f.a);
                auto [it, fresh] = groups.try_emplace(key);
                if (fresh) {
                    it->second.shape = type_ii ? PieceShape::TypeII : PieceShape::TypeDj;
                    it->second.big = big;
                }
                it->second.r = std::max(it->second.r, r);
                accumulate(it->second.alpha, alpha, coefficient * mult);
                return;
            }
            const SlotGroup& g = slots[gi];
            if (left == 0) {
                rec(gi + 1, 0, gi + 1 < slots.size() ? slots[gi + 1].count : 0, 0, mult, lo_prod,
                    hi_prod);
                return;
            }
            for (std::size_t b = start; b < g.blocks.size(); ++b) {
                const Factor& f = g.blocks[b];
                if (lo_prod > c.w_hi / f.a)
                    break;
                // Multinomial count!/prod(run!) built one copy at a time.
                int nrun = left < g.count && b == start ? run + 1 : 1;
                double nm = mult * static_cast<double>(g.count - left + 1) / static_cast<double>(nrun);
                chosen.push_back(f);
                rec(gi, b, left - 1, nrun, nm, lo_prod * f.a, hi_prod * static_cast<double>(f.b));
                chosen.pop_back();
            }
        };
    if (slots.empty())
        return;
    rec(0, 0, slots[0].count, 0, 1.0, 1, 1.0);
}

} // namespace

std::vector<DecompositionPiece> comb_decompose(const CombParams& p)
{
    require(p.X >= 16, "decomposition needs X >= 16");
    require(p.m >= 1, "m must be >= 1");
    if (!(p.eps > 0.0 && p.eps < 1.0 / p.m))
        fail(ErrorKind::InvalidArgument, "range constraint violated: need 0 < eps < 1/m (eps = " +
                                             fmt(p.eps) + ", 1/m = " + fmt(1.0 / p.m) + ")");
    const double X = static_cast<double>(p.X);
    const double lo_h = std::pow(X, 1.0 / p.m + p.eps);
    if (p.H0 < lo_h * (1.0 - 1e-12))
        fail(ErrorKind::InvalidArgument, "range constraint violated: X^(1/m+eps) = " + fmt(lo_h) +
                                             " > H0 = " + fmt(p.H0));
    if (p.H0 > X)
        fail(ErrorKind::InvalidArgument,
             "range constraint violated: H0 = " + fmt(p.H0) + " > X = " + fmt(X));
    const double logX = std::log(X);
    if (p.q0 < 1 || static_cast<double>(p.q0) > logX * logX * logX)
        fail(ErrorKind::InvalidArgument, "range constraint violated: q0 = " + std::to_string(p.q0) +
                                             " exceeds log^3 X = " + fmt(logX * logX * logX));
    if (p.target == DecompTarget::Dk)
        require(p.k >= 1 && p.k <= 8, "d_k decomposition supports 1 <= k <= 8");

    CombContext c;
    std::tie(c.w_lo, c.w_hi) = dilated_window(p.X, p.q0);
    c.Xq = X / static_cast<double>(p.q0);
    c.x_eps = std::pow(c.Xq, p.eps);
    c.H0 = p.H0;
    c.m = p.m;

    std::vector<DecompositionPiece> out;

    if (p.target == DecompTarget::Lambda && p.q0 > 1) {
        // Supported on powers of a single prime: already small.
        FnTable lam = sieve_lambda(p.q0 * c.w_lo, p.q0 * c.w_hi);
        DecompositionPiece piece;
        piece.shape = PieceShape::Small;
        piece.values = make_table(FnKind::Custom, c.w_lo, c.w_hi, 0, "lambda_dilated");
        for (std::int64_t n = c.w_lo; n <= c.w_hi; ++n)
            piece.values.values[static_cast<std::size_t>(n - c.w_lo)] = lam.at(p.q0 * n);
        double l2 = piece.values.l2_norm();
        piece.l2_squared = l2 * l2;
        piece.l2_bound = logX * logX * logX;
        piece.ranges_ok = piece.l2_squared <= piece.l2_bound;
        if (!piece.ranges_ok)
            piece.violation = "l2^2 exceeds log^3 X";
        out.push_back(std::move(piece));
        return out;
    }

    std::map<std::string, Group> groups;
    double coefficient_all = 1.0;
    if (p.target == DecompTarget::Lambda) {
        const int K = std::max(1, static_cast<int>(std::ceil(1.0 / p.eps - 1e-12)));
        const auto Z = static_cast<std::int64_t>(iroot(static_cast<std::uint64_t>(2 * p.X), K));
        FnTable mu = sieve_moebius(1, c.w_hi);
        c.mu = mu.values;
        for (int j = 1; j <= K; ++j) {
            std::vector<SlotGroup> slots;
            slots.push_back({FactorKind::Log, 1, dyadic_blocks(FactorKind::Log, c.w_hi)});
            if (j > 1)
                slots.push_back({FactorKind::One, j - 1, dyadic_blocks(FactorKind::One, c.w_hi)});
            slots.push_back({FactorKind::Mu, j, dyadic_blocks(FactorKind::Mu, std::min(Z, c.w_hi))});
            expand_combinations(slots, (j % 2 ? 1.0 : -1.0) * binomial(K, j), c, groups);
        }
    } else {
        std::vector<SlotGroup> slots;
        slots.push_back({FactorKind::One, p.k, dyadic_blocks(FactorKind::One, c.w_hi)});
        if (p.q0 > 1) {
            double dkq = 1.0;
            for (auto [pp, e] : factorize(p.q0))
                dkq *= binomial(e + p.k - 1, p.k - 1);
            coefficient_all = dkq;
            auto gtop = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(std::pow(X, p.eps / 2))));
            gtop = std::min(gtop, c.w_hi);
            c.g1 = dilation_factor_g(p.k, p.q0, gtop).values;
            slots.push_back({FactorKind::G, 1, {{FactorKind::G, 1, gtop}}});

            // Small piece d_k * g2 with g2 = g 1_{n > X^{eps/2}}.
            FnTable g = dilation_factor_g(p.k, p.q0, c.w_hi);
            FnTable dk = sieve_dk(p.k, 1, c.w_hi);
            DecompositionPiece small;
            small.shape = PieceShape::Small;
            small.coefficient = dkq;
            small.values = make_table(FnKind::Custom, c.w_lo, c.w_hi, 0, "dk_g2");
            for (std::int64_t m = gtop + 1; m <= c.w_hi; ++m) {
                double gm = g.at(m);
                if (gm == 0.0)
                    continue;
                for (std::int64_t d = (c.w_lo + m - 1) / m; d * m <= c.w_hi; ++d)
                    small.values.values[static_cast<std::size_t>(d * m - c.w_lo)] += gm * dk.at(d);
            }
            double l2 = small.values.l2_norm();
            small.l2_squared = l2 * l2;
            small.l2_bound = std::pow(X, 1.0 - p.eps / 8);
            small.ranges_ok = small.l2_squared <= small.l2_bound;
            if (!small.ranges_ok)
                small.violation = "l2^2 exceeds X^(1-eps/8)";
            out.push_back(std::move(small));
        }
        expand_combinations(slots, 1.0, c, groups);
    }

    for (auto& [key, grp] : groups) {
        if (grp.shape == PieceShape::TypeDj) {
            bool one_or_log = std::all_of(grp.big.begin(), grp.big.end(), [](const Factor& f) {
                return f.kind == FactorKind::One || f.kind == FactorKind::Log;
            });
            for (auto& [N, part] : dyadic_split(grp.alpha)) {
                Sparse acc = part;
                for (auto& f : grp.big)
                    acc = convolve(acc, c.factor_values(f), c.w_hi);
                DecompositionPiece piece;
                bool nonzero = false;
                piece.values = window_table(acc, c.w_lo, c.w_hi, "type_dj", &nonzero);
                if (!nonzero)
                    continue;
                piece.shape = PieceShape::TypeDj;
                piece.j = static_cast<int>(grp.big.size());
                piece.coefficient = coefficient_all;
                piece.N = N;
                for (auto& f : grp.big) {
                    piece.M.push_back(f.a);
                    piece.beta_kinds.push_back(factor_name(f.kind));
                }
                check_type_dj(piece, c, grp.r, one_or_log);
                out.push_back(std::move(piece));
            }
        } else {
            Sparse beta{1, {1.0}};
            for (auto& f : grp.big)
                beta = convolve(beta, c.factor_values(f), c.w_hi);
            auto alphas = dyadic_split(grp.alpha);
            auto betas = dyadic_split(beta);
            for (auto& [N, a] : alphas)
                for (auto& [M, b] : betas) {
                    if (a.lo * b.lo > c.w_hi || a.hi() * b.hi() < c.w_lo)
                        continue;
                    Sparse prod = convolve(a, b, c.w_hi);
                    DecompositionPiece piece;
                    bool nonzero = false;
                    piece.values = window_table(prod, c.w_lo, c.w_hi, "type_ii", &nonzero);
                    if (!nonzero)
                        continue;
                    piece.shape = PieceShape::TypeII;
                    piece.coefficient = coefficient_all;
                    piece.N = N;
                    piece.M = {M};
                    piece.beta_kinds = {"conv"};
                    check_type_ii(piece, c, grp.r);
                    out.push_back(std::move(piece));
                }
        }
    }
    return out;
}

std::string pieces_json(const std::vector<DecompositionPiece>& pieces)
{
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (auto& p : pieces) {
        nlohmann::ordered_json j;
        j["shape"] = piece_shape_name(p.shape);
        j["j"] = p.j;
        j["coefficient"] = p.coefficient;
        j["N"] = p.N;
        j["M"] = p.M;
        j["beta_kinds"] = p.beta_kinds;
        j["ranges_ok"] = p.ranges_ok;
        j["violation"] = p.violation;
        j["good_cancellation"] = p.good_cancellation;
        if (p.shape == PieceShape::Small) {
            j["l2_squared"] = p.l2_squared;
            j["l2_bound"] = p.l2_bound;
        }
        j["window"] = {p.values.lo, p.values.hi};
        arr.push_back(std::move(j));
    }
    return arr.dump();
}

// ---------------------------------------------------------------------------

namespace {

FnTable indicator_or_log(std::int64_t X, bool with_log)
{
    return with_log ? sieve_log(1, X) : constant_table(1, X);
}

} // namespace

double fourth_moment_integral(std::int64_t X, std::int64_t q1, double a, double b, bool with_log)
{
    require(X >= 1 && q1 >= 1 && b > a, "fourth moment needs X, q1 >= 1 and a < b");
    FnTable f = indicator_or_log(X, with_log);
    QuadOptions opt;
    opt.initial_panels = oscillation_panels(b - a, 2.0 * std::log(static_cast<double>(std::max<std::int64_t>(X, 2))));
    opt.rel_tol = 1e-9;
    opt.max_panels = 1 << 22;
    CompensatedSum total;
    for (auto& chi : characters(q1)) {
        DirichletEval ctx(f, 1, chi);
        auto r = integrate([&](double t) { return std::pow(std::norm(ctx.eval(t)), 2); }, a, b, opt);
        total.add(r.value.real());
    }
    return total.value();
}

RatioReport fourth_moment_experiment(std::int64_t X, std::int64_t q1, double T, bool with_log)
{
    require(X >= 2 && T >= 1.0, "fourth moment experiment needs X >= 2 and T >= 1");
    RatioReport r;
    r.experiment = with_log ? "fourth_moment_log" : "fourth_moment";
    nlohmann::ordered_json params{{"X", X}, {"q1", q1}, {"T", T}};
    r.params = params.dump();
    r.lhs = fourth_moment_integral(X, q1, 0.5 * T, T, with_log) +
            fourth_moment_integral(X, q1, -T, -0.5 * T, with_log);
    double q = static_cast<double>(q1), x = static_cast<double>(X);
    r.rhs_shape = q * T * (1.0 + q * q / (T * T) + x * x / (T * T * T * T));
    r.ratio = r.lhs / r.rhs_shape;
    return r;
}

RatioReport jutila_experiment(std::int64_t q, double T, double T0, const std::vector<double>& t_list,
                              std::int64_t X)
{
    require(q >= 1 && T >= 1.0 && T0 > 0.0 && !t_list.empty(), "Jutila experiment needs q, T >= 1, T0 > 0");
    for (std::size_t i = 0; i < t_list.size(); ++i) {
        if (!(t_list[i] > T && t_list[i] < 2 * T))
            fail(ErrorKind::InvalidArgument, "Jutila points must satisfy T < t_i < 2T");
        if (i > 0 && !(t_list[i] - t_list[i - 1] > T0))
            fail(ErrorKind::InvalidArgument, "Jutila points must be more than T0 apart");
    }
    RatioReport r;
    r.experiment = "jutila";
    nlohmann::ordered_json params{{"q", q}, {"T", T}, {"T0", T0}, {"r", t_list.size()}, {"X", X}};
    r.params = params.dump();
    CompensatedSum lhs;
    for (double t : t_list)
        lhs.add(fourth_moment_integral(X, q, t, t + T0));
    r.lhs = lhs.value();
    double rr = static_cast<double>(t_list.size());
    r.rhs_shape = static_cast<double>(q) * (rr * T0 + std::cbrt(rr * T * rr * T));
    r.ratio = r.lhs / r.rhs_shape;
    return r;
}

cplx log_variant_via_identity(std::int64_t X, const Character& chi, double t)
{
    // Prefix sums P_m = D[1_{[1,m]}] accumulated in order.
    CompensatedComplexSum prefix, integral;
    for (std::int64_t m = 1; m < X; ++m) {
        double md = static_cast<double>(m);
        prefix.add(chi(m) / std::sqrt(md) * phase(t, std::log(md)));
        integral.add(prefix.value() * std::log1p(1.0 / md));
    }
    double xd = static_cast<double>(X);
    prefix.add(chi(X) / std::sqrt(xd) * phase(t, std::log(xd)));
    return std::log(xd) * prefix.value() - integral.value();
}

GoodCancellationReport good_cancellation_report(CancelKind kind, const std::vector<double>& xs,
                                                double B, double Bp, int t_samples)
{
    require(!xs.empty() && t_samples >= 1, "good-cancellation report needs x values and t samples");
    GoodCancellationReport rep;
    rep.kind = kind;
    for (double x : xs) {
        require(x >= 16, "good-cancellation report needs x >= 16");
        auto xi = static_cast<std::int64_t>(std::floor(x));
        double lx = std::log(x);
        auto qmax = std::max<std::int64_t>(1, std::min<std::int64_t>(
                                                  64, static_cast<std::int64_t>(std::pow(lx, B))));
        FnTable alpha = kind == CancelKind::Moebius ? sieve_moebius(1, xi)
                        : kind == CancelKind::Log   ? sieve_log(1, xi)
                                                    : constant_table(1, xi);
        double t_lo = std::pow(lx, Bp);
        double t_hi = std::min(std::pow(x, Bp), 10.0 * t_lo);
        GoodCancellationRow row;
        row.x = x;
        std::vector<cplx> terms(static_cast<std::size_t>(xi));
        for (int s = 0; s < t_samples; ++s) {
            double t = t_samples == 1 ? t_lo : t_lo * std::pow(t_hi / t_lo, s / double(t_samples - 1));
            parallel_for(terms.size(), [&](std::size_t i) {
                double n = static_cast<double>(i + 1);
                terms[i] = alpha.values[i] / std::sqrt(n) * phase(t, std::log(n));
            });
            for (std::int64_t q = 1; q <= qmax; ++q) {
                std::vector<CompensatedComplexSum> by_res(static_cast<std::size_t>(q));
                for (std::int64_t n = 1; n <= xi; ++n)
                    by_res[static_cast<std::size_t>(n % q)].add(terms[static_cast<std::size_t>(n - 1)]);
                for (std::int64_t a = 0; a < q; ++a) {
                    double ratio = std::abs(by_res[static_cast<std::size_t>(a)].value()) / std::sqrt(x);
                    if (ratio > row.worst_ratio) {
                        row.worst_ratio = ratio;
                        row.q = q;
                        row.a = a;
                        row.t = t;
                    }
                }
            }
        }
        rep.rows.push_back(row);
    }
    // Least-squares slope of log(ratio) against log log x.
    if (rep.rows.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
        for (auto& r : rep.rows) {
            if (r.worst_ratio <= 0.0)
                continue;
            double u = std::log(std::log(r.x)), v = std::log(r.worst_ratio);
            sx += u, sy += v, sxx += u * u, sxy += u * v, n += 1;
        }
        if (n >= 2 && n * sxx - sx * sx > 0)
            rep.decay_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    return rep;
}

} // namespace corrlab
