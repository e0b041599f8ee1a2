#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corrlab/fn_table.hpp"
#include "corrlab/numeric.hpp"
#include "corrlab/report.hpp"

namespace corrlab {

struct Character {
    std::int64_t modulus = 1;
    std::vector<cplx> values;    // chi(r) for r = 0 .. modulus-1
    bool is_principal = true;
    bool is_primitive = true;

    cplx operator()(std::int64_t n) const
    {
        std::int64_t r = n % modulus;
        return values[static_cast<std::size_t>(r < 0 ? r + modulus : r)];
    }
};

// All phi(q1) characters mod q1; the principal character comes first.
std::vector<Character> characters(std::int64_t q1);

// tau(conj chi) = sum_{l=1}^{q1} e(l/q1) conj(chi(l)).
cplx gauss_sum(const Character& chi);

// Evaluation context for D[f](1/2 + it, chi, q0) = sum_n f(q0 n) chi(n) n^{-1/2-it}.
class DirichletEval {
public:
    explicit DirichletEval(const FnTable& f, std::int64_t q0 = 1,
                           std::optional<Character> chi = std::nullopt);

    cplx eval(double t) const;
    // Uniform grid t0 + j dt, j < count, by per-term phase recurrence.
    std::vector<cplx> eval_grid(double t0, double dt, std::size_t count) const;
    std::vector<cplx> eval_grid(std::span<const double> ts) const;

    double abs_bound() const;   // sum |f(q0 n)| / sqrt(n)
    std::size_t terms() const { return n_.size(); }
    std::int64_t max_n() const { return n_.empty() ? 0 : n_.back(); }

private:
    std::vector<std::int64_t> n_;
    std::vector<double> logn_;
    std::vector<cplx> coeff_;    // f(q0 n) chi(n) / sqrt(n)
};

cplx eval_D(const DirichletEval& ctx, double t);
std::vector<cplx> eval_D_grid(const DirichletEval& ctx, std::span<const double> ts);

struct EdcResult {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

// |D[f e(a./q)](1/2+it)| against (d2(q)/sqrt q) sum_{q0 q1 = q} sum_chi |D[f](1/2+it, chi, q0)|.
EdcResult edc_check(const FnTable& f, std::int64_t q, std::int64_t a, double t);

// Integral over [T0, T0+T] of |D[f](1/2+it)|^2: exact bilinear expansion and quadrature.
double mvt_closed_form(const FnTable& f, double T0, double T);
double mvt_quadrature(const FnTable& f, double T0, double T, double rel_tol = 1e-10);

struct PerronResult {
    double approx = 0.0;
    double exact = 0.0;
    double err = 0.0;
    double shape = 0.0;    // |f|_inf X log(2+T) / T with X = the top of the support
};

PerronResult perron_truncated(const FnTable& f, double x, double T);

enum class PieceShape { HeathBrown, TypeDj, TypeII, Small };

std::string piece_shape_name(PieceShape s);

// One component of a decomposition, evaluated on the target window.
struct DecompositionPiece {
    PieceShape shape = PieceShape::Small;
    int j = 0;                         // Heath-Brown term index or the j of Type d_j
    double coefficient = 1.0;
    std::int64_t N = 0;                // alpha supported in [N, 2N)
    std::vector<std::int64_t> M;       // beta ranges [M_i, 2M_i)
    std::vector<std::string> beta_kinds;   // "1" or "L" (Type d_j), "conv" (Type II)
    bool ranges_ok = true;
    std::string violation;
    double l2_squared = 0.0;           // of the values (Small pieces are checked against this)
    double l2_bound = 0.0;             // the shape the Small piece is compared with
    bool good_cancellation = true;     // metadata only
    FnTable values;                    // piece on the window, without the coefficient
};

// Pieces (-1)^{j+1} C(K,j) L * 1^{*(j-1)} * (mu 1_{[1,(2X)^{1/K}]})^{*j} on [1, 2X].
std::vector<DecompositionPiece> heath_brown_decompose(int K, std::int64_t X);

struct ReconstructionCheck {
    double max_abs_error = 0.0;
    std::int64_t worst_n = 0;
};

// Compares sum_pieces coefficient * values with target on [lo, hi].
ReconstructionCheck verify_pieces(const std::vector<DecompositionPiece>& pieces,
                                  const FnTable& target, std::int64_t lo, std::int64_t hi);

enum class DecompTarget { Lambda, Dk };

struct CombParams {
    DecompTarget target = DecompTarget::Dk;
    int k = 2;
    int m = 3;
    double eps = 0.1;
    double H0 = 0.0;
    std::int64_t X = 10000;
    std::int64_t q0 = 1;
};

// Type d_j / Type II / Small decomposition of f(q0 .) on (X/q0, 2X/q0].
std::vector<DecompositionPiece> comb_decompose(const CombParams& p);

// Descriptors (no values) as a JSON array.
std::string pieces_json(const std::vector<DecompositionPiece>& pieces);

// Window of the dilated function: n with X < q0 n <= 2X.
std::pair<std::int64_t, std::int64_t> dilated_window(std::int64_t X, std::int64_t q0);

// g(p^b) for the factorisation d_k(q0 .) = d_k(q0) (d_k * g), tabulated on [1, n_max].
FnTable dilation_factor_g(int k, std::int64_t q0, std::int64_t n_max);

// sum over chi mod q1 of the integral over [a, b] of |D[1_{[1,X]}](1/2+it, chi)|^4
// (with_log: L 1_{[1,X]}).
double fourth_moment_integral(std::int64_t X, std::int64_t q1, double a, double b,
                              bool with_log = false);

RatioReport fourth_moment_experiment(std::int64_t X, std::int64_t q1, double T,
                                     bool with_log = false);
RatioReport jutila_experiment(std::int64_t q, double T, double T0,
                              const std::vector<double>& t_list, std::int64_t X);

// D[L 1_{[1,X]}](1/2+it, chi) through the integration-by-parts identity
// log X D[1_{[1,X]}] - sum_{m<X} D[1_{[1,m]}] log((m+1)/m).
cplx log_variant_via_identity(std::int64_t X, const Character& chi, double t);

enum class CancelKind { One, Moebius, Log };

struct GoodCancellationRow {
    double x = 0.0;
    double worst_ratio = 0.0;   // max |sum_{n <= x, n = a (q)} alpha(n) n^{-1/2-it}| / sqrt(x)
    std::int64_t q = 1, a = 0;
    double t = 0.0;
};

struct GoodCancellationReport {
    CancelKind kind = CancelKind::One;
    std::vector<GoodCancellationRow> rows;
    double decay_exponent = 0.0;   // slope of log(worst_ratio) against log log x
};

GoodCancellationReport good_cancellation_report(CancelKind kind, const std::vector<double>& xs,
                                                double B, double Bp, int t_samples = 8);

} // namespace corrlab
