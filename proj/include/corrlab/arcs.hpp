#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corrlab/corr.hpp"
#include "corrlab/fn_table.hpp"
#include "corrlab/numeric.hpp"

namespace corrlab {

// S_f(alpha) = sum_n f(n) e(alpha n) over the table.
cplx exp_sum(const FnTable& f, double alpha);
// Same sum restricted to n in [a, b] (inside the table).
cplx exp_sum(const FnTable& f, double alpha, std::int64_t a, std::int64_t b);
std::vector<cplx> exp_sum_many(const FnTable& f, std::span<const double> alphas);

struct Arc {
    std::int64_t q = 1;
    std::int64_t a = 0;
    double center = 0.0;
    double halfwidth = 0.0;
};

// Major arcs around a/q, q <= Q, of half-width delta.
struct ArcSystem {
    std::int64_t X = 0;
    double B = 0.0;
    double Bp = 0.0;
    double Q = 1.0;
    double delta = 0.0;
    std::int64_t qmax = 1;
    std::vector<Arc> arcs;

    double measure() const;   // 2 delta sum_{q <= qmax} phi(q)
};

// Q = log^B X, delta = log^{B'} X / X.
ArcSystem build_arcs(std::int64_t X, double B, double Bp);
// Direct parameterisation; rejects overlapping arcs (2 delta >= 1/qmax^2 with
// more than one arc, or delta > 1/2).
ArcSystem make_arcs(std::int64_t X, double Q, double delta);

enum class MainTermMethod { Auto, Quadrature, Kernel };

struct MainTermOptions {
    MainTermMethod method = MainTermMethod::Auto;
    double rel_tol = 1e-8;
    // Auto switches to the kernel route above this many table-term evaluations.
    double quadrature_budget = 2e9;
};

struct MainTermResult {
    double value = 0.0;
    double imag = 0.0;
    MainTermMethod method = MainTermMethod::Kernel;
    std::int64_t nodes = 0;
};

// sum over arcs of the integral of S_f(alpha) conj(S_g(alpha)) e(alpha h).
MainTermResult major_arc_mt(const FnTable& f, const FnTable& g, const ArcSystem& arcs,
                            std::int64_t h, const MainTermOptions& opt = {});

// Main terms for many shifts at once through the exact kernel route:
// MT_h = sum_D c(D) K(h - D), where c is the full correlation of f and g and
// K(t) = (sum_{q <= qmax} c_q(t)) sin(2 pi delta t) / (pi t).
std::vector<double> major_arc_mt_kernel(const FnTable& f, const FnTable& g, const ArcSystem& arcs,
                                        std::int64_t h_lo, std::int64_t h_hi);

// The same integrand over the complement of the arcs (quadrature).
double minor_arc_integral(const FnTable& f, const FnTable& g, const ArcSystem& arcs,
                          std::int64_t h, double rel_tol = 1e-8);

// Integral of |S_f|^2 over |theta - beta| <= width.
double minor_arc_l2(const FnTable& f, double beta, double width, double rel_tol = 1e-8);

struct ParsevalResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double abs_err = 0.0;
    double scale = 0.0;   // |f|_2 |g|_2
    std::size_t dft_length = 0;
};

// lhs = sum f(n) g(n+h); rhs = the circle integral evaluated exactly as a
// finite Fourier inversion of length exceeding every |n - m + h|.
ParsevalResult parseval_check(const FnTable& f, const FnTable& g, std::int64_t h);

// |S_Lambda(a/q + beta) - (mu(q)/phi(q)) int_X^{2X} e(beta x) dx| / X with
// lam covering (X, 2X].
double kog_discrepancy(const FnTable& lam, std::int64_t X, std::int64_t a, std::int64_t q,
                       double beta);

enum class ExperimentKind { LambdaLambda, DkDl, LambdaDk, Goldbach };

struct ExperimentParams {
    ExperimentKind kind = ExperimentKind::LambdaLambda;
    int k = 2;
    int l = 2;
    std::int64_t X = 100000;
    std::int64_t h0 = 0;
    std::int64_t H = 64;
    double A = 1.0;
    double B = 1.0;
    double Bp = 2.5;
    std::int64_t p_max = 100000;
    bool even_only = false;        // restrict the profile to even shifts
    bool major_arc_prediction = false;
    // Supplies sieved tables; defaults to tabulate. The CLI routes this through the cache.
    std::function<FnTable(FnKind, int, std::int64_t, std::int64_t)> tables;
};

struct ResourceEstimate {
    double bytes = 0.0;
    double seconds = 0.0;
};

ResourceEstimate estimate_experiment(const ExperimentParams& p);

struct ExperimentResult {
    CorrelationSeries series;
    ErrorProfile profile;
    std::optional<std::vector<double>> major_arc_terms;
    std::string prediction;        // which closed form produced main_terms
};

ExperimentResult averaged_theorem_experiment(const ExperimentParams& p);

std::string experiment_kind_name(ExperimentKind k);

} // namespace corrlab
