#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "corrlab/numeric.hpp"
#include "corrlab/report.hpp"

namespace corrlab {

// sup over windows [first, last] of |sum terms|, taken as the diameter of the
// prefix-sum points P_0 = 0, P_{i+1} = P_i + terms[i].
struct MaximalSumResult {
    double value = 0.0;
    std::size_t first = 0;
    std::size_t last = 0;
};

MaximalSumResult maximal_sum(std::span<const cplx> terms);
// |P_{last+1} - P_first| with the same prefix arithmetic as maximal_sum.
double window_sum(std::span<const cplx> terms, std::size_t first, std::size_t last);

// Real phase with closed-form derivatives up to order 4.
class Phase {
public:
    enum class Kind { Monomial, LogRatio, BalancedMain, LogScale, Custom, Dual };

    // c (w/M)^theta
    static Phase monomial(double c, double M, double theta);
    // (t/2 pi) log((w+ell)/(w-ell))
    static Phase log_ratio(double t, double ell);
    // (alpha/pi)(M1/w) + (beta/3 pi)(M1/w)^3
    static Phase balanced_main(double alpha, double beta, double M1);
    // c log(w/M)
    static Phase log_scale(double c, double M);
    // deriv(w, k) for k = 0..4
    static Phase custom(std::function<double(double, int)> deriv);

    Kind kind() const { return kind_; }
    double operator()(double w) const { return deriv(w, 0); }
    double deriv(double w, int order) const;

    // Dual phases only: the base-phase point u with base'(u) = t.
    double dual_point(double t) const;
    // Domain of a dual phase (the image of the base derivative).
    double domain_lo() const { return lo_; }
    double domain_hi() const { return hi_; }

private:
    friend Phase legendre_transform(const Phase& phase, double w_lo, double w_hi);

    Kind kind_ = Kind::Custom;
    double p_[3] = {0, 0, 0};
    std::function<double(double, int)> custom_;
    std::shared_ptr<const Phase> base_;
    double base_lo_ = 0, base_hi_ = 0;   // dual: base domain
    double lo_ = 0, hi_ = 0;             // dual: t domain
};

// phi*(t) = phi(u(t)) - t u(t), u = (phi')^{-1} on [w_lo, w_hi]. Applying it
// twice gives phi**(x) = phi(-x).
Phase legendre_transform(const Phase& phase, double w_lo, double w_hi);

// Phases e(phi(m)) for integer m in [a, b].
std::vector<cplx> phase_terms(const Phase& phase, std::int64_t a, std::int64_t b);

struct YTildeOptions {
    double ell_constant = 1.0;   // ell ranges over 1 <= ell <= ell_constant Q^2 M1 / H
};

// (H/M1) sum_ell |sum_{M1 <= m <= 2M1} e((t/2 pi) log((m+ell)/(m-ell)))|*.
// ell is also capped below M1 so that m - ell stays positive; q1 only scales
// the ell-range of the crude bound over all ell and is validated here.
double y_tilde(double t, std::int64_t M1, double H, double Q, std::int64_t q1 = 1,
               const YTildeOptions& opt = {});
std::int64_t y_tilde_ell_max(std::int64_t M1, double H, double Q, const YTildeOptions& opt = {});

// |sum_{M1 <= m <= 2M1} e((alpha/pi)(M1/m) + (beta/3 pi)(M1/m)^3)|*
double f_alpha_beta(double alpha, double beta, std::int64_t M1);

struct StabilityReport {
    double worst_ratio = 0.0;   // max of f(a+u,b+v)/f(a,b) and its inverse over the grid
    int samples = 0;
};

StabilityReport f_stability(std::int64_t M1, double alpha_lo, double alpha_hi, double beta_hi,
                            int samples, std::uint64_t seed);

struct TaylorSplitResult {
    double max_remainder = 0.0;
    std::int64_t argmax = 0;
    double shape = 0.0;   // t (ell/M1)^5
};

// Remainder of (t/2 pi) log((m+ell)/(m-ell)) after (t/pi)(ell/m) + (t/3 pi)(ell/m)^3.
double taylor_remainder(double t, double ell, double m);
TaylorSplitResult taylor_split_check(double t, double ell, std::int64_t M1);

struct ExpansionCheck {
    double max_residual = 0.0;
    double shape = 0.0;   // (beta/alpha)^2 A with A = alpha
    double worst_t = 0.0;
};

// Two-term expansion of the dual of the balanced phase,
// (2 alpha/pi) r^{-1/2} + (beta/3 pi) r^{-3/2}, r = alpha/(pi |t| M1),
// on a geometric grid of t in -(alpha/(pi M1)) [1/2, 2].
double legendre_two_term(double alpha, double beta, double M1, double t);
ExpansionCheck legendre_expansion_check(double alpha, double beta, double M1, int points = 20);

struct BProcessResult {
    double direct = 0.0;
    double transformed = 0.0;
    double residual = 0.0;
    double sqrt_M = 0.0;
    std::int64_t ell_lo = 0, ell_hi = 0;   // best ell-window, as signed integers
    double dual_length = 0.0;              // length of the image of phi' on [M, 2M]
};

// Sum over m in [M, 2M] against (M/sqrt X) times the maximal dual sum,
// maximised over dyadic windows eps ell in [L, 2L], L = 2^k X/M, |k| <= 2.
BProcessResult b_process_compare(const Phase& phase, std::int64_t M, double X_scale);

// int_0^X (|sum_{M <= m <= 2M} a_m e(t (m/M)^theta)|*)^4 dt over M^4 + M^2 X.
RatioReport rs_fourth_moment_experiment(std::int64_t M, double X, double theta,
                                        const std::vector<cplx>& a = {});

// (|t| ell / M1^2)^kappa M1^(lambda + 1/2)
double exponent_pair_bound(double t, double ell, double M1, double kappa = 1.0 / 14,
                           double lambda = 2.0 / 7);

// Measured Y~(t) against (H/M1) sum_ell of the exponent-pair bound.
RatioReport y_tilde_vs_exponent_pair(double t, std::int64_t M1, double H, double Q);

} // namespace corrlab
