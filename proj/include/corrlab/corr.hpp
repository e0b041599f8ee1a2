#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "corrlab/fn_table.hpp"

namespace corrlab {

// values[i] holds the correlation at shift h = h0 - H + i.
struct CorrelationSeries {
    std::int64_t X = 0;
    std::int64_t h0 = 0;
    std::int64_t H = 0;
    std::vector<double> values;
    std::optional<std::vector<double>> main_terms;
    double norm = 1.0;              // error normalisation (X times a log power)
    bool used_fft = false;
    double self_check_error = 0.0;  // worst FFT-vs-direct gap / scale on spot shifts

    std::size_t size() const { return values.size(); }
    std::int64_t shift(std::size_t i) const { return h0 - H + static_cast<std::int64_t>(i); }
    double value(std::int64_t h) const { return values.at(static_cast<std::size_t>(h - h0 + H)); }
};

enum class CorrMethod { Auto, Direct, Fft };

struct CorrelateOptions {
    CorrMethod method = CorrMethod::Auto;
    int spot_checks = 3;
    double tolerance = 1e-9;        // relative to the Cauchy-Schwarz scale |f|_2 |g|_2
};

// Shift counts above this use the FFT path under CorrMethod::Auto.
inline constexpr std::int64_t kFftShiftThreshold = 64;

// sum_{X < n <= 2X} f(n) g(n + h) for |h - h0| <= H.
CorrelationSeries correlate(const FnTable& f, const FnTable& g, std::int64_t X, std::int64_t h0,
                            std::int64_t H, const CorrelateOptions& opt = {});

// Single shift by compensated direct summation.
double correlate_direct(const FnTable& f, const FnTable& g, std::int64_t X, std::int64_t h);

// sum_{0 < n < N} Lambda(n) Lambda(N - n); lam must cover [1, N-1].
double goldbach_sum(std::int64_t N);
double goldbach_sum(const FnTable& lam, std::int64_t N);

// G(N) for N in [N_lo, N_hi] by FFT self-convolution of lam on [1, N_hi - 1].
std::vector<double> goldbach_series(const FnTable& lam, std::int64_t N_lo, std::int64_t N_hi);

struct ErrorProfile {
    double A = 0.0;
    double threshold = 0.0;
    std::int64_t count = 0;             // shifts considered
    std::int64_t exceptional_count = 0;
    double exceptional_fraction = 0.0;
    double mean_abs_norm_error = 0.0;
    std::vector<std::pair<double, double>> quantiles;   // (p, |error| / norm)
};

// Threshold norm * log^{-A} X. The optional filter selects which shifts count.
ErrorProfile error_profile(const CorrelationSeries& s, double A,
                           const std::function<bool(std::int64_t)>& keep = {});

// Columns h,value,main_term,error,norm_error with 17 significant digits.
void write_csv(const CorrelationSeries& s, std::ostream& out,
               const std::function<bool(std::int64_t)>& keep = {});

std::string format_double(double x);

} // namespace corrlab
