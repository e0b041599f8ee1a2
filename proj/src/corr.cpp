#include "corrlab/corr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "corrlab/error.hpp"
#include "corrlab/fft.hpp"
#include "corrlab/numeric.hpp"
#include "corrlab/parallel.hpp"
#include "corrlab/sieve.hpp"

namespace corrlab {

namespace {

bool integer_valued(std::span<const double> xs)
{
    return std::all_of(xs.begin(), xs.end(), [](double x) { return x == std::nearbyint(x); });
}

void need_cover(const FnTable& t, std::int64_t a, std::int64_t b, const char* which)
{
    if (!t.covers(a, b))
        fail(ErrorKind::Coverage, std::string(which) + " table [" + std::to_string(t.lo) + ", " +
                                      std::to_string(t.hi) + "] does not cover [" +
                                      std::to_string(a) + ", " + std::to_string(b) + "]");
}

double sum_sq(std::span<const double> xs)
{
    CompensatedSum s;
    for (double x : xs)
        s.add(x * x);
    return s.value();
}

} // namespace

double correlate_direct(const FnTable& f, const FnTable& g, std::int64_t X, std::int64_t h)
{
    need_cover(f, X + 1, 2 * X, "f");
    need_cover(g, X + 1 + h, 2 * X + h, "g");
    const double* fp = f.values.data() + (X + 1 - f.lo);
    const double* gp = g.values.data() + (X + 1 + h - g.lo);
    CompensatedSum s;
    for (std::int64_t i = 0; i < X; ++i)
        s.add(fp[i] * gp[i]);
    return s.value();
}

CorrelationSeries correlate(const FnTable& f, const FnTable& g, std::int64_t X, std::int64_t h0,
                            std::int64_t H, const CorrelateOptions& opt)
{
    require(X >= 1, "correlate: X must be positive");
    require(H >= 0, "correlate: H must be non-negative");
    need_cover(f, X + 1, 2 * X, "f");
    need_cover(g, X + 1 + h0 - H, 2 * X + h0 + H, "g");

    CorrelationSeries s;
    s.X = X;
    s.h0 = h0;
    s.H = H;
    s.norm = static_cast<double>(X);
    const auto nshift = static_cast<std::size_t>(2 * H + 1);
    std::span<const double> a(f.values.data() + (X + 1 - f.lo), static_cast<std::size_t>(X));
    std::span<const double> b(g.values.data() + (X + 1 + h0 - H - g.lo),
                              static_cast<std::size_t>(X + 2 * H));

    bool fft = opt.method == CorrMethod::Fft ||
               (opt.method == CorrMethod::Auto && 2 * H + 1 > kFftShiftThreshold);
    if (!fft) {
        s.values.resize(nshift);
        const std::size_t block = 16;
        parallel_for((nshift + block - 1) / block, [&](std::size_t blk) {
            for (std::size_t i = blk * block; i < std::min(nshift, (blk + 1) * block); ++i)
                s.values[i] = correlate_direct(f, g, X, s.shift(i));
        });
        return s;
    }

    s.used_fft = true;
    s.values = fft_cross_correlate(a, b, nshift);
    const double scale = std::sqrt(sum_sq(a) * sum_sq(b));
    // Integer tables give integer correlations; round when the sum is exact
    // in double precision.
    if (integer_valued(a) && integer_valued(b)) {
        double bound = 0;
        for (std::size_t i = 0; i < a.size(); ++i)
            bound = std::max(bound, std::abs(a[i]));
        double bmax = 0;
        for (double x : b)
            bmax = std::max(bmax, std::abs(x));
        if (bound * bmax * static_cast<double>(X) < 0x1p52)
            for (double& v : s.values)
                v = std::nearbyint(v);
    }
    // Spot-check a few deterministic pseudo-random shifts against the direct sum.
    std::uint64_t state = 0x9e3779b97f4a7c15ull ^ static_cast<std::uint64_t>(X * 31 + h0 * 7 + H);
    for (int c = 0; c < opt.spot_checks; ++c) {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        std::size_t i = c == 0 ? 0 : static_cast<std::size_t>((state >> 33) % nshift);
        double direct = correlate_direct(f, g, X, s.shift(i));
        double gap = std::abs(direct - s.values[i]) / std::max(scale, 1e-300);
        s.self_check_error = std::max(s.self_check_error, gap);
        s.values[i] = direct;
    }
    if (s.self_check_error > opt.tolerance)
        fail(ErrorKind::NonConvergence, "FFT correlation disagrees with direct evaluation by " +
                                            format_double(s.self_check_error) +
                                            " of the Cauchy-Schwarz scale");
    return s;
}

double goldbach_sum(const FnTable& lam, std::int64_t N)
{
    require(N >= 4, "goldbach_sum: N must be at least 4");
    need_cover(lam, 1, N - 1, "lambda");
    CompensatedSum s;
    for (std::int64_t n = 1; n < N; ++n)
        s.add(lam.at(n) * lam.at(N - n));
    return s.value();
}

double goldbach_sum(std::int64_t N)
{
    require(N >= 4, "goldbach_sum: N must be at least 4");
    return goldbach_sum(sieve_lambda(1, N - 1), N);
}

std::vector<double> goldbach_series(const FnTable& lam, std::int64_t N_lo, std::int64_t N_hi)
{
    require(N_lo >= 4 && N_hi >= N_lo, "goldbach_series: need 4 <= N_lo <= N_hi");
    need_cover(lam, 1, N_hi - 1, "lambda");
    const auto count = static_cast<std::size_t>(N_hi - N_lo + 1);
    std::vector<double> out(count);
    if (count <= kFftShiftThreshold) {
        for (std::size_t i = 0; i < count; ++i)
            out[i] = goldbach_sum(lam, N_lo + static_cast<std::int64_t>(i));
        return out;
    }
    // c[m] = sum_{i+j=m} x[i] x[j] with x[i] = Lambda(i+1): G(N) = c[N-2].
    std::span<const double> x(lam.values.data() + (1 - lam.lo), static_cast<std::size_t>(N_hi - 1));
    auto c = fft_convolve(x, x);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = c[static_cast<std::size_t>(N_lo + static_cast<std::int64_t>(i) - 2)];
    // Anchor the endpoints against direct sums.
    double scale = sum_sq(x);
    for (std::size_t i : {std::size_t{0}, count - 1}) {
        double direct = goldbach_sum(lam, N_lo + static_cast<std::int64_t>(i));
        if (std::abs(direct - out[i]) > 1e-9 * scale)
            fail(ErrorKind::NonConvergence, "FFT Goldbach series failed its spot check");
        out[i] = direct;
    }
    return out;
}

ErrorProfile error_profile(const CorrelationSeries& s, double A,
                           const std::function<bool(std::int64_t)>& keep)
{
    require(s.main_terms.has_value(), "error_profile: series has no main terms");
    require(s.main_terms->size() == s.values.size(), "error_profile: main term length mismatch");
    ErrorProfile p;
    p.A = A;
    const double logX = std::log(static_cast<double>(std::max<std::int64_t>(s.X, 3)));
    p.threshold = s.norm * std::pow(logX, -A);
    std::vector<double> errs;
    CompensatedSum mean;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (keep && !keep(s.shift(i)))
            continue;
        double err = std::abs(s.values[i] - (*s.main_terms)[i]);
        if (err > p.threshold)
            ++p.exceptional_count;
        errs.push_back(err / s.norm);
        mean.add(err / s.norm);
    }
    p.count = static_cast<std::int64_t>(errs.size());
    if (errs.empty())
        return p;
    p.mean_abs_norm_error = mean.value() / static_cast<double>(errs.size());
    p.exceptional_fraction = static_cast<double>(p.exceptional_count) / static_cast<double>(p.count);
    std::sort(errs.begin(), errs.end());
    for (double q : {0.5, 0.9, 0.99, 1.0}) {
        // nearest-rank quantile
        auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(errs.size())));
        p.quantiles.emplace_back(q, errs[std::max<std::size_t>(rank, 1) - 1]);
    }
    return p;
}

std::string format_double(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_csv(const CorrelationSeries& s, std::ostream& out,
               const std::function<bool(std::int64_t)>& keep)
{
    out << "h,value,main_term,error,norm_error\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        const std::int64_t h = s.shift(i);
        if (keep && !keep(h))
            continue;
        out << h << ',' << format_double(s.values[i]) << ',';
        if (s.main_terms) {
            double mt = (*s.main_terms)[i];
            double err = s.values[i] - mt;
            out << format_double(mt) << ',' << format_double(err) << ','
                << format_double(err / s.norm);
        } else {
            out << ",,";
        }
        out << '\n';
    }
}

} // namespace corrlab
