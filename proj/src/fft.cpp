#include "corrlab/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <memory>
#include <mutex>
#include <new>

#include "corrlab/error.hpp"

namespace corrlab {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex()
{
    static std::mutex mu;
    return mu;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

template <class T>
std::unique_ptr<T[], FftwFree> fftw_array(std::size_t n)
{
    void* p = fftw_malloc(sizeof(T) * n);
    if (!p)
        fail(ErrorKind::Resource, "FFT buffer allocation of " + std::to_string(n) + " failed");
    return std::unique_ptr<T[], FftwFree>(static_cast<T*>(p));
}

void forward(std::span<const double> x, std::size_t L, fftw_complex* out)
{
    auto in = fftw_array<double>(L);
    std::fill(in.get(), in.get() + L, 0.0);
    std::copy(x.begin(), x.end(), in.get());
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(L), in.get(), out, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
}

std::vector<double> inverse(fftw_complex* spec, std::size_t L, std::size_t offset, std::size_t n)
{
    auto out = fftw_array<double>(L);
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_c2r_1d(static_cast<int>(L), spec, out.get(), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    std::vector<double> r(n);
    const double scale = 1.0 / static_cast<double>(L);
    for (std::size_t i = 0; i < n; ++i)
        r[i] = out[offset + i] * scale;
    return r;
}

std::size_t checked_length(std::size_t need)
{
    constexpr std::size_t kMax = std::size_t{1} << 30;
    if (need > kMax)
        fail(ErrorKind::Range, "FFT length " + std::to_string(need) + " exceeds 2^30");
    return next_pow2(need);
}

} // namespace

std::size_t next_pow2(std::size_t n)
{
    std::size_t L = 1;
    while (L < n)
        L <<= 1;
    return L;
}

std::vector<double> fft_cross_correlate(std::span<const double> a, std::span<const double> b,
                                        std::size_t nout)
{
    const std::size_t L = checked_length(std::max(a.size(), b.size()) + nout);
    const std::size_t nc = L / 2 + 1;
    auto A = fftw_array<fftw_complex>(nc);
    auto B = fftw_array<fftw_complex>(nc);
    forward(a, L, A.get());
    forward(b, L, B.get());
    for (std::size_t i = 0; i < nc; ++i) {
        std::complex<double> x(A[i][0], -A[i][1]), y(B[i][0], B[i][1]);
        auto z = x * y;
        B[i][0] = z.real();
        B[i][1] = z.imag();
    }
    A.reset();
    return inverse(B.get(), L, 0, nout);
}

std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b)
{
    if (a.empty() || b.empty())
        return {};
    const std::size_t n = a.size() + b.size() - 1;
    const std::size_t L = checked_length(n);
    const std::size_t nc = L / 2 + 1;
    auto A = fftw_array<fftw_complex>(nc);
    auto B = fftw_array<fftw_complex>(nc);
    forward(a, L, A.get());
    forward(b, L, B.get());
    for (std::size_t i = 0; i < nc; ++i) {
        std::complex<double> x(A[i][0], A[i][1]), y(B[i][0], B[i][1]);
        auto z = x * y;
        B[i][0] = z.real();
        B[i][1] = z.imag();
    }
    A.reset();
    return inverse(B.get(), L, 0, n);
}

std::vector<std::complex<double>> dft_plus(std::span<const double> x, std::size_t L)
{
    require(x.size() <= L, "dft_plus: input longer than transform");
    auto buf = fftw_array<fftw_complex>(L);
    for (std::size_t i = 0; i < L; ++i) {
        buf[i][0] = i < x.size() ? x[i] : 0.0;
        buf[i][1] = 0.0;
    }
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(L), buf.get(), buf.get(), FFTW_BACKWARD,
                                FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    std::vector<std::complex<double>> out(L);
    for (std::size_t i = 0; i < L; ++i)
        out[i] = {buf[i][0], buf[i][1]};
    return out;
}

} // namespace corrlab
