#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace corrlab {

std::size_t next_pow2(std::size_t n);

// c[s] = sum_i a[i] b[i + s] for s in [0, nout), via a real FFT of length
// next_pow2(max(|a|, |b|) + nout) so no circular wrap reaches the output.
std::vector<double> fft_cross_correlate(std::span<const double> a, std::span<const double> b,
                                        std::size_t nout);

// Linear convolution c[m] = sum_i a[i] b[m - i], m in [0, |a| + |b| - 1).
std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b);

// X[k] = sum_j x[j] e(jk/L) for k in [0, L), with x zero-padded to L.
std::vector<std::complex<double>> dft_plus(std::span<const double> x, std::size_t L);

} // namespace corrlab
