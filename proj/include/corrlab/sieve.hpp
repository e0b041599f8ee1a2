#pragma once

#include <cstdint>

#include "corrlab/fn_table.hpp"

namespace corrlab {

inline constexpr std::int64_t kSieveLimit = std::int64_t{1} << 48;
inline constexpr std::int64_t kDefaultSegment = std::int64_t{1} << 20;

FnTable sieve_lambda(std::int64_t lo, std::int64_t hi, std::int64_t segment = kDefaultSegment);
FnTable sieve_dk(int k, std::int64_t lo, std::int64_t hi, std::int64_t segment = kDefaultSegment);
FnTable sieve_moebius(std::int64_t lo, std::int64_t hi, std::int64_t segment = kDefaultSegment);
FnTable sieve_log(std::int64_t lo, std::int64_t hi);

// d_k as (k-1) convolutions of the constant 1; slow, kept for cross-checks.
FnTable sieve_dk_by_convolution(int k, std::int64_t lo, std::int64_t hi);

// (f*g)(n) for n in [lo, hi]. Both inputs must cover every divisor touched.
FnTable dirichlet_convolve(const FnTable& f, const FnTable& g, std::int64_t lo, std::int64_t hi);

struct DivisorBoundCertificate {
    int k = 0;
    double witnessed_constant = 0.0;
    std::int64_t witness = 0;     // an n attaining the constant
};

// Smallest C with |f(n)| <= C d_2(n)^k log^k(2+n) on the table.
DivisorBoundCertificate divisor_bound_check(const FnTable& f, int k);

// Dispatch by kind (Custom / IndicatorDyadic not supported here).
FnTable tabulate(FnKind kind, int k, std::int64_t lo, std::int64_t hi);

} // namespace corrlab
