#include "corrlab/sieve.hpp"

#include <cmath>
#include <limits>

#include "corrlab/error.hpp"
#include "corrlab/numeric.hpp"
#include "corrlab/parallel.hpp"

namespace corrlab {

namespace {

void check_range(std::int64_t lo, std::int64_t hi, std::int64_t segment)
{
    if (lo < 1 || hi < lo)
        fail(ErrorKind::InvalidArgument,
             "sieve range must satisfy 1 <= lo <= hi (got [" + std::to_string(lo) + ", " +
                 std::to_string(hi) + "])");
    if (hi > kSieveLimit)
        fail(ErrorKind::Range, "sieve range exceeds 2^48");
    require(segment >= 1, "segment size must be positive");
}

std::size_t segment_count(std::int64_t lo, std::int64_t hi, std::int64_t segment)
{
    return static_cast<std::size_t>((hi - lo) / segment + 1);
}

// First multiple of m that is >= a.
std::int64_t first_multiple(std::int64_t m, std::int64_t a) { return (a + m - 1) / m * m; }

} // namespace

FnTable sieve_lambda(std::int64_t lo, std::int64_t hi, std::int64_t segment)
{
    check_range(lo, hi, segment);
    FnTable t = make_table(FnKind::VonMangoldt, lo, hi);
    const auto primes = primes_up_to(static_cast<std::int64_t>(isqrt(hi)));
    std::vector<double> logp(primes.size());
    for (std::size_t i = 0; i < primes.size(); ++i)
        logp[i] = std::log(static_cast<double>(primes[i]));

    parallel_for(segment_count(lo, hi, segment), [&](std::size_t s) {
        const std::int64_t a = lo + static_cast<std::int64_t>(s) * segment;
        const std::int64_t b = std::min(hi, a + segment - 1);
        std::vector<std::uint8_t> composite(static_cast<std::size_t>(b - a + 1), 0);
        for (std::size_t i = 0; i < primes.size(); ++i) {
            const std::int64_t p = primes[i];
            for (std::int64_t m = std::max(p * p, first_multiple(p, a)); m <= b; m += p)
                composite[static_cast<std::size_t>(m - a)] = 1;
        }
        double* out = t.values.data() + (a - lo);
        for (std::int64_t n = std::max<std::int64_t>(a, 2); n <= b; ++n)
            if (!composite[static_cast<std::size_t>(n - a)])
                out[n - a] = std::log(static_cast<double>(n));
        // Proper prime powers were marked composite above.
        for (std::size_t i = 0; i < primes.size(); ++i) {
            const std::int64_t p = primes[i];
            for (std::int64_t q = p * p; q <= b; q *= p) {
                if (q >= a)
                    out[q - a] = logp[i];
                if (q > b / p)
                    break;
            }
        }
    });
    return t;
}

namespace {

// Multiplicative segmented sieve. For each prime p <= sqrt(hi) and each j,
// multiples of p^j get the update for "exponent at least j"; what remains
// after dividing out the small part is 1 or a single large prime.
template <class Update, class Large>
void multiplicative_sieve(std::int64_t lo, std::int64_t hi, std::int64_t segment,
                          std::vector<std::int64_t>& acc_all, Update update, Large large)
{
    const auto primes = primes_up_to(static_cast<std::int64_t>(isqrt(hi)));
    parallel_for(segment_count(lo, hi, segment), [&](std::size_t s) {
        const std::int64_t a = lo + static_cast<std::int64_t>(s) * segment;
        const std::int64_t b = std::min(hi, a + segment - 1);
        const auto len = static_cast<std::size_t>(b - a + 1);
        std::int64_t* acc = acc_all.data() + (a - lo);
        std::vector<std::int64_t> smooth(len, 1);
        for (std::int64_t p : primes) {
            std::int64_t q = p;
            for (int j = 1;; ++j) {
                for (std::int64_t m = first_multiple(q, a); m <= b; m += q) {
                    auto i = static_cast<std::size_t>(m - a);
                    smooth[i] *= p;
                    update(acc[i], j);
                }
                if (q > b / p)
                    break;
                q *= p;
            }
        }
        for (std::size_t i = 0; i < len; ++i)
            if (smooth[i] != a + static_cast<std::int64_t>(i))
                large(acc[i]);
    });
}

} // namespace

FnTable sieve_dk(int k, std::int64_t lo, std::int64_t hi, std::int64_t segment)
{
    check_range(lo, hi, segment);
    if (k < 1 || k > 8)
        fail(ErrorKind::InvalidArgument, "sieve_dk requires 1 <= k <= 8");
    FnTable t = make_table(FnKind::Divisor, lo, hi, k);
    if (k == 1) {
        std::fill(t.values.begin(), t.values.end(), 1.0);
        return t;
    }
    std::vector<std::int64_t> acc;
    try {
        acc.assign(t.values.size(), 1);
    } catch (const std::bad_alloc&) {
        fail(ErrorKind::Resource, "cannot allocate d_k work array");
    }
    // C(j+k-1, k-1) = C(j+k-2, k-1) * (j+k-1) / j; the division is exact.
    multiplicative_sieve(
        lo, hi, segment, acc,
        [k](std::int64_t& v, int j) { v = v * (j + k - 1) / j; },
        [k](std::int64_t& v) { v *= k; });
    for (std::size_t i = 0; i < acc.size(); ++i)
        t.values[i] = static_cast<double>(acc[i]);
    return t;
}

FnTable sieve_moebius(std::int64_t lo, std::int64_t hi, std::int64_t segment)
{
    check_range(lo, hi, segment);
    FnTable t = make_table(FnKind::Moebius, lo, hi);
    std::vector<std::int64_t> acc;
    try {
        acc.assign(t.values.size(), 1);
    } catch (const std::bad_alloc&) {
        fail(ErrorKind::Resource, "cannot allocate mu work array");
    }
    multiplicative_sieve(
        lo, hi, segment, acc,
        [](std::int64_t& v, int j) { v = j == 1 ? -v : 0; },
        [](std::int64_t& v) { v = -v; });
    for (std::size_t i = 0; i < acc.size(); ++i)
        t.values[i] = static_cast<double>(acc[i]);
    return t;
}

FnTable sieve_log(std::int64_t lo, std::int64_t hi)
{
    check_range(lo, hi, 1);
    FnTable t = make_table(FnKind::Log, lo, hi);
    for (std::int64_t n = lo; n <= hi; ++n)
        t.values[static_cast<std::size_t>(n - lo)] = std::log(static_cast<double>(n));
    return t;
}

FnTable sieve_dk_by_convolution(int k, std::int64_t lo, std::int64_t hi)
{
    check_range(lo, hi, 1);
    if (k < 1 || k > 8)
        fail(ErrorKind::InvalidArgument, "sieve_dk requires 1 <= k <= 8");
    FnTable one = constant_table(1, hi);
    FnTable acc = one;
    for (int j = 2; j <= k; ++j)
        acc = dirichlet_convolve(acc, one, 1, hi);
    FnTable out = acc.slice(lo, hi);
    out.kind = FnKind::Divisor;
    out.k = k;
    out.label.clear();
    return out;
}

FnTable dirichlet_convolve(const FnTable& f, const FnTable& g, std::int64_t lo, std::int64_t hi)
{
    if (lo < 1 || hi < lo)
        fail(ErrorKind::InvalidArgument, "convolution range must satisfy 1 <= lo <= hi");
    if (hi > kSieveLimit)
        fail(ErrorKind::Range, "convolution range exceeds 2^48");
    // Every d <= hi with a multiple in [lo, hi] is a divisor that some n needs,
    // both as the left factor and as the right cofactor.
    for (std::int64_t d = 1; d <= hi; ++d) {
        if (first_multiple(d, lo) > hi)
            continue;
        if (!f.covers(d))
            fail(ErrorKind::Coverage, "left factor does not cover divisor " + std::to_string(d) +
                                          " of n = " + std::to_string(first_multiple(d, lo)));
        if (!g.covers(d))
            fail(ErrorKind::Coverage, "right factor does not cover divisor " +
                                          std::to_string(d) + " of n = " +
                                          std::to_string(first_multiple(d, lo)));
    }
    FnTable out = make_table(FnKind::Custom, lo, hi, 0, "convolution");
    for (std::int64_t d = 1; d <= hi; ++d) {
        const double fd = f.value_or_zero(d);
        if (fd == 0.0)
            continue;
        const std::int64_t m0 = (lo + d - 1) / d;
        const std::int64_t m1 = hi / d;
        for (std::int64_t m = m0; m <= m1; ++m)
            out.values[static_cast<std::size_t>(d * m - lo)] += fd * g.at(m);
    }
    return out;
}

DivisorBoundCertificate divisor_bound_check(const FnTable& f, int k)
{
    require(!f.values.empty(), "divisor_bound_check: empty table");
    require(k >= 0, "divisor_bound_check: k must be non-negative");
    require(f.lo >= 1, "divisor_bound_check: table must start at n >= 1");
    FnTable d2 = sieve_dk(2, f.lo, f.hi);
    DivisorBoundCertificate cert{k, 0.0, f.lo};
    for (std::int64_t n = f.lo; n <= f.hi; ++n) {
        const double bound =
            std::pow(d2.at(n), k) * std::pow(std::log(2.0 + static_cast<double>(n)), k);
        const double c = std::abs(f.at(n)) / bound;
        if (c > cert.witnessed_constant) {
            cert.witnessed_constant = c;
            cert.witness = n;
        }
    }
    return cert;
}

FnTable tabulate(FnKind kind, int k, std::int64_t lo, std::int64_t hi)
{
    switch (kind) {
    case FnKind::VonMangoldt: return sieve_lambda(lo, hi);
    case FnKind::Moebius: return sieve_moebius(lo, hi);
    case FnKind::Divisor: return sieve_dk(k, lo, hi);
    case FnKind::Log: return sieve_log(lo, hi);
    default: break;
    }
    fail(ErrorKind::InvalidArgument, "cannot tabulate kind " + kind_name(kind, k));
}

} // namespace corrlab
