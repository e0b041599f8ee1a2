#include "corrlab/numeric.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace corrlab {

namespace {

template <class T>
T pairwise_impl(std::span<const T> xs)
{
    if (xs.size() <= 16) {
        T s{};
        for (const T& x : xs)
            s += x;
        return s;
    }
    std::size_t half = xs.size() / 2;
    return pairwise_impl(xs.first(half)) + pairwise_impl(xs.subspan(half));
}

} // namespace

double pairwise_sum(std::span<const double> xs) { return pairwise_impl(xs); }
cplx pairwise_sum(std::span<const cplx> xs) { return pairwise_impl(xs); }

const GaussRule& gauss_legendre(int n)
{
    static std::mutex mu;
    static std::map<int, std::unique_ptr<GaussRule>> cache;
    require(n >= 1 && n <= 4096, "gauss_legendre: order out of range");
    std::lock_guard lock(mu);
    auto& slot = cache[n];
    if (slot)
        return *slot;

    auto rule = std::make_unique<GaussRule>();
    rule->nodes.resize(n);
    rule->weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Tricomi initial guess, then Newton on P_n.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double pn = n == 1 ? x : p1;
            double pm = n == 1 ? 1.0 : p0;
            dp = n * (x * pn - pm) / (x * x - 1.0);
            double dx = pn / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double pn = n == 1 ? x : p1;
            double pm = n == 1 ? 1.0 : p0;
            dp = n * (x * pn - pm) / (x * x - 1.0);
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule->nodes[i] = -x;
        rule->nodes[n - 1 - i] = x;
        rule->weights[i] = w;
        rule->weights[n - 1 - i] = w;
    }
    if (n % 2 == 1)
        rule->nodes[n / 2] = 0.0;
    slot = std::move(rule);
    return *slot;
}

std::int64_t gcd64(std::int64_t a, std::int64_t b)
{
    a = a < 0 ? -a : a;
    b = b < 0 ? -b : b;
    while (b != 0) {
        std::int64_t t = a % b;
        a = b;
        b = t;
    }
    return a;
}

std::uint64_t isqrt(std::uint64_t n)
{
    auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
    while (r > 0 && r * r > n)
        --r;
    while ((r + 1) * (r + 1) <= n)
        ++r;
    return r;
}

std::uint64_t iroot(std::uint64_t n, int k)
{
    if (k == 1)
        return n;
    auto pow_le = [&](std::uint64_t r) {
        unsigned __int128 acc = 1;
        for (int i = 0; i < k; ++i) {
            acc *= r;
            if (acc > n)
                return false;
        }
        return true;
    };
    auto r = static_cast<std::uint64_t>(std::pow(static_cast<double>(n), 1.0 / k));
    while (r > 0 && !pow_le(r))
        --r;
    while (pow_le(r + 1))
        ++r;
    return r;
}

double binomial(int n, int k)
{
    if (k < 0 || k > n)
        return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return std::round(r);
}

std::vector<PrimePower> factorize(std::int64_t n)
{
    require(n != 0, "factorize: n must be non-zero");
    if (n < 0)
        n = -n;
    std::vector<PrimePower> out;
    for (std::int64_t p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
        if (n % p != 0)
            continue;
        int e = 0;
        while (n % p == 0) {
            n /= p;
            ++e;
        }
        out.push_back({p, e});
    }
    if (n > 1)
        out.push_back({n, 1});
    return out;
}

int moebius(std::int64_t n)
{
    int mu = 1;
    for (const auto& pp : factorize(n)) {
        if (pp.e > 1)
            return 0;
        mu = -mu;
    }
    return mu;
}

std::int64_t euler_phi(std::int64_t n)
{
    std::int64_t r = n < 0 ? -n : n;
    for (const auto& pp : factorize(n))
        r = r / pp.p * (pp.p - 1);
    return r;
}

std::int64_t divisor_count(std::int64_t n)
{
    std::int64_t r = 1;
    for (const auto& pp : factorize(n))
        r *= pp.e + 1;
    return r;
}

std::vector<std::int64_t> divisors(std::int64_t n)
{
    std::vector<std::int64_t> ds{1};
    for (const auto& pp : factorize(n)) {
        std::size_t base = ds.size();
        std::int64_t pk = 1;
        for (int e = 1; e <= pp.e; ++e) {
            pk *= pp.p;
            for (std::size_t i = 0; i < base; ++i)
                ds.push_back(ds[i] * pk);
        }
    }
    std::sort(ds.begin(), ds.end());
    return ds;
}

bool is_prime(std::int64_t n)
{
    if (n < 2)
        return false;
    for (std::int64_t p = 2; p * p <= n; ++p)
        if (n % p == 0)
            return false;
    return true;
}

std::vector<std::int64_t> primes_up_to(std::int64_t n)
{
    std::vector<std::int64_t> out;
    if (n < 2)
        return out;
    out.push_back(2);
    // index i represents 2i+1
    std::size_t half = static_cast<std::size_t>((n - 1) / 2) + 1;
    std::vector<std::uint8_t> composite(half, 0);
    for (std::size_t i = 1; i < half; ++i) {
        if (composite[i])
            continue;
        std::int64_t p = 2 * static_cast<std::int64_t>(i) + 1;
        out.push_back(p);
        for (std::int64_t m = p * p; m <= n; m += 2 * p)
            composite[static_cast<std::size_t>(m / 2)] = 1;
    }
    return out;
}

} // namespace corrlab
