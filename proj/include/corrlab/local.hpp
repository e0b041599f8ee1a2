#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace corrlab {

// Truncated Euler product over p <= p_max.
struct LocalFactorResult {
    double value = 0.0;
    std::int64_t p_max = 0;
    double tail_bound = 0.0;     // bound on |log(full / truncated)|
    double tail_proxy = 0.0;     // sum over p_max < p <= 2 p_max of |factor - 1|
    std::map<std::int64_t, double> per_prime;   // filled on request
};

struct SingularSeriesValue {
    std::int64_t h = 0;
    double value = 0.0;
    std::int64_t p_max = 0;
    double tail_bound = 0.0;
};

// prod_{2 < p <= p_max} (1 - 1/(p-1)^2); tail bound 2/p_max.
LocalFactorResult twin_prime_constant(std::int64_t p_max, bool keep_factors = false);

// 0 for odd h, else 2 Pi_2 prod_{p | h, p > 2} (p-1)/(p-2).
SingularSeriesValue singular_series(std::int64_t h, std::int64_t p_max);

// E[d_{k,p}(n) d_{l,p}(n+h)] / (E d_{k,p} E d_{l,p}) for n uniform on Z_p.
double local_factor_dkdl(int k, int l, std::int64_t p, std::int64_t h);
// E[d_{k,p}(n) Lambda_p(n+h)] / E d_{k,p}.
double local_factor_dk_lambda(int k, std::int64_t p, std::int64_t h);
// E[Lambda_p(n) Lambda_p(n+h)].
double local_factor_lambda_lambda(std::int64_t p, std::int64_t h);

// Local expectation of d_{k,p}: (1 - 1/p)^{1-k}.
double expected_dk_local(int k, std::int64_t p);

// Leading coefficients of P_{k,l,h} and Q_{k,h}.
LocalFactorResult leading_coeff_P(int k, int l, std::int64_t h, std::int64_t p_max,
                                  bool keep_factors = false);
LocalFactorResult leading_coeff_Q(int k, std::int64_t h, std::int64_t p_max,
                                  bool keep_factors = false);

// c_q(h) via multiplicativity and prime-power closed forms.
double ramanujan_sum(std::int64_t q, std::int64_t h);

// sum_{q <= Qmax} mu^2(q) c_q(h) / phi(q)^2.
double singular_series_via_ramanujan(std::int64_t h, std::int64_t Qmax);

// {h, kind, value, p_max, tail_bound}
std::string prediction_json(std::int64_t h, const std::string& kind, double value,
                            std::int64_t p_max, double tail_bound);

} // namespace corrlab
