#include "ssep/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ssep {

namespace {

// Forces the product to round to a double before it joins a sum.  The
// compiler otherwise contracts a*b + c*d into an fma even across
// statements, and the merge of a summary with its mirrored (negated)
// counterpart must cancel exactly.
inline double rounded_product(double a, double b) {
    volatile double p = a * b;
    return p;
}

}  // namespace

void McSummary::merge(const McSummary& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(other.n_);
    const double nc = na + nb;
    const double delta = other.mean_ - mean_;
    const double delta2 = delta * delta;

    const double weighted_a = rounded_product(na, mean_);
    const double weighted_b = rounded_product(nb, other.mean_);
    const double mean_c = (weighted_a + weighted_b) / nc;
    const double m2_c = m2_ + other.m2_ + delta2 * na * nb / nc;
    double m3_c = m3_ + other.m3_ +
                  delta * delta2 * na * nb * (na - nb) / (nc * nc);
    const double cross_a = rounded_product(na, other.m2_);
    const double cross_b = rounded_product(nb, m2_);
    m3_c += 3.0 * delta * (cross_a - cross_b) / nc;
    double m4_c = m4_ + other.m4_ +
                  delta2 * delta2 * na * nb * (na * na - na * nb + nb * nb) /
                      (nc * nc * nc);
    m4_c += 6.0 * delta2 * (na * na * other.m2_ + nb * nb * m2_) / (nc * nc) +
            4.0 * delta * (na * other.m3_ - nb * m3_) / nc;

    n_ += other.n_;
    mean_ = mean_c;
    m2_ = m2_c;
    m3_ = m3_c;
    m4_ = m4_c;
}

double McSummary::variance() const {
    if (n_ < 2) throw std::invalid_argument("McSummary: variance needs n >= 2");
    return m2_ / static_cast<double>(n_ - 1);
}

double McSummary::population_variance() const {
    if (n_ < 1) throw std::invalid_argument("McSummary: empty summary");
    return m2_ / static_cast<double>(n_);
}

double McSummary::mean_std_error() const {
    return std::sqrt(variance() / static_cast<double>(n_));
}

VarianceEstimate variance_with_se(const McSummary& summary) {
    const long long n = summary.count();
    if (n < 2) throw std::invalid_argument("variance_with_se: needs n >= 2");
    const double nd = static_cast<double>(n);
    const double mu2 = summary.m2() / nd;
    const double mu4 = summary.m4() / nd;
    const double se = std::sqrt(std::max(0.0, (mu4 - mu2 * mu2) / nd));
    return VarianceEstimate{summary.variance(), se};
}

MomentTests moment_tests(const McSummary& summary) {
    if (summary.count() < 4) throw std::invalid_argument("moment_tests: needs n >= 4");
    const double nd = static_cast<double>(summary.count());
    const double mu2 = summary.m2() / nd;
    if (!(mu2 > 0.0)) throw std::invalid_argument("moment_tests: zero variance");
    const double mu3 = summary.m3() / nd;
    const double mu4 = summary.m4() / nd;
    return MomentTests{mu3 / (mu2 * std::sqrt(mu2)), mu4 / (mu2 * mu2) - 3.0};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865476); }

KsResult jittered_ks(std::span<const long long> samples, double sigma2,
                     EventStream& jitter) {
    if (samples.empty()) throw std::invalid_argument("jittered_ks: empty sample list");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("jittered_ks: sigma2 must be positive");

    const double inv_sd = 1.0 / std::sqrt(sigma2);
    std::vector<double> v(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        v[i] = (static_cast<double>(samples[i]) + (jitter.uniform01() - 0.5)) * inv_sd;
    std::sort(v.begin(), v.end());

    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double cdf = normal_cdf(v[i]);
        const double hi = (static_cast<double>(i) + 1.0) / n - cdf;
        const double lo = cdf - static_cast<double>(i) / n;
        d = std::max(d, std::max(hi, lo));
    }
    return KsResult{d, static_cast<long long>(v.size())};
}

VarianceBoundCheck k_variance_bound(const McSummary& k_summary) {
    if (k_summary.count() < 2)
        throw std::invalid_argument("k_variance_bound: needs n >= 2");
    VarianceBoundCheck out;
    const auto [var, var_se] = variance_with_se(k_summary);
    out.var_k = var;
    out.mean_k = k_summary.mean();
    const double mean_se = k_summary.mean_std_error();
    out.combined_se = std::sqrt(var_se * var_se + mean_se * mean_se);
    out.slack = out.mean_k + 3.0 * out.combined_se - out.var_k;
    out.pass = out.slack >= 0.0;
    return out;
}

}  // namespace ssep
