#pragma once

#include <cstdint>
#include <span>

#include "ssep/event_stream.hpp"

namespace ssep {

/// Streaming moment accumulator: count, mean and central-moment sums up to
/// fourth order, updated in one pass and mergeable across replicas.  Merging
/// two summaries equals summarizing the concatenated samples up to
/// floating-point associativity.
class McSummary {
public:
    void accumulate(double x) {
        const double n1 = static_cast<double>(n_);
        ++n_;
        const double n = static_cast<double>(n_);
        const double delta = x - mean_;
        const double delta_n = delta / n;
        const double delta_n2 = delta_n * delta_n;
        const double term1 = delta * delta_n * n1;
        mean_ += delta_n;
        m4_ += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * m2_ -
               4.0 * delta_n * m3_;
        m3_ += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * m2_;
        m2_ += term1;
    }

    void merge(const McSummary& other);

    long long count() const { return n_; }
    double mean() const { return mean_; }
    double m2() const { return m2_; }
    double m3() const { return m3_; }
    double m4() const { return m4_; }

    /// Unbiased variance m2 / (n - 1).
    double variance() const;
    /// Population variance m2 / n.
    double population_variance() const;
    /// Standard error of the mean, sd / sqrt(n).
    double mean_std_error() const;

private:
    long long n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
    double m3_ = 0.0;
    double m4_ = 0.0;
};

struct VarianceEstimate {
    double variance;
    double std_error;
};

/// Variance of the sample with the standard error of the second-moment
/// estimator, se = sqrt((m4/n - (m2/n)^2) / n).  Requires n >= 2.
VarianceEstimate variance_with_se(const McSummary& summary);

struct MomentTests {
    double skewness;
    double excess_kurtosis;
};

/// Standardized third and fourth central moments.  Requires n >= 4 and
/// positive variance.
MomentTests moment_tests(const McSummary& summary);

struct KsResult {
    double d_stat = 0.0;
    long long n = 0;
};

/// Kolmogorov-Smirnov distance of lattice-valued samples against the
/// standard normal after adding independent Uniform(-1/2, 1/2) jitter (the
/// usual continuity correction for integer-valued data) and standardizing
/// by sqrt(sigma2).  Deterministic given the jitter stream's seed.
KsResult jittered_ks(std::span<const long long> samples, double sigma2,
                     EventStream& jitter);

/// Normal CDF to well below 1e-7 absolute error.
double normal_cdf(double x);

struct VarianceBoundCheck {
    bool pass = false;
    double var_k = 0.0;
    double mean_k = 0.0;
    double slack = 0.0;        // mean + 3 se - var; pass iff >= 0
    double combined_se = 0.0;
};

/// Check the negative-correlation bound Var K <= E K within 3 combined
/// standard errors.  Requires n >= 2.
VarianceBoundCheck k_variance_bound(const McSummary& k_summary);

}  // namespace ssep
