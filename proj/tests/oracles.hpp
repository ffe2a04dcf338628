#pragma once

// Test-side oracles, deliberately independent of the library's numerics:
// a power-series evaluation of the walk kernel, Gauss-Legendre quadrature
// for its local time, two-pass moments, and reference samplers.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace oracle {

// e^{-t} I_x(t) by the ascending series sum_k (t/2)^{x+2k} / (k! (x+k)!).
// Good to ~1e-14 relative for the moderate t these tests use.
inline double walk_kernel(double t, int x) {
    x = std::abs(x);
    if (t == 0.0) return x == 0 ? 1.0 : 0.0;
    const double half = 0.5 * t;
    double term = std::exp(static_cast<double>(x) * std::log(half) -
                           std::lgamma(static_cast<double>(x) + 1.0));
    double sum = term;
    for (int k = 1; k < 400; ++k) {
        term *= half * half /
                (static_cast<double>(k) * (static_cast<double>(k) + static_cast<double>(x)));
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return std::exp(-t) * sum;
}

// Composite 16-point Gauss-Legendre quadrature of int_0^t e^{-s} I_0(s) ds.
inline double local_time_quadrature(double t) {
    static constexpr double nodes[8] = {
        0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
        0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
        0.9445750230732326, 0.9894009349916499};
    static constexpr double weights[8] = {
        0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
        0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
        0.0622535239386479, 0.0271524594117541};
    if (t <= 0.0) return 0.0;
    const int panels = std::max(4, static_cast<int>(std::ceil(t)));
    const double h = t / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) * h;
        for (int i = 0; i < 8; ++i) {
            const double dx = 0.5 * h * nodes[i];
            sum += 0.5 * h * weights[i] *
                   (walk_kernel(mid + dx, 0) + walk_kernel(mid - dx, 0));
        }
    }
    return sum;
}

struct Moments {
    long long n = 0;
    double mean = 0.0;
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
};

// Two-pass central moments of a sample.
inline Moments two_pass_moments(std::span<const double> xs) {
    Moments m;
    m.n = static_cast<long long>(xs.size());
    if (xs.empty()) return m;
    double sum = 0.0;
    for (double x : xs) sum += x;
    m.mean = sum / static_cast<double>(xs.size());
    for (double x : xs) {
        const double d = x - m.mean;
        m.m2 += d * d;
        m.m3 += d * d * d;
        m.m4 += d * d * d * d;
    }
    return m;
}

// Deterministic reference sampler, unrelated to the library's generator.
class ReferenceRng {
public:
    explicit ReferenceRng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform01();
        } while (u1 == 0.0);
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(6.283185307179586 * u2);
        have_spare_ = true;
        return r * std::cos(6.283185307179586 * u2);
    }

    // Knuth's product method; fine for the small lambdas used in tests.
    long long poisson(double lambda) {
        const double limit = std::exp(-lambda);
        long long k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform01();
        } while (p > limit);
        return k - 1;
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Frozen reference values (independently computed before the build).
inline constexpr double kLocalTimeAt[][2] = {
    {0.5, 0.40072803681701086}, {1.0, 0.67367002294334888},
    {2.0, 1.0475552236052175},  {4.0, 1.543011042905688},
    {5.0, 1.7375653977693535},  {16.0, 3.1662998738835215},
    {64.0, 6.3705726529708659},
};
inline constexpr double kKernelOriginAt1 = 0.46575960759364044;  // e^{-1} I_0(1)
inline constexpr double kChiSq999Dof799 = 928.2516516686355;
inline constexpr double kKsCriticalCoeff1Pct = 1.6276;  // d* = c / sqrt(n)
// sup_x |U(-1/2,1/2) cdf - Phi(x)| = Phi(-1/2)
inline constexpr double kAllZeroJitterKs = 0.30853753872598689;

}  // namespace oracle
