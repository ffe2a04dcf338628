#include "ssep/exact_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssep {

namespace {

constexpr double kMassGuard = 1e-10;

// dp(x) = (p(x-1) + p(x+1))/2 - p(x), zero beyond the truncation.
void master_rhs(const std::vector<double>& p, std::vector<double>& dp) {
    const std::size_t n = p.size();
    dp[0] = 0.5 * p[1] - p[0];
    for (std::size_t i = 1; i + 1 < n; ++i)
        dp[i] = 0.5 * (p[i - 1] + p[i + 1]) - p[i];
    dp[n - 1] = 0.5 * p[n - 2] - p[n - 1];
}

// Fixed-step classical Runge-Kutta on (p, R) with R' = p(0); the local time
// picks up the same 4th-order accuracy as p itself.
class KernelStepper {
public:
    KernelStepper(int radius, double dt) : radius_(radius), dt_(dt) {
        if (!(dt > 0.0 && dt <= 0.01))
            throw std::invalid_argument("evolve_kernel: dt must lie in (0, 0.01]");
        if (radius < 1)
            throw std::invalid_argument("evolve_kernel: radius must be >= 1");
        const std::size_t n = static_cast<std::size_t>(2 * radius + 1);
        p_.assign(n, 0.0);
        p_[static_cast<std::size_t>(radius)] = 1.0;
        k1_.resize(n);
        k2_.resize(n);
        k3_.resize(n);
        k4_.resize(n);
        tmp_.resize(n);
    }

    void advance_to(double target) {
        while (t_ < target) {
            double h = dt_;
            if (t_ + h > target) h = target - t_;
            if (h <= 1e-15 * std::max(1.0, target)) {
                t_ = target;
                break;
            }
            step(h);
            t_ += h;
        }
    }

    double time() const { return t_; }
    double local_time() const { return local_time_; }
    const std::vector<double>& values() const { return p_; }
    double origin() const { return p_[static_cast<std::size_t>(radius_)]; }
    int radius() const { return radius_; }

private:
    void step(double h) {
        const std::size_t n = p_.size();
        const std::size_t mid = static_cast<std::size_t>(radius_);

        master_rhs(p_, k1_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = p_[i] + 0.5 * h * k1_[i];
        const double r1 = p_[mid];

        master_rhs(tmp_, k2_);
        const double r2 = tmp_[mid];
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = p_[i] + 0.5 * h * k2_[i];

        master_rhs(tmp_, k3_);
        const double r3 = tmp_[mid];
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = p_[i] + h * k3_[i];

        master_rhs(tmp_, k4_);
        const double r4 = tmp_[mid];

        const double w = h / 6.0;
        for (std::size_t i = 0; i < n; ++i)
            p_[i] += w * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
        local_time_ += w * (r1 + 2.0 * r2 + 2.0 * r3 + r4);
    }

    int radius_;
    double dt_;
    double t_ = 0.0;
    double local_time_ = 0.0;
    std::vector<double> p_, k1_, k2_, k3_, k4_, tmp_;
};

void check_mass(double deficit, double t, int radius) {
    if (deficit > kMassGuard)
        throw std::runtime_error(
            "evolve_kernel: truncation too small (mass deficit " +
            std::to_string(deficit) + " at t = " + std::to_string(t) +
            ", radius = " + std::to_string(radius) + ")");
}

double mass_deficit_of(const std::vector<double>& p) {
    double mass = 0.0;
    for (double v : p) mass += v;
    return std::abs(1.0 - mass);
}

double expected_crossings_of(const std::vector<double>& p, int radius) {
    // Summed from the tail in so the small terms accumulate first.
    double s = 0.0;
    for (int x = radius; x >= 1; --x)
        s += static_cast<double>(x) * p[static_cast<std::size_t>(x + radius)];
    return s;
}

}  // namespace

double ExactKernel::total_mass() const {
    double mass = 0.0;
    for (double v : p_) mass += v;
    return mass;
}

double ExactKernel::mass_deficit() const { return std::abs(1.0 - total_mass()); }

double ExactKernel::max_asymmetry() const {
    double worst = 0.0;
    for (int x = 1; x <= radius_; ++x)
        worst = std::max(worst, std::abs(at(x) - at(-x)));
    return worst;
}

double ExactKernel::expected_crossings() const {
    return expected_crossings_of(p_, radius_);
}

int ExactKernel::suggested_radius(double t) {
    return static_cast<int>(std::ceil(8.5 * std::sqrt(std::max(t, 1.0)))) + 40;
}

int ExactKernel::light_cone_radius(double t) {
    return static_cast<int>(std::ceil(5.0 * t + 10.0 * std::sqrt(t))) + 20;
}

ExactKernel evolve_kernel(double t, int radius, double dt) {
    if (!(t >= 0.0)) throw std::invalid_argument("evolve_kernel: t must be nonnegative");
    KernelStepper stepper(radius, dt);
    stepper.advance_to(t);
    const double deficit = mass_deficit_of(stepper.values());
    check_mass(deficit, t, radius);
    return ExactKernel(t, radius, dt, stepper.local_time(), stepper.values());
}

std::vector<KernelSample> kernel_grid(std::span<const double> times, double dt, int radius) {
    if (times.empty()) return {};
    double prev = 0.0;
    for (double t : times) {
        if (t < prev)
            throw std::invalid_argument("kernel_grid: times must be sorted ascending and nonnegative");
        prev = t;
    }
    if (radius < 0) radius = ExactKernel::suggested_radius(times.back());

    KernelStepper stepper(radius, dt);
    std::vector<KernelSample> out;
    out.reserve(times.size());
    for (double t : times) {
        stepper.advance_to(t);
        KernelSample s;
        s.t = t;
        s.p_origin = stepper.origin();
        s.local_time = stepper.local_time();
        s.expected_crossings = expected_crossings_of(stepper.values(), radius);
        s.mass_deficit = mass_deficit_of(stepper.values());
        check_mass(s.mass_deficit, t, radius);
        out.push_back(s);
    }
    return out;
}

double local_time_R(double t) {
    if (t == 0.0) return 0.0;
    const double grid[1] = {t};
    return kernel_grid(grid).front().local_time;
}

double expected_crossings(double t) {
    if (t == 0.0) return 0.0;
    const double grid[1] = {t};
    return kernel_grid(grid).front().expected_crossings;
}

double predicted_flux_variance(Density rho, double t) {
    const double r = rho.value();
    if (r == 0.0 || r == 1.0) return 0.0;
    return r * (1.0 - r) * local_time_R(t);
}

AsymptoticConstants asymptotic_constants(Density rho) {
    const double r = rho.value();
    if (r == 0.0)
        throw std::domain_error("asymptotic_constants: tagged constant needs rho > 0");
    return AsymptoticConstants{kRootTwoOverPi * r * (1.0 - r),
                               kRootTwoOverPi * (1.0 - r) / r};
}

}  // namespace ssep
