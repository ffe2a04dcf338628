#pragma once

#include <span>
#include <vector>

#include "ssep/lattice.hpp"

namespace ssep {

/// Discretized transition law p_t(x) of the rate-1 continuous-time symmetric
/// random walk on the sites [-radius, radius], together with the local time
/// R_t(0) = int_0^t p_s(0) ds accumulated along the evolution.
class ExactKernel {
public:
    ExactKernel(double t, int radius, double dt, double local_time, std::vector<double> p)
        : t_(t), radius_(radius), dt_(dt), local_time_(local_time), p_(std::move(p)) {}

    double time() const { return t_; }
    int radius() const { return radius_; }
    double dt() const { return dt_; }

    double at(int x) const {
        if (x < -radius_ || x > radius_)
            throw std::out_of_range("ExactKernel: site outside truncation");
        return p_[static_cast<std::size_t>(x + radius_)];
    }
    double origin() const { return p_[static_cast<std::size_t>(radius_)]; }

    /// R_t(0), accumulated at the integrator's order alongside p.
    double local_time() const { return local_time_; }

    double total_mass() const;
    double mass_deficit() const;
    /// Largest |p(x) - p(-x)|.
    double max_asymmetry() const;
    /// Mean positive part sum_{x >= 1} x p_t(x).
    double expected_crossings() const;

    std::span<const double> values() const { return p_; }

    /// Truncation radius that keeps the mass deficit comfortably below the
    /// 1e-10 guard for an evolution up to time t.
    static int suggested_radius(double t);
    /// Radius from the jump-count light cone, mirroring the window rule;
    /// provably lossless but far larger than needed at large t.
    static int light_cone_radius(double t);

private:
    double t_;
    int radius_;
    double dt_;
    double local_time_;
    std::vector<double> p_;
};

/// Integrate the master equation dp/ds(x) = (p(x-1) + p(x+1))/2 - p(x) from
/// p_0 = delta_0 to time t with the classical 4th-order scheme at fixed step
/// dt (<= 0.01), accumulating the local time as an extra state component.
/// Throws when the truncation loses more than 1e-10 of the mass.
ExactKernel evolve_kernel(double t, int radius, double dt = 0.005);

struct KernelSample {
    double t = 0.0;
    double p_origin = 0.0;
    double local_time = 0.0;
    double expected_crossings = 0.0;
    double mass_deficit = 0.0;
};

/// One evolution pass snapshotting at each time of an ascending grid.
/// radius < 0 picks suggested_radius(times.back()).
std::vector<KernelSample> kernel_grid(std::span<const double> times,
                                      double dt = 0.005, int radius = -1);

/// R_t(0) with automatic truncation, default step.
double local_time_R(double t);

/// E(Z_t)^+ = sum_{x >= 1} x p_t(x) with automatic truncation.
double expected_crossings(double t);

/// Exact finite-time flux variance prediction rho (1 - rho) R_t(0).
double predicted_flux_variance(Density rho, double t);

/// Leading-order constants of the sqrt(t) variance growth.
struct AsymptoticConstants {
    double sigma2;      // flux:   sqrt(2/pi) rho (1 - rho)
    double sigma_bar2;  // tagged: sqrt(2/pi) (1 - rho) / rho
};

/// Closed-form evaluation; throws for rho = 0 (tagged constant undefined).
AsymptoticConstants asymptotic_constants(Density rho);

/// sqrt(2 / pi).
inline constexpr double kRootTwoOverPi = 0.79788456080286536;

}  // namespace ssep
