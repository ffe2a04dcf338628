#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ssep/event_stream.hpp"

namespace ssep {

/// Particle density of the Bernoulli product initial law.
class Density {
public:
    explicit Density(double value) : value_(value) {
        if (!(value >= 0.0 && value <= 1.0))
            throw std::invalid_argument("Density: value must lie in [0, 1]");
    }
    double value() const { return value_; }

private:
    double value_;
};

/// Finite site window [left, right] standing in for the infinite lattice.
///
/// Bonds are (x, x+1) for x in [left, right); the measured bond is (0, 1).
/// Ends are reflecting: there is no bond beyond the boundary, so particle
/// count is conserved.  half_width() is sized so that no boundary influence
/// can reach the measured bond by t_max except with probability below
/// tail_bound.
struct WindowSpec {
    int left = 0;
    int right = 1;
    double t_max = 0.0;
    double tail_bound = 1e-12;

    int site_count() const { return right - left + 1; }
    int bond_count() const { return right - left; }
    int half_width() const { return -left; }
    /// Index of bond (x, x+1) in event space.
    int bond_index(int x) const { return x - left; }
    /// Left site x of the bond with the given index.
    int bond_site(int index) const { return left + index; }
};

/// Size a window for simulation up to t_max.
///
/// Half-width H = ceil(5 t + 10 sqrt(t) + 20), left = -H, right = H + 1.
/// A boundary disturbance must cross H bonds in sequence, each waiting a
/// fresh Exp(1/2), so the probability it reaches bond (0,1) by t_max is at
/// most P(Poisson(t_max/2) >= H); the window grows further if the Chernoff
/// bound for that tail (both boundaries combined) exceeds tail_bound.  With
/// the default tail_bound = 1e-12 the formula term always dominates.
WindowSpec build_window(double t_max, double tail_bound = 1e-12);

/// 0/1 occupancy over the window's sites.
class Configuration {
public:
    explicit Configuration(const WindowSpec& window)
        : window_(window),
          occ_(static_cast<std::size_t>(window.site_count()), 0) {
        if (!(window.left <= 0 && window.right >= 1))
            throw std::invalid_argument("Configuration: window must contain sites 0 and 1");
    }

    const WindowSpec& window() const { return window_; }
    int left() const { return window_.left; }
    int right() const { return window_.right; }
    int site_count() const { return window_.site_count(); }

    bool occupied(int site) const { return occ_[checked_index(site)] != 0; }
    void set(int site, bool occupied) { occ_[checked_index(site)] = occupied ? 1 : 0; }

    long long particle_count() const {
        long long n = 0;
        for (auto c : occ_) n += c;
        return n;
    }

    /// Zero-based storage for hot loops; index = site - left.
    std::uint8_t* raw() { return occ_.data(); }
    const std::uint8_t* raw() const { return occ_.data(); }
    std::size_t index_of(int site) const { return checked_index(site); }

    bool operator==(const Configuration& other) const {
        return window_.left == other.window_.left &&
               window_.right == other.window_.right && occ_ == other.occ_;
    }

private:
    std::size_t checked_index(int site) const {
        if (site < window_.left || site > window_.right)
            throw std::out_of_range("Configuration: site outside window");
        return static_cast<std::size_t>(site - window_.left);
    }

    WindowSpec window_;
    std::vector<std::uint8_t> occ_;
};

/// Draw an initial configuration from the product measure with the given
/// density: sites independently occupied with probability rho.  With
/// tag_origin set, site 0 is forced occupied (the tagged-particle initial
/// law: product measure conditioned on a particle at the origin).  One
/// uniform is consumed per site either way, so the rest of the draw is
/// unchanged by the flag.
Configuration sample_initial(Density rho, const WindowSpec& window,
                             EventStream& stream, bool tag_origin = false);

}  // namespace ssep
