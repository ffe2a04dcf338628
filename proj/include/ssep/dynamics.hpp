#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ssep/event_stream.hpp"
#include "ssep/lattice.hpp"

namespace ssep {

/// Label permutation of the coupled representation.  Every site carries one
/// labeled particle; a ring at a bond transposes the two labels
/// unconditionally.  Labels are identified with initial sites, so at t = 0
/// the permutation is the identity.  label_at_site and site_of_label are
/// kept mutually inverse at all times.
class StirringState {
public:
    explicit StirringState(const WindowSpec& window)
        : window_(window),
          label_at_site_(static_cast<std::size_t>(window.site_count())),
          site_of_label_(static_cast<std::size_t>(window.site_count())) {
        for (int i = 0; i < window.site_count(); ++i) {
            label_at_site_[static_cast<std::size_t>(i)] = i;
            site_of_label_[static_cast<std::size_t>(i)] = i;
        }
    }

    const WindowSpec& window() const { return window_; }

    /// Label currently at `site` (labels are initial sites).
    int label_at_site(int site) const {
        return window_.left + label_at_site_[checked(site)];
    }
    /// Current position of the particle that started at `label`.
    int site_of_label(int label) const {
        return window_.left + site_of_label_[checked(label)];
    }

    /// Transpose the labels on bond (x, x+1), given as a bond index.
    void swap_bond(int bond_index) {
        const auto i = static_cast<std::size_t>(bond_index);
        const int a = label_at_site_[i];
        const int b = label_at_site_[i + 1];
        label_at_site_[i] = b;
        label_at_site_[i + 1] = a;
        site_of_label_[static_cast<std::size_t>(a)] = bond_index + 1;
        site_of_label_[static_cast<std::size_t>(b)] = bond_index;
    }

    /// True when the two arrays are mutually inverse permutations.
    bool is_consistent() const;

    // Zero-based views for O(window) scans; entry = site - left.
    const std::vector<int>& label_indices() const { return label_at_site_; }
    const std::vector<int>& site_indices() const { return site_of_label_; }

private:
    std::size_t checked(int site) const {
        if (site < window_.left || site > window_.right)
            throw std::out_of_range("StirringState: site outside window");
        return static_cast<std::size_t>(site - window_.left);
    }

    WindowSpec window_;
    std::vector<int> label_at_site_;
    std::vector<int> site_of_label_;
};

/// Flux observables snapshotted at one checkpoint time.
struct FluxRecord {
    double t = 0.0;
    long long j_cross = 0;    // signed crossings counted at bond (0,1)
    long long j_stir = 0;     // label-representation evaluation of the flux
    long long k_plus = 0;     // labels that started <= 0 and sit > 0
    long long k_minus = 0;    // labels that started > 0 and sit <= 0
    double compensator = 0.0; // (1/2) int_0^t (occ_s(0) - occ_s(1)) ds
    double martingale = 0.0;  // j_cross - compensator
};

/// Tagged-particle observables at one checkpoint time.
struct TaggedRecord {
    double t = 0.0;
    int x = 0;          // tagged particle position
    long long j = 0;    // flux at bond (0,1)
    long long y_j = 0;  // position of the j-th particle in the order labeling
};

/// Flux split over the matched crossing sites: a[k] in {-1, 0, +1} and
/// sum(a) equals the flux.
struct FluxDecomposition {
    long long k = 0;
    std::vector<int> a;

    long long sum() const {
        long long s = 0;
        for (int v : a) s += v;
        return s;
    }
};

struct SimulationOptions {
    bool track_stirring = true;
    bool track_tagged = false;
};

/// One replica's evolving state: occupancies, optionally the label
/// permutation driven by the same events, the flux counter at bond (0,1),
/// the exactly-accumulated compensator integral, and optionally the tagged
/// particle.  Events are applied in nondecreasing time order.
class Simulation {
public:
    explicit Simulation(Configuration initial, SimulationOptions options = {});

    /// Apply one clock ring.  Labels always transpose; occupancies swap
    /// (a no-op when equal); at bond (0,1) the flux counter moves by +1 for
    /// pre-swap (1,0) and -1 for (0,1); the tagged particle moves only when
    /// its neighbor across the ringing bond is empty.
    void apply(const Event& event) {
        if (event.bond < 0 || event.bond >= window_.bond_count())
            throw std::out_of_range("Simulation: bond outside window");
        advance_time(event.time);
        const auto i = static_cast<std::size_t>(event.bond);
        std::uint8_t* occ = config_.raw();
        const std::uint8_t a = occ[i];
        const std::uint8_t b = occ[i + 1];
        if (event.bond == origin_bond_) j_cross_ += static_cast<int>(a) - static_cast<int>(b);
        if (a != b) {
            occ[i] = b;
            occ[i + 1] = a;
            if (options_.track_tagged) {
                if (tagged_index_ == static_cast<int>(i) && a != 0)
                    tagged_index_ = static_cast<int>(i) + 1;
                else if (tagged_index_ == static_cast<int>(i) + 1 && b != 0)
                    tagged_index_ = static_cast<int>(i);
            }
        }
        if (stirring_) stirring_->swap_bond(event.bond);
    }

    /// Accumulate the compensator up to time t with no event.  The integrand
    /// (occ(0) - occ(1))/2 is piecewise constant between events, so the
    /// integral is exact.
    void advance_time(double t) {
        if (t < time_)
            throw std::invalid_argument("Simulation: time must be nondecreasing");
        const std::uint8_t* occ = config_.raw();
        compensator_ += (t - time_) * 0.5 *
                        (static_cast<double>(occ[origin_index_]) -
                         static_cast<double>(occ[origin_index_ + 1]));
        time_ = t;
    }

    double time() const { return time_; }
    const WindowSpec& window() const { return window_; }
    const Configuration& config() const { return config_; }
    const Configuration& initial() const { return initial_; }
    const StirringState& stirring() const;

    long long flux_crossings() const { return j_cross_; }
    double compensator() const { return compensator_; }
    double martingale() const { return static_cast<double>(j_cross_) - compensator_; }
    int tagged_position() const;

    // O(window) checkpoint scans.
    long long flux_by_stirring() const;
    std::pair<long long, long long> crossing_counts() const;
    FluxDecomposition decompose_flux() const;
    /// True when evolving occupancies equals pushing the initial
    /// configuration through the label permutation, site by site.
    bool matches_stirring_pushforward() const;

    FluxRecord flux_record() const;
    TaggedRecord tagged_record() const;

private:
    WindowSpec window_;
    Configuration initial_;
    Configuration config_;
    std::optional<StirringState> stirring_;
    SimulationOptions options_;
    double time_ = 0.0;
    double compensator_ = 0.0;
    long long j_cross_ = 0;
    int origin_bond_ = 0;   // bond index of (0,1)
    int origin_index_ = 0;  // zero-based index of site 0
    int tagged_index_ = -1; // zero-based index of the tagged particle
};

/// Free-function forms of the checkpoint observables, usable on any
/// (initial configuration, evolved stirring state) pair.
long long flux_by_stirring(const Configuration& initial, const StirringState& stirring);
std::pair<long long, long long> crossing_counts(const StirringState& stirring);
FluxDecomposition decompose_flux(const Configuration& initial, const StirringState& stirring);

/// Position of the k-th particle in the order labeling of a configuration:
/// k >= 1 counts occupied sites > 0 left to right, k <= 0 counts occupied
/// sites <= 0 right to left (k = 0 is the rightmost particle at or left of
/// the origin).  Throws std::out_of_range when there is no such particle.
long long y_position(const Configuration& config, long long k);

/// Y_n / n: the large-n spacing law makes this concentrate near 1/rho.
/// Throws when fewer than n particles sit right of the origin.
double spacing_ratio(const Configuration& config, long long n);

/// spacing_ratio at the window-derived default n = floor(half_width / 4).
/// Note Y_n sits near n/rho, so the default n only fits inside the window
/// for rho comfortably above 1/4; use spacing_ratio with an explicit n for
/// sparser densities.
double spacing_check(const Configuration& config);

/// Drive a simulation through checkpoints, invoking `on_checkpoint(sim, k)`
/// with the state advanced exactly to checkpoints[k].  Checkpoints must be
/// nondecreasing, nonnegative and within the window's t_max.
template <typename OnCheckpoint>
void drive(Simulation& sim, EventStream& stream,
           std::span<const double> checkpoints, OnCheckpoint&& on_checkpoint) {
    std::optional<Event> pending;
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
        const double target = checkpoints[k];
        for (;;) {
            if (!pending) pending = stream.next();
            if (pending->time > target) break;
            sim.apply(*pending);
            pending.reset();
        }
        sim.advance_time(target);
        on_checkpoint(sim, k);
    }
}

/// Validate a checkpoint list against a window (sorted, within [0, t_max]).
void validate_checkpoints(std::span<const double> checkpoints, const WindowSpec& window);

/// Evolve the coupled pair off one event stream and snapshot the flux
/// observables at each checkpoint.
std::vector<FluxRecord> run_to(const Configuration& initial, EventStream& stream,
                               std::span<const double> checkpoints);

/// Track the exclusion particle started at the origin (site 0 must be
/// occupied) alongside the flux, snapshotting at each checkpoint.
std::vector<TaggedRecord> tagged_track(const Configuration& initial, EventStream& stream,
                                       std::span<const double> checkpoints);

}  // namespace ssep
