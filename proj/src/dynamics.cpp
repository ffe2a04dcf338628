#include "ssep/dynamics.hpp"

#include <algorithm>
#include <stdexcept>

namespace ssep {

bool StirringState::is_consistent() const {
    const int n = window_.site_count();
    for (int i = 0; i < n; ++i) {
        const int s = site_of_label_[static_cast<std::size_t>(i)];
        if (s < 0 || s >= n) return false;
        if (label_at_site_[static_cast<std::size_t>(s)] != i) return false;
    }
    return true;
}

Simulation::Simulation(Configuration initial, SimulationOptions options)
    : window_(initial.window()),
      initial_(initial),
      config_(std::move(initial)),
      options_(options) {
    origin_bond_ = window_.bond_index(0);
    origin_index_ = static_cast<int>(config_.index_of(0));
    if (options_.track_stirring) stirring_.emplace(window_);
    if (options_.track_tagged) {
        if (!config_.occupied(0))
            throw std::invalid_argument("Simulation: tagged tracking needs site 0 occupied at t = 0");
        tagged_index_ = origin_index_;
    }
}

const StirringState& Simulation::stirring() const {
    if (!stirring_)
        throw std::logic_error("Simulation: stirring representation not tracked");
    return *stirring_;
}

int Simulation::tagged_position() const {
    if (!options_.track_tagged)
        throw std::logic_error("Simulation: tagged particle not tracked");
    return window_.left + tagged_index_;
}

long long Simulation::flux_by_stirring() const {
    return ssep::flux_by_stirring(initial_, stirring());
}

std::pair<long long, long long> Simulation::crossing_counts() const {
    return ssep::crossing_counts(stirring());
}

FluxDecomposition Simulation::decompose_flux() const {
    return ssep::decompose_flux(initial_, stirring());
}

bool Simulation::matches_stirring_pushforward() const {
    const StirringState& stir = stirring();
    const std::uint8_t* now = config_.raw();
    const std::uint8_t* init = initial_.raw();
    const auto& label = stir.label_indices();
    const int n = window_.site_count();
    for (int x = 0; x < n; ++x)
        if (now[x] != init[label[static_cast<std::size_t>(x)]]) return false;
    return true;
}

FluxRecord Simulation::flux_record() const {
    FluxRecord r;
    r.t = time_;
    r.j_cross = j_cross_;
    r.j_stir = flux_by_stirring();
    const auto [kp, km] = crossing_counts();
    r.k_plus = kp;
    r.k_minus = km;
    r.compensator = compensator_;
    r.martingale = martingale();
    return r;
}

TaggedRecord Simulation::tagged_record() const {
    TaggedRecord r;
    r.t = time_;
    r.x = tagged_position();
    r.j = j_cross_;
    r.y_j = y_position(config_, r.j);
    return r;
}

long long flux_by_stirring(const Configuration& initial, const StirringState& stirring) {
    // sum over labels i <= 0 now sitting > 0, weighted by the initial
    // occupancy of i, minus the mirror-image sum.
    const auto& site = stirring.site_indices();
    const std::uint8_t* init = initial.raw();
    const int origin = -initial.left();  // zero-based index of site 0
    const int n = initial.site_count();
    long long flux = 0;
    for (int i = 0; i <= origin; ++i)
        if (site[static_cast<std::size_t>(i)] > origin && init[i]) ++flux;
    for (int i = origin + 1; i < n; ++i)
        if (site[static_cast<std::size_t>(i)] <= origin && init[i]) --flux;
    return flux;
}

std::pair<long long, long long> crossing_counts(const StirringState& stirring) {
    const auto& site = stirring.site_indices();
    const int origin = stirring.window().bond_index(0);  // index of site 0
    const int n = stirring.window().site_count();
    long long k_plus = 0;
    long long k_minus = 0;
    for (int i = 0; i <= origin; ++i)
        if (site[static_cast<std::size_t>(i)] > origin) ++k_plus;
    for (int i = origin + 1; i < n; ++i)
        if (site[static_cast<std::size_t>(i)] <= origin) ++k_minus;
    return {k_plus, k_minus};
}

FluxDecomposition decompose_flux(const Configuration& initial, const StirringState& stirring) {
    // Crossing sites ascending on both sides of the bond; the k-th left
    // crosser is matched with the k-th right crosser.
    const auto& site = stirring.site_indices();
    const std::uint8_t* init = initial.raw();
    const int origin = -initial.left();
    const int n = initial.site_count();

    std::vector<int> left_occ;
    std::vector<int> right_occ;
    for (int i = 0; i <= origin; ++i)
        if (site[static_cast<std::size_t>(i)] > origin)
            left_occ.push_back(static_cast<int>(init[i]));
    for (int i = origin + 1; i < n; ++i)
        if (site[static_cast<std::size_t>(i)] <= origin)
            right_occ.push_back(static_cast<int>(init[i]));
    if (left_occ.size() != right_occ.size())
        throw std::logic_error("decompose_flux: crossing counts differ");

    FluxDecomposition d;
    d.k = static_cast<long long>(left_occ.size());
    d.a.resize(left_occ.size());
    for (std::size_t k = 0; k < left_occ.size(); ++k)
        d.a[k] = left_occ[k] - right_occ[k];
    return d;
}

long long y_position(const Configuration& config, long long k) {
    const std::uint8_t* occ = config.raw();
    const int origin = -config.left();
    const int n = config.site_count();
    if (k >= 1) {
        long long seen = 0;
        for (int i = origin + 1; i < n; ++i) {
            if (occ[i] && ++seen == k) return config.left() + i;
        }
    } else {
        long long seen = 0;
        const long long want = 1 - k;
        for (int i = origin; i >= 0; --i) {
            if (occ[i] && ++seen == want) return config.left() + i;
        }
    }
    throw std::out_of_range("y_position: not enough particles in that direction");
}

double spacing_ratio(const Configuration& config, long long n) {
    if (n < 1) throw std::invalid_argument("spacing_ratio: n must be >= 1");
    long long y;
    try {
        y = y_position(config, n);
    } catch (const std::out_of_range&) {
        throw std::out_of_range("spacing_ratio: fewer than n particles right of origin");
    }
    return static_cast<double>(y) / static_cast<double>(n);
}

double spacing_check(const Configuration& config) {
    const int n = config.window().half_width() / 4;
    if (n < 1) throw std::invalid_argument("spacing_check: window too small");
    return spacing_ratio(config, n);
}

void validate_checkpoints(std::span<const double> checkpoints, const WindowSpec& window) {
    double prev = 0.0;
    for (double t : checkpoints) {
        if (t < prev)
            throw std::invalid_argument("checkpoints must be sorted ascending and nonnegative");
        prev = t;
    }
    if (!checkpoints.empty() && checkpoints.back() > window.t_max * (1.0 + 1e-12) + 1e-12)
        throw std::invalid_argument("checkpoints exceed the window's t_max");
}

std::vector<FluxRecord> run_to(const Configuration& initial, EventStream& stream,
                               std::span<const double> checkpoints) {
    validate_checkpoints(checkpoints, initial.window());
    Simulation sim(initial, SimulationOptions{.track_stirring = true, .track_tagged = false});
    std::vector<FluxRecord> out;
    out.reserve(checkpoints.size());
    drive(sim, stream, checkpoints,
          [&](Simulation& s, std::size_t) { out.push_back(s.flux_record()); });
    return out;
}

std::vector<TaggedRecord> tagged_track(const Configuration& initial, EventStream& stream,
                                       std::span<const double> checkpoints) {
    validate_checkpoints(checkpoints, initial.window());
    if (!initial.occupied(0))
        throw std::invalid_argument("tagged_track: site 0 must be occupied at t = 0");
    Simulation sim(initial, SimulationOptions{.track_stirring = false, .track_tagged = true});
    std::vector<TaggedRecord> out;
    out.reserve(checkpoints.size());
    drive(sim, stream, checkpoints,
          [&](Simulation& s, std::size_t) { out.push_back(s.tagged_record()); });
    return out;
}

}  // namespace ssep
