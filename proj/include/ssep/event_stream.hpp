#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace ssep {

/// One clock ring: absolute time and the index of the bond that rang.
/// Bond index i refers to the bond joining sites (left + i, left + i + 1)
/// of whatever window the consumer is simulating.
struct Event {
    double time;
    int bond;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
}

}  // namespace detail

/// Per-replica random event source.
///
/// The B bond clocks (rate 1/2 each) are generated as one global exponential
/// clock at rate B/2 plus a uniform bond pick, which is the same point
/// process by Poisson superposition but costs O(1) per event.
///
/// The generator is xoshiro256++ seeded through splitmix64 from
/// (seed, replica_id), so every replica owns an independent stream and the
/// whole event sequence is a pure function of (seed, replica_id, bond_count).
/// A stream is single-owner: never share one instance across threads.
class EventStream {
public:
    EventStream(std::uint64_t seed, std::uint64_t replica_id, int bond_count)
        : seed_(seed), replica_(replica_id), bonds_(bond_count) {
        if (bond_count < 1)
            throw std::invalid_argument("EventStream: bond_count must be >= 1");
        std::uint64_t x = seed + 0x9e3779b97f4a7c15ull * (replica_id + 1);
        for (auto& s : state_) s = detail::splitmix64(x);
        rate_ = 0.5 * static_cast<double>(bonds_);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result =
            detail::rotl64(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Next clock ring. Interarrival times are iid Exp(bond_count / 2) and
    /// strictly positive, so emitted times are strictly increasing.
    Event next() {
        double u;
        do {
            u = uniform01();
        } while (u == 0.0);
        clock_ += -std::log(u) / rate_;
        return Event{clock_, static_cast<int>(uniform_below(static_cast<std::uint32_t>(bonds_)))};
    }

    double clock() const { return clock_; }
    int bond_count() const { return bonds_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t replica_id() const { return replica_; }

private:
    // Lemire's unbiased bounded sampler.
    std::uint32_t uniform_below(std::uint32_t n) {
        std::uint64_t m = static_cast<std::uint64_t>(static_cast<std::uint32_t>(next_u64())) * n;
        auto lo = static_cast<std::uint32_t>(m);
        if (lo < n) {
            const std::uint32_t floor = (-n) % n;
            while (lo < floor) {
                m = static_cast<std::uint64_t>(static_cast<std::uint32_t>(next_u64())) * n;
                lo = static_cast<std::uint32_t>(m);
            }
        }
        return static_cast<std::uint32_t>(m >> 32);
    }

    std::array<std::uint64_t, 4> state_{};
    std::uint64_t seed_;
    std::uint64_t replica_;
    int bonds_;
    double rate_;
    double clock_ = 0.0;
};

}  // namespace ssep
