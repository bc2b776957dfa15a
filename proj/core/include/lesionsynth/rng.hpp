#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace lesionsynth {

/// Philox4x32-10 block function (Salmon et al., SC'11): 128-bit counter and
/// 64-bit key to 128 bits of output.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Counter-based random stream addressed by (master_seed, path).
///
/// The stream key is the master seed; the upper 64 counter bits are a hash
/// of the path and the lower 64 count blocks. Two streams with the same seed
/// and path produce identical sequences, and child() derives sub-streams
/// without consuming values from the parent, so work can be scheduled in any
/// order without changing results.
///
/// The distribution helpers are implemented here rather than through
/// <random> distributions, whose output is implementation-defined.
class RngStream {
public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t master_seed, std::vector<std::uint64_t> path = {});

    RngStream child(std::uint64_t index) const;
    RngStream child(std::initializer_list<std::uint64_t> indices) const;

    std::uint64_t master_seed() const { return seed_; }
    std::span<const std::uint64_t> path() const { return path_; }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return next_u64(); }

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n); n > 0. Unbiased (rejection sampling).
    std::uint64_t below(std::uint64_t n);
    /// Gaussian via Box-Muller.
    double normal(double mean = 0.0, double stddev = 1.0);

private:
    void refill();

    std::uint64_t seed_;
    std::vector<std::uint64_t> path_;
    std::uint64_t path_hash_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int buffered_ = 0;
    bool has_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

}  // namespace lesionsynth
