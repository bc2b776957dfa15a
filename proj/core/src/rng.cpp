#include "lesionsynth/rng.hpp"

#include <cmath>
#include <numbers>

namespace lesionsynth {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_path(const std::vector<std::uint64_t>& path) {
    std::uint64_t h = splitmix64(0x6C65736E ^ path.size());
    for (std::uint64_t v : path) {
        h = splitmix64(h ^ splitmix64(v));
    }
    return h;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

RngStream::RngStream(std::uint64_t master_seed, std::vector<std::uint64_t> path)
    : seed_(master_seed), path_(std::move(path)), path_hash_(hash_path(path_)) {}

RngStream RngStream::child(std::uint64_t index) const {
    std::vector<std::uint64_t> p = path_;
    p.push_back(index);
    return RngStream(seed_, std::move(p));
}

RngStream RngStream::child(std::initializer_list<std::uint64_t> indices) const {
    std::vector<std::uint64_t> p = path_;
    p.insert(p.end(), indices.begin(), indices.end());
    return RngStream(seed_, std::move(p));
}

void RngStream::refill() {
    const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                           static_cast<std::uint32_t>(path_hash_),
                                           static_cast<std::uint32_t>(path_hash_ >> 32)};
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
    buffer_ = philox4x32(ctr, key);
    ++block_;
    buffered_ = 2;
}

std::uint64_t RngStream::next_u64() {
    if (buffered_ == 0) {
        refill();
    }
    const int slot = 2 - buffered_;
    --buffered_;
    return (static_cast<std::uint64_t>(buffer_[2 * slot + 1]) << 32) | buffer_[2 * slot];
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::below(std::uint64_t n) {
    // Largest multiple of n representable; values at or above it are redrawn.
    const std::uint64_t limit = max() - (max() % n + 1) % n;
    std::uint64_t v = next_u64();
    while (v > limit) {
        v = next_u64();
    }
    return v % n;
}

double RngStream::normal(double mean, double stddev) {
    if (has_spare_normal_) {
        has_spare_normal_ = false;
        return mean + stddev * spare_normal_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_normal_ = r * std::sin(theta);
    has_spare_normal_ = true;
    return mean + stddev * (r * std::cos(theta));
}

}  // namespace lesionsynth
