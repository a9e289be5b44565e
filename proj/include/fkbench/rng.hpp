#pragma once

#include <cstdint>

namespace fkbench {

/// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Derives an independent child key from a parent key and an index.
constexpr std::uint64_t split_key(std::uint64_t parent, std::uint64_t index)
{
    return mix64(mix64(parent ^ 0x6a09e667f3bcc909ull) + 0x9e3779b97f4a7c15ull * (index + 1));
}

/*!
 * Counter-based stream: draw i is mix64(key + (i + 1) * golden), so any
 * position is reachable without replaying the prefix. A key identifies one
 * (replicate, time step) pair; see stream_key().
 */
class CounterStream
{
  public:
    explicit constexpr CounterStream(std::uint64_t key) : key_(key) {}

    constexpr std::uint64_t at(std::uint64_t counter) const
    {
        return mix64(key_ + 0x9e3779b97f4a7c15ull * (counter + 1));
    }

    std::uint64_t operator()() { return at(counter_++); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    std::uint64_t position() const { return counter_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Key for replicate `replicate` of master seed `seed`.
constexpr std::uint64_t replicate_key(std::uint64_t seed, std::uint64_t replicate)
{
    return split_key(seed, replicate);
}

/// Key for time step `step` inside a replicate.
constexpr std::uint64_t stream_key(std::uint64_t replicate_key, int step)
{
    return split_key(replicate_key ^ 0xbb67ae8584caa73bull, static_cast<std::uint64_t>(step));
}

} // namespace fkbench
