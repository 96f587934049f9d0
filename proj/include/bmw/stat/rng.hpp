#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace bmw::stat {

/// Counter-based generator (Philox4x32-10). The key is the master seed and
/// the upper half of the counter is the stream id, so stream k of seed s is
/// the same sequence no matter which thread draws it or in what order
/// streams are visited.
class Rng {
   public:
    using result_type = std::uint64_t;

    Rng(std::uint64_t master_seed, std::uint64_t stream_id);

    std::uint64_t master_seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    std::uint64_t next_u64();
    result_type operator()() { return next_u64(); }
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform();

    /// Standard normal (Marsaglia polar method; the spare deviate is kept).
    double normal();

    /// Uniform integer in [0, n) without modulo bias (Lemire).
    std::uint64_t below(std::uint64_t n);

    bool bernoulli(double p) { return uniform() < p; }

    /// Binomial(n, p) as a sum of Bernoulli draws; n here is a cohort size.
    int binomial(int n, double p);

   private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Derives an independent master seed for a named purpose, so that e.g.
/// null and alternative path sets drawn from one user seed do not share
/// streams.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view purpose);

/// SplitMix64 finalizer, exposed for hashing seeds.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace bmw::stat
