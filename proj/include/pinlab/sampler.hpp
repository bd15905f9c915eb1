#pragma once

// Exact sampling of contact sets under the quenched constrained Gibbs measure.

#include <cstdint>
#include <string>
#include <vector>

#include "pinlab/kernel.hpp"
#include "pinlab/quenched.hpp"

namespace pinlab {

struct SuffixPartitionTable {
    // log of the constrained partition function over [m, N], contacts forced
    // at m and N, charges at m+1..N; m = 0..N
    std::vector<double> logZ_suffix;
};

SuffixPartitionTable suffix_partition(const KernelCache& cache, const DisorderSample& disorder,
                                      std::int64_t N);
SuffixPartitionTable suffix_partition(const InterArrivalLaw& law, const DisorderSample& disorder,
                                      std::int64_t N);

/// Log-probabilities of the next contact m + n, n = 1..N-m, given a contact at m.
std::vector<double> step_log_probabilities(const KernelCache& cache, const DisorderSample& disorder,
                                           const SuffixPartitionTable& suffix, std::int64_t m);

/// One exact draw from P^c_{N, omega}.
ContactSet sample_path(const KernelCache& cache, const DisorderSample& disorder,
                       const SuffixPartitionTable& suffix, Xoshiro256pp& rng);

/// `count` draws; draw i uses the stream stream_seed(seed, i).
std::vector<ContactSet> sample_paths(const InterArrivalLaw& law, const DisorderSample& disorder,
                                     std::int64_t N, int count, std::uint64_t seed,
                                     int threads = 0);

struct ContactStatistics {
    double fraction_mean = 0.0;
    double fraction_se = 0.0;
    std::vector<double> profile; // profile[n] = fraction of samples with n in tau
};

ContactStatistics contact_statistics(const std::vector<ContactSet>& samples);

/// One 0/1 occupation row per sample, sites 0..N.
std::string occupation_csv(const std::vector<ContactSet>& samples);

} // namespace pinlab
