#ifndef DDEID_BENCHMARK_HPP
#define DDEID_BENCHMARK_HPP

#include "ddeid/reconstruct.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ddeid {

struct TrialRecord
{
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    ReconstructedSystem result;
    std::optional<SuccessReport> score;
    double wall_time = 0.0; // seconds
};

struct BenchmarkSpec
{
    std::size_t trials = 1;
    std::uint64_t base_seed = 0;
    std::size_t workers = 1;
    double coeff_rtol = 0.10;
};

/// Receives each finished trial in trial order on the calling thread.
using TrialSink = std::function<void(const TrialRecord&)>;

struct BenchmarkSummary
{
    std::size_t trials = 0;
    std::size_t successes = 0; // 0 without ground truth
    bool scored = false;
    std::vector<TrialRecord> records;
};

/// Trial k reconstructs `data` with seed base_seed + k. Up to `workers` trials run at once.
BenchmarkSummary run_benchmark(const TimeSeries& data, const DictionarySpec& spec, const SwarmConfig& outer,
                               const SwarmConfig& inner, const std::optional<GroundTruth>& truth,
                               const BenchmarkSpec& bench, const TrialSink& sink = {});

/// "trial,seed,dimension,objective,success,wall_time" with one row per trial and dimension.
std::string trials_csv_header();
std::string trials_csv_rows(const TrialRecord& record);

} // namespace ddeid

#endif
