#include "ddeid/benchmark.hpp"

#include "ddeid/error.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

namespace ddeid {

BenchmarkSummary run_benchmark(const TimeSeries& data, const DictionarySpec& spec, const SwarmConfig& outer,
                               const SwarmConfig& inner, const std::optional<GroundTruth>& truth,
                               const BenchmarkSpec& bench, const TrialSink& sink)
{
    if (bench.trials < 1)
        fail(ErrorCode::invalid_argument, "benchmark needs at least one trial");
    if (bench.workers < 1)
        fail(ErrorCode::invalid_argument, "benchmark needs at least one worker");
    validate(spec);
    valid_row_range(spec, data);

    std::vector<std::optional<TrialRecord>> slots(bench.trials);
    std::mutex mutex;
    std::condition_variable ready;
    std::size_t next = 0;
    std::exception_ptr error;

    auto work = [&] {
        for (;;) {
            std::size_t k;
            {
                std::lock_guard lock(mutex);
                if (next >= bench.trials || error)
                    return;
                k = next++;
            }
            try {
                TrialRecord rec;
                rec.trial = k;
                rec.seed = bench.base_seed + k;
                const auto started = std::chrono::steady_clock::now();
                rec.result = reconstruct_system(data, spec, outer, inner, rec.seed, 1);
                rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
                if (truth)
                    rec.score = score_success(rec.result, *truth, bench.coeff_rtol);
                std::lock_guard lock(mutex);
                slots[k] = std::move(rec);
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!error)
                    error = std::current_exception();
            }
            ready.notify_all();
        }
    };

    std::vector<std::thread> pool;
    const std::size_t threads = std::min(bench.workers, bench.trials);
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back(work);

    BenchmarkSummary summary;
    summary.trials = bench.trials;
    summary.scored = truth.has_value();
    try {
        for (std::size_t k = 0; k < bench.trials; ++k) {
            TrialRecord rec;
            {
                std::unique_lock lock(mutex);
                ready.wait(lock, [&] { return slots[k].has_value() || error; });
                if (!slots[k])
                    break;
                rec = std::move(*slots[k]);
                slots[k].reset();
            }
            if (rec.score && rec.score->success)
                ++summary.successes;
            if (sink)
                sink(rec);
            summary.records.push_back(std::move(rec));
        }
    } catch (...) {
        std::lock_guard lock(mutex);
        if (!error)
            error = std::current_exception();
    }
    for (auto& th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
    return summary;
}

std::string trials_csv_header()
{
    return "trial,seed,dimension,objective,success,wall_time\n";
}

std::string trials_csv_rows(const TrialRecord& record)
{
    std::string out;
    char buf[160];
    for (std::size_t i = 0; i < record.result.dimensions.size(); ++i) {
        const auto& m = record.result.dimensions[i];
        const char* success = !record.score ? "" : record.score->dimensions[i].success() ? "1" : "0";
        std::snprintf(buf, sizeof buf, "%zu,%llu,%zu,%.17g,%s,%.6f\n", record.trial,
                      static_cast<unsigned long long>(record.seed), i, m.objective, success, m.wall_time);
        out += buf;
    }
    return out;
}

} // namespace ddeid
