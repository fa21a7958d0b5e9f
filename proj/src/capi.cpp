#include "ddeid/ddeid.h"

#include "ddeid/benchmark.hpp"
#include "ddeid/config.hpp"
#include "ddeid/error.hpp"
#include "ddeid/result_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <new>
#include <string>

using namespace ddeid;

struct ddeid_config
{
    RunConfig config;
    std::string value;
};

struct ddeid_series
{
    TimeSeries ts;
};

struct ddeid_result
{
    ReconstructedSystem system;
    std::optional<SuccessReport> score;
    std::vector<std::string> equations;
    std::string json;
};

struct ddeid_benchmark
{
    BenchmarkSummary summary;
};

namespace {

thread_local std::string last_error;

ddeid_status status_of(ErrorCode code)
{
    switch (code) {
    case ErrorCode::invalid_argument: return DDEID_INVALID_ARGUMENT;
    case ErrorCode::integration_diverged: return DDEID_INTEGRATION_DIVERGED;
    case ErrorCode::unknown_system: return DDEID_UNKNOWN_SYSTEM;
    case ErrorCode::insufficient_data: return DDEID_INSUFFICIENT_DATA;
    case ErrorCode::invalid_ground_truth: return DDEID_INVALID_GROUND_TRUTH;
    case ErrorCode::io: return DDEID_IO;
    case ErrorCode::parse: return DDEID_PARSE;
    }
    return DDEID_INTERNAL;
}

template <typename F>
ddeid_status guarded(F&& body)
{
    try {
        last_error.clear();
        body();
        return DDEID_OK;
    } catch (const Error& e) {
        last_error = e.what();
        return status_of(e.code());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
    } catch (const std::exception& e) {
        last_error = e.what();
    } catch (...) {
        last_error = "unknown error";
    }
    return DDEID_INTERNAL;
}

void require(const void* p, const char* what)
{
    if (!p)
        fail(ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
}

void fill_equations(ddeid_result& r)
{
    const std::size_t n = r.system.dimensions.size();
    r.equations.clear();
    for (std::size_t i = 0; i < n; ++i)
        r.equations.push_back(render_equation(r.system.dimensions[i], r.system.dictionary, r.system.data.dt, i, n));
}

std::string trial_document_name(std::size_t trial)
{
    return "trial_" + std::to_string(trial) + ".json";
}

} // namespace

extern "C" {

const char* ddeid_last_error(void)
{
    return last_error.c_str();
}

const char* ddeid_version(void)
{
    return "1.0.0";
}

ddeid_status ddeid_config_new(ddeid_config** out)
{
    return guarded([&] {
        require(out, "out");
        *out = new ddeid_config{};
    });
}

ddeid_status ddeid_config_load(ddeid_config* config, const char* path)
{
    return guarded([&] {
        require(config, "config");
        require(path, "path");
        RunConfig updated = config->config;
        apply_config_file(updated, path);
        config->config = std::move(updated);
    });
}

ddeid_status ddeid_config_set(ddeid_config* config, const char* key, const char* value)
{
    return guarded([&] {
        require(config, "config");
        require(key, "key");
        require(value, "value");
        set_option(config->config, key, value);
    });
}

const char* ddeid_config_get(ddeid_config* config, const char* key)
{
    const auto s = guarded([&] {
        require(config, "config");
        require(key, "key");
        config->value = get_option(config->config, key);
    });
    return s == DDEID_OK ? config->value.c_str() : nullptr;
}

void ddeid_config_free(ddeid_config* config)
{
    delete config;
}

ddeid_status ddeid_simulate(const ddeid_config* config, ddeid_series** out)
{
    return guarded([&] {
        require(config, "config");
        require(out, "out");
        *out = new ddeid_series{simulate(config->config)};
    });
}

ddeid_status ddeid_load_data(const ddeid_config* config, ddeid_series** out)
{
    return guarded([&] {
        require(config, "config");
        require(out, "out");
        *out = new ddeid_series{load_data(config->config)};
    });
}

ddeid_status ddeid_series_load_csv(const char* path, ddeid_series** out)
{
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        if (!std::filesystem::exists(path))
            fail(ErrorCode::io, std::string("data file not found: ") + path);
        *out = new ddeid_series{read_csv(std::string(path))};
    });
}

ddeid_status ddeid_series_save_csv(const ddeid_series* series, const char* path)
{
    return guarded([&] {
        require(series, "series");
        require(path, "path");
        write_csv(std::string(path), series->ts);
    });
}

size_t ddeid_series_rows(const ddeid_series* series)
{
    return series ? series->ts.rows : 0;
}

size_t ddeid_series_cols(const ddeid_series* series)
{
    return series ? series->ts.cols : 0;
}

double ddeid_series_t0(const ddeid_series* series)
{
    return series ? series->ts.t0 : NAN;
}

double ddeid_series_dt(const ddeid_series* series)
{
    return series ? series->ts.dt : NAN;
}

ddeid_status ddeid_series_value(const ddeid_series* series, size_t row, size_t col, double* out)
{
    return guarded([&] {
        require(series, "series");
        require(out, "out");
        if (row >= series->ts.rows || col >= series->ts.cols)
            fail(ErrorCode::invalid_argument, "sample index out of range");
        *out = series->ts(row, col);
    });
}

void ddeid_series_free(ddeid_series* series)
{
    delete series;
}

ddeid_status ddeid_reconstruct(const ddeid_config* config, const ddeid_series* data, ddeid_result** out)
{
    return guarded([&] {
        require(config, "config");
        require(data, "data");
        require(out, "out");
        const RunConfig& c = config->config;
        const DictionarySpec spec = resolve_dictionary(c, data->ts);
        auto r = std::make_unique<ddeid_result>();
        r->system = reconstruct_system(data->ts, spec, resolve_outer(c, spec), resolve_inner(c, spec), c.seed,
                                       c.workers);
        fill_equations(*r);
        *out = r.release();
    });
}

size_t ddeid_result_dimensions(const ddeid_result* result)
{
    return result ? result->system.dimensions.size() : 0;
}

const char* ddeid_result_equation(const ddeid_result* result, size_t dimension)
{
    const char* text = nullptr;
    const auto s = guarded([&] {
        require(result, "result");
        if (dimension >= result->equations.size())
            fail(ErrorCode::invalid_argument, "dimension index out of range");
        text = result->equations[dimension].c_str();
    });
    return s == DDEID_OK ? text : nullptr;
}

ddeid_status ddeid_result_objective(const ddeid_result* result, size_t dimension, double* out)
{
    return guarded([&] {
        require(result, "result");
        require(out, "out");
        if (dimension >= result->system.dimensions.size())
            fail(ErrorCode::invalid_argument, "dimension index out of range");
        *out = result->system.dimensions[dimension].objective;
    });
}

ddeid_status ddeid_result_seed(const ddeid_result* result, uint64_t* out)
{
    return guarded([&] {
        require(result, "result");
        require(out, "out");
        *out = result->system.seed;
    });
}

ddeid_status ddeid_result_score(ddeid_result* result, const ddeid_config* config, int* success)
{
    return guarded([&] {
        require(result, "result");
        require(config, "config");
        require(success, "success");
        const auto truth = resolve_truth(config->config);
        if (!truth)
            fail(ErrorCode::invalid_ground_truth, "no ground truth: scoring needs a built-in system and its dictionary");
        result->score = score_success(result->system, *truth, config->config.coeff_rtol);
        *success = result->score->success ? 1 : 0;
    });
}

const char* ddeid_result_json(ddeid_result* result, int record_timing)
{
    const auto s = guarded([&] {
        require(result, "result");
        result->json = result_to_json(result->system, {record_timing != 0, result->score});
    });
    return s == DDEID_OK ? result->json.c_str() : nullptr;
}

ddeid_status ddeid_result_save_json(ddeid_result* result, const char* path, int record_timing)
{
    return guarded([&] {
        require(result, "result");
        require(path, "path");
        save_result(path, result->system, {record_timing != 0, result->score});
    });
}

ddeid_status ddeid_result_load_json(const char* path, ddeid_result** out)
{
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        if (!std::filesystem::exists(path))
            fail(ErrorCode::io, std::string("result document not found: ") + path);
        auto r = std::make_unique<ddeid_result>();
        r->system = load_result(path);
        fill_equations(*r);
        *out = r.release();
    });
}

void ddeid_result_free(ddeid_result* result)
{
    delete result;
}

ddeid_status ddeid_replay(const ddeid_result* result, const ddeid_series* original, double duration,
                          ddeid_series** out)
{
    return guarded([&] {
        require(result, "result");
        require(original, "original");
        require(out, "out");
        const TimeSeries& ts = original->ts;
        if (std::abs(ts.dt - result->system.data.dt) > 1e-12 * ts.dt)
            fail(ErrorCode::invalid_argument, "original trajectory step differs from the step the result was fitted on");
        const double span = static_cast<double>(ts.rows - 1) * ts.dt;
        if (duration < 0.0)
            duration = span;
        if (std::lround(duration / ts.dt) > static_cast<long>(ts.rows - 1))
            fail(ErrorCode::invalid_argument, "replay duration exceeds the original trajectory (" +
                                                  std::to_string(span) + " s available)");
        *out = new ddeid_series{replay_trajectory(result->system, ts, duration)};
    });
}

ddeid_status ddeid_replay_save_csv(const ddeid_series* original, const ddeid_series* replay, const char* path)
{
    return guarded([&] {
        require(original, "original");
        require(replay, "replay");
        require(path, "path");
        const TimeSeries& a = original->ts;
        const TimeSeries& b = replay->ts;
        if (a.cols != b.cols || b.rows > a.rows)
            fail(ErrorCode::invalid_argument, "replay does not fit the original trajectory");
        std::ofstream out(path, std::ios::binary);
        if (!out)
            fail(ErrorCode::io, std::string("cannot write ") + path);
        const std::size_t n = a.cols;
        out << "t";
        for (const char* prefix : {"orig_", "recon_"})
            for (std::size_t j = 0; j < n; ++j)
                out << ',' << prefix << variable_name(j, n);
        out << '\n';
        char buf[32];
        for (std::size_t k = 0; k < b.rows; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", b.time(k));
            out << buf;
            for (const TimeSeries* ts : {&a, &b})
                for (std::size_t j = 0; j < n; ++j) {
                    std::snprintf(buf, sizeof buf, "%.17g", (*ts)(k, j));
                    out << ',' << buf;
                }
            out << '\n';
        }
        if (!out)
            fail(ErrorCode::io, std::string("error while writing ") + path);
    });
}

ddeid_status ddeid_benchmark_run(const ddeid_config* config, const ddeid_series* data, const char* out_dir,
                                 ddeid_trial_callback callback, void* user, ddeid_benchmark** out)
{
    return guarded([&] {
        require(config, "config");
        require(data, "data");
        require(out, "out");
        const RunConfig& c = config->config;
        const DictionarySpec spec = resolve_dictionary(c, data->ts);
        const auto truth = resolve_truth(c);

        std::ofstream csv;
        std::filesystem::path dir;
        if (out_dir) {
            dir = out_dir;
            std::filesystem::create_directories(dir);
            csv.open(dir / "trials.csv", std::ios::binary);
            if (!csv)
                fail(ErrorCode::io, "cannot write " + (dir / "trials.csv").string());
            csv << trials_csv_header();
        }
        auto sink = [&](const TrialRecord& rec) {
            if (out_dir) {
                csv << trials_csv_rows(rec) << std::flush;
                save_result((dir / trial_document_name(rec.trial)).string(), rec.result,
                            {c.record_timing, rec.score});
            }
            if (callback)
                callback(rec.trial, rec.seed, rec.score ? 1 : 0, rec.score && rec.score->success ? 1 : 0,
                         rec.wall_time, user);
        };
        BenchmarkSpec bench{c.trials, c.seed, c.workers, c.coeff_rtol};
        auto b = std::make_unique<ddeid_benchmark>();
        b->summary = run_benchmark(data->ts, spec, resolve_outer(c, spec), resolve_inner(c, spec), truth, bench, sink);
        if (out_dir && !csv)
            fail(ErrorCode::io, "error while writing " + (dir / "trials.csv").string());
        *out = b.release();
    });
}

size_t ddeid_benchmark_trials(const ddeid_benchmark* bench)
{
    return bench ? bench->summary.trials : 0;
}

size_t ddeid_benchmark_successes(const ddeid_benchmark* bench)
{
    return bench ? bench->summary.successes : 0;
}

int ddeid_benchmark_scored(const ddeid_benchmark* bench)
{
    return bench && bench->summary.scored ? 1 : 0;
}

ddeid_status ddeid_benchmark_objective(const ddeid_benchmark* bench, size_t trial, size_t dimension, double* out)
{
    return guarded([&] {
        require(bench, "bench");
        require(out, "out");
        const auto& recs = bench->summary.records;
        if (trial >= recs.size() || dimension >= recs[trial].result.dimensions.size())
            fail(ErrorCode::invalid_argument, "trial or dimension index out of range");
        *out = recs[trial].result.dimensions[dimension].objective;
    });
}

int ddeid_benchmark_trial_success(const ddeid_benchmark* bench, size_t trial)
{
    if (!bench || trial >= bench->summary.records.size() || !bench->summary.records[trial].score)
        return -1;
    return bench->summary.records[trial].score->success ? 1 : 0;
}

void ddeid_benchmark_free(ddeid_benchmark* bench)
{
    delete bench;
}

} // extern "C"
