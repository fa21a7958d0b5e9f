#include "ddeid/ddeid.h"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

struct Failure : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

void check(ddeid_status status)
{
    if (status != DDEID_OK)
        throw Failure(ddeid_last_error());
}

template <typename T, void (*Free)(T*)>
struct Handle
{
    std::unique_ptr<T, void (*)(T*)> ptr{nullptr, Free};
    T* get() const { return ptr.get(); }
    T** out()
    {
        ptr.reset();
        raw = nullptr;
        return &raw;
    }
    void adopt() { ptr.reset(raw); }
    T* raw = nullptr;
};

using Config = Handle<ddeid_config, ddeid_config_free>;
using Series = Handle<ddeid_series, ddeid_series_free>;
using Result = Handle<ddeid_result, ddeid_result_free>;
using Bench = Handle<ddeid_benchmark, ddeid_benchmark_free>;

template <typename H, typename F>
void make(H& h, F&& call)
{
    check(call(h.out()));
    h.adopt();
}

struct Options
{
    std::string config;
    std::optional<int> system;
    std::string data;
    std::optional<double> dt, duration, burn_in;
    std::vector<double> initial;
    std::string term;
    std::optional<std::size_t> max_terms;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials, workers;
    std::string out;
    std::optional<double> coeff_rtol;
    std::vector<std::string> settings;
    std::string result;
    std::optional<double> replay_duration;
    bool timing = false;
};

template <typename T>
std::string text(const T& v)
{
    if constexpr (std::is_floating_point_v<T>) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    } else {
        return std::to_string(v);
    }
}

void add_common(CLI::App* cmd, Options& o)
{
    cmd->add_option("--config", o.config, "INI configuration file; flags override it")->check(CLI::ExistingFile);
    cmd->add_option("--system", o.system, "built-in system id (1 linear, 2 Lorenz, 3 delayed Rossler, 4 Ikeda, "
                                          "5 Mackey-Glass)");
    cmd->add_option("--data", o.data, "trajectory CSV (t,x1,..) used instead of a simulation");
    cmd->add_option("--dt", o.dt, "sampling step in seconds");
    cmd->add_option("--duration", o.duration, "sampled duration in seconds");
    cmd->add_option("--burn-in", o.burn_in, "discarded transient in seconds");
    cmd->add_option("--initial", o.initial, "initial condition / constant history")->delimiter(',');
    cmd->add_option("--seed", o.seed, "base random seed");
    cmd->add_option("--workers", o.workers, "worker threads");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--set", o.settings, "extra setting as section.key=value (repeatable)");
}

void add_search(CLI::App* cmd, Options& o)
{
    cmd->add_option("--template", o.term, "term template: T1..T4 or an expression such as 'x1^p1(t-p2)'");
    cmd->add_option("--M", o.max_terms, "number of dictionary terms");
    cmd->add_option("--coeff-rtol", o.coeff_rtol, "relative coefficient tolerance for success scoring");
    cmd->add_flag("--timing", o.timing, "record wall times in result documents");
}

void configure(Config& cfg, const Options& o)
{
    make(cfg, [](ddeid_config** p) { return ddeid_config_new(p); });
    if (!o.config.empty())
        check(ddeid_config_load(cfg.get(), o.config.c_str()));
    auto set = [&](const char* key, const std::string& value) { check(ddeid_config_set(cfg.get(), key, value.c_str())); };
    if (o.system)
        set("data.system", text(*o.system));
    if (!o.data.empty())
        set("data.path", o.data);
    if (o.dt)
        set("data.dt", text(*o.dt));
    if (o.duration)
        set("data.duration", text(*o.duration));
    if (o.burn_in)
        set("data.burn_in", text(*o.burn_in));
    if (!o.initial.empty()) {
        std::string v;
        for (double x : o.initial)
            v += (v.empty() ? "" : ",") + text(x);
        set("data.initial", v);
    }
    if (!o.term.empty())
        set("dictionary.template", o.term);
    if (o.max_terms)
        set("dictionary.M", text(*o.max_terms));
    if (o.seed)
        set("run.seed", text(*o.seed));
    if (o.trials)
        set("run.trials", text(*o.trials));
    if (o.workers)
        set("run.workers", text(*o.workers));
    if (!o.out.empty())
        set("run.out", o.out);
    if (o.coeff_rtol)
        set("run.coeff_rtol", text(*o.coeff_rtol));
    if (o.timing)
        set("run.record_timing", "true");
    if (!o.result.empty())
        set("run.result", o.result);
    if (o.replay_duration)
        set("run.replay_duration", text(*o.replay_duration));
    for (const auto& s : o.settings) {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw Failure("--set expects section.key=value, got '" + s + "'");
        set(s.substr(0, eq).c_str(), s.substr(eq + 1));
    }
}

std::filesystem::path output_dir(const std::string& configured)
{
    std::filesystem::path dir = configured;
    if (dir.empty())
        dir = ".";
    std::filesystem::create_directories(dir);
    return dir;
}

struct Resolved
{
    std::string out;
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    bool timing = false;
    std::string result;
    double replay_duration = -1.0;
};

// Settings the CLI acts on itself, after the config file and flags are merged.
Resolved resolve(Config& cfg)
{
    auto get = [&](const char* key) {
        const char* v = ddeid_config_get(cfg.get(), key);
        if (!v)
            throw Failure(ddeid_last_error());
        return std::string(v);
    };
    Resolved r;
    r.out = get("run.out");
    r.trials = std::stoul(get("run.trials"));
    r.seed = std::stoull(get("run.seed"));
    r.timing = get("run.record_timing") == "true";
    r.result = get("run.result");
    if (const auto d = get("run.replay_duration"); !d.empty())
        r.replay_duration = std::stod(d);
    return r;
}

void cmd_simulate(const Options& o)
{
    Config cfg;
    configure(cfg, o);
    const Resolved r = resolve(cfg);
    Series data;
    make(data, [&](ddeid_series** p) { return ddeid_simulate(cfg.get(), p); });
    const auto path = output_dir(r.out) / "data.csv";
    check(ddeid_series_save_csv(data.get(), path.string().c_str()));
    std::printf("wrote %s (%zu rows, %zu columns, dt=%g)\n", path.string().c_str(), ddeid_series_rows(data.get()),
                ddeid_series_cols(data.get()), ddeid_series_dt(data.get()));
}

void print_result(const ddeid_result* res)
{
    for (std::size_t i = 0; i < ddeid_result_dimensions(res); ++i) {
        double obj = 0.0;
        check(ddeid_result_objective(res, i, &obj));
        std::printf("  %s    (objective %.6g)\n", ddeid_result_equation(res, i), obj);
    }
}

void cmd_reconstruct(const Options& o)
{
    Config cfg;
    configure(cfg, o);
    const Resolved r = resolve(cfg);
    Series data;
    make(data, [&](ddeid_series** p) { return ddeid_load_data(cfg.get(), p); });
    const auto dir = output_dir(r.out);
    for (std::size_t k = 0; k < r.trials; ++k) {
        const std::uint64_t seed = r.seed + k;
        check(ddeid_config_set(cfg.get(), "run.seed", text(seed).c_str()));
        Result res;
        make(res, [&](ddeid_result** p) { return ddeid_reconstruct(cfg.get(), data.get(), p); });
        std::printf("seed %llu:\n", static_cast<unsigned long long>(seed));
        print_result(res.get());
        int success = 0;
        if (ddeid_result_score(res.get(), cfg.get(), &success) == DDEID_OK)
            std::printf("  exact reconstruction: %s\n", success ? "yes" : "no");
        const auto path = dir / (r.trials == 1 ? std::string("result.json") : "result_" + std::to_string(k) + ".json");
        check(ddeid_result_save_json(res.get(), path.string().c_str(), r.timing ? 1 : 0));
        std::printf("  wrote %s\n", path.string().c_str());
    }
}

void on_trial(std::size_t trial, std::uint64_t seed, int scored, int success, double wall_time, void*)
{
    std::printf("trial %zu (seed %llu): %s  %.1f s\n", trial, static_cast<unsigned long long>(seed),
                scored ? (success ? "success" : "fail") : "done", wall_time);
    std::fflush(stdout);
}

void cmd_benchmark(const Options& o)
{
    Config cfg;
    configure(cfg, o);
    const Resolved r = resolve(cfg);
    Series data;
    make(data, [&](ddeid_series** p) { return ddeid_load_data(cfg.get(), p); });
    const auto dir = output_dir(r.out);
    Bench bench;
    make(bench, [&](ddeid_benchmark** p) {
        return ddeid_benchmark_run(cfg.get(), data.get(), dir.string().c_str(), on_trial, nullptr, p);
    });
    const std::size_t trials = ddeid_benchmark_trials(bench.get());
    const std::string label = o.system ? "system " + std::to_string(*o.system) : "benchmark";
    if (ddeid_benchmark_scored(bench.get()))
        std::printf("%s: %zu/%zu successful trials\n", label.c_str(), ddeid_benchmark_successes(bench.get()), trials);
    else
        std::printf("%s: %zu trials (no ground truth, not scored)\n", label.c_str(), trials);
    std::printf("wrote %s\n", (dir / "trials.csv").string().c_str());
}

void cmd_replay(const Options& o)
{
    Config cfg;
    configure(cfg, o);
    const Resolved r = resolve(cfg);
    if (r.result.empty())
        throw Failure("replay needs a result document (--result)");
    Result res;
    make(res, [&](ddeid_result** p) { return ddeid_result_load_json(r.result.c_str(), p); });
    Series original;
    make(original, [&](ddeid_series** p) { return ddeid_load_data(cfg.get(), p); });
    Series replay;
    make(replay, [&](ddeid_series** p) { return ddeid_replay(res.get(), original.get(), r.replay_duration, p); });
    const auto path = output_dir(r.out) / "replay.csv";
    check(ddeid_replay_save_csv(original.get(), replay.get(), path.string().c_str()));
    std::printf("wrote %s (%zu rows)\n", path.string().c_str(), ddeid_series_rows(replay.get()));
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Reconstruct delay differential equations from sampled trajectories"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ddeid_version());

    Options o;
    auto* sim = app.add_subcommand("simulate", "integrate a built-in system and write data.csv");
    add_common(sim, o);

    auto* rec = app.add_subcommand("reconstruct", "recover the equations of one data set");
    add_common(rec, o);
    add_search(rec, o);
    rec->add_option("--trials", o.trials, "independent runs with seeds seed, seed+1, ...")
        ->check(CLI::PositiveNumber);

    auto* bench = app.add_subcommand("benchmark", "seeded trials scored against the built-in ground truth");
    add_common(bench, o);
    add_search(bench, o);
    bench->add_option("--trials", o.trials, "number of trials");

    auto* rep = app.add_subcommand("replay", "integrate a recovered model next to the original trajectory");
    add_common(rep, o);
    rep->add_option("--result", o.result, "result document written by reconstruct or benchmark");
    rep->add_option("--replay-duration", o.replay_duration, "seconds to replay (default: the whole trajectory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (o.trials && *o.trials == 0)
            throw Failure("--trials must be at least 1");
        if (*sim)
            cmd_simulate(o);
        else if (*rec)
            cmd_reconstruct(o);
        else if (*bench)
            cmd_benchmark(o);
        else if (*rep)
            cmd_replay(o);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "ddeid: error: %s\n", e.what());
        return 1;
    }
    return 0;
}
