#include "ddeid/benchmark.hpp"
#include "ddeid/config.hpp"
#include "ddeid/error.hpp"
#include "ddeid/result_io.hpp"

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ddeid;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode{};
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("ddeid_test_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream(path) << text;
}

RunConfig quick_ikeda()
{
    RunConfig c;
    set_option(c, "data.system", "4");
    set_option(c, "outer.population", "3");
    set_option(c, "outer.iterations", "2");
    set_option(c, "inner.population", "4");
    set_option(c, "inner.iterations", "3");
    return c;
}

} // namespace

TEST_CASE("options round trip through set and get")
{
    RunConfig c;
    CHECK(get_option(c, "data.system").empty());
    set_option(c, "data.system", "3");
    set_option(c, "data.dt", "0.005");
    set_option(c, "data.initial", "1, 2, 3");
    set_option(c, "run.seed", "42");
    set_option(c, "run.workers", "2");
    set_option(c, "run.record_timing", "true");
    CHECK(get_option(c, "data.system") == "3");
    CHECK(c.dt == 0.005);
    CHECK(c.initial == std::vector<double>{1, 2, 3});
    CHECK(get_option(c, "run.seed") == "42");
    CHECK(c.workers == 2);
    CHECK(c.record_timing);

    set_option(c, "dictionary.template", "T2");
    set_option(c, "dictionary.M", "4");
    set_option(c, "dictionary.p2", "0, 3, grid, 0.5");
    set_option(c, "dictionary.p1", "0, 2, integer");
    REQUIRE(c.domains.count(1));
    CHECK(c.domains.at(1).kind == ParamKind::grid_real);
    CHECK(c.domains.at(1).grid == 0.5);
    CHECK(c.domains.at(0).kind == ParamKind::integer);
    CHECK(c.max_terms == 4u);

    set_option(c, "inner.inertia_b", "0.4");
    set_option(c, "outer.velocity_limit", "3");
    CHECK(c.inner.inertia_b == 0.4);
    CHECK(c.outer.velocity_limit == 3.0);

    for (const auto& k : option_keys())
        CHECK(k.find('.') != std::string::npos);
}

TEST_CASE("option errors")
{
    RunConfig c;
    CHECK(code_of([&] { set_option(c, "data.system", "9"); }) == ErrorCode::unknown_system);
    CHECK(code_of([&] { set_option(c, "run.trials", "0"); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { set_option(c, "run.colour", "red"); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { set_option(c, "data.dt", "fast"); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { set_option(c, "data.dt", "0"); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { set_option(c, "dictionary.p0", "0, 1, integer"); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { set_option(c, "dictionary.p1", "3, 1, integer"); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { set_option(c, "dictionary.p1", "0, 1, fuzzy"); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { set_option(c, "dictionary.M", "0"); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { simulate(c); }) == ErrorCode::invalid_argument);
}

TEST_CASE("INI files")
{
    const auto dir = scratch("ini");
    write_file(dir / "run.ini", "[data]\nsystem = 1\nduration = 20\n\n[run]\nseed = 9\ntrials = 3\n\n"
                                "[inner]\ninertia_a = 0.25\n");
    const auto c = load_config((dir / "run.ini").string());
    CHECK(c.system == 1);
    CHECK(c.duration == 20.0);
    CHECK(c.seed == 9);
    CHECK(c.trials == 3);
    CHECK(simulate(c).rows == 2001);
    const auto inner = resolve_inner(c, resolve_dictionary(c, simulate(c)));
    CHECK(inner.even.inertia == 0.25);
    CHECK(inner.odd.inertia == 0.3);

    write_file(dir / "loose.ini", "seed = 3\n[run]\ntrials = 2\n");
    CHECK(code_of([&] { load_config((dir / "loose.ini").string()); }) == ErrorCode::parse);
    write_file(dir / "bad.ini", "[run]\nwhat = 2\n");
    CHECK(code_of([&] { load_config((dir / "bad.ini").string()); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { load_config((dir / "missing.ini").string()); }) == ErrorCode::io);
}

TEST_CASE("resolution of defaults")
{
    RunConfig c;
    set_option(c, "data.system", "4");
    const auto data = simulate(c);
    CHECK(data.rows == 2001);
    const auto spec = resolve_dictionary(c, data);
    CHECK(spec.term.id == "T3");
    CHECK(spec.max_terms == 5);
    const auto outer = resolve_outer(c, spec);
    const auto inner = resolve_inner(c, spec);
    CHECK(outer.population == 5);
    CHECK(inner.population == 20);
    CHECK(inner.iterations == 400);
    CHECK(resolve_truth(c).has_value());

    set_option(c, "dictionary.template", "x1^p1 * sin^p2(x1(t-p3))");
    const auto custom = resolve_dictionary(c, data);
    REQUIRE(custom.domains.size() == 3);
    CHECK(custom.domains[0].kind == ParamKind::integer);
    CHECK(custom.domains[0].upper == 5.0);
    CHECK(custom.domains[2].kind == ParamKind::grid_real);
    CHECK(custom.domains[2].grid == data.dt);
    CHECK_FALSE(resolve_truth(c).has_value());

    set_option(c, "dictionary.p3", "1, 2, grid");
    CHECK(resolve_dictionary(c, data).domains[2].grid == data.dt);
    CHECK(code_of([&] { set_option(c, "dictionary.p3", "1, 2, grid, 0"); }) == ErrorCode::invalid_argument);
}

TEST_CASE("data files")
{
    const auto dir = scratch("data");
    RunConfig c;
    set_option(c, "data.system", "1");
    set_option(c, "data.duration", "5");
    const auto ts = simulate(c);
    write_csv((dir / "data.csv").string(), ts);
    RunConfig from_file;
    set_option(from_file, "data.path", (dir / "data.csv").string());
    const auto back = load_data(from_file);
    CHECK(back.values == ts.values);
    set_option(from_file, "data.path", (dir / "nope.csv").string());
    CHECK(code_of([&] { load_data(from_file); }) == ErrorCode::io);
}

TEST_CASE("result documents")
{
    auto c = quick_ikeda();
    const auto data = simulate(c);
    const auto spec = resolve_dictionary(c, data);
    auto result = reconstruct_system(data, spec, resolve_outer(c, spec), resolve_inner(c, spec), 17);
    result.dimensions[0].wall_time = 1.25;

    const std::string text = result_to_json(result);
    CHECK(text.back() == '\n');
    CHECK(text.find("wall_time") == std::string::npos);
    CHECK(text.find("\"format_version\": 1") != std::string::npos);
    const auto back = result_from_json(text);
    CHECK(result_to_json(back) == text);
    CHECK(back.seed == 17);
    CHECK(back.data.checksum == result.data.checksum);
    CHECK(back.dimensions[0].params.values == result.dimensions[0].params.values);
    CHECK(back.dimensions[0].coefficients == result.dimensions[0].coefficients);
    CHECK(back.dimensions[0].objective == result.dimensions[0].objective);
    CHECK(back.outer.even.inertia == result.outer.even.inertia);
    CHECK(back.inner.odd.cognitive == result.inner.odd.cognitive);

    DocumentOptions timed;
    timed.record_timing = true;
    timed.score = score_success(result, builtin_ground_truth(4));
    const std::string with = result_to_json(result, timed);
    CHECK(with.find("\"wall_time\": 1.25") != std::string::npos);
    CHECK(with.find("\"score\"") != std::string::npos);
    CHECK(result_from_json(with).dimensions[0].wall_time == 1.25);

    auto infeasible = result;
    infeasible.dimensions[0].objective = INFINITY;
    const auto inf_text = result_to_json(infeasible);
    CHECK(inf_text.find("\"objective\": null") != std::string::npos);
    CHECK(std::isinf(result_from_json(inf_text).dimensions[0].objective));

    const auto dir = scratch("json");
    save_result((dir / "r.json").string(), result);
    CHECK(result_to_json(load_result((dir / "r.json").string())) == text);

    CHECK(code_of([&] { result_from_json("{not json"); }) == ErrorCode::parse);
    std::string wrong = text;
    wrong.replace(wrong.find("\"format_version\": 1"), 19, "\"format_version\": 2");
    CHECK(code_of([&] { result_from_json(wrong); }) == ErrorCode::parse);
    CHECK(code_of([&] { load_result((dir / "none.json").string()); }) == ErrorCode::io);
}

TEST_CASE("custom template results round trip")
{
    auto c = quick_ikeda();
    set_option(c, "dictionary.template", "x1^p1(t-p2) * sin^p3(x1(t-p4))");
    set_option(c, "dictionary.M", "2");
    const auto data = simulate(c);
    const auto spec = resolve_dictionary(c, data);
    const auto result = reconstruct_system(data, spec, resolve_outer(c, spec), resolve_inner(c, spec), 3);
    const auto text = result_to_json(result);
    CHECK(text.find("\"expression\"") != std::string::npos);
    const auto back = result_from_json(text);
    CHECK(back.dictionary.term.param_count == 4);
    CHECK(result_to_json(back) == text);
}

TEST_CASE("benchmark trials arrive in order and match sequential runs")
{
    auto c = quick_ikeda();
    const auto data = simulate(c);
    const auto spec = resolve_dictionary(c, data);
    const auto outer = resolve_outer(c, spec), inner = resolve_inner(c, spec);

    BenchmarkSpec bench;
    bench.trials = 5;
    bench.base_seed = 100;
    bench.workers = 3;
    std::vector<std::size_t> order;
    const auto summary = run_benchmark(data, spec, outer, inner, builtin_ground_truth(4), bench,
                                       [&](const TrialRecord& r) { order.push_back(r.trial); });
    CHECK(order == std::vector<std::size_t>{0, 1, 2, 3, 4});
    CHECK(summary.trials == 5);
    CHECK(summary.scored);
    std::size_t successes = 0;
    for (std::size_t k = 0; k < 5; ++k) {
        const auto& r = summary.records[k];
        CHECK(r.seed == 100 + k);
        REQUIRE(r.score);
        successes += r.score->success;
        const auto solo = reconstruct_system(data, spec, outer, inner, 100 + k);
        CHECK(result_to_json(solo) == result_to_json(r.result));
    }
    CHECK(summary.successes == successes);

    bench.workers = 1;
    const auto serial = run_benchmark(data, spec, outer, inner, std::nullopt, bench);
    CHECK_FALSE(serial.scored);
    CHECK(serial.successes == 0);
    CHECK(result_to_json(serial.records[3].result) == result_to_json(summary.records[3].result));

    CHECK(trials_csv_header() == "trial,seed,dimension,objective,success,wall_time\n");
    const auto rows = trials_csv_rows(summary.records[2]);
    CHECK(std::count(rows.begin(), rows.end(), '\n') == 1);
    CHECK(rows.rfind("2,102,0,", 0) == 0);
    const auto unscored = trials_csv_rows(serial.records[0]);
    std::stringstream line(unscored);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(line, field, ','))
        fields.push_back(field);
    REQUIRE(fields.size() == 6);
}
