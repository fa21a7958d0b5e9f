#include "ddeid/ddeid.h"

#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("ddeid_test_capi_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

ddeid_config* quick_config(const char* system)
{
    ddeid_config* c = nullptr;
    REQUIRE(ddeid_config_new(&c) == DDEID_OK);
    REQUIRE(ddeid_config_set(c, "data.system", system) == DDEID_OK);
    REQUIRE(ddeid_config_set(c, "outer.population", "3") == DDEID_OK);
    REQUIRE(ddeid_config_set(c, "outer.iterations", "2") == DDEID_OK);
    REQUIRE(ddeid_config_set(c, "inner.population", "4") == DDEID_OK);
    REQUIRE(ddeid_config_set(c, "inner.iterations", "3") == DDEID_OK);
    return c;
}

struct Calls
{
    std::vector<size_t> trials;
    std::vector<uint64_t> seeds;
};

void on_trial(size_t trial, uint64_t seed, int scored, int, double wall_time, void* user)
{
    auto* calls = static_cast<Calls*>(user);
    calls->trials.push_back(trial);
    calls->seeds.push_back(seed);
    CHECK(scored == 1);
    CHECK(wall_time >= 0.0);
}

} // namespace

TEST_CASE("version and error state")
{
    CHECK(std::strcmp(ddeid_version(), "1.0.0") == 0);
    ddeid_config* c = nullptr;
    REQUIRE(ddeid_config_new(&c) == DDEID_OK);
    CHECK(std::strlen(ddeid_last_error()) == 0);
    CHECK(ddeid_config_set(c, "data.system", "9") == DDEID_UNKNOWN_SYSTEM);
    CHECK(std::string(ddeid_last_error()).find("unknown system 9") != std::string::npos);
    CHECK(ddeid_config_set(c, "data.system", "2") == DDEID_OK);
    CHECK(std::strlen(ddeid_last_error()) == 0);
    CHECK(ddeid_config_set(c, "run.trials", "0") == DDEID_INVALID_ARGUMENT);
    CHECK(ddeid_config_set(c, "nope.key", "1") == DDEID_INVALID_ARGUMENT);
    CHECK(ddeid_config_load(c, "/nonexistent/ddeid.ini") == DDEID_IO);
    CHECK(std::strcmp(ddeid_config_get(c, "data.system"), "2") == 0);
    CHECK(ddeid_config_get(c, "dictionary.M") == nullptr);
    ddeid_config_free(c);
    ddeid_config_free(nullptr);
}

TEST_CASE("null handles are rejected")
{
    ddeid_series* s = nullptr;
    CHECK(ddeid_simulate(nullptr, &s) == DDEID_INVALID_ARGUMENT);
    CHECK(s == nullptr);
    CHECK(ddeid_config_new(nullptr) == DDEID_INVALID_ARGUMENT);
    CHECK(ddeid_series_rows(nullptr) == 0);
    CHECK(std::isnan(ddeid_series_dt(nullptr)));
    CHECK(ddeid_result_dimensions(nullptr) == 0);
    CHECK(ddeid_result_equation(nullptr, 0) == nullptr);
    CHECK(ddeid_result_json(nullptr, 0) == nullptr);
    double v = 0;
    CHECK(ddeid_series_value(nullptr, 0, 0, &v) == DDEID_INVALID_ARGUMENT);
    ddeid_series_free(nullptr);
    ddeid_result_free(nullptr);
    ddeid_benchmark_free(nullptr);
}

TEST_CASE("simulate, save and reload a trajectory")
{
    const auto dir = scratch("series");
    ddeid_config* c = quick_config("1");
    REQUIRE(ddeid_config_set(c, "data.duration", "20") == DDEID_OK);
    ddeid_series* s = nullptr;
    REQUIRE(ddeid_simulate(c, &s) == DDEID_OK);
    CHECK(ddeid_series_rows(s) == 2001);
    CHECK(ddeid_series_cols(s) == 3);
    CHECK(ddeid_series_dt(s) == 0.01);
    double v = 0;
    CHECK(ddeid_series_value(s, 2001, 0, &v) == DDEID_INVALID_ARGUMENT);
    CHECK(ddeid_series_value(s, 0, 3, &v) == DDEID_INVALID_ARGUMENT);

    const auto path = (dir / "data.csv").string();
    REQUIRE(ddeid_series_save_csv(s, path.c_str()) == DDEID_OK);
    ddeid_series* back = nullptr;
    REQUIRE(ddeid_series_load_csv(path.c_str(), &back) == DDEID_OK);
    for (size_t k = 0; k < ddeid_series_rows(s); k += 50) {
        double a = 0, b = 0;
        REQUIRE(ddeid_series_value(s, k, 1, &a) == DDEID_OK);
        REQUIRE(ddeid_series_value(back, k, 1, &b) == DDEID_OK);
        REQUIRE(a == b);
    }
    CHECK(ddeid_series_load_csv((dir / "missing.csv").string().c_str(), &back) == DDEID_IO);

    REQUIRE(ddeid_config_set(c, "data.path", path.c_str()) == DDEID_OK);
    ddeid_series* loaded = nullptr;
    REQUIRE(ddeid_load_data(c, &loaded) == DDEID_OK);
    CHECK(ddeid_series_rows(loaded) == 2001);

    ddeid_series_free(loaded);
    ddeid_series_free(back);
    ddeid_series_free(s);
    ddeid_config_free(c);
}

TEST_CASE("reconstruct, score, export and replay")
{
    const auto dir = scratch("result");
    ddeid_config* c = quick_config("4");
    REQUIRE(ddeid_config_set(c, "run.seed", "12") == DDEID_OK);
    ddeid_series* data = nullptr;
    REQUIRE(ddeid_load_data(c, &data) == DDEID_OK);
    ddeid_result* r = nullptr;
    REQUIRE(ddeid_reconstruct(c, data, &r) == DDEID_OK);
    CHECK(ddeid_result_dimensions(r) == 1);
    const char* eq = ddeid_result_equation(r, 0);
    REQUIRE(eq != nullptr);
    CHECK(std::string(eq).rfind("dx/dt = ", 0) == 0);
    CHECK(ddeid_result_equation(r, 1) == nullptr);
    double obj = 0;
    CHECK(ddeid_result_objective(r, 0, &obj) == DDEID_OK);
    CHECK(obj >= 0.0);
    uint64_t seed = 0;
    CHECK(ddeid_result_seed(r, &seed) == DDEID_OK);
    CHECK(seed == 12);
    int success = -1;
    CHECK(ddeid_result_score(r, c, &success) == DDEID_OK);
    CHECK((success == 0 || success == 1));

    const std::string json = ddeid_result_json(r, 0);
    CHECK(json.find("\"score\"") != std::string::npos);
    const auto path = (dir / "result.json").string();
    REQUIRE(ddeid_result_save_json(r, path.c_str(), 0) == DDEID_OK);
    CHECK(slurp(path) == json);
    ddeid_result* loaded = nullptr;
    REQUIRE(ddeid_result_load_json(path.c_str(), &loaded) == DDEID_OK);
    CHECK(std::string(ddeid_result_equation(loaded, 0)) == eq);

    ddeid_result* again = nullptr;
    REQUIRE(ddeid_reconstruct(c, data, &again) == DDEID_OK);
    int again_success = -1;
    REQUIRE(ddeid_result_score(again, c, &again_success) == DDEID_OK);
    CHECK(again_success == success);
    CHECK(std::string(ddeid_result_json(again, 0)) == json);

    ddeid_series* replay = nullptr;
    REQUIRE(ddeid_replay(loaded, data, 5.0, &replay) == DDEID_OK);
    CHECK(ddeid_series_rows(replay) == 501);
    CHECK(ddeid_replay(loaded, data, 100.0, &replay) == DDEID_INVALID_ARGUMENT);
    const auto csv = (dir / "replay.csv").string();
    REQUIRE(ddeid_replay_save_csv(data, replay, csv.c_str()) == DDEID_OK);
    const auto text = slurp(csv);
    CHECK(text.rfind("t,orig_x,recon_x\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 502);

    CHECK(ddeid_result_load_json((dir / "missing.json").string().c_str(), &loaded) == DDEID_IO);
    std::ofstream(dir / "broken.json") << "{";
    ddeid_result* broken = nullptr;
    CHECK(ddeid_result_load_json((dir / "broken.json").string().c_str(), &broken) == DDEID_PARSE);

    ddeid_series_free(replay);
    ddeid_result_free(again);
    ddeid_result_free(loaded);
    ddeid_result_free(r);
    ddeid_series_free(data);
    ddeid_config_free(c);
}

TEST_CASE("benchmark through the C interface")
{
    const auto dir = scratch("bench");
    ddeid_config* c = quick_config("4");
    REQUIRE(ddeid_config_set(c, "run.trials", "3") == DDEID_OK);
    REQUIRE(ddeid_config_set(c, "run.seed", "40") == DDEID_OK);
    REQUIRE(ddeid_config_set(c, "run.workers", "2") == DDEID_OK);
    ddeid_series* data = nullptr;
    REQUIRE(ddeid_load_data(c, &data) == DDEID_OK);
    Calls calls;
    ddeid_benchmark* b = nullptr;
    REQUIRE(ddeid_benchmark_run(c, data, dir.string().c_str(), on_trial, &calls, &b) == DDEID_OK);
    CHECK(calls.trials == std::vector<size_t>{0, 1, 2});
    CHECK(calls.seeds == std::vector<uint64_t>{40, 41, 42});
    CHECK(ddeid_benchmark_trials(b) == 3);
    CHECK(ddeid_benchmark_scored(b) == 1);
    size_t successes = 0;
    for (size_t k = 0; k < 3; ++k) {
        const int s = ddeid_benchmark_trial_success(b, k);
        CHECK((s == 0 || s == 1));
        successes += static_cast<size_t>(s);
        double obj = -1;
        CHECK(ddeid_benchmark_objective(b, k, 0, &obj) == DDEID_OK);
        CHECK(obj >= 0.0);
        CHECK(fs::exists(dir / ("trial_" + std::to_string(k) + ".json")));
    }
    CHECK(ddeid_benchmark_successes(b) == successes);
    CHECK(ddeid_benchmark_trial_success(b, 3) == -1);
    double obj = 0;
    CHECK(ddeid_benchmark_objective(b, 0, 1, &obj) == DDEID_INVALID_ARGUMENT);
    const auto csv = slurp(dir / "trials.csv");
    CHECK(csv.rfind("trial,seed,dimension,objective,success,wall_time\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

    ddeid_benchmark* unscored = nullptr;
    REQUIRE(ddeid_config_set(c, "dictionary.template", "T3") == DDEID_OK);
    REQUIRE(ddeid_config_set(c, "run.trials", "1") == DDEID_OK);
    REQUIRE(ddeid_benchmark_run(c, data, nullptr, nullptr, nullptr, &unscored) == DDEID_OK);
    CHECK(ddeid_benchmark_scored(unscored) == 0);
    CHECK(ddeid_benchmark_trial_success(unscored, 0) == -1);

    ddeid_benchmark_free(unscored);
    ddeid_benchmark_free(b);
    ddeid_series_free(data);
    ddeid_config_free(c);
}
