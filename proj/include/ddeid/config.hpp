#ifndef DDEID_CONFIG_HPP
#define DDEID_CONFIG_HPP

#include "ddeid/dde_sim.hpp"
#include "ddeid/dictionary.hpp"
#include "ddeid/reconstruct.hpp"
#include "ddeid/swarm.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ddeid {

struct SwarmOverrides
{
    std::optional<std::size_t> population;
    std::optional<std::size_t> iterations;
    std::optional<double> velocity_limit;
    std::optional<double> inertia_a, cognitive_a, social_a;
    std::optional<double> inertia_b, cognitive_b, social_b;
};

/// Everything a command needs. Unset optionals fall back to the built-in system's defaults.
struct RunConfig
{
    // [data]
    std::optional<int> system;
    std::string data_path;
    double dt = 0.01;
    std::optional<double> duration;
    std::optional<double> burn_in;
    std::vector<double> initial;

    // [dictionary]
    std::string term; // "T1".."T4" or a template expression
    std::optional<std::size_t> max_terms;
    std::map<std::size_t, ParamDomain> domains; // 0-based parameter index

    // [outer], [inner]
    SwarmOverrides outer;
    SwarmOverrides inner;

    // [run]
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::string out = ".";
    double coeff_rtol = 0.10;
    bool record_timing = false;
    std::string result_path;
    std::optional<double> replay_duration;
};

/// Applies one "section.key" setting, e.g. ("dictionary.p5", "10, 30, integer").
void set_option(RunConfig& config, const std::string& key, const std::string& value);

/// Text form of a data.* or run.* setting; "" when it is unset.
std::string get_option(const RunConfig& config, const std::string& key);

/// Reads an INI file of [section] key = value lines; every key goes through set_option.
RunConfig load_config(const std::string& path);
void apply_config_file(RunConfig& config, const std::string& path);

/// The keys accepted by set_option, in "section.key" form.
std::vector<std::string> option_keys();

/// Loads data_path when given, otherwise integrates the built-in system.
TimeSeries load_data(const RunConfig& config);
TimeSeries simulate(const RunConfig& config);

DictionarySpec resolve_dictionary(const RunConfig& config, const TimeSeries& data);
SwarmConfig resolve_outer(const RunConfig& config, const DictionarySpec& spec);
SwarmConfig resolve_inner(const RunConfig& config, const DictionarySpec& spec);

/// Built-in ground truth, available when a system id is set and no template overrides
/// the built-in dictionary.
std::optional<GroundTruth> resolve_truth(const RunConfig& config);

} // namespace ddeid

#endif
