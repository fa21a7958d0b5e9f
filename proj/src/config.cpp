#include "ddeid/config.hpp"

#include "ddeid/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>

namespace ddeid {

namespace {

std::string trim(std::string s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value)
{
    std::vector<std::string> items;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
        items.push_back(trim(item));
    if (!value.empty() && value.back() == ',')
        items.emplace_back();
    return items;
}

double parse_real(const std::string& key, const std::string& text)
{
    const std::string s = trim(text);
    double v = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v))
        fail(ErrorCode::invalid_argument, key + ": expected a number, got '" + text + "'");
    return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text)
{
    const std::string s = trim(text);
    std::uint64_t v = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || end != s.data() + s.size())
        fail(ErrorCode::invalid_argument, key + ": expected a non-negative integer, got '" + text + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text)
{
    const std::string s = trim(text);
    if (s == "true" || s == "1" || s == "yes" || s == "on")
        return true;
    if (s == "false" || s == "0" || s == "no" || s == "off")
        return false;
    fail(ErrorCode::invalid_argument, key + ": expected true or false, got '" + text + "'");
}

double non_negative(const std::string& key, double v)
{
    if (v < 0.0)
        fail(ErrorCode::invalid_argument, key + " must be non-negative");
    return v;
}

double positive(const std::string& key, double v)
{
    if (!(v > 0.0))
        fail(ErrorCode::invalid_argument, key + " must be positive");
    return v;
}

// "lower, upper, integer" or "lower, upper, grid[, step]"; a grid without a step uses dt.
ParamDomain parse_domain(const std::string& key, const std::string& value)
{
    const auto items = split_list(value);
    if (items.size() < 3 || items.size() > 4)
        fail(ErrorCode::invalid_argument, key + ": expected 'lower, upper, integer|grid[, step]'");
    ParamDomain d;
    d.lower = parse_real(key, items[0]);
    d.upper = parse_real(key, items[1]);
    if (items[2] == "integer" || items[2] == "int") {
        d.kind = ParamKind::integer;
        if (items.size() == 4)
            fail(ErrorCode::invalid_argument, key + ": integer domains take no step");
    } else if (items[2] == "grid" || items[2] == "real") {
        d.kind = ParamKind::grid_real;
        d.grid = items.size() == 4 ? positive(key + " step", parse_real(key, items[3])) : 0.0;
    } else {
        fail(ErrorCode::invalid_argument, key + ": unknown domain kind '" + items[2] + "'");
    }
    if (d.lower > d.upper)
        fail(ErrorCode::invalid_argument, key + ": lower bound exceeds upper bound");
    return d;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

void add_swarm_keys(std::map<std::string, Setter>& keys, const std::string& section, SwarmOverrides RunConfig::*member,
                    bool couples)
{
    keys[section + ".population"] = [member](RunConfig& c, const std::string& k, const std::string& v) {
        (c.*member).population = parse_unsigned(k, v);
    };
    keys[section + ".iterations"] = [member](RunConfig& c, const std::string& k, const std::string& v) {
        (c.*member).iterations = parse_unsigned(k, v);
    };
    keys[section + ".velocity_limit"] = [member](RunConfig& c, const std::string& k, const std::string& v) {
        (c.*member).velocity_limit = positive(k, parse_real(k, v));
    };
    using Field = std::optional<double> SwarmOverrides::*;
    auto coefficient = [member](Field a, Field b) {
        return [member, a, b](RunConfig& c, const std::string& k, const std::string& v) {
            const double x = parse_real(k, v);
            (c.*member).*a = x;
            if (b)
                (c.*member).*b = x;
        };
    };
    if (couples) {
        keys[section + ".inertia_a"] = coefficient(&SwarmOverrides::inertia_a, nullptr);
        keys[section + ".cognitive_a"] = coefficient(&SwarmOverrides::cognitive_a, nullptr);
        keys[section + ".social_a"] = coefficient(&SwarmOverrides::social_a, nullptr);
        keys[section + ".inertia_b"] = coefficient(&SwarmOverrides::inertia_b, nullptr);
        keys[section + ".cognitive_b"] = coefficient(&SwarmOverrides::cognitive_b, nullptr);
        keys[section + ".social_b"] = coefficient(&SwarmOverrides::social_b, nullptr);
    } else {
        keys[section + ".inertia"] = coefficient(&SwarmOverrides::inertia_a, &SwarmOverrides::inertia_b);
        keys[section + ".cognitive"] = coefficient(&SwarmOverrides::cognitive_a, &SwarmOverrides::cognitive_b);
        keys[section + ".social"] = coefficient(&SwarmOverrides::social_a, &SwarmOverrides::social_b);
    }
}

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> keys = [] {
        std::map<std::string, Setter> k;
        k["data.system"] = [](RunConfig& c, const std::string& key, const std::string& v) {
            const auto id = parse_unsigned(key, v);
            if (id < 1 || id > 5)
                fail(ErrorCode::unknown_system, "unknown system " + trim(v) + " (expected 1..5)");
            c.system = static_cast<int>(id);
        };
        k["data.path"] = [](RunConfig& c, const std::string&, const std::string& v) { c.data_path = trim(v); };
        k["data.dt"] = [](RunConfig& c, const std::string& key, const std::string& v) {
            c.dt = positive(key, parse_real(key, v));
        };
        k["data.duration"] = [](RunConfig& c, const std::string& key, const std::string& v) {
            c.duration = positive(key, parse_real(key, v));
        };
        k["data.burn_in"] = [](RunConfig& c, const std::string& key, const std::string& v) {
            c.burn_in = non_negative(key, parse_real(key, v));
        };
        k["data.initial"] = [](RunConfig& c, const std::string& key, const std::string& v) {
            c.initial.clear();
            for (const auto& item : split_list(v))
                c.initial.push_back(parse_real(key, item));
        };
        k["dictionary.template"] = [](RunConfig& c, const std::string&, const std::string& v) { c.term = trim(v); };
        k["dictionary.M"] = [](RunConfig& c, const std::string& key, const std::string& v) {
            const auto m = parse_unsigned(key, v);
            if (m < 1)
                fail(ErrorCode::invalid_argument, "dictionary.M must be at least 1");
            c.max_terms = m;
        };
        add_swarm_keys(k, "outer", &RunConfig::outer, false);
        add_swarm_keys(k, "inner", &RunConfig::inner, true);
        k["run.trials"] = [](RunConfig& c, const std::string& key, const std::string& v) {
            c.trials = parse_unsigned(key, v);
            if (c.trials < 1)
                fail(ErrorCode::invalid_argument, "run.trials must be at least 1");
        };
        k["run.seed"] = [](RunConfig& c, const std::string& key, const std::string& v) {
            c.seed = parse_unsigned(key, v);
        };
        k["run.workers"] = [](RunConfig& c, const std::string& key, const std::string& v) {
            c.workers = parse_unsigned(key, v);
            if (c.workers < 1)
                fail(ErrorCode::invalid_argument, "run.workers must be at least 1");
        };
        k["run.out"] = [](RunConfig& c, const std::string&, const std::string& v) { c.out = trim(v); };
        k["run.coeff_rtol"] = [](RunConfig& c, const std::string& key, const std::string& v) {
            c.coeff_rtol = non_negative(key, parse_real(key, v));
        };
        k["run.record_timing"] = [](RunConfig& c, const std::string& key, const std::string& v) {
            c.record_timing = parse_bool(key, v);
        };
        k["run.result"] = [](RunConfig& c, const std::string&, const std::string& v) { c.result_path = trim(v); };
        k["run.replay_duration"] = [](RunConfig& c, const std::string& key, const std::string& v) {
            c.replay_duration = non_negative(key, parse_real(key, v));
        };
        return k;
    }();
    return keys;
}

void override_coefficients(Coefficients& c, const std::optional<double>& w, const std::optional<double>& c1,
                           const std::optional<double>& c2)
{
    if (w)
        c.inertia = *w;
    if (c1)
        c.cognitive = *c1;
    if (c2)
        c.social = *c2;
}

void apply_overrides(SwarmConfig& s, const SwarmOverrides& o)
{
    if (o.population)
        s.population = *o.population;
    if (o.iterations)
        s.iterations = *o.iterations;
    if (o.velocity_limit)
        s.velocity_limit = *o.velocity_limit;
    override_coefficients(s.even, o.inertia_a, o.cognitive_a, o.social_a);
    override_coefficients(s.odd, o.inertia_b, o.cognitive_b, o.social_b);
}

} // namespace

void set_option(RunConfig& config, const std::string& key, const std::string& value)
{
    const std::string k = trim(key);
    const std::string prefix = "dictionary.p";
    if (k.rfind(prefix, 0) == 0 && k.size() > prefix.size()) {
        const auto index = parse_unsigned(k, k.substr(prefix.size()));
        if (index < 1)
            fail(ErrorCode::invalid_argument, k + ": parameters are numbered from p1");
        config.domains[index - 1] = parse_domain(k, value);
        return;
    }
    const auto& keys = setters();
    auto it = keys.find(k);
    if (it == keys.end())
        fail(ErrorCode::invalid_argument, "unknown option '" + k + "'");
    it->second(config, k, value);
}

std::string get_option(const RunConfig& c, const std::string& key)
{
    auto real = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    const std::string k = trim(key);
    if (k == "data.system")
        return c.system ? std::to_string(*c.system) : "";
    if (k == "data.path")
        return c.data_path;
    if (k == "data.dt")
        return real(c.dt);
    if (k == "data.duration")
        return c.duration ? real(*c.duration) : "";
    if (k == "data.burn_in")
        return c.burn_in ? real(*c.burn_in) : "";
    if (k == "data.initial") {
        std::string out;
        for (double v : c.initial)
            out += (out.empty() ? "" : ",") + real(v);
        return out;
    }
    if (k == "run.trials")
        return std::to_string(c.trials);
    if (k == "run.seed")
        return std::to_string(c.seed);
    if (k == "run.workers")
        return std::to_string(c.workers);
    if (k == "run.out")
        return c.out;
    if (k == "run.coeff_rtol")
        return real(c.coeff_rtol);
    if (k == "run.record_timing")
        return c.record_timing ? "true" : "false";
    if (k == "run.result")
        return c.result_path;
    if (k == "run.replay_duration")
        return c.replay_duration ? real(*c.replay_duration) : "";
    fail(ErrorCode::invalid_argument, "option '" + k + "' cannot be read back");
}

std::vector<std::string> option_keys()
{
    std::vector<std::string> keys;
    for (const auto& [k, _] : setters())
        keys.push_back(k);
    keys.push_back("dictionary.p<k>");
    return keys;
}

void apply_config_file(RunConfig& config, const std::string& path)
{
    if (!std::filesystem::exists(path))
        fail(ErrorCode::io, "config file not found: " + path);
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(path, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        fail(ErrorCode::parse, "cannot parse config " + path + ": " + e.message() + " (line " +
                                   std::to_string(e.line()) + ")");
    }
    for (const auto& [section, entries] : tree) {
        if (entries.empty())
            fail(ErrorCode::parse, path + ": key '" + section + "' is outside any [section]");
        for (const auto& [key, node] : entries)
            set_option(config, section + "." + key, node.get_value<std::string>());
    }
}

RunConfig load_config(const std::string& path)
{
    RunConfig config;
    apply_config_file(config, path);
    return config;
}

TimeSeries simulate(const RunConfig& config)
{
    if (!config.system)
        fail(ErrorCode::invalid_argument, "no system selected (set data.system or --system)");
    const SystemSpec spec = builtin_system(*config.system);
    const double burn_in = config.burn_in.value_or(spec.burn_in);
    const double duration = config.duration.value_or(spec.duration);
    if (!config.initial.empty() && config.initial.size() != spec.dimension)
        fail(ErrorCode::invalid_argument, "initial condition needs " + std::to_string(spec.dimension) + " values, got " +
                                              std::to_string(config.initial.size()));
    return integrate(spec, config.dt, burn_in, duration, config.initial);
}

TimeSeries load_data(const RunConfig& config)
{
    if (config.data_path.empty())
        return simulate(config);
    if (!std::filesystem::exists(config.data_path))
        fail(ErrorCode::io, "data file not found: " + config.data_path);
    return read_csv(config.data_path);
}

DictionarySpec resolve_dictionary(const RunConfig& config, const TimeSeries& data)
{
    DictionarySpec spec;
    if (config.term.empty()) {
        if (!config.system)
            fail(ErrorCode::invalid_argument, "no dictionary template given (set dictionary.template or --template)");
        spec = builtin_dictionary(*config.system, data.dt);
    } else {
        spec.term = template_by_id(config.term, data.cols);
        spec.max_terms = 5;
        for (ParamRole role : spec.term.roles) {
            if (role == ParamRole::exponent)
                spec.domains.push_back({0.0, 5.0, ParamKind::integer, 0.0, role});
            else
                spec.domains.push_back({0.0, 5.0, ParamKind::grid_real, data.dt, role});
        }
    }
    if (spec.term.variable_count > data.cols)
        fail(ErrorCode::invalid_argument, "template refers to " + std::to_string(spec.term.variable_count) +
                                              " variables but the data has " + std::to_string(data.cols));
    if (config.max_terms)
        spec.max_terms = *config.max_terms;
    for (const auto& [index, domain] : config.domains) {
        if (index >= spec.param_count())
            fail(ErrorCode::invalid_argument, "dictionary.p" + std::to_string(index + 1) + ": template has only " +
                                                  std::to_string(spec.param_count()) + " parameters");
        ParamDomain d = domain;
        d.role = spec.term.roles[index];
        if (d.kind == ParamKind::grid_real && d.grid == 0.0)
            d.grid = data.dt;
        spec.domains[index] = d;
    }
    validate(spec);
    return spec;
}

SwarmConfig resolve_outer(const RunConfig& config, const DictionarySpec& spec)
{
    SwarmConfig s = bpso_defaults(spec.max_terms);
    apply_overrides(s, config.outer);
    s.seed = config.seed;
    validate(s);
    return s;
}

SwarmConfig resolve_inner(const RunConfig& config, const DictionarySpec& spec)
{
    SwarmConfig s = cpso_defaults(spec.max_terms, spec.param_count());
    apply_overrides(s, config.inner);
    s.seed = config.seed;
    validate(s);
    return s;
}

std::optional<GroundTruth> resolve_truth(const RunConfig& config)
{
    if (!config.system || !config.term.empty())
        return std::nullopt;
    return builtin_ground_truth(*config.system);
}

} // namespace ddeid
