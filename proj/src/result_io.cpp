#include "ddeid/result_io.hpp"

#include "ddeid/error.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace ddeid {

namespace {

using nlohmann::ordered_json;

ordered_json number_or_null(double v)
{
    return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

double number_or_inf(const ordered_json& j)
{
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t parse_hex64(const std::string& s)
{
    std::size_t used = 0;
    const auto v = std::stoull(s, &used, 16);
    if (used != s.size())
        throw std::invalid_argument("bad checksum");
    return v;
}

ordered_json swarm_json(const SwarmConfig& s, bool couples)
{
    auto coeffs = [](const Coefficients& c) {
        return ordered_json{{"inertia", c.inertia}, {"cognitive", c.cognitive}, {"social", c.social}};
    };
    ordered_json j{{"population", s.population}, {"iterations", s.iterations}, {"velocity_limit", s.velocity_limit}};
    if (couples) {
        j["set_a"] = coeffs(s.even);
        j["set_b"] = coeffs(s.odd);
    } else {
        j["coefficients"] = coeffs(s.even);
    }
    return j;
}

SwarmConfig swarm_from_json(const ordered_json& j, std::uint64_t seed)
{
    auto coeffs = [](const ordered_json& c) {
        return Coefficients{c.at("inertia").get<double>(), c.at("cognitive").get<double>(),
                            c.at("social").get<double>()};
    };
    SwarmConfig s;
    s.population = j.at("population").get<std::size_t>();
    s.iterations = j.at("iterations").get<std::size_t>();
    s.velocity_limit = j.at("velocity_limit").get<double>();
    if (j.contains("coefficients")) {
        s.even = coeffs(j.at("coefficients"));
        s.odd = s.even;
    } else {
        s.even = coeffs(j.at("set_a"));
        s.odd = coeffs(j.at("set_b"));
    }
    s.seed = seed;
    return s;
}

ordered_json dictionary_json(const DictionarySpec& spec)
{
    ordered_json j;
    j["template"] = spec.term.id;
    if (spec.term.id == "custom")
        j["expression"] = spec.term.expression;
    j["max_terms"] = spec.max_terms;
    ordered_json domains = ordered_json::array();
    for (const auto& d : spec.domains) {
        ordered_json e{{"lower", d.lower},
                       {"upper", d.upper},
                       {"kind", d.kind == ParamKind::integer ? "integer" : "grid"},
                       {"role", d.role == ParamRole::exponent ? "exponent" : "delay"}};
        if (d.kind == ParamKind::grid_real)
            e["grid"] = d.grid;
        domains.push_back(std::move(e));
    }
    j["domains"] = std::move(domains);
    return j;
}

DictionarySpec dictionary_from_json(const ordered_json& j, std::size_t variables)
{
    DictionarySpec spec;
    const auto id = j.at("template").get<std::string>();
    spec.term = id == "custom" ? parse_template(j.at("expression").get<std::string>()) : template_by_id(id, variables);
    spec.max_terms = j.at("max_terms").get<std::size_t>();
    for (const auto& e : j.at("domains")) {
        ParamDomain d;
        d.lower = e.at("lower").get<double>();
        d.upper = e.at("upper").get<double>();
        const auto kind = e.at("kind").get<std::string>();
        if (kind == "integer")
            d.kind = ParamKind::integer;
        else if (kind == "grid")
            d.kind = ParamKind::grid_real;
        else
            fail(ErrorCode::parse, "unknown parameter kind '" + kind + "'");
        if (d.kind == ParamKind::grid_real)
            d.grid = e.at("grid").get<double>();
        const auto role = e.at("role").get<std::string>();
        if (role != "exponent" && role != "delay")
            fail(ErrorCode::parse, "unknown parameter role '" + role + "'");
        d.role = role == "exponent" ? ParamRole::exponent : ParamRole::delay;
        spec.domains.push_back(d);
    }
    validate(spec);
    return spec;
}

ordered_json score_json(const SuccessReport& report)
{
    ordered_json dims = ordered_json::array();
    for (const auto& d : report.dimensions)
        dims.push_back({{"success", d.success()},
                        {"structure_match", d.structure_match},
                        {"coefficients_match", d.coefficients_match},
                        {"max_relative_error", number_or_null(d.max_relative_error)},
                        {"missing", d.missing},
                        {"extra", d.extra}});
    return {{"success", report.success}, {"dimensions", std::move(dims)}};
}

} // namespace

std::string result_to_json(const ReconstructedSystem& result, const DocumentOptions& options)
{
    const auto& spec = result.dictionary;
    const double dt = result.data.dt;
    const std::size_t n = result.dimensions.size();

    ordered_json doc;
    doc["format_version"] = result_format_version;
    doc["data"] = {{"t0", result.data.t0},
                   {"dt", dt},
                   {"rows", result.data.rows},
                   {"cols", result.data.cols},
                   {"checksum", hex64(result.data.checksum)}};
    doc["dictionary"] = dictionary_json(spec);
    doc["seed"] = result.seed;
    doc["outer"] = swarm_json(result.outer, false);
    doc["inner"] = swarm_json(result.inner, true);

    ordered_json dims = ordered_json::array();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& m = result.dimensions[i];
        ordered_json d;
        d["dimension"] = i;
        d["variable"] = variable_name(i, n);
        d["seed"] = m.seed;
        d["structure"] = m.structure;
        ordered_json params = ordered_json::array();
        for (std::size_t t = 0; t < m.params.terms; ++t) {
            const auto row = m.params.row(t);
            params.push_back(std::vector<double>(row.begin(), row.end()));
        }
        d["params"] = std::move(params);
        d["coefficients"] = m.coefficients;
        d["objective"] = number_or_null(m.objective);
        d["search_objective"] = number_or_null(m.search_objective);
        d["outer_evaluations"] = m.outer_evaluations;
        d["inner_evaluations"] = m.inner_evaluations;
        if (options.record_timing)
            d["wall_time"] = m.wall_time;
        d["equation"] = render_equation(m, spec, dt, i, n);
        ordered_json terms = ordered_json::array();
        for (const auto& t : merged_terms(m, spec, dt))
            terms.push_back({{"params", t.params},
                             {"coefficient", t.coefficient},
                             {"text", render_term(t.params, spec, dt, t.coefficient)}});
        d["terms"] = std::move(terms);
        dims.push_back(std::move(d));
    }
    doc["dimensions"] = std::move(dims);
    if (options.score)
        doc["score"] = score_json(*options.score);
    return doc.dump(2) + "\n";
}

ReconstructedSystem result_from_json(const std::string& text)
{
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        fail(ErrorCode::parse, std::string("result document is not valid JSON: ") + e.what());
    }
    try {
        const int version = doc.at("format_version").get<int>();
        if (version != result_format_version)
            fail(ErrorCode::parse, "unsupported result format_version " + std::to_string(version));
        ReconstructedSystem r;
        const auto& data = doc.at("data");
        r.data.t0 = data.at("t0").get<double>();
        r.data.dt = data.at("dt").get<double>();
        r.data.rows = data.at("rows").get<std::size_t>();
        r.data.cols = data.at("cols").get<std::size_t>();
        r.data.checksum = parse_hex64(data.at("checksum").get<std::string>());
        r.dictionary = dictionary_from_json(doc.at("dictionary"), r.data.cols);
        r.seed = doc.at("seed").get<std::uint64_t>();
        r.outer = swarm_from_json(doc.at("outer"), r.seed);
        r.inner = swarm_from_json(doc.at("inner"), r.seed);

        const std::size_t m = r.dictionary.max_terms, np = r.dictionary.param_count();
        for (const auto& d : doc.at("dimensions")) {
            CandidateModel c;
            c.seed = d.at("seed").get<std::uint64_t>();
            c.structure = d.at("structure").get<StructureVector>();
            c.params = ParamMatrix(m, np);
            const auto& params = d.at("params");
            if (c.structure.size() != m || params.size() != m)
                fail(ErrorCode::parse, "result dimension does not match the dictionary size");
            for (std::size_t t = 0; t < m; ++t) {
                const auto row = params.at(t).get<std::vector<double>>();
                if (row.size() != np)
                    fail(ErrorCode::parse, "result parameter row has the wrong length");
                std::copy(row.begin(), row.end(), c.params.row(t).begin());
            }
            c.coefficients = d.at("coefficients").get<std::vector<double>>();
            if (c.coefficients.size() != m)
                fail(ErrorCode::parse, "result coefficient vector has the wrong length");
            c.objective = number_or_inf(d.at("objective"));
            c.search_objective = number_or_inf(d.at("search_objective"));
            c.outer_evaluations = d.at("outer_evaluations").get<std::size_t>();
            c.inner_evaluations = d.at("inner_evaluations").get<std::size_t>();
            if (d.contains("wall_time"))
                c.wall_time = d.at("wall_time").get<double>();
            r.dimensions.push_back(std::move(c));
        }
        if (r.dimensions.size() != r.data.cols)
            fail(ErrorCode::parse, "result has " + std::to_string(r.dimensions.size()) + " dimensions but the data has " +
                                       std::to_string(r.data.cols));
        return r;
    } catch (const ordered_json::exception& e) {
        fail(ErrorCode::parse, std::string("malformed result document: ") + e.what());
    } catch (const std::invalid_argument&) {
        fail(ErrorCode::parse, "malformed result document: bad checksum");
    }
}

void save_result(const std::string& path, const ReconstructedSystem& result, const DocumentOptions& options)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(ErrorCode::io, "cannot write " + path);
    out << result_to_json(result, options);
    if (!out)
        fail(ErrorCode::io, "error while writing " + path);
}

ReconstructedSystem load_result(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorCode::io, "cannot read result document " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return result_from_json(ss.str());
}

} // namespace ddeid
