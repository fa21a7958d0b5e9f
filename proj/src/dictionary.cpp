#include "ddeid/dictionary.hpp"

#include "ddeid/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>

namespace ddeid {

namespace {

constexpr double denominator_guard = 1e-12;

inline double ipow(double base, int e)
{
    double r = 1.0;
    for (int i = 0; i < e; ++i)
        r *= base;
    return r;
}

void finalize_roles(TermTemplate& t)
{
    std::map<std::size_t, ParamRole> roles;
    std::size_t vars = 0;
    auto note = [&](std::size_t idx, ParamRole role) {
        auto [it, inserted] = roles.emplace(idx, role);
        if (!inserted && it->second != role)
            fail(ErrorCode::parse, "parameter p" + std::to_string(idx + 1) + " used both as exponent and delay");
    };
    auto visit = [&](const std::vector<Factor>& fs) {
        for (const auto& f : fs) {
            note(f.exponent_param, ParamRole::exponent);
            if (f.delay_param)
                note(*f.delay_param, ParamRole::delay);
            vars = std::max(vars, f.variable + 1);
        }
    };
    visit(t.numerator);
    for (const auto& p : t.denominator)
        visit(p);
    if (roles.empty())
        fail(ErrorCode::parse, "term template has no parameters");
    t.param_count = roles.rbegin()->first + 1;
    if (roles.size() != t.param_count)
        fail(ErrorCode::parse, "term template parameters must be numbered p1..pN without gaps");
    t.roles.clear();
    for (const auto& [idx, role] : roles)
        t.roles.push_back(role);
    t.variable_count = vars;
}

class TemplateParser
{
public:
    explicit TemplateParser(std::string_view text) : s_(text) {}

    TermTemplate parse()
    {
        TermTemplate t;
        t.id = "custom";
        t.expression = std::string(s_);
        t.numerator = product();
        if (accept('/')) {
            expect('(');
            t.denominator.push_back(product());
            while (accept('+'))
                t.denominator.push_back(product());
            expect(')');
        }
        skip();
        if (pos_ != s_.size())
            error("unexpected trailing input");
        finalize_roles(t);
        return t;
    }

private:
    [[noreturn]] void error(const std::string& what) const
    {
        fail(ErrorCode::parse, "term template '" + std::string(s_) + "': " + what + " at offset " +
                                   std::to_string(pos_));
    }

    void skip()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }
    bool accept(char c)
    {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    bool accept(std::string_view word)
    {
        skip();
        if (s_.substr(pos_, word.size()) == word) {
            pos_ += word.size();
            return true;
        }
        return false;
    }
    void expect(char c)
    {
        if (!accept(c))
            error(std::string("expected '") + c + "'");
    }
    std::size_t number()
    {
        skip();
        std::size_t start = pos_, v = 0;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
            v = v * 10 + static_cast<std::size_t>(s_[pos_++] - '0');
        if (pos_ == start || v == 0)
            error("expected a 1-based index");
        return v - 1;
    }
    std::size_t param()
    {
        if (!accept('p'))
            error("expected a parameter p<k>");
        return number();
    }
    std::size_t variable()
    {
        if (!accept('x'))
            error("expected a state variable x<k>");
        return number();
    }
    std::optional<std::size_t> delay()
    {
        const auto save = pos_;
        if (accept('(') && accept('t')) {
            expect('-');
            auto p = param();
            expect(')');
            return p;
        }
        pos_ = save;
        return std::nullopt;
    }

    Factor factor()
    {
        Factor f;
        if (accept("sin")) {
            f.function = FactorFunction::sine;
            bool prefix_power = false;
            if (accept('^')) {
                f.exponent_param = param();
                prefix_power = true;
            }
            expect('(');
            f.variable = variable();
            f.delay_param = delay();
            expect(')');
            if (!prefix_power) {
                if (!accept('^'))
                    error("sin factor needs an exponent parameter");
                f.exponent_param = param();
            }
            return f;
        }
        f.variable = variable();
        if (!accept('^'))
            error("factor needs an exponent parameter");
        f.exponent_param = param();
        f.delay_param = delay();
        return f;
    }

    std::vector<Factor> product()
    {
        if (accept('1'))
            return {};
        std::vector<Factor> fs{factor()};
        while (accept('*'))
            fs.push_back(factor());
        return fs;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

std::string format_seconds(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

bool trivial(const std::vector<Factor>& product, const TermCode& code)
{
    return std::all_of(product.begin(), product.end(), [&](const Factor& f) { return code[f.exponent_param] == 0; });
}

std::string render_product(const std::vector<Factor>& product, const TermCode& code, std::size_t variables,
                           double dt)
{
    std::string out;
    for (const auto& f : product) {
        const int e = code[f.exponent_param];
        if (e == 0)
            continue;
        const int off = f.delay_param ? code[*f.delay_param] : 0;
        std::string arg = variable_name(f.variable, variables);
        if (off > 0)
            arg += "(t−" + format_seconds(off * dt) + ")";
        const std::string power = e > 1 ? "^" + std::to_string(e) : "";
        if (!out.empty())
            out += "·";
        if (f.function == FactorFunction::sine)
            out += "sin" + power + "(" + arg + ")";
        else if (off > 0)
            out += variable_name(f.variable, variables) + power + "(t−" + format_seconds(off * dt) + ")";
        else
            out += arg + power;
    }
    return out.empty() ? "1" : out;
}

} // namespace

double ParamDomain::quantize(double v) const
{
    if (std::isnan(v))
        v = lower;
    v = std::clamp(v, lower, upper);
    if (kind == ParamKind::integer)
        v = std::round(v);
    else
        v = lower + std::round((v - lower) / grid) * grid;
    return std::clamp(v, lower, upper);
}

TermTemplate monomial_template(std::size_t variables)
{
    TermTemplate t;
    t.id = "T1";
    for (std::size_t j = 0; j < variables; ++j)
        t.numerator.push_back({FactorFunction::identity, j, j, std::nullopt});
    finalize_roles(t);
    return t;
}

TermTemplate delayed_monomial_template(std::size_t variables)
{
    TermTemplate t;
    t.id = "T2";
    for (std::size_t j = 0; j < variables; ++j)
        t.numerator.push_back({FactorFunction::identity, j, 2 * j, 2 * j + 1});
    finalize_roles(t);
    return t;
}

TermTemplate ikeda_template()
{
    TermTemplate t;
    t.id = "T3";
    t.numerator = {{FactorFunction::identity, 0, 0, 1}, {FactorFunction::sine, 0, 2, 3}};
    finalize_roles(t);
    return t;
}

TermTemplate mackey_glass_template()
{
    TermTemplate t;
    t.id = "T4";
    t.numerator = {{FactorFunction::identity, 0, 0, std::nullopt}, {FactorFunction::identity, 0, 1, 4}};
    t.denominator = {{{FactorFunction::identity, 0, 2, std::nullopt}}, {{FactorFunction::identity, 0, 3, 4}}};
    finalize_roles(t);
    return t;
}

TermTemplate parse_template(std::string_view expression)
{
    return TemplateParser(expression).parse();
}

TermTemplate template_by_id(std::string_view id, std::size_t variables)
{
    if (id == "T1")
        return monomial_template(variables);
    if (id == "T2")
        return delayed_monomial_template(variables);
    if (id == "T3")
        return ikeda_template();
    if (id == "T4")
        return mackey_glass_template();
    return parse_template(id);
}

void validate(const DictionarySpec& spec)
{
    const auto& t = spec.term;
    if (spec.max_terms < 1)
        fail(ErrorCode::invalid_argument, "dictionary needs at least one term (M >= 1)");
    if (t.param_count < 1 || t.roles.size() != t.param_count)
        fail(ErrorCode::invalid_argument, "term template needs at least one parameter");
    if (spec.domains.size() != t.param_count)
        fail(ErrorCode::invalid_argument, "expected " + std::to_string(t.param_count) + " parameter domains, got " +
                                              std::to_string(spec.domains.size()));
    for (std::size_t j = 0; j < t.param_count; ++j) {
        const auto& d = spec.domains[j];
        const std::string name = "parameter p" + std::to_string(j + 1);
        if (!std::isfinite(d.lower) || !std::isfinite(d.upper) || d.lower > d.upper)
            fail(ErrorCode::invalid_argument, name + ": lower bound exceeds upper bound");
        if (d.kind == ParamKind::grid_real && !(d.grid > 0.0))
            fail(ErrorCode::invalid_argument, name + ": grid step must be positive");
        if (d.role != t.roles[j])
            fail(ErrorCode::invalid_argument, name + ": domain role does not match the template");
        if (d.lower < 0.0)
            fail(ErrorCode::invalid_argument, name + ": negative exponents and delays are not supported");
        if (d.role == ParamRole::exponent && d.kind != ParamKind::integer)
            fail(ErrorCode::invalid_argument, name + ": exponents must be integer-valued");
    }
}

DictionarySpec builtin_dictionary(int id, double dt)
{
    DictionarySpec spec;
    spec.max_terms = 5;
    const ParamDomain exponent05{0.0, 5.0, ParamKind::integer, 0.0, ParamRole::exponent};
    switch (id) {
    case 1:
    case 2:
        spec.term = monomial_template(3);
        spec.domains.assign(3, exponent05);
        break;
    case 3: {
        spec.term = delayed_monomial_template(3);
        const ParamDomain delay05{0.0, 5.0, ParamKind::integer, 0.0, ParamRole::delay};
        spec.domains = {exponent05, delay05, exponent05, delay05, exponent05, delay05};
        break;
    }
    case 4: {
        spec.term = ikeda_template();
        const ParamDomain delay05{0.0, 5.0, ParamKind::grid_real, dt, ParamRole::delay};
        spec.domains = {exponent05, delay05, exponent05, delay05};
        break;
    }
    case 5: {
        spec.term = mackey_glass_template();
        const ParamDomain exponent010{0.0, 10.0, ParamKind::integer, 0.0, ParamRole::exponent};
        const ParamDomain delay1030{10.0, 30.0, ParamKind::integer, 0.0, ParamRole::delay};
        spec.domains = {exponent010, exponent010, exponent010, exponent010, delay1030};
        break;
    }
    default:
        fail(ErrorCode::unknown_system, "unknown system " + std::to_string(id) + " (expected 1..5)");
    }
    return spec;
}

ParamMatrix quantize_params(std::span<const double> raw, const DictionarySpec& spec)
{
    const std::size_t np = spec.param_count();
    if (raw.size() != spec.max_terms * np)
        fail(ErrorCode::invalid_argument, "parameter vector has the wrong length");
    ParamMatrix pm(spec.max_terms, np);
    for (std::size_t i = 0; i < spec.max_terms; ++i)
        for (std::size_t j = 0; j < np; ++j)
            pm.values[i * np + j] = spec.domains[j].quantize(raw[i * np + j]);
    return pm;
}

long delayed_index(double tau, double dt)
{
    if (!(tau >= 0.0))
        fail(ErrorCode::invalid_argument, "delay must be non-negative");
    if (!(dt > 0.0))
        fail(ErrorCode::invalid_argument, "step size must be positive");
    return std::lround(tau / dt);
}

RowWindow valid_row_range(const DictionarySpec& spec, const TimeSeries& ts)
{
    if (ts.rows < 3)
        fail(ErrorCode::insufficient_data, "trajectory needs at least 3 samples");
    long max_offset = 0;
    for (const auto& d : spec.domains)
        if (d.role == ParamRole::delay)
            max_offset = std::max(max_offset, delayed_index(d.upper, ts.dt));
    const auto first = static_cast<std::size_t>(max_offset) + 1;
    const std::size_t last = ts.rows - 2;
    if (first > last)
        fail(ErrorCode::insufficient_data,
             "trajectory has " + std::to_string(ts.rows) + " samples but the dictionary's largest delay needs at least " +
                 std::to_string(first + 2));
    return {first, last};
}

TermCode encode_term(std::span<const double> p, const DictionarySpec& spec, double dt)
{
    const auto& t = spec.term;
    if (p.size() != t.param_count)
        fail(ErrorCode::invalid_argument, "term parameter vector has the wrong length");
    TermCode code(t.param_count, 0);
    for (std::size_t j = 0; j < t.param_count; ++j) {
        const double q = spec.domains[j].quantize(p[j]);
        code[j] = t.roles[j] == ParamRole::delay ? static_cast<int>(delayed_index(q, dt))
                                                  : static_cast<int>(std::lround(q));
    }
    std::vector<bool> live(t.param_count, false);
    auto mark = [&](const std::vector<Factor>& fs) {
        for (const auto& f : fs)
            if (f.delay_param && code[f.exponent_param] != 0)
                live[*f.delay_param] = true;
    };
    mark(t.numerator);
    for (const auto& prod : t.denominator)
        mark(prod);
    for (std::size_t j = 0; j < t.param_count; ++j)
        if (t.roles[j] == ParamRole::delay && !live[j])
            code[j] = 0;
    return code;
}

std::optional<std::vector<double>> eval_term(const TimeSeries& ts, std::span<const double> p,
                                             const DictionarySpec& spec, RowWindow rows)
{
    const auto& t = spec.term;
    if (t.variable_count > ts.cols)
        fail(ErrorCode::invalid_argument, "term template references more variables than the data has");
    const TermCode code = encode_term(p, spec, ts.dt);
    std::vector<double> out;
    out.reserve(rows.count());
    for (std::size_t k = rows.first; k <= rows.last; ++k) {
        const double v = evaluate_code(t, code, [&](std::size_t var, int off) {
            return ts(k - static_cast<std::size_t>(off), var);
        });
        if (std::isnan(v))
            return std::nullopt;
        out.push_back(v);
    }
    return out;
}

std::optional<Eigen::MatrixXd> build_design_matrix(const TimeSeries& ts, const ParamMatrix& params,
                                                   std::span<const std::uint8_t> structure,
                                                   const DictionarySpec& spec, RowWindow rows)
{
    if (structure.size() != params.terms || params.params != spec.param_count())
        fail(ErrorCode::invalid_argument, "structure vector and parameter matrix disagree");
    const auto active = static_cast<Eigen::Index>(std::count(structure.begin(), structure.end(), 1));
    Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.count()), active);
    Eigen::Index col = 0;
    for (std::size_t i = 0; i < params.terms; ++i) {
        if (!structure[i])
            continue;
        auto column = eval_term(ts, params.row(i), spec, rows);
        if (!column)
            return std::nullopt;
        a.col(col++) = Eigen::Map<const Eigen::VectorXd>(column->data(), a.rows());
    }
    return a;
}

std::string variable_name(std::size_t j, std::size_t variables)
{
    static const char* xyz[] = {"x", "y", "z"};
    if (variables <= 3)
        return xyz[j];
    return "x" + std::to_string(j + 1);
}

std::string render_term(std::span<const double> p, const DictionarySpec& spec, double dt, double coefficient)
{
    const auto& t = spec.term;
    const TermCode code = encode_term(p, spec, dt);
    const std::size_t vars = std::max<std::size_t>(t.variable_count, 1);

    std::string den;
    if (!t.denominator.empty()) {
        const bool constant = std::all_of(t.denominator.begin(), t.denominator.end(),
                                          [&](const auto& prod) { return trivial(prod, code); });
        if (constant) {
            coefficient /= static_cast<double>(t.denominator.size());
        } else {
            for (const auto& prod : t.denominator) {
                if (!den.empty())
                    den += "+";
                den += render_product(prod, code, vars, dt);
            }
            den = "/(" + den + ")";
        }
    }

    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4f", std::abs(coefficient));
    std::string out = (coefficient < 0.0 ? "−" : "") + std::string(buf);
    if (!trivial(t.numerator, code))
        out += "·" + render_product(t.numerator, code, vars, dt);
    return out + den;
}

TermEvaluator::TermEvaluator(const TimeSeries& ts, const DictionarySpec& spec, RowWindow rows)
    : term_(spec.term), window_(rows), series_(ts.cols), sine_(ts.cols), denominator_(rows.count()),
      product_(rows.count())
{
    if (term_.variable_count > ts.cols)
        fail(ErrorCode::invalid_argument, "term template references more variables than the data has");
    if (rows.last >= ts.rows || rows.first > rows.last)
        fail(ErrorCode::invalid_argument, "row window lies outside the data");
    for (std::size_t j = 0; j < ts.cols; ++j)
        series_[j] = ts.column(j);
}

const double* TermEvaluator::factor(const Factor& f, const TermCode& code)
{
    const int e = code[f.exponent_param];
    if (e == 0)
        return nullptr;
    const auto off = static_cast<std::size_t>(f.delay_param ? code[*f.delay_param] : 0);
    const std::size_t start = window_.first - off;
    if (f.function == FactorFunction::identity && e == 1)
        return series_[f.variable].data() + start;

    const std::uint64_t key = static_cast<std::uint64_t>(f.function == FactorFunction::sine) |
                              (static_cast<std::uint64_t>(f.variable) << 1) |
                              (static_cast<std::uint64_t>(e) << 12) | (static_cast<std::uint64_t>(off) << 28);
    auto it = cache_.find(key);
    if (it != cache_.end())
        return it->second.data();

    const std::vector<double>* base = &series_[f.variable];
    if (f.function == FactorFunction::sine) {
        auto& s = sine_[f.variable];
        if (s.empty()) {
            s.resize(base->size());
            std::transform(base->begin(), base->end(), s.begin(), [](double v) { return std::sin(v); });
        }
        base = &s;
    }
    std::vector<double> col(window_.count());
    for (std::size_t r = 0; r < col.size(); ++r)
        col[r] = ipow((*base)[start + r], e);
    return cache_.emplace(key, std::move(col)).first->second.data();
}

bool TermEvaluator::evaluate(const TermCode& code, std::span<double> out)
{
    const std::size_t n = window_.count();
    auto product_into = [&](const std::vector<Factor>& fs, double* dst) {
        bool first = true;
        for (const auto& f : fs) {
            const double* col = factor(f, code);
            if (!col)
                continue;
            if (first)
                std::copy(col, col + n, dst);
            else
                for (std::size_t r = 0; r < n; ++r)
                    dst[r] *= col[r];
            first = false;
        }
        if (first)
            std::fill(dst, dst + n, 1.0);
    };

    product_into(term_.numerator, out.data());
    if (term_.denominator.empty())
        return true;

    auto& acc = denominator_;
    std::fill(acc.begin(), acc.end(), 0.0);
    for (const auto& prod : term_.denominator) {
        product_into(prod, product_.data());
        for (std::size_t r = 0; r < n; ++r)
            acc[r] += product_[r];
    }
    for (std::size_t r = 0; r < n; ++r) {
        if (!(std::abs(acc[r]) >= denominator_guard))
            return false;
        out[r] /= acc[r];
    }
    return true;
}

} // namespace ddeid
