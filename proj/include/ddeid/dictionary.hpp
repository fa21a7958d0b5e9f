#ifndef DDEID_DICTIONARY_HPP
#define DDEID_DICTIONARY_HPP

#include "ddeid/dde_sim.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ddeid {

enum class ParamKind { integer, grid_real };
enum class ParamRole { exponent, delay };

/// Feasible set of one term parameter.
struct ParamDomain
{
    double lower = 0.0;
    double upper = 0.0;
    ParamKind kind = ParamKind::integer;
    double grid = 0.0; // grid_real only
    ParamRole role = ParamRole::exponent;

    /// Clamp into [lower, upper] and round onto the integers or the grid.
    double quantize(double v) const;
};

enum class FactorFunction { identity, sine };

/// One factor f(x_var(t - p_delay))^p_exp of a term template. Parameter indices are 0-based.
struct Factor
{
    FactorFunction function = FactorFunction::identity;
    std::size_t variable = 0;
    std::size_t exponent_param = 0;
    std::optional<std::size_t> delay_param;
};

/// A term g(p) written as a product of factors, optionally divided by a sum of products.
struct TermTemplate
{
    std::string id;
    std::string expression;
    std::size_t param_count = 0;
    std::size_t variable_count = 0; // number of state variables referenced
    std::vector<ParamRole> roles;
    std::vector<Factor> numerator;
    std::vector<std::vector<Factor>> denominator;
};

/// x1^p1 * x2^p2 * ... (T1)
TermTemplate monomial_template(std::size_t variables);
/// x1^p1(t-p2) * x2^p3(t-p4) * ... (T2)
TermTemplate delayed_monomial_template(std::size_t variables);
/// x^p1(t-p2) * sin^p3(x(t-p4)) (T3)
TermTemplate ikeda_template();
/// x^p1 * x^p2(t-p5) / (x^p3 + x^p4(t-p5)) (T4)
TermTemplate mackey_glass_template();

/// Parses expressions such as "x1^p1(t-p2) * sin(x1(t-p4))^p3" or
/// "x1^p1 * x1^p2(t-p5) / (x1^p3 + x1^p4(t-p5))".
TermTemplate parse_template(std::string_view expression);

/// "T1".."T4" (sized to `variables` where that applies), otherwise parsed as an expression.
TermTemplate template_by_id(std::string_view id, std::size_t variables);

struct DictionarySpec
{
    TermTemplate term;
    std::size_t max_terms = 5;
    std::vector<ParamDomain> domains;

    std::size_t param_count() const { return term.param_count; }
};

/// Throws invalid_argument when the spec violates its invariants.
void validate(const DictionarySpec& spec);

/// The dictionary and solution space used for built-in system `id` at sampling step dt.
DictionarySpec builtin_dictionary(int id, double dt);

/// M rows of n_p parameters.
struct ParamMatrix
{
    std::size_t terms = 0;
    std::size_t params = 0;
    std::vector<double> values;

    ParamMatrix() = default;
    ParamMatrix(std::size_t m, std::size_t np) : terms(m), params(np), values(m * np, 0.0) {}

    std::span<const double> row(std::size_t i) const { return {values.data() + i * params, params}; }
    std::span<double> row(std::size_t i) { return {values.data() + i * params, params}; }
};

/// Quantizes a flat M*n_p position into the parameter domains.
ParamMatrix quantize_params(std::span<const double> raw, const DictionarySpec& spec);

/// round(tau / dt).
long delayed_index(double tau, double dt);

/// Sample rows (0-based, inclusive) on which every feasible term and the
/// central-difference derivative are defined.
struct RowWindow
{
    std::size_t first = 0;
    std::size_t last = 0;
    std::size_t count() const { return last - first + 1; }
};

RowWindow valid_row_range(const DictionarySpec& spec, const TimeSeries& ts);

/// Integer form of a quantized term: exponents as integers, delays as sample offsets.
using TermCode = std::vector<int>;

/// Quantizes `p` and encodes it. Delays that cannot affect the term
/// (every factor using them has exponent 0) are zeroed so equal functions share a code.
TermCode encode_term(std::span<const double> p, const DictionarySpec& spec, double dt);

/// g at a single instant. `sample(variable, offset)` must return x_variable(t - offset*dt).
/// Returns NaN when the denominator magnitude is below 1e-12.
template <typename Sampler>
double evaluate_code(const TermTemplate& term, const TermCode& code, Sampler&& sample)
{
    auto product = [&](const std::vector<Factor>& factors) {
        double v = 1.0;
        for (const auto& f : factors) {
            const int e = code[f.exponent_param];
            if (e == 0)
                continue;
            const double x = sample(f.variable, f.delay_param ? code[*f.delay_param] : 0);
            const double base = f.function == FactorFunction::sine ? std::sin(x) : x;
            double p = 1.0;
            for (int i = 0; i < e; ++i)
                p *= base;
            v *= p;
        }
        return v;
    };
    double value = product(term.numerator);
    if (!term.denominator.empty()) {
        double den = 0.0;
        for (const auto& prod : term.denominator)
            den += product(prod);
        if (!(std::abs(den) >= 1e-12))
            return std::numeric_limits<double>::quiet_NaN();
        value /= den;
    }
    return value;
}

/// g(p) at every row of the window, or nullopt when a denominator magnitude drops below 1e-12.
std::optional<std::vector<double>> eval_term(const TimeSeries& ts, std::span<const double> p,
                                             const DictionarySpec& spec, RowWindow rows);

/// One column per active term in term order; nullopt when any active term is infeasible.
std::optional<Eigen::MatrixXd> build_design_matrix(const TimeSeries& ts, const ParamMatrix& params,
                                                   std::span<const std::uint8_t> structure,
                                                   const DictionarySpec& spec, RowWindow rows);

/// Name of state variable `j`: x, y, z for up to three variables, x1..xn otherwise.
std::string variable_name(std::size_t j, std::size_t variables);

/// Text such as "0.5000·x(t−2)"; constant denominators are folded into the coefficient.
std::string render_term(std::span<const double> p, const DictionarySpec& spec, double dt, double coefficient);

/// Evaluates encoded terms over a fixed window, caching every distinct factor column.
/// Not thread-safe; give each concurrent search its own instance.
class TermEvaluator
{
public:
    TermEvaluator(const TimeSeries& ts, const DictionarySpec& spec, RowWindow rows);

    std::size_t rows() const { return window_.count(); }

    /// Writes g into `out` (length rows()); false when the denominator guard trips.
    bool evaluate(const TermCode& code, std::span<double> out);

private:
    const double* factor(const Factor& f, const TermCode& code);

    TermTemplate term_;
    RowWindow window_;
    std::vector<std::vector<double>> series_;                   // per variable, full length
    std::vector<std::vector<double>> sine_;                     // lazily filled
    std::unordered_map<std::uint64_t, std::vector<double>> cache_;
    std::vector<double> denominator_;
    std::vector<double> product_;
};

} // namespace ddeid

#endif
