#include "ddeid/reconstruct.hpp"

#include "ddeid/error.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

namespace ddeid {

namespace {

constexpr double infinity = std::numeric_limits<double>::infinity();

// Relative pivot threshold of the column-equilibrated QR used while searching.
constexpr double search_rank_threshold = 1e-10;

// Bound on memoized objective values per dimension; the memo is simply dropped when full.
constexpr std::size_t memo_capacity = 1'500'000;

// Active terms whose fitted contribution is below this fraction of the target norm are
// round-off artifacts and are removed from the returned model.
constexpr double negligible_contribution = 1e-8;

Box parameter_box(const DictionarySpec& spec)
{
    Box box;
    for (std::size_t i = 0; i < spec.max_terms; ++i)
        for (const auto& d : spec.domains) {
            box.lower.push_back(d.lower);
            box.upper.push_back(d.upper);
        }
    return box;
}

} // namespace

std::optional<LeastSquaresFit> least_squares_fit(const Eigen::MatrixXd& a, const Eigen::VectorXd& b)
{
    if (a.rows() != b.size())
        fail(ErrorCode::invalid_argument, "design matrix and target have different row counts");
    if (b.size() < 1)
        fail(ErrorCode::invalid_argument, "least squares needs at least one row");
    if (!a.allFinite() || !b.allFinite())
        return std::nullopt;
    LeastSquaresFit fit;
    if (a.cols() == 0) {
        fit.coefficients.resize(0);
        fit.residual = b.norm();
        return fit;
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    fit.coefficients = cod.solve(b);
    fit.residual = (a * fit.coefficients - b).norm();
    if (!fit.coefficients.allFinite() || !std::isfinite(fit.residual))
        return std::nullopt;
    return fit;
}

DataSummary summarize(const TimeSeries& ts)
{
    DataSummary s{ts.t0, ts.dt, ts.rows, ts.cols, 0xcbf29ce484222325ULL};
    for (double v : ts.values) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof v);
        for (unsigned char c : bytes) {
            s.checksum ^= c;
            s.checksum *= 0x100000001b3ULL;
        }
    }
    return s;
}

std::size_t DimensionProblem::KeyHash::operator()(const std::vector<int>& key) const noexcept
{
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ key.size();
    for (int v : key)
        h = mix_seed(h, static_cast<std::uint32_t>(v));
    return static_cast<std::size_t>(h);
}

DimensionProblem::DimensionProblem(const TimeSeries& ts, std::size_t dimension, const DictionarySpec& spec)
    : ts_(ts), spec_(spec), dimension_(dimension), window_(valid_row_range(spec, ts)),
      evaluator_(ts, spec, window_)
{
    validate(spec_);
    if (dimension >= ts.cols)
        fail(ErrorCode::invalid_argument, "dimension index out of range");
    const DerivativeSeries deriv = central_difference(ts);
    target_.resize(static_cast<Eigen::Index>(window_.count()));
    for (std::size_t k = window_.first; k <= window_.last; ++k)
        target_[static_cast<Eigen::Index>(k - window_.first)] = deriv(k, dimension);
    target_norm_ = target_.norm();
    columns_.resize(static_cast<Eigen::Index>(window_.count()), static_cast<Eigen::Index>(spec_.max_terms));
    codes_.resize(spec_.max_terms);
}

double DimensionProblem::objective(std::span<const std::uint8_t> structure, std::span<const double> raw)
{
    const std::size_t m = spec_.max_terms, np = spec_.param_count();
    if (structure.size() != m || raw.size() != m * np)
        fail(ErrorCode::invalid_argument, "structure or parameter vector has the wrong length");

    key_.clear();
    std::size_t active = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (!structure[i])
            continue;
        codes_[active] = encode_term(raw.subspan(i * np, np), spec_, ts_.dt);
        key_.insert(key_.end(), codes_[active].begin(), codes_[active].end());
        ++active;
    }
    if (active == 0)
        return target_norm_;

    if (auto it = memo_.find(key_); it != memo_.end())
        return it->second;
    const double value = compute(active);
    if (memo_.size() >= memo_capacity)
        memo_.clear();
    memo_.emplace(key_, value);
    return value;
}

double DimensionProblem::compute(std::size_t active)
{
    const auto rows = static_cast<Eigen::Index>(window_.count());
    for (std::size_t j = 0; j < active; ++j) {
        auto col = columns_.col(static_cast<Eigen::Index>(j));
        if (!evaluator_.evaluate(codes_[j], {col.data(), window_.count()}))
            return infinity;
    }
    auto a = columns_.leftCols(static_cast<Eigen::Index>(active));
    if (!a.allFinite())
        return infinity;

    // The residual only depends on the column space, so equilibrate the columns to make
    // the rank decision independent of how differently the terms are scaled.
    Eigen::MatrixXd scaled = a;
    for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
        const double norm = scaled.col(j).norm();
        if (norm > 0.0)
            scaled.col(j) /= norm;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(rows, scaled.cols());
    qr.setThreshold(search_rank_threshold);
    qr.compute(scaled);
    const Eigen::VectorXd x = qr.solve(target_);
    const double r = (scaled * x - target_).norm();
    return std::isfinite(r) ? r : infinity;
}

CandidateModel DimensionProblem::fit(std::span<const std::uint8_t> structure, std::span<const double> raw) const
{
    const std::size_t m = spec_.max_terms;
    CandidateModel model;
    model.structure.assign(structure.begin(), structure.end());
    model.params = quantize_params(raw, spec_);
    model.coefficients.assign(m, 0.0);
    auto a = build_design_matrix(ts_, model.params, model.structure, spec_, window_);
    std::optional<LeastSquaresFit> ls;
    if (a)
        ls = least_squares_fit(*a, target_);
    if (!ls) {
        model.objective = infinity;
        return model;
    }
    Eigen::Index col = 0;
    for (std::size_t i = 0; i < m; ++i)
        if (model.structure[i])
            model.coefficients[i] = ls->coefficients[col++];
    model.objective = ls->residual;
    model.search_objective = ls->residual;
    return model;
}

CandidateModel DimensionProblem::drop_negligible(CandidateModel model) const
{
    const double search_objective = model.search_objective;
    for (;;) {
        if (!std::isfinite(model.objective))
            break;
        auto a = build_design_matrix(ts_, model.params, model.structure, spec_, window_);
        if (!a)
            break;
        bool dropped = false;
        Eigen::Index col = 0;
        for (std::size_t i = 0; i < model.structure.size(); ++i) {
            if (!model.structure[i])
                continue;
            const double contribution = std::abs(model.coefficients[i]) * a->col(col++).norm();
            if (contribution <= negligible_contribution * target_norm_) {
                model.structure[i] = 0;
                dropped = true;
            }
        }
        if (!dropped)
            break;
        model = fit(model.structure, model.params.values);
    }
    model.search_objective = search_objective;
    return model;
}

double objective(std::span<const std::uint8_t> structure, std::span<const double> raw, const TimeSeries& ts,
                 std::size_t dimension, const DictionarySpec& spec)
{
    validate(spec);
    const RowWindow rows = valid_row_range(spec, ts);
    const DerivativeSeries deriv = central_difference(ts);
    Eigen::VectorXd b(static_cast<Eigen::Index>(rows.count()));
    for (std::size_t k = rows.first; k <= rows.last; ++k)
        b[static_cast<Eigen::Index>(k - rows.first)] = deriv(k, dimension);
    const ParamMatrix params = quantize_params(raw, spec);
    auto a = build_design_matrix(ts, params, structure, spec, rows);
    if (!a)
        return infinity;
    auto ls = least_squares_fit(*a, b);
    return ls ? ls->residual : infinity;
}

std::size_t nominal_evaluations(const SwarmConfig& outer, const SwarmConfig& inner)
{
    return outer.population * outer.iterations * inner.population * inner.iterations;
}

CandidateModel reconstruct_dimension(DimensionProblem& problem, const SwarmConfig& outer, const SwarmConfig& inner,
                                     std::uint64_t seed)
{
    const auto started = std::chrono::steady_clock::now();
    const DictionarySpec& spec = problem.dictionary();
    const Box box = parameter_box(spec);

    std::size_t outer_calls = 0, inner_evaluations = 0;
    double best_value = infinity;
    StructureVector best_structure;
    std::vector<double> best_raw;

    auto outer_objective = [&](std::span<const std::uint8_t> structure) {
        const std::size_t iteration = outer_calls / outer.population;
        const std::size_t particle = outer_calls % outer.population;
        ++outer_calls;
        SwarmConfig in = inner;
        in.seed = mix_seed(mix_seed(seed, iteration), particle);
        auto run = cpso_run([&](std::span<const double> raw) { return problem.objective(structure, raw); }, box, in);
        inner_evaluations += run.evaluations;
        if (run.best_value < best_value) {
            best_value = run.best_value;
            best_structure.assign(structure.begin(), structure.end());
            best_raw = std::move(run.best_position);
        }
        return run.best_value;
    };

    SwarmConfig out = outer;
    out.seed = seed;
    const BinaryResult result = bpso_run(outer_objective, spec.max_terms, out);

    if (best_structure.empty()) {
        best_structure = result.best_bits;
        best_raw = box.lower;
    }
    CandidateModel model = problem.drop_negligible(problem.fit(best_structure, best_raw));
    model.search_objective = best_value;
    model.seed = seed;
    model.outer_evaluations = result.evaluations;
    model.inner_evaluations = inner_evaluations;
    model.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return model;
}

CandidateModel reconstruct_dimension(const TimeSeries& ts, std::size_t dimension, const DictionarySpec& spec,
                                     const SwarmConfig& outer, const SwarmConfig& inner, std::uint64_t seed)
{
    DimensionProblem problem(ts, dimension, spec);
    return reconstruct_dimension(problem, outer, inner, seed);
}

ReconstructedSystem reconstruct_system(const TimeSeries& ts, const DictionarySpec& spec, const SwarmConfig& outer,
                                       const SwarmConfig& inner, std::uint64_t seed, std::size_t workers)
{
    validate(spec);
    validate(outer);
    validate(inner);
    if (ts.cols < 1)
        fail(ErrorCode::invalid_argument, "data has no state dimensions");
    valid_row_range(spec, ts);

    ReconstructedSystem result;
    result.dictionary = spec;
    result.data = summarize(ts);
    result.outer = outer;
    result.inner = inner;
    result.outer.seed = seed;
    result.inner.seed = seed;
    result.seed = seed;
    result.dimensions.resize(ts.cols);

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < ts.cols; i = next++) {
            try {
                result.dimensions[i] = reconstruct_dimension(ts, i, spec, outer, inner, mix_seed(seed, i));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(workers, 1, ts.cols);
    if (threads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back(work);
        for (auto& th : pool)
            th.join();
    }
    if (error)
        std::rethrow_exception(error);
    return result;
}

std::vector<MergedTerm> merged_terms(const CandidateModel& model, const DictionarySpec& spec, double dt)
{
    std::vector<MergedTerm> terms;
    for (std::size_t i = 0; i < model.structure.size(); ++i) {
        if (!model.structure[i])
            continue;
        TermCode code = encode_term(model.params.row(i), spec, dt);
        auto it = std::find_if(terms.begin(), terms.end(), [&](const MergedTerm& t) { return t.code == code; });
        if (it != terms.end()) {
            it->coefficient += model.coefficients[i];
            continue;
        }
        const auto row = model.params.row(i);
        terms.push_back({std::move(code), std::vector<double>(row.begin(), row.end()), model.coefficients[i]});
    }
    return terms;
}

std::string render_equation(const CandidateModel& model, const DictionarySpec& spec, double dt,
                            std::size_t dimension, std::size_t dimensions)
{
    std::string out = "d" + variable_name(dimension, dimensions) + "/dt = ";
    const auto terms = merged_terms(model, spec, dt);
    if (terms.empty())
        return out + "0";
    bool first = true;
    for (const auto& t : terms) {
        std::string s = render_term(t.params, spec, dt, t.coefficient);
        const bool negative = s.rfind("−", 0) == 0;
        if (negative)
            s.erase(0, std::strlen("−"));
        if (first)
            out += (negative ? "−" : "") + s;
        else
            out += (negative ? " − " : " + ") + s;
        first = false;
    }
    return out;
}

GroundTruth builtin_ground_truth(int id)
{
    GroundTruth g;
    switch (id) {
    case 1:
        g.dimensions = {{{{1, 0, 0}, -0.1}, {{0, 1, 0}, 2.0}},
                        {{{1, 0, 0}, -2.0}, {{0, 1, 0}, -0.1}},
                        {{{0, 0, 1}, -0.3}}};
        break;
    case 2:
        g.dimensions = {{{{0, 1, 0}, 10.0}, {{1, 0, 0}, -10.0}},
                        {{{1, 0, 0}, 28.0}, {{1, 0, 1}, -1.0}, {{0, 1, 0}, -1.0}},
                        {{{1, 1, 0}, 1.0}, {{0, 0, 1}, -8.0 / 3.0}}};
        break;
    case 3:
        g.dimensions = {{{{0, 0, 1, 0, 0, 0}, -1.0},
                         {{0, 0, 0, 0, 1, 0}, -1.0},
                         {{1, 1, 0, 0, 0, 0}, 0.2},
                         {{1, 2, 0, 0, 0, 0}, 0.5}},
                        {{{1, 0, 0, 0, 0, 0}, 1.0}, {{0, 0, 1, 0, 0, 0}, 0.2}},
                        {{{0, 0, 0, 0, 0, 0}, 0.2}, {{1, 0, 0, 0, 1, 0}, 1.0}, {{0, 0, 0, 0, 1, 0}, -5.7}}};
        break;
    case 4:
        g.dimensions = {{{{1, 0, 0, 0}, -1.0}, {{0, 0, 1, 1.59}, 6.0}}};
        break;
    case 5:
        // x/(x^0 + x^0(t-tau)) = x/2, so -b x(t) carries the coefficient -2b.
        g.dimensions = {{{{1, 0, 0, 0, 10}, -0.2}, {{0, 1, 0, 10, 20}, 0.2}}};
        break;
    default:
        fail(ErrorCode::unknown_system, "unknown system " + std::to_string(id) + " (expected 1..5)");
    }
    return g;
}

SuccessReport score_success(const ReconstructedSystem& result, const GroundTruth& truth, double coeff_rtol)
{
    const auto& spec = result.dictionary;
    const double dt = result.data.dt;
    if (truth.dimensions.size() != result.dimensions.size())
        fail(ErrorCode::invalid_ground_truth, "ground truth and result have different dimension counts");

    SuccessReport report;
    report.success = true;
    for (std::size_t i = 0; i < truth.dimensions.size(); ++i) {
        std::map<TermCode, std::pair<double, std::string>> expected;
        for (const auto& t : truth.dimensions[i]) {
            if (t.params.size() != spec.param_count())
                fail(ErrorCode::invalid_ground_truth, "ground-truth term has the wrong parameter count");
            for (std::size_t j = 0; j < t.params.size(); ++j)
                if (std::abs(spec.domains[j].quantize(t.params[j]) - t.params[j]) > 1e-9)
                    fail(ErrorCode::invalid_ground_truth, "ground-truth term is not representable in the dictionary");
            expected[encode_term(t.params, spec, dt)] = {t.coefficient, render_term(t.params, spec, dt, t.coefficient)};
        }

        DimensionScore score;
        const auto found = merged_terms(result.dimensions[i], spec, dt);
        score.structure_match = found.size() == expected.size();
        score.coefficients_match = true;
        for (const auto& term : found) {
            auto it = expected.find(term.code);
            if (it == expected.end()) {
                score.structure_match = false;
                score.extra.push_back(render_term(term.params, spec, dt, term.coefficient));
                continue;
            }
            const double rel = std::abs(term.coefficient - it->second.first) / std::abs(it->second.first);
            score.max_relative_error = std::max(score.max_relative_error, rel);
            if (!(rel <= coeff_rtol))
                score.coefficients_match = false;
        }
        for (const auto& [code, info] : expected)
            if (std::none_of(found.begin(), found.end(), [&](const MergedTerm& t) { return t.code == code; })) {
                score.structure_match = false;
                score.missing.push_back(info.second);
            }
        if (!score.structure_match)
            score.coefficients_match = false;
        report.success = report.success && score.success();
        report.dimensions.push_back(std::move(score));
    }
    return report;
}

SystemSpec reconstructed_system_spec(const ReconstructedSystem& result)
{
    struct Term
    {
        TermCode code;
        double coefficient;
    };
    const auto& spec = result.dictionary;
    const double dt = result.data.dt;
    const std::size_t n = result.dimensions.size();

    std::vector<std::vector<Term>> terms(n);
    std::vector<int> offsets; // distinct positive delays, ascending
    auto note_offsets = [&](const std::vector<Factor>& fs, const TermCode& code) {
        for (const auto& f : fs)
            if (f.delay_param && code[f.exponent_param] != 0 && code[*f.delay_param] > 0)
                offsets.push_back(code[*f.delay_param]);
    };
    for (std::size_t i = 0; i < n; ++i)
        for (auto& t : merged_terms(result.dimensions[i], spec, dt)) {
            note_offsets(spec.term.numerator, t.code);
            for (const auto& prod : spec.term.denominator)
                note_offsets(prod, t.code);
            terms[i].push_back({std::move(t.code), t.coefficient});
        }
    std::sort(offsets.begin(), offsets.end());
    offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());

    SystemSpec s;
    s.name = "reconstructed";
    s.dimension = n;
    for (int o : offsets)
        s.delays.push_back(o * dt);
    s.rhs = [terms, offsets, term = spec.term](double, std::span<const double> x, const LagView& lag,
                                               std::span<double> dx) {
        auto sample = [&](std::size_t var, int off) {
            if (off == 0)
                return x[var];
            const auto idx = static_cast<std::size_t>(std::lower_bound(offsets.begin(), offsets.end(), off) -
                                                      offsets.begin());
            return lag(idx)[var];
        };
        for (std::size_t i = 0; i < terms.size(); ++i) {
            double sum = 0.0;
            for (const auto& t : terms[i])
                sum += t.coefficient * evaluate_code(term, t.code, sample);
            dx[i] = sum;
        }
    };
    return s;
}

TimeSeries replay_trajectory(const ReconstructedSystem& result, const TimeSeries& original, double duration)
{
    if (original.cols != result.dimensions.size())
        fail(ErrorCode::invalid_argument, "original trajectory width does not match the reconstructed system");
    const SystemSpec spec = reconstructed_system_spec(result);
    std::size_t history = 1;
    for (double tau : spec.delays)
        history = std::max(history, static_cast<std::size_t>(delayed_index(tau, original.dt)) + 1);
    if (original.rows < history)
        fail(ErrorCode::insufficient_data, "replay needs " + std::to_string(history) +
                                               " history samples but the original trajectory has " +
                                               std::to_string(original.rows));
    if (!(duration >= 0.0))
        fail(ErrorCode::invalid_argument, "replay duration must be non-negative");
    const auto total = static_cast<std::size_t>(std::lround(duration / original.dt)) + 1;
    if (total < history)
        fail(ErrorCode::invalid_argument, "replay duration is shorter than the model's history segment");

    TimeSeries start(original.t0, original.dt, history, original.cols);
    std::copy_n(original.values.begin(), static_cast<std::ptrdiff_t>(history * original.cols), start.values.begin());
    return integrate_from_history(spec, start, total);
}

} // namespace ddeid
