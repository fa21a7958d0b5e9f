#ifndef DDEID_RECONSTRUCT_HPP
#define DDEID_RECONSTRUCT_HPP

#include "ddeid/dde_sim.hpp"
#include "ddeid/dictionary.hpp"
#include "ddeid/swarm.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace ddeid {

struct LeastSquaresFit
{
    Eigen::VectorXd coefficients;
    double residual = 0.0;
};

/// Minimum-norm least-squares solution of A x ~ b (complete orthogonal decomposition).
/// nullopt when A or b holds a non-finite entry.
std::optional<LeastSquaresFit> least_squares_fit(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

using StructureVector = std::vector<std::uint8_t>;

/// One dimension's solution (d, P, xi) and its residual norm.
struct CandidateModel
{
    StructureVector structure;
    ParamMatrix params;
    std::vector<double> coefficients; // length M, zero where the structure bit is 0
    double objective = 0.0;        // residual of (structure, params, coefficients)
    double search_objective = 0.0; // best value seen by the search, before round-off cleanup
    std::uint64_t seed = 0;
    std::size_t outer_evaluations = 0;
    std::size_t inner_evaluations = 0;
    double wall_time = 0.0; // seconds
};

struct DataSummary
{
    double t0 = 0.0;
    double dt = 0.0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::uint64_t checksum = 0; // FNV-1a over the raw sample bytes
};

DataSummary summarize(const TimeSeries& ts);

struct ReconstructedSystem
{
    DictionarySpec dictionary;
    DataSummary data;
    SwarmConfig outer;
    SwarmConfig inner;
    std::uint64_t seed = 0;
    std::vector<CandidateModel> dimensions;
};

/// Data and caches for the objective of one state dimension. Owns its term cache and
/// objective memo, so a single instance must not be shared between threads.
class DimensionProblem
{
public:
    DimensionProblem(const TimeSeries& ts, std::size_t dimension, const DictionarySpec& spec);

    const TimeSeries& data() const { return ts_; }
    const DictionarySpec& dictionary() const { return spec_; }
    RowWindow window() const { return window_; }
    std::span<const double> target() const { return {target_.data(), static_cast<std::size_t>(target_.size())}; }

    /// Residual norm of the least-squares fit with the active terms of `structure` and the
    /// quantized parameters `raw` (flat M*n_p); +inf for infeasible terms.
    double objective(std::span<const std::uint8_t> structure, std::span<const double> raw);

    /// Full solution for (structure, raw) through build_design_matrix and least_squares_fit.
    CandidateModel fit(std::span<const std::uint8_t> structure, std::span<const double> raw) const;

    /// Removes active terms whose fitted contribution is at round-off level and refits.
    CandidateModel drop_negligible(CandidateModel model) const;

    std::size_t memo_size() const { return memo_.size(); }

private:
    struct KeyHash
    {
        std::size_t operator()(const std::vector<int>& key) const noexcept;
    };

    double compute(std::size_t active);

    const TimeSeries& ts_;
    DictionarySpec spec_;
    std::size_t dimension_;
    RowWindow window_;
    Eigen::VectorXd target_;
    double target_norm_ = 0.0;
    TermEvaluator evaluator_;
    std::vector<int> key_;
    std::vector<TermCode> codes_;
    Eigen::MatrixXd columns_;
    std::unordered_map<std::vector<int>, double, KeyHash> memo_;
};

/// The objective evaluated directly (no caches): builds the design matrix and fits it.
double objective(std::span<const std::uint8_t> structure, std::span<const double> raw, const TimeSeries& ts,
                 std::size_t dimension, const DictionarySpec& spec);

/// Outer binary swarm over structures; each structure is scored by a fresh inner swarm
/// over the parameter box. `outer.seed`/`inner.seed` are ignored in favour of `seed`.
CandidateModel reconstruct_dimension(DimensionProblem& problem, const SwarmConfig& outer, const SwarmConfig& inner,
                                     std::uint64_t seed);

CandidateModel reconstruct_dimension(const TimeSeries& ts, std::size_t dimension, const DictionarySpec& spec,
                                     const SwarmConfig& outer, const SwarmConfig& inner, std::uint64_t seed);

/// N_out * I_out * N_in * I_in.
std::size_t nominal_evaluations(const SwarmConfig& outer, const SwarmConfig& inner);

/// Runs every dimension (up to `workers` at once) with seed mix_seed(seed, dimension).
ReconstructedSystem reconstruct_system(const TimeSeries& ts, const DictionarySpec& spec, const SwarmConfig& outer,
                                       const SwarmConfig& inner, std::uint64_t seed, std::size_t workers = 1);

/// An active term after merging identical quantized terms.
struct MergedTerm
{
    TermCode code;
    std::vector<double> params;
    double coefficient = 0.0;
};

std::vector<MergedTerm> merged_terms(const CandidateModel& model, const DictionarySpec& spec, double dt);

/// e.g. "dx/dt = −10.0545·x + 10.0301·y".
std::string render_equation(const CandidateModel& model, const DictionarySpec& spec, double dt,
                            std::size_t dimension, std::size_t dimensions);

struct TruthTerm
{
    std::vector<double> params;
    double coefficient = 0.0;
};

struct GroundTruth
{
    std::vector<std::vector<TruthTerm>> dimensions;
};

/// True terms of built-in system `id` written in builtin_dictionary(id).
GroundTruth builtin_ground_truth(int id);

struct DimensionScore
{
    bool structure_match = false;
    bool coefficients_match = false;
    double max_relative_error = 0.0;
    std::vector<std::string> missing; // true terms not recovered
    std::vector<std::string> extra;   // recovered terms not in the truth

    bool success() const { return structure_match && coefficients_match; }
};

struct SuccessReport
{
    std::vector<DimensionScore> dimensions;
    bool success = false;
};

SuccessReport score_success(const ReconstructedSystem& result, const GroundTruth& truth, double coeff_rtol = 0.10);

/// The recovered right-hand side as an integrable system.
SystemSpec reconstructed_system_spec(const ReconstructedSystem& result);

/// Integrates the recovered model from the first (max delay + 1) samples of `original`
/// and returns round(duration/dt) + 1 samples starting at original.t0.
TimeSeries replay_trajectory(const ReconstructedSystem& result, const TimeSeries& original, double duration);

} // namespace ddeid

#endif
