#ifndef DDEID_DDE_SIM_HPP
#define DDEID_DDE_SIM_HPP

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ddeid {

/// Uniformly sampled multivariate trajectory, stored row-major (one row per sample).
struct TimeSeries
{
    double t0 = 0.0;
    double dt = 0.0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    TimeSeries() = default;
    TimeSeries(double start, double step, std::size_t row_count, std::size_t col_count);

    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
    double operator()(std::size_t k, std::size_t j) const { return values[k * cols + j]; }
    double& operator()(std::size_t k, std::size_t j) { return values[k * cols + j]; }
    std::span<const double> row(std::size_t k) const { return {values.data() + k * cols, cols}; }
    std::span<double> row(std::size_t k) { return {values.data() + k * cols, cols}; }
    std::vector<double> column(std::size_t j) const;
};

/// Central-difference derivative estimate; endpoint rows are never valid.
struct DerivativeSeries
{
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
    std::vector<bool> valid;

    double operator()(std::size_t k, std::size_t j) const { return values[k * cols + j]; }
};

/// Delayed states handed to a right-hand side: `lagged(j)` is x(t - delays[j]).
class LagView
{
public:
    LagView(const double* data, std::size_t dimension, std::size_t count)
        : data_(data), dimension_(dimension), count_(count)
    {}

    std::span<const double> operator()(std::size_t j) const
    {
        return {data_ + j * dimension_, dimension_};
    }
    std::size_t size() const { return count_; }

private:
    const double* data_;
    std::size_t dimension_;
    std::size_t count_;
};

using RightHandSide =
    std::function<void(double t, std::span<const double> x, const LagView& lagged, std::span<double> dxdt)>;

struct SystemSpec
{
    std::string name;
    std::size_t dimension = 1;
    std::vector<double> delays; // seconds
    RightHandSide rhs;
    std::vector<double> initial;
    double burn_in = 0.0;
    double duration = 20.0;
};

/// How one requested delay maps onto the sampling grid.
struct DelaySnap
{
    double requested = 0.0;
    long offset = 0;
    double snapped = 0.0;
};

std::vector<DelaySnap> snap_delays(const SystemSpec& spec, double dt);

/// Fixed-step RK4 from a constant pre-history equal to `initial`.
/// Integrates burn_in + duration seconds and returns the samples after the burn-in.
TimeSeries integrate(const SystemSpec& spec, double dt, double burn_in, double duration,
                     std::span<const double> initial);

/// Continues `history` (whose last row is the current state) until the series holds
/// `total_rows` samples. Times before the first history row see that row as a constant.
TimeSeries integrate_from_history(const SystemSpec& spec, const TimeSeries& history,
                                  std::size_t total_rows);

DerivativeSeries central_difference(const TimeSeries& ts);

/// Ids: 1 linear, 2 Lorenz, 3 delayed Rossler, 4 Ikeda, 5 Mackey-Glass.
SystemSpec builtin_system(int id);

void write_csv(std::ostream& out, const TimeSeries& ts);
void write_csv(const std::string& path, const TimeSeries& ts);
TimeSeries read_csv(std::istream& in);
TimeSeries read_csv(const std::string& path);

} // namespace ddeid

#endif
