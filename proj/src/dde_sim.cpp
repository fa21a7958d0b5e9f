#include "ddeid/dde_sim.hpp"

#include "ddeid/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ddeid {

namespace {

constexpr double divergence_bound = 1e6;

void check_step(double dt)
{
    if (!(dt > 0.0) || !std::isfinite(dt))
        fail(ErrorCode::invalid_argument, "step size must be positive and finite");
}

// Round to 12 significant digits so that a step recovered from printed sample
// times compares equal to the literal the user originally typed (0.01, 0.005, ...).
double tidy_step(double dt)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", dt);
    return std::strtod(buf, nullptr);
}

} // namespace

TimeSeries::TimeSeries(double start, double step, std::size_t row_count, std::size_t col_count)
    : t0(start), dt(step), rows(row_count), cols(col_count), values(row_count * col_count, 0.0)
{}

std::vector<double> TimeSeries::column(std::size_t j) const
{
    std::vector<double> out(rows);
    for (std::size_t k = 0; k < rows; ++k)
        out[k] = (*this)(k, j);
    return out;
}

std::vector<DelaySnap> snap_delays(const SystemSpec& spec, double dt)
{
    check_step(dt);
    std::vector<DelaySnap> snaps;
    snaps.reserve(spec.delays.size());
    for (double tau : spec.delays) {
        if (!(tau >= 0.0) || !std::isfinite(tau))
            fail(ErrorCode::invalid_argument, "delays must be finite and non-negative");
        DelaySnap s;
        s.requested = tau;
        s.offset = std::lround(tau / dt);
        s.snapped = static_cast<double>(s.offset) * dt;
        snaps.push_back(s);
    }
    return snaps;
}

TimeSeries integrate_from_history(const SystemSpec& spec, const TimeSeries& history,
                                  std::size_t total_rows)
{
    const std::size_t n = spec.dimension;
    if (n == 0)
        fail(ErrorCode::invalid_argument, "system dimension must be at least 1");
    if (history.cols != n)
        fail(ErrorCode::invalid_argument, "history width does not match the system dimension");
    if (history.rows == 0)
        fail(ErrorCode::invalid_argument, "history must hold at least one sample");
    if (!spec.rhs)
        fail(ErrorCode::invalid_argument, "system has no right-hand side");
    const double h = history.dt;
    check_step(h);

    std::vector<long> offsets;
    for (const auto& s : snap_delays(spec, h))
        offsets.push_back(s.offset);
    const std::size_t nd = offsets.size();

    TimeSeries ts(history.t0, h, std::max(total_rows, history.rows), n);
    std::copy(history.values.begin(), history.values.end(), ts.values.begin());

    std::vector<double> lag(nd * n), stage(n), k1(n), k2(n), k3(n), k4(n);
    const LagView view(lag.data(), n, nd);

    // Delayed state at grid position (index + frac) with frac in {0, 0.5, 1}; indices
    // before the first sample fall back to the constant pre-history.
    auto sample = [&](long idx) { return ts.row(static_cast<std::size_t>(std::max(idx, 0L))); };
    auto fill_lag = [&](long k, int half_steps, std::span<const double> current) {
        for (std::size_t j = 0; j < nd; ++j) {
            double* dst = lag.data() + j * n;
            const long o = offsets[j];
            if (o == 0) {
                std::copy(current.begin(), current.end(), dst);
                continue;
            }
            if (half_steps == 0) {
                auto r = sample(k - o);
                std::copy(r.begin(), r.end(), dst);
            } else if (half_steps == 2) {
                auto r = sample(k - o + 1);
                std::copy(r.begin(), r.end(), dst);
            } else {
                auto a = sample(k - o);
                auto b = sample(k - o + 1);
                for (std::size_t i = 0; i < n; ++i)
                    dst[i] = 0.5 * (a[i] + b[i]);
            }
        }
    };

    for (std::size_t k = history.rows - 1; k + 1 < ts.rows; ++k) {
        const long kk = static_cast<long>(k);
        const double t = ts.time(k);
        auto x = ts.row(k);

        fill_lag(kk, 0, x);
        spec.rhs(t, x, view, k1);

        for (std::size_t i = 0; i < n; ++i)
            stage[i] = x[i] + 0.5 * h * k1[i];
        fill_lag(kk, 1, stage);
        spec.rhs(t + 0.5 * h, stage, view, k2);

        for (std::size_t i = 0; i < n; ++i)
            stage[i] = x[i] + 0.5 * h * k2[i];
        fill_lag(kk, 1, stage);
        spec.rhs(t + 0.5 * h, stage, view, k3);

        for (std::size_t i = 0; i < n; ++i)
            stage[i] = x[i] + h * k3[i];
        fill_lag(kk, 2, stage);
        spec.rhs(t + h, stage, view, k4);

        auto next = ts.row(k + 1);
        for (std::size_t i = 0; i < n; ++i) {
            next[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if (!std::isfinite(next[i]) || std::abs(next[i]) > divergence_bound) {
                std::ostringstream msg;
                msg << "integration diverged at t=" << ts.time(k + 1);
                fail(ErrorCode::integration_diverged, msg.str());
            }
        }
    }
    return ts;
}

TimeSeries integrate(const SystemSpec& spec, double dt, double burn_in, double duration,
                     std::span<const double> initial)
{
    check_step(dt);
    if (!(duration >= 0.0) || !(burn_in >= 0.0))
        fail(ErrorCode::invalid_argument, "duration and burn-in must be non-negative");
    const long sample_steps = std::lround(duration / dt);
    if (sample_steps < 2)
        fail(ErrorCode::invalid_argument, "duration must cover at least three samples");
    const long burn_steps = std::lround(burn_in / dt);

    std::span<const double> x0 = initial.empty() ? std::span<const double>(spec.initial) : initial;
    if (x0.size() != spec.dimension)
        fail(ErrorCode::invalid_argument, "initial state has the wrong dimension");

    TimeSeries start(0.0, dt, 1, spec.dimension);
    std::copy(x0.begin(), x0.end(), start.values.begin());
    const auto total = static_cast<std::size_t>(burn_steps + sample_steps + 1);
    TimeSeries full = integrate_from_history(spec, start, total);

    TimeSeries out(static_cast<double>(burn_steps) * dt, dt, static_cast<std::size_t>(sample_steps + 1),
                   spec.dimension);
    std::copy(full.values.begin() + static_cast<std::ptrdiff_t>(burn_steps * spec.dimension),
              full.values.end(), out.values.begin());
    return out;
}

DerivativeSeries central_difference(const TimeSeries& ts)
{
    if (ts.rows < 3)
        fail(ErrorCode::invalid_argument, "central difference needs at least three samples");
    check_step(ts.dt);
    DerivativeSeries d;
    d.rows = ts.rows;
    d.cols = ts.cols;
    d.values.assign(ts.rows * ts.cols, 0.0);
    d.valid.assign(ts.rows, true);
    d.valid.front() = false;
    d.valid.back() = false;
    const double inv = 1.0 / (2.0 * ts.dt);
    for (std::size_t k = 1; k + 1 < ts.rows; ++k)
        for (std::size_t j = 0; j < ts.cols; ++j)
            d.values[k * ts.cols + j] = (ts(k + 1, j) - ts(k - 1, j)) * inv;
    return d;
}

SystemSpec builtin_system(int id)
{
    SystemSpec s;
    switch (id) {
    case 1:
        s.name = "linear";
        s.dimension = 3;
        s.initial = {1.0, 1.0, 1.0};
        s.burn_in = 0.0;
        s.rhs = [](double, std::span<const double> x, const LagView&, std::span<double> dx) {
            dx[0] = -0.1 * x[0] + 2.0 * x[1];
            dx[1] = -2.0 * x[0] - 0.1 * x[1];
            dx[2] = -0.3 * x[2];
        };
        break;
    case 2:
        s.name = "lorenz";
        s.dimension = 3;
        s.initial = {1.0, 1.0, 1.0};
        s.burn_in = 100.0;
        s.rhs = [](double, std::span<const double> x, const LagView&, std::span<double> dx) {
            constexpr double sigma = 10.0, rho = 28.0, beta = 8.0 / 3.0;
            dx[0] = sigma * (x[1] - x[0]);
            dx[1] = x[0] * (rho - x[2]) - x[1];
            dx[2] = x[0] * x[1] - beta * x[2];
        };
        break;
    case 3:
        s.name = "delayed_rossler";
        s.dimension = 3;
        s.delays = {1.0, 2.0};
        s.initial = {1.0, 1.0, 1.0};
        s.burn_in = 100.0;
        s.rhs = [](double, std::span<const double> x, const LagView& lag, std::span<double> dx) {
            constexpr double a1 = 0.2, a2 = 0.5, b1 = 0.2, b2 = 0.2, gamma = 5.7;
            dx[0] = -x[1] - x[2] + a1 * lag(0)[0] + a2 * lag(1)[0];
            dx[1] = x[0] + b1 * x[1];
            dx[2] = b2 + x[2] * (x[0] - gamma);
        };
        break;
    case 4:
        s.name = "ikeda";
        s.dimension = 1;
        s.delays = {1.59};
        s.initial = {0.5};
        s.burn_in = 100.0;
        s.rhs = [](double, std::span<const double> x, const LagView& lag, std::span<double> dx) {
            dx[0] = -x[0] + 6.0 * std::sin(lag(0)[0]);
        };
        break;
    case 5:
        s.name = "mackey_glass";
        s.dimension = 1;
        s.delays = {20.0};
        s.initial = {0.5};
        s.burn_in = 100.0;
        s.duration = 80.0;
        s.rhs = [](double, std::span<const double> x, const LagView& lag, std::span<double> dx) {
            constexpr double a = 0.2, b = 0.1;
            const double xd = lag(0)[0];
            const double xd2 = xd * xd, xd4 = xd2 * xd2, xd8 = xd4 * xd4;
            dx[0] = -b * x[0] + a * xd / (1.0 + xd8 * xd2);
        };
        break;
    default:
        fail(ErrorCode::unknown_system, "unknown system " + std::to_string(id) + " (expected 1..5)");
    }
    return s;
}

void write_csv(std::ostream& out, const TimeSeries& ts)
{
    out << 't';
    for (std::size_t j = 0; j < ts.cols; ++j)
        out << ",x" << (j + 1);
    out << '\n';
    char buf[40];
    for (std::size_t k = 0; k < ts.rows; ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", ts.time(k));
        out << buf;
        for (std::size_t j = 0; j < ts.cols; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", ts(k, j));
            out << ',' << buf;
        }
        out << '\n';
    }
}

void write_csv(const std::string& path, const TimeSeries& ts)
{
    std::ofstream out(path);
    if (!out)
        fail(ErrorCode::io, "cannot open " + path + " for writing");
    write_csv(out, ts);
    if (!out)
        fail(ErrorCode::io, "failed writing " + path);
}

TimeSeries read_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        fail(ErrorCode::parse, "empty trajectory file");
    if (line.empty() || line[0] != 't')
        fail(ErrorCode::parse, "trajectory header must start with 't'");
    const auto cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
    if (cols == 0)
        fail(ErrorCode::parse, "trajectory has no state columns");

    std::vector<double> times, values;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        const char* p = line.c_str();
        for (std::size_t j = 0; j <= cols; ++j) {
            char* end = nullptr;
            const double v = std::strtod(p, &end);
            if (end == p)
                fail(ErrorCode::parse, "bad number on line " + std::to_string(lineno));
            (j == 0 ? times : values).push_back(v);
            p = end;
            if (j < cols) {
                if (*p != ',')
                    fail(ErrorCode::parse, "too few columns on line " + std::to_string(lineno));
                ++p;
            }
        }
    }
    if (times.size() < 2)
        fail(ErrorCode::parse, "trajectory needs at least two samples");

    const double dt = tidy_step((times.back() - times.front()) / static_cast<double>(times.size() - 1));
    check_step(dt);
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double expect = times.front() + static_cast<double>(k) * dt;
        if (std::abs(times[k] - expect) > 1e-6 * dt + 1e-12 * std::abs(expect))
            fail(ErrorCode::parse, "samples are not uniformly spaced (row " + std::to_string(k + 1) + ")");
    }
    TimeSeries ts(times.front(), dt, times.size(), cols);
    ts.values = std::move(values);
    return ts;
}

TimeSeries read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::io, "cannot open " + path);
    return read_csv(in);
}

} // namespace ddeid
