#include "ddeid/swarm.hpp"

#include "ddeid/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ddeid {

namespace {

constexpr double infinity = std::numeric_limits<double>::infinity();

double sanitize(double v)
{
    return std::isnan(v) ? infinity : v;
}

template <typename Position, typename Init, typename Move, typename Objective>
auto run_swarm(const Objective& objective, std::size_t dim, const SwarmConfig& config, bool couples, Init init,
               Move move, const SwarmObserver<Position>& observer)
{
    validate(config);
    if (dim == 0)
        fail(ErrorCode::invalid_argument, "search space must have at least one dimension");

    const std::size_t n = config.population;
    const double vlim = config.velocity_limit;
    Rng rng(config.seed);

    std::vector<Position> x(n * dim), pbest(n * dim), gbest(dim);
    std::vector<double> v(n * dim), values(n), pbest_values(n);
    double gbest_value = infinity;
    std::size_t evaluations = 0;

    auto particle = [&](auto& buf, std::size_t i) { return std::span(buf.data() + i * dim, dim); };
    auto evaluate_all = [&] {
        for (std::size_t i = 0; i < n; ++i)
            values[i] = sanitize(objective(std::span<const Position>(particle(x, i))));
        evaluations += n;
    };
    auto notify = [&](std::size_t iteration) {
        if (!observer)
            return;
        SwarmSnapshot<Position> s;
        s.iteration = iteration;
        s.evaluations = evaluations;
        s.gbest_value = gbest_value;
        s.positions = x;
        s.velocities = v;
        s.values = values;
        s.pbest_values = pbest_values;
        observer(s);
    };

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < dim; ++d)
            x[i * dim + d] = init(d, rng);
        for (std::size_t d = 0; d < dim; ++d)
            v[i * dim + d] = rng.uniform(-vlim, vlim);
    }
    evaluate_all();
    pbest = x;
    pbest_values = values;
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (values[i] < values[best])
            best = i;
    gbest_value = values[best];
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(best * dim), dim, gbest.begin());
    notify(0);

    for (std::size_t it = 1; it <= config.iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            const Coefficients& c = (couples && i % 2 == 1) ? config.odd : config.even;
            update_velocity(particle(v, i), particle(x, i), particle(pbest, i), gbest, c, vlim, rng);
            move(particle(x, i), std::span<const double>(particle(v, i)), rng);
        }
        evaluate_all();
        for (std::size_t i = 0; i < n; ++i) {
            if (values[i] < pbest_values[i]) {
                pbest_values[i] = values[i];
                std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(i * dim), dim,
                            pbest.begin() + static_cast<std::ptrdiff_t>(i * dim));
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (pbest_values[i] < gbest_value) {
                gbest_value = pbest_values[i];
                std::copy_n(pbest.begin() + static_cast<std::ptrdiff_t>(i * dim), dim, gbest.begin());
            }
        }
        notify(it);
    }
    return std::tuple{std::move(gbest), gbest_value, evaluations};
}

} // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b)
{
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

SwarmConfig bpso_defaults(std::size_t max_terms)
{
    SwarmConfig c;
    c.population = max_terms;
    c.iterations = max_terms * max_terms;
    c.velocity_limit = 4.0;
    c.even = {0.6, 2.0, 2.0};
    c.odd = c.even;
    return c;
}

SwarmConfig cpso_defaults(std::size_t max_terms, std::size_t params_per_term)
{
    SwarmConfig c;
    c.population = max_terms * params_per_term;
    c.iterations = c.population * c.population;
    c.velocity_limit = 0.6;
    c.even = {0.2, 0.9, 1.5};
    c.odd = {0.3, 0.3, 1.5};
    return c;
}

void validate(const SwarmConfig& config)
{
    if (config.population < 1)
        fail(ErrorCode::invalid_argument, "swarm population must be at least 1");
    if (config.iterations < 1)
        fail(ErrorCode::invalid_argument, "swarm needs at least one iteration");
    if (!(config.velocity_limit > 0.0))
        fail(ErrorCode::invalid_argument, "velocity limit must be positive");
}

double sigmoid(double v)
{
    return 1.0 / (1.0 + std::exp(-v));
}

void update_velocity(std::span<double> velocity, std::span<const double> position, std::span<const double> pbest,
                     std::span<const double> gbest, const Coefficients& c, double velocity_limit, Rng& rng)
{
    for (std::size_t d = 0; d < velocity.size(); ++d) {
        const double r1 = rng.uniform();
        const double r2 = rng.uniform();
        const double nv = c.inertia * velocity[d] + c.cognitive * r1 * (pbest[d] - position[d]) +
                          c.social * r2 * (gbest[d] - position[d]);
        velocity[d] = std::clamp(nv, -velocity_limit, velocity_limit);
    }
}

void update_velocity(std::span<double> velocity, std::span<const std::uint8_t> position,
                     std::span<const std::uint8_t> pbest, std::span<const std::uint8_t> gbest,
                     const Coefficients& c, double velocity_limit, Rng& rng)
{
    for (std::size_t d = 0; d < velocity.size(); ++d) {
        const double r1 = rng.uniform();
        const double r2 = rng.uniform();
        const double x = position[d];
        const double nv = c.inertia * velocity[d] + c.cognitive * r1 * (pbest[d] - x) + c.social * r2 * (gbest[d] - x);
        velocity[d] = std::clamp(nv, -velocity_limit, velocity_limit);
    }
}

void move_continuous(std::span<double> position, std::span<const double> velocity, const Box& box)
{
    for (std::size_t d = 0; d < position.size(); ++d)
        position[d] = std::clamp(position[d] + velocity[d], box.lower[d], box.upper[d]);
}

void move_binary(std::span<std::uint8_t> bits, std::span<const double> velocity, Rng& rng)
{
    for (std::size_t d = 0; d < bits.size(); ++d)
        bits[d] = rng.uniform() < sigmoid(velocity[d]) ? 1 : 0;
}

ContinuousResult cpso_run(const ContinuousObjective& objective, const Box& box, const SwarmConfig& config,
                          const SwarmObserver<double>& observer)
{
    if (box.lower.size() != box.upper.size())
        fail(ErrorCode::invalid_argument, "box bounds have different lengths");
    for (std::size_t d = 0; d < box.size(); ++d)
        if (!(box.lower[d] <= box.upper[d]))
            fail(ErrorCode::invalid_argument, "box lower bound exceeds upper bound");
    auto init = [&](std::size_t d, Rng& rng) { return rng.uniform(box.lower[d], box.upper[d]); };
    auto move = [&](std::span<double> x, std::span<const double> v, Rng&) { move_continuous(x, v, box); };
    auto [pos, value, evals] = run_swarm<double>(objective, box.size(), config, true, init, move, observer);
    return {std::move(pos), value, evals};
}

BinaryResult bpso_run(const BinaryObjective& objective, std::size_t dim, const SwarmConfig& config,
                      const SwarmObserver<std::uint8_t>& observer)
{
    auto init = [](std::size_t, Rng& rng) { return static_cast<std::uint8_t>(rng.uniform() < 0.5 ? 1 : 0); };
    auto move = [](std::span<std::uint8_t> x, std::span<const double> v, Rng& rng) { move_binary(x, v, rng); };
    auto [bits, value, evals] = run_swarm<std::uint8_t>(objective, dim, config, false, init, move, observer);
    return {std::move(bits), value, evals};
}

} // namespace ddeid
