#ifndef DDEID_SWARM_HPP
#define DDEID_SWARM_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace ddeid {

/// 64-bit Mersenne Twister with a platform-independent [0, 1) mapping.
class Rng
{
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

struct Coefficients
{
    double inertia = 0.0;
    double cognitive = 0.0;
    double social = 0.0;
};

struct SwarmConfig
{
    std::size_t population = 2;
    std::size_t iterations = 1;
    double velocity_limit = 1.0;
    Coefficients even; // every particle in BPSO; even-index particles in CPSO
    Coefficients odd;  // odd-index particles in CPSO
    std::uint64_t seed = 0;
};

/// Outer binary swarm defaults: N = M, I = N^2, V_lim = 4, w = 0.6, c1 = c2 = 2.
SwarmConfig bpso_defaults(std::size_t max_terms);
/// Inner couple-based swarm defaults: N = M*n_p, I = N^2, V_lim = 0.6,
/// (w, c1, c2) = (0.2, 0.9, 1.5) for even particles and (0.3, 0.3, 1.5) for odd ones.
SwarmConfig cpso_defaults(std::size_t max_terms, std::size_t params_per_term);

void validate(const SwarmConfig& config);

struct Box
{
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t size() const { return lower.size(); }
};

double sigmoid(double v);

/// v <- w v + c1 r1 o (pbest - x) + c2 r2 o (gbest - x), clamped to [-vlim, vlim].
void update_velocity(std::span<double> velocity, std::span<const double> position, std::span<const double> pbest,
                     std::span<const double> gbest, const Coefficients& c, double velocity_limit, Rng& rng);

/// Same rule for bit positions.
void update_velocity(std::span<double> velocity, std::span<const std::uint8_t> position,
                     std::span<const std::uint8_t> pbest, std::span<const std::uint8_t> gbest,
                     const Coefficients& c, double velocity_limit, Rng& rng);

/// x <- x + v, clamped to the box.
void move_continuous(std::span<double> position, std::span<const double> velocity, const Box& box);

/// Each bit becomes 1 with probability sigmoid(v).
void move_binary(std::span<std::uint8_t> bits, std::span<const double> velocity, Rng& rng);

/// State after initialization (iteration 0) and after every iteration.
template <typename Position>
struct SwarmSnapshot
{
    std::size_t iteration = 0;
    std::size_t evaluations = 0;
    double gbest_value = 0.0;
    std::span<const Position> positions;      // population * dim
    std::span<const double> velocities;       // population * dim
    std::span<const double> values;           // current objective values
    std::span<const double> pbest_values;
};

template <typename Position>
using SwarmObserver = std::function<void(const SwarmSnapshot<Position>&)>;

struct ContinuousResult
{
    std::vector<double> best_position;
    double best_value = 0.0;
    std::size_t evaluations = 0;
};

struct BinaryResult
{
    std::vector<std::uint8_t> best_bits;
    double best_value = 0.0;
    std::size_t evaluations = 0;
};

using ContinuousObjective = std::function<double(std::span<const double>)>;
using BinaryObjective = std::function<double(std::span<const std::uint8_t>)>;

ContinuousResult cpso_run(const ContinuousObjective& objective, const Box& box, const SwarmConfig& config,
                          const SwarmObserver<double>& observer = {});

BinaryResult bpso_run(const BinaryObjective& objective, std::size_t dim, const SwarmConfig& config,
                      const SwarmObserver<std::uint8_t>& observer = {});

} // namespace ddeid

#endif
