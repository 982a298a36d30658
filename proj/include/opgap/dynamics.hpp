// dynamics.hpp — Time evolution of endpoint distributions, the return-probability
// autocorrelation, decay-rate fits and Monte-Carlo endpoint trajectories.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "opgap/chain_model.hpp"

namespace opgap {

enum class EvolutionBackend {
    stepping,  // fixed-step RK4 with h <= 0.1 / max|diag|
    spectral,  // exact, via the full hermitian eigendecomposition (small L only)
};

struct DistributionTrajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> distributions;  // n(x, t) per time

    std::vector<double> total_weight() const;
};

/// Largest chain the spectral backend accepts.
inline constexpr std::size_t kSpectralBackendMaxLength = 2000;

/// n(t) = exp(M t) n0 at each requested time (ascending, >= 0; n0 sits at t = 0).
/// The spectral backend loses relative accuracy once T(L)/T(1) approaches 1/epsilon.
DistributionTrajectory evolve_distribution(const TridiagonalOperator& op, const std::vector<double>& n0,
                                           const std::vector<double>& times,
                                           EvolutionBackend backend = EvolutionBackend::stepping);

struct Series {
    std::vector<double> times;
    std::vector<double> values;
};

/// C^2(t) = <1| exp(M t) |1>, divided by q^2 - 1 when q is given. Evaluated in the
/// hermitian frame, where T|1> = |1>. Edge geometry only; length 0 means auto-size.
Series autocorrelation(const ChainSpec& spec, const std::vector<double>& times, std::optional<int> q = std::nullopt,
                       EvolutionBackend backend = EvolutionBackend::stepping);

struct DecayFit {
    double rate = 0.0;
    double stderr_rate = 0.0;
    std::size_t points = 0;
};

/// Least-squares slope of -log(series) over t in [t_lo, t_hi]; needs >= 10 positive samples.
DecayFit fit_decay_rate(const Series& series, double t_lo, double t_hi);

/// Monte-Carlo endpoint walkers sampled on a fixed time grid.
struct TrajectoryEnsemble {
    std::vector<double> times;
    std::size_t walkers = 0;
    std::uint64_t seed = 0;
    // Row-major [walker][time].
    std::vector<std::int32_t> positions;
    std::vector<double> log_survival;  // s(t) = -gamma_d int_0^t x dt'

    std::int32_t position(std::size_t walker, std::size_t t) const { return positions[walker * times.size() + t]; }
    double survival(std::size_t walker, std::size_t t) const { return log_survival[walker * times.size() + t]; }

    /// Ensemble mean of e^{s(t)} and its standard error at each grid time.
    Series mean_survival() const;
    std::vector<double> mean_survival_stderr() const;
    /// Survival-weighted mean position at each grid time.
    std::vector<double> weighted_mean_position() const;
    std::vector<double> mean_position() const;
};

/// Continuous-time jump simulation from x = 1 with exact piecewise-linear
/// dissipation integrals. Walker i uses the substream (seed, i), so the result does
/// not depend on the thread count. The grid is `samples + 1` equally spaced times on
/// [0, horizon].
TrajectoryEnsemble sample_trajectories(const ChainSpec& spec, std::size_t walkers, double horizon,
                                       std::size_t samples, std::uint64_t seed, std::size_t threads = 0);

struct HalfLife {
    double t_half = 0.0;
    double mean_size = 0.0;  // survival-weighted mean position at t_half
};

/// First time the mean survival weight drops to 1/2 (log-linear interpolation on the grid).
HalfLife half_life(const TrajectoryEnsemble& ensemble);

struct HalfLifeScaling {
    std::vector<double> gammas;
    std::vector<HalfLife> points;
    double exponent = 0.0;  // t_half ~ gamma^exponent
    double exponent_stderr = 0.0;
    double size_exponent = 0.0;  // mean size at t_half ~ gamma^size_exponent
    double size_exponent_stderr = 0.0;
};

HalfLifeScaling half_life_scaling(const std::vector<double>& gammas, const std::vector<TrajectoryEnsemble>& ensembles);

struct SurvivalDistribution {
    double time = 0.0;
    std::vector<double> bin_edges;
    std::vector<std::size_t> counts;
    double mean = 0.0;
    double variance = 0.0;
};

/// Histogram and moments of the per-walker log-survival s(t) at the grid time nearest t.
SurvivalDistribution survival_log_distribution(const TrajectoryEnsemble& ensemble, double t, std::size_t bins = 40);

}  // namespace opgap
