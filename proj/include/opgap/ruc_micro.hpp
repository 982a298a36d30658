// ruc_micro.hpp — Endpoint rates of continuous-time Haar random circuits and the
// Monte-Carlo oracles that check them.

#pragma once

#include <array>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "opgap/chain_model.hpp"

namespace opgap {

struct RucParams {
    int q = 2;
    double r = 1.0;  // gate rate per dual-lattice site
    Geometry geometry = Geometry::edge;

    double p = 0.0;  // probability that the forward site is the identity, 1/(q^2+1)
    double w_plus = 0.0;
    double w_minus = 0.0;
    double a = 0.0;
    double w = 0.0;
    double lambda = 0.0;
    double gamma_dressing = 0.0;  // 1 - 1/q^2

    /// Rate fields of a ChainSpec for this circuit; length and gamma are left to the caller.
    ChainSpec chain_fragment() const;
};

RucParams ruc_params(int q, double r, Geometry geometry);

/// Haar-random unitary on two q-level sites (q^2 x q^2), Ginibre QR with phase fix.
Eigen::MatrixXcd haar_gate_sample(int q, std::mt19937_64& rng);

/// Clock-and-shift operator X^j Z^k on one site.
Eigen::MatrixXcd generalized_pauli(int q, int j, int k);

struct GateOracleReport {
    std::size_t samples = 0;
    double p_hat = 0.0;
    double std_err = 0.0;  // sqrt(p_hat (1 - p_hat) / samples)
    int q = 2;
    std::uint64_t seed = 0;
};

/// Mean weight, after one Haar gate, on strings whose forward site is the identity,
/// starting from a random generalized Pauli with non-identity back site.
GateOracleReport endpoint_transition_estimate(int q, std::size_t samples, std::uint64_t seed,
                                              std::size_t threads = 0);

struct ComDiffusionReport {
    double d_hat = 0.0;
    double d_stderr = 0.0;
    double mean = 0.0;
    double mean_stderr = 0.0;
    double horizon = 0.0;
    std::size_t walkers = 0;
};

/// Centre-of-mass walk with +-1/2 jumps at rate r each; D estimated as Var(Y)/(2t).
ComDiffusionReport com_diffusion_check(double r, double horizon, std::size_t walkers, std::uint64_t seed,
                                       std::size_t threads = 0);

/// Gate events seen by an isolated pair of endpoints: one gate per dual-lattice
/// bond adjacent to each endpoint, each at rate r. Index order: right-expand,
/// right-contract, left-expand, left-contract.
struct GateConfigurationCounts {
    std::array<std::uint64_t, 4> events{};
    std::uint64_t right_forward_hops = 0;
    std::uint64_t right_backward_hops = 0;
    double horizon = 0.0;
};

GateConfigurationCounts simulate_gate_endpoints(const RucParams& params, double horizon, std::uint64_t seed);

/// Average decay rate of a uniformly random single-site basis operator when every
/// traceless basis element decays at rate gamma and the identity does not.
double mean_single_site_decay(int q, double gamma);

}  // namespace opgap
