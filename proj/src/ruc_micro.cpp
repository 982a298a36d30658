#include "opgap/ruc_micro.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "opgap/numerics.hpp"

namespace opgap {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double exponential(std::mt19937_64& rng, double rate) { return -std::log1p(-uniform01(rng)) / rate; }

}  // namespace

ChainSpec RucParams::chain_fragment() const {
    ChainSpec s;
    s.geometry = geometry;
    s.q = q;
    if (geometry == Geometry::com) {
        s.w_plus = r;
        s.w_minus = r;
    } else {
        // ChainSpec applies the relative-geometry doubling itself.
        const double q2 = static_cast<double>(q) * q;
        s.w_plus = r * q2 / (q2 + 1.0);
        s.w_minus = r / (q2 + 1.0);
    }
    return s;
}

RucParams ruc_params(int q, double r, Geometry geometry) {
    if (q < 2) throw SpecError("local dimension q must be >= 2");
    if (!(r > 0.0) || !std::isfinite(r)) throw SpecError("gate rate r must be positive");
    RucParams p;
    p.q = q;
    p.r = r;
    p.geometry = geometry;
    const double q2 = static_cast<double>(q) * q;
    p.p = 1.0 / (q2 + 1.0);
    p.gamma_dressing = 1.0 - 1.0 / q2;
    if (geometry == Geometry::com) {
        p.w_plus = p.w_minus = r;
        p.a = 0.0;
        p.w = r;
        p.lambda = 0.0;
        return p;
    }
    const double f = geometry == Geometry::relative ? 2.0 : 1.0;
    p.w_plus = f * r * q2 / (q2 + 1.0);
    p.w_minus = f * r / (q2 + 1.0);
    p.a = 2.0 * std::log(static_cast<double>(q));
    p.w = std::sqrt(p.w_plus * p.w_minus);
    p.lambda = f * r * (q - 1.0) * (q - 1.0) / (q2 + 1.0);
    return p;
}

Eigen::MatrixXcd haar_gate_sample(int q, std::mt19937_64& rng) {
    const int d = q * q;
    std::normal_distribution<double> normal(0.0, std::numbers::sqrt2 / 2.0);
    Eigen::MatrixXcd g(d, d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) g(i, j) = {normal(rng), normal(rng)};
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd qm = qr.householderQ();
    const Eigen::MatrixXcd& r = qr.matrixQR();
    for (int j = 0; j < d; ++j) {
        const std::complex<double> rjj = r(j, j);
        const double mag = std::abs(rjj);
        qm.col(j) *= mag > 0.0 ? rjj / mag : std::complex<double>(1.0);
    }
    return qm;
}

Eigen::MatrixXcd generalized_pauli(int q, int j, int k) {
    Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(q, q);
    for (int s = 0; s < q; ++s) {
        const double angle = 2.0 * std::numbers::pi * k * s / q;
        op((s + j) % q, s) = std::polar(1.0, angle);
    }
    return op;
}

GateOracleReport endpoint_transition_estimate(int q, std::size_t samples, std::uint64_t seed,
                                              std::size_t threads) {
    if (q < 2) throw SpecError("local dimension q must be >= 2");
    if (samples < 10000) throw SpecError("endpoint transition estimate needs at least 1e4 samples");
    const int q2 = q * q;
    std::vector<double> weights(samples);
    parallel_for(samples, threads, [&](std::size_t i) {
        std::mt19937_64 rng(substream_seed(seed, i));
        // back site: any of the q^2 - 1 non-identity Paulis; forward site: any of q^2
        const auto back = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(q2 - 1));
        const auto fwd = static_cast<int>(rng() % static_cast<std::uint64_t>(q2));
        const Eigen::MatrixXcd pb = generalized_pauli(q, back / q, back % q);
        const Eigen::MatrixXcd pf = generalized_pauli(q, fwd / q, fwd % q);
        Eigen::MatrixXcd op(q2, q2);
        for (int a = 0; a < q; ++a)
            for (int b = 0; b < q; ++b) op.block(a * q, b * q, q, q) = pb(a, b) * pf;
        const Eigen::MatrixXcd u = haar_gate_sample(q, rng);
        const Eigen::MatrixXcd evolved = u * op * u.adjoint();
        // partial trace over the forward (second) site
        Eigen::MatrixXcd reduced = Eigen::MatrixXcd::Zero(q, q);
        for (int a = 0; a < q; ++a)
            for (int b = 0; b < q; ++b)
                for (int k = 0; k < q; ++k) reduced(a, b) += evolved(a * q + k, b * q + k);
        weights[i] = reduced.squaredNorm() / (static_cast<double>(q2) * q);
    });
    double sum = 0.0;
    for (double w : weights) sum += w;
    GateOracleReport rep;
    rep.samples = samples;
    rep.q = q;
    rep.seed = seed;
    rep.p_hat = sum / static_cast<double>(samples);
    rep.std_err = std::sqrt(rep.p_hat * (1.0 - rep.p_hat) / static_cast<double>(samples));
    return rep;
}

ComDiffusionReport com_diffusion_check(double r, double horizon, std::size_t walkers, std::uint64_t seed,
                                       std::size_t threads) {
    if (!(r > 0.0)) throw SpecError("gate rate r must be positive");
    if (walkers < 10000) throw SpecError("COM diffusion check needs at least 1e4 walkers");
    if (!(horizon * r >= 10.0)) throw SpecError("COM diffusion horizon too short (need t r >= 10)");
    std::vector<double> y(walkers);
    parallel_for(walkers, threads, [&](std::size_t i) {
        std::mt19937_64 rng(substream_seed(seed, i));
        double t = exponential(rng, 2.0 * r);
        long steps = 0;
        while (t <= horizon) {
            steps += (rng() >> 63) ? 1 : -1;
            t += exponential(rng, 2.0 * r);
        }
        y[i] = 0.5 * static_cast<double>(steps);
    });
    const double n = static_cast<double>(walkers);
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double v : y) {
        const double d = v - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    const double var = m2 * n / (n - 1.0);
    ComDiffusionReport rep;
    rep.walkers = walkers;
    rep.horizon = horizon;
    rep.mean = mean;
    rep.mean_stderr = std::sqrt(var / n);
    rep.d_hat = var / (2.0 * horizon);
    rep.d_stderr = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n) / (2.0 * horizon);
    return rep;
}

GateConfigurationCounts simulate_gate_endpoints(const RucParams& params, double horizon, std::uint64_t seed) {
    if (!(horizon > 0.0)) throw SpecError("horizon must be positive");
    std::mt19937_64 rng(substream_seed(seed, 0));
    GateConfigurationCounts c;
    c.horizon = horizon;
    const double grow = 1.0 - params.p;
    for (double t = exponential(rng, 4.0 * params.r); t <= horizon; t += exponential(rng, 4.0 * params.r)) {
        const auto config = static_cast<std::size_t>(rng() >> 62);
        ++c.events[config];
        const double u = uniform01(rng);
        if (config == 0 && u < grow) ++c.right_forward_hops;
        if (config == 1 && u < params.p) ++c.right_backward_hops;
    }
    return c;
}

double mean_single_site_decay(int q, double gamma) {
    const double q2 = static_cast<double>(q) * q;
    // q^2 - 1 traceless basis elements decay at gamma, the identity at 0.
    return ((q2 - 1.0) * gamma + 0.0) / q2;
}

}  // namespace opgap
