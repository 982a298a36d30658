// acceptance.cpp — End-to-end acceptance checks, one PASS/FAIL line per criterion.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "opgap/chain_model.hpp"
#include "opgap/continuum.hpp"
#include "opgap/dynamics.hpp"
#include "opgap/hermitization.hpp"
#include "opgap/numerics.hpp"
#include "opgap/ruc_micro.hpp"
#include "opgap/spectral.hpp"
#include "oracles.hpp"

using namespace opgap;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ChainSpec qubit_like(double gamma, double g = 1.0) {
    ChainSpec s;
    s.w_plus = 4.0;
    s.w_minus = 1.0;
    s.gamma = gamma;
    s.boundary_extent = 1;
    if (g != 1.0) s.bond_overrides[1] = g;
    return s;
}

double airy_energy(const ChainSpec& s) {
    const FrameParams fp = frame_params(with_auto_length(s));
    return std::cbrt(fp.w * s.dressed_gamma() * s.dressed_gamma());
}

// 1
Outcome similarity_invariance() {
    std::mt19937_64 rng(20240611);
    double worst_ours = 0.0, worst_dense = 0.0, worst_plain = 0.0, worst_imag = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const ChainSpec s = testing::random_spec(rng, 200);
        const TridiagonalOperator m = build_generator(s);
        const TridiagonalOperator h = hermitize(m, frame_params(s));
        const auto general = testing::dense_general_decay_rates(m);
        const auto plain = testing::dense_general_decay_rates(m, false);
        const auto symmetric = testing::dense_symmetric_decay_rates(h);
        const auto ours = low_eigenvalues(h, s.length);
        worst_imag = std::max(worst_imag, general.max_imag);
        for (std::size_t i = 0; i < s.length; ++i) {
            const double ref = general.decay_rates[i];
            worst_ours = std::max(worst_ours, std::abs(ours[i] - ref) / std::abs(ref));
            worst_dense = std::max(worst_dense, std::abs(symmetric[i] - ref) / std::abs(ref));
            worst_plain = std::max(worst_plain, std::abs(plain.decay_rates[i] - ours[i]) / std::abs(ours[i]));
        }
    }
    const double worst = std::max(worst_ours, worst_dense);
    return {worst < 1e-10,
            fmt("max rel diff vs dgeev(Osborne-balanced M): Sturm(M~) %.2e, dense(M~) %.2e, max |Im| %.1e (tol "
                "1e-10); unbalanced dgeev(M) strays by up to %.2e",
                worst_ours, worst_dense, worst_imag, worst_plain)};
}

// 2
Outcome airy_gap() {
    const double a1 = -airy_zero(1);
    double r3 = 0.0, r4 = 0.0;
    for (double gamma : {1e-3, 1e-4}) {
        const ChainSpec s = with_auto_length(qubit_like(gamma));
        const FrameParams fp = frame_params(s);
        const double lam = low_eigenvalues(hermitian_generator(s), 1).front();
        const double ratio = (lam - fp.lambda) / airy_energy(s);
        (gamma == 1e-3 ? r3 : r4) = ratio;
    }
    const double d3 = std::abs(r3 / a1 - 1.0), d4 = std::abs(r4 / a1 - 1.0);
    return {d3 < 0.05 && d4 < 0.02,
            fmt("(l1-Lambda)/(w g^2)^(1/3) = %.5f at 1e-3 (dev %.2f%%, tol 5%%), %.5f at 1e-4 (dev %.2f%%, tol 2%%)",
                r3, 100 * d3, r4, 100 * d4)};
}

// 3
Outcome excited_spacing() {
    const ChainSpec s = with_auto_length(qubit_like(1e-3));
    const ContinuumModel cm = continuum_model(s);
    const auto lam = low_eigenvalues(hermitian_generator(s), 5);
    double worst = 0.0;
    std::string levels;
    for (int n = 1; n <= 5; ++n) {
        const double pred = continuum_eigenvalue(cm, n);
        const double dev = std::abs(lam[n - 1] - pred) / (pred - cm.lambda);
        worst = std::max(worst, dev);
        levels += fmt(" %.2f%%", 100 * dev);
    }
    return {worst < 0.10, "per-level deviation from Lambda - a_n E:" + levels + " (tol 10%)"};
}

// 4
Outcome mode_peak_location() {
    const ChainSpec s = with_auto_length(qubit_like(1e-3));
    const SpectralResult res = solve_spec(s, 1);
    const auto& phi = res.phi_modes.front().values;
    std::size_t arg = 0;
    for (std::size_t i = 1; i < phi.size(); ++i)
        if (phi[i] > phi[arg]) arg = i;
    const ContinuumModel cm = continuum_model(s);
    const double xmax = mode_peak(cm, 1);
    const double tol = 2.0 * cm.airy_length();
    const double diff = static_cast<double>(arg + 1) - xmax;
    return {std::abs(diff) <= tol, fmt("argmax phi_1 = %zu, X_max = %.2f, |diff| = %.2f (tol %.2f sites)", arg + 1,
                                       xmax, std::abs(diff), tol)};
}

BindingCurve threshold_scan() {
    std::vector<double> g;
    for (int i = 0; i <= 17; ++i) g.push_back(0.26 + 0.005 * i);
    return binding_scan(qubit_like(1e-2), g, {1e-4, 1e-3, 1e-2});
}

// 5
Outcome unbinding_threshold(const BindingCurve& c) {
    const double dev = std::abs(c.g_c_estimate * 3.0 - 1.0);
    return {dev < 0.02, fmt("crossings %.5f %.5f %.5f (gamma 1e-4, 1e-3, 1e-2) -> g_c = %.5f +- %.5f, dev %.2f%% "
                            "(tol 2%%)",
                            c.crossing_g[0], c.crossing_g[1], c.crossing_g[2], c.g_c_estimate, c.g_c_uncertainty,
                            100 * dev)};
}

// 6
Outcome critical_exponents() {
    std::vector<double> g;
    for (int i = 0; i <= 20; ++i) g.push_back(0.315 + 0.001 * i);
    BindingScanOptions opt;
    opt.length_factor = 2.0;
    const BindingCurve c = binding_scan(qubit_like(1e-6), g, {1e-6, 1e-5, 1e-4}, opt);
    const bool ok = std::abs(c.binding_exponent - 2.0) <= 0.2 && std::abs(c.xi_exponent + 1.0) <= 0.2;
    return {ok, fmt("gamma=1e-6, %zu points outside the rounding window, g_c = %.5f: binding exponent %.3f +- %.3f "
                    "(2.0 +- 0.2), xi exponent %.3f +- %.3f (-1.0 +- 0.2)",
                    c.exponent_points, c.g_c_estimate, c.binding_exponent, c.binding_exponent_stderr, c.xi_exponent,
                    c.xi_exponent_stderr)};
}

// 7
Outcome ruc_oracle() {
    bool ok = true;
    std::string detail;
    for (int q : {2, 3}) {
        const GateOracleReport r = endpoint_transition_estimate(q, 100000, 7000 + q);
        const double p = 1.0 / (q * q + 1.0);
        const double z = (r.p_hat - p) / r.std_err;
        ok = ok && std::abs(z) <= 3.0;
        detail += fmt("q=%d p_hat=%.5f (p=%.5f, z=%+.2f); ", q, r.p_hat, p, z);
    }
    const ComDiffusionReport d = com_diffusion_check(1.0, 100.0, 10000, 99);
    const double z = (d.d_hat - 0.25) / d.d_stderr;
    ok = ok && std::abs(z) <= 3.0;
    detail += fmt("D_COM=%.4f +- %.4f (r/4=0.25, z=%+.2f); tol 3 sigma", d.d_hat, d.d_stderr, z);
    return {ok, detail};
}

// 8
Outcome edge_bulk_factor() {
    ChainSpec edge = with_auto_length(qubit_like(1e-4));
    ChainSpec rel = qubit_like(1e-4);
    rel.geometry = Geometry::relative;
    rel = with_auto_length(rel);
    const double ge = low_eigenvalues(hermitian_generator(edge), 1).front();
    const double gr = low_eigenvalues(hermitian_generator(rel), 1).front();
    const double ratio = gr / ge;
    return {std::abs(ratio / 2.0 - 1.0) < 0.02,
            fmt("gap relative/edge at gamma=1e-4: %.5f / %.5f = %.5f (2 within 2%%)", gr, ge, ratio)};
}

// 9
Outcome correlation_gap() {
    bool ok = true;
    std::string detail;
    for (double g : {0.1, 1.0}) {
        const ChainSpec s = with_auto_length(qubit_like(1e-2, g));
        const double lam = low_eigenvalues(hermitian_generator(s), 1).front();
        double lo = 0.0, hi = 0.0;
        if (g < 1.0) {
            lo = 5.0 / lam;
            hi = 10.0 / lam;
        } else {
            lo = 80.0;
            hi = 160.0;
        }
        std::vector<double> times;
        for (int i = 0; i <= 400; ++i) times.push_back(hi * i / 400.0);
        const Series c2 = autocorrelation(s, times);
        const DecayFit f = fit_decay_rate(c2, lo, hi);
        const double dev = std::abs(f.rate / lam - 1.0);
        ok = ok && dev < 0.01;
        detail += fmt("%s: fit %.6f vs lambda_1 %.6f over t in [%.1f, %.1f] (dev %.3f%%); ",
                      g < 1.0 ? "bound g=0.1" : "unbound g=1", f.rate, lam, lo, hi, 100 * dev);
    }
    return {ok, detail + "tol 1%"};
}

// 10
Outcome half_life_scaling_check() {
    const RucParams rp = ruc_params(2, 1.0, Geometry::edge);
    std::vector<double> gammas;
    std::vector<TrajectoryEnsemble> ens;
    for (double f : {1e-5, 1e-4, 1e-3, 1e-2}) {
        ChainSpec s = rp.chain_fragment();
        s.gamma = f * rp.w_minus;
        s.use_dressed_rate = true;
        const double vb = rp.w_plus - rp.w_minus;
        const double t_est = std::sqrt(2.0 * std::numbers::ln2 / (s.dressed_gamma() * vb));
        const double horizon = 2.5 * t_est;
        s.length = static_cast<std::size_t>(2.0 * vb * horizon) + 200;
        gammas.push_back(s.gamma);
        ens.push_back(sample_trajectories(s, 10000, horizon, 500, 4242 + static_cast<std::uint64_t>(gammas.size())));
    }
    const HalfLifeScaling sc = half_life_scaling(gammas, ens);
    const bool ok = std::abs(sc.exponent + 0.5) <= 0.05 && std::abs(sc.size_exponent + 0.5) <= 0.05;
    return {ok, fmt("q=2 edge rates, gamma/w- in 1e-5..1e-2, 1e4 walkers: t_half exponent %.4f +- %.4f, size exponent "
                    "%.4f +- %.4f (-0.5 +- 0.05)",
                    sc.exponent, sc.exponent_stderr, sc.size_exponent, sc.size_exponent_stderr)};
}

// 11
Outcome feynman_kac() {
    std::vector<ChainSpec> specs;
    {
        ChainSpec a = qubit_like(1e-2);
        a.length = 400;
        specs.push_back(a);
        ChainSpec b = qubit_like(1e-2, 0.1);
        b.length = 400;
        specs.push_back(b);
        ChainSpec c = ruc_params(2, 1.0, Geometry::relative).chain_fragment();
        c.gamma = 0.05;
        c.use_dressed_rate = true;
        c.length = 400;
        specs.push_back(c);
    }
    const std::vector<double> times = {2.0, 5.0, 10.0, 15.0, 20.0};
    double worst = 0.0;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const ChainSpec& s = specs[k];
        std::vector<double> n0(s.length, 0.0);
        n0[0] = 1.0;
        const auto det = evolve_distribution(build_generator(s), n0, times).total_weight();
        const TrajectoryEnsemble e = sample_trajectories(s, 10000, 20.0, 20, 1100 + k);
        const Series m = e.mean_survival();
        const auto se = e.mean_survival_stderr();
        for (std::size_t i = 0; i < times.size(); ++i) {
            std::size_t j = 0;
            while (std::abs(e.times[j] - times[i]) > 1e-12) ++j;
            worst = std::max(worst, std::abs(m.values[j] - det[i]) / se[j]);
        }
    }
    return {worst <= 3.0, fmt("3 specs x 5 times, 1e4 walkers: max |MC - deterministic| = %.2f sigma (tol 3)", worst)};
}

// 12
Outcome conservation() {
    ChainSpec s = qubit_like(0.0);
    s.length = 200;
    std::vector<double> n0(s.length, 0.0);
    n0[0] = 1.0;
    std::vector<double> times;
    for (int i = 1; i <= 100; ++i) times.push_back(static_cast<double>(i));
    const auto tw = evolve_distribution(build_generator(s), n0, times).total_weight();
    double drift = 0.0;
    for (double w : tw) drift = std::max(drift, std::abs(w - 1.0));

    std::mt19937_64 rng(777);
    double worst_col = 0.0;
    std::size_t exact = 0, total = 0;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        ChainSpec d;
        d.length = 2 + static_cast<std::size_t>(u(rng) * 300);
        d.w_minus = 0.01 + 0.3 * u(rng);
        d.w_plus = d.w_minus + (0.98 - 2 * d.w_minus) * u(rng) + 1e-3;
        d.boundary_extent = 2;
        if (d.length > 3) d.bond_overrides[2] = 0.1 + 0.9 * u(rng);
        const auto cols = build_discrete_step(d).column_sums();
        for (double c : cols) {
            worst_col = std::max(worst_col, std::abs(c - 1.0));
            exact += c == 1.0;
            ++total;
        }
    }
    return {drift <= 1e-8 && worst_col == 0.0,
            fmt("gamma=0, w- t = 100: max |total weight - 1| = %.2e (tol 1e-8); discrete columns equal to 1: %zu/%zu",
                drift, exact, total)};
}

// 13
Outcome tail_law() {
    ChainSpec s = qubit_like(1e-2);
    const double ratio = 2.0 / 1e-2;
    s.length = static_cast<std::size_t>(200 * ratio);
    const TridiagonalOperator h = hermitian_generator(s);
    const SpectralResult res = low_spectrum(h, 1);
    const auto& la = res.psi_log.front().log_abs;
    std::vector<double> x, y;
    for (std::size_t k = static_cast<std::size_t>(50 * ratio); k <= static_cast<std::size_t>(180 * ratio); k += 50) {
        x.push_back(std::log(static_cast<double>(k)));
        y.push_back(-la[k - 1] / static_cast<double>(k));
    }
    const LineFit f = fit_line(x, y);
    return {std::abs(f.slope - 1.0) <= 0.1,
            fmt("gamma=1e-2, L=%zu, k in [%g, %g]: slope of -log psi_1(k)/k vs log k = %.4f (1.0 +- 0.1)", s.length,
                50 * ratio, 180 * ratio, f.slope)};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failures;
        std::printf("%s [%2d] %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
        std::fflush(stdout);
    };
    report(1, "similarity invariance", similarity_invariance);
    report(2, "Airy gap convergence", airy_gap);
    report(3, "excited spacing", excited_spacing);
    report(4, "mode peak", mode_peak_location);
    BindingCurve scan;
    report(5, "unbinding threshold", [&] {
        scan = threshold_scan();
        return unbinding_threshold(scan);
    });
    report(6, "critical exponents", critical_exponents);
    report(7, "RUC oracle", ruc_oracle);
    report(8, "edge/bulk factor", edge_bulk_factor);
    report(9, "correlation-gap match", correlation_gap);
    report(10, "half-life scaling", half_life_scaling_check);
    report(11, "Feynman-Kac consistency", feynman_kac);
    report(12, "conservation", conservation);
    report(13, "discrete tail law", tail_law);
    std::printf("%d of 13 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
