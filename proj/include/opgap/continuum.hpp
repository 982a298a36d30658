// continuum.hpp — Airy-function theory of the hermitian-frame bulk: Ai(z), its zeros,
// continuum eigenvalues and modes, mode peaks and tail asymptotics.

#pragma once

#include <cstddef>

#include "opgap/chain_model.hpp"

namespace opgap {

/// Ai(z) for |z| <= 200. Maclaurin series (extended precision) on [-7.5, 2.2],
/// the K_{1/3} continued fraction above 2.2 and the oscillatory asymptotic
/// expansion below -7.5. Values below the double range underflow to 0.
double airy_ai(double z);

/// log Ai(z) for z >= 0, finite where Ai itself underflows.
double log_airy_ai(double z);

/// n-th zero a_n < 0 of Ai, 1 <= n <= 100.
double airy_zero(int n);

/// Coarse-grained bulk parameters of a chain (geometry factor included).
struct ContinuumModel {
    double a = 0.0;
    double w = 0.0;
    double lambda = 0.0;
    double gamma = 0.0;  // dressed rate entering the linear potential
    double v_b = 0.0;    // w_plus - w_minus
    double diffusion = 0.0;  // (w_plus + w_minus) / 2

    /// (w / gamma)^{1/3}, the Airy length.
    double airy_length() const;
    /// (w gamma^2)^{1/3}, the Airy energy.
    double airy_energy() const;
};

ContinuumModel continuum_model(const ChainSpec& spec);

/// lambda_n = Lambda - a_n (w gamma^2)^{1/3}.
double continuum_eigenvalue(const ContinuumModel& m, int n);

struct ContinuumModeValue {
    double psi = 0.0;
    double phi = 0.0;          // e^{a x / 2} psi; may overflow to inf
    double log_abs_phi = 0.0;  // finite whenever psi != 0
};

/// psi_n(x) = Ai[(gamma/w)^{1/3} (x - (lambda_n - Lambda)/gamma)], phi_n = e^{a x/2} psi_n.
ContinuumModeValue continuum_mode(const ContinuumModel& m, int n, double x);

/// X_max = a^2 w / (4 gamma) - a_n (w / gamma)^{1/3}.
double mode_peak(const ContinuumModel& m, int n);

struct TailPrediction {
    double discrete = 0.0;    // k (log k - log(e w / gamma))
    double continuum = 0.0;   // (2/3) (gamma / w)^{1/2} x^{3/2}, hermitian frame
};

/// Predicted -log psi far beyond the mode bulk; requires x > 10 w / gamma.
TailPrediction tail_asymptote(const ChainSpec& spec, double x);

/// Position where the zero-energy bulk solution of the gamma = 0 chain extrapolates
/// to zero: the effective Dirichlet point of the discrete boundary (x = 0 would be
/// the ideal wall). Meaningful for unbound boundaries.
double effective_dirichlet_point(const ChainSpec& spec);

}  // namespace opgap
