// spectral.hpp — Low-lying spectrum of the hermitian endpoint generator, bound-state
// classification and unbinding-transition scans.
//
// Eigenvalues are located by Sturm-sequence bisection on A = -M~ (so they come out
// as ascending decay rates) and eigenvectors by a twisted factorisation evaluated in
// log space. The log form keeps the super-exponentially small tails of psi and the
// exponentially large original-frame weights representable for chains of 10^5..10^6
// sites.

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "opgap/chain_model.hpp"
#include "opgap/hermitization.hpp"

namespace opgap {

enum class ModeClass { bound, extended };

/// Eigenvector of a symmetric tridiagonal matrix stored as log|v| and sign(v), unit 2-norm.
struct LogVector {
    std::vector<double> log_abs;
    std::vector<signed char> sign;

    std::size_t size() const { return log_abs.size(); }
    /// Dense values; entries below the double range become 0.
    std::vector<double> values() const;
};

struct SpectralResult {
    std::vector<double> eigenvalues;  // ascending decay rates lambda_1 <= lambda_2 <= ...
    std::vector<LogVector> psi_log;   // hermitian-frame modes
    std::vector<std::vector<double>> psi_modes;
    std::vector<ScaledVector> phi_modes;  // original frame, max |phi| = 1
    std::vector<double> residuals;        // ||M~ psi + lambda psi||_2 per mode
    double operator_norm = 0.0;
    double gap = 0.0;

    // Filled by classify().
    std::vector<ModeClass> classifications;
    std::vector<bool> in_rounding_window;
    std::optional<double> xi;
};

/// Number of eigenvalues of A = -op strictly below sigma.
std::size_t sturm_count(const TridiagonalOperator& op, double sigma);

/// The k algebraically largest eigenvalues of a hermitian-frame operator, as decay
/// rates, with unit-norm eigenvectors (first nonzero entry positive). phi_modes equal
/// psi_modes rescaled; use the FrameParams overload for the original frame.
SpectralResult low_spectrum(const TridiagonalOperator& op, std::size_t k);
SpectralResult low_spectrum(const TridiagonalOperator& op, const FrameParams& fp, std::size_t k);

/// Eigenvalues only (no vectors), same ordering.
std::vector<double> low_eigenvalues(const TridiagonalOperator& op, std::size_t k);

/// Eigenvector for a known eigenvalue (decay rate) via the twisted factorisation.
LogVector tridiagonal_eigenvector(const TridiagonalOperator& op, double decay_rate);

/// Default chain length: max(20 w/gamma, x_max + 10 (w/gamma)^{1/3}), at least 64.
std::size_t auto_length(const ChainSpec& spec);

/// Returns spec with length filled by auto_length when it is zero.
ChainSpec with_auto_length(ChainSpec spec);

/// Localisation length from the exponential segment e^{-x/xi} of a mode that starts
/// just past the boundary region. Returns +inf when the mode does not decay there.
double fit_localization_length(const LogVector& mode, std::size_t boundary_extent);

/// Bound-state threshold constant c = |a_1|/2 in lambda_1 < Lambda - c (w gamma^2)^{1/3}.
inline constexpr double kBoundThresholdConstant = 2.338107410459767 / 2.0;

struct Classification {
    std::vector<ModeClass> classes;
    std::vector<bool> in_rounding_window;
    std::optional<double> xi;  // set when the slowest mode is bound
};

/// A mode is bound when more than half of its hermitian-frame weight sits within
/// x <= max(4 x0, 4 xi) and its decay rate is below Lambda - c (w gamma^2)^{1/3}.
Classification classify_mode(const SpectralResult& res, const FrameParams& fp, const ChainSpec& spec);

/// classify_mode and store the outcome in res.
void classify(SpectralResult& res, const FrameParams& fp, const ChainSpec& spec);

/// Spectrum of an edge/relative spec with auto-sized length, vectors in both frames, classified.
SpectralResult solve_spec(const ChainSpec& spec, std::size_t k);

struct BindingScanOptions {
    std::size_t scan_bond = 1;      // bond (x, x+1) whose rates are multiplied by g
    double window_factor = 1.0;     // exclude |g_c - g| <= window_factor * (gamma_d / w)^{1/3}
    double length_factor = 0.0;     // > 0: L = length_factor * w / gamma_d instead of auto_length
    std::size_t threads = 0;
};

struct BindingCurve {
    std::vector<double> g_values;
    std::vector<double> gamma_values;
    // Indexed [gamma][g].
    std::vector<std::vector<double>> gamma_of_g;
    std::vector<std::vector<double>> xi_of_g;
    double lambda = 0.0;
    double w = 0.0;
    std::vector<double> crossing_g;  // g where Gamma = Lambda, per gamma
    double g_c_estimate = 0.0;
    double g_c_uncertainty = 0.0;
    double rounding_slope = 0.0;     // b in g_c(gamma) = g_c + b gamma^{1/3}
    double binding_exponent = 0.0;
    double binding_exponent_stderr = 0.0;
    double xi_exponent = 0.0;
    double xi_exponent_stderr = 0.0;
    std::size_t exponent_points = 0;
};

/// Gamma(g) and xi(g) for every (gamma, g), the finite-gamma crossings Gamma = Lambda,
/// the gamma -> 0 extrapolation of g_c and the bound-side exponents at the smallest gamma.
BindingCurve binding_scan(const ChainSpec& templ, const std::vector<double>& g_grid,
                          const std::vector<double>& gamma_grid, const BindingScanOptions& options = {});

}  // namespace opgap
