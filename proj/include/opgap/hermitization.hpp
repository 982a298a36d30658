// hermitization.hpp — Diffusion-frame similarity transform T and coarse-grained parameters

#pragma once

#include <span>
#include <vector>

#include "opgap/chain_model.hpp"

namespace opgap {

/// Bulk parameters of the diffusion frame plus the per-site similarity weights.
///
/// a, w and lambda always describe the bulk rates (geometry factor included);
/// bond overrides only enter the site weights. The weights are kept as
/// logarithms because T(x) grows like exp(a x / 2) and overflows a double for
/// long chains; T(1) = 1 exactly.
struct FrameParams {
    double a = 0.0;       // e^a = w_plus / w_minus
    double w = 0.0;       // sqrt(w_plus w_minus)
    double lambda = 0.0;  // (sqrt(w_plus) - sqrt(w_minus))^2
    std::vector<double> log_t;

    std::size_t size() const { return log_t.size(); }
    double t(std::size_t index) const;
    /// exp(log_t); entries may be +inf for very long biased chains.
    std::vector<double> t_diag() const;
};

FrameParams frame_params(const ChainSpec& spec);

/// Site weights implied by an original-frame operator: T(x+1)/T(x) = sqrt(sub/sup).
std::vector<double> log_similarity_weights(const TridiagonalOperator& op);

/// T^{-1} M T: symmetric off-diagonals sqrt(forward * backward), unchanged diagonal.
TridiagonalOperator hermitize(const TridiagonalOperator& op, const FrameParams& fp);

/// Convenience: hermitize(build_generator(spec), frame_params(spec)).
TridiagonalOperator hermitian_generator(const ChainSpec& spec);

/// phi(x) = T(x) psi(x). Overflows to inf where T does; see to_original_frame_scaled.
std::vector<double> to_original_frame(std::span<const double> psi, const FrameParams& fp);

/// Original-frame vector rescaled so that max |phi| = 1, with the scale kept in log form.
struct ScaledVector {
    std::vector<double> values;
    double log_scale = 0.0;  // true vector = values * exp(log_scale)
};

/// Same transform evaluated from log|psi| and sign(psi), immune to overflow and underflow.
ScaledVector to_original_frame_scaled(std::span<const double> log_abs_psi,
                                      std::span<const signed char> sign_psi,
                                      const FrameParams& fp);

}  // namespace opgap
