#include "opgap/hermitization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace opgap {

double FrameParams::t(std::size_t index) const { return std::exp(log_t.at(index)); }

std::vector<double> FrameParams::t_diag() const {
    std::vector<double> out(log_t.size());
    std::transform(log_t.begin(), log_t.end(), out.begin(), [](double l) { return std::exp(l); });
    return out;
}

FrameParams frame_params(const ChainSpec& spec) {
    const BondRates r = bond_rates(spec);
    const double f = spec.geometry_factor();
    const double wp = f * spec.w_plus;
    const double wm = f * spec.w_minus;

    FrameParams fp;
    fp.a = std::log(wp / wm);
    fp.w = std::sqrt(wp * wm);
    const double d = std::sqrt(wp) - std::sqrt(wm);
    fp.lambda = d * d;

    fp.log_t.assign(spec.length, 0.0);
    for (std::size_t i = 0; i + 1 < spec.length; ++i) {
        if (!(r.forward[i] > 0.0) || !(r.backward[i] > 0.0))
            throw SpecError("non-positive rate on bond " + std::to_string(i + 1));
        fp.log_t[i + 1] = fp.log_t[i] + 0.5 * std::log(r.forward[i] / r.backward[i]);
    }
    return fp;
}

std::vector<double> log_similarity_weights(const TridiagonalOperator& op) {
    const std::size_t n = op.size();
    std::vector<double> lt(n, 0.0);
    if (op.frame == Frame::hermitian) return lt;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!(op.sub[i] > 0.0) || !(op.sup[i] > 0.0))
            throw SpecError("similarity transform needs positive off-diagonal rates");
        lt[i + 1] = lt[i] + 0.5 * std::log(op.sub[i] / op.sup[i]);
    }
    return lt;
}

TridiagonalOperator hermitize(const TridiagonalOperator& op, const FrameParams& fp) {
    if (op.frame == Frame::hermitian) throw SpecError("operator is already in the hermitian frame");
    if (fp.size() != op.size()) throw SpecError("frame parameters do not match operator size");

    TridiagonalOperator h;
    h.frame = Frame::hermitian;
    h.time_kind = op.time_kind;
    h.diag = op.diag;
    h.sub.resize(op.sub.size());
    for (std::size_t i = 0; i < op.sub.size(); ++i) {
        if (!(op.sub[i] > 0.0) || !(op.sup[i] > 0.0))
            throw SpecError("similarity transform needs positive off-diagonal rates");
        h.sub[i] = std::sqrt(op.sub[i] * op.sup[i]);
    }
    h.sup = h.sub;
    return h;
}

TridiagonalOperator hermitian_generator(const ChainSpec& spec) {
    return hermitize(build_generator(spec), frame_params(spec));
}

std::vector<double> to_original_frame(std::span<const double> psi, const FrameParams& fp) {
    if (psi.size() != fp.size()) throw SpecError("vector length does not match frame parameters");
    std::vector<double> phi(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) {
        phi[i] = psi[i] == 0.0 ? 0.0 : std::exp(fp.log_t[i]) * psi[i];
    }
    return phi;
}

ScaledVector to_original_frame_scaled(std::span<const double> log_abs_psi,
                                      std::span<const signed char> sign_psi,
                                      const FrameParams& fp) {
    if (log_abs_psi.size() != fp.size() || sign_psi.size() != fp.size())
        throw SpecError("vector length does not match frame parameters");
    const std::size_t n = fp.size();
    ScaledVector out;
    out.values.assign(n, 0.0);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) top = std::max(top, log_abs_psi[i] + fp.log_t[i]);
    if (!std::isfinite(top)) return out;
    out.log_scale = top;
    for (std::size_t i = 0; i < n; ++i) {
        out.values[i] = sign_psi[i] * std::exp(log_abs_psi[i] + fp.log_t[i] - top);
    }
    return out;
}

}  // namespace opgap
