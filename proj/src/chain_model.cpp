#include "opgap/chain_model.hpp"

#include <algorithm>
#include <cmath>

namespace opgap {

std::string to_string(Geometry g) {
    switch (g) {
        case Geometry::edge: return "edge";
        case Geometry::relative: return "relative";
        case Geometry::com: return "com";
    }
    return "edge";
}

Geometry parse_geometry(const std::string& s) {
    if (s == "edge") return Geometry::edge;
    if (s == "relative" || s == "rel") return Geometry::relative;
    if (s == "com") return Geometry::com;
    throw SpecError("unknown geometry '" + s + "' (expected edge, relative or com)");
}

double ChainSpec::dressed_gamma() const {
    if (geometry == Geometry::com) return 0.0;
    if (!use_dressed_rate) return gamma;
    const double q2 = static_cast<double>(q) * static_cast<double>(q);
    return (1.0 - 1.0 / q2) * gamma;
}

double ChainSpec::geometry_factor() const {
    return geometry == Geometry::relative ? 2.0 : 1.0;
}

void ChainSpec::validate() const {
    if (length < 2) throw SpecError("chain length must be at least 2");
    if (!(w_plus > 0.0) || !(w_minus > 0.0) || !std::isfinite(w_plus) || !std::isfinite(w_minus))
        throw SpecError("hopping rates w_plus and w_minus must be positive and finite");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw SpecError("gamma must be non-negative");
    if (geometry == Geometry::com) {
        if (w_plus != w_minus) throw SpecError("com geometry is unbiased: w_plus must equal w_minus");
    } else if (!(w_plus > w_minus)) {
        throw SpecError("edge and relative geometries require w_plus > w_minus");
    }
    if (use_dressed_rate && q < 2) throw SpecError("on-site dimension q must be >= 2");
    for (const auto& [bond, g] : bond_overrides) {
        if (bond < 1 || bond > boundary_extent)
            throw SpecError("bond override at x=" + std::to_string(bond) +
                            " lies outside the boundary region x <= " +
                            std::to_string(boundary_extent));
        if (bond + 1 > length)
            throw SpecError("bond override at x=" + std::to_string(bond) + " exceeds the chain");
        if (!(g > 0.0) || !std::isfinite(g))
            throw SpecError("bond factor must be positive");
    }
}

BondRates bond_rates(const ChainSpec& spec) {
    spec.validate();
    const double f = spec.geometry_factor();
    BondRates r;
    r.forward.assign(spec.length - 1, f * spec.w_plus);
    r.backward.assign(spec.length - 1, f * spec.w_minus);
    for (const auto& [bond, g] : spec.bond_overrides) {
        r.forward[bond - 1] *= g;
        r.backward[bond - 1] *= g;
    }
    return r;
}

double TridiagonalOperator::at(std::size_t row, std::size_t col) const {
    if (row == col) return diag[row];
    if (row == col + 1) return sub[col];
    if (col == row + 1) return sup[row];
    return 0.0;
}

std::vector<double> TridiagonalOperator::column_sums() const {
    const std::size_t n = size();
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Off-diagonals first, in the order the generator sums its outflow, so that
        // conserving columns cancel exactly.
        double off = 0.0;
        if (i + 1 < n) off += sub[i];
        if (i > 0) off += sup[i - 1];
        s[i] = off + diag[i];
    }
    return s;
}

std::vector<double> TridiagonalOperator::apply(const std::vector<double>& v) const {
    const std::size_t n = size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = diag[i] * v[i];
        if (i > 0) acc += sub[i - 1] * v[i - 1];
        if (i + 1 < n) acc += sup[i] * v[i + 1];
        out[i] = acc;
    }
    return out;
}

double TridiagonalOperator::norm_inf() const {
    const std::size_t n = size();
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = std::abs(diag[i]);
        if (i > 0) r += std::abs(sub[i - 1]);
        if (i + 1 < n) r += std::abs(sup[i]);
        m = std::max(m, r);
    }
    return m;
}

TridiagonalOperator build_generator(const ChainSpec& spec) {
    const BondRates r = bond_rates(spec);
    const std::size_t n = spec.length;
    const double gd = spec.dressed_gamma();

    TridiagonalOperator m;
    m.frame = Frame::original;
    m.time_kind = TimeKind::continuous;
    m.sub = r.forward;
    m.sup = r.backward;
    m.diag.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double out = 0.0;
        if (i + 1 < n) out += r.forward[i];
        if (i > 0) out += r.backward[i - 1];
        m.diag[i] = -out - gd * static_cast<double>(i + 1);
    }
    return m;
}

TridiagonalOperator build_discrete_step(const ChainSpec& spec) {
    TridiagonalOperator m = build_generator(spec);
    m.time_kind = TimeKind::discrete;
    for (std::size_t i = 0; i < m.size(); ++i) {
        m.diag[i] += 1.0;
        if (m.diag[i] < 0.0)
            throw SpecError("discrete step has negative stay probability at x=" +
                            std::to_string(i + 1) + "; need w_plus + w_minus + gamma_d x <= 1");
    }
    return m;
}

}  // namespace opgap
