// oracles.hpp — Independent reference computations shared by the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "opgap/chain_model.hpp"

namespace opgap::testing {

inline Eigen::MatrixXd dense(const TridiagonalOperator& op) {
    const auto n = static_cast<Eigen::Index>(op.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) m(i, i) = op.diag[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        m(i + 1, i) = op.sub[static_cast<std::size_t>(i)];
        m(i, i + 1) = op.sup[static_cast<std::size_t>(i)];
    }
    return m;
}

struct GeneralSpectrum {
    std::vector<double> decay_rates;  // -Re(eigenvalue), ascending
    double max_imag = 0.0;
};

/// Osborne balancing in the 2-norm with real (not power-of-two) factors, iterated to
/// convergence: a diagonal similarity that equalises off-diagonal row and column norms.
/// Works on the three bands, so a sweep costs O(n); omega is a successive over-relaxation factor.
inline TridiagonalOperator osborne_balance(TridiagonalOperator op, double tol = 1e-12, long max_sweeps = 5000000,
                                           double omega = 1.9) {
    const std::size_t n = op.size();
    for (long sweep = 0; sweep < max_sweeps; ++sweep) {
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double c = 0.0, r = 0.0;
            if (i + 1 < n) {
                c += op.sub[i] * op.sub[i];
                r += op.sup[i] * op.sup[i];
            }
            if (i > 0) {
                c += op.sup[i - 1] * op.sup[i - 1];
                r += op.sub[i - 1] * op.sub[i - 1];
            }
            if (c == 0.0 || r == 0.0) continue;
            const double f = std::pow(r / c, 0.25 * omega);
            if (i + 1 < n) {
                op.sub[i] *= f;
                op.sup[i] /= f;
            }
            if (i > 0) {
                op.sup[i - 1] *= f;
                op.sub[i - 1] /= f;
            }
            change = std::max(change, std::abs(f - 1.0));
        }
        if (change < tol) break;
    }
    return op;
}

/// LAPACK dgeev on the dense non-symmetric matrix, optionally Osborne-balanced first.
inline GeneralSpectrum dense_general_decay_rates(const TridiagonalOperator& op, bool balance = true) {
    Eigen::MatrixXd a = dense(balance ? osborne_balance(op) : op);
    const auto n = static_cast<lapack_int>(a.rows());
    std::vector<double> wr(static_cast<std::size_t>(n)), wi(static_cast<std::size_t>(n));
    const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, wr.data(), wi.data(), nullptr,
                                          1, nullptr, 1);
    if (info != 0) throw std::runtime_error("dgeev failed");
    GeneralSpectrum s;
    for (lapack_int i = 0; i < n; ++i) {
        s.decay_rates.push_back(-wr[static_cast<std::size_t>(i)]);
        s.max_imag = std::max(s.max_imag, std::abs(wi[static_cast<std::size_t>(i)]));
    }
    std::sort(s.decay_rates.begin(), s.decay_rates.end());
    return s;
}

/// Eigen's dense self-adjoint solver; ascending decay rates of -op.
inline std::vector<double> dense_symmetric_decay_rates(const TridiagonalOperator& op) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-dense(op), Eigen::EigenvaluesOnly);
    std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(out.begin(), out.end());
    return out;
}

/// Random valid spec with L in [2, max_length], bias w+/w- in (1, 4], optional
/// boundary overrides, dressing and relative geometry.
inline ChainSpec random_spec(std::mt19937_64& rng, std::size_t max_length, double min_gamma = 1e-3) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ChainSpec s;
    s.length = 2 + static_cast<std::size_t>(u(rng) * static_cast<double>(max_length - 1));
    s.length = std::min(s.length, max_length);
    s.w_minus = 0.2 + 1.8 * u(rng);
    s.w_plus = s.w_minus * (1.0 + 1e-3 + 3.0 * u(rng));
    s.gamma = s.w_minus * (min_gamma + (0.1 - min_gamma) * u(rng));
    s.use_dressed_rate = u(rng) < 0.5;
    s.q = 2 + static_cast<int>(u(rng) * 3.0);
    s.geometry = u(rng) < 0.7 ? Geometry::edge : Geometry::relative;
    const auto x0 = static_cast<std::size_t>(u(rng) * 4.0);
    s.boundary_extent = x0;
    for (std::size_t x = 1; x <= x0 && x + 1 <= s.length; ++x)
        if (u(rng) < 0.7) s.bond_overrides[x] = 0.05 + 1.95 * u(rng);
    return s;
}

}  // namespace opgap::testing
