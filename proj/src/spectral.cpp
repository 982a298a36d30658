#include "opgap/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>

#include "opgap/numerics.hpp"

namespace opgap {
namespace {

constexpr double kFirstAiryZero = 2.338107410459767;

void require_symmetric(const TridiagonalOperator& op) {
    if (op.frame != Frame::hermitian) throw SpecError("spectral routines need a hermitian-frame operator");
    for (std::size_t i = 0; i < op.sub.size(); ++i) {
        if (op.sub[i] != op.sup[i]) throw SpecError("operator is not symmetric");
    }
}

// Squared off-diagonals and the pivot floor used by both the Sturm count and the
// twisted factorisation.
struct Pivots {
    std::vector<double> e2;
    double pivmin = 0.0;
    // floor[i] = min over j >= i of A_jj - |e_{j-1}| - |e_j|. Once a pivot d_i >= |e_i| and
    // sigma < floor[i+1], every later pivot stays >= |e_j| > 0 and the count is final.
    std::vector<double> floor;
};

Pivots pivots(const TridiagonalOperator& op) {
    Pivots p;
    p.e2.resize(op.sub.size());
    double emax = 1.0;
    for (std::size_t i = 0; i < op.sub.size(); ++i) {
        p.e2[i] = op.sub[i] * op.sub[i];
        emax = std::max(emax, p.e2[i]);
    }
    p.pivmin = std::numeric_limits<double>::min() * emax;
    const std::size_t n = op.size();
    p.floor.assign(n + 1, std::numeric_limits<double>::infinity());
    for (std::size_t j = n; j-- > 0;) {
        double r = -op.diag[j];
        if (j > 0) r -= std::abs(op.sub[j - 1]);
        if (j + 1 < n) r -= std::abs(op.sub[j]);
        p.floor[j] = std::min(p.floor[j + 1], r);
    }
    return p;
}

std::size_t count_below(const TridiagonalOperator& op, const Pivots& p, double sigma) {
    // A = -op, so A_ii - sigma = -diag - sigma.
    const std::size_t n = op.size();
    std::size_t count = 0;
    double q = -op.diag[0] - sigma;
    if (std::abs(q) < p.pivmin) q = -p.pivmin;
    if (q < 0.0) ++count;
    for (std::size_t i = 1; i < n; ++i) {
        q = -op.diag[i] - sigma - p.e2[i - 1] / q;
        if (std::abs(q) < p.pivmin) q = -p.pivmin;
        if (q < 0.0) {
            ++count;
        } else if (i + 1 < n && q * q >= p.e2[i] && sigma < p.floor[i + 1]) {
            break;
        }
    }
    return count;
}

std::pair<double, double> gershgorin(const TridiagonalOperator& op) {
    const std::size_t n = op.size();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::abs(op.sub[i - 1]);
        if (i + 1 < n) r += std::abs(op.sub[i]);
        lo = std::min(lo, -op.diag[i] - r);
        hi = std::max(hi, -op.diag[i] + r);
    }
    const double pad = 2.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi));
    return {lo - pad, hi + pad};
}

double residual_norm(const TridiagonalOperator& op, const std::vector<double>& v, double decay_rate) {
    const std::vector<double> mv = op.apply(v);
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double r = mv[i] + decay_rate * v[i];
        s += r * r;
    }
    return std::sqrt(s);
}

}  // namespace

std::vector<double> LogVector::values() const {
    std::vector<double> v(log_abs.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = sign[i] * std::exp(log_abs[i]);
    return v;
}

std::size_t sturm_count(const TridiagonalOperator& op, double sigma) {
    require_symmetric(op);
    return count_below(op, pivots(op), sigma);
}

std::vector<double> low_eigenvalues(const TridiagonalOperator& op, std::size_t k) {
    require_symmetric(op);
    const std::size_t n = op.size();
    if (n == 0) throw SpecError("empty operator");
    if (k == 0 || k > n) throw SpecError("requested mode count must be in [1, L]");

    const Pivots p = pivots(op);
    const auto [lo, hi] = gershgorin(op);
    std::vector<double> lb(k, lo), ub(k, hi), eig(k, 0.0);
    constexpr int kMaxIter = 256;
    const double eps = std::numeric_limits<double>::epsilon();

    for (std::size_t i = 0; i < k; ++i) {
        double a = lb[i];
        double b = ub[i];
        int iter = 0;
        while (b - a > 2.0 * eps * std::max(std::abs(a), std::abs(b)) + p.pivmin) {
            if (++iter > kMaxIter) {
                std::ostringstream msg;
                msg << "bisection for eigenvalue " << i + 1 << " did not converge; bracket [" << a << ", "
                    << b << "], counts " << count_below(op, p, a) << "/" << count_below(op, p, b);
                throw NumericalError(msg.str());
            }
            const double mid = 0.5 * (a + b);
            if (mid <= a || mid >= b) break;
            const std::size_t c = count_below(op, p, mid);
            if (c > i) {
                b = mid;
                for (std::size_t j = i; j < std::min(c, k); ++j) ub[j] = std::min(ub[j], mid);
            } else {
                a = mid;
            }
            for (std::size_t j = std::max(c, i); j < k; ++j) lb[j] = std::max(lb[j], mid);
        }
        eig[i] = 0.5 * (a + b);
        for (std::size_t j = i + 1; j < k; ++j) lb[j] = std::max(lb[j], a);
    }
    return eig;
}

LogVector tridiagonal_eigenvector(const TridiagonalOperator& op, double decay_rate) {
    require_symmetric(op);
    const std::size_t n = op.size();
    const Pivots p = pivots(op);
    const double tiny = std::max(p.pivmin, std::numeric_limits<double>::min());

    // A - lambda with A = -op.
    auto shifted = [&](std::size_t i) { return -op.diag[i] - decay_rate; };
    auto guard = [&](double d) {
        if (std::abs(d) < tiny) return d < 0.0 ? -tiny : tiny;
        return d;
    };

    std::vector<double> dp(n), dm(n);
    dp[0] = guard(shifted(0));
    for (std::size_t i = 1; i < n; ++i) dp[i] = guard(shifted(i) - p.e2[i - 1] / dp[i - 1]);
    dm[n - 1] = guard(shifted(n - 1));
    for (std::size_t i = n - 1; i-- > 0;) dm[i] = guard(shifted(i) - p.e2[i] / dm[i + 1]);

    std::size_t twist = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double g = std::abs(dp[i] + dm[i] - shifted(i));
        if (g < best) {
            best = g;
            twist = i;
        }
    }

    LogVector v;
    v.log_abs.assign(n, 0.0);
    v.sign.assign(n, 1);
    // Off-diagonal of A is -op.sub; z_i = -e_i z_{i+1} / D+_i above the twist.
    for (std::size_t i = twist; i-- > 0;) {
        const double ratio = op.sub[i] / dp[i];
        v.log_abs[i] = v.log_abs[i + 1] + std::log(std::abs(ratio));
        v.sign[i] = static_cast<signed char>(v.sign[i + 1] * (ratio < 0.0 ? -1 : 1));
    }
    for (std::size_t i = twist; i + 1 < n; ++i) {
        const double ratio = op.sub[i] / dm[i + 1];
        v.log_abs[i + 1] = v.log_abs[i] + std::log(std::abs(ratio));
        v.sign[i + 1] = static_cast<signed char>(v.sign[i] * (ratio < 0.0 ? -1 : 1));
    }

    double top = -std::numeric_limits<double>::infinity();
    for (double l : v.log_abs) top = std::max(top, l);
    double s = 0.0;
    for (double l : v.log_abs) s += std::exp(2.0 * (l - top));
    const double log_norm = top + 0.5 * std::log(s);
    for (double& l : v.log_abs) l -= log_norm;

    for (std::size_t i = 0; i < n; ++i) {
        if (std::isfinite(v.log_abs[i])) {
            if (v.sign[i] < 0) {
                for (auto& sg : v.sign) sg = static_cast<signed char>(-sg);
            }
            break;
        }
    }
    return v;
}

SpectralResult low_spectrum(const TridiagonalOperator& op, std::size_t k) {
    FrameParams identity;
    identity.log_t.assign(op.size(), 0.0);
    return low_spectrum(op, identity, k);
}

SpectralResult low_spectrum(const TridiagonalOperator& op, const FrameParams& fp, std::size_t k) {
    if (fp.size() != op.size()) throw SpecError("frame parameters do not match operator size");
    SpectralResult res;
    res.eigenvalues = low_eigenvalues(op, k);
    res.gap = res.eigenvalues.front();
    res.operator_norm = op.norm_inf();
    for (double lam : res.eigenvalues) {
        LogVector v = tridiagonal_eigenvector(op, lam);
        std::vector<double> dense = v.values();
        const double r = residual_norm(op, dense, lam);
        if (r > 1e-8 * res.operator_norm) {
            std::ostringstream msg;
            msg << "eigenvector residual " << r << " exceeds 1e-8 ||M|| for decay rate " << lam;
            throw NumericalError(msg.str());
        }
        res.residuals.push_back(r);
        res.phi_modes.push_back(to_original_frame_scaled(v.log_abs, v.sign, fp));
        res.psi_modes.push_back(std::move(dense));
        res.psi_log.push_back(std::move(v));
    }
    return res;
}

std::size_t auto_length(const ChainSpec& spec) {
    const double gd = spec.dressed_gamma();
    if (!(gd > 0.0)) throw SpecError("chain length must be given explicitly when gamma_d = 0");
    const double f = spec.geometry_factor();
    const double wp = f * spec.w_plus;
    const double wm = f * spec.w_minus;
    const double w = std::sqrt(wp * wm);
    const double a = std::log(wp / wm);
    const double airy_scale = std::cbrt(w / gd);
    const double x_max = a * a * w / (4.0 * gd) + kFirstAiryZero * airy_scale;
    const double len = std::max(20.0 * w / gd, x_max + 10.0 * airy_scale);
    return std::max<std::size_t>({static_cast<std::size_t>(std::ceil(len)), 64, spec.boundary_extent + 8});
}

ChainSpec with_auto_length(ChainSpec spec) {
    if (spec.length == 0) spec.length = auto_length(spec);
    return spec;
}

double fit_localization_length(const LogVector& mode, std::size_t boundary_extent) {
    const std::size_t n = mode.size();
    const std::size_t start = boundary_extent;  // 0-based index of site x0 + 1
    if (n < start + 4) throw SpecError("not enough sites beyond the boundary region to fit xi");
    const double kappa0 = mode.log_abs[start] - mode.log_abs[start + 1];
    if (!(kappa0 > 0.0)) return std::numeric_limits<double>::infinity();
    const std::size_t span =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(3.0 / kappa0)), 4, n - start);
    std::vector<double> xs(span), ys(span);
    for (std::size_t j = 0; j < span; ++j) {
        xs[j] = static_cast<double>(start + j + 1);
        ys[j] = mode.log_abs[start + j];
    }
    const LineFit f = fit_line(xs, ys);
    if (!(f.slope < 0.0)) return std::numeric_limits<double>::infinity();
    return -1.0 / f.slope;
}

Classification classify_mode(const SpectralResult& res, const FrameParams& fp, const ChainSpec& spec) {
    if (res.psi_log.empty()) throw SpecError("spectral result has no modes");
    const double gd = spec.dressed_gamma();
    const double airy_energy = std::cbrt(fp.w * gd * gd);
    const double threshold = fp.lambda - kBoundThresholdConstant * airy_energy;

    const double xi = fit_localization_length(res.psi_log.front(), spec.boundary_extent);
    const double radius = std::max(4.0 * static_cast<double>(spec.boundary_extent), 4.0 * xi);

    Classification c;
    for (std::size_t m = 0; m < res.eigenvalues.size(); ++m) {
        const auto& psi = res.psi_modes[m];
        double inside = 0.0;
        for (std::size_t i = 0; i < psi.size() && static_cast<double>(i + 1) <= radius; ++i)
            inside += psi[i] * psi[i];
        const double lam = res.eigenvalues[m];
        const bool bound = inside > 0.5 && lam < threshold;
        c.classes.push_back(bound ? ModeClass::bound : ModeClass::extended);
        c.in_rounding_window.push_back(std::abs(lam - threshold) < kBoundThresholdConstant * airy_energy);
    }
    if (c.classes.front() == ModeClass::bound) c.xi = xi;
    return c;
}

void classify(SpectralResult& res, const FrameParams& fp, const ChainSpec& spec) {
    Classification c = classify_mode(res, fp, spec);
    res.classifications = std::move(c.classes);
    res.in_rounding_window = std::move(c.in_rounding_window);
    res.xi = c.xi;
}

SpectralResult solve_spec(const ChainSpec& spec_in, std::size_t k) {
    const ChainSpec spec = with_auto_length(spec_in);
    const FrameParams fp = frame_params(spec);
    const TridiagonalOperator h = hermitize(build_generator(spec), fp);
    SpectralResult res = low_spectrum(h, fp, k);
    classify(res, fp, spec);
    return res;
}

namespace {

ChainSpec scan_point(const ChainSpec& templ, const BindingScanOptions& opt, double g, double gamma) {
    ChainSpec s = templ;
    s.gamma = gamma;
    s.boundary_extent = std::max(s.boundary_extent, opt.scan_bond);
    s.bond_overrides[opt.scan_bond] = g;
    if (s.length == 0 && opt.length_factor > 0.0) {
        const double w = s.geometry_factor() * std::sqrt(s.w_plus * s.w_minus);
        const double len = std::ceil(opt.length_factor * w / s.dressed_gamma());
        s.length = std::max(static_cast<std::size_t>(len), s.boundary_extent + 8);
    }
    return with_auto_length(s);
}

double slowest_rate(const ChainSpec& s) { return low_eigenvalues(hermitian_generator(s), 1).front(); }

}  // namespace

BindingCurve binding_scan(const ChainSpec& templ, const std::vector<double>& g_grid,
                          const std::vector<double>& gamma_grid, const BindingScanOptions& options) {
    if (g_grid.size() < 2 || gamma_grid.empty()) throw SpecError("binding scan needs a g grid and a gamma grid");
    if (!std::is_sorted(g_grid.begin(), g_grid.end()) || !std::is_sorted(gamma_grid.begin(), gamma_grid.end()))
        throw SpecError("scan grids must be ascending");
    for (double gm : gamma_grid)
        if (!(gm > 0.0)) throw SpecError("binding scan needs gamma > 0");

    BindingCurve out;
    out.g_values = g_grid;
    out.gamma_values = gamma_grid;
    {
        ChainSpec probe = templ;
        probe.length = std::max<std::size_t>(probe.length, options.scan_bond + 2);
        probe.boundary_extent = std::max(probe.boundary_extent, options.scan_bond);
        const FrameParams fp = frame_params(probe);
        out.lambda = fp.lambda;
        out.w = fp.w;
    }

    const std::size_t ng = g_grid.size();
    const std::size_t nt = gamma_grid.size();
    out.gamma_of_g.assign(nt, std::vector<double>(ng));
    out.xi_of_g.assign(nt, std::vector<double>(ng));
    parallel_for(ng * nt, options.threads, [&](std::size_t idx) {
        const std::size_t t = idx / ng;
        const std::size_t j = idx % ng;
        const ChainSpec s = scan_point(templ, options, g_grid[j], gamma_grid[t]);
        const TridiagonalOperator h = hermitian_generator(s);
        const double lam = low_eigenvalues(h, 1).front();
        out.gamma_of_g[t][j] = lam;
        out.xi_of_g[t][j] = fit_localization_length(tridiagonal_eigenvector(h, lam), s.boundary_extent);
    });

    out.crossing_g.assign(nt, 0.0);
    parallel_for(nt, options.threads, [&](std::size_t t) {
        const auto& row = out.gamma_of_g[t];
        std::size_t j = 0;
        while (j + 1 < ng && !(row[j] < out.lambda && row[j + 1] >= out.lambda)) ++j;
        if (j + 1 >= ng) {
            std::ostringstream msg;
            msg << "g grid does not bracket the Gamma = Lambda crossing at gamma = " << gamma_grid[t];
            throw NumericalError(msg.str());
        }
        auto f = [&](double g) {
            return slowest_rate(scan_point(templ, options, g, gamma_grid[t])) - out.lambda;
        };
        boost::uintmax_t max_iter = 100;
        const auto tol = boost::math::tools::eps_tolerance<double>(40);
        const auto [lo, hi] = boost::math::tools::toms748_solve(f, g_grid[j], g_grid[j + 1], row[j] - out.lambda,
                                                               row[j + 1] - out.lambda, tol, max_iter);
        out.crossing_g[t] = 0.5 * (lo + hi);
    });

    if (nt >= 2) {
        std::vector<double> s(nt);
        for (std::size_t t = 0; t < nt; ++t) s[t] = std::cbrt(gamma_grid[t]);
        const LineFit f = fit_line(s, out.crossing_g);
        out.g_c_estimate = f.intercept;
        out.g_c_uncertainty = f.intercept_stderr;
        out.rounding_slope = f.slope;
    } else {
        out.g_c_estimate = out.crossing_g.front();
    }

    // Exponents at the smallest gamma, bound side, outside the rounding window.
    const std::size_t t0 = 0;
    ChainSpec dressed = templ;
    dressed.gamma = gamma_grid[t0];
    const double window = options.window_factor * std::cbrt(dressed.dressed_gamma() / out.w);
    std::vector<double> ld, le, ldx, lx;
    for (std::size_t j = 0; j < ng; ++j) {
        const double delta = out.g_c_estimate - g_grid[j];
        if (!(delta > window)) continue;
        const double binding = out.lambda - out.gamma_of_g[t0][j];
        if (binding > 0.0) {
            ld.push_back(std::log(delta));
            le.push_back(std::log(binding));
        }
        if (std::isfinite(out.xi_of_g[t0][j])) {
            ldx.push_back(std::log(delta));
            lx.push_back(std::log(out.xi_of_g[t0][j]));
        }
    }
    if (ld.size() < 2 || ldx.size() < 2)
        throw SpecError("g grid lies entirely inside the rounding window |g_c - g| <~ (gamma / w)^{1/3}");
    const LineFit fe = fit_line(ld, le);
    const LineFit fx = fit_line(ldx, lx);
    out.binding_exponent = fe.slope;
    out.binding_exponent_stderr = fe.slope_stderr;
    out.xi_exponent = fx.slope;
    out.xi_exponent_stderr = fx.slope_stderr;
    out.exponent_points = ld.size();
    return out;
}

}  // namespace opgap
