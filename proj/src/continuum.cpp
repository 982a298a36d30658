#include "opgap/continuum.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "opgap/hermitization.hpp"

namespace opgap {
namespace {

constexpr double kMaxArgument = 200.0;
constexpr double kSeriesUpper = 2.2;
constexpr double kSeriesLower = -7.5;

// Ai(0) and -Ai'(0).
constexpr long double kAi0 = 0.355028053887817239260063186004183176L;
constexpr long double kDAi0 = 0.258819403792806798405183560189203963L;

double airy_series(double z) {
    const long double zl = z;
    const long double z3 = zl * zl * zl;
    long double f = 1.0L, g = zl;
    long double tf = 1.0L, tg = zl;
    for (int k = 1; k < 400; ++k) {
        tf *= z3 / ((3.0L * k - 1.0L) * (3.0L * k));
        tg *= z3 / ((3.0L * k) * (3.0L * k + 1.0L));
        f += tf;
        g += tg;
        if (std::abs(tf) < 1e-22L * std::abs(f) && std::abs(tg) < 1e-22L * (std::abs(g) + 1e-300L)) break;
    }
    return static_cast<double>(kAi0 * f - kDAi0 * g);
}

// e^x K_nu(x) by Steed's continued fraction (Temme's CF2), accurate for x >~ 2.
double scaled_bessel_k(double nu, double x) {
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d, delh = d;
    double q1 = 0.0, q2 = 1.0;
    const double a1 = 0.25 - nu * nu;
    double q = a1, c = a1, a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 1; i < 10000; ++i) {
        a -= 2 * i;
        c = -a * c / (i + 1.0);
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < 1e-17) break;
    }
    return std::sqrt(std::numbers::pi / (2.0 * x)) / s;
}

// log Ai(z) for z above the series region.
double log_airy_positive(double z) {
    const double zeta = 2.0 / 3.0 * z * std::sqrt(z);
    return std::log(std::sqrt(z / 3.0) / std::numbers::pi * scaled_bessel_k(1.0 / 3.0, zeta)) - zeta;
}

double airy_negative_asymptotic(double z) {
    const double x = -z;
    const double zeta = 2.0 / 3.0 * x * std::sqrt(x);
    // u_k = u_{k-1} (6k-5)(6k-3)(6k-1) / (216 k (2k-1))
    double p = 0.0, qsum = 0.0;
    double u = 1.0, zpow = 1.0, last = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 200; ++k) {
        if (k > 0) {
            u *= (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) / (216.0 * k * (2.0 * k - 1.0));
            zpow *= zeta;
        }
        const double term = u / zpow;
        if (term > last) break;
        last = term;
        // even k feed cos with alternating signs, odd k feed sin
        const int j = k / 2;
        const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
        if (k % 2 == 0)
            p += sgn * term;
        else
            qsum += sgn * term;
        if (term < 1e-17) break;
    }
    const double phase = zeta - std::numbers::pi / 4.0;
    return (std::cos(phase) * p + std::sin(phase) * qsum) / (std::sqrt(std::numbers::pi) * std::pow(x, 0.25));
}

}  // namespace

double airy_ai(double z) {
    if (!std::isfinite(z) || std::abs(z) > kMaxArgument)
        throw SpecError("airy_ai argument outside [-200, 200]");
    if (z > kSeriesUpper) return std::exp(log_airy_positive(z));
    if (z >= kSeriesLower) return airy_series(z);
    return airy_negative_asymptotic(z);
}

double log_airy_ai(double z) {
    if (!(z >= 0.0)) throw SpecError("log_airy_ai needs z >= 0");
    if (z > kSeriesUpper) return log_airy_positive(z);
    return std::log(airy_series(z));
}

namespace {

double bisect_airy_zero(int n) {
    const double t = 3.0 * std::numbers::pi * (4.0 * n - 1.0) / 8.0;
    const double t2 = 1.0 / (t * t);
    const double seed = -std::pow(t, 2.0 / 3.0) * (1.0 + t2 * (5.0 / 48.0 - t2 * 5.0 / 36.0));
    const double half = 0.25 * std::numbers::pi / std::sqrt(-seed);
    double lo = seed - half, hi = seed + half;
    double flo = airy_ai(lo), fhi = airy_ai(hi);
    if (flo * fhi > 0.0) throw NumericalError("failed to bracket Airy zero " + std::to_string(n));
    for (int it = 0; it < 200 && hi - lo > 2.0 * std::numeric_limits<double>::epsilon() * std::abs(lo); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = airy_ai(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double airy_zero(int n) {
    if (n < 1 || n > 100) throw SpecError("airy_zero index must be in [1, 100]");
    static const std::array<double, 100> zeros = [] {
        std::array<double, 100> z{};
        for (int k = 1; k <= 100; ++k) z[static_cast<std::size_t>(k - 1)] = bisect_airy_zero(k);
        return z;
    }();
    return zeros[static_cast<std::size_t>(n - 1)];
}

double ContinuumModel::airy_length() const { return std::cbrt(w / gamma); }
double ContinuumModel::airy_energy() const { return std::cbrt(w * gamma * gamma); }

ContinuumModel continuum_model(const ChainSpec& spec) {
    ChainSpec probe = spec;
    if (probe.length < 2) probe.length = std::max<std::size_t>(2, probe.boundary_extent + 2);
    const FrameParams fp = frame_params(probe);
    ContinuumModel m;
    m.a = fp.a;
    m.w = fp.w;
    m.lambda = fp.lambda;
    m.gamma = spec.dressed_gamma();
    const double f = spec.geometry_factor();
    m.v_b = f * (spec.w_plus - spec.w_minus);
    m.diffusion = 0.5 * f * (spec.w_plus + spec.w_minus);
    if (!(m.gamma > 0.0)) throw SpecError("continuum model needs gamma > 0");
    return m;
}

double continuum_eigenvalue(const ContinuumModel& m, int n) { return m.lambda - airy_zero(n) * m.airy_energy(); }

ContinuumModeValue continuum_mode(const ContinuumModel& m, int n, double x) {
    if (!(x >= 0.0)) throw SpecError("continuum_mode needs x >= 0");
    const double z = x / m.airy_length() + airy_zero(n);
    ContinuumModeValue v;
    if (z > kMaxArgument) throw SpecError("continuum_mode argument beyond the Airy range");
    v.psi = airy_ai(z);
    const double log_abs_psi = z > 0.0 ? log_airy_ai(z) : std::log(std::abs(v.psi));
    v.log_abs_phi = 0.5 * m.a * x + log_abs_psi;
    v.phi = (v.psi < 0.0 ? -1.0 : 1.0) * std::exp(v.log_abs_phi);
    if (v.psi == 0.0 && z <= 0.0) v.phi = 0.0;
    return v;
}

double mode_peak(const ContinuumModel& m, int n) {
    if (!(m.a > 0.0)) throw SpecError("mode_peak needs a biased walk (a > 0)");
    return m.a * m.a * m.w / (4.0 * m.gamma) - airy_zero(n) * m.airy_length();
}

TailPrediction tail_asymptote(const ChainSpec& spec, double x) {
    const ContinuumModel m = continuum_model(spec);
    const double ratio = m.w / m.gamma;
    if (!(x > 10.0 * ratio)) throw SpecError("tail asymptote needs x > 10 w / gamma");
    TailPrediction p;
    p.discrete = x * (std::log(x) - std::log(std::numbers::e * ratio));
    p.continuum = 2.0 / 3.0 * std::sqrt(m.gamma / m.w) * x * std::sqrt(x);
    return p;
}

double effective_dirichlet_point(const ChainSpec& spec) {
    ChainSpec s = spec;
    s.gamma = 0.0;
    s.length = std::max<std::size_t>(spec.boundary_extent + 6, 8);
    const FrameParams fp = frame_params(s);
    const TridiagonalOperator h = hermitize(build_generator(s), fp);
    // Zero-energy recurrence relative to the bulk edge, (A - Lambda) psi = 0 with A = -M~.
    const std::size_t n = h.size();
    std::vector<double> psi(n, 0.0);
    psi[0] = 1.0;
    for (std::size_t i = 0; i + 2 < n; ++i) {
        const double left = i > 0 ? h.sub[i - 1] * psi[i - 1] : 0.0;
        psi[i + 1] = ((-h.diag[i] - fp.lambda) * psi[i] - left) / h.sub[i];
    }
    const std::size_t m = n - 3;
    const double slope = psi[m + 1] - psi[m];
    if (!(slope > 0.0)) return -std::numeric_limits<double>::infinity();
    return static_cast<double>(m + 1) - psi[m] / slope;
}

}  // namespace opgap
