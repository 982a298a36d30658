#include "opgap/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "opgap/hermitization.hpp"
#include "opgap/numerics.hpp"
#include "opgap/spectral.hpp"

namespace opgap {
namespace {

void check_times(const std::vector<double>& times) {
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] >= 0.0) || !std::isfinite(times[i])) throw SpecError("evolution times must be finite and >= 0");
        if (i > 0 && times[i] < times[i - 1]) throw SpecError("evolution times must be ascending");
    }
}

// RK4 integrator that only touches the leading window of sites that can be nonzero and
// keeps the state rescaled to O(1), carrying the scale as a logarithm.
class Rk4Stepper {
public:
    Rk4Stepper(const TridiagonalOperator& op, std::vector<double> v0)
        : op_(op), v_(std::move(v0)), k1_(v_.size()), k2_(v_.size()), k3_(v_.size()), k4_(v_.size()),
          tmp_(v_.size()) {
        double dmax = 0.0;
        for (double d : op.diag) dmax = std::max(dmax, std::abs(d));
        h_max_ = dmax > 0.0 ? 0.1 / dmax : std::numeric_limits<double>::infinity();
        active_ = v_.size();
        while (active_ > 0 && v_[active_ - 1] == 0.0) --active_;
        rescale();
    }

    void advance(double duration) {
        if (duration <= 0.0) return;
        const auto steps = static_cast<std::size_t>(std::ceil(duration / h_max_));
        const double h = duration / static_cast<double>(std::max<std::size_t>(steps, 1));
        for (std::size_t s = 0; s < std::max<std::size_t>(steps, 1); ++s) step(h);
    }

    double log_scale() const { return log_scale_; }
    const std::vector<double>& state() const { return v_; }

    std::vector<double> values() const {
        std::vector<double> out(v_.size());
        const double s = std::exp(log_scale_);
        for (std::size_t i = 0; i < v_.size(); ++i) out[i] = v_[i] * s;
        return out;
    }

private:
    void apply(const std::vector<double>& x, std::vector<double>& y, std::size_t hi) const {
        for (std::size_t i = 0; i < hi; ++i) {
            double acc = op_.diag[i] * x[i];
            if (i > 0) acc += op_.sub[i - 1] * x[i - 1];
            if (i + 1 < x.size()) acc += op_.sup[i] * x[i + 1];
            y[i] = acc;
        }
    }

    void step(double h) {
        const std::size_t n = v_.size();
        if (active_ == 0) return;
        const std::size_t hi = std::min(n, active_ + 4);
        apply(v_, k1_, hi);
        for (std::size_t i = 0; i < hi; ++i) tmp_[i] = v_[i] + 0.5 * h * k1_[i];
        apply(tmp_, k2_, hi);
        for (std::size_t i = 0; i < hi; ++i) tmp_[i] = v_[i] + 0.5 * h * k2_[i];
        apply(tmp_, k3_, hi);
        for (std::size_t i = 0; i < hi; ++i) tmp_[i] = v_[i] + h * k3_[i];
        apply(tmp_, k4_, hi);
        for (std::size_t i = 0; i < hi; ++i) v_[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
        active_ = hi;
        rescale();
    }

    void rescale() {
        double vmax = 0.0;
        for (std::size_t i = 0; i < active_; ++i) vmax = std::max(vmax, std::abs(v_[i]));
        if (vmax == 0.0) {
            active_ = 0;
            return;
        }
        // Drop the far front once it is negligible, before it reaches subnormal range.
        const double floor = vmax * 1e-250;
        while (active_ > 0 && std::abs(v_[active_ - 1]) < floor) v_[--active_] = 0.0;
        if (vmax > 1e100 || vmax < 1e-100) {
            const double inv = 1.0 / vmax;
            for (std::size_t i = 0; i < active_; ++i) v_[i] *= inv;
            log_scale_ += std::log(vmax);
        }
    }

    const TridiagonalOperator& op_;
    std::vector<double> v_, k1_, k2_, k3_, k4_, tmp_;
    double h_max_ = 0.0;
    double log_scale_ = 0.0;
    std::size_t active_ = 0;
};

struct FullSpectrum {
    Eigen::VectorXd eigenvalues;  // of the hermitian-frame generator (<= 0)
    Eigen::MatrixXd vectors;
};

FullSpectrum full_spectrum(const TridiagonalOperator& herm) {
    const auto n = static_cast<Eigen::Index>(herm.size());
    Eigen::VectorXd d(n), e(std::max<Eigen::Index>(n - 1, 0));
    for (Eigen::Index i = 0; i < n; ++i) d(i) = herm.diag[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i + 1 < n; ++i) e(i) = herm.sub[static_cast<std::size_t>(i)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolver did not converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

TridiagonalOperator hermitian_form(const TridiagonalOperator& op, std::vector<double>& log_t) {
    log_t = log_similarity_weights(op);
    if (op.frame == Frame::hermitian) return op;
    FrameParams fp;
    fp.log_t = log_t;
    return hermitize(op, fp);
}

}  // namespace

std::vector<double> DistributionTrajectory::total_weight() const {
    std::vector<double> out;
    out.reserve(distributions.size());
    for (const auto& n : distributions) {
        double s = 0.0;
        for (double v : n) s += v;
        out.push_back(s);
    }
    return out;
}

DistributionTrajectory evolve_distribution(const TridiagonalOperator& op, const std::vector<double>& n0,
                                           const std::vector<double>& times, EvolutionBackend backend) {
    if (op.time_kind != TimeKind::continuous) throw SpecError("evolve_distribution needs a continuous-time generator");
    if (n0.size() != op.size()) throw SpecError("initial distribution does not match the operator size");
    check_times(times);
    DistributionTrajectory out;
    out.times = times;
    out.distributions.reserve(times.size());

    if (backend == EvolutionBackend::stepping) {
        Rk4Stepper stepper(op, n0);
        double t = 0.0;
        for (double target : times) {
            if (target == 0.0) {
                out.distributions.push_back(n0);
                continue;
            }
            stepper.advance(target - t);
            t = target;
            out.distributions.push_back(stepper.values());
        }
        return out;
    }

    if (op.size() > kSpectralBackendMaxLength) {
        std::ostringstream msg;
        msg << "spectral backend limited to L <= " << kSpectralBackendMaxLength;
        throw SpecError(msg.str());
    }
    std::vector<double> log_t;
    const TridiagonalOperator herm = hermitian_form(op, log_t);
    const FullSpectrum fs = full_spectrum(herm);
    const auto n = static_cast<Eigen::Index>(op.size());
    Eigen::VectorXd u0(n);
    for (Eigen::Index i = 0; i < n; ++i)
        u0(i) = n0[static_cast<std::size_t>(i)] * std::exp(-log_t[static_cast<std::size_t>(i)]);
    const Eigen::VectorXd c = fs.vectors.transpose() * u0;
    for (double t : times) {
        if (t == 0.0) {
            out.distributions.push_back(n0);
            continue;
        }
        const Eigen::VectorXd ct = c.cwiseProduct((fs.eigenvalues * t).array().exp().matrix());
        const Eigen::VectorXd u = fs.vectors * ct;
        std::vector<double> nt(op.size());
        for (std::size_t i = 0; i < nt.size(); ++i) nt[i] = u(static_cast<Eigen::Index>(i)) * std::exp(log_t[i]);
        out.distributions.push_back(std::move(nt));
    }
    return out;
}

Series autocorrelation(const ChainSpec& spec_in, const std::vector<double>& times, std::optional<int> q,
                       EvolutionBackend backend) {
    if (spec_in.geometry != Geometry::edge) throw SpecError("autocorrelation is defined for the edge geometry");
    if (q && *q < 2) throw SpecError("local dimension q must be >= 2");
    const ChainSpec spec = with_auto_length(spec_in);
    check_times(times);
    const TridiagonalOperator herm = hermitian_generator(spec);
    std::vector<double> e1(herm.size(), 0.0);
    e1[0] = 1.0;
    const double norm = q ? 1.0 / (static_cast<double>(*q) * *q - 1.0) : 1.0;
    Series s;
    s.times = times;
    s.values.reserve(times.size());
    if (backend == EvolutionBackend::spectral) {
        const DistributionTrajectory tr = evolve_distribution(herm, e1, times, backend);
        for (const auto& v : tr.distributions) s.values.push_back(v[0] * norm);
        return s;
    }
    Rk4Stepper stepper(herm, e1);
    double t = 0.0;
    for (double target : times) {
        stepper.advance(target - t);
        t = target;
        s.values.push_back(stepper.state()[0] * std::exp(stepper.log_scale()) * norm);
    }
    return s;
}

DecayFit fit_decay_rate(const Series& series, double t_lo, double t_hi) {
    if (series.times.size() != series.values.size()) throw SpecError("series times and values differ in length");
    if (!(t_hi > t_lo)) throw SpecError("fit window must have t_hi > t_lo");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < series.times.size(); ++i) {
        const double t = series.times[i];
        if (t < t_lo || t > t_hi) continue;
        if (!(series.values[i] > 0.0)) throw NumericalError("series is not positive inside the fit window");
        x.push_back(t);
        y.push_back(std::log(series.values[i]));
    }
    if (x.size() < 10) throw SpecError("fit window holds fewer than 10 samples");
    const LineFit f = fit_line(x, y);
    return {-f.slope, f.slope_stderr, f.points};
}

Series TrajectoryEnsemble::mean_survival() const {
    Series s;
    s.times = times;
    s.values.assign(times.size(), 0.0);
    for (std::size_t w = 0; w < walkers; ++w)
        for (std::size_t t = 0; t < times.size(); ++t) s.values[t] += std::exp(survival(w, t));
    for (double& v : s.values) v /= static_cast<double>(walkers);
    return s;
}

std::vector<double> TrajectoryEnsemble::mean_survival_stderr() const {
    const Series m = mean_survival();
    std::vector<double> var(times.size(), 0.0);
    for (std::size_t w = 0; w < walkers; ++w)
        for (std::size_t t = 0; t < times.size(); ++t) {
            const double d = std::exp(survival(w, t)) - m.values[t];
            var[t] += d * d;
        }
    const double n = static_cast<double>(walkers);
    for (double& v : var) v = walkers > 1 ? std::sqrt(v / (n - 1.0) / n) : 0.0;
    return var;
}

std::vector<double> TrajectoryEnsemble::weighted_mean_position() const {
    std::vector<double> num(times.size(), 0.0), den(times.size(), 0.0);
    for (std::size_t w = 0; w < walkers; ++w)
        for (std::size_t t = 0; t < times.size(); ++t) {
            const double e = std::exp(survival(w, t));
            num[t] += e * position(w, t);
            den[t] += e;
        }
    for (std::size_t t = 0; t < times.size(); ++t) num[t] = den[t] > 0.0 ? num[t] / den[t] : 0.0;
    return num;
}

std::vector<double> TrajectoryEnsemble::mean_position() const {
    std::vector<double> out(times.size(), 0.0);
    for (std::size_t w = 0; w < walkers; ++w)
        for (std::size_t t = 0; t < times.size(); ++t) out[t] += position(w, t);
    for (double& v : out) v /= static_cast<double>(walkers);
    return out;
}

TrajectoryEnsemble sample_trajectories(const ChainSpec& spec, std::size_t walkers, double horizon,
                                       std::size_t samples, std::uint64_t seed, std::size_t threads) {
    spec.validate();
    if (walkers == 0) throw SpecError("need at least one walker");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw SpecError("horizon must be positive");
    if (samples == 0) throw SpecError("need at least one sample interval");
    if (spec.length > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
        throw SpecError("chain too long for trajectory sampling");
    const BondRates rates = bond_rates(spec);
    const double gd = spec.geometry == Geometry::com ? 0.0 : spec.dressed_gamma();
    const std::size_t L = spec.length;

    TrajectoryEnsemble ens;
    ens.walkers = walkers;
    ens.seed = seed;
    ens.times.resize(samples + 1);
    for (std::size_t i = 0; i <= samples; ++i)
        ens.times[i] = horizon * static_cast<double>(i) / static_cast<double>(samples);
    ens.times.back() = horizon;
    const std::size_t nt = ens.times.size();
    ens.positions.assign(walkers * nt, 0);
    ens.log_survival.assign(walkers * nt, 0.0);

    parallel_for(walkers, threads, [&](std::size_t w) {
        std::mt19937_64 rng(substream_seed(seed, w));
        std::size_t x = 1;
        double t = 0.0, s = 0.0;
        std::size_t next = 0;
        std::int32_t* pos = &ens.positions[w * nt];
        double* surv = &ens.log_survival[w * nt];
        while (next < nt) {
            const double fwd = x < L ? rates.forward[x - 1] : 0.0;
            const double bwd = x > 1 ? rates.backward[x - 2] : 0.0;
            const double total = fwd + bwd;
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            const double dt = -std::log1p(-u) / total;
            const double t_next = t + dt;
            while (next < nt && ens.times[next] < t_next) {
                pos[next] = static_cast<std::int32_t>(x);
                surv[next] = s - gd * static_cast<double>(x) * (ens.times[next] - t);
                ++next;
            }
            s -= gd * static_cast<double>(x) * dt;
            t = t_next;
            const double v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            if (v * total < fwd)
                ++x;
            else
                --x;
        }
    });
    return ens;
}

HalfLife half_life(const TrajectoryEnsemble& ensemble) {
    const Series m = ensemble.mean_survival();
    const std::vector<double> size = ensemble.weighted_mean_position();
    for (std::size_t i = 1; i < m.values.size(); ++i) {
        if (m.values[i] > 0.5) continue;
        const double l0 = std::log(m.values[i - 1]), l1 = std::log(m.values[i]);
        const double f = (std::log(0.5) - l0) / (l1 - l0);
        HalfLife h;
        h.t_half = m.times[i - 1] + f * (m.times[i] - m.times[i - 1]);
        h.mean_size = size[i - 1] + f * (size[i] - size[i - 1]);
        return h;
    }
    throw NumericalError("mean survival never drops to 1/2 within the horizon");
}

HalfLifeScaling half_life_scaling(const std::vector<double>& gammas, const std::vector<TrajectoryEnsemble>& ensembles) {
    if (gammas.size() != ensembles.size()) throw SpecError("one ensemble per gamma required");
    if (gammas.size() < 3) throw SpecError("half-life scaling needs at least three gamma values");
    HalfLifeScaling out;
    out.gammas = gammas;
    std::vector<double> lg, lt, ls;
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        if (!(gammas[i] > 0.0)) throw SpecError("gamma values must be positive");
        const HalfLife h = half_life(ensembles[i]);
        out.points.push_back(h);
        lg.push_back(std::log(gammas[i]));
        lt.push_back(std::log(h.t_half));
        ls.push_back(std::log(h.mean_size));
    }
    const LineFit ft = fit_line(lg, lt);
    const LineFit fs = fit_line(lg, ls);
    out.exponent = ft.slope;
    out.exponent_stderr = ft.slope_stderr;
    out.size_exponent = fs.slope;
    out.size_exponent_stderr = fs.slope_stderr;
    return out;
}

SurvivalDistribution survival_log_distribution(const TrajectoryEnsemble& ensemble, double t, std::size_t bins) {
    if (ensemble.times.empty() || ensemble.walkers == 0) throw SpecError("empty ensemble");
    if (bins == 0) throw SpecError("need at least one histogram bin");
    if (t < 0.0 || t > ensemble.times.back()) throw SpecError("requested time lies outside the sampled horizon");
    std::size_t idx = 0;
    for (std::size_t i = 1; i < ensemble.times.size(); ++i)
        if (std::abs(ensemble.times[i] - t) < std::abs(ensemble.times[idx] - t)) idx = i;
    SurvivalDistribution d;
    d.time = ensemble.times[idx];
    std::vector<double> s(ensemble.walkers);
    for (std::size_t w = 0; w < ensemble.walkers; ++w) s[w] = ensemble.survival(w, idx);
    const auto [lo_it, hi_it] = std::minmax_element(s.begin(), s.end());
    double lo = *lo_it, hi = *hi_it;
    if (hi == lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    d.bin_edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) d.bin_edges[b] = lo + (hi - lo) * static_cast<double>(b) / bins;
    d.counts.assign(bins, 0);
    double mean = 0.0;
    for (double v : s) {
        auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
        ++d.counts[std::min(b, bins - 1)];
        mean += v;
    }
    mean /= static_cast<double>(s.size());
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    d.mean = mean;
    d.variance = s.size() > 1 ? var / static_cast<double>(s.size() - 1) : 0.0;
    return d;
}

}  // namespace opgap
