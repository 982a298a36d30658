#include "opgap/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "opgap/continuum.hpp"
#include "opgap/dynamics.hpp"
#include "opgap/hermitization.hpp"
#include "opgap/numerics.hpp"
#include "opgap/ruc_micro.hpp"
#include "opgap/spectral.hpp"

namespace opgap::cli {
namespace {

enum class KeyType { real, integer, boolean, word, grid };

const std::map<std::string, KeyType>& schema() {
    static const std::map<std::string, KeyType> keys = {
        {"length", KeyType::integer},        {"w_plus", KeyType::real},
        {"w_minus", KeyType::real},          {"gamma", KeyType::real},
        {"dressed", KeyType::boolean},       {"q", KeyType::integer},
        {"geometry", KeyType::word},         {"boundary_extent", KeyType::integer},
        {"modes", KeyType::integer},         {"x_max", KeyType::integer},
        {"x_stride", KeyType::integer},      {"g", KeyType::grid},
        {"gammas", KeyType::grid},           {"scan_bond", KeyType::integer},
        {"window_factor", KeyType::real},    {"times", KeyType::grid},
        {"length_factor", KeyType::real},
        {"fit_window", KeyType::grid},       {"normalize_q", KeyType::boolean},
        {"backend", KeyType::word},          {"walkers", KeyType::integer},
        {"horizon", KeyType::real},          {"samples", KeyType::integer},
        {"histogram_times", KeyType::grid},  {"bins", KeyType::integer},
        {"seed", KeyType::integer},          {"qs", KeyType::grid},
        {"r", KeyType::real},                {"oracle_samples", KeyType::integer},
        {"com_walkers", KeyType::integer},   {"com_horizon", KeyType::real},
    };
    return keys;
}

bool is_bond_key(const std::string& key) { return key.rfind("bond.", 0) == 0; }

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_real(const std::string& text, const std::string& key) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw ConfigError("key '" + key + "': expected a finite number, got '" + text + "'");
    return v;
}

long long parse_integer(const std::string& text, const std::string& key) {
    long long v = 0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec == std::errc() && ptr == end) return v;
    // accept integral reals such as 1e5
    const double d = parse_real(text, key);
    if (d != std::floor(d) || std::abs(d) > 9.0e18)
        throw ConfigError("key '" + key + "': expected an integer, got '" + text + "'");
    return static_cast<long long>(d);
}

std::string format_real(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string format_value(const ConfigValue& v) {
    struct Visitor {
        std::string operator()(bool b) const { return b ? "true" : "false"; }
        std::string operator()(long long i) const { return std::to_string(i); }
        std::string operator()(double d) const { return format_real(d); }
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(const std::vector<double>& g) const {
            std::string out = "[";
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (i) out += ", ";
                out += format_real(g[i]);
            }
            return out + "]";
        }
    };
    return std::visit(Visitor{}, v);
}

std::vector<std::string> split_args(const std::string& inner) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(inner);
    while (std::getline(in, cur, ',')) parts.push_back(trim(cur));
    return parts;
}

// ---------------------------------------------------------------------------
// Reports

using Cell = std::variant<long long, double, std::string>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

struct Report {
    std::vector<std::pair<std::string, Cell>> summary;
    std::vector<Table> tables;
};

std::string format_cell(const Cell& c) {
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    if (const auto* d = std::get_if<double>(&c)) return format_real(*d);
    return std::get<std::string>(c);
}

nlohmann::ordered_json json_cell(const Cell& c) {
    if (const auto* i = std::get_if<long long>(&c)) return *i;
    if (const auto* d = std::get_if<double>(&c)) return std::isfinite(*d) ? nlohmann::ordered_json(*d) : nullptr;
    return std::get<std::string>(c);
}

std::string render(const RunConfig& config, const Report& report, OutputFormat format) {
    const std::vector<std::string> echo = config_echo(config);
    if (format == OutputFormat::json) {
        nlohmann::ordered_json j;
        j["artifact"] = "opgap";
        j["version"] = kVersion;
        nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
        for (const auto& line : echo) {
            const auto eq = line.find(" = ");
            cfg[line.substr(0, eq)] = line.substr(eq + 3);
        }
        j["config"] = cfg;
        nlohmann::ordered_json summary = nlohmann::ordered_json::object();
        for (const auto& [k, v] : report.summary) summary[k] = json_cell(v);
        j["summary"] = summary;
        nlohmann::ordered_json tables = nlohmann::ordered_json::object();
        for (const auto& t : report.tables) {
            nlohmann::ordered_json rows = nlohmann::ordered_json::array();
            for (const auto& row : t.rows) {
                nlohmann::ordered_json r = nlohmann::ordered_json::object();
                for (std::size_t c = 0; c < t.columns.size(); ++c) r[t.columns[c]] = json_cell(row[c]);
                rows.push_back(std::move(r));
            }
            tables[t.name] = std::move(rows);
        }
        j["tables"] = tables;
        return j.dump(2) + "\n";
    }
    std::ostringstream out;
    out << "# opgap " << kVersion << "\n";
    for (const auto& line : echo) out << "# " << line << "\n";
    out << "# table = summary\nkey,value\n";
    for (const auto& [k, v] : report.summary) out << k << "," << format_cell(v) << "\n";
    for (const auto& t : report.tables) {
        out << "\n# table = " << t.name << "\n";
        for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
        out << "\n";
        for (const auto& row : t.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_cell(row[c]);
            out << "\n";
        }
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Subcommands

std::size_t argmax_abs(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[best])) best = i;
    return best;
}

std::string class_name(ModeClass c) { return c == ModeClass::bound ? "bound" : "extended"; }

Report run_spectrum(const RunConfig& cfg) {
    const ChainSpec spec = cfg.chain_spec();
    const auto k = static_cast<std::size_t>(cfg.integer("modes", 5));
    Report r;
    Table t{"modes", {"n", "lambda", "class", "rounding_window", "residual", "peak_x_phi", "peak_x_psi",
                      "lambda_continuum"},
            {}};
    if (spec.geometry == Geometry::com) {
        if (spec.length == 0) throw ConfigError("com geometry needs an explicit length");
        const FrameParams fp = frame_params(spec);
        const SpectralResult res = low_spectrum(hermitize(build_generator(spec), fp), fp, k);
        r.summary = {{"length", static_cast<long long>(spec.length)}, {"gap", res.gap},
                     {"operator_norm", res.operator_norm}};
        for (std::size_t m = 0; m < res.eigenvalues.size(); ++m)
            t.rows.push_back({static_cast<long long>(m + 1), res.eigenvalues[m], std::string("extended"), 0LL,
                              res.residuals[m], static_cast<long long>(argmax_abs(res.phi_modes[m].values) + 1),
                              static_cast<long long>(argmax_abs(res.psi_modes[m]) + 1),
                              std::numeric_limits<double>::quiet_NaN()});
        r.tables.push_back(std::move(t));
        return r;
    }
    const ChainSpec sized = with_auto_length(spec);
    const SpectralResult res = solve_spec(sized, k);
    const FrameParams fp = frame_params(sized);
    const ContinuumModel cm = continuum_model(sized);
    r.summary = {{"length", static_cast<long long>(sized.length)},
                 {"a", fp.a},
                 {"w", fp.w},
                 {"Lambda", fp.lambda},
                 {"gamma_d", sized.dressed_gamma()},
                 {"gap", res.gap},
                 {"operator_norm", res.operator_norm},
                 {"slowest_class", class_name(res.classifications.front())},
                 {"xi", res.xi ? *res.xi : std::numeric_limits<double>::quiet_NaN()},
                 {"airy_length", cm.airy_length()},
                 {"airy_energy", cm.airy_energy()},
                 {"mode_peak_continuum", mode_peak(cm, 1)}};
    for (std::size_t m = 0; m < res.eigenvalues.size(); ++m)
        t.rows.push_back({static_cast<long long>(m + 1), res.eigenvalues[m], class_name(res.classifications[m]),
                          static_cast<long long>(res.in_rounding_window[m] ? 1 : 0), res.residuals[m],
                          static_cast<long long>(argmax_abs(res.phi_modes[m].values) + 1),
                          static_cast<long long>(argmax_abs(res.psi_modes[m]) + 1),
                          continuum_eigenvalue(cm, static_cast<int>(m + 1))});
    r.tables.push_back(std::move(t));
    return r;
}

Report run_modes(const RunConfig& cfg) {
    ChainSpec spec = cfg.chain_spec();
    if (spec.geometry == Geometry::com && spec.length == 0) throw ConfigError("com geometry needs an explicit length");
    if (spec.geometry != Geometry::com) spec = with_auto_length(spec);
    const auto k = static_cast<std::size_t>(cfg.integer("modes", 3));
    const FrameParams fp = frame_params(spec);
    const SpectralResult res = low_spectrum(hermitize(build_generator(spec), fp), fp, k);
    const auto x_max = static_cast<std::size_t>(cfg.integer("x_max", static_cast<long long>(spec.length)));
    const auto stride = static_cast<std::size_t>(cfg.integer("x_stride", 1));
    Report r;
    r.summary = {{"length", static_cast<long long>(spec.length)}, {"gap", res.gap}};
    for (std::size_t m = 0; m < k; ++m) {
        const std::string n = std::to_string(m + 1);
        r.summary.emplace_back("lambda_" + n, res.eigenvalues[m]);
        r.summary.emplace_back("phi_log_scale_" + n, res.phi_modes[m].log_scale);
    }
    Table t{"profiles", {"x"}, {}};
    for (std::size_t m = 0; m < k; ++m) t.columns.push_back("psi_" + std::to_string(m + 1));
    for (std::size_t m = 0; m < k; ++m) t.columns.push_back("log_abs_psi_" + std::to_string(m + 1));
    for (std::size_t m = 0; m < k; ++m) t.columns.push_back("phi_" + std::to_string(m + 1));
    for (std::size_t x = 1; x <= std::min(x_max, spec.length); x += stride) {
        std::vector<Cell> row{static_cast<long long>(x)};
        for (std::size_t m = 0; m < k; ++m) row.emplace_back(res.psi_modes[m][x - 1]);
        for (std::size_t m = 0; m < k; ++m) row.emplace_back(res.psi_log[m].log_abs[x - 1]);
        for (std::size_t m = 0; m < k; ++m) row.emplace_back(res.phi_modes[m].values[x - 1]);
        t.rows.push_back(std::move(row));
    }
    r.tables.push_back(std::move(t));
    return r;
}

Report run_scan_binding(const RunConfig& cfg, std::size_t threads) {
    ChainSpec templ = cfg.chain_spec();
    BindingScanOptions opts;
    opts.scan_bond = static_cast<std::size_t>(cfg.integer("scan_bond", 1));
    opts.window_factor = cfg.real("window_factor", 1.0);
    opts.length_factor = cfg.real("length_factor", 0.0);
    opts.threads = threads;
    const std::vector<double> gs = cfg.grid("g");
    const std::vector<double> gammas = cfg.grid("gammas");
    const BindingCurve c = binding_scan(templ, gs, gammas, opts);
    Report r;
    r.summary = {{"Lambda", c.lambda},
                 {"w", c.w},
                 {"g_c", c.g_c_estimate},
                 {"g_c_uncertainty", c.g_c_uncertainty},
                 {"rounding_slope", c.rounding_slope},
                 {"binding_exponent", c.binding_exponent},
                 {"binding_exponent_stderr", c.binding_exponent_stderr},
                 {"xi_exponent", c.xi_exponent},
                 {"xi_exponent_stderr", c.xi_exponent_stderr},
                 {"exponent_points", static_cast<long long>(c.exponent_points)}};
    Table curve{"gamma_of_g", {"gamma", "g", "Gamma", "Lambda_minus_Gamma", "xi"}, {}};
    for (std::size_t i = 0; i < c.gamma_values.size(); ++i)
        for (std::size_t j = 0; j < c.g_values.size(); ++j)
            curve.rows.push_back({c.gamma_values[i], c.g_values[j], c.gamma_of_g[i][j], c.lambda - c.gamma_of_g[i][j],
                                  c.xi_of_g[i][j]});
    Table cross{"crossings", {"gamma", "g_cross"}, {}};
    for (std::size_t i = 0; i < c.gamma_values.size(); ++i) cross.rows.push_back({c.gamma_values[i], c.crossing_g[i]});
    r.tables.push_back(std::move(curve));
    r.tables.push_back(std::move(cross));
    return r;
}

Report run_dynamics(const RunConfig& cfg) {
    const ChainSpec spec = with_auto_length(cfg.chain_spec());
    const std::vector<double> times = cfg.grid("times");
    std::optional<int> q;
    if (cfg.boolean("normalize_q", false)) q = spec.q;
    const EvolutionBackend backend =
        cfg.word("backend", "stepping") == "spectral" ? EvolutionBackend::spectral : EvolutionBackend::stepping;
    const Series s = autocorrelation(spec, times, q, backend);
    const double lambda1 = low_eigenvalues(hermitian_generator(spec), 1).front();
    Report r;
    r.summary = {{"length", static_cast<long long>(spec.length)}, {"lambda_1", lambda1}};
    if (cfg.has("fit_window")) {
        const std::vector<double> win = cfg.grid("fit_window");
        const DecayFit f = fit_decay_rate(s, win[0], win[1]);
        r.summary.emplace_back("fitted_rate", f.rate);
        r.summary.emplace_back("fitted_rate_stderr", f.stderr_rate);
        r.summary.emplace_back("fit_points", static_cast<long long>(f.points));
        r.summary.emplace_back("relative_difference", (f.rate - lambda1) / lambda1);
    }
    Table t{"autocorrelation", {"t", "C2", "log_C2"}, {}};
    for (std::size_t i = 0; i < s.times.size(); ++i)
        t.rows.push_back({s.times[i], s.values[i],
                          s.values[i] > 0.0 ? std::log(s.values[i]) : std::numeric_limits<double>::quiet_NaN()});
    r.tables.push_back(std::move(t));
    return r;
}

Report run_trajectories(const RunConfig& cfg, std::size_t threads) {
    const ChainSpec base = cfg.chain_spec();
    const std::vector<double> gammas = cfg.has("gammas") ? cfg.grid("gammas") : std::vector<double>{base.gamma};
    const auto walkers = static_cast<std::size_t>(cfg.integer("walkers"));
    const double horizon = cfg.real("horizon");
    const auto samples = static_cast<std::size_t>(cfg.integer("samples", 200));
    const auto bins = static_cast<std::size_t>(cfg.integer("bins", 40));
    const auto seed = static_cast<std::uint64_t>(cfg.integer("seed"));
    const std::vector<double> hist_times = cfg.has("histogram_times") ? cfg.grid("histogram_times") : std::vector<double>{};

    Report r;
    Table hl{"half_life", {"gamma", "length", "t_half", "mean_size"}, {}};
    Table surv{"survival", {"gamma", "t", "mean_survival", "stderr", "weighted_mean_x"}, {}};
    Table moments{"log_survival_moments", {"gamma", "t", "mean", "variance"}, {}};
    Table hist{"histogram", {"gamma", "t", "bin_lo", "bin_hi", "count"}, {}};
    std::vector<TrajectoryEnsemble> ensembles;
    bool all_crossed = true;
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        ChainSpec s = base;
        s.gamma = gammas[i];
        s = with_auto_length(s);
        TrajectoryEnsemble e = sample_trajectories(s, walkers, horizon, samples, substream_seed(seed, i), threads);
        double th = std::numeric_limits<double>::quiet_NaN(), size = th;
        try {
            const HalfLife h = half_life(e);
            th = h.t_half;
            size = h.mean_size;
        } catch (const NumericalError&) {
            all_crossed = false;
        }
        hl.rows.push_back({gammas[i], static_cast<long long>(s.length), th, size});
        const Series m = e.mean_survival();
        const std::vector<double> se = e.mean_survival_stderr();
        const std::vector<double> wx = e.weighted_mean_position();
        for (std::size_t t = 0; t < m.times.size(); ++t) surv.rows.push_back({gammas[i], m.times[t], m.values[t], se[t], wx[t]});
        for (double t : hist_times) {
            const SurvivalDistribution d = survival_log_distribution(e, t, bins);
            moments.rows.push_back({gammas[i], d.time, d.mean, d.variance});
            for (std::size_t b = 0; b < d.counts.size(); ++b)
                hist.rows.push_back({gammas[i], d.time, d.bin_edges[b], d.bin_edges[b + 1],
                                     static_cast<long long>(d.counts[b])});
        }
        ensembles.push_back(std::move(e));
    }
    if (gammas.size() >= 3 && all_crossed) {
        const HalfLifeScaling sc = half_life_scaling(gammas, ensembles);
        r.summary = {{"half_life_exponent", sc.exponent},
                     {"half_life_exponent_stderr", sc.exponent_stderr},
                     {"size_exponent", sc.size_exponent},
                     {"size_exponent_stderr", sc.size_exponent_stderr}};
    }
    r.summary.emplace_back("walkers", static_cast<long long>(walkers));
    r.tables.push_back(std::move(hl));
    r.tables.push_back(std::move(surv));
    r.tables.push_back(std::move(moments));
    r.tables.push_back(std::move(hist));
    return r;
}

Report run_ruc_verify(const RunConfig& cfg, std::size_t threads) {
    const std::vector<double> qs = cfg.has("qs") ? cfg.grid("qs") : std::vector<double>{2.0, 3.0};
    const double rate = cfg.real("r", 1.0);
    const auto n = static_cast<std::size_t>(cfg.integer("oracle_samples", 100000));
    const auto walkers = static_cast<std::size_t>(cfg.integer("com_walkers", 10000));
    const double horizon = cfg.real("com_horizon", 20.0 / rate);
    const auto seed = static_cast<std::uint64_t>(cfg.integer("seed"));
    Report r;
    Table params{"parameters",
                 {"q", "geometry", "p", "w_plus", "w_minus", "a", "w", "Lambda", "v_b", "gamma_dressing"},
                 {}};
    Table oracle{"endpoint_oracle", {"q", "p_exact", "p_hat", "std_err", "z_score", "samples"}, {}};
    for (std::size_t i = 0; i < qs.size(); ++i) {
        const int q = static_cast<int>(qs[i]);
        for (Geometry g : {Geometry::edge, Geometry::relative, Geometry::com}) {
            const RucParams p = ruc_params(q, rate, g);
            params.rows.push_back({static_cast<long long>(q), to_string(g), p.p, p.w_plus, p.w_minus, p.a, p.w,
                                   p.lambda, p.w_plus - p.w_minus, p.gamma_dressing});
        }
        const GateOracleReport rep = endpoint_transition_estimate(q, n, substream_seed(seed, 2 + i), threads);
        const double exact = 1.0 / (static_cast<double>(q) * q + 1.0);
        oracle.rows.push_back({static_cast<long long>(q), exact, rep.p_hat, rep.std_err,
                               (rep.p_hat - exact) / rep.std_err, static_cast<long long>(rep.samples)});
    }
    const ComDiffusionReport com = com_diffusion_check(rate, horizon, walkers, substream_seed(seed, 1), threads);
    r.summary = {{"r", rate},
                 {"D_com_exact", rate / 4.0},
                 {"D_com_hat", com.d_hat},
                 {"D_com_stderr", com.d_stderr},
                 {"D_com_z_score", (com.d_hat - rate / 4.0) / com.d_stderr},
                 {"com_mean", com.mean},
                 {"com_mean_stderr", com.mean_stderr},
                 {"com_horizon", horizon},
                 {"com_walkers", static_cast<long long>(walkers)}};
    r.tables.push_back(std::move(params));
    r.tables.push_back(std::move(oracle));
    return r;
}

Report run_compare_continuum(const RunConfig& cfg) {
    const ChainSpec base = cfg.chain_spec();
    if (base.geometry == Geometry::com) throw ConfigError("compare-continuum needs edge or relative geometry");
    const std::vector<double> gammas = cfg.has("gammas") ? cfg.grid("gammas") : std::vector<double>{base.gamma};
    const auto k = static_cast<std::size_t>(cfg.integer("modes", 5));
    Report r;
    Table levels{"levels",
                 {"gamma", "n", "length", "lambda_discrete", "lambda_continuum", "scaled_discrete", "minus_a_n",
                  "relative_difference"},
                 {}};
    Table peaks{"peaks", {"gamma", "n", "argmax_phi", "x_max_continuum", "difference_in_airy_lengths"}, {}};
    for (double gm : gammas) {
        ChainSpec s = base;
        s.gamma = gm;
        s = with_auto_length(s);
        const FrameParams fp = frame_params(s);
        const SpectralResult res = low_spectrum(hermitize(build_generator(s), fp), fp, k);
        const ContinuumModel cm = continuum_model(s);
        for (std::size_t m = 0; m < k; ++m) {
            const int n = static_cast<int>(m + 1);
            const double lc = continuum_eigenvalue(cm, n);
            const double ld = res.eigenvalues[m];
            levels.rows.push_back({gm, static_cast<long long>(n), static_cast<long long>(s.length), ld, lc,
                                   (ld - cm.lambda) / cm.airy_energy(), -airy_zero(n), (ld - lc) / (lc - cm.lambda)});
            if (cm.a > 0.0) {
                const auto peak = static_cast<double>(argmax_abs(res.phi_modes[m].values) + 1);
                const double xm = mode_peak(cm, n);
                peaks.rows.push_back(
                    {gm, static_cast<long long>(n), static_cast<long long>(peak), xm, (peak - xm) / cm.airy_length()});
            }
        }
    }
    r.summary = {{"Lambda", frame_params(with_auto_length(base)).lambda},
                 {"effective_dirichlet_point", effective_dirichlet_point(base)}};
    r.tables.push_back(std::move(levels));
    r.tables.push_back(std::move(peaks));
    return r;
}

void require(const RunConfig& c, std::initializer_list<const char*> keys) {
    for (const char* k : keys)
        if (!c.has(k)) throw ConfigError("subcommand '" + c.subcommand + "' requires key '" + k + "'");
}

void require_positive_integer(const RunConfig& c, const char* key) {
    if (c.has(key) && c.integer(key) < 1) throw ConfigError(std::string("key '") + key + "' must be >= 1");
}

}  // namespace

// ---------------------------------------------------------------------------

OutputFormat parse_format(const std::string& s) {
    if (s == "csv") return OutputFormat::csv;
    if (s == "json") return OutputFormat::json;
    throw ConfigError("unknown output format '" + s + "' (csv | json)");
}

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {"spectrum",     "modes",      "scan-binding",     "dynamics",
                                                   "trajectories", "ruc-verify", "compare-continuum"};
    return names;
}

bool is_subcommand(std::string_view name) {
    const auto& s = subcommands();
    return std::find(s.begin(), s.end(), name) != s.end();
}

double RunConfig::real(const std::string& key, std::optional<double> fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) {
        if (fallback) return *fallback;
        throw ConfigError("missing key '" + key + "'");
    }
    if (const auto* d = std::get_if<double>(&it->second)) return *d;
    if (const auto* i = std::get_if<long long>(&it->second)) return static_cast<double>(*i);
    throw ConfigError("key '" + key + "' is not a number");
}

long long RunConfig::integer(const std::string& key, std::optional<long long> fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) {
        if (fallback) return *fallback;
        throw ConfigError("missing key '" + key + "'");
    }
    if (const auto* i = std::get_if<long long>(&it->second)) return *i;
    throw ConfigError("key '" + key + "' is not an integer");
}

bool RunConfig::boolean(const std::string& key, std::optional<bool> fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) {
        if (fallback) return *fallback;
        throw ConfigError("missing key '" + key + "'");
    }
    if (const auto* b = std::get_if<bool>(&it->second)) return *b;
    throw ConfigError("key '" + key + "' is not a boolean");
}

std::string RunConfig::word(const std::string& key, std::optional<std::string> fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) {
        if (fallback) return *fallback;
        throw ConfigError("missing key '" + key + "'");
    }
    if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
    throw ConfigError("key '" + key + "' is not a word");
}

std::vector<double> RunConfig::grid(const std::string& key, std::optional<std::vector<double>> fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) {
        if (fallback) return *fallback;
        throw ConfigError("missing key '" + key + "'");
    }
    if (const auto* g = std::get_if<std::vector<double>>(&it->second)) return *g;
    throw ConfigError("key '" + key + "' is not a grid");
}

ChainSpec RunConfig::chain_spec() const {
    ChainSpec s;
    const long long len = integer("length", 0);
    if (len < 0) throw ConfigError("length must be >= 0");
    s.length = static_cast<std::size_t>(len);
    s.w_plus = real("w_plus");
    s.w_minus = real("w_minus");
    s.gamma = real("gamma", 0.0);
    s.use_dressed_rate = boolean("dressed", false);
    s.q = static_cast<int>(integer("q", 2));
    try {
        s.geometry = parse_geometry(word("geometry", "edge"));
    } catch (const SpecError& e) {
        throw ConfigError(e.what());
    }
    const long long extent = integer("boundary_extent", 0);
    if (extent < 0) throw ConfigError("boundary_extent must be >= 0");
    s.boundary_extent = static_cast<std::size_t>(extent);
    for (const auto& [k, v] : values) {
        if (!is_bond_key(k)) continue;
        const long long bond = parse_integer(k.substr(5), k);
        if (bond < 1) throw ConfigError("bond index in '" + k + "' must be >= 1");
        s.bond_overrides[static_cast<std::size_t>(bond)] = real(k);
    }
    return s;
}

std::vector<double> parse_grid(std::string_view text_in) {
    const std::string text = trim(text_in);
    std::vector<double> out;
    auto call = [&](const char* name) -> std::optional<std::vector<std::string>> {
        const std::string prefix = std::string(name) + "(";
        if (text.rfind(prefix, 0) != 0 || text.back() != ')') return std::nullopt;
        return split_args(text.substr(prefix.size(), text.size() - prefix.size() - 1));
    };
    if (auto args = call("linspace")) {
        if (args->size() != 3) throw ConfigError("linspace takes (start, stop, count)");
        const double a = parse_real((*args)[0], "linspace"), b = parse_real((*args)[1], "linspace");
        const long long n = parse_integer((*args)[2], "linspace");
        if (n < 1) throw ConfigError("linspace count must be >= 1");
        for (long long i = 0; i < n; ++i)
            out.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
        if (n > 1) out.back() = b;
    } else if (auto args = call("logspace")) {
        if (args->size() != 3) throw ConfigError("logspace takes (start, stop, count)");
        const double a = parse_real((*args)[0], "logspace"), b = parse_real((*args)[1], "logspace");
        const long long n = parse_integer((*args)[2], "logspace");
        if (n < 1) throw ConfigError("logspace count must be >= 1");
        if (!(a > 0.0 && b > 0.0)) throw ConfigError("logspace endpoints must be positive");
        const double la = std::log10(a), lb = std::log10(b);
        for (long long i = 0; i < n; ++i)
            out.push_back(n == 1 ? a : std::pow(10.0, la + (lb - la) * static_cast<double>(i) / static_cast<double>(n - 1)));
        out.front() = a;
        if (n > 1) out.back() = b;
    } else if (text.size() >= 2 && text.front() == '[' && text.back() == ']') {
        const std::string inner = trim(text.substr(1, text.size() - 2));
        if (!inner.empty())
            for (const auto& p : split_args(inner)) out.push_back(parse_real(p, "grid"));
    } else {
        out.push_back(parse_real(text, "grid"));
    }
    if (out.empty()) throw ConfigError("grid is empty");
    for (std::size_t i = 1; i < out.size(); ++i)
        if (!(out[i] > out[i - 1])) throw ConfigError("grid '" + text + "' is not strictly ascending");
    return out;
}

RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
        if (key == "subcommand") {
            if (!cfg.subcommand.empty()) throw ConfigError("subcommand given more than once");
            cfg.subcommand = value;
            continue;
        }
        if (cfg.values.count(key)) throw ConfigError("key '" + key + "' given more than once");
        KeyType type;
        if (is_bond_key(key)) {
            type = KeyType::real;
        } else {
            const auto it = schema().find(key);
            if (it == schema().end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
            type = it->second;
        }
        switch (type) {
            case KeyType::real: cfg.values[key] = parse_real(value, key); break;
            case KeyType::integer: cfg.values[key] = parse_integer(value, key); break;
            case KeyType::boolean:
                if (value != "true" && value != "false") throw ConfigError("key '" + key + "' must be true or false");
                cfg.values[key] = value == "true";
                break;
            case KeyType::word: cfg.values[key] = value; break;
            case KeyType::grid: cfg.values[key] = parse_grid(value); break;
        }
    }
    return cfg;
}

void validate(const RunConfig& c) {
    if (c.subcommand.empty()) throw ConfigError("no subcommand given");
    if (!is_subcommand(c.subcommand)) throw ConfigError("unknown subcommand '" + c.subcommand + "'");
    for (const char* k : {"modes", "x_stride", "walkers", "samples", "bins", "oracle_samples", "com_walkers", "q"})
        require_positive_integer(c, k);
    if (c.has("seed") && c.integer("seed") < 0) throw ConfigError("seed must be >= 0");
    if (c.has("backend")) {
        const std::string b = c.word("backend");
        if (b != "stepping" && b != "spectral") throw ConfigError("backend must be stepping or spectral");
    }
    const std::string& sc = c.subcommand;
    const bool chain = sc != "ruc-verify";
    if (chain) {
        require(c, {"w_plus", "w_minus"});
        ChainSpec s = c.chain_spec();
        if (s.length == 0) s.length = std::max<std::size_t>(s.boundary_extent + 8, 64);
        try {
            s.validate();
        } catch (const SpecError& e) {
            throw ConfigError(e.what());
        }
    }
    if (sc == "spectrum" || sc == "modes" || sc == "dynamics") require(c, {"gamma"});
    if (sc == "scan-binding") {
        require(c, {"g", "gammas"});
        if (c.grid("g").size() < 2) throw ConfigError("g grid needs at least two points");
        for (double g : c.grid("g"))
            if (!(g > 0.0)) throw ConfigError("g grid values must be positive");
        for (double g : c.grid("gammas"))
            if (!(g > 0.0)) throw ConfigError("gammas must be positive");
    }
    if (sc == "dynamics") {
        require(c, {"times"});
        if (c.grid("times").front() < 0.0) throw ConfigError("times must be >= 0");
        if (c.has("fit_window") && c.grid("fit_window").size() != 2)
            throw ConfigError("fit_window must list exactly two times");
    }
    if (sc == "trajectories") {
        require(c, {"seed", "walkers", "horizon"});
        if (!(c.real("horizon") > 0.0)) throw ConfigError("horizon must be positive");
        if (!c.has("gammas")) require(c, {"gamma"});
        if (c.has("histogram_times"))
            for (double t : c.grid("histogram_times"))
                if (t < 0.0 || t > c.real("horizon")) throw ConfigError("histogram_times must lie in [0, horizon]");
    }
    if (sc == "ruc-verify") {
        require(c, {"seed"});
        if (c.has("qs"))
            for (double q : c.grid("qs"))
                if (q < 2.0 || q != std::floor(q)) throw ConfigError("qs must be integers >= 2");
        if (c.has("r") && !(c.real("r") > 0.0)) throw ConfigError("r must be positive");
    }
    if (sc == "compare-continuum" && !c.has("gammas")) require(c, {"gamma"});
}

std::vector<std::string> config_echo(const RunConfig& config) {
    std::vector<std::string> lines;
    lines.push_back("subcommand = " + config.subcommand);
    for (const auto& [k, v] : config.values) lines.push_back(k + " = " + format_value(v));
    return lines;
}

RunConfig parse_output_config(std::string_view output) {
    const std::string text = trim(output);
    if (!text.empty() && text.front() == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("output is not valid JSON: ") + e.what());
        }
        if (!j.contains("config") || !j["config"].is_object()) throw ConfigError("output has no config block");
        std::string cfg;
        for (const auto& [k, v] : j["config"].items()) cfg += k + " = " + v.get<std::string>() + "\n";
        return parse_config(cfg);
    }
    std::istringstream in(text);
    std::string line, cfg;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) != 0) break;
        if (line.rfind("# table = ", 0) == 0) break;
        if (first) {
            first = false;
            if (line.rfind("# opgap ", 0) == 0) continue;
        }
        cfg += line.substr(2) + "\n";
    }
    return parse_config(cfg);
}

std::string run(const RunConfig& config, OutputFormat format, std::size_t threads) {
    validate(config);
    const std::string& sc = config.subcommand;
    Report r;
    if (sc == "spectrum")
        r = run_spectrum(config);
    else if (sc == "modes")
        r = run_modes(config);
    else if (sc == "scan-binding")
        r = run_scan_binding(config, threads);
    else if (sc == "dynamics")
        r = run_dynamics(config);
    else if (sc == "trajectories")
        r = run_trajectories(config, threads);
    else if (sc == "ruc-verify")
        r = run_ruc_verify(config, threads);
    else
        r = run_compare_continuum(config);
    return render(config, r, format);
}

int main_entry(int argc, char** argv) {
    CLI::App app{"opgap: endpoint-Markov model of operator spreading with dissipation"};
    std::string subcommand, config_path, out_path, format_name;
    std::optional<long long> seed;
    std::optional<std::size_t> threads;
    app.add_option("subcommand", subcommand, "spectrum | modes | scan-binding | dynamics | trajectories | "
                                             "ruc-verify | compare-continuum")
        ->required();
    app.add_option("--config", config_path, "config file (key = value lines)")->required();
    app.add_option("--out", out_path, "output file (default: stdout)");
    app.add_option("--format", format_name, "csv | json (default csv)");
    app.add_option("--seed", seed, "overrides the config seed");
    app.add_option("--threads", threads, "worker threads (default: OPGAP_THREADS or 1)");
    app.set_version_flag("--version", std::string("opgap ") + kVersion);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(ExitCode::usage);
    }
    if (!is_subcommand(subcommand)) {
        std::cerr << "opgap: unknown subcommand '" << subcommand << "'\n";
        return static_cast<int>(ExitCode::usage);
    }

    std::string text;
    {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "opgap: cannot read config '" << config_path << "'\n";
            return static_cast<int>(ExitCode::io);
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }

    std::string output;
    try {
        RunConfig cfg = parse_config(text);
        if (!cfg.subcommand.empty() && cfg.subcommand != subcommand)
            throw ConfigError("config names subcommand '" + cfg.subcommand + "' but '" + subcommand + "' was requested");
        cfg.subcommand = subcommand;
        if (seed) cfg.values["seed"] = *seed;
        const OutputFormat format = parse_format(format_name.empty() ? "csv" : format_name);
        const std::size_t nthreads = threads ? std::max<std::size_t>(*threads, 1) : default_thread_count();
        output = run(cfg, format, nthreads);
    } catch (const SpecError& e) {
        std::cerr << "opgap: config error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::config);
    } catch (const NumericalError& e) {
        std::cerr << "opgap: numerical failure: " << e.what() << "\n";
        return static_cast<int>(ExitCode::numerical);
    } catch (const std::exception& e) {
        std::cerr << "opgap: numerical failure: " << e.what() << "\n";
        return static_cast<int>(ExitCode::numerical);
    }

    if (out_path.empty()) {
        std::cout << output;
        std::cout.flush();
        return std::cout ? static_cast<int>(ExitCode::ok) : static_cast<int>(ExitCode::io);
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        std::cerr << "opgap: cannot write output '" << out_path << "'\n";
        return static_cast<int>(ExitCode::io);
    }
    out << output;
    out.close();
    if (!out) {
        std::cerr << "opgap: failed while writing '" << out_path << "'\n";
        return static_cast<int>(ExitCode::io);
    }
    return static_cast<int>(ExitCode::ok);
}

}  // namespace opgap::cli
