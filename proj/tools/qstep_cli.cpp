// qstep experiment runner: named, deterministic experiments writing CSV data,
// a machine-readable summary, a manifest, and a plot script per run.
//
// Usage: qstep <experiment> [--config file] [--param key=value]... [--out dir]
// Exit codes: 0 ok, 2 config error, 3 numerical error (module error name in
// summary.json).

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qstep/metastable.hpp"
#include "qstep/spectral.hpp"
#include "qstep/stationary.hpp"
#include "qstep/tdse.hpp"

using json = nlohmann::ordered_json;
using namespace qstep;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Parameter table: declared defaults, overridden by --config / --param,
// unknown keys rejected.

class Params {
  public:
    explicit Params(std::map<std::string, std::string> defaults) : values_(std::move(defaults)) {}

    void set(const std::string& key, const std::string& value) {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("unknown parameter: " + key);
        it->second = value;
    }

    double get_d(const std::string& key) const {
        const std::string& s = at(key);
        try {
            std::size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("parameter " + key + " is not a number: " + s);
        }
    }

    long get_i(const std::string& key) const {
        double v = get_d(key);
        if (v != std::floor(v)) throw ConfigError("parameter " + key + " must be an integer");
        return static_cast<long>(v);
    }

    bool get_b(const std::string& key) const {
        const std::string& s = at(key);
        if (s == "true" || s == "1") return true;
        if (s == "false" || s == "0") return false;
        throw ConfigError("parameter " + key + " must be true/false");
    }

    std::vector<int> get_int_list(const std::string& key) const {
        std::vector<int> out;
        std::stringstream ss(at(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                out.push_back(std::stoi(item));
            } catch (const std::exception&) {
                throw ConfigError("parameter " + key + " has a non-integer entry: " + item);
            }
        }
        if (out.empty()) throw ConfigError("parameter " + key + " must be a non-empty list");
        return out;
    }

    const std::map<std::string, std::string>& resolved() const { return values_; }

  private:
    const std::string& at(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("unknown parameter: " + key);
        return it->second;
    }

    std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// Output helpers

std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
  public:
    CsvWriter(const fs::path& path, const std::vector<std::string>& columns) : out_(path) {
        if (!out_) throw ConfigError("cannot open output file: " + path.string());
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << (i ? "," : "") << columns[i];
        out_ << "\n";
    }
    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << (i ? "," : "") << fmt_g(values[i]);
        out_ << "\n";
    }

  private:
    std::ofstream out_;
};

void write_json(const fs::path& path, const json& j) {
    std::ofstream f(path);
    f << j.dump(2) << "\n";
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    f << text;
}

void write_manifest(const fs::path& dir, const std::string& experiment, const Params& p) {
    json m;
    m["artifact_version"] = kVersion;
    m["experiment"] = experiment;
    m["parameters"] = json::object();
    for (const auto& [k, v] : p.resolved()) m["parameters"][k] = v;
    write_json(dir / "manifest.json", m);
}

// Deterministic parallel map: worker pool over independent points, results
// merged in index order.
template <typename Fn>
void parallel_for(long n, Fn fn) {
    unsigned workers = std::min<unsigned>(std::thread::hardware_concurrency(), 8);
    if (workers < 2 || n < 64) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (long i = next++; i < n; i = next++) fn(i);
        });
    for (auto& t : pool) t.join();
}

std::vector<double> log_grid(double lo, double hi, long n) {
    if (!(lo > 0) || !(hi > lo) || n < 2) throw ConfigError("log grid needs 0 < lo < hi, n >= 2");
    std::vector<double> g(n);
    for (long i = 0; i < n; ++i) g[i] = lo * std::pow(hi / lo, double(i) / double(n - 1));
    return g;
}

double rate_so_far(const std::vector<double>& t, const std::vector<double>& p, std::size_t upto,
                   double tau) {
    std::vector<double> tt(t.begin(), t.begin() + upto + 1);
    std::vector<double> pp(p.begin(), p.begin() + upto + 1);
    return qstep::detail::fit_decay_rate(tt, pp, 0.1 * tau, t[upto]);
}

PlateauSpec spec_from_alpha(double alpha, double a) {
    double lambda0 = 2.0 * a / alpha;
    double dE = 0.5 * std::pow(2.0 * M_PI / lambda0, 2);
    return PlateauSpec(a, dE);
}

// ---------------------------------------------------------------------------
// Experiments

json run_step_sweep(const Params& p, const fs::path& dir) {
    double dE = p.get_d("dE");
    std::vector<double> r = log_grid(p.get_d("r_min"), p.get_d("r_max"), p.get_i("n"));
    std::vector<double> R(r.size());
    parallel_for(static_cast<long>(r.size()),
                 [&](long i) { R[i] = rect_step_R(r[i] * dE, dE).R; });
    CsvWriter csv(dir / "step_sweep.csv", {"r", "E", "R", "T"});
    for (std::size_t i = 0; i < r.size(); ++i) csv.row({r[i], r[i] * dE, R[i], 1.0 - R[i]});

    json s;
    s["n_points"] = r.size();
    s["R_example"] = {{"E", 1.0}, {"dE", 18.4}, {"R", rect_step_R(1.0, 18.4).R},
                      {"tolerance", 1e-4}};
    write_text(dir / "plot.py",
               "import matplotlib\nmatplotlib.use('Agg')\n"
               "import matplotlib.pyplot as plt\nimport csv\n"
               "r, R = [], []\n"
               "with open('step_sweep.csv') as f:\n"
               "    for row in csv.DictReader(f):\n"
               "        r.append(float(row['r'])); R.append(float(row['R']))\n"
               "plt.semilogx(r, R)\n"
               "plt.xlabel('r = E / dE'); plt.ylabel('R')\n"
               "plt.title('Reflection at a sharp downward step')\n"
               "plt.savefig('step_sweep.png', dpi=150)\n");
    return s;
}

json run_soft_step_sweep(const Params& p, const fs::path& dir) {
    double E = p.get_d("E"), dE = p.get_d("dE");
    std::vector<double> L = log_grid(p.get_d("L_min"), p.get_d("L_max"), p.get_i("n"));
    std::vector<double> R(L.size());
    parallel_for(static_cast<long>(L.size()), [&](long i) { R[i] = soft_step_R(E, dE, L[i]).R; });
    double k2 = std::sqrt(2.0 * (E + dE));
    CsvWriter csv(dir / "soft_step_sweep.csv", {"L", "k2L", "R"});
    for (std::size_t i = 0; i < L.size(); ++i) csv.row({L[i], k2 * L[i], R[i]});

    json s;
    s["E"] = E;
    s["dE"] = dE;
    s["R_rect_limit"] = rect_step_R(E, dE).R;
    write_text(dir / "plot.py",
               "import matplotlib\nmatplotlib.use('Agg')\n"
               "import matplotlib.pyplot as plt\nimport csv\n"
               "L, R = [], []\n"
               "with open('soft_step_sweep.csv') as f:\n"
               "    for row in csv.DictReader(f):\n"
               "        L.append(float(row['k2L'])); R.append(float(row['R']))\n"
               "plt.loglog(L, R)\n"
               "plt.xlabel('k2 L'); plt.ylabel('R')\n"
               "plt.title('Reflection at a smoothed step')\n"
               "plt.savefig('soft_step_sweep.png', dpi=150)\n");
    return s;
}

json run_uv_map(const Params& p, const fs::path& dir) {
    std::vector<double> u = log_grid(p.get_d("u_min"), p.get_d("u_max"), p.get_i("nu"));
    std::vector<double> v = log_grid(p.get_d("v_min"), p.get_d("v_max"), p.get_i("nv"));
    std::vector<double> R(u.size() * v.size());
    parallel_for(static_cast<long>(u.size()), [&](long i) {
        for (std::size_t j = 0; j < v.size(); ++j)
            R[i * v.size() + j] = R_uv({u[i], v[j]});
    });
    CsvWriter csv(dir / "uv_map.csv", {"u", "v", "R"});
    long high = 0, region_violations = 0;
    for (std::size_t i = 0; i < u.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j) {
            double r = R[i * v.size() + j];
            csv.row({u[i], v[j], r});
            if (r > 0.99) ++high;
            if (u[i] < 1e-3 && v[j] > 1e3 * u[i] && r <= 0.99) ++region_violations;
        }

    json s;
    s["fraction_R_above_0.99"] = double(high) / double(R.size());
    s["region_u<1e-3_v>1e3u"] = {{"violations", region_violations}, {"threshold_R", 0.99}};
    write_text(dir / "plot.py",
               "import matplotlib\nmatplotlib.use('Agg')\n"
               "import matplotlib.pyplot as plt\nimport numpy as np\nimport csv\n"
               "u, v, R = [], [], []\n"
               "with open('uv_map.csv') as f:\n"
               "    for row in csv.DictReader(f):\n"
               "        u.append(float(row['u'])); v.append(float(row['v'])); "
               "R.append(float(row['R']))\n"
               "uu = sorted(set(u)); vv = sorted(set(v))\n"
               "Z = np.array(R).reshape(len(uu), len(vv)).T\n"
               "plt.pcolormesh(uu, vv, Z, shading='nearest')\n"
               "plt.colorbar(label='R')\n"
               "plt.contour(uu, vv, Z, levels=[0.99], colors='w')\n"
               "plt.xscale('log'); plt.yscale('log')\n"
               "plt.xlabel('u'); plt.ylabel('v')\n"
               "plt.title('R(u, v) with the R = 0.99 contour')\n"
               "plt.savefig('uv_map.png', dpi=150)\n");
    return s;
}

json run_packet_scatter(const Params& p, const fs::path& dir) {
    double k0 = p.get_d("k0");
    double E = 0.5 * k0 * k0;
    double dE = p.get_d("dE_ratio") * E;
    ScatteringRun run;
    run.initial = {p.get_d("mu"), p.get_d("sigma"), k0};
    run.potential = Potential::hard_box(p.get_d("box_lo"), p.get_d("box_hi"),
                                        Potential::rect_step(dE, p.get_d("step_center")));
    run.config.dt = p.get_d("dt");
    run.n_points = static_cast<int>(p.get_i("n_points"));

    // first pass finds the separation time, second pass records snapshots
    ScatterOutcome probe = run_scattering(run);
    long n_snap = p.get_i("n_snapshots");
    if (n_snap < 2) throw ConfigError("n_snapshots must be >= 2");
    for (long i = 1; i < n_snap; ++i)
        run.snapshot_times.push_back(probe.t_end * double(i) / double(n_snap - 1));
    run.stop_rule = FixedTime{probe.t_end};
    ScatterOutcome out = run_scattering(run);

    Grid g(run.potential.box_lo(), run.potential.box_hi(), run.n_points);
    WaveFunction psi0 = build_gaussian(run.initial, g);

    CsvWriter snaps(dir / "snapshots.csv", {"snapshot", "t", "x", "density"});
    auto dump = [&](long idx, double t, const WaveFunction& psi) {
        for (int i = 0; i < psi.size(); ++i)
            snaps.row({double(idx), t, psi.grid.x(i), std::norm(psi.amp[i])});
    };
    dump(0, 0.0, psi0);
    for (std::size_t i = 0; i < out.snapshots.size(); ++i)
        dump(static_cast<long>(i) + 1, out.snapshots[i].t, out.snapshots[i].psi);

    CsvWriter res(dir / "scatter.csv", {"R", "T", "t_end", "norm_drift"});
    res.row({out.coeffs.R, out.coeffs.T, out.t_end, out.norm_drift});

    double r_spec = packet_reflection(psi0, run.potential).R;
    json s;
    s["R"] = out.coeffs.R;
    s["T"] = out.coeffs.T;
    s["t_end"] = out.t_end;
    s["norm_drift"] = out.norm_drift;
    s["R_spectral"] = r_spec;
    s["R_rect_closed_form"] = rect_step_R(E, dE).R;
    s["cross_validation"] = {{"abs_diff", std::abs(out.coeffs.R - r_spec)},
                             {"tolerance_at_converged_mesh", 5e-3}};
    write_text(dir / "plot.py",
               "import matplotlib\nmatplotlib.use('Agg')\n"
               "import matplotlib.pyplot as plt\nimport csv\n"
               "from collections import defaultdict\n"
               "series = defaultdict(lambda: ([], []))\n"
               "with open('snapshots.csv') as f:\n"
               "    for row in csv.DictReader(f):\n"
               "        xs, ds = series[int(row['snapshot'])]\n"
               "        xs.append(float(row['x'])); ds.append(float(row['density']))\n"
               "n = len(series)\n"
               "fig, axes = plt.subplots(n, 1, figsize=(6, 1.2 * n), sharex=True)\n"
               "for k in sorted(series):\n"
               "    xs, ds = series[k]\n"
               "    axes[k].plot(xs, ds, lw=0.8)\n"
               "    axes[k].set_yticks([])\n"
               "axes[-1].set_xlabel('x')\n"
               "fig.suptitle('|psi|^2 snapshots')\n"
               "fig.savefig('snapshots.png', dpi=150)\n");
    return s;
}

json run_mesh_pathology(const Params& p, const fs::path& dir) {
    std::vector<int> n_values = p.get_int_list("n_values");
    GaussianPacketSpec packet{p.get_d("mu"), p.get_d("sigma"), p.get_d("k0")};
    std::vector<MeanPositionTrace> traces =
        mesh_pathology_demo(n_values, packet, p.get_d("t_max"));

    CsvWriter csv(dir / "mesh_pathology.csv", {"n", "t", "mean_x"});
    for (const auto& tr : traces)
        for (std::size_t i = 0; i < tr.times.size(); ++i)
            csv.row({double(tr.n_points), tr.times[i], tr.mean_x[i]});

    json s;
    s["turnaround_times"] = json::object();
    bool increasing = true;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        s["turnaround_times"][std::to_string(traces[i].n_points)] = traces[i].turnaround_time;
        if (i > 0 && !(traces[i].turnaround_time > traces[i - 1].turnaround_time))
            increasing = false;
    }
    s["strictly_increasing_in_n"] = increasing;
    write_text(dir / "plot.py",
               "import matplotlib\nmatplotlib.use('Agg')\n"
               "import matplotlib.pyplot as plt\nimport csv\n"
               "from collections import defaultdict\n"
               "series = defaultdict(lambda: ([], []))\n"
               "with open('mesh_pathology.csv') as f:\n"
               "    for row in csv.DictReader(f):\n"
               "        ts, xs = series[int(float(row['n']))]\n"
               "        ts.append(float(row['t'])); xs.append(float(row['mean_x']))\n"
               "for n in sorted(series):\n"
               "    ts, xs = series[n]\n"
               "    plt.plot(ts, xs, label=f'N = {n}')\n"
               "plt.xlabel('t'); plt.ylabel('<x>')\n"
               "plt.legend(); plt.title('Mesh-dependent spurious reflection')\n"
               "plt.savefig('mesh_pathology.png', dpi=150)\n");
    return s;
}

json run_gamow_census(const Params& p, const fs::path& dir) {
    double alpha = p.get_d("alpha");
    PlateauSpec spec = spec_from_alpha(alpha, p.get_d("a"));
    SolverConfig cfg;
    cfg.allow_unverified_alpha = p.get_b("allow_unverified");
    std::vector<GamowMode> modes = enumerate_modes(spec, cfg);

    CsvWriter csv(dir / "modes.csv", {"n", "re_kappa", "im_kappa", "re_Z", "im_Z", "tau",
                                      "escape_speed", "beta", "residual"});
    for (const GamowMode& m : modes)
        csv.row({double(m.n), m.kappa.real(), m.kappa.imag(), m.Z.real(), m.Z.imag(), m.tau,
                 m.escape_speed, m.beta, m.residual});

    json s;
    s["alpha"] = alpha;
    s["N"] = modes.size();
    s["count_window"] = {{"lower_exclusive", alpha - 2.0}, {"upper_inclusive", alpha + 2.0}};
    s["count_in_window"] = (double(modes.size()) > alpha - 2.0 &&
                            double(modes.size()) <= alpha + 2.0);
    write_text(dir / "plot.py",
               "import matplotlib\nmatplotlib.use('Agg')\n"
               "import matplotlib.pyplot as plt\nimport csv\n"
               "re, im = [], []\n"
               "with open('modes.csv') as f:\n"
               "    for row in csv.DictReader(f):\n"
               "        re.append(float(row['re_kappa'])); im.append(float(row['im_kappa']))\n"
               "plt.plot(re, im, 'o', ms=4)\n"
               "plt.xlabel('Re kappa'); plt.ylabel('Im kappa')\n"
               "plt.title('Decay roots in the kappa plane')\n"
               "plt.savefig('modes.png', dpi=150)\n");
    return s;
}

json run_plateau_decay(const Params& p, const fs::path& dir) {
    PlateauSpec spec = spec_from_alpha(p.get_d("alpha"), p.get_d("a"));
    int n = static_cast<int>(p.get_i("n"));
    GamowMode mode = solve_mode(spec, n);
    double sigma_cut = p.get_d("sigma_cut");
    double horizon = p.get_d("horizon_frac") * mode.tau;
    std::string method = p.resolved().at("method");

    std::vector<double> times, prob, region;
    double recon = 0, mass = 0;
    if (method == "exact") {
        ExactDecayOptions opt;
        opt.n_samples = static_cast<int>(p.get_i("n_samples"));
        for (int i = 1; i < opt.n_samples; ++i)
            opt.discrepancy_times.push_back(horizon * i / (opt.n_samples - 1));
        ExactDecayResult r = decay_experiment_exact(mode, spec, sigma_cut, horizon, opt);
        times = r.series.times;
        prob = r.series.plateau_prob;
        region.push_back(0.0);  // exact equality at t = 0
        for (double d : r.series.region_discrepancy) region.push_back(d);
        recon = r.reconstruction_error;
        mass = r.spectral_mass;
    } else if (method == "grid") {
        Grid g = metastable_grid(spec, mode.escape_speed, horizon, sigma_cut);
        MetastableState st = build_metastable(mode, spec, sigma_cut, g);
        PropagatorConfig cfg;
        cfg.dt = p.get_d("dt") > 0 ? p.get_d("dt") : horizon / 20000;
        DecayTimeSeries ts = decay_experiment(st, spec, cfg, horizon);
        times = ts.times;
        prob = ts.plateau_prob;
        // discrepancies are on a sub-sampling; map each sample to the nearest
        std::size_t stride = ts.region_discrepancy.empty()
                                 ? 1
                                 : std::max<std::size_t>(1, times.size() / ts.region_discrepancy.size());
        for (std::size_t i = 0; i < times.size(); ++i) {
            std::size_t j = std::min(i / stride, ts.region_discrepancy.size() - 1);
            region.push_back(ts.region_discrepancy.empty() ? 0.0 : ts.region_discrepancy[j]);
        }
    } else {
        throw ConfigError("method must be 'exact' or 'grid'");
    }

    CsvWriter csv(dir / "decay.csv",
                  {"t", "plateau_prob", "region_discrepancy", "fitted_rate_so_far"});
    for (std::size_t i = 0; i < times.size(); ++i)
        csv.row({times[i], prob[i], region[i], rate_so_far(times, prob, i, mode.tau)});

    double fitted = qstep::detail::fit_decay_rate(times, prob, 0.1 * mode.tau, mode.tau);
    double worst_region = 0;
    for (double d : region) worst_region = std::max(worst_region, d);
    Lifetimes lt = lifetime(spec, mode);

    json s;
    s["alpha"] = spec.alpha();
    s["n"] = n;
    s["tau"] = mode.tau;
    s["tau_cl"] = lt.tau_cl;
    s["fitted_rate"] = {{"value", fitted}, {"target", 1.0 / mode.tau}, {"rel_tolerance", 0.1}};
    s["survival_at_tau_times_e"] = {{"value", prob.back() * M_E}, {"target", 1.0},
                                    {"rel_tolerance", 0.15}};
    s["max_region_discrepancy"] = {{"value", worst_region}, {"threshold", 0.05}};
    if (method == "exact") {
        s["reconstruction_error"] = recon;
        s["spectral_mass"] = mass;
    }
    write_text(dir / "plot.py",
               "import matplotlib\nmatplotlib.use('Agg')\n"
               "import matplotlib.pyplot as plt\nimport csv, math\n"
               "t, P, d = [], [], []\n"
               "with open('decay.csv') as f:\n"
               "    for row in csv.DictReader(f):\n"
               "        t.append(float(row['t'])); P.append(float(row['plateau_prob']))\n"
               "        d.append(float(row['region_discrepancy']))\n"
               "fig, (a, b) = plt.subplots(2, 1, sharex=True)\n"
               "a.plot(t, P, label='P(t)')\n"
               "a.plot(t, [math.exp(-x / t[-1]) for x in t], '--', label='exp(-t/tau)')\n"
               "a.set_ylabel('plateau probability'); a.legend()\n"
               "b.plot(t, d)\n"
               "b.set_ylabel('region discrepancy'); b.set_xlabel('t')\n"
               "fig.savefig('decay.png', dpi=150)\n");
    return s;
}

json run_superposition(const Params& p, const fs::path& dir) {
    PlateauSpec spec = spec_from_alpha(p.get_d("alpha"), p.get_d("a"));
    int n1 = static_cast<int>(p.get_i("n1")), n2 = static_cast<int>(p.get_i("n2"));
    cplx c1(p.get_d("c1_re"), p.get_d("c1_im"));
    cplx c2(p.get_d("c2_re"), p.get_d("c2_im"));
    GamowMode m1 = solve_mode(spec, n1);
    GamowMode m2 = solve_mode(spec, n2);
    double min_tau = std::min(m1.tau, m2.tau);
    double horizon = p.get_d("horizon_frac") * min_tau;

    SuperpositionSpec sup;
    sup.coefficients = {{n1, c1}, {n2, c2}};
    ExactDecayOptions opt;
    opt.n_samples = static_cast<int>(p.get_i("n_samples"));
    for (int i = 1; i < opt.n_samples; ++i)
        opt.discrepancy_times.push_back(horizon * i / (opt.n_samples - 1));
    ExactSuperpositionResult r = superposition_experiment_exact(spec, sup, horizon, opt);

    const DecayTimeSeries& ts = r.series;
    CsvWriter csv(dir / "superposition.csv",
                  {"t", "plateau_prob", "plateau_discrepancy", "fitted_rate_so_far"});
    for (std::size_t i = 0; i < ts.times.size(); ++i) {
        double disc = i == 0 ? 0.0 : ts.plateau_discrepancy[i - 1];
        csv.row({ts.times[i], ts.plateau_prob[i], disc,
                 rate_so_far(ts.times, ts.plateau_prob, i, min_tau)});
    }

    double worst = 0;
    for (double d : ts.plateau_discrepancy) worst = std::max(worst, d);
    json s;
    s["alpha"] = spec.alpha();
    s["modes"] = {n1, n2};
    s["tau"] = {m1.tau, m2.tau};
    s["scale"] = r.scale;
    s["P_end"] = ts.plateau_prob.back();
    s["pure_curves_at_end"] = {std::exp(-horizon / m1.tau), std::exp(-horizon / m2.tau)};
    s["max_plateau_discrepancy"] = {{"value", worst}, {"threshold", 0.05}};
    s["reconstruction_error"] = r.reconstruction_error;
    s["spectral_mass"] = r.spectral_mass;
    write_text(dir / "plot.py",
               "import matplotlib\nmatplotlib.use('Agg')\n"
               "import matplotlib.pyplot as plt\nimport csv\n"
               "t, P = [], []\n"
               "with open('superposition.csv') as f:\n"
               "    for row in csv.DictReader(f):\n"
               "        t.append(float(row['t'])); P.append(float(row['plateau_prob']))\n"
               "plt.plot(t, P)\n"
               "plt.xlabel('t'); plt.ylabel('plateau probability')\n"
               "plt.title('Two-mode superposition decay')\n"
               "plt.savefig('superposition.png', dpi=150)\n");
    return s;
}

// ---------------------------------------------------------------------------
// Experiment registry

struct Experiment {
    std::string name;
    std::string help;  // one line + CSV columns
    std::map<std::string, std::string> defaults;
    json (*run)(const Params&, const fs::path&);
};

const std::vector<Experiment>& registry() {
    static const std::vector<Experiment> reg = {
        {"step-sweep",
         "R(E) for the sharp step over a log grid in r = E/dE.\n"
         "CSV step_sweep.csv: r, E, R, T",
         {{"dE", "18.4"}, {"r_min", "1e-6"}, {"r_max", "1"}, {"n", "200"}},
         run_step_sweep},
        {"soft-step-sweep",
         "R(L) for the smoothed step at fixed E, dE.\n"
         "CSV soft_step_sweep.csv: L, k2L, R",
         {{"E", "1"}, {"dE", "18.4"}, {"L_min", "1e-4"}, {"L_max", "1"}, {"n", "100"}},
         run_soft_step_sweep},
        {"uv-map",
         "R(u, v) on a log-log grid; the R > 0.99 contour marks the strong-reflection region.\n"
         "CSV uv_map.csv: u, v, R",
         {{"u_min", "1e-4"}, {"u_max", "1"}, {"v_min", "1e-3"}, {"v_max", "10"},
          {"nu", "200"}, {"nv", "200"}},
         run_uv_map},
        {"packet-scatter",
         "Gaussian packet against a boxed sharp step; |psi|^2 snapshots and R/T.\n"
         "CSV snapshots.csv: snapshot, t, x, density; scatter.csv: R, T, t_end, norm_drift",
         {{"mu", "0.1"}, {"sigma", "0.01"}, {"k0", "628.3185307179587"},
          {"dE_ratio", "18.4"}, {"step_center", "0.3"}, {"box_lo", "0"}, {"box_hi", "1"},
          {"n_points", "4000"}, {"dt", "2e-8"}, {"n_snapshots", "10"}},
         run_packet_scatter},
        {"mesh-pathology",
         "<x>(t) on the inverted parabola for several mesh sizes; spurious turnaround times.\n"
         "CSV mesh_pathology.csv: n, t, mean_x",
         {{"n_values", "500,1000,2000"}, {"mu", "0.3"}, {"sigma", "0.01"},
          {"k0", "628.3185307179587"}, {"t_max", "1.2e-3"}},
         run_mesh_pathology},
        {"gamow-census",
         "All decay roots with |kappa| <= 1/2 for a plateau of width alpha.\n"
         "CSV modes.csv: n, re_kappa, im_kappa, re_Z, im_Z, tau, escape_speed, beta, residual",
         {{"alpha", "10"}, {"a", "1"}, {"allow_unverified", "false"}},
         run_gamow_census},
        {"plateau-decay",
         "Decay of the cut-off mode n; survival, discrepancy and fitted rate.\n"
         "CSV decay.csv: t, plateau_prob, region_discrepancy, fitted_rate_so_far",
         {{"alpha", "40"}, {"a", "1"}, {"n", "1"}, {"sigma_cut", "0.2"},
          {"horizon_frac", "1"}, {"n_samples", "64"}, {"method", "exact"}, {"dt", "0"}},
         run_plateau_decay},
        {"superposition",
         "Two-mode plateau superposition, hard-truncated and evolved exactly.\n"
         "CSV superposition.csv: t, plateau_prob, plateau_discrepancy, fitted_rate_so_far",
         {{"alpha", "40"}, {"a", "1"}, {"n1", "1"}, {"n2", "2"},
          {"c1_re", "0.7071067811865476"}, {"c1_im", "0"},
          {"c2_re", "0.7071067811865476"}, {"c2_im", "0"},
          {"horizon_frac", "1"}, {"n_samples", "33"}},
         run_superposition},
    };
    return reg;
}

void apply_config_file(Params& p, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file must be a JSON object of parameters");
    for (const auto& [k, v] : j.items()) {
        if (v.is_string()) p.set(k, v.get<std::string>());
        else if (v.is_boolean()) p.set(k, v.get<bool>() ? "true" : "false");
        else if (v.is_number()) p.set(k, fmt_g(v.get<double>()));
        else throw ConfigError("config value for " + k + " must be a scalar");
    }
}

void apply_cli_params(Params& p, const std::vector<std::string>& kvs) {
    for (const std::string& kv : kvs) {
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("--param expects key=value, got: " + kv);
        p.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qstep experiment runner"};
    app.set_version_flag("--version", kVersion);
    bool list = false;
    app.add_flag("--list", list, "list experiments and exit");
    app.require_subcommand(0, 1);

    struct SubState {
        std::string config_file;
        std::vector<std::string> params;
        std::string out_dir;
    };
    std::map<std::string, SubState> states;
    for (const Experiment& e : registry()) {
        std::ostringstream help;
        help << e.help << "\nParameters (defaults):";
        for (const auto& [k, v] : e.defaults) help << " " << k << "=" << v;
        CLI::App* sub = app.add_subcommand(e.name, help.str());
        SubState& st = states[e.name];
        sub->add_option("--config", st.config_file, "JSON file of parameter overrides");
        sub->add_option("--param", st.params, "key=value parameter override (repeatable)");
        sub->add_option("--out", st.out_dir, "output directory");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (list) {
        for (const Experiment& e : registry()) std::printf("%s\n", e.name.c_str());
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::fprintf(stderr, "no experiment given; use --list or --help\n");
        return 2;
    }

    const std::string name = app.get_subcommands()[0]->get_name();
    const Experiment* exp = nullptr;
    for (const Experiment& e : registry())
        if (e.name == name) exp = &e;
    const SubState& st = states[name];

    fs::path dir;
    try {
        Params params(exp->defaults);
        if (!st.config_file.empty()) apply_config_file(params, st.config_file);
        apply_cli_params(params, st.params);

        dir = st.out_dir.empty() ? fs::path("out_" + name) : fs::path(st.out_dir);
        fs::create_directories(dir);
        write_manifest(dir, name, params);

        json summary = exp->run(params, dir);
        summary["experiment"] = name;
        summary["status"] = "ok";
        write_json(dir / "summary.json", summary);
        std::printf("%s: ok, outputs in %s\n", name.c_str(), dir.string().c_str());
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        json summary;
        summary["experiment"] = name;
        summary["status"] = "error";
        summary["error"] = {{"module_error", errc_name(e.code)}, {"message", e.what()}};
        if (!dir.empty()) write_json(dir / "summary.json", summary);
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 3;
    }
}
