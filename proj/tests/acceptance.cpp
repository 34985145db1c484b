// Acceptance gate: one criterion per invocation, one PASS/FAIL line each.
// Usage: acceptance <criterion 1..13> [cli_path]

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qstep/metastable.hpp"
#include "qstep/spectral.hpp"
#include "qstep/stationary.hpp"
#include "qstep/tdse.hpp"

using namespace qstep;
namespace fs = std::filesystem;

namespace {

std::string g_detail;

void detail_msg(const std::string& s) { g_detail = s; }

PlateauSpec spec_alpha(double alpha) {
    double dE = 0.5 * std::pow(alpha * M_PI, 2);  // a = 1
    return PlateauSpec(1.0, dE);
}

bool criterion_1() {
    double R = rect_step_R(1.0, 18.4).R;
    double tm = transfer_matrix_R(Potential::rect_step(18.4), 1.0, -1.0, 1.0, 2).R;
    std::ostringstream os;
    os << "R=" << R << " tm=" << tm;
    detail_msg(os.str());
    return std::abs(R - 0.39688) < 1e-4 && std::abs(R - tm) < 1e-10;
}

bool criterion_2() {
    double r2 = rect_step_R(1e-2, 1.0).R;
    double r4 = rect_step_R(1e-4, 1.0).R;
    double r6 = rect_step_R(1e-6, 1.0).R;
    std::ostringstream os;
    os << "R(1e-2)=" << r2 << " R(1e-4)=" << r4 << " R(1e-6)=" << r6;
    detail_msg(os.str());
    return r2 < r4 && r4 < r6 && r6 > 0.996 && rect_step_R(1.0, 0.0).R == 0.0;
}

bool criterion_3() {
    double E = 1.0, dE = 18.4;
    double k2 = std::sqrt(2.0 * (E + dE));
    double rect = rect_step_R(E, dE).R;
    if (std::abs(soft_step_R(E, dE, 1e-9 / k2).R - rect) > 1e-6 * rect) {
        detail_msg("L -> 0 limit mismatch");
        return false;
    }
    double prev = rect;
    double L = 1e-4;
    for (int i = 0; i < 20; ++i, L *= 1.7) {
        double R = soft_step_R(E, dE, L).R;
        if (!(R < prev) || R > rect) {
            detail_msg("monotonicity / upper bound violated");
            return false;
        }
        prev = R;
    }
    double Lfix = 0.1;
    double limit = std::exp(-2.0 * M_PI * std::sqrt(2.0 * E) * Lfix);
    double Rdeep = soft_step_R(E, 1e6 * E, Lfix).R;
    std::ostringstream os;
    os << "deep limit rel err = " << std::abs(Rdeep / limit - 1.0);
    detail_msg(os.str());
    return std::abs(Rdeep / limit - 1.0) < 0.01;
}

bool criterion_4() {
    // region check on a 200x200 log grid
    int bad_region = 0;
    for (int i = 0; i < 200; ++i) {
        double u = 1e-4 * std::pow(1.0 / 1e-4, i / 199.0);
        for (int j = 0; j < 200; ++j) {
            double v = 1e-3 * std::pow(10.0 / 1e-3, j / 199.0);
            if (u < 1e-3 && v > 1e3 * u && R_uv({u, v}) <= 0.99) ++bad_region;
        }
    }
    // Taylor check |sqrt(R) - (1 - 2u/tanh v)| < 10 u^2
    double worst_ratio = 0, worst_u = 0, worst_v = 0;
    for (int i = 0; i < 200; ++i) {
        double u = 1e-4 * std::pow(1e-2 / 1e-4, i / 199.0);
        for (int j = 0; j < 200; ++j) {
            double v = 0.1 * std::pow(10.0 / 0.1, j / 199.0);
            double lhs = std::abs(std::sqrt(R_uv({u, v})) - (1.0 - 2.0 * u / std::tanh(v)));
            double ratio = lhs / (u * u);
            if (ratio > worst_ratio) {
                worst_ratio = ratio;
                worst_u = u;
                worst_v = v;
            }
        }
    }
    std::ostringstream os;
    os << "region violations=" << bad_region << "; Taylor worst |.|/u^2 = " << worst_ratio
       << " at u=" << worst_u << ", v=" << worst_v << " (bound 10)";
    detail_msg(os.str());
    return bad_region == 0 && worst_ratio < 10.0;
}

bool criterion_5() {
    double k0 = 200.0 * M_PI, E = 0.5 * k0 * k0, dE = 18.4 * E;
    ScatteringRun run;
    run.initial = {0.1, 0.01, k0};
    run.potential = Potential::hard_box(0.0, 1.0, Potential::rect_step(dE, 0.3));
    run.config.dt = 2e-8;
    run.n_points = 16000;  // resolves the transmitted carrier
    ScatterOutcome out = run_scattering(run);
    Grid g(0.0, 1.0, run.n_points);
    double Rs = packet_reflection(build_gaussian(run.initial, g), run.potential).R;
    double rect = rect_step_R(E, dE).R;
    std::ostringstream os;
    os << "R_prop=" << out.coeffs.R << " R_spec=" << Rs << " rect=" << rect
       << " |diff|=" << std::abs(out.coeffs.R - Rs);
    detail_msg(os.str());
    return std::abs(out.coeffs.R - Rs) < 5e-3 && std::abs(out.coeffs.R - rect) < 0.02 &&
           std::abs(Rs - rect) < 0.02;
}

bool criterion_6() {
    // norm drift over the full deep-step packet run
    double k0 = 200.0 * M_PI, E = 0.5 * k0 * k0;
    ScatteringRun run;
    run.initial = {0.1, 0.01, k0};
    run.potential = Potential::hard_box(0.0, 1.0, Potential::rect_step(18.4 * E, 0.3));
    run.config.dt = 2e-8;
    run.n_points = 4000;
    ScatterOutcome out = run_scattering(run);

    // free-Gaussian dispersion law
    Grid g(-4.0, 4.0, 4001);
    WaveFunction psi = build_gaussian({0.0, 0.1, 0.0}, g);
    PropagatorConfig cfg;
    cfg.dt = 2e-4;
    double t = 0.04;
    double var = variance_x(propagate(psi, Potential::free(), cfg, t));
    double pred = 0.01 * (1.0 + std::pow(t / 0.02, 2));
    double disp_err = std::abs(var / pred - 1.0);

    // observed dt order
    Grid g2(0.0, 1.0, 2001);
    WaveFunction p0 = build_gaussian({0.3, 0.03, 80.0}, g2);
    Potential V = Potential::parabola(1000.0, 0.5);
    auto run_dt = [&](double dt) {
        PropagatorConfig c;
        c.dt = dt;
        return propagate(p0, V, c, 1e-3);
    };
    WaveFunction ref = run_dt(6.25e-7);
    auto err = [&](const WaveFunction& a) {
        double acc = 0;
        for (int i = 0; i < a.size(); ++i) acc += std::norm(a.amp[i] - ref.amp[i]);
        return std::sqrt(acc * a.grid.dx());
    };
    double order = std::log2(err(run_dt(5e-6)) / err(run_dt(2.5e-6)));

    std::ostringstream os;
    os << "norm drift=" << out.norm_drift << " dispersion err=" << disp_err
       << " dt order=" << order;
    detail_msg(os.str());
    return out.norm_drift < 1e-9 && disp_err < 5e-3 && std::abs(order - 2.0) < 0.3;
}

bool criterion_7() {
    std::vector<MeanPositionTrace> tr = mesh_pathology_demo({500, 1000, 2000});
    std::ostringstream os;
    os << "turnarounds:";
    for (const auto& t : tr) os << " " << t.turnaround_time;
    detail_msg(os.str());
    return tr[0].turnaround_time > 0 && tr[0].turnaround_time < tr[1].turnaround_time &&
           tr[1].turnaround_time < tr[2].turnaround_time;
}

bool criterion_8() {
    for (double alpha : {10.0, 20.0, 50.0, 100.0}) {
        PlateauSpec s = spec_alpha(alpha);
        std::vector<GamowMode> modes = enumerate_modes(s);
        double N = static_cast<double>(modes.size());
        if (!(N > alpha - 2.0 && N <= alpha + 2.0)) {
            detail_msg("census count out of range");
            return false;
        }
        for (const GamowMode& m : modes) {
            if (!(m.kappa.real() > 0.0 && m.kappa.imag() < 0.0 && m.residual < 1e-14)) {
                detail_msg("root sign structure or residual failed");
                return false;
            }
            for (int j : {1, 2, 3}) {
                double e = std::abs(m.kappa - gamow_iterate(s, m.n, j));
                if (e > m.n * std::pow(alpha, -(j + 1))) {
                    detail_msg("a-priori iteration bound violated");
                    return false;
                }
            }
        }
    }
    detail_msg("counts and bounds hold for alpha in {10, 20, 50, 100}");
    return true;
}

bool criterion_9() {
    PlateauSpec s = spec_alpha(100.0);
    std::ostringstream os;
    bool ok = true;
    for (int n : {1, 2, 3}) {
        GamowMode m = solve_mode(s, n);
        double est_err = std::abs(asymptotic_Z(s, n) - m.Z) / std::abs(m.Z);
        double re_ref = 0.5 * std::pow(M_PI * n, 2) / 4.0;  // hbar^2 pi^2 n^2 / (8 m a^2)
        double re_err = std::abs(m.Z.real() / re_ref - 1.0);
        Lifetimes lt = lifetime(s, m);
        double tau_err = std::abs(m.tau / lt.tau_qu - 1.0);
        os << " n=" << n << ": est=" << est_err << " Re=" << re_err << " tau=" << tau_err;
        ok = ok && est_err < 10.0 / (100.0 * 100.0) && re_err < 0.01 && tau_err < 0.02;
    }
    detail_msg(os.str());
    return ok;
}

bool criterion_10() {
    PlateauSpec s = spec_alpha(40.0);
    for (int n : {1, 2, 5, 12}) {
        GamowMode m = solve_mode(s, n);
        GamowEigenfunction psi = eigenfunction(m, s);
        // C^1 matching at +-a
        cplx out_der = I * m.k_tilde * m.B;
        if (std::abs(psi(s.a) - m.B) > 1e-10 ||
            std::abs(psi.derivative(s.a) - out_der) / std::abs(out_der) > 1e-10) {
            detail_msg("C^1 matching failed");
            return false;
        }
        // analytic ODE residual inside and outside
        for (double x : {0.37, 1.83}) {
            double V = std::abs(x) > s.a ? -s.dE : 0.0;
            cplx k2 = std::abs(x) > s.a ? m.k_tilde * m.k_tilde : m.k * m.k;
            cplx resid = 0.5 * k2 * psi(x) + V * psi(x) - m.Z * psi(x);
            if (std::abs(resid) / std::abs(m.Z * psi(x)) > 1e-8) {
                detail_msg("ODE residual too large");
                return false;
            }
        }
        // parity and decay identity
        double sign = (m.parity == Parity::Cos) ? 1.0 : -1.0;
        if (std::abs(psi(-0.7) - sign * psi(0.7)) > 1e-12) {
            detail_msg("parity failed");
            return false;
        }
        double t = 1.7;
        double ratio = std::norm(psi.at_time(0.3, t)) / std::norm(psi(0.3));
        if (std::abs(ratio - std::exp(2.0 * m.Z.imag() * t)) > 1e-12) {
            detail_msg("decay identity failed");
            return false;
        }
    }
    detail_msg("matching, residual, parity, decay identity hold for n in {1, 2, 5, 12}");
    return true;
}

bool criterion_11() {
    // off-plateau mass and its alpha scaling
    std::vector<double> alphas = {20.0, 40.0, 80.0};
    std::vector<double> off;
    for (double alpha : alphas) {
        PlateauSpec s = spec_alpha(alpha);
        GamowMode m = solve_mode(s, 1);
        Grid g = metastable_grid(s, m.escape_speed, 0.0, 0.2);
        off.push_back(off_plateau_probability(build_metastable(m, s, 0.2, g), s));
    }
    double slope = std::log(off[2] / off[0]) / std::log(alphas[2] / alphas[0]);

    PlateauSpec s = spec_alpha(40.0);
    GamowMode m = solve_mode(s, 1);
    ExactDecayResult r = decay_experiment_exact(m, s, 0.2, m.tau);
    double rate_err = std::abs(r.series.fitted_rate * m.tau - 1.0);
    double surv = r.series.plateau_prob.back() * M_E;
    double worst_region = 0;
    for (double d : r.series.region_discrepancy) worst_region = std::max(worst_region, d);

    std::ostringstream os;
    os << "off(40)=" << off[1] << " slope=" << slope << " rate err=" << rate_err
       << " P(tau)e=" << surv << " max region disc=" << worst_region;
    detail_msg(os.str());
    return off[1] < 0.01 && std::abs(slope + 2.0) < 0.3 && rate_err < 0.10 &&
           std::abs(surv - 1.0) < 0.15 && worst_region <= 0.05;
}

bool criterion_12() {
    PlateauSpec s = spec_alpha(40.0);
    double tau1 = solve_mode(s, 1).tau;
    double tau2 = solve_mode(s, 2).tau;
    double h = std::min(tau1, tau2);
    double c = 1.0 / std::sqrt(2.0);

    ExactDecayOptions opt;
    opt.n_samples = 33;
    SuperpositionSpec both, only1, only2;
    both.coefficients = {{1, cplx(c, 0.0)}, {2, cplx(c, 0.0)}};
    only1.coefficients = {{1, cplx(1.0, 0.0)}};
    only2.coefficients = {{2, cplx(1.0, 0.0)}};
    ExactSuperpositionResult rb = superposition_experiment_exact(s, both, h, opt);
    ExactSuperpositionResult r1 = superposition_experiment_exact(s, only1, h, opt);
    ExactSuperpositionResult r2 = superposition_experiment_exact(s, only2, h, opt);

    double worst_disc = 0;
    for (double d : rb.series.plateau_discrepancy) worst_disc = std::max(worst_disc, d);
    bool enveloped = true;
    for (std::size_t i = 0; i < rb.series.plateau_prob.size(); ++i) {
        double lo = std::min(r1.series.plateau_prob[i], r2.series.plateau_prob[i]);
        double hi = std::max(r1.series.plateau_prob[i], r2.series.plateau_prob[i]);
        double p = rb.series.plateau_prob[i];
        if (p < lo - 0.01 || p > hi + 0.01) enveloped = false;
    }
    std::ostringstream os;
    os << "max plateau disc=" << worst_disc << " enveloped=" << (enveloped ? "yes" : "no")
       << " P(end)=" << rb.series.plateau_prob.back();
    detail_msg(os.str());
    return worst_disc < 0.05 && enveloped;
}

bool files_identical(const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    std::ostringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    return fa.good() && fb.good() && sa.str() == sb.str();
}

bool criterion_13(const std::string& cli) {
    if (cli.empty()) {
        detail_msg("cli path not given");
        return false;
    }
    fs::path base = fs::temp_directory_path() / "qstep_acceptance_determinism";
    fs::remove_all(base);
    struct Job {
        std::string name;
        std::string args;
    };
    std::vector<Job> jobs = {{"gamow-census", "--param alpha=10"},
                             {"step-sweep", "--param n=32"}};
    int n_csv = 0;
    for (const Job& j : jobs) {
        fs::path d1 = base / (j.name + "_1"), d2 = base / (j.name + "_2");
        for (const fs::path& d : {d1, d2}) {
            std::string cmd = "\"" + cli + "\" " + j.name + " " + j.args + " --out \"" +
                              d.string() + "\" > /dev/null";
            if (std::system(cmd.c_str()) != 0) {
                detail_msg("experiment " + j.name + " failed to run");
                return false;
            }
        }
        for (const auto& e : fs::directory_iterator(d1)) {
            if (e.path().extension() != ".csv") continue;
            ++n_csv;
            if (!files_identical(e.path(), d2 / e.path().filename())) {
                detail_msg("CSV differs between runs: " + e.path().filename().string());
                return false;
            }
        }
    }
    std::ostringstream os;
    os << n_csv << " CSV files byte-identical across re-runs";
    detail_msg(os.str());
    return n_csv > 0;
}

const char* kNames[] = {"",
                        "rectangular step closed form",
                        "limiting behavior of R(E)",
                        "soft step limits and bounds",
                        "R(u,v) region and Taylor check",
                        "packet cross-validation",
                        "propagator properties",
                        "mesh pathology ordering",
                        "Gamow census",
                        "large-alpha asymptotics",
                        "eigenfunction checks",
                        "metastable plateau decay",
                        "superposition decay",
                        "experiment determinism"};

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <criterion 1..13> [cli_path]\n");
        return 2;
    }
    int n = std::atoi(argv[1]);
    if (n < 1 || n > 13) {
        std::fprintf(stderr, "criterion must be 1..13\n");
        return 2;
    }
    std::string cli = argc > 2 ? argv[2] : "";

    bool ok = false;
    try {
        switch (n) {
            case 1: ok = criterion_1(); break;
            case 2: ok = criterion_2(); break;
            case 3: ok = criterion_3(); break;
            case 4: ok = criterion_4(); break;
            case 5: ok = criterion_5(); break;
            case 6: ok = criterion_6(); break;
            case 7: ok = criterion_7(); break;
            case 8: ok = criterion_8(); break;
            case 9: ok = criterion_9(); break;
            case 10: ok = criterion_10(); break;
            case 11: ok = criterion_11(); break;
            case 12: ok = criterion_12(); break;
            case 13: ok = criterion_13(cli); break;
        }
    } catch (const std::exception& e) {
        g_detail = std::string("exception: ") + e.what();
        ok = false;
    }
    std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", n, kNames[n],
                g_detail.c_str());
    return ok ? 0 : 1;
}
