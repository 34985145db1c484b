#pragma once

// Norm-preserving time-dependent propagation on a hard-walled box
// (Crank-Nicolson with Dirichlet ends), scattering-experiment runner,
// and the mesh-dependence pathology demo.

#include <cmath>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "qstep/core.hpp"
#include "qstep/stationary.hpp"

namespace qstep {

enum class Scheme { CrankNicolson };

struct PropagatorConfig {
    double dt = 1e-3;
    Scheme scheme = Scheme::CrankNicolson;
    // Dirichlet wall positions; NaN means "use the grid extent".
    double wall_lo = std::numeric_limits<double>::quiet_NaN();
    double wall_hi = std::numeric_limits<double>::quiet_NaN();
    double wall_density_tol = 1e-8;  // boundary |psi|^2 dx above this flags WallContact
};

// Unitary implicit midpoint step for i hbar dpsi/dt = H psi with
// H = -(hbar^2/2m) d^2/dx^2 + V on a Dirichlet box. The tridiagonal
// factorization is constant in time and precomputed.
class CrankNicolson {
  public:
    CrankNicolson(const Grid& g, const Potential& V, const PropagatorConfig& cfg,
                  const PhysicalParams& pp = {})
        : grid_(g), dt_(cfg.dt), pp_(pp), wall_tol_(cfg.wall_density_tol) {
        if (!(cfg.dt > 0)) throw Error(Errc::InvalidArgument, "dt must be > 0");
        if (cfg.scheme != Scheme::CrankNicolson)
            throw Error(Errc::InvalidArgument, "unknown scheme");
        if (V.is_boxed()) {
            // the box must coincide with the grid extent (walls are the grid ends)
            double dx = g.dx();
            if (std::abs(V.box_lo() - g.x_min) > 0.5 * dx || std::abs(V.box_hi() - g.x_max) > 0.5 * dx)
                throw Error(Errc::InvalidArgument, "hard box must coincide with the grid extent");
        }

        const int n = g.n_points;
        v_.resize(n);
        v_max_ = 0;
        for (int i = 0; i < n; ++i) {
            double x = g.x(i);
            double v = V.is_boxed() ? V.inner()(x) : V(x);
            v_[i] = v;
            v_max_ = std::max(v_max_, std::abs(v));
        }

        double dx = g.dx();
        double hbar = pp.hbar, m = pp.mass;
        cplx lam = I * dt_ / (2.0 * hbar);
        off_a_ = lam * (-hbar * hbar / (2.0 * m * dx * dx));
        off_b_ = -off_a_;
        const int ni = n - 2;  // interior points
        adiag_.resize(ni);
        bdiag_.resize(ni);
        for (int i = 0; i < ni; ++i) {
            cplx hd = lam * (hbar * hbar / (m * dx * dx) + v_[i + 1]);
            adiag_[i] = 1.0 + hd;
            bdiag_[i] = 1.0 - hd;
        }
        // Thomas factorization of the constant tridiagonal A
        w_.resize(ni);
        dinv_.resize(ni);
        cplx d = adiag_[0];
        dinv_[0] = 1.0 / d;
        w_[0] = cplx{};
        for (int i = 1; i < ni; ++i) {
            w_[i] = off_a_ * dinv_[i - 1];
            d = adiag_[i] - w_[i] * off_a_;
            dinv_[i] = 1.0 / d;
        }
        y_.resize(ni);
    }

    const Grid& grid() const { return grid_; }
    double dt() const { return dt_; }
    double v_max() const { return v_max_; }
    bool wall_contact() const { return wall_contact_; }

    void step(WaveFunction& psi) {
        const int ni = grid_.n_points - 2;
        cplx* p = psi.amp.data() + 1;  // interior view
        psi.amp.front() = cplx{};
        psi.amp.back() = cplx{};
        // rhs = B psi fused with the forward sweep
        cplx prev_y{};
        cplx left = cplx{};  // psi at i-1 (Dirichlet at the wall)
        for (int i = 0; i < ni; ++i) {
            cplx right = (i + 1 < ni) ? p[i + 1] : cplx{};
            cplx rhs = bdiag_[i] * p[i] + off_b_ * (left + right);
            left = p[i];
            prev_y = rhs - w_[i] * prev_y;
            y_[i] = prev_y;
        }
        // back substitution
        cplx next{};
        for (int i = ni - 1; i >= 0; --i) {
            next = (y_[i] - off_a_ * next) * dinv_[i];
            p[i] = next;
        }
        check_walls(psi);
    }

    void run(WaveFunction& psi, long n_steps,
             const std::function<void(long, const WaveFunction&)>& on_sample = {},
             long sample_every = 0) {
        for (long s = 1; s <= n_steps; ++s) {
            step(psi);
            if (on_sample && sample_every > 0 && (s % sample_every == 0 || s == n_steps))
                on_sample(s, psi);
        }
    }

    double energy_expectation(const WaveFunction& psi) const {
        const int n = grid_.n_points;
        double dx = grid_.dx();
        double h2m = pp_.hbar * pp_.hbar / (2.0 * pp_.mass);
        cplx acc{};
        for (int i = 1; i + 1 < n; ++i) {
            cplx lap = (psi.amp[i + 1] - 2.0 * psi.amp[i] + psi.amp[i - 1]) / (dx * dx);
            acc += std::conj(psi.amp[i]) * (-h2m * lap + v_[i] * psi.amp[i]);
        }
        return acc.real() * dx / psi.norm2();
    }

  private:
    void check_walls(const WaveFunction& psi) {
        double dx = grid_.dx();
        double edge = std::max(std::norm(psi.amp[1]), std::norm(psi.amp[psi.size() - 2])) * dx;
        if (edge > wall_tol_) wall_contact_ = true;
    }

    Grid grid_;
    double dt_;
    PhysicalParams pp_;
    double wall_tol_;
    std::vector<double> v_;
    double v_max_ = 0;
    cplx off_a_{}, off_b_{};
    std::vector<cplx> adiag_, bdiag_, w_, dinv_, y_;
    bool wall_contact_ = false;
};

// RMS wavenumber of psi from the discrete gradient; used for the time-step
// resolution check.
inline double rms_wavenumber(const WaveFunction& psi) {
    double dx = psi.grid.dx();
    double num = 0, den = 0;
    for (int i = 0; i + 1 < psi.size(); ++i) {
        num += std::norm(psi.amp[i + 1] - psi.amp[i]);
        den += std::norm(psi.amp[i]);
    }
    if (den == 0) return 0;
    return std::sqrt(num / den) / dx;
}

inline void check_time_step(const CrankNicolson& cn, const WaveFunction& psi,
                            const PhysicalParams& pp = {}) {
    double k_est = 4.0 * rms_wavenumber(psi);
    double rate = std::max(cn.v_max(), pp.hbar * pp.hbar * k_est * k_est / (2.0 * pp.mass)) / pp.hbar;
    if (cn.dt() * rate >= 0.5)
        throw Error(Errc::UnstableStep, "dt does not resolve the fastest phase");
}

struct PropagateReport {
    bool wall_contact = false;
    double norm_drift = 0;
    long n_steps = 0;
};

inline WaveFunction propagate(const WaveFunction& psi0, const Potential& V,
                              const PropagatorConfig& cfg, double t, const PhysicalParams& pp = {},
                              PropagateReport* report = nullptr) {
    CrankNicolson cn(psi0.grid, V, cfg, pp);
    check_time_step(cn, psi0, pp);
    long n_steps = std::llround(t / cfg.dt);
    WaveFunction psi = psi0;
    double n0 = psi.norm2();
    cn.run(psi, n_steps);
    if (report) {
        report->wall_contact = cn.wall_contact();
        report->norm_drift = std::abs(psi.norm2() - n0);
        report->n_steps = n_steps;
    }
    return psi;
}

// ---------------------------------------------------------------------------
// Scattering experiment

struct FixedTime {
    double t = 0;
};
struct PacketsSeparated {
    double gap = 0;  // extra clearance beyond the default window (may be 0)
};
using StopRule = std::variant<FixedTime, PacketsSeparated>;

struct ScatteringRun {
    GaussianPacketSpec initial;
    Potential potential = Potential::free();  // a step variant inside a HardBox
    PropagatorConfig config;
    StopRule stop_rule = PacketsSeparated{};
    int n_points = 1000;
    std::vector<double> snapshot_times;  // optional |psi|^2 snapshots
};

struct Snapshot {
    double t = 0;
    WaveFunction psi;
};

struct ScatterOutcome {
    ScatteringCoefficients coeffs;
    double t_end = 0;
    bool wall_contact = false;
    bool separated = false;
    double norm_drift = 0;
    std::vector<Snapshot> snapshots;
};

namespace detail {
inline bool packets_separated(const WaveFunction& psi, double center, double window,
                              const PhysicalParams& pp) {
    double p_win = region_probability(psi, std::max(center - window, psi.grid.x_min),
                                      std::min(center + window, psi.grid.x_max));
    if (p_win > 1e-4) return false;
    // outgoing currents on both sides; a side carrying no probability (fully
    // transmitted or fully reflected run) counts as separated
    std::vector<double> j = probability_current(psi, pp);
    double left = 0, right = 0;
    for (std::size_t i = 0; i < j.size(); ++i) {
        double x = psi.grid.x(static_cast<int>(i) + 1);
        (x < center ? left : right) += j[i];
    }
    double p_left = region_probability(psi, psi.grid.x_min, center);
    double p_right = region_probability(psi, center, psi.grid.x_max);
    return (left < 0 || p_left < 1e-6) && (right > 0 || p_right < 1e-6);
}
}  // namespace detail

inline ScatterOutcome run_scattering(const ScatteringRun& run, const PhysicalParams& pp = {}) {
    if (!run.potential.is_boxed() || !run.potential.is_step())
        throw Error(Errc::UnsupportedPotential, "scattering run needs a step inside a hard box");
    const Potential& step = run.potential.inner();
    double center = step.center();

    Grid grid(run.potential.box_lo(), run.potential.box_hi(), run.n_points);
    WaveFunction psi = build_gaussian(run.initial, grid);

    // initial packet must be clear of walls and step
    double s5 = 5.0 * run.initial.sigma;
    if (run.initial.mu - grid.x_min < s5 || grid.x_max - run.initial.mu < s5 ||
        std::abs(run.initial.mu - center) < s5)
        throw Error(Errc::InvalidArgument, "initial packet too close to a wall or the step");

    CrankNicolson cn(grid, run.potential, run.config, pp);
    check_time_step(cn, psi, pp);

    double window = std::max(3.0 * step.width(), 10.0 * grid.dx());
    double dt = run.config.dt;
    double n0 = psi.norm2();

    // hard cap: several box crossings at the incoming speed
    double speed = pp.hbar * std::abs(run.initial.k0) / pp.mass;
    double t_cap = std::holds_alternative<FixedTime>(run.stop_rule)
                       ? std::get<FixedTime>(run.stop_rule).t
                       : 4.0 * (grid.x_max - grid.x_min) / std::max(speed, 1e-30);
    long max_steps = std::llround(t_cap / dt);

    ScatterOutcome out;
    std::size_t next_snap = 0;
    auto take_snapshots = [&](long s) {
        double t = s * dt;
        while (next_snap < run.snapshot_times.size() && run.snapshot_times[next_snap] <= t + 0.5 * dt) {
            out.snapshots.push_back({run.snapshot_times[next_snap], psi});
            ++next_snap;
        }
    };

    bool fixed = std::holds_alternative<FixedTime>(run.stop_rule);
    double extra = fixed ? 0.0 : std::get<PacketsSeparated>(run.stop_rule).gap;
    long check_every = std::max<long>(1, max_steps / 2000);
    long s = 0;
    for (; s < max_steps; ++s) {
        cn.step(psi);
        take_snapshots(s + 1);
        if ((s + 1) % check_every == 0 || s + 1 == max_steps) {
            bool sep = detail::packets_separated(psi, center, window + extra, pp);
            if (sep) out.separated = true;
            if (!fixed && sep) {
                ++s;
                break;
            }
        }
    }
    out.t_end = s * dt;
    out.wall_contact = cn.wall_contact();
    out.norm_drift = std::abs(psi.norm2() - n0);
    if (!out.separated) {
        // a FixedTime rule that expires too early, or a cap hit
        throw Error(Errc::PacketsNotSeparated, "packets were not separated at the stop time");
    }

    // reflected probability stays on the incoming side of the step
    double p_lo = region_probability(psi, grid.x_min, center);
    double p_hi = region_probability(psi, center, grid.x_max);
    bool incoming_left = run.initial.k0 > 0;
    out.coeffs = {incoming_left ? p_lo : p_hi, incoming_left ? p_hi : p_lo,
                  Provenance::Propagation};
    return out;
}

// ---------------------------------------------------------------------------
// Mesh-dependence pathology

struct MeanPositionTrace {
    int n_points = 0;
    std::vector<double> times;
    std::vector<double> mean_x;
    double turnaround_time = -1;  // first maximum of <x>(t); -1 if none found
    bool wall_contact = false;
};

inline MeanPositionTrace mean_position_trace(const GaussianPacketSpec& packet, const Potential& V,
                                             const Grid& grid, double dt, double t_max,
                                             long sample_every, const PhysicalParams& pp = {}) {
    // built without the resolution guard: probing what an under-resolved mesh
    // does to the dynamics is the point of this trace
    WaveFunction psi(grid);
    double inv4s2 = 1.0 / (4.0 * packet.sigma * packet.sigma);
    for (int i = 0; i < grid.n_points; ++i) {
        double d = grid.x(i) - packet.mu;
        psi.amp[i] = std::exp(cplx(-d * d * inv4s2, packet.k0 * grid.x(i)));
    }
    psi.normalize();
    PropagatorConfig cfg;
    cfg.dt = dt;
    CrankNicolson cn(grid, V, cfg, pp);
    check_time_step(cn, psi, pp);

    MeanPositionTrace tr;
    tr.n_points = grid.n_points;
    tr.times.push_back(0);
    tr.mean_x.push_back(expectation_x(psi));
    long n_steps = std::llround(t_max / dt);
    cn.run(psi, n_steps,
           [&](long s, const WaveFunction& p) {
               tr.times.push_back(s * dt);
               tr.mean_x.push_back(expectation_x(p));
           },
           sample_every);
    tr.wall_contact = cn.wall_contact();

    // first maximum: first sample strictly above its successors for 3 samples
    for (std::size_t i = 1; i + 3 < tr.mean_x.size(); ++i) {
        if (tr.mean_x[i] > tr.mean_x[i + 1] && tr.mean_x[i] > tr.mean_x[i + 2] &&
            tr.mean_x[i] > tr.mean_x[i + 3] && tr.mean_x[i] >= tr.mean_x[i - 1]) {
            tr.turnaround_time = tr.times[i];
            break;
        }
    }
    return tr;
}

// <x>(t) on [0,1] for the inverted-parabola setup, one trace per mesh size.
// The packet starts on the parabola crest and accelerates down the right
// slope; its local wavelength shrinks until the mesh stops resolving it and
// the packet reflects spuriously, the sooner the coarser the mesh.
inline std::vector<MeanPositionTrace> mesh_pathology_demo(
    const std::vector<int>& n_values, const GaussianPacketSpec& packet = {0.3, 0.01, 200.0 * M_PI},
    double t_max = 1.2e-3, const PhysicalParams& pp = {}) {
    double c = 50.0 * packet.k0 * packet.k0;
    Potential V = Potential::parabola(c, 0.3);
    // dt from the largest |V| on the box
    double v_max = std::max(std::abs(V(0.0)), std::abs(V(1.0)));
    double dt = 0.4 * pp.hbar / v_max;
    std::vector<MeanPositionTrace> out;
    for (int n : n_values) {
        Grid g(0.0, 1.0, n);
        out.push_back(mean_position_trace(packet, V, g, dt, t_max, 10, pp));
    }
    return out;
}

// Time series from a plateau-decay propagation run.
struct DecayTimeSeries {
    std::vector<double> times;
    std::vector<double> plateau_prob;
    std::vector<double> region_discrepancy;   // growing-region comparison (may be empty)
    std::vector<double> plateau_discrepancy;  // fixed-plateau comparison (may be empty)
    double fitted_rate = 0;                   // least squares on log P over [0.1 tau, tau]
    bool wall_contact = false;
};

}  // namespace qstep
