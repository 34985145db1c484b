#pragma once

// Momentum decomposition of packets and the packet-level reflection
// probability as a spectral integral over stationary coefficients.

#include <cmath>
#include <vector>

#include <fftw3.h>

#include "qstep/core.hpp"
#include "qstep/stationary.hpp"

namespace qstep {

namespace detail {

// Forward/backward DFT; the backward transform carries the 1/n factor.
// FFTW_ESTIMATE keeps plan selection (and hence roundoff) deterministic.
inline std::vector<cplx> fft(const std::vector<cplx>& in, bool inverse = false) {
    const int n = static_cast<int>(in.size());
    std::vector<cplx> out(in.size());
    // FFTW may scribble on the input buffer while planning; plan first on the
    // output buffer, then copy the data in.
    auto* po = reinterpret_cast<fftw_complex*>(out.data());
    fftw_plan plan = fftw_plan_dft_1d(n, po, po, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                      FFTW_ESTIMATE);
    out = in;
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    if (inverse)
        for (cplx& x : out) x /= static_cast<double>(n);
    return out;
}

}  // namespace detail

// |psi_hat(k)|^2 on the discrete Fourier grid, normalized to integrate to 1.
// k_grid is ordered ascending (negative frequencies first in the raw DFT are
// rearranged).
struct MomentumDensity {
    std::vector<double> k_grid;
    std::vector<double> density;
    double dk = 0;

    double mass_below(double k_cut) const {
        double s = 0;
        for (std::size_t i = 0; i < k_grid.size(); ++i)
            if (k_grid[i] < k_cut) s += density[i];
        return s * dk;
    }
};

inline MomentumDensity momentum_density(const WaveFunction& psi) {
    const int n = psi.size();
    double dx = psi.grid.dx();
    double dk = 2.0 * M_PI / (n * dx);

    // psi_hat(k_j) = (dx/sqrt(2 pi)) sum_m psi_m e^{-i k_j x_m}
    std::vector<cplx> a = detail::fft(psi.amp, false);
    MomentumDensity md;
    md.dk = dk;
    md.k_grid.resize(n);
    md.density.resize(n);
    double scale = dx * dx / (2.0 * M_PI);
    // rearrange: j >= (n+1)/2 are negative frequencies
    int n_neg = n / 2;
    double total = 0;
    for (int j = 0; j < n; ++j) {
        int src = (j + n - n_neg) % n;
        double k = (src <= (n - 1) / 2 ? src : src - n) * dk;
        // carrier phase relative to x_min: |.|^2 removes it
        md.k_grid[j] = k;
        md.density[j] = scale * std::norm(a[src]);
        total += md.density[j];
    }
    total *= dk;
    for (double& d : md.density) d /= total;
    return md;
}

// Mean wavenumber of a packet via its momentum density.
inline double mean_wavenumber(const WaveFunction& psi) {
    MomentumDensity md = momentum_density(psi);
    double s = 0;
    for (std::size_t i = 0; i < md.k_grid.size(); ++i) s += md.k_grid[i] * md.density[i];
    return s * md.dk;
}

// R(k1) of the stationary analysis with k2 = sqrt(k1^2 + 2 m dE / hbar^2).
inline double stationary_R_of_k(double k1, const Potential& step, const PhysicalParams& pp = {}) {
    const Potential& p = step.is_boxed() ? step.inner() : step;
    if (k1 <= 0) return 1.0;  // nonpositive modes are treated as fully reflected
    double E = pp.hbar * pp.hbar * k1 * k1 / (2.0 * pp.mass);
    switch (p.kind()) {
        case Potential::Kind::RectStep: return rect_step_R(E, p.depth(), pp).R;
        case Potential::Kind::SoftStep: return soft_step_R(E, p.depth(), p.width(), pp).R;
        default: throw Error(Errc::UnsupportedPotential, "spectral reflection needs a step potential");
    }
}

// Packet reflection probability: quadrature of R(k) |psi_hat(k)|^2 over k > 0.
inline ScatteringCoefficients packet_reflection(const WaveFunction& psi_in, const Potential& step,
                                                const PhysicalParams& pp = {},
                                                double left_mass_tol = 1e-6) {
    MomentumDensity md = momentum_density(psi_in);
    if (md.mass_below(0.0) > left_mass_tol)
        throw Error(Errc::LeftMovingPacket, "packet has significant negative-k mass");

    double R = 0, T = 0, mass = 0;
    for (std::size_t i = 0; i < md.k_grid.size(); ++i) {
        double k = md.k_grid[i];
        if (k <= 0) continue;
        double rk = stationary_R_of_k(k, step, pp);
        R += rk * md.density[i];
        T += (1.0 - rk) * md.density[i];
        mass += md.density[i];
    }
    R *= md.dk;
    T *= md.dk;
    mass *= md.dk;
    // renormalize away the (tiny) k <= 0 mass so R + T = 1
    R /= mass;
    T /= mass;
    return {R, T, Provenance::SpectralIntegral};
}

// Lower bound R > 1 - eps - delta from the proportion of Fourier mass with
// R(k) > 1 - eps.
struct EpsilonDeltaBound {
    double bound = 0;
    double delta = 0;
    bool vacuous = false;  // set when the bound is non-positive
};

inline EpsilonDeltaBound epsilon_delta_bound(const MomentumDensity& md, const Potential& step,
                                             double eps, const PhysicalParams& pp = {}) {
    if (!(eps > 0 && eps < 1)) throw Error(Errc::InvalidArgument, "eps must be in (0, 1)");
    double qualifying = 0;
    for (std::size_t i = 0; i < md.k_grid.size(); ++i) {
        double k = md.k_grid[i];
        if (k <= 0) continue;
        if (stationary_R_of_k(k, step, pp) > 1.0 - eps) qualifying += md.density[i];
    }
    qualifying *= md.dk;
    EpsilonDeltaBound out;
    out.delta = 1.0 - qualifying;
    out.bound = 1.0 - eps - out.delta;
    out.vacuous = out.bound <= 0.0;
    return out;
}

}  // namespace qstep
