#pragma once

// Stationary scattering at downward steps: closed forms for the rectangular
// and tanh steps, the dimensionless surface R(u,v), the parameter-region
// predicate, and a transfer-matrix oracle for arbitrary 1D profiles.

#include <cmath>
#include <functional>
#include <vector>

#include "qstep/core.hpp"

namespace qstep {

struct WaveNumbers {
    double k1 = 0;  // incoming side
    double k2 = 0;  // lower side
};

inline WaveNumbers step_wavenumbers(double E, double dE, const PhysicalParams& pp = {}) {
    if (!(E > 0)) throw Error(Errc::NonpositiveEnergy, "incoming energy must be > 0");
    if (!(dE >= 0)) throw Error(Errc::InvalidArgument, "step depth must be >= 0");
    return {std::sqrt(2.0 * pp.mass * E) / pp.hbar,
            std::sqrt(2.0 * pp.mass * (E + dE)) / pp.hbar};
}

// Amplitudes from matching psi and psi' at the step.
struct MatchCoefficients {
    double A = 0;  // transmitted
    double B = 0;  // reflected
};

inline MatchCoefficients match_coefficients(const WaveNumbers& k) {
    return {2.0 * k.k1 / (k.k1 + k.k2), (k.k1 - k.k2) / (k.k1 + k.k2)};
}

enum class Provenance { ClosedFormRect, ClosedFormSoft, TransferMatrix, SpectralIntegral, Propagation };

inline const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::ClosedFormRect: return "closed-form-rect";
        case Provenance::ClosedFormSoft: return "closed-form-soft";
        case Provenance::TransferMatrix: return "transfer-matrix";
        case Provenance::SpectralIntegral: return "spectral-integral";
        case Provenance::Propagation: return "propagation";
    }
    return "?";
}

struct ScatteringCoefficients {
    double R = 0;
    double T = 0;
    Provenance provenance = Provenance::ClosedFormRect;
};

inline ScatteringCoefficients rect_step_R(double E, double dE, const PhysicalParams& pp = {}) {
    WaveNumbers k = step_wavenumbers(E, dE, pp);
    double b = (k.k2 - k.k1) / (k.k1 + k.k2);
    double R = b * b;
    return {R, 1.0 - R, Provenance::ClosedFormRect};
}

namespace detail {
// log(sinh(x)) for x > 0, stable for large x
inline double log_sinh(double x) {
    if (x > 30.0) return x + std::log1p(-std::exp(-2.0 * x)) - std::log(2.0);
    return std::log(std::sinh(x));
}

// (sinh(p)/sinh(q))^2 for 0 <= p < q, stable for large arguments
inline double sinh_ratio_sq(double p, double q) {
    if (p <= 0.0) return 0.0;
    return std::exp(2.0 * (log_sinh(p) - log_sinh(q)));
}
}  // namespace detail

inline ScatteringCoefficients soft_step_R(double E, double dE, double L, const PhysicalParams& pp = {}) {
    if (!(L > 0)) throw Error(Errc::NonpositiveWidth, "soft step requires L > 0");
    WaveNumbers k = step_wavenumbers(E, dE, pp);
    double p = 0.5 * M_PI * (k.k2 - k.k1) * L;
    double q = 0.5 * M_PI * (k.k2 + k.k1) * L;
    double R = detail::sinh_ratio_sq(p, q);
    return {R, 1.0 - R, Provenance::ClosedFormSoft};
}

// u = (pi/2) k1 L,  v = (pi/2) sqrt(2 m dE) L / hbar
struct DimensionlessStep {
    double u = 0;
    double v = 0;
};

inline double R_uv(const DimensionlessStep& d) {
    if (!(d.u >= 0) || !(d.v >= 0)) throw Error(Errc::InvalidArgument, "u, v must be >= 0");
    if (d.u == 0.0 && d.v == 0.0) throw Error(Errc::DegenerateInput, "u = v = 0");
    if (d.u == 0.0) return 1.0;
    double s = std::hypot(d.u, d.v);
    return detail::sinh_ratio_sq(s - d.u, s + d.u);
}

// Margins for the reflection-dominated parameter region:
// 1/(k1 L) >> 1,  dE/E >> 1,  sigma k1 >> 1.
struct RegionMargins {
    double inv_k1L = 0;
    double depth_ratio = 0;
    double sigma_k1 = 0;
    bool in_region = false;
};

inline RegionMargins paradoxical_region(double k1, double L, double dE, double sigma,
                                        const PhysicalParams& pp = {}, double threshold = 10.0) {
    if (!(k1 > 0 && L > 0 && dE > 0 && sigma > 0))
        throw Error(Errc::InvalidArgument, "all region inputs must be > 0");
    double E = pp.hbar * pp.hbar * k1 * k1 / (2.0 * pp.mass);
    RegionMargins m;
    m.inv_k1L = 1.0 / (k1 * L);
    m.depth_ratio = dE / E;
    m.sigma_k1 = sigma * k1;
    m.in_region = m.inv_k1L > threshold && m.depth_ratio > threshold && m.sigma_k1 > threshold;
    return m;
}

// ---------------------------------------------------------------------------
// Transfer-matrix oracle: piecewise-constant slicing with midpoint sampling.

namespace detail {
// principal branch with Re > 0; i*sqrt(|z|) on the cut z <= 0
inline cplx branch_sqrt(cplx z) {
    if (z.imag() == 0.0 && z.real() <= 0.0) return cplx(0.0, std::sqrt(-z.real()));
    cplx r = std::sqrt(z);
    if (r.real() < 0.0) r = -r;
    return r;
}

// E is the total energy; the sampled profile is constant outside [x_lo, x_hi].
inline ScatteringCoefficients transfer_matrix_core(const std::function<double(double)>& V, double E,
                                                   double x_lo, double x_hi, int n_slices,
                                                   const PhysicalParams& pp) {
    if (n_slices < 1) throw Error(Errc::SliceCountTooSmall, "need at least one slice");
    if (!(x_lo < x_hi)) throw Error(Errc::InvalidArgument, "requires x_lo < x_hi");
    double VL = V(x_lo), VR = V(x_hi);
    if (E <= VL || E <= VR)
        throw Error(Errc::EvanescentAsymptote, "asymptotic wavenumber is imaginary");

    double h2m = pp.hbar * pp.hbar / (2.0 * pp.mass);
    auto wavenumber = [&](double Vx) { return branch_sqrt(cplx((E - Vx) / h2m, 0.0)); };

    double w = (x_hi - x_lo) / n_slices;
    // March right-to-left; the transmitted side carries (A, B) = (1, 0).
    cplx kT = wavenumber(VR);
    cplx A = 1.0, B = 0.0;
    cplx k_right = kT;
    for (int s = n_slices; s >= 0; --s) {
        // interface at x_lo + s*w; slice s samples V at its midpoint
        double x = x_lo + s * w;
        cplx k_left = (s == 0) ? wavenumber(VL) : wavenumber(V(x_lo + (s - 0.5) * w));
        cplx r = k_right / k_left;
        cplx ep = std::exp(I * (k_right - k_left) * x);
        cplx em = std::exp(-I * (k_right + k_left) * x);
        cplx A2 = 0.5 * ((1.0 + r) * A * ep + (1.0 - r) * B * em);
        cplx B2 = 0.5 * ((1.0 - r) * A / em + (1.0 + r) * B / ep);
        A = A2;
        B = B2;
        k_right = k_left;
    }
    double R = std::norm(B / A);
    double T = (kT.real() / k_right.real()) / std::norm(A);
    return {R, T, Provenance::TransferMatrix};
}
}  // namespace detail

// E is the incoming-side kinetic energy; the left asymptote is taken as the
// incoming side and must satisfy V(x_lo) = 0 or be absorbed into E by the
// caller (the step potentials here have V = 0 on the incoming side).
inline ScatteringCoefficients transfer_matrix_R(const Potential& V, double E, double x_lo,
                                                double x_hi, int n_slices,
                                                const PhysicalParams& pp = {}) {
    double Etot = E + V(x_lo);
    return detail::transfer_matrix_core([&V](double x) { return V(x); }, Etot, x_lo, x_hi,
                                        n_slices, pp);
}

// Spatially mirrored profile (incidence from the other side) at the same
// total energy. E is again the kinetic energy on the original incoming side.
inline ScatteringCoefficients transfer_matrix_R_mirrored(const Potential& V, double E, double x_lo,
                                                         double x_hi, int n_slices,
                                                         const PhysicalParams& pp = {}) {
    double Etot = E + V(x_lo);
    auto mirrored = [&V, x_lo, x_hi](double x) { return V(x_lo + x_hi - x); };
    return detail::transfer_matrix_core(mirrored, Etot, x_lo, x_hi, n_slices, pp);
}

}  // namespace qstep
