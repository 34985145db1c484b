#pragma once

// Complex decay eigenvalues of the plateau potential: matching relations,
// the fixed-point equation for the dimensionless root, Banach iteration with
// certified error bounds, eigenvalue enumeration, eigenfunction assembly,
// asymptotics and lifetimes.

#include <cmath>
#include <complex>
#include <vector>

#include "qstep/core.hpp"
#include "qstep/stationary.hpp"

namespace qstep {

struct PlateauSpec {
    double a = 1.0;    // half-width
    double dE = 0.0;   // depth
    PhysicalParams params;

    PlateauSpec(double a_, double dE_, PhysicalParams pp = {}) : a(a_), dE(dE_), params(pp) {
        if (!(a > 0) || !(dE > 0)) throw Error(Errc::InvalidArgument, "plateau needs a > 0, dE > 0");
    }

    // de Broglie wavelength of the depth, and plateau width in those units
    double lambda0() const { return 2.0 * M_PI * params.hbar / std::sqrt(2.0 * params.mass * dE); }
    double alpha() const { return 2.0 * a / lambda0(); }
};

enum class Parity { Cos, Sin };  // odd n -> Cos, even n -> Sin

struct GamowMode {
    int n = 0;
    cplx kappa{};     // dimensionless root
    cplx Z{};         // complex eigenvalue, Z = kappa^2 dE
    cplx k{};         // interior wavenumber
    cplx k_tilde{};   // exterior wavenumber, Im < 0
    Parity parity = Parity::Cos;
    cplx B{};         // exterior amplitude, B = i^n kappa
    double tau = 0;   // -hbar / (2 Im Z)
    double escape_speed = 0;  // (hbar/m) Re k_tilde
    double beta = 0;          // -Im k_tilde
    double residual = 0;      // |F(kappa) - kappa|
    bool outside_radius = false;    // |kappa| > 1/2: excluded from the census
    bool unverified_regime = false; // alpha < 10
};

// Raw matching coefficients of the piecewise ansatz (A_+ = 1/2 convention).
struct GamowCoefficients {
    cplx A_plus{}, A_minus{}, B_plus{}, B_minus{};
};

struct SolverConfig {
    int max_iter = 200;
    double tol = 1e-14;
    double radius = 1.0 / std::sqrt(2.0);
    bool allow_unverified_alpha = false;  // permit alpha < 10

    double contraction_K(double alpha) const {
        return 1.0 / (M_PI * alpha * std::sqrt(1.0 - radius * radius));
    }
};

namespace detail {
// F(kappa) = n/(2 alpha) - (i / pi alpha) ln(kappa + sqrt(1 + kappa^2)),
// principal log, branch sqrt with Re > 0.
inline cplx gamow_F(cplx kappa, int n, double alpha) {
    cplx root = branch_sqrt(1.0 + kappa * kappa);
    return 0.5 * n / alpha - (I / (M_PI * alpha)) * std::log(kappa + root);
}
}  // namespace detail

// j Banach iterations from kappa^(0) = 0.
inline cplx gamow_iterate(const PlateauSpec& spec, int n, int j) {
    double alpha = spec.alpha();
    cplx kappa{};
    for (int i = 0; i < j; ++i) kappa = detail::gamow_F(kappa, n, alpha);
    return kappa;
}

inline GamowMode solve_mode(const PlateauSpec& spec, int n, const SolverConfig& cfg = {}) {
    double alpha = spec.alpha();
    bool unverified = alpha < 10.0;
    if (unverified && !cfg.allow_unverified_alpha)
        throw Error(Errc::InvalidArgument, "alpha < 10 requires allow_unverified_alpha");
    if (n == 0) throw Error(Errc::NonDecayRoot, "n = 0 gives the zero function");
    double K = cfg.contraction_K(alpha);
    if (K >= 1.0) throw Error(Errc::NotContracting, "contraction constant K >= 1");

    cplx kappa{};
    double res = 0;
    for (int i = 0; i < cfg.max_iter; ++i) {
        cplx next = detail::gamow_F(kappa, n, alpha);
        res = std::abs(next - kappa);
        kappa = next;
        if (res < cfg.tol) break;
    }

    GamowMode m;
    m.n = n;
    m.kappa = kappa;
    m.residual = std::abs(detail::gamow_F(kappa, n, alpha) - kappa);
    m.unverified_regime = unverified;
    m.outside_radius = std::abs(kappa) > 0.5;
    if (kappa.real() <= 0.0)
        throw Error(Errc::NonDecayRoot, "root has Re kappa <= 0 (no decay eigenfunction)");

    double two_pi_l0 = 2.0 * M_PI / spec.lambda0();
    m.Z = kappa * kappa * spec.dE;
    m.k = two_pi_l0 * kappa;
    m.k_tilde = two_pi_l0 * detail::branch_sqrt(1.0 + kappa * kappa);
    m.parity = (n % 2 != 0) ? Parity::Cos : Parity::Sin;
    // exterior amplitude = interior trace at +a: i^n kappa for the cos
    // interior (odd n); the sin interior (even n) carries one factor of i
    // less, i^{n-1} kappa
    int pw = (n % 2 != 0) ? n % 4 : (n - 1) % 4;
    cplx in = 1.0;
    for (int i = 0; i < pw; ++i) in *= I;
    m.B = in * kappa;
    m.tau = -spec.params.hbar / (2.0 * m.Z.imag());
    m.escape_speed = spec.params.hbar / spec.params.mass * m.k_tilde.real();
    m.beta = -m.k_tilde.imag();
    return m;
}

// Coefficients of the raw ansatz for a solved mode (A_+ = 1/2).
inline GamowCoefficients mode_coefficients(const GamowMode& m, const PlateauSpec& spec) {
    GamowCoefficients c;
    double a = spec.a;
    cplx k = m.k, kt = m.k_tilde;
    c.A_plus = 0.5;
    c.A_minus = std::exp(I * 2.0 * a * k) * (k - kt) / (k + kt) * c.A_plus;
    c.B_plus = std::exp(I * a * (k - kt)) * 2.0 * k / (k + kt) * c.A_plus;
    c.B_minus = std::exp(-I * a * (k + kt)) * 2.0 * k / (k - kt) * c.A_plus;
    return c;
}

inline std::vector<GamowMode> enumerate_modes(const PlateauSpec& spec, const SolverConfig& cfg = {}) {
    double alpha = spec.alpha();
    if (alpha < 10.0 && !cfg.allow_unverified_alpha)
        throw Error(Errc::InvalidArgument, "alpha < 10 requires allow_unverified_alpha");
    int n_max = static_cast<int>(std::ceil(alpha)) + 2;
    std::vector<GamowMode> kept;
    for (int n = 1; n <= n_max; ++n) {
        GamowMode m = solve_mode(spec, n, cfg);
        if (!m.outside_radius) kept.push_back(m);
    }
    return kept;
}

// Closed-form small-n estimate Z_n ~ (n^2 dE / 4 alpha^2)(1 - 2i / pi alpha).
inline cplx asymptotic_Z(const PlateauSpec& spec, int n) {
    if (n < 1) throw Error(Errc::InvalidArgument, "n must be >= 1");
    double alpha = spec.alpha();
    double re = n * n * spec.dE / (4.0 * alpha * alpha);
    return re * cplx(1.0, -2.0 / (M_PI * alpha));
}

struct Lifetimes {
    double tau_qu = 0;
    double tau_cl = 0;
};

// tau_cl = a sqrt(2m/E), tau_qu = (1/4) sqrt(dE/E) tau_cl, with E = Re Z.
inline Lifetimes lifetime(const PlateauSpec& spec, const GamowMode& mode) {
    double E = mode.Z.real();
    if (!(E > 0)) throw Error(Errc::NonpositiveEnergy, "mode must have Re Z > 0");
    Lifetimes lt;
    lt.tau_cl = spec.a * std::sqrt(2.0 * spec.params.mass / E);
    lt.tau_qu = 0.25 * std::sqrt(spec.dE / E) * lt.tau_cl;
    return lt;
}

// Piecewise-analytic eigenfunction evaluator: cos/sin interior, outgoing
// exponentials outside, continuous with continuous derivative at +-a.
class GamowEigenfunction {
  public:
    GamowEigenfunction(const GamowMode& mode, const PlateauSpec& spec)
        : a_(spec.a), k_(mode.k), kt_(mode.k_tilde), B_(mode.B), parity_(mode.parity),
          Z_(mode.Z), hbar_(spec.params.hbar) {}

    cplx operator()(double x) const {
        if (x > a_) return B_ * std::exp(I * kt_ * (x - a_));
        if (x < -a_) {
            cplx e = B_ * std::exp(-I * kt_ * (x + a_));
            return parity_ == Parity::Cos ? e : -e;
        }
        return parity_ == Parity::Cos ? std::cos(k_ * x) : std::sin(k_ * x);
    }

    cplx derivative(double x) const {
        if (x > a_) return I * kt_ * B_ * std::exp(I * kt_ * (x - a_));
        if (x < -a_) {
            cplx e = -I * kt_ * B_ * std::exp(-I * kt_ * (x + a_));
            return parity_ == Parity::Cos ? e : -e;
        }
        return parity_ == Parity::Cos ? -k_ * std::sin(k_ * x) : k_ * std::cos(k_ * x);
    }

    // psi(x, t) = e^{-i Z t / hbar} psi(x)
    cplx at_time(double x, double t) const { return std::exp(-I * Z_ * t / hbar_) * (*this)(x); }

    WaveFunction sample(const Grid& g) const {
        WaveFunction psi(g);
        for (int i = 0; i < g.n_points; ++i) psi.amp[i] = (*this)(g.x(i));
        return psi;
    }

    double half_width() const { return a_; }

  private:
    double a_;
    cplx k_, kt_, B_;
    Parity parity_;
    cplx Z_;
    double hbar_;
};

inline GamowEigenfunction eigenfunction(const GamowMode& mode, const PlateauSpec& spec) {
    return GamowEigenfunction(mode, spec);
}

}  // namespace qstep
