#pragma once

// Units, grids, wavefunction containers, potentials, Gaussian packets,
// norms and probability currents.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace qstep {

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};

enum class Errc {
    UnresolvedPacket,
    RegionOutOfGrid,
    NonpositiveEnergy,
    NonpositiveWidth,
    DegenerateInput,
    EvanescentAsymptote,
    SliceCountTooSmall,
    LeftMovingPacket,
    UnsupportedPotential,
    UnstableStep,
    PacketsNotSeparated,
    WallReturn,
    GridTooSmall,
    NotContracting,
    NonDecayRoot,
    InvalidArgument,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::UnresolvedPacket: return "UnresolvedPacket";
        case Errc::RegionOutOfGrid: return "RegionOutOfGrid";
        case Errc::NonpositiveEnergy: return "NonpositiveEnergy";
        case Errc::NonpositiveWidth: return "NonpositiveWidth";
        case Errc::DegenerateInput: return "DegenerateInput";
        case Errc::EvanescentAsymptote: return "EvanescentAsymptote";
        case Errc::SliceCountTooSmall: return "SliceCountTooSmall";
        case Errc::LeftMovingPacket: return "LeftMovingPacket";
        case Errc::UnsupportedPotential: return "UnsupportedPotential";
        case Errc::UnstableStep: return "UnstableStep";
        case Errc::PacketsNotSeparated: return "PacketsNotSeparated";
        case Errc::WallReturn: return "WallReturn";
        case Errc::GridTooSmall: return "GridTooSmall";
        case Errc::NotContracting: return "NotContracting";
        case Errc::NonDecayRoot: return "NonDecayRoot";
        case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "UnknownError";
}

struct Error : std::runtime_error {
    Errc code;
    Error(Errc c, const std::string& what)
        : std::runtime_error(std::string(errc_name(c)) + ": " + what), code(c) {}
};

struct PhysicalParams {
    double hbar = 1.0;
    double mass = 1.0;
};

// Uniform spatial grid, endpoints included.
struct Grid {
    double x_min = 0.0;
    double x_max = 1.0;
    int n_points = 2;

    Grid() = default;
    Grid(double lo, double hi, int n) : x_min(lo), x_max(hi), n_points(n) {
        if (!(lo < hi)) throw Error(Errc::InvalidArgument, "grid requires x_min < x_max");
        if (n < 3) throw Error(Errc::InvalidArgument, "grid requires n_points >= 3");
    }

    double dx() const { return (x_max - x_min) / (n_points - 1); }
    double x(int i) const { return x_min + i * dx(); }
    bool contains(double x) const { return x >= x_min && x <= x_max; }
};

// ---------------------------------------------------------------------------
// Potentials

class Potential {
  public:
    enum class Kind { Free, RectStep, SoftStep, Plateau, Parabola, HardBox };

    static Potential free() { return Potential(Kind::Free); }

    // -dE * Theta(x - center)
    static Potential rect_step(double dE, double center = 0.0) {
        check_depth(dE);
        Potential p(Kind::RectStep);
        p.dE_ = dE;
        p.center_ = center;
        return p;
    }

    // -dE/2 * (1 + tanh((x - center)/L))
    static Potential soft_step(double dE, double L, double center = 0.0) {
        check_depth(dE);
        if (!(L > 0)) throw Error(Errc::NonpositiveWidth, "soft step requires L > 0");
        Potential p(Kind::SoftStep);
        p.dE_ = dE;
        p.L_ = L;
        p.center_ = center;
        return p;
    }

    // 0 on [-a, a], -dE outside
    static Potential plateau(double dE, double a) {
        check_depth(dE);
        if (!(a > 0)) throw Error(Errc::InvalidArgument, "plateau requires a > 0");
        Potential p(Kind::Plateau);
        p.dE_ = dE;
        p.a_ = a;
        return p;
    }

    // -c * (x - x0)^2
    static Potential parabola(double c, double x0) {
        Potential p(Kind::Parabola);
        p.c_ = c;
        p.x0_ = x0;
        return p;
    }

    // Dirichlet box [x_lo, x_hi] around an inner potential
    static Potential hard_box(double x_lo, double x_hi, Potential inner) {
        if (!(x_lo < x_hi)) throw Error(Errc::InvalidArgument, "hard box requires x_lo < x_hi");
        if (inner.kind() == Kind::HardBox)
            throw Error(Errc::InvalidArgument, "nested hard boxes are not supported");
        Potential p(Kind::HardBox);
        p.box_lo_ = x_lo;
        p.box_hi_ = x_hi;
        p.inner_ = std::make_shared<Potential>(std::move(inner));
        return p;
    }

    Kind kind() const { return kind_; }
    double depth() const { return dE_; }
    double width() const { return L_; }
    double half_width() const { return a_; }
    double curvature() const { return c_; }
    double center() const {
        switch (kind_) {
            case Kind::RectStep:
            case Kind::SoftStep: return center_;
            case Kind::Parabola: return x0_;
            default: return 0.0;
        }
    }
    double box_lo() const { return box_lo_; }
    double box_hi() const { return box_hi_; }
    const Potential& inner() const { return *inner_; }
    bool is_boxed() const { return kind_ == Kind::HardBox; }
    bool is_step() const {
        const Potential& p = is_boxed() ? inner() : *this;
        return p.kind_ == Kind::RectStep || p.kind_ == Kind::SoftStep;
    }

    double operator()(double x) const {
        switch (kind_) {
            case Kind::Free: return 0.0;
            case Kind::RectStep: return x >= center_ ? -dE_ : 0.0;
            case Kind::SoftStep: return -0.5 * dE_ * (1.0 + std::tanh((x - center_) / L_));
            case Kind::Plateau: return std::abs(x) > a_ ? -dE_ : 0.0;
            case Kind::Parabola: return -c_ * (x - x0_) * (x - x0_);
            case Kind::HardBox:
                if (x < box_lo_ || x > box_hi_) return std::numeric_limits<double>::infinity();
                return (*inner_)(x);
        }
        return 0.0;
    }

  private:
    explicit Potential(Kind k) : kind_(k) {}
    static void check_depth(double dE) {
        if (!(dE >= 0)) throw Error(Errc::InvalidArgument, "step depth must be >= 0");
    }

    Kind kind_;
    double dE_ = 0, L_ = 0, a_ = 0, c_ = 0, x0_ = 0, center_ = 0;
    double box_lo_ = 0, box_hi_ = 0;
    std::shared_ptr<const Potential> inner_;
};

// ---------------------------------------------------------------------------
// Wavefunctions

struct WaveFunction {
    Grid grid;
    std::vector<cplx> amp;

    WaveFunction() = default;
    explicit WaveFunction(const Grid& g) : grid(g), amp(g.n_points, cplx{}) {}

    int size() const { return grid.n_points; }

    // sum |psi_i|^2 dx
    double norm2() const {
        double s = 0;
        for (const cplx& a : amp) s += std::norm(a);
        return s * grid.dx();
    }

    double norm() const { return std::sqrt(norm2()); }

    void normalize() {
        double n = norm();
        if (!(n > 0)) throw Error(Errc::InvalidArgument, "cannot normalize the zero function");
        for (cplx& a : amp) a /= n;
    }
};

inline double expectation_x(const WaveFunction& psi) {
    double s = 0;
    for (int i = 0; i < psi.size(); ++i) s += psi.grid.x(i) * std::norm(psi.amp[i]);
    return s * psi.grid.dx() / psi.norm2();
}

inline double variance_x(const WaveFunction& psi) {
    double mu = expectation_x(psi);
    double s = 0;
    for (int i = 0; i < psi.size(); ++i) {
        double d = psi.grid.x(i) - mu;
        s += d * d * std::norm(psi.amp[i]);
    }
    return s * psi.grid.dx() / psi.norm2();
}

// <phi|psi> dx on a shared grid
inline cplx inner_product(const WaveFunction& phi, const WaveFunction& psi) {
    cplx s{};
    for (int i = 0; i < phi.size(); ++i) s += std::conj(phi.amp[i]) * psi.amp[i];
    return s * phi.grid.dx();
}

// ---------------------------------------------------------------------------
// Gaussian packets, Eq.-(13)-style: sqrt(G_{mu,sigma}) * exp(i k0 x)

struct GaussianPacketSpec {
    double mu = 0.0;
    double sigma = 1.0;
    double k0 = 0.0;
};

inline WaveFunction build_gaussian(const GaussianPacketSpec& spec, const Grid& grid) {
    if (!(spec.sigma > 0)) throw Error(Errc::InvalidArgument, "packet sigma must be > 0");
    double dx = grid.dx();
    if (dx >= spec.sigma / 5.0)
        throw Error(Errc::UnresolvedPacket, "grid spacing does not resolve sigma (need dx < sigma/5)");
    if (spec.k0 != 0.0 && dx >= M_PI / (4.0 * std::abs(spec.k0)))
        throw Error(Errc::UnresolvedPacket, "grid spacing does not resolve the carrier (need dx < pi/4k0)");

    WaveFunction psi(grid);
    double inv2s2 = 1.0 / (4.0 * spec.sigma * spec.sigma);  // from G^{1/2}
    for (int i = 0; i < grid.n_points; ++i) {
        double x = grid.x(i);
        double d = x - spec.mu;
        psi.amp[i] = std::exp(cplx(-d * d * inv2s2, spec.k0 * x));
    }
    psi.normalize();
    return psi;
}

// ---------------------------------------------------------------------------
// Probability current and region probabilities

// j = (hbar/m) Im(psi* psi'), central differences; entry i corresponds to
// grid point i+1 (endpoints excluded).
inline std::vector<double> probability_current(const WaveFunction& psi, const PhysicalParams& pp = {}) {
    if (psi.size() < 3) throw Error(Errc::InvalidArgument, "current needs at least 3 points");
    std::vector<double> j(psi.size() - 2);
    double f = pp.hbar / (pp.mass * 2.0 * psi.grid.dx());
    for (int i = 1; i + 1 < psi.size(); ++i) {
        cplx dpsi = psi.amp[i + 1] - psi.amp[i - 1];
        j[i - 1] = f * std::imag(std::conj(psi.amp[i]) * dpsi);
    }
    return j;
}

// Trapezoid integral of |psi|^2 over [x_lo, x_hi], with linear interpolation
// of the density at fractional end cells.
inline double region_probability(const WaveFunction& psi, double x_lo, double x_hi) {
    const Grid& g = psi.grid;
    if (!(x_lo < x_hi)) throw Error(Errc::InvalidArgument, "region requires x_lo < x_hi");
    if (!g.contains(x_lo) || !g.contains(x_hi))
        throw Error(Errc::RegionOutOfGrid, "region exceeds grid extent");

    auto dens = [&](int i) { return std::norm(psi.amp[i]); };
    double dx = g.dx();
    auto dens_at = [&](double x) {
        double s = (x - g.x_min) / dx;
        int i = std::min(static_cast<int>(s), g.n_points - 2);
        double f = s - i;
        return (1 - f) * dens(i) + f * dens(i + 1);
    };

    int i_lo = static_cast<int>(std::ceil((x_lo - g.x_min) / dx - 1e-12));
    int i_hi = static_cast<int>(std::floor((x_hi - g.x_min) / dx + 1e-12));
    i_lo = std::clamp(i_lo, 0, g.n_points - 1);
    i_hi = std::clamp(i_hi, 0, g.n_points - 1);

    double total = 0;
    if (i_hi < i_lo) {  // both ends inside one cell
        total = 0.5 * (dens_at(x_lo) + dens_at(x_hi)) * (x_hi - x_lo);
        return total;
    }
    for (int i = i_lo; i < i_hi; ++i) total += 0.5 * (dens(i) + dens(i + 1)) * dx;
    double left = g.x(i_lo) - x_lo;
    if (left > 1e-12 * dx) total += 0.5 * (dens_at(x_lo) + dens(i_lo)) * left;
    double right = x_hi - g.x(i_hi);
    if (right > 1e-12 * dx) total += 0.5 * (dens(i_hi) + dens_at(x_hi)) * right;
    return total;
}

}  // namespace qstep
