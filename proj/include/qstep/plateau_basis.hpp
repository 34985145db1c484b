#pragma once

// Exact time evolution of compactly supported states under the plateau
// Hamiltonian, by expansion in its continuum scattering basis. The basis
// functions are known in closed form (trigonometric inside, plane waves
// outside), so the evolved state can be evaluated directly at any time
// without time stepping. This is the reference evolution for the metastable
// decay experiments: grid propagators accumulate lattice dispersion error
// over the long escape distances, which destroys the phase coherence those
// comparisons require.
//
// Parametrization: exterior wavenumber p > 0, energy E = (hbar p)^2/2m - dE,
// interior k = sqrt(p^2 - p0^2) with p0 = sqrt(2 m dE)/hbar (imaginary below
// threshold, where the interior solution is hyperbolic). Even channel:
// u_p = cos(kx) inside; odd channel: u_p = sin(kx)/k (regular through the
// threshold; any rescaling of u cancels in the normalization). Outside,
// u_p = 2 Re[C e^{ip(x-a)}] with C = (u(a) - i u'(a)/p)/2, and the
// delta-normalized function is e_p = u_p / (2 |C| sqrt(pi)).

#include <cmath>
#include <functional>
#include <vector>

#include <fftw3.h>

#include "qstep/core.hpp"
#include "qstep/gamow.hpp"

namespace qstep {

struct BandConfig {
    double half_width = 6.0;  // band half-width around p0
    double dp = 0;            // 0: beta_1 / 10, capped by max_points
    long max_points = 1L << 21;
    double proj_dx = 0;       // projection quadrature step; 0: lambda0 / 20
    int pad_factor = 4;       // zero padding for the exterior field transform
};

// Field samples past the plateau edges at one time: values at s_i = i * ds,
// where s = x - a on the right and s = -x - a on the left.
struct ExteriorField {
    double ds = 0;
    std::vector<cplx> right;
    std::vector<cplx> left;
};

class PlateauBasisEvolution {
  public:
    PlateauBasisEvolution(const PlateauSpec& spec, const std::function<cplx(double)>& psi0,
                          double support, const BandConfig& band = {})
        : spec_(spec), a_(spec.a), hbar_(spec.params.hbar) {
        if (!(support >= spec.a))
            throw Error(Errc::InvalidArgument, "support must cover the plateau");
        p0_ = std::sqrt(2.0 * spec.params.mass * spec.dE) / hbar_;

        double dp = band.dp;
        if (dp <= 0) dp = solve_mode(spec, 1).beta / 10.0;
        long m = std::lround(2.0 * band.half_width / dp);
        if (m > band.max_points) {
            m = band.max_points;
            dp = 2.0 * band.half_width / m;
        }
        dp_ = dp;
        m_ = m;
        pad_ = band.pad_factor;

        double dxq = band.proj_dx > 0 ? band.proj_dx : spec.lambda0() / 20.0;
        long n_in = std::max<long>(4, std::lround(a_ / dxq));
        dxq_ = a_ / n_in;  // put the plateau edge on the quadrature grid
        n_in_ = n_in;
        n_q_ = n_in + static_cast<long>(std::ceil((support - a_) / dxq_)) + 1;

        // even/odd parts of the initial state on [0, support]
        psi0_even_.resize(n_q_);
        psi0_odd_.resize(n_q_);
        double even_mass = 0, odd_mass = 0;
        for (long i = 0; i < n_q_; ++i) {
            double x = i * dxq_;
            cplx r = psi0(x), l = psi0(-x);
            psi0_even_[i] = 0.5 * (r + l);
            psi0_odd_[i] = 0.5 * (r - l);
            double w = (i == 0 || i == n_q_ - 1) ? 0.5 : 1.0;
            even_mass += w * std::norm(psi0_even_[i]);
            odd_mass += w * std::norm(psi0_odd_[i]);
        }
        even_mass *= 2.0 * dxq_;
        odd_mass *= 2.0 * dxq_;

        if (even_mass > 1e-14) project_channel(Parity::Cos, psi0_even_);
        if (odd_mass > 1e-14) project_channel(Parity::Sin, psi0_odd_);
    }

    double p0() const { return p0_; }
    double dp() const { return dp_; }
    long band_points() const { return m_; }

    // total |coefficient|^2 mass; ~ ||psi0||^2 when the band captures the state
    double spectral_mass() const {
        double s = 0;
        for (const Channel& ch : channels_)
            for (const cplx& g : ch.g) s += std::norm(g);
        return s * dp_;
    }

    // phi(x, t) on |x| <= a at n uniform points from -a to a; n must be odd so
    // that the channel parities mirror cleanly about 0
    std::vector<cplx> interior_samples(double t, int n) const {
        if (n < 3 || n % 2 == 0) throw Error(Errc::InvalidArgument, "need an odd sample count >= 3");
        int h = n / 2;
        double dx = a_ / h;
        std::vector<cplx> out(n, cplx{});
        std::vector<cplx> half(h + 1);
        for (const Channel& ch : channels_) {
            std::fill(half.begin(), half.end(), cplx{});
            bool even = ch.parity == Parity::Cos;
            for (long j = 0; j < m_; ++j) {
                cplx c = ch.g[j] * ch.s_norm[j] * time_phase(j, t) * dp_;
                InteriorBasis b(k_squared(j), 0.0, dx);
                for (int i = 0; i <= h; ++i) {
                    half[i] += c * (even ? b.even() : b.odd());
                    b.advance();
                }
            }
            double sgn = even ? 1.0 : -1.0;
            for (int i = 0; i <= h; ++i) out[h + i] += half[i];
            for (int i = 1; i <= h; ++i) out[h - i] += sgn * half[i];
        }
        return out;
    }

    // field outside the plateau at time t, out to s_max past each edge
    ExteriorField exterior_field(double t, double s_max) const {
        long nf = 1;
        while (nf < pad_ * m_) nf <<= 1;
        double ds = 2.0 * M_PI / (nf * dp_);
        // keep the |.|^2 sampling away from carrier aliasing
        while (std::abs(std::sin(p0_ * ds)) < 0.1 || std::abs(std::sin(2.0 * p0_ * ds)) < 0.1) {
            nf <<= 1;
            ds = 2.0 * M_PI / (nf * dp_);
        }
        long n_s = static_cast<long>(s_max / ds) + 2;
        if (n_s > nf) throw Error(Errc::InvalidArgument, "s_max exceeds the transform period");

        ExteriorField f;
        f.ds = ds;
        f.right.assign(n_s, cplx{});
        f.left.assign(n_s, cplx{});

        std::vector<cplx> buf(nf);
        auto* fb = reinterpret_cast<fftw_complex*>(buf.data());
        fftw_plan bwd = fftw_plan_dft_1d(static_cast<int>(nf), fb, fb, FFTW_BACKWARD, FFTW_ESTIMATE);
        fftw_plan fwd = fftw_plan_dft_1d(static_cast<int>(nf), fb, fb, FFTW_FORWARD, FFTW_ESTIMATE);
        double p_lo = p_of(0);  // carrier of the band-shifted envelopes

        for (const Channel& ch : channels_) {
            double sgn = ch.parity == Parity::Cos ? 1.0 : -1.0;
            // outgoing part: F(s) = sum_j A_j e^{i (p_j - p_lo) s}
            std::fill(buf.begin(), buf.end(), cplx{});
            for (long j = 0; j < m_; ++j)
                buf[j] = ch.g[j] * ch.s_norm[j] * ch.C[j] * time_phase(j, t) * dp_;
            fftw_execute(bwd);
            for (long i = 0; i < n_s; ++i) {
                cplx val = buf[i] * std::exp(I * p_lo * (i * ds));
                f.right[i] += val;
                f.left[i] += sgn * val;
            }
            // incoming part: conjugate coefficients, opposite carrier
            std::fill(buf.begin(), buf.end(), cplx{});
            for (long j = 0; j < m_; ++j)
                buf[j] = ch.g[j] * ch.s_norm[j] * std::conj(ch.C[j]) * time_phase(j, t) * dp_;
            fftw_execute(fwd);
            for (long i = 0; i < n_s; ++i) {
                cplx val = buf[i] * std::exp(-I * p_lo * (i * ds));
                f.right[i] += val;
                f.left[i] += sgn * val;
            }
        }
        fftw_destroy_plan(bwd);
        fftw_destroy_plan(fwd);
        return f;
    }

    // single-point evaluation (slow; for spot checks)
    cplx evaluate(double x, double t) const {
        cplx acc{};
        double ax = std::abs(x);
        for (const Channel& ch : channels_) {
            double sgn = (ch.parity == Parity::Sin && x < 0) ? -1.0 : 1.0;
            bool even = ch.parity == Parity::Cos;
            for (long j = 0; j < m_; ++j) {
                cplx c = ch.g[j] * ch.s_norm[j] * time_phase(j, t) * dp_;
                double u;
                if (ax <= a_) {
                    InteriorBasis b(k_squared(j), ax, dxq_);
                    u = even ? b.even() : b.odd();
                } else {
                    u = 2.0 * std::real(ch.C[j] * std::exp(I * p_of(j) * (ax - a_)));
                }
                acc += sgn * c * u;
            }
        }
        return acc;
    }

    // L2 distance between the band reconstruction at t = 0 and the input,
    // measured on the projection grid
    double reconstruction_error() const {
        double err2 = 0;
        err2 += channel_error2(Parity::Cos, psi0_even_);
        err2 += channel_error2(Parity::Sin, psi0_odd_);
        return std::sqrt(err2);
    }

  private:
    struct Channel {
        Parity parity;
        std::vector<cplx> g;         // <e_p, psi0>
        std::vector<cplx> C;         // exterior coefficient of the raw basis
        std::vector<double> s_norm;  // 1 / (2 |C| sqrt(pi))
    };

    // cos(kx) and sin(kx)/k along a uniform grid by three-term recurrence;
    // below threshold (k2 < 0) the hyperbolic pair, same recurrence
    struct InteriorBasis {
        InteriorBasis(double k2, double x0, double dx) {
            if (k2 >= 0) {
                double k = std::sqrt(k2);
                c_prev_ = std::cos(k * (x0 - dx));
                c_cur_ = std::cos(k * x0);
                s_prev_ = k == 0 ? x0 - dx : std::sin(k * (x0 - dx)) / k;
                s_cur_ = k == 0 ? x0 : std::sin(k * x0) / k;
                r_ = 2.0 * std::cos(k * dx);
            } else {
                double q = std::sqrt(-k2);
                c_prev_ = std::cosh(q * (x0 - dx));
                c_cur_ = std::cosh(q * x0);
                s_prev_ = std::sinh(q * (x0 - dx)) / q;
                s_cur_ = std::sinh(q * x0) / q;
                r_ = 2.0 * std::cosh(q * dx);
            }
        }
        double even() const { return c_cur_; }
        double odd() const { return s_cur_; }
        void advance() {
            double cn = r_ * c_cur_ - c_prev_;
            double sn = r_ * s_cur_ - s_prev_;
            c_prev_ = c_cur_;
            c_cur_ = cn;
            s_prev_ = s_cur_;
            s_cur_ = sn;
        }
        double c_prev_, c_cur_, s_prev_, s_cur_, r_;
    };

    double p_of(long j) const { return p0_ + (j - 0.5 * m_ + 0.5) * dp_; }
    double k_squared(long j) const {
        double p = p_of(j);
        return (p - p0_) * (p + p0_);
    }
    cplx time_phase(long j, double t) const {
        double p = p_of(j);
        double E = 0.5 * hbar_ * hbar_ * p * p / spec_.params.mass - spec_.dE;
        return std::exp(-I * E * t / hbar_);
    }

    // boundary data of the raw basis: u(a), u'(a) (valid on both sides of the
    // threshold; see InteriorBasis for the hyperbolic continuation)
    void edge_values(Parity parity, double k2, double& u_a, double& du_a) const {
        InteriorBasis b(k2, a_, dxq_);
        if (parity == Parity::Cos) {
            u_a = b.even();
            du_a = -k2 * b.odd();  // d/dx cos(kx) = -k^2 (sin(kx)/k)
        } else {
            u_a = b.odd();
            du_a = b.even();
        }
    }

    void project_channel(Parity parity, const std::vector<cplx>& part) {
        Channel ch;
        ch.parity = parity;
        ch.g.resize(m_);
        ch.C.resize(m_);
        ch.s_norm.resize(m_);
        const double root_pi = std::sqrt(M_PI);
        bool even = parity == Parity::Cos;

        for (long j = 0; j < m_; ++j) {
            double p = p_of(j);
            double k2 = k_squared(j);
            double u_a, du_a;
            edge_values(parity, k2, u_a, du_a);
            cplx C = 0.5 * (u_a - I * du_a / p);
            ch.C[j] = C;
            ch.s_norm[j] = 1.0 / (2.0 * std::abs(C) * root_pi);

            // full-line overlap = 2 * int_0^X u(x) part(x) dx (equal parities)
            cplx acc{};
            InteriorBasis b(k2, 0.0, dxq_);
            for (long i = 0; i <= n_in_; ++i) {
                double w = (i == 0 || i == n_q_ - 1) ? 0.5 : 1.0;
                acc += w * (even ? b.even() : b.odd()) * part[i];
                b.advance();
            }
            cplx rot = std::exp(I * p * dxq_);
            cplx e = rot;  // e^{ip(x - a)} one step past the edge
            for (long i = n_in_ + 1; i < n_q_; ++i) {
                double w = (i == n_q_ - 1) ? 0.5 : 1.0;
                acc += w * (2.0 * std::real(C * e)) * part[i];
                e *= rot;
            }
            ch.g[j] = 2.0 * dxq_ * ch.s_norm[j] * acc;
        }
        channels_.push_back(std::move(ch));
    }

    // squared L2 error of one parity sector at t = 0 over the full line
    double channel_error2(Parity parity, const std::vector<cplx>& part) const {
        const Channel* ch = nullptr;
        for (const Channel& c : channels_)
            if (c.parity == parity) ch = &c;
        std::vector<cplx> rec(n_q_, cplx{});
        if (ch) {
            bool even = parity == Parity::Cos;
            for (long j = 0; j < m_; ++j) {
                cplx c = ch->g[j] * ch->s_norm[j] * dp_;
                InteriorBasis b(k_squared(j), 0.0, dxq_);
                for (long i = 0; i <= n_in_; ++i) {
                    rec[i] += c * (even ? b.even() : b.odd());
                    b.advance();
                }
                double p = p_of(j);
                cplx rot = std::exp(I * p * dxq_);
                cplx e = rot;
                for (long i = n_in_ + 1; i < n_q_; ++i) {
                    rec[i] += c * 2.0 * std::real(ch->C[j] * e);
                    e *= rot;
                }
            }
        }
        double s = 0;
        for (long i = 0; i < n_q_; ++i) {
            double w = (i == 0 || i == n_q_ - 1) ? 0.5 : 1.0;
            s += w * std::norm(rec[i] - part[i]);
        }
        return 2.0 * s * dxq_;
    }

    PlateauSpec spec_;
    double a_, hbar_, p0_, dp_ = 0, dxq_ = 0;
    long m_ = 0, n_in_ = 0, n_q_ = 0;
    int pad_ = 4;
    std::vector<Channel> channels_;
    std::vector<cplx> psi0_even_, psi0_odd_;
};

}  // namespace qstep
