#pragma once

// Independent reference computations for the tests. Nothing here reuses the
// library's Hamiltonian or master-equation assembly; only the basis and the
// single-slot ladder operators (checked separately) are shared.

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "noonsim/noonsim.hpp"

namespace oracle {

using noonsim::CMatrix;
using noonsim::Complex;
using noonsim::CVector;

/// Number of ways to place m excitations on `emitters` two-level slots and `modes` bosonic slots.
inline long long count_states(int emitters, int modes, int m) {
    if (m < 0) return 0;
    if (emitters == 0 && modes == 0) return m == 0 ? 1 : 0;
    if (emitters > 0) return count_states(emitters - 1, modes, m) + count_states(emitters - 1, modes, m - 1);
    long long total = 0;
    for (int k = 0; k <= m; ++k) total += count_states(0, modes - 1, m - k);
    return total;
}

/// Coefficient matrix A of dc/dt = A c for the two-subsystem single-excitation
/// amplitudes (s1, a1, a2, s2, a3, a4), written out from the amplitude equations
/// with real cascade coefficients.
inline CMatrix amplitude_equation_matrix(Complex g, double kappa, double delta) {
    const Complex i(0.0, 1.0);
    const Complex gc = std::conj(g);
    const Complex mode = -i * delta - kappa / 2.0;
    CMatrix a = CMatrix::Zero(6, 6);
    a(0, 1) = -i * gc;
    a(0, 2) = -i * g;
    a(1, 1) = mode;
    a(1, 0) = -i * g;
    a(2, 2) = mode;
    a(2, 5) = -kappa;
    a(2, 0) = -i * gc;
    a(3, 4) = -i * gc;
    a(3, 5) = -i * g;
    a(4, 4) = mode;
    a(4, 3) = -i * g;
    a(4, 1) = -kappa;
    a(5, 5) = mode;
    a(5, 3) = -i * gc;
    return a;
}

/// Dense ladder operators on the full truncated space.
struct DenseLadder {
    std::vector<CMatrix> up, down;
    explicit DenseLadder(const noonsim::SectorSpace& space) {
        for (std::size_t s = 0; s < space.layout().size(); ++s) {
            up.emplace_back(CMatrix(noonsim::creation_operator(space, s)));
            down.emplace_back(up.back().adjoint());
        }
    }
};

/// Hermitian system Hamiltonian written term by term from the scheme-I model.
inline CMatrix scheme1_hamiltonian(const noonsim::SchemeIConfig& c, const noonsim::SectorSpace& space) {
    DenseLadder l(space);
    const auto d = static_cast<Eigen::Index>(space.dimension());
    CMatrix h = CMatrix::Zero(d, d);
    const std::size_t n = static_cast<std::size_t>(c.subsystems);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t s = k, odd = n + 2 * k, even = n + 2 * k + 1;
        h += (c.omega_eg[k] - c.frame_frequency) * l.up[s] * l.down[s];
        h += (c.omega_c[k] - c.frame_frequency) * (l.up[odd] * l.down[odd] + l.up[even] * l.down[even]);
        const Complex g = c.g[k];
        h += g * l.up[odd] * l.down[s] + std::conj(g) * l.up[s] * l.down[odd];
        h += std::conj(g) * l.up[even] * l.down[s] + g * l.up[s] * l.down[even];
        h += c.eta[k] * (l.up[odd] * l.down[even] + l.up[even] * l.down[odd]);
    }
    return h;
}

/// Scheme-II system Hamiltonian written term by term (left ring: s1..sN, a1, a2).
inline CMatrix scheme2_hamiltonian(const noonsim::SchemeIIConfig& c, const noonsim::SectorSpace& space) {
    DenseLadder l(space);
    const auto d = static_cast<Eigen::Index>(space.dimension());
    CMatrix h = CMatrix::Zero(d, d);
    const std::size_t n = static_cast<std::size_t>(c.emitters_per_cavity);
    const std::size_t a1 = 2 * n, a2 = 2 * n + 1, a3 = 2 * n + 2, a4 = 2 * n + 3;
    for (std::size_t s = 0; s < 2 * n; ++s) h += (c.omega_eg - c.frame_frequency) * l.up[s] * l.down[s];
    h += (c.omega_c1 - c.frame_frequency) * (l.up[a1] * l.down[a1] + l.up[a2] * l.down[a2]);
    h += (c.omega_c2 - c.frame_frequency) * (l.up[a3] * l.down[a3] + l.up[a4] * l.down[a4]);
    for (int ring = 0; ring < 2; ++ring) {
        const Complex g = ring == 0 ? c.g_left : c.g_right;
        const std::size_t odd = ring == 0 ? a1 : a3, even = ring == 0 ? a2 : a4;
        const double eta = ring == 0 ? c.eta_left : c.eta_right;
        const auto& xi = ring == 0 ? c.xi_left : c.xi_right;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t s = ring * n + k;
            h += g * l.up[s] * l.down[odd] + std::conj(g) * l.up[odd] * l.down[s];
            h += std::conj(g) * l.up[s] * l.down[even] + g * l.up[even] * l.down[s];
        }
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const std::size_t s = ring * n + k;
            h += xi[k] * (l.up[s] * l.down[s + 1] + l.up[s + 1] * l.down[s]);
        }
        h += eta * (l.up[odd] * l.down[even] + l.up[even] * l.down[odd]);
    }
    return h;
}

inline CMatrix dissipator(const CMatrix& a, const CMatrix& rho) {
    return a * rho * a.adjoint() - 0.5 * (a.adjoint() * a * rho + rho * a.adjoint() * a);
}

struct Feed {
    std::size_t from, to;
    double rate;  // sqrt(kappa_from * kappa_to)
};

/// Cascaded master equation in explicit Lindblad form: coherent part, one
/// dissipator per mode and emitter, and for every directional feed s -> t the
/// term rate * ([a_s rho, a_t^dag] + [a_t, rho a_s^dag]).
inline CMatrix cascaded_rhs(const CMatrix& h, const DenseLadder& l, const std::vector<double>& slot_rates,
                            const std::vector<Feed>& feeds, const CMatrix& rho) {
    const Complex i(0.0, 1.0);
    CMatrix out = -i * (h * rho - rho * h);
    for (std::size_t s = 0; s < slot_rates.size(); ++s)
        if (slot_rates[s] > 0.0) out += slot_rates[s] * dissipator(l.down[s], rho);
    for (const auto& f : feeds) {
        const CMatrix& as = l.down[f.from];
        const CMatrix& at = l.down[f.to];
        const CMatrix asr = as * rho;
        const CMatrix rasd = rho * as.adjoint();
        out += f.rate * (asr * at.adjoint() - at.adjoint() * asr + at * rasd - rasd * at);
    }
    return out;
}

inline std::vector<Feed> scheme1_feeds(const noonsim::SchemeIConfig& c) {
    std::vector<Feed> feeds;
    const std::size_t n = static_cast<std::size_t>(c.subsystems);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q) {
            feeds.push_back({n + 2 * p, n + 2 * q, std::sqrt(c.kappa_odd[p] * c.kappa_odd[q])});
            feeds.push_back({n + 2 * q + 1, n + 2 * p + 1, std::sqrt(c.kappa_even[q] * c.kappa_even[p])});
        }
    return feeds;
}

inline std::vector<double> scheme1_rates(const noonsim::SchemeIConfig& c) {
    const std::size_t n = static_cast<std::size_t>(c.subsystems);
    std::vector<double> r(3 * n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        r[k] = c.gamma[k];
        r[n + 2 * k] = c.kappa_odd[k];
        r[n + 2 * k + 1] = c.kappa_even[k];
    }
    return r;
}

inline CMatrix random_density(Eigen::Index d, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    CMatrix x(d, d);
    for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d; ++c) x(r, c) = Complex(nd(rng), nd(rng));
    CMatrix rho = x * x.adjoint();
    return rho / rho.trace();
}

inline CVector random_state(Eigen::Index d, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    CVector v(d);
    for (Eigen::Index k = 0; k < d; ++k) v(k) = Complex(nd(rng), nd(rng));
    return v / v.norm();
}

/// exp(-i H t) psi by dense matrix exponential.
inline CVector expm_evolve(const CMatrix& h, const CVector& psi, double t) {
    const CMatrix gen = Complex(0.0, -t) * h;
    return gen.exp() * psi;
}

/// Occupation of `slot` in every basis state of the space, as a diagonal.
inline Eigen::VectorXd occupation_diagonal(const noonsim::SectorSpace& space, std::size_t slot) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(space.dimension()));
    for (std::size_t k = 0; k < space.dimension(); ++k)
        d(static_cast<Eigen::Index>(k)) = space.state_at(k).occupations[slot];
    return d;
}

}  // namespace oracle
