#pragma once

// Hamiltonians and jump operators for the two fiber-coupled architectures.
//
// Units: hbar = 1. Every frequency carries a rotating-frame offset
// `frame_frequency` that is subtracted once per excitation, so only
// differences between emitter and cavity frequencies matter for dynamics
// within a sector.

#include <array>
#include <cmath>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "noonsim/basis.hpp"
#include "noonsim/core.hpp"

namespace noonsim {

/// Bidirectionally cascaded array of N emitter/ring subsystems.
struct SchemeIConfig {
    int subsystems = 2;
    std::vector<double> omega_eg;   // emitter transition frequency per subsystem
    std::vector<double> omega_c;    // ring frequency per subsystem
    std::vector<Complex> g;         // emitter-ring coupling
    std::vector<double> kappa_odd;  // decay of a(2n-1) into the fiber
    std::vector<double> kappa_even; // decay of a(2n) into the fiber
    std::vector<double> eta;        // backscattering between a(2n-1) and a(2n)
    std::vector<double> gamma;      // emitter spontaneous emission
    double frame_frequency = 0.0;

    /// Identical subsystems with shared parameters.
    static SchemeIConfig uniform(int n, double omega_eg, double omega_c, Complex g, double kappa, double eta = 0.0,
                                 double gamma = 0.0) {
        SchemeIConfig c;
        c.subsystems = n;
        const auto un = static_cast<std::size_t>(n < 0 ? 0 : n);
        c.omega_eg.assign(un, omega_eg);
        c.omega_c.assign(un, omega_c);
        c.g.assign(un, g);
        c.kappa_odd.assign(un, kappa);
        c.kappa_even.assign(un, kappa);
        c.eta.assign(un, eta);
        c.gamma.assign(un, gamma);
        return c;
    }

    bool time_reversal_symmetric() const {
        for (std::size_t n = 0; n < kappa_odd.size(); ++n)
            if (kappa_odd[n] != kappa_odd[0] || kappa_even[n] != kappa_odd[0]) return false;
        return true;
    }

    /// Throws ConfigError on invalid values; returns warnings.
    std::vector<std::string> validate() const {
        if (subsystems < 1) throw ConfigError("scheme.subsystems", "must be >= 1");
        const auto n = static_cast<std::size_t>(subsystems);
        auto len = [&](std::size_t got, const char* name) {
            if (got != n)
                throw ConfigError(std::string("scheme.") + name,
                                  "expected " + std::to_string(n) + " entries, got " + std::to_string(got));
        };
        len(omega_eg.size(), "omega_eg");
        len(omega_c.size(), "omega_c");
        len(g.size(), "g");
        len(kappa_odd.size(), "kappa_odd");
        len(kappa_even.size(), "kappa_even");
        len(eta.size(), "eta");
        len(gamma.size(), "gamma");
        for (std::size_t k = 0; k < n; ++k) {
            if (!(kappa_odd[k] >= 0.0)) throw ConfigError("scheme.kappa_odd", "rates must be >= 0");
            if (!(kappa_even[k] >= 0.0)) throw ConfigError("scheme.kappa_even", "rates must be >= 0");
            if (!(eta[k] >= 0.0)) throw ConfigError("scheme.eta", "rates must be >= 0");
            if (!(gamma[k] >= 0.0)) throw ConfigError("scheme.gamma", "rates must be >= 0");
        }
        std::vector<std::string> warnings;
        if (!time_reversal_symmetric())
            warnings.emplace_back("decay rates differ between modes; time-reversal symmetry needs identical kappa");
        return warnings;
    }
};

/// Two rings (left/right) with N dipole-dipole coupled emitters each.
struct SchemeIIConfig {
    int emitters_per_cavity = 2;
    double omega_eg = 0.0;
    double omega_c1 = 0.0;  // left ring (a1, a2)
    double omega_c2 = 0.0;  // right ring (a3, a4)
    Complex g_left{1.0, 0.0};
    Complex g_right{1.0, 0.0};
    double eta_left = 0.0;
    double eta_right = 0.0;
    std::vector<double> xi_left;   // xi[n] couples emitter n and n+1, length N-1
    std::vector<double> xi_right;
    std::array<double, 4> kappa{0.0, 0.0, 0.0, 0.0};
    double gamma = 0.0;
    double frame_frequency = 0.0;

    static SchemeIIConfig uniform(int n, double omega_eg, double omega_c, Complex g, double kappa, double eta = 0.0,
                                  double xi = 0.0, double gamma = 0.0) {
        SchemeIIConfig c;
        c.emitters_per_cavity = n;
        c.omega_eg = omega_eg;
        c.omega_c1 = c.omega_c2 = omega_c;
        c.g_left = c.g_right = g;
        c.eta_left = c.eta_right = eta;
        const auto links = static_cast<std::size_t>(n > 1 ? n - 1 : 0);
        c.xi_left.assign(links, xi);
        c.xi_right.assign(links, xi);
        c.kappa = {kappa, kappa, kappa, kappa};
        c.gamma = gamma;
        return c;
    }

    bool time_reversal_symmetric() const {
        return kappa[0] == kappa[1] && kappa[1] == kappa[2] && kappa[2] == kappa[3];
    }

    std::vector<std::string> validate() const {
        if (emitters_per_cavity < 1) throw ConfigError("scheme.emitters_per_cavity", "must be >= 1");
        const auto links = static_cast<std::size_t>(emitters_per_cavity - 1);
        if (xi_left.size() != links) throw ConfigError("scheme.xi_left", "expected N-1 entries");
        if (xi_right.size() != links) throw ConfigError("scheme.xi_right", "expected N-1 entries");
        for (double k : kappa)
            if (!(k >= 0.0)) throw ConfigError("scheme.kappa", "rates must be >= 0");
        if (!(eta_left >= 0.0) || !(eta_right >= 0.0)) throw ConfigError("scheme.eta", "rates must be >= 0");
        if (!(gamma >= 0.0)) throw ConfigError("scheme.gamma", "rates must be >= 0");
        std::vector<std::string> warnings;
        if (!time_reversal_symmetric())
            warnings.emplace_back("decay rates differ between modes; time-reversal symmetry needs identical kappa");
        return warnings;
    }
};

using SchemeConfig = std::variant<SchemeIConfig, SchemeIIConfig>;

inline SlotLayout layout_for(const SchemeIConfig& c) { return SlotLayout::array(c.subsystems); }
inline SlotLayout layout_for(const SchemeIIConfig& c) { return SlotLayout::ddi(c.emitters_per_cavity); }
inline SlotLayout layout_for(const SchemeConfig& c) {
    return std::visit([](const auto& x) { return layout_for(x); }, c);
}

struct JumpOperator {
    std::string name;
    SparseCMatrix op;
};

/// Operators assembled on one truncated space. Immutable once built.
struct OperatorSet {
    SpacePtr space;
    SparseCMatrix h_sys;
    SparseCMatrix h_nh;
    std::vector<JumpOperator> jumps;

    const JumpOperator* jump(const std::string& name) const {
        for (const auto& j : jumps)
            if (j.name == name) return &j;
        return nullptr;
    }

    double max_rate() const {
        // Largest eigenvalue bound of sum J^dag J: its max absolute row sum.
        SparseCMatrix total(h_nh.rows(), h_nh.cols());
        for (const auto& j : jumps) total += SparseCMatrix(j.op.adjoint() * j.op);
        double best = 0.0;
        for (Eigen::Index r = 0; r < total.outerSize(); ++r) {
            double row = 0.0;
            for (SparseCMatrix::InnerIterator it(total, r); it; ++it) row += std::abs(it.value());
            best = std::max(best, row);
        }
        return best;
    }
};

namespace detail {

struct Ladder {
    std::vector<SparseCMatrix> up;    // creation per slot
    std::vector<SparseCMatrix> down;  // annihilation per slot

    explicit Ladder(const SectorSpace& space) {
        for (std::size_t s = 0; s < space.layout().size(); ++s) {
            up.push_back(creation_operator(space, s));
            down.push_back(SparseCMatrix(up.back().adjoint()));
        }
    }
    // Normal-ordered products stay exact on the truncated space.
    SparseCMatrix hop(std::size_t to, std::size_t from) const { return SparseCMatrix(up[to] * down[from]); }
};

inline void require_layout(const SectorSpace& space, const SlotLayout& expected) {
    if (!(space.layout() == expected)) throw BasisError("layout mismatch between configuration and basis");
}

inline SparseCMatrix zero(const SectorSpace& space) {
    const auto d = static_cast<Eigen::Index>(space.dimension());
    return SparseCMatrix(d, d);
}

inline SparseCMatrix number_diagonal(const SectorSpace& space, const std::vector<double>& slot_energy) {
    std::vector<CTriplet> trips;
    for (std::size_t i = 0; i < space.dimension(); ++i) {
        const auto& s = space.state_at(i);
        double e = 0.0;
        for (std::size_t k = 0; k < slot_energy.size(); ++k) e += slot_energy[k] * s.occupations[k];
        if (e != 0.0) trips.emplace_back(static_cast<int>(i), static_cast<int>(i), Complex(e, 0.0));
    }
    SparseCMatrix m = zero(space);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

// Odd modes feed odd modes of later cavities; even modes feed even modes of
// earlier cavities. Returns (source, target) slot pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> cascade_feeds(const SlotLayout& layout) {
    std::vector<std::pair<std::size_t, std::size_t>> feeds;
    for (std::size_t s = 0; s < layout.size(); ++s) {
        const Slot& src = layout.slot(s);
        if (src.kind != SlotKind::Mode) continue;
        for (std::size_t t = 0; t < layout.size(); ++t) {
            const Slot& dst = layout.slot(t);
            if (dst.kind != SlotKind::Mode || dst.direction != src.direction) continue;
            if (src.direction == Direction::Odd && src.cavity < dst.cavity) feeds.emplace_back(s, t);
            if (src.direction == Direction::Even && src.cavity > dst.cavity) feeds.emplace_back(s, t);
        }
    }
    return feeds;
}

inline std::vector<double> mode_rates(const SchemeIConfig& c) {
    std::vector<double> r;
    for (std::size_t n = 0; n < c.kappa_odd.size(); ++n) {
        r.push_back(c.kappa_odd[n]);
        r.push_back(c.kappa_even[n]);
    }
    return r;
}

inline std::vector<double> mode_rates(const SchemeIIConfig& c) { return {c.kappa.begin(), c.kappa.end()}; }

inline std::vector<double> emitter_rates(const SchemeIConfig& c) { return c.gamma; }
inline std::vector<double> emitter_rates(const SchemeIIConfig& c) {
    return std::vector<double>(static_cast<std::size_t>(2 * c.emitters_per_cavity), c.gamma);
}

}  // namespace detail

inline SparseCMatrix build_h_sys_scheme1(const SchemeIConfig& cfg, const SectorSpace& space) {
    cfg.validate();
    detail::require_layout(space, layout_for(cfg));
    const auto n = static_cast<std::size_t>(cfg.subsystems);
    const detail::Ladder L(space);

    std::vector<double> energy(space.layout().size(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        energy[k] = cfg.omega_eg[k] - cfg.frame_frequency;
        energy[n + 2 * k] = cfg.omega_c[k] - cfg.frame_frequency;
        energy[n + 2 * k + 1] = cfg.omega_c[k] - cfg.frame_frequency;
    }
    SparseCMatrix h = detail::number_diagonal(space, energy);

    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t em = k, odd = n + 2 * k, even = n + 2 * k + 1;
        const Complex g = cfg.g[k];
        h += g * L.hop(odd, em) + std::conj(g) * L.hop(em, odd);
        h += std::conj(g) * L.hop(even, em) + g * L.hop(em, even);
        if (cfg.eta[k] != 0.0) h += cfg.eta[k] * (L.hop(odd, even) + L.hop(even, odd));
    }
    h.prune(Complex(0.0, 0.0));
    return h;
}

inline SparseCMatrix build_h_sys_scheme2(const SchemeIIConfig& cfg, const SectorSpace& space) {
    cfg.validate();
    detail::require_layout(space, layout_for(cfg));
    const auto n = static_cast<std::size_t>(cfg.emitters_per_cavity);
    const detail::Ladder L(space);
    const std::size_t a1 = 2 * n, a2 = 2 * n + 1, a3 = 2 * n + 2, a4 = 2 * n + 3;

    std::vector<double> energy(space.layout().size(), 0.0);
    for (std::size_t k = 0; k < 2 * n; ++k) energy[k] = cfg.omega_eg - cfg.frame_frequency;
    energy[a1] = energy[a2] = cfg.omega_c1 - cfg.frame_frequency;
    energy[a3] = energy[a4] = cfg.omega_c2 - cfg.frame_frequency;
    SparseCMatrix h = detail::number_diagonal(space, energy);

    struct Ring {
        std::size_t first_emitter, odd, even;
        Complex g;
        double eta;
        const std::vector<double>* xi;
    };
    const Ring rings[2] = {{0, a1, a2, cfg.g_left, cfg.eta_left, &cfg.xi_left},
                           {n, a3, a4, cfg.g_right, cfg.eta_right, &cfg.xi_right}};
    for (const Ring& r : rings) {
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t em = r.first_emitter + k;
            h += r.g * L.hop(em, r.odd) + std::conj(r.g) * L.hop(r.odd, em);
            h += std::conj(r.g) * L.hop(em, r.even) + r.g * L.hop(r.even, em);
        }
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double xi = (*r.xi)[k];
            if (xi != 0.0) {
                const std::size_t e1 = r.first_emitter + k, e2 = e1 + 1;
                h += xi * (L.hop(e1, e2) + L.hop(e2, e1));
            }
        }
        if (r.eta != 0.0) h += r.eta * (L.hop(r.odd, r.even) + L.hop(r.even, r.odd));
    }
    h.prune(Complex(0.0, 0.0));
    return h;
}

namespace detail {

template <class Cfg>
std::vector<JumpOperator> build_jumps(const Cfg& cfg, const SectorSpace& space) {
    cfg.validate();
    require_layout(space, layout_for(cfg));
    const auto& layout = space.layout();
    const Ladder L(space);
    const auto rates = mode_rates(cfg);
    const std::size_t ne = layout.emitter_count();

    SparseCMatrix jo = zero(space), je = zero(space);
    for (std::size_t m = 0; m < layout.mode_count(); ++m) {
        const std::size_t slot = ne + m;
        const double amp = std::sqrt(rates[m]);
        if (amp == 0.0) continue;
        (layout.slot(slot).direction == Direction::Odd ? jo : je) += amp * L.down[slot];
    }
    std::vector<JumpOperator> out;
    out.push_back({"J_o", jo});
    out.push_back({"J_e", je});
    const auto gam = emitter_rates(cfg);
    for (std::size_t k = 0; k < ne; ++k)
        if (gam[k] > 0.0) out.push_back({"J_gamma_" + layout.slot(k).label, SparseCMatrix(std::sqrt(gam[k]) * L.down[k])});
    return out;
}

template <class Cfg>
SparseCMatrix build_h_nh(const Cfg& cfg, const SectorSpace& space, const SparseCMatrix& h_sys) {
    const auto& layout = space.layout();
    const Ladder L(space);
    const auto rates = mode_rates(cfg);
    const auto gam = emitter_rates(cfg);
    const std::size_t ne = layout.emitter_count();

    std::vector<double> loss(layout.size(), 0.0);
    for (std::size_t k = 0; k < ne; ++k) loss[k] = gam[k];
    for (std::size_t m = 0; m < layout.mode_count(); ++m) loss[ne + m] = rates[m];
    SparseCMatrix h = h_sys;
    h += Complex(0.0, -0.5) * number_diagonal(space, loss);
    for (const auto& [src, dst] : cascade_feeds(layout)) {
        const double c = std::sqrt(rates[src - ne] * rates[dst - ne]);
        if (c != 0.0) h += Complex(0.0, -c) * L.hop(dst, src);
    }
    h.prune(Complex(0.0, 0.0));
    return h;
}

}  // namespace detail

/// J_o = sum sqrt(kappa) a_odd, J_e = sum sqrt(kappa) a_even, plus sqrt(gamma) sigma per emitter with gamma > 0.
inline std::vector<JumpOperator> build_jumps_scheme1(const SchemeIConfig& cfg, const SectorSpace& space) {
    return detail::build_jumps(cfg, space);
}

inline std::vector<JumpOperator> build_jumps_scheme2(const SchemeIIConfig& cfg, const SectorSpace& space) {
    return detail::build_jumps(cfg, space);
}

inline SparseCMatrix build_h_sys(const SchemeConfig& cfg, const SectorSpace& space) {
    return std::visit(
        [&](const auto& c) -> SparseCMatrix {
            if constexpr (std::is_same_v<std::decay_t<decltype(c)>, SchemeIConfig>)
                return build_h_sys_scheme1(c, space);
            else
                return build_h_sys_scheme2(c, space);
        },
        cfg);
}

/// h_sys - (i/2) sum(rate n) - i sum sqrt(k_s k_t) a_t^dag a_s over directional feeds.
inline SparseCMatrix build_h_nh(const SchemeConfig& cfg, const SectorSpace& space) {
    const SparseCMatrix h_sys = build_h_sys(cfg, space);
    return std::visit([&](const auto& c) { return detail::build_h_nh(c, space, h_sys); }, cfg);
}

inline OperatorSet build_operators(const SchemeConfig& cfg, SpacePtr space) {
    OperatorSet ops;
    ops.space = std::move(space);
    ops.h_sys = build_h_sys(cfg, *ops.space);
    ops.h_nh = std::visit([&](const auto& c) { return detail::build_h_nh(c, *ops.space, ops.h_sys); }, cfg);
    ops.jumps = std::visit([&](const auto& c) { return detail::build_jumps(c, *ops.space); }, cfg);
    return ops;
}

/// Dense block of `op` acting within excitation sector m.
inline CMatrix sector_block(const SparseCMatrix& op, const SectorSpace& space, int m) {
    const auto off = static_cast<Eigen::Index>(space.offset(m));
    const auto n = static_cast<Eigen::Index>(space.sector(m).size());
    return CMatrix(op.block(off, off, n, n));
}

}  // namespace noonsim
