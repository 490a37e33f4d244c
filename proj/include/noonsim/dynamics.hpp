#pragma once

// No-jump propagation under H_NH, the cascaded master equation, and reduced
// density operators.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "noonsim/basis.hpp"
#include "noonsim/core.hpp"
#include "noonsim/integrator.hpp"
#include "noonsim/model.hpp"

namespace noonsim {

enum class Stepper { Dopri5, Rk4 };

/// Uniform output sampling plus integrator settings.
struct TimeGrid {
    double t_start = 0.0;
    double t_end = 1.0;
    std::size_t n_points = 2;
    Tolerance tol{};
    Stepper stepper = Stepper::Dopri5;
    double rk4_step = 1e-3;

    void validate() const {
        if (n_points < 2) throw ConfigError("time.points", "need at least 2 points");
        if (!std::isfinite(t_start) || !std::isfinite(t_end)) throw ConfigError("time", "non-finite bounds");
        if (!(t_end > t_start)) throw ConfigError("time", "t_end must exceed t_start");
    }

    std::vector<double> times() const {
        validate();
        std::vector<double> t(n_points);
        const double step = (t_end - t_start) / static_cast<double>(n_points - 1);
        for (std::size_t k = 0; k < n_points; ++k) t[k] = t_start + step * static_cast<double>(k);
        t.back() = t_end;
        return t;
    }
};

/// Amplitudes over the full truncated space.
struct StateVector {
    SpacePtr space;
    CVector amplitudes;
    double time = 0.0;

    double norm_squared() const { return amplitudes.squaredNorm(); }

    /// Sectors carrying non-zero amplitude.
    std::vector<int> occupied_sectors() const {
        std::vector<int> out;
        for (int m = 0; m <= space->max_excitation(); ++m) {
            const auto seg = amplitudes.segment(static_cast<Eigen::Index>(space->offset(m)),
                                                static_cast<Eigen::Index>(space->sector(m).size()));
            if (seg.squaredNorm() > 0.0) out.push_back(m);
        }
        return out;
    }
};

struct DensityMatrix {
    SpacePtr space;
    CMatrix matrix;
    double time = 0.0;

    double trace() const { return matrix.trace().real(); }
    double hermiticity_error() const { return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff(); }
    double purity() const { return (matrix * matrix).trace().real(); }
    double min_eigenvalue() const {
        const CMatrix herm = 0.5 * (matrix + matrix.adjoint());
        Eigen::SelfAdjointEigenSolver<CMatrix> es(herm, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }
};

inline StateVector basis_vector(const SpacePtr& space, const BasisState& s) {
    StateVector v{space, CVector::Zero(static_cast<Eigen::Index>(space->dimension())), 0.0};
    v.amplitudes(static_cast<Eigen::Index>(space->index_of(s))) = 1.0;
    return v;
}

inline DensityMatrix pure_density(const StateVector& psi) {
    return {psi.space, psi.amplitudes * psi.amplitudes.adjoint(), psi.time};
}

struct NoJumpSolution {
    std::vector<StateVector> states;
    IntegrationStats stats;
};

namespace detail {

inline int single_sector(const StateVector& psi) {
    const auto sectors = psi.occupied_sectors();
    if (sectors.size() != 1) throw Error("initial state must live in exactly one excitation sector");
    return sectors.front();
}

template <class State, class Rhs, class Observer>
IntegrationStats run_stepper(const TimeGrid& grid, Rhs&& rhs, const State& y0, const std::vector<double>& times,
                             Observer&& obs) {
    if (grid.stepper == Stepper::Rk4)
        return integrate_rk4(rhs, y0, grid.t_start, std::span<const double>(times), grid.rk4_step, obs);
    return integrate_dopri5(rhs, y0, grid.t_start, std::span<const double>(times), grid.tol, obs);
}

}  // namespace detail

/// i d|psi>/dt = H_NH |psi>, sampled on the grid. psi0 must be normalized and
/// confined to one excitation sector; the result stays unnormalized.
inline NoJumpSolution propagate_nojump(const OperatorSet& ops, const StateVector& psi0, const TimeGrid& grid) {
    if (!(*psi0.space == *ops.space)) throw BasisError("state and operators live on different spaces");
    if (std::abs(psi0.norm_squared() - 1.0) > 1e-10) throw Error("initial state must be normalized");
    const int m = detail::single_sector(psi0);
    const auto& space = *ops.space;
    const auto off = static_cast<Eigen::Index>(space.offset(m));
    const auto n = static_cast<Eigen::Index>(space.sector(m).size());

    const CMatrix gen = Complex(0.0, -1.0) * sector_block(ops.h_nh, space, m);
    const CVector y0 = psi0.amplitudes.segment(off, n);
    const auto times = grid.times();

    NoJumpSolution sol;
    sol.states.resize(times.size());
    auto rhs = [&](double, const CVector& y, CVector& dy) { dy.noalias() = gen * y; };
    auto obs = [&](std::size_t k, double t, const CVector& y) {
        StateVector s{ops.space, CVector::Zero(static_cast<Eigen::Index>(space.dimension())), t};
        s.amplitudes.segment(off, n) = y;
        sol.states[k] = std::move(s);
    };
    sol.stats = detail::run_stepper(grid, rhs, y0, times, obs);
    return sol;
}

/// 1 - ||psi||^2, clamped to [0, 1]: probability that the excitation has left
/// the system (for a single excitation, the weight of the vacuum).
inline double ground_population(const StateVector& psi) { return std::clamp(1.0 - psi.norm_squared(), 0.0, 1.0); }

/// rho = |psi><psi| + (1 - ||psi||^2) |vac><vac| for a single-excitation no-jump state.
inline DensityMatrix assemble_density_single_excitation(const StateVector& psi) {
    const auto sectors = psi.occupied_sectors();
    if (sectors.size() > 1 || (sectors.size() == 1 && sectors.front() != 1))
        throw Error("assemble_density_single_excitation needs a state in the one-excitation sector");
    DensityMatrix rho = pure_density(psi);
    const auto v = static_cast<Eigen::Index>(psi.space->vacuum_index());
    rho.matrix(v, v) += 1.0 - psi.norm_squared();
    return rho;
}

namespace detail {

/// Master-equation generator with cached jump adjoints and work buffers.
class MasterGenerator {
public:
    explicit MasterGenerator(const OperatorSet& ops) : ops_(ops) {
        for (const auto& j : ops.jumps) adjoints_.emplace_back(j.op.adjoint());
    }

    /// out = -i (H_NH rho - rho H_NH^dag) + sum_j J_j rho J_j^dag for Hermitian rho.
    void apply(const CMatrix& rho, CMatrix& out) {
        hr_.noalias() = ops_.h_nh * rho;
        out = Complex(0.0, -1.0) * hr_;
        out += Complex(0.0, 1.0) * hr_.adjoint();
        for (std::size_t j = 0; j < adjoints_.size(); ++j) {
            jr_.noalias() = ops_.jumps[j].op * rho;
            out.noalias() += jr_ * adjoints_[j];
        }
    }

private:
    const OperatorSet& ops_;
    std::vector<SparseCMatrix> adjoints_;
    CMatrix hr_, jr_;
};

}  // namespace detail

/// d rho/dt = -i (H_NH rho - rho H_NH^dag) + sum_j J_j rho J_j^dag.
inline CMatrix master_rhs(const OperatorSet& ops, const CMatrix& rho) {
    const CMatrix rho_h = ops.h_nh * rho.adjoint();
    CMatrix out = Complex(0.0, -1.0) * (ops.h_nh * rho - rho_h.adjoint());
    for (const auto& j : ops.jumps) {
        const SparseCMatrix jd = j.op.adjoint();
        const CMatrix jr = j.op * rho;
        out.noalias() += jr * jd;
    }
    return out;
}

struct MasterDiagnostics {
    double max_trace_error = 0.0;
    double max_hermiticity_error = 0.0;
    double min_eigenvalue = std::numeric_limits<double>::infinity();
};

struct MasterSolution {
    std::vector<DensityMatrix> states;
    IntegrationStats stats;
    MasterDiagnostics diagnostics;
};

/// Integrates the full cascaded master equation over sectors 0..M. Positivity is
/// monitored at every output time; an eigenvalue below -eps_pos raises NumericalError.
inline MasterSolution master_solve(const OperatorSet& ops, const DensityMatrix& rho0, const TimeGrid& grid,
                                   double eps_pos = 1e-8) {
    if (!(*rho0.space == *ops.space)) throw BasisError("density matrix and operators live on different spaces");
    const auto times = grid.times();
    MasterSolution sol;
    sol.states.resize(times.size());
    detail::MasterGenerator gen(ops);
    CMatrix herm;
    auto rhs = [&](double, const CMatrix& y, CMatrix& dy) {
        herm = 0.5 * (y + y.adjoint());
        gen.apply(herm, dy);
    };
    auto obs = [&](std::size_t k, double t, const CMatrix& y) {
        DensityMatrix r{ops.space, y, t};
        auto& d = sol.diagnostics;
        d.max_trace_error = std::max(d.max_trace_error, std::abs(r.trace() - 1.0));
        d.max_hermiticity_error = std::max(d.max_hermiticity_error, r.hermiticity_error());
        const double ev = r.min_eigenvalue();
        d.min_eigenvalue = std::min(d.min_eigenvalue, ev);
        if (ev < -eps_pos)
            throw NumericalError("positivity violated at t=" + std::to_string(t) + ": min eigenvalue " +
                                 std::to_string(ev) + ", trace error " + std::to_string(std::abs(r.trace() - 1.0)));
        sol.states[k] = std::move(r);
    };
    sol.stats = detail::run_stepper(grid, rhs, rho0.matrix, times, obs);
    return sol;
}

/// Reduced density matrix on the slots in `keep` (indices into the layout). The
/// result lives on the kept sub-layout, truncated at the same excitation number.
inline DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::size_t>& keep) {
    const auto& space = *rho.space;
    const auto& layout = space.layout();
    if (keep.empty()) throw BasisError("partial trace needs at least one kept slot");
    for (std::size_t k : keep)
        if (k >= layout.size()) throw BasisError("invalid slot index in partial trace");
    auto sub = make_space(layout.subset(keep), space.max_excitation());
    std::vector<bool> kept(layout.size(), false);
    for (std::size_t k : keep) kept[k] = true;

    const std::size_t d = space.dimension();
    std::vector<std::size_t> sys_idx(d);
    std::vector<std::vector<int>> env(d);
    for (std::size_t i = 0; i < d; ++i) {
        const auto& occ = space.state_at(i).occupations;
        BasisState s;
        for (std::size_t k = 0; k < occ.size(); ++k) (kept[k] ? s.occupations : env[i]).push_back(occ[k]);
        sys_idx[i] = sub->index_of(s);
    }
    std::map<std::vector<int>, std::vector<std::size_t>> by_env;
    for (std::size_t i = 0; i < d; ++i) by_env[env[i]].push_back(i);

    const auto ds = static_cast<Eigen::Index>(sub->dimension());
    DensityMatrix out{sub, CMatrix::Zero(ds, ds), rho.time};
    for (const auto& [e, members] : by_env)
        for (std::size_t i : members)
            for (std::size_t j : members)
                out.matrix(static_cast<Eigen::Index>(sys_idx[i]), static_cast<Eigen::Index>(sys_idx[j])) +=
                    rho.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
}

/// Traces out every cavity mode, keeping the emitters.
inline DensityMatrix partial_trace_modes(const DensityMatrix& rho) {
    std::vector<std::size_t> keep(rho.space->layout().emitter_count());
    for (std::size_t k = 0; k < keep.size(); ++k) keep[k] = k;
    return partial_trace(rho, keep);
}

/// Traces out every emitter, keeping the cavity modes.
inline DensityMatrix partial_trace_emitters(const DensityMatrix& rho) {
    const auto& layout = rho.space->layout();
    std::vector<std::size_t> keep;
    for (std::size_t k = layout.emitter_count(); k < layout.size(); ++k) keep.push_back(k);
    return partial_trace(rho, keep);
}

}  // namespace noonsim
