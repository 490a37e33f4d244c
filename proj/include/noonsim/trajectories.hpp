#pragma once

// Quantum-jump unraveling with first-order jump sampling: in each step of
// length dt, channel j fires with probability <J_j^dag J_j> dt (state
// normalized); otherwise the unnormalized state advances under H_NH.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "noonsim/core.hpp"
#include "noonsim/dynamics.hpp"
#include "noonsim/integrator.hpp"
#include "noonsim/model.hpp"

namespace noonsim {

/// Per-trajectory random stream derived from (seed, trajectory index), so results
/// do not depend on which worker runs which trajectory.
class StreamRng {
public:
    StreamRng(std::uint64_t seed, std::uint64_t stream) : engine_(mix(mix(seed) ^ (stream + 0x632be59bd9b4e019ull))) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
};

struct TrajectoryConfig {
    std::size_t n_traj = 1000;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    std::optional<std::vector<std::string>> channels;  // nullopt: all; empty: jumps disabled
    bool keep_events = true;
    unsigned threads = 1;

    /// Throws ConfigError for invalid settings; returns warnings.
    std::vector<std::string> validate(const OperatorSet& ops) const {
        if (n_traj < 1) throw ConfigError("trajectories.n_traj", "must be >= 1");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("trajectories.dt", "must be positive");
        if (channels)
            for (const auto& c : *channels)
                if (!ops.jump(c)) throw ConfigError("trajectories.channels", "unknown channel '" + c + "'");
        std::vector<std::string> warnings;
        if (dt * ops.max_rate() > 0.05)
            warnings.emplace_back("dt * max_rate = " + std::to_string(dt * ops.max_rate()) +
                                  " exceeds 0.05; first-order sampling bias may exceed Monte Carlo noise");
        return warnings;
    }
};

struct JumpEvent {
    double t;
    std::size_t channel;  // index into OperatorSet::jumps
};

struct TrajectoryRecord {
    std::size_t index = 0;
    std::uint64_t stream = 0;
    std::vector<JumpEvent> events;
    std::vector<StateVector> snapshots;  // normalized state at each grid time
};

/// Either |<v|psi>|^2 or sum_i w_i |psi_i|^2, evaluated on a normalized state.
class Observable {
public:
    static Observable fidelity(std::string name, const StateVector& target) {
        Observable o;
        o.name_ = std::move(name);
        o.projector_ = target.amplitudes;
        return o;
    }

    static Observable occupation(std::string name, const SectorSpace& space, std::size_t slot) {
        Observable o;
        o.name_ = std::move(name);
        o.weights_ = Eigen::VectorXd(static_cast<Eigen::Index>(space.dimension()));
        for (std::size_t i = 0; i < space.dimension(); ++i)
            o.weights_(static_cast<Eigen::Index>(i)) = space.state_at(i).occupations.at(slot);
        return o;
    }

    const std::string& name() const noexcept { return name_; }

    double evaluate(const CVector& psi) const {
        if (projector_.size() > 0) return std::norm(projector_.dot(psi));
        return (weights_.array() * psi.cwiseAbs2().array()).sum();
    }

private:
    std::string name_;
    CVector projector_;
    Eigen::VectorXd weights_;
};

struct EnsembleResult {
    std::vector<double> times;
    std::vector<std::string> names;
    std::vector<std::vector<double>> mean;       // [observable][time]
    std::vector<std::vector<double>> std_error;  // [observable][time]
    std::vector<std::vector<JumpEvent>> events;  // [trajectory], when kept
    std::size_t n_traj = 0;
    double step = 0.0;  // internal jump-decision step actually used
};

struct JumpOutcome {
    std::size_t channel;
    CVector state;  // normalized post-jump state
};

/// One first-order jump decision for the (possibly unnormalized) state psi.
/// Channel j fires with probability dt * ||J_j psi||^2 / ||psi||^2.
template <class Rng>
std::optional<JumpOutcome> sample_jump(const CVector& psi, std::span<const JumpOperator> jumps,
                                       std::span<const std::size_t> active, double dt, Rng& rng) {
    const double n2 = psi.squaredNorm();
    if (!(n2 > 0.0)) throw NumericalError("cannot sample a jump from a zero state");
    std::vector<CVector> jumped;
    std::vector<double> prob;
    jumped.reserve(active.size());
    double total = 0.0;
    for (std::size_t c : active) {
        jumped.push_back(jumps[c].op * psi);
        prob.push_back(dt * jumped.back().squaredNorm() / n2);
        total += prob.back();
    }
    if (total > 0.1)
        throw NumericalError("dt too coarse: jump probability per step " + std::to_string(total) + " exceeds 0.1");
    const double u = rng.uniform();
    if (u >= total) return std::nullopt;
    double acc = 0.0;
    for (std::size_t k = 0; k < active.size(); ++k) {
        acc += prob[k];
        if (u < acc && prob[k] > 0.0) return JumpOutcome{active[k], jumped[k] / jumped[k].norm()};
    }
    // Round-off left u in [acc, total): take the last channel that can fire.
    for (std::size_t k = active.size(); k-- > 0;)
        if (prob[k] > 0.0) return JumpOutcome{active[k], jumped[k] / jumped[k].norm()};
    throw NumericalError("jump selected but every channel has zero weight");
}

namespace detail {

/// exp(-i H_NH h) obtained by integrating the propagator ODE with the same
/// Runge-Kutta scheme used for no-jump evolution.
inline CMatrix step_propagator(const OperatorSet& ops, double h) {
    const auto d = static_cast<Eigen::Index>(ops.space->dimension());
    const CMatrix gen = Complex(0.0, -1.0) * CMatrix(ops.h_nh);
    CMatrix out = CMatrix::Identity(d, d);
    Tolerance tol;
    tol.rtol = 1e-13;
    tol.atol = 1e-15;
    const double t1[] = {h};
    integrate_dopri5([&](double, const CMatrix& y, CMatrix& dy) { dy.noalias() = gen * y; },
                     CMatrix(CMatrix::Identity(d, d)), 0.0, std::span<const double>(t1), tol,
                     [&](std::size_t, double, const CMatrix& y) { out = y; });
    return out;
}

struct StepPlan {
    std::vector<double> times;
    std::size_t substeps = 1;
    double h = 0.0;
};

inline StepPlan plan_steps(const TimeGrid& grid, double dt) {
    StepPlan p;
    p.times = grid.times();
    const double spacing = (grid.t_end - grid.t_start) / static_cast<double>(grid.n_points - 1);
    p.substeps = static_cast<std::size_t>(std::ceil(spacing / dt - 1e-9));
    if (p.substeps == 0) p.substeps = 1;
    p.h = spacing / static_cast<double>(p.substeps);
    return p;
}

inline std::vector<std::size_t> active_channels(const OperatorSet& ops, const TrajectoryConfig& cfg) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < ops.jumps.size(); ++j) {
        if (cfg.channels &&
            std::find(cfg.channels->begin(), cfg.channels->end(), ops.jumps[j].name) == cfg.channels->end())
            continue;
        out.push_back(j);
    }
    return out;
}

template <class Visit>
void run_one(const OperatorSet& ops, const CVector& psi0, const StepPlan& plan, const CMatrix& prop,
             std::span<const std::size_t> active, std::uint64_t seed, std::size_t index,
             std::vector<JumpEvent>& events, Visit&& visit) {
    StreamRng rng(seed, index);
    CVector psi = psi0;
    CVector tmp = psi0;
    visit(std::size_t{0}, psi);
    for (std::size_t k = 1; k < plan.times.size(); ++k) {
        const double t_left = plan.times[k - 1];
        for (std::size_t s = 0; s < plan.substeps; ++s) {
            auto jump = sample_jump(psi, std::span<const JumpOperator>(ops.jumps), active, plan.h, rng);
            if (jump) {
                psi = std::move(jump->state);
                events.push_back({t_left + plan.h * static_cast<double>(s + 1), jump->channel});
            } else {
                tmp.noalias() = prop * psi;
                psi.swap(tmp);
                const double n2 = psi.squaredNorm();
                if (n2 < 1e-200) throw NumericalError("no-jump state norm underflow");
                if (n2 < 1e-100) psi /= std::sqrt(n2);
            }
        }
        visit(k, psi);
    }
}

}  // namespace detail

/// A single trajectory with normalized snapshots at every grid time.
inline TrajectoryRecord run_single_trajectory(const OperatorSet& ops, const StateVector& psi0, const TimeGrid& grid,
                                              const TrajectoryConfig& cfg, std::size_t index) {
    cfg.validate(ops);
    if (std::abs(psi0.norm_squared() - 1.0) > 1e-10) throw Error("initial state must be normalized");
    const auto plan = detail::plan_steps(grid, cfg.dt);
    const CMatrix prop = detail::step_propagator(ops, plan.h);
    const auto active = detail::active_channels(ops, cfg);
    TrajectoryRecord rec;
    rec.index = index;
    rec.stream = index;
    rec.snapshots.resize(plan.times.size());
    detail::run_one(ops, psi0.amplitudes, plan, prop, active, cfg.seed, index, rec.events,
                    [&](std::size_t k, const CVector& psi) {
                        rec.snapshots[k] = StateVector{ops.space, psi / psi.norm(), plan.times[k]};
                    });
    return rec;
}

/// Monte Carlo averages of `observables` with standard errors. Reduction runs
/// in trajectory-index order, so results are bit-identical for any thread count.
inline EnsembleResult run_trajectories(const OperatorSet& ops, const StateVector& psi0, const TimeGrid& grid,
                                       const TrajectoryConfig& cfg, const std::vector<Observable>& observables) {
    cfg.validate(ops);
    if (!(*psi0.space == *ops.space)) throw BasisError("state and operators live on different spaces");
    if (std::abs(psi0.norm_squared() - 1.0) > 1e-10) throw Error("initial state must be normalized");
    const auto plan = detail::plan_steps(grid, cfg.dt);
    const CMatrix prop = detail::step_propagator(ops, plan.h);
    const auto active = detail::active_channels(ops, cfg);

    const std::size_t nt = plan.times.size(), no = observables.size(), ntraj = cfg.n_traj;
    std::vector<double> values(ntraj * no * nt, 0.0);
    std::vector<std::vector<JumpEvent>> events(ntraj);

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mu;
    auto worker = [&] {
        for (std::size_t i = next++; i < ntraj && !failed; i = next++) {
            try {
                double* row = values.data() + i * no * nt;
                detail::run_one(ops, psi0.amplitudes, plan, prop, active, cfg.seed, i, events[i],
                                [&](std::size_t k, const CVector& psi) {
                                    const CVector unit = psi / psi.norm();
                                    for (std::size_t o = 0; o < no; ++o) row[o * nt + k] = observables[o].evaluate(unit);
                                });
                if (!cfg.keep_events) {
                    events[i].clear();
                    events[i].shrink_to_fit();
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mu);
                if (!failed.exchange(true)) failure = e.what();
            }
        }
    };
    const unsigned nthreads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(ntraj)));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < nthreads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failed) throw NumericalError(failure);

    EnsembleResult res;
    res.times = plan.times;
    res.n_traj = ntraj;
    res.step = plan.h;
    res.mean.assign(no, std::vector<double>(nt, 0.0));
    res.std_error.assign(no, std::vector<double>(nt, 0.0));
    for (const auto& o : observables) res.names.push_back(o.name());
    for (std::size_t o = 0; o < no; ++o)
        for (std::size_t k = 0; k < nt; ++k) {
            double sum = 0.0;
            for (std::size_t i = 0; i < ntraj; ++i) sum += values[(i * no + o) * nt + k];
            const double mean = sum / static_cast<double>(ntraj);
            double ss = 0.0;
            for (std::size_t i = 0; i < ntraj; ++i) {
                const double dv = values[(i * no + o) * nt + k] - mean;
                ss += dv * dv;
            }
            res.mean[o][k] = mean;
            res.std_error[o][k] =
                ntraj > 1 ? std::sqrt(ss / static_cast<double>(ntraj - 1) / static_cast<double>(ntraj)) : 0.0;
        }
    if (cfg.keep_events) res.events = std::move(events);
    return res;
}

}  // namespace noonsim
