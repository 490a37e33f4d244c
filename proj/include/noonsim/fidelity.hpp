#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "noonsim/basis.hpp"
#include "noonsim/core.hpp"
#include "noonsim/dynamics.hpp"

namespace noonsim {

/// How the excitations of one arm are spread over its slots.
enum class ArmState {
    Symmetric,   // normalized (sum of creation operators)^N |vac>
    SingleSlot,  // all N excitations in the first slot of the group
};

enum class GroupingMode { EmittersOnly, ModesOnly, Hybrid };

/// Ideal (|N,0> + e^{i phase} |0,N>)/sqrt(2) over two disjoint slot groups.
struct NoonTarget {
    int photon_number = 1;
    double phase = 0.0;
    std::vector<std::string> left_group;
    std::vector<std::string> right_group;
    ArmState arm = ArmState::Symmetric;

    std::vector<std::size_t> resolve(const SlotLayout& layout, const std::vector<std::string>& group) const {
        std::vector<std::size_t> out;
        for (const auto& label : group) {
            auto i = layout.find(label);
            if (!i) throw ConfigError("target", "unknown slot '" + label + "'");
            out.push_back(*i);
        }
        return out;
    }

    void validate(const SlotLayout& layout) const {
        if (photon_number < 1) throw ConfigError("target.photon_number", "must be >= 1");
        if (left_group.empty() || right_group.empty()) throw ConfigError("target", "groups must be nonempty");
        const auto l = resolve(layout, left_group);
        const auto r = resolve(layout, right_group);
        for (std::size_t a : l) {
            if (std::count(l.begin(), l.end(), a) > 1) throw ConfigError("target.left", "duplicate slot");
            if (std::find(r.begin(), r.end(), a) != r.end()) throw ConfigError("target", "groups must be disjoint");
        }
        for (std::size_t a : r)
            if (std::count(r.begin(), r.end(), a) > 1) throw ConfigError("target.right", "duplicate slot");
    }

    GroupingMode grouping_mode(const SlotLayout& layout) const {
        bool em = false, mode = false;
        for (const auto* g : {&left_group, &right_group})
            for (std::size_t i : resolve(layout, *g)) (layout.is_emitter(i) ? em : mode) = true;
        if (em && mode) return GroupingMode::Hybrid;
        return em ? GroupingMode::EmittersOnly : GroupingMode::ModesOnly;
    }
};

namespace detail {

inline CVector arm_state(const SectorSpace& space, const std::vector<std::size_t>& slots, int n, ArmState arm) {
    const auto d = static_cast<Eigen::Index>(space.dimension());
    CVector v = CVector::Zero(d);
    v(static_cast<Eigen::Index>(space.vacuum_index())) = 1.0;
    SparseCMatrix raise(d, d);
    if (arm == ArmState::SingleSlot) {
        raise = creation_operator(space, slots.front());
    } else {
        for (std::size_t s : slots) raise += creation_operator(space, s);
    }
    for (int k = 0; k < n; ++k) v = raise * v;
    const double nrm = v.norm();
    if (nrm == 0.0) throw ConfigError("target", "group cannot hold " + std::to_string(n) + " excitations");
    return v / nrm;
}

}  // namespace detail

/// Target vector in sector `photon_number` of `space`.
inline StateVector build_noon_state(const NoonTarget& target, const SpacePtr& space) {
    target.validate(space->layout());
    if (target.photon_number > space->max_excitation())
        throw BasisError("space truncated below the target excitation number");
    const auto& layout = space->layout();
    const CVector left = detail::arm_state(*space, target.resolve(layout, target.left_group), target.photon_number,
                                           target.arm);
    const CVector right = detail::arm_state(*space, target.resolve(layout, target.right_group),
                                            target.photon_number, target.arm);
    const Complex ph = std::polar(1.0, target.phase);
    return {space, (left + ph * right) / std::sqrt(2.0), 0.0};
}

/// |<target|psi>|^2. For the unnormalized no-jump state this is the fidelity of
/// the full density operator whenever the target shares psi's excitation sector.
inline double fidelity_pure(const StateVector& psi, const StateVector& target) {
    if (!(*psi.space == *target.space)) throw BasisError("state and target live on different spaces");
    return std::clamp(std::norm(target.amplitudes.dot(psi.amplitudes)), 0.0, 1.0);
}

/// <target|rho|target>.
inline double fidelity_pure(const DensityMatrix& rho, const StateVector& target) {
    if (!(*rho.space == *target.space)) throw BasisError("density matrix and target live on different spaces");
    const Complex f = target.amplitudes.dot(rho.matrix * target.amplitudes);
    return std::clamp(f.real(), 0.0, 1.0);
}

struct FidelitySample {
    double t;
    double fidelity;
};

template <class S>
std::vector<FidelitySample> fidelity_series(const std::vector<S>& states, const StateVector& target) {
    std::vector<FidelitySample> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back({s.time, fidelity_pure(s, target)});
    return out;
}

}  // namespace noonsim
