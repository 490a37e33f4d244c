#pragma once

// Debug dumps: basis listing, dense operators, amplitude series, jump events.

#include <ostream>
#include <string>
#include <vector>

#include "noonsim/basis.hpp"
#include "noonsim/config.hpp"
#include "noonsim/dynamics.hpp"
#include "noonsim/model.hpp"
#include "noonsim/sweep.hpp"
#include "noonsim/trajectories.hpp"

namespace noonsim {

/// One JSON object per line: {index, emitter_bits, mode_occupations}.
inline void dump_basis_jsonl(const SectorSpace& space, std::ostream& os) {
    const std::size_t ne = space.layout().emitter_count();
    for (std::size_t i = 0; i < space.dimension(); ++i) {
        const auto& occ = space.state_at(i).occupations;
        Json j{{"index", i},
               {"emitter_bits", std::vector<int>(occ.begin(), occ.begin() + static_cast<std::ptrdiff_t>(ne))},
               {"mode_occupations", std::vector<int>(occ.begin() + static_cast<std::ptrdiff_t>(ne), occ.end())}};
        os << j.dump() << '\n';
    }
}

/// Dense row-major matrix as nested arrays of [re, im] pairs.
inline Json matrix_to_json(const CMatrix& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(Json::array({m(r, c).real(), m(r, c).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json operators_to_json(const OperatorSet& ops) {
    Json slots = Json::array();
    for (const auto& s : ops.space->layout().slots()) slots.push_back(s.label);
    Json jumps = Json::object();
    for (const auto& j : ops.jumps) jumps[j.name] = matrix_to_json(CMatrix(j.op));
    return Json{{"dimension", ops.space->dimension()},
                {"max_excitation", ops.space->max_excitation()},
                {"slots", slots},
                {"h_sys", matrix_to_json(CMatrix(ops.h_sys))},
                {"h_nh", matrix_to_json(CMatrix(ops.h_nh))},
                {"jumps", jumps}};
}

/// Columns t, re_c1, im_c1, ... over the full space.
inline void write_amplitudes_csv(const std::vector<StateVector>& states, std::ostream& os) {
    if (states.empty()) return;
    os << 't';
    for (Eigen::Index k = 0; k < states.front().amplitudes.size(); ++k) os << ",re_c" << k + 1 << ",im_c" << k + 1;
    os << '\n';
    for (const auto& s : states) {
        os << format_number(s.time);
        for (Eigen::Index k = 0; k < s.amplitudes.size(); ++k)
            os << ',' << format_number(s.amplitudes(k).real()) << ',' << format_number(s.amplitudes(k).imag());
        os << '\n';
    }
}

/// One JSON object per jump: {traj, t, channel}.
inline void write_events_jsonl(const EnsembleResult& res, const OperatorSet& ops, std::ostream& os) {
    for (std::size_t i = 0; i < res.events.size(); ++i)
        for (const auto& e : res.events[i])
            os << Json{{"traj", i}, {"t", e.t}, {"channel", ops.jumps.at(e.channel).name}}.dump() << '\n';
}

/// Columns t, then mean and standard error per observable.
inline void write_ensemble_csv(const EnsembleResult& res, std::ostream& os) {
    os << "t";
    for (const auto& n : res.names) os << ',' << n << ',' << n << "_stderr";
    os << '\n';
    for (std::size_t k = 0; k < res.times.size(); ++k) {
        os << format_number(res.times[k]);
        for (std::size_t o = 0; o < res.names.size(); ++o)
            os << ',' << format_number(res.mean[o][k]) << ',' << format_number(res.std_error[o][k]);
        os << '\n';
    }
}

}  // namespace noonsim
