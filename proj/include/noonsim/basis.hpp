#pragma once

// Excitation-number-truncated Hilbert spaces for emitter/cavity-mode networks.
//
// Slots are ordered emitters first, then modes, each in physical index order.
// A sector holds every configuration with exactly M excitations; emitters are
// two-level (bit 0/1), modes are bosonic with occupation bounded only by M.
// Within a sector, states are ordered by descending lexicographic occupation
// vector over the slot order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "noonsim/core.hpp"

namespace noonsim {

enum class Scheme { ArrayI, DdiII, Generic };

enum class SlotKind { Emitter, Mode };

/// Propagation direction of a ring-resonator mode; odd modes travel toward
/// higher cavity indices, even modes toward lower ones.
enum class Direction { None, Odd, Even };

struct Slot {
    SlotKind kind = SlotKind::Emitter;
    std::string label;
    int cavity = 0;  // 0-based owning cavity / subsystem
    Direction direction = Direction::None;

    bool operator==(const Slot&) const = default;
};

class SlotLayout {
public:
    SlotLayout() = default;

    /// Cascaded JC array: N emitters s1..sN, modes a1..a2N with a(2n-1) odd and
    /// a(2n) even in subsystem n.
    static SlotLayout array(int subsystems) {
        if (subsystems < 1) throw BasisError("array layout needs at least one subsystem");
        SlotLayout l;
        l.scheme_ = Scheme::ArrayI;
        for (int n = 0; n < subsystems; ++n)
            l.slots_.push_back({SlotKind::Emitter, "s" + std::to_string(n + 1), n, Direction::None});
        for (int n = 0; n < subsystems; ++n) {
            l.slots_.push_back({SlotKind::Mode, "a" + std::to_string(2 * n + 1), n, Direction::Odd});
            l.slots_.push_back({SlotKind::Mode, "a" + std::to_string(2 * n + 2), n, Direction::Even});
        }
        l.finish();
        return l;
    }

    /// Two fiber-coupled rings with N emitters each: s1..sN in the left ring,
    /// s(N+1)..s(2N) in the right ring; modes a1,a2 (left) and a3,a4 (right).
    static SlotLayout ddi(int emitters_per_cavity) {
        if (emitters_per_cavity < 1) throw BasisError("ddi layout needs at least one emitter per cavity");
        SlotLayout l;
        l.scheme_ = Scheme::DdiII;
        const int n = emitters_per_cavity;
        for (int k = 0; k < 2 * n; ++k)
            l.slots_.push_back({SlotKind::Emitter, "s" + std::to_string(k + 1), k / n, Direction::None});
        l.slots_.push_back({SlotKind::Mode, "a1", 0, Direction::Odd});
        l.slots_.push_back({SlotKind::Mode, "a2", 0, Direction::Even});
        l.slots_.push_back({SlotKind::Mode, "a3", 1, Direction::Odd});
        l.slots_.push_back({SlotKind::Mode, "a4", 1, Direction::Even});
        l.finish();
        return l;
    }

    /// Unstructured layout, used for partial traces and enumeration checks.
    static SlotLayout generic(int emitters, int modes) {
        if (emitters < 0 || modes < 0) throw BasisError("negative slot count");
        SlotLayout l;
        l.scheme_ = Scheme::Generic;
        for (int k = 0; k < emitters; ++k)
            l.slots_.push_back({SlotKind::Emitter, "s" + std::to_string(k + 1), 0, Direction::None});
        for (int k = 0; k < modes; ++k)
            l.slots_.push_back({SlotKind::Mode, "a" + std::to_string(k + 1), 0, Direction::None});
        l.finish();
        return l;
    }

    /// Layout restricted to `keep` (indices into this layout). Emitters stay
    /// ahead of modes; relative order is preserved.
    SlotLayout subset(const std::vector<std::size_t>& keep) const {
        std::vector<std::size_t> sorted = keep;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw BasisError("duplicate slot in subset");
        SlotLayout l;
        l.scheme_ = Scheme::Generic;
        for (std::size_t i : sorted) {
            if (i >= slots_.size()) throw BasisError("slot index out of range");
            l.slots_.push_back(slots_[i]);
        }
        l.finish();
        return l;
    }

    Scheme scheme() const noexcept { return scheme_; }
    std::size_t size() const noexcept { return slots_.size(); }
    std::size_t emitter_count() const noexcept { return emitters_; }
    std::size_t mode_count() const noexcept { return slots_.size() - emitters_; }
    const Slot& slot(std::size_t i) const { return slots_.at(i); }
    const std::vector<Slot>& slots() const noexcept { return slots_; }
    bool is_emitter(std::size_t i) const { return slots_.at(i).kind == SlotKind::Emitter; }

    std::optional<std::size_t> find(const std::string& label) const {
        for (std::size_t i = 0; i < slots_.size(); ++i)
            if (slots_[i].label == label) return i;
        return std::nullopt;
    }

    std::size_t require(const std::string& label) const {
        auto i = find(label);
        if (!i) throw BasisError("unknown slot '" + label + "'");
        return *i;
    }

    /// Number of cavities (scheme I subsystems / scheme II rings).
    int cavity_count() const {
        int c = 0;
        for (const auto& s : slots_) c = std::max(c, s.cavity + 1);
        return c;
    }

    bool operator==(const SlotLayout& o) const { return scheme_ == o.scheme_ && slots_ == o.slots_; }

private:
    void finish() {
        emitters_ = 0;
        bool seen_mode = false;
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            for (std::size_t j = 0; j < i; ++j)
                if (slots_[j].label == slots_[i].label) throw BasisError("duplicate slot label " + slots_[i].label);
            if (slots_[i].kind == SlotKind::Emitter) {
                if (seen_mode) throw BasisError("emitter slots must precede mode slots");
                ++emitters_;
            } else {
                seen_mode = true;
            }
        }
    }

    Scheme scheme_ = Scheme::Generic;
    std::vector<Slot> slots_;
    std::size_t emitters_ = 0;
};

/// One configuration: occupation per slot in layout order (emitters hold 0/1).
struct BasisState {
    std::vector<int> occupations;

    int excitation() const { return std::accumulate(occupations.begin(), occupations.end(), 0); }
    bool operator==(const BasisState&) const = default;
};

struct BasisStateHash {
    std::size_t operator()(const BasisState& s) const noexcept {
        std::uint64_t h = 1469598103934665603ull;
        for (int v : s.occupations) {
            h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull;
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

/// All configurations of exactly M excitations over a layout.
class ExcitationBasis {
public:
    ExcitationBasis() = default;

    ExcitationBasis(SlotLayout layout, int excitation) : layout_(std::move(layout)), excitation_(excitation) {
        if (excitation < 0) throw BasisError("negative excitation number");
        BasisState cur{std::vector<int>(layout_.size(), 0)};
        enumerate(0, excitation, cur);
        index_.reserve(states_.size());
        for (std::size_t i = 0; i < states_.size(); ++i) index_.emplace(states_[i], i);
    }

    const SlotLayout& layout() const noexcept { return layout_; }
    int excitation() const noexcept { return excitation_; }
    std::size_t size() const noexcept { return states_.size(); }
    const std::vector<BasisState>& states() const noexcept { return states_; }
    const BasisState& state_at(std::size_t i) const { return states_.at(i); }

    bool contains(const BasisState& s) const { return index_.count(s) != 0; }

    std::size_t index_of(const BasisState& s) const {
        if (s.occupations.size() != layout_.size()) throw BasisError("state does not fit the layout");
        if (s.excitation() != excitation_)
            throw BasisError("state carries " + std::to_string(s.excitation()) + " excitations, basis holds " +
                             std::to_string(excitation_));
        auto it = index_.find(s);
        if (it == index_.end()) throw BasisError("state not in basis (emitter occupation above 1?)");
        return it->second;
    }

private:
    void enumerate(std::size_t slot, int remaining, BasisState& cur) {
        if (slot == layout_.size()) {
            if (remaining == 0) states_.push_back(cur);
            return;
        }
        const int cap = layout_.is_emitter(slot) ? std::min(1, remaining) : remaining;
        for (int v = cap; v >= 0; --v) {
            cur.occupations[slot] = v;
            enumerate(slot + 1, remaining - v, cur);
        }
        cur.occupations[slot] = 0;
    }

    SlotLayout layout_;
    int excitation_ = 0;
    std::vector<BasisState> states_;
    std::unordered_map<BasisState, std::size_t, BasisStateHash> index_;
};

inline ExcitationBasis enumerate_basis(const SlotLayout& layout, int excitation) {
    return ExcitationBasis(layout, excitation);
}

/// Direct sum of sectors 0..M; full-space index = offset(m) + sector index.
class SectorSpace {
public:
    SectorSpace(SlotLayout layout, int max_excitation) : layout_(std::move(layout)) {
        if (max_excitation < 0) throw BasisError("negative excitation number");
        std::size_t off = 0;
        for (int m = 0; m <= max_excitation; ++m) {
            offsets_.push_back(off);
            sectors_.emplace_back(layout_, m);
            off += sectors_.back().size();
        }
        dim_ = off;
    }

    const SlotLayout& layout() const noexcept { return layout_; }
    int max_excitation() const noexcept { return static_cast<int>(sectors_.size()) - 1; }
    std::size_t dimension() const noexcept { return dim_; }
    const ExcitationBasis& sector(int m) const { return sectors_.at(static_cast<std::size_t>(m)); }
    std::size_t offset(int m) const { return offsets_.at(static_cast<std::size_t>(m)); }

    std::size_t index_of(const BasisState& s) const {
        const int m = s.excitation();
        if (m < 0 || m > max_excitation()) throw BasisError("state excitation outside the truncated space");
        return offset(m) + sector(m).index_of(s);
    }

    const BasisState& state_at(std::size_t full) const {
        return sector(sector_of(full)).state_at(full - offset(sector_of(full)));
    }

    int sector_of(std::size_t full) const {
        if (full >= dim_) throw BasisError("full-space index out of range");
        int m = max_excitation();
        while (offsets_[static_cast<std::size_t>(m)] > full) --m;
        return m;
    }

    std::size_t vacuum_index() const noexcept { return 0; }

    bool operator==(const SectorSpace& o) const {
        return layout_ == o.layout_ && max_excitation() == o.max_excitation();
    }

private:
    SlotLayout layout_;
    std::vector<ExcitationBasis> sectors_;
    std::vector<std::size_t> offsets_;
    std::size_t dim_ = 0;
};

using SpacePtr = std::shared_ptr<const SectorSpace>;

inline SpacePtr make_space(const SlotLayout& layout, int max_excitation) {
    return std::make_shared<const SectorSpace>(layout, max_excitation);
}

struct MatrixEntry {
    std::size_t row;  // index in the upper (M+1) basis
    std::size_t col;  // index in the lower (M) basis
    double amplitude;
};

/// Matrix elements of the creation operator on `slot` from sector M to M+1:
/// sqrt(n+1) on modes, 1 on a ground-state emitter, nothing on an excited one.
inline std::vector<MatrixEntry> raising_matrix_element(const ExcitationBasis& lower, const ExcitationBasis& upper,
                                                      std::size_t slot) {
    if (!(lower.layout() == upper.layout())) throw BasisError("raising operator between different layouts");
    if (upper.excitation() != lower.excitation() + 1) throw BasisError("sectors must differ by one excitation");
    if (slot >= lower.layout().size()) throw BasisError("slot index out of range");
    const bool emitter = lower.layout().is_emitter(slot);
    std::vector<MatrixEntry> out;
    for (std::size_t col = 0; col < lower.size(); ++col) {
        BasisState s = lower.state_at(col);
        const int n = s.occupations[slot];
        if (emitter && n >= 1) continue;
        s.occupations[slot] = n + 1;
        out.push_back({upper.index_of(s), col, emitter ? 1.0 : std::sqrt(static_cast<double>(n + 1))});
    }
    return out;
}

/// Creation operator on the full truncated space (its adjoint is the lowering operator).
inline SparseCMatrix creation_operator(const SectorSpace& space, std::size_t slot) {
    std::vector<CTriplet> trips;
    for (int m = 0; m < space.max_excitation(); ++m)
        for (const auto& e : raising_matrix_element(space.sector(m), space.sector(m + 1), slot))
            trips.emplace_back(static_cast<int>(space.offset(m + 1) + e.row), static_cast<int>(space.offset(m) + e.col),
                               Complex(e.amplitude, 0.0));
    const auto d = static_cast<Eigen::Index>(space.dimension());
    SparseCMatrix op(d, d);
    op.setFromTriplets(trips.begin(), trips.end());
    return op;
}

inline SparseCMatrix annihilation_operator(const SectorSpace& space, std::size_t slot) {
    return SparseCMatrix(creation_operator(space, slot).adjoint());
}

/// Single-excitation listing grouped by cavity: for each cavity its emitters,
/// then its modes. For the two-subsystem array this is s1, a1, a2, s2, a3, a4.
/// Returns canonical indices in listing order.
inline std::vector<std::size_t> cavity_grouped_order(const ExcitationBasis& basis) {
    if (basis.excitation() != 1) throw BasisError("cavity-grouped listing is defined for one excitation");
    const auto& layout = basis.layout();
    std::vector<std::size_t> order;
    for (int c = 0; c < layout.cavity_count(); ++c)
        for (SlotKind kind : {SlotKind::Emitter, SlotKind::Mode})
            for (std::size_t i = 0; i < layout.size(); ++i)
                if (layout.slot(i).cavity == c && layout.slot(i).kind == kind) {
                    BasisState s{std::vector<int>(layout.size(), 0)};
                    s.occupations[i] = 1;
                    order.push_back(basis.index_of(s));
                }
    return order;
}

/// Two-excitation listing: emitter pairs, emitter x mode, doubly occupied
/// modes, then mode pairs, each block in ascending slot order. For the
/// two-emitters-per-ring layout this is the 32-term amplitude listing
/// s1s2, s1s3, ..., s3s4, s1a1, ..., s4a4, a1a1, ..., a4a4, a1a2, ..., a3a4.
inline std::vector<std::size_t> pairwise_listing_order(const ExcitationBasis& basis) {
    if (basis.excitation() != 2) throw BasisError("pairwise listing is defined for two excitations");
    const auto& layout = basis.layout();
    const std::size_t ne = layout.emitter_count();
    const std::size_t n = layout.size();
    std::vector<std::size_t> order;
    auto push = [&](std::size_t i, std::size_t j) {
        BasisState s{std::vector<int>(n, 0)};
        s.occupations[i] += 1;
        s.occupations[j] += 1;
        order.push_back(basis.index_of(s));
    };
    for (std::size_t i = 0; i < ne; ++i)
        for (std::size_t j = i + 1; j < ne; ++j) push(i, j);
    for (std::size_t i = 0; i < ne; ++i)
        for (std::size_t j = ne; j < n; ++j) push(i, j);
    for (std::size_t j = ne; j < n; ++j) push(j, j);
    for (std::size_t i = ne; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) push(i, j);
    return order;
}

}  // namespace noonsim
