#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pomcheck/errors.hpp"
#include "pomcheck/label.hpp"

namespace pomcheck {

using EventId = std::string;

struct Event {
    EventId id;
    CommLabel label;
};

/// A finite labelled partial order of communication events.
///
/// The order is stored as bitmask rows of the strict transitive closure
/// plus the derived immediate-successor (Hasse) relation; both are
/// computed once at construction and never mutated, so values are safe
/// to share across threads.  Event identity is positional; the string
/// ids are kept for reporting and serialization.  Equality of pomsets
/// is label-preserving order isomorphism, decided in canonical.hpp.
class Pomset {
public:
    using Mask = std::uint64_t;
    static constexpr std::size_t max_events = 64;

    Pomset() = default;

    /// Validates raw events and order edges and builds the pomset.
    /// Throws DuplicateIdError, DanglingEdgeError or CycleError.
    static Pomset build(std::vector<Event> events,
                        const std::vector<std::pair<EventId, EventId>>& order_edges) {
        if (events.size() > max_events)
            throw BoundExceededError("pomset exceeds " + std::to_string(max_events) + " events");
        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < events.size(); ++i) {
            auto [it, fresh] = index.emplace(events[i].id, i);
            if (!fresh) throw DuplicateIdError("duplicate event id '" + events[i].id + "'");
        }
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        edges.reserve(order_edges.size());
        for (const auto& [from, to] : order_edges) {
            auto a = index.find(from);
            auto b = index.find(to);
            if (a == index.end()) throw DanglingEdgeError("order edge names unknown event '" + from + "'");
            if (b == index.end()) throw DanglingEdgeError("order edge names unknown event '" + to + "'");
            edges.emplace_back(a->second, b->second);
        }
        return from_edges(std::move(events), edges);
    }

    /// Builds from already-indexed edges.  Same validation as build()
    /// minus id resolution.
    static Pomset from_edges(std::vector<Event> events,
                             const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
        Pomset p;
        p.events_ = std::move(events);
        const std::size_t n = p.events_.size();
        if (n > max_events)
            throw BoundExceededError("pomset exceeds " + std::to_string(max_events) + " events");

        std::vector<Mask> direct(n, 0);
        for (auto [a, b] : edges) {
            if (a == b) throw CycleError("self-edge on event '" + p.events_[a].id + "'");
            direct[a] |= bit(b);
        }

        // Topological order; a leftover vertex means a cycle.
        std::vector<int> indeg(n, 0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (direct[i] & bit(j)) ++indeg[j];
        std::vector<std::size_t> topo;
        topo.reserve(n);
        std::vector<std::size_t> queue;
        for (std::size_t i = 0; i < n; ++i)
            if (indeg[i] == 0) queue.push_back(i);
        while (!queue.empty()) {
            std::size_t v = queue.back();
            queue.pop_back();
            topo.push_back(v);
            for (std::size_t j = 0; j < n; ++j)
                if (direct[v] & bit(j))
                    if (--indeg[j] == 0) queue.push_back(j);
        }
        if (topo.size() != n) {
            std::string cyc;
            for (std::size_t i = 0; i < n; ++i)
                if (indeg[i] > 0) cyc += (cyc.empty() ? "" : ", ") + p.events_[i].id;
            throw CycleError("order edges induce a cycle through {" + cyc + "}");
        }

        p.succ_.assign(n, 0);
        for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
            std::size_t v = *it;
            Mask s = direct[v];
            Mask rest = direct[v];
            while (rest) {
                std::size_t j = std::countr_zero(rest);
                rest &= rest - 1;
                s |= p.succ_[j];
            }
            p.succ_[v] = s;
        }
        p.finish_derived();
        p.given_edges_ = edges;
        return p;
    }

    std::size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }
    const std::vector<Event>& events() const { return events_; }
    const Event& event(std::size_t i) const { return events_[i]; }
    const CommLabel& label(std::size_t i) const { return events_[i].label; }

    std::optional<std::size_t> index_of(std::string_view id) const {
        for (std::size_t i = 0; i < events_.size(); ++i)
            if (events_[i].id == id) return i;
        return std::nullopt;
    }

    /// Strict order: event i precedes event j.
    bool precedes(std::size_t i, std::size_t j) const { return (succ_[i] & bit(j)) != 0; }
    bool ordered(std::size_t i, std::size_t j) const {
        return i == j || precedes(i, j) || precedes(j, i);
    }

    Mask succ_of(std::size_t i) const { return succ_[i]; }
    Mask pred_of(std::size_t i) const { return pred_[i]; }
    Mask immediate_succ_of(std::size_t i) const { return isucc_[i]; }
    Mask immediate_pred_of(std::size_t i) const { return ipred_[i]; }

    Mask all_mask() const {
        return events_.size() == max_events ? ~Mask{0} : (bit(events_.size()) - 1);
    }

    /// Events of `within` that have no strict predecessor in `within`.
    Mask minimal_events(Mask within) const {
        Mask result = 0;
        Mask rest = within;
        while (rest) {
            std::size_t i = std::countr_zero(rest);
            rest &= rest - 1;
            if ((pred_[i] & within) == 0) result |= bit(i);
        }
        return result;
    }

    /// Restriction to an arbitrary event subset; the order is the
    /// transitive closure of this pomset restricted to the kept events.
    Pomset restrict_to(Mask keep) const {
        Pomset out;
        std::vector<std::size_t> old_index;
        for (std::size_t i = 0; i < events_.size(); ++i) {
            if (keep & bit(i)) {
                old_index.push_back(i);
                out.events_.push_back(events_[i]);
            }
        }
        const std::size_t m = old_index.size();
        out.succ_.assign(m, 0);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b)
                if (a != b && precedes(old_index[a], old_index[b]))
                    out.succ_[a] |= bit(b);
        out.finish_derived();
        out.given_edges_ = out.hasse_index_pairs();
        return out;
    }

    /// The edges the pomset was built from (indices into events()).
    const std::vector<std::pair<std::size_t, std::size_t>>& given_edges() const {
        return given_edges_;
    }

    std::vector<std::pair<std::size_t, std::size_t>> hasse_index_pairs() const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (std::size_t i = 0; i < events_.size(); ++i) {
            Mask rest = isucc_[i];
            while (rest) {
                std::size_t j = std::countr_zero(rest);
                rest &= rest - 1;
                out.emplace_back(i, j);
            }
        }
        return out;
    }

    static Mask bit(std::size_t i) { return Mask{1} << i; }

private:
    void finish_derived() {
        const std::size_t n = events_.size();
        pred_.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            Mask rest = succ_[i];
            while (rest) {
                std::size_t j = std::countr_zero(rest);
                rest &= rest - 1;
                pred_[j] |= bit(i);
            }
        }
        // Hasse: j is an immediate successor of i when no event sits
        // strictly between them.
        isucc_.assign(n, 0);
        ipred_.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            Mask between = 0;
            Mask rest = succ_[i];
            while (rest) {
                std::size_t k = std::countr_zero(rest);
                rest &= rest - 1;
                between |= succ_[k];
            }
            isucc_[i] = succ_[i] & ~between;
        }
        for (std::size_t i = 0; i < n; ++i) {
            Mask rest = isucc_[i];
            while (rest) {
                std::size_t j = std::countr_zero(rest);
                rest &= rest - 1;
                ipred_[j] |= bit(i);
            }
        }
    }

    std::vector<Event> events_;
    std::vector<Mask> succ_, pred_, isucc_, ipred_;
    std::vector<std::pair<std::size_t, std::size_t>> given_edges_;
};

/// Immediate-predecessor pairs (the transitive reduction), by event id.
inline std::vector<std::pair<EventId, EventId>> hasse(const Pomset& r) {
    std::vector<std::pair<EventId, EventId>> out;
    for (auto [i, j] : r.hasse_index_pairs())
        out.emplace_back(r.event(i).id, r.event(j).id);
    return out;
}

/// The unique output->input matching of a pomset, as index pairs.
struct Matching {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;

    std::optional<std::size_t> input_for(std::size_t output) const {
        for (auto [o, i] : pairs)
            if (o == output) return i;
        return std::nullopt;
    }
    std::optional<std::size_t> output_for(std::size_t input) const {
        for (auto [o, i] : pairs)
            if (i == input) return o;
        return std::nullopt;
    }
};

namespace detail {

struct MatchScan {
    Matching matching;
    // first violation discovered, if any
    int violated_item = 0;                 // 1 or 2
    std::vector<std::size_t> witnesses;
};

/// Computes the matching induced by immediate successors and records
/// violations of the two matching conditions instead of throwing.
inline MatchScan scan_matching(const Pomset& r) {
    MatchScan out;
    const std::size_t n = r.size();
    std::vector<int> match_of_input(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const CommLabel& l = r.label(i);
        if (l.is_input()) {
            // exactly one immediate predecessor carrying the matching output
            std::vector<std::size_t> outs;
            Pomset::Mask rest = r.immediate_pred_of(i);
            while (rest) {
                std::size_t j = std::countr_zero(rest);
                rest &= rest - 1;
                if (r.label(j) == l.counterpart()) outs.push_back(j);
            }
            if (outs.size() != 1) {
                if (out.violated_item == 0) {
                    out.violated_item = 2;
                    out.witnesses = {i};
                    out.witnesses.insert(out.witnesses.end(), outs.begin(), outs.end());
                }
                continue;
            }
            match_of_input[i] = static_cast<int>(outs[0]);
        } else {
            // at most one immediate successor carrying the matching input
            std::vector<std::size_t> ins;
            Pomset::Mask rest = r.immediate_succ_of(i);
            while (rest) {
                std::size_t j = std::countr_zero(rest);
                rest &= rest - 1;
                if (r.label(j) == l.counterpart()) ins.push_back(j);
            }
            if (ins.size() > 1 && out.violated_item == 0) {
                out.violated_item = 1;
                out.witnesses = {i};
                out.witnesses.insert(out.witnesses.end(), ins.begin(), ins.end());
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (match_of_input[i] >= 0)
            out.matching.pairs.emplace_back(static_cast<std::size_t>(match_of_input[i]), i);
    std::sort(out.matching.pairs.begin(), out.matching.pairs.end());
    return out;
}

} // namespace detail

/// The output->input matching.  Outputs may stay unmatched; every input
/// must be matched by exactly one output immediate predecessor, and an
/// output may have at most one matching input immediate successor.
/// Throws AmbiguousMatchError otherwise.
inline Matching matching_of(const Pomset& r) {
    auto scan = detail::scan_matching(r);
    if (scan.violated_item != 0) {
        std::string ids;
        for (std::size_t w : scan.witnesses)
            ids += (ids.empty() ? "" : ", ") + r.event(w).id;
        throw AmbiguousMatchError(
            std::string("matching not uniquely determined (condition ") +
            std::to_string(scan.violated_item) + ") at events {" + ids + "}");
    }
    return scan.matching;
}

/// Verdict of the four well-formedness conditions.  `violated_item` is
/// 0 when the pomset is well-formed, otherwise the number of the first
/// failing condition with the offending events.
struct WellFormedness {
    bool ok = true;
    int violated_item = 0;
    std::vector<EventId> witnesses;

    explicit operator bool() const { return ok; }
};

inline WellFormedness well_formedness(const Pomset& r) {
    WellFormedness out;
    auto fail = [&](int item, std::initializer_list<std::size_t> ws) {
        out.ok = false;
        out.violated_item = item;
        for (std::size_t w : ws) out.witnesses.push_back(r.event(w).id);
    };

    auto scan = detail::scan_matching(r);
    if (scan.violated_item != 0) {
        out.ok = false;
        out.violated_item = scan.violated_item;
        for (std::size_t w : scan.witnesses) out.witnesses.push_back(r.event(w).id);
        return out;
    }
    const Matching& m = scan.matching;

    // condition 3: cross-participant immediate pairs must be matches
    for (std::size_t i = 0; i < r.size(); ++i) {
        Pomset::Mask rest = r.immediate_succ_of(i);
        while (rest) {
            std::size_t j = std::countr_zero(rest);
            rest &= rest - 1;
            if (r.label(i).subject() != r.label(j).subject()) {
                auto matched = m.input_for(i);
                if (!(r.label(i).is_output() && matched && *matched == j)) {
                    fail(3, {i, j});
                    return out;
                }
            }
        }
    }

    // condition 4: ordered same-label outputs may not be matched by
    // inputs in the reversed order
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!r.label(i).is_output()) continue;
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (i == j || r.label(i) != r.label(j) || !r.precedes(i, j)) continue;
            auto mi = m.input_for(i);
            auto mj = m.input_for(j);
            if (mi && mj && (*mj == *mi || r.precedes(*mj, *mi))) {
                fail(4, {i, j, *mi, *mj});
                return out;
            }
        }
    }
    return out;
}

inline bool is_well_formed(const Pomset& r) { return well_formedness(r).ok; }

/// True when every output event has a matching input.
inline bool is_complete(const Pomset& r) {
    auto scan = detail::scan_matching(r);
    std::size_t outputs = 0;
    for (std::size_t i = 0; i < r.size(); ++i)
        if (r.label(i).is_output()) ++outputs;
    return scan.violated_item == 0 && scan.matching.pairs.size() == outputs;
}

/// Restriction to the events whose subject is `a`; order is the
/// transitive closure of the original order on those events.
inline Pomset project(const Pomset& r, const Participant& a) {
    Pomset::Mask keep = 0;
    for (std::size_t i = 0; i < r.size(); ++i)
        if (r.label(i).subject() == a) keep |= Pomset::bit(i);
    return r.restrict_to(keep);
}

/// Participants whose events occur in the pomset, sorted.
inline std::vector<Participant> participants_of(const Pomset& r) {
    std::vector<Participant> out;
    for (const Event& e : r.events()) {
        out.push_back(e.label.sender);
        out.push_back(e.label.receiver);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// A message-sequence chart: well-formed, complete, and single-threaded
/// (every participant's projection is a total order).
inline bool is_msc(const Pomset& r) {
    if (!is_well_formed(r) || !is_complete(r)) return false;
    for (const Participant& a : participants_of(r)) {
        std::vector<std::size_t> own;
        for (std::size_t i = 0; i < r.size(); ++i)
            if (r.label(i).subject() == a) own.push_back(i);
        for (std::size_t x = 0; x < own.size(); ++x)
            for (std::size_t y = x + 1; y < own.size(); ++y)
                if (!r.ordered(own[x], own[y])) return false;
    }
    return true;
}

/// Labels carried by at least two mutually unordered events.
inline std::vector<CommLabel> concurrently_repeats(const Pomset& r) {
    std::vector<CommLabel> out;
    for (std::size_t i = 0; i < r.size(); ++i)
        for (std::size_t j = i + 1; j < r.size(); ++j)
            if (r.label(i) == r.label(j) && !r.ordered(i, j))
                out.push_back(r.label(i));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace pomcheck
