#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pomcheck/canonical.hpp"
#include "pomcheck/errors.hpp"
#include "pomcheck/family.hpp"
#include "pomcheck/ideals.hpp"
#include "pomcheck/pomset.hpp"

namespace pomcheck {

/// Result of the inter-participant closure.  `pomsets` holds the
/// well-formed recombinations, deduplicated up to isomorphism and
/// sorted by canonical form.  `matchings_tried` counts the complete
/// candidate matchings that reached the well-formedness test (cycle
/// pruning happens earlier), `matchings_kept` those that passed it.
struct ClosureResult {
    std::vector<Pomset> pomsets;
    std::uint64_t matchings_tried = 0;
    std::uint64_t matchings_kept = 0;
};

namespace detail {

struct ClosureBuild {
    std::vector<Event> events;
    std::vector<Pomset::Mask> local_succ;          // per event, within-participant order
    std::vector<std::vector<std::size_t>> class_outputs, class_inputs;
    std::size_t bound;
    std::uint64_t attempts = 0;
    ClosureResult result;
    std::map<std::string, bool> seen;              // canonical key -> kept
    std::vector<std::pair<std::size_t, std::size_t>> match_edges;

    bool reaches(std::size_t from, std::size_t to,
                 const std::vector<Pomset::Mask>& succ) const {
        // BFS over local order plus currently chosen match edges
        Pomset::Mask frontier = Pomset::bit(from);
        Pomset::Mask seen_mask = frontier;
        while (frontier) {
            Pomset::Mask next = 0;
            Pomset::Mask rest = frontier;
            while (rest) {
                std::size_t v = std::countr_zero(rest);
                rest &= rest - 1;
                next |= succ[v];
                for (const auto& [o, i] : match_edges)
                    if (o == v) next |= Pomset::bit(i);
            }
            next &= ~seen_mask;
            if (next & Pomset::bit(to)) return true;
            seen_mask |= next;
            frontier = next;
        }
        return false;
    }

    void leaf() {
        ++result.matchings_tried;
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        for (std::size_t v = 0; v < events.size(); ++v) {
            Pomset::Mask rest = local_succ[v];
            while (rest) {
                std::size_t w = std::countr_zero(rest);
                rest &= rest - 1;
                edges.emplace_back(v, w);
            }
        }
        edges.insert(edges.end(), match_edges.begin(), match_edges.end());
        Pomset candidate = Pomset::from_edges(events, edges);
        if (!is_well_formed(candidate)) return;
        ++result.matchings_kept;
        std::string key = canonical_key(candidate);
        if (seen.emplace(std::move(key), true).second)
            result.pomsets.push_back(std::move(candidate));
    }

    std::vector<std::vector<bool>> used;  // per class, per output

    void assign(std::size_t cls, std::size_t input_pos) {
        if (cls == class_inputs.size()) {
            leaf();
            return;
        }
        if (input_pos == class_inputs[cls].size()) {
            assign(cls + 1, 0);
            return;
        }
        std::size_t in = class_inputs[cls][input_pos];
        for (std::size_t k = 0; k < class_outputs[cls].size(); ++k) {
            if (used[cls][k]) continue;
            std::size_t out = class_outputs[cls][k];
            if (++attempts > bound)
                throw BoundExceededError("closure matching enumeration exceeded bound of " +
                                         std::to_string(bound));
            if (reaches(in, out, local_succ)) continue;  // edge would close a cycle
            match_edges.emplace_back(out, in);
            used[cls][k] = true;
            assign(cls, input_pos + 1);
            used[cls][k] = false;
            match_edges.pop_back();
        }
    }
};

} // namespace detail

/// The inter-participant closure of per-participant local pomsets: all
/// well-formed pomsets on the disjoint union of the local events whose
/// order adds, per (channel, message) class, an injective assignment of
/// matching inputs to outputs.  Inputs must all be matched (condition 2
/// of well-formedness), outputs may stay unmatched.
///
/// Each local pomset may only contain events of its own participant;
/// callers usually pass projections.
inline ClosureResult inter_participant_closure(const std::map<Participant, Pomset>& locals,
                                               std::size_t bound) {
    detail::ClosureBuild build;
    build.bound = bound;

    for (const auto& [a, p] : locals) {
        for (std::size_t i = 0; i < p.size(); ++i)
            if (p.label(i).subject() != a)
                throw SubjectMismatchError("local pomset for '" + a.name +
                                           "' contains event '" + p.event(i).id +
                                           "' with subject '" + p.label(i).subject().name + "'");
    }

    std::size_t base = 0;
    for (const auto& [a, p] : locals) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            Event e = p.event(i);
            e.id = a.name + ":" + e.id;
            build.events.push_back(std::move(e));
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            Pomset::Mask shifted = 0;
            Pomset::Mask rest = p.succ_of(i);
            while (rest) {
                std::size_t j = std::countr_zero(rest);
                rest &= rest - 1;
                shifted |= Pomset::bit(base + j);
            }
            build.local_succ.push_back(shifted);
        }
        base += p.size();
    }
    if (build.events.size() > Pomset::max_events)
        throw BoundExceededError("closure union exceeds " +
                                 std::to_string(Pomset::max_events) + " events");

    // group outputs and inputs by (channel, message)
    std::map<CommLabel, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> classes;
    for (std::size_t v = 0; v < build.events.size(); ++v) {
        const CommLabel& l = build.events[v].label;
        CommLabel cls = l.is_output() ? l : l.counterpart();
        if (l.is_output())
            classes[cls].first.push_back(v);
        else
            classes[cls].second.push_back(v);
    }
    for (const auto& [l, c] : classes) {
        if (c.second.empty()) continue;
        if (c.second.size() > c.first.size()) return build.result;  // some input can never match
        build.class_outputs.push_back(c.first);
        build.class_inputs.push_back(c.second);
    }

    for (const auto& outs : build.class_outputs)
        build.used.emplace_back(outs.size(), false);

    build.assign(0, 0);
    std::sort(build.result.pomsets.begin(), build.result.pomsets.end(),
              [](const Pomset& x, const Pomset& y) {
                  return canonical_key(x) < canonical_key(y);
              });
    return build.result;
}

/// Witness of a failed pomset-level closure condition: the tuple of
/// member names (one per participant, in participant order), and the
/// closure pomset no member dominates.
struct ClosureWitness {
    std::vector<std::string> tuple;
    Pomset pomset;
};

struct PomsetClosureVerdict {
    bool holds = true;
    std::optional<ClosureWitness> witness;
    std::uint64_t branch_points = 0;   // branching inside permissiveness checks
    std::uint64_t closures_built = 0;
    std::uint64_t tuples_checked = 0;

    explicit operator bool() const { return holds; }
};

namespace detail {

inline std::vector<CommLabel> label_multiset(const Pomset& p) {
    std::vector<CommLabel> out;
    for (const Event& e : p.events()) out.push_back(e.label);
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace detail

/// Closure condition CCP2: for every tuple of members (one choice per
/// participant, repetition allowed) and every pomset in the closure of
/// the tuple's projections, some member must be at least as permissive.
inline PomsetClosureVerdict check_ccp2(const PomsetFamily& family, std::size_t bound) {
    PomsetClosureVerdict verdict;
    if (family.size() == 0 || family.participants.empty()) return verdict;

    std::vector<std::vector<CommLabel>> member_labels;
    for (const NamedPomset& np : family.pomsets)
        member_labels.push_back(detail::label_multiset(np.pomset));

    const std::size_t n_participants = family.participants.size();
    std::vector<std::size_t> pick(n_participants, 0);
    for (;;) {
        if (++verdict.tuples_checked > bound)
            throw BoundExceededError("tuple enumeration exceeded bound of " +
                                     std::to_string(bound));
        std::map<Participant, Pomset> locals;
        for (std::size_t i = 0; i < n_participants; ++i)
            locals.emplace(family.participants[i],
                           project(family.at(pick[i]), family.participants[i]));
        ClosureResult closure = inter_participant_closure(locals, bound);
        verdict.closures_built += closure.pomsets.size();
        for (const Pomset& candidate : closure.pomsets) {
            std::vector<CommLabel> labels = detail::label_multiset(candidate);
            bool dominated = false;
            for (std::size_t m = 0; m < family.size() && !dominated; ++m) {
                if (member_labels[m] != labels) continue;
                PermissivenessStats stats;
                dominated = less_permissive(candidate, family.at(m), &stats);
                verdict.branch_points += stats.branch_points;
            }
            if (!dominated) {
                verdict.holds = false;
                ClosureWitness w;
                for (std::size_t i = 0; i < n_participants; ++i)
                    w.tuple.push_back(family.pomsets[pick[i]].name);
                w.pomset = candidate;
                verdict.witness = std::move(w);
                return verdict;
            }
        }
        std::size_t i = pick.size();
        while (i > 0 && ++pick[i - 1] == family.size()) pick[--i] = 0;
        if (i == 0) break;
    }
    return verdict;
}

/// Closure condition CCP3: like CCP2 but over prefixes.  Tuple slots
/// range over order ideals of member projections (the projection of a
/// member's prefix is exactly an ideal of the member's projection), and
/// domination may use any prefix of a member.
inline PomsetClosureVerdict check_ccp3(const PomsetFamily& family, std::size_t bound) {
    PomsetClosureVerdict verdict;
    if (family.size() == 0 || family.participants.empty()) return verdict;

    // candidate local pomsets per participant: ideals of each member's
    // projection, deduplicated up to isomorphism
    const std::size_t n_participants = family.participants.size();
    std::vector<std::vector<std::pair<std::string, Pomset>>> slot_options(n_participants);
    for (std::size_t i = 0; i < n_participants; ++i) {
        std::map<std::string, bool> seen;
        for (const NamedPomset& np : family.pomsets) {
            Pomset proj = project(np.pomset, family.participants[i]);
            for (Pomset::Mask m : ideal_masks(proj, bound)) {
                Pomset local = proj.restrict_to(m);
                std::string key = canonical_key(local);
                if (!seen.emplace(key, true).second) continue;
                slot_options[i].emplace_back(
                    np.name + "[" + std::to_string(local.size()) + "]", std::move(local));
            }
        }
    }

    // prefixes of members available as dominators, grouped by label multiset
    std::vector<std::vector<std::pair<std::vector<CommLabel>, Pomset>>> member_prefixes;
    for (const NamedPomset& np : family.pomsets) {
        std::vector<std::pair<std::vector<CommLabel>, Pomset>> ps;
        for (const Pomset& pre : prefixes(np.pomset, bound))
            ps.emplace_back(detail::label_multiset(pre), pre);
        member_prefixes.push_back(std::move(ps));
    }

    std::vector<std::size_t> pick(n_participants, 0);
    for (;;) {
        if (++verdict.tuples_checked > bound)
            throw BoundExceededError("prefix-tuple enumeration exceeded bound of " +
                                     std::to_string(bound));
        std::map<Participant, Pomset> locals;
        for (std::size_t i = 0; i < n_participants; ++i)
            locals.emplace(family.participants[i], slot_options[i][pick[i]].second);
        ClosureResult closure = inter_participant_closure(locals, bound);
        verdict.closures_built += closure.pomsets.size();
        for (const Pomset& candidate : closure.pomsets) {
            std::vector<CommLabel> labels = detail::label_multiset(candidate);
            bool dominated = false;
            for (const auto& prefixes_of_member : member_prefixes) {
                for (const auto& [plabels, pre] : prefixes_of_member) {
                    if (plabels != labels) continue;
                    PermissivenessStats stats;
                    bool ok = less_permissive(candidate, pre, &stats);
                    verdict.branch_points += stats.branch_points;
                    if (ok) {
                        dominated = true;
                        break;
                    }
                }
                if (dominated) break;
            }
            if (!dominated) {
                verdict.holds = false;
                ClosureWitness w;
                for (std::size_t i = 0; i < n_participants; ++i)
                    w.tuple.push_back(slot_options[i][pick[i]].first);
                w.pomset = candidate;
                verdict.witness = std::move(w);
                return verdict;
            }
        }
        std::size_t i = pick.size();
        while (i > 0 && ++pick[i - 1] == slot_options[i - 1].size()) pick[--i] = 0;
        if (i == 0) break;
    }
    return verdict;
}

} // namespace pomcheck
