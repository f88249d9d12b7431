#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pomcheck/errors.hpp"
#include "pomcheck/family.hpp"
#include "pomcheck/pomset.hpp"

namespace pomcheck {

/// Evidence that a participant cannot locally detect termination: a
/// label-preserving injection from its projection in one member into
/// its projection in another, such that the union of both orders is
/// still a partial order, every minimum of the larger projection is hit
/// by a minimum of the smaller one, and some minimal leftover event is
/// an input the participant would keep waiting for.
struct TerminationWitness {
    Participant participant;
    std::string shorter_member, longer_member;
    std::vector<std::pair<EventId, EventId>> injection;
    CommLabel blocking_label;
};

struct PomsetTerminationVerdict {
    bool holds = true;
    std::optional<TerminationWitness> witness;
    std::uint64_t injections_tried = 0;

    explicit operator bool() const { return holds; }
};

namespace detail {

struct InjectionSearch {
    const Pomset& small;   // projection of r
    const Pomset& big;     // projection of r'
    std::size_t bound;
    std::uint64_t* tried;
    std::vector<int> phi;  // event of small -> event of big
    std::vector<bool> used;
    std::optional<std::pair<std::vector<std::pair<std::size_t, std::size_t>>, CommLabel>> found;

    InjectionSearch(const Pomset& s, const Pomset& b, std::size_t bnd, std::uint64_t* t)
        : small(s), big(b), bound(bnd), tried(t), phi(s.size(), -1), used(b.size(), false) {}

    // the union order phi(<=_small) ∪ <=_big must stay acyclic; adding
    // the pair (a -> fa) is fine unless some already-mapped pair
    // contradicts the big order transitively.  With both source orders
    // transitive, a cycle shows up as a 2-cycle between mapped edges
    // and big edges, checked pairwise.
    bool keeps_partial_order(std::size_t a, std::size_t fa) const {
        for (std::size_t b2 = 0; b2 < small.size(); ++b2) {
            if (phi[b2] < 0 || b2 == a) continue;
            std::size_t fb = static_cast<std::size_t>(phi[b2]);
            if (small.precedes(a, b2) && big.precedes(fb, fa)) return false;
            if (small.precedes(b2, a) && big.precedes(fa, fb)) return false;
        }
        return true;
    }

    bool go(std::size_t a) {
        if (a == small.size()) return check_conditions();
        for (std::size_t b = 0; b < big.size(); ++b) {
            if (used[b] || big.label(b) != small.label(a)) continue;
            if (!keeps_partial_order(a, b)) continue;
            if (++*tried > bound)
                throw BoundExceededError("termination injection search exceeded bound of " +
                                         std::to_string(bound));
            phi[a] = static_cast<int>(b);
            used[b] = true;
            if (go(a + 1)) return true;
            phi[a] = -1;
            used[b] = false;
        }
        return false;
    }

    bool check_conditions() {
        const std::size_t n = big.size();
        // union order on big's events: big's own order plus the image
        // of small's order, transitively closed
        std::vector<Pomset::Mask> succ(n, 0);
        for (std::size_t i = 0; i < n; ++i) succ[i] = big.succ_of(i);
        for (std::size_t a = 0; a < small.size(); ++a)
            for (std::size_t b = 0; b < small.size(); ++b)
                if (a != b && small.precedes(a, b))
                    succ[static_cast<std::size_t>(phi[a])] |=
                        Pomset::bit(static_cast<std::size_t>(phi[b]));
        // transitive closure; a cycle disqualifies the injection
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i)
                if (succ[i] & Pomset::bit(k)) succ[i] |= succ[k];
        for (std::size_t i = 0; i < n; ++i)
            if (succ[i] & Pomset::bit(i)) return false;

        std::vector<Pomset::Mask> pred(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            Pomset::Mask rest = succ[i];
            while (rest) {
                std::size_t j = std::countr_zero(rest);
                rest &= rest - 1;
                pred[j] |= Pomset::bit(i);
            }
        }

        // minima of big's events under the union order must all be
        // images of minima of small under small's own order
        Pomset::Mask image = 0;
        for (int b : phi) image |= Pomset::bit(static_cast<std::size_t>(b));
        Pomset::Mask small_minima_image = 0;
        for (std::size_t a = 0; a < small.size(); ++a)
            if (small.pred_of(a) == 0)
                small_minima_image |= Pomset::bit(static_cast<std::size_t>(phi[a]));
        for (std::size_t i = 0; i < n; ++i) {
            if (pred[i] == 0 && (small_minima_image & Pomset::bit(i)) == 0) return false;
        }

        // a minimal event of the leftover must be an input
        Pomset::Mask residual = big.all_mask() & ~image;
        std::optional<std::size_t> blocking;
        Pomset::Mask rest = residual;
        while (rest) {
            std::size_t i = std::countr_zero(rest);
            rest &= rest - 1;
            if ((pred[i] & residual) != 0) continue;  // not minimal within the residual
            if (big.label(i).is_input()) {
                if (!blocking || big.label(i) < big.label(*blocking)) blocking = i;
            }
        }
        if (!blocking) return false;

        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t a = 0; a < small.size(); ++a)
            pairs.emplace_back(a, static_cast<std::size_t>(phi[a]));
        found = {std::move(pairs), big.label(*blocking)};
        return true;
    }
};

} // namespace detail

/// Searches all member pairs (including a member with itself) for an
/// injection witnessing that `a` is termination-unaware.
inline std::optional<TerminationWitness> termination_unaware(const PomsetFamily& family,
                                                             const Participant& a,
                                                             std::size_t bound,
                                                             std::uint64_t* injections_tried = nullptr) {
    std::uint64_t local_count = 0;
    std::uint64_t* counter = injections_tried ? injections_tried : &local_count;
    std::vector<Pomset> projections;
    for (const NamedPomset& np : family.pomsets) projections.push_back(project(np.pomset, a));

    for (std::size_t r = 0; r < family.size(); ++r) {
        for (std::size_t r2 = 0; r2 < family.size(); ++r2) {
            const Pomset& small = projections[r];
            const Pomset& big = projections[r2];
            if (small.size() > big.size()) continue;
            // label counts must embed
            std::map<CommLabel, int> need;
            for (const Event& e : small.events()) ++need[e.label];
            for (const Event& e : big.events()) --need[e.label];
            bool embeddable = true;
            for (const auto& [l, c] : need)
                if (c > 0) embeddable = false;
            if (!embeddable) continue;

            detail::InjectionSearch search(small, big, bound, counter);
            if (search.go(0)) {
                TerminationWitness w;
                w.participant = a;
                w.shorter_member = family.pomsets[r].name;
                w.longer_member = family.pomsets[r2].name;
                for (auto [x, y] : search.found->first)
                    w.injection.emplace_back(small.event(x).id, big.event(y).id);
                w.blocking_label = search.found->second;
                return w;
            }
        }
    }
    return std::nullopt;
}

/// P'-termination on pomsets: no participant of P' is termination-unaware.
inline PomsetTerminationVerdict check_pomset_terminating(const PomsetFamily& family,
                                                         const std::vector<Participant>& pprime,
                                                         std::size_t bound) {
    PomsetTerminationVerdict verdict;
    for (const Participant& a : pprime) {
        auto w = termination_unaware(family, a, bound, &verdict.injections_tried);
        if (w) {
            verdict.holds = false;
            verdict.witness = std::move(w);
            return verdict;
        }
    }
    return verdict;
}

} // namespace pomcheck
