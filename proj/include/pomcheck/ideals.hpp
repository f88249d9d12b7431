#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "pomcheck/canonical.hpp"
#include "pomcheck/pomset.hpp"

namespace pomcheck {

/// All order ideals (downward-closed event sets) of a pomset, as event
/// masks, in a fixed enumeration order.  Throws BoundExceededError when
/// more than `bound` ideals exist.
inline std::vector<Pomset::Mask> ideal_masks(const Pomset& p, std::size_t bound) {
    std::vector<std::size_t> topo;
    {
        Pomset::Mask done = 0;
        while (topo.size() < p.size()) {
            for (std::size_t i = 0; i < p.size(); ++i) {
                if ((done & Pomset::bit(i)) == 0 && (p.pred_of(i) & ~done) == 0) {
                    topo.push_back(i);
                    done |= Pomset::bit(i);
                    break;
                }
            }
        }
    }
    std::vector<Pomset::Mask> out;
    // decide inclusion event by event along a topological order;
    // excluding an event bars all of its successors
    struct Frame {
        std::size_t pos;
        Pomset::Mask included, excluded;
    };
    std::vector<Frame> stack{{0, 0, 0}};
    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        if (f.pos == topo.size()) {
            if (out.size() >= bound)
                throw BoundExceededError("ideal enumeration exceeded bound of " +
                                         std::to_string(bound));
            out.push_back(f.included);
            continue;
        }
        std::size_t e = topo[f.pos];
        // exclude branch pushed first so the include branch is explored
        // first (LIFO), giving a deterministic order
        stack.push_back({f.pos + 1, f.included, f.excluded | Pomset::bit(e)});
        if ((p.pred_of(e) & ~f.included) == 0 && (Pomset::bit(e) & f.excluded) == 0)
            stack.push_back({f.pos + 1, f.included | Pomset::bit(e), f.excluded});
    }
    return out;
}

/// The prefixes of a pomset: restrictions to its order ideals,
/// deduplicated up to isomorphism and sorted by canonical form.
inline std::vector<Pomset> prefixes(const Pomset& r, std::size_t bound) {
    std::map<std::string, Pomset> by_key;
    for (Pomset::Mask m : ideal_masks(r, bound)) {
        Pomset q = r.restrict_to(m);
        std::string key = canonical_key(q);
        by_key.emplace(std::move(key), std::move(q));
    }
    std::vector<Pomset> out;
    out.reserve(by_key.size());
    for (auto& [k, q] : by_key) out.push_back(std::move(q));
    return out;
}

namespace detail {

struct PrefixSearch {
    const Pomset& p;
    const Pomset& r;
    std::vector<int> phi;
    std::vector<bool> used;

    PrefixSearch(const Pomset& small, const Pomset& big)
        : p(small), r(big), phi(small.size(), -1), used(big.size(), false) {}

    bool ok_pair(std::size_t a, std::size_t b) const {
        for (std::size_t a2 = 0; a2 < p.size(); ++a2) {
            if (phi[a2] < 0 || a2 == a) continue;
            std::size_t b2 = static_cast<std::size_t>(phi[a2]);
            if (p.precedes(a, a2) != r.precedes(b, b2)) return false;
            if (p.precedes(a2, a) != r.precedes(b2, b)) return false;
        }
        return true;
    }

    bool image_is_ideal() const {
        Pomset::Mask image = 0;
        for (int b : phi) image |= Pomset::bit(static_cast<std::size_t>(b));
        Pomset::Mask rest = image;
        while (rest) {
            std::size_t i = std::countr_zero(rest);
            rest &= rest - 1;
            if ((r.pred_of(i) & ~image) != 0) return false;
        }
        return true;
    }

    bool go(std::size_t a) {
        if (a == p.size()) return image_is_ideal();
        for (std::size_t b = 0; b < r.size(); ++b) {
            if (used[b] || r.label(b) != p.label(a) || !ok_pair(a, b)) continue;
            phi[a] = static_cast<int>(b);
            used[b] = true;
            if (go(a + 1)) return true;
            phi[a] = -1;
            used[b] = false;
        }
        return false;
    }
};

} // namespace detail

/// True iff p is isomorphic to the restriction of r to some order
/// ideal: a label-preserving injection φ whose image is downward closed
/// and which is an order isomorphism onto that image.
inline bool is_prefix(const Pomset& p, const Pomset& r) {
    if (p.size() > r.size()) return false;
    std::map<CommLabel, int> need;
    for (const Event& e : p.events()) ++need[e.label];
    for (const Event& e : r.events()) {
        auto it = need.find(e.label);
        if (it != need.end()) --it->second;
    }
    for (const auto& [l, c] : need)
        if (c > 0) return false;
    detail::PrefixSearch search(p, r);
    return search.go(0);
}

} // namespace pomcheck
