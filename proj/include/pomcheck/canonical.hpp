#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pomcheck/pomset.hpp"

namespace pomcheck {

namespace detail {

struct CanonItem {
    std::uint32_t label_code;
    std::uint64_t pred_positions;

    auto operator<=>(const CanonItem&) const = default;
};

struct CanonSearch {
    const Pomset& p;
    std::vector<std::uint32_t> label_code;   // per event
    std::vector<CanonItem> best, cur;
    std::vector<std::uint64_t> pos_mask_of;  // event -> bit of its position, 0 if unplaced
    Pomset::Mask placed = 0;
    bool have_best = false;

    explicit CanonSearch(const Pomset& pom) : p(pom) {}

    void run() {
        pos_mask_of.assign(p.size(), 0);
        dfs(0, true);
    }

    void dfs(std::size_t depth, bool still_equal) {
        const std::size_t n = p.size();
        if (depth == n) {
            if (!have_best || cur < best) {
                best = cur;
                have_best = true;
            }
            return;
        }
        // candidates: unplaced events with all predecessors placed
        CanonItem min_item{UINT32_MAX, ~std::uint64_t{0}};
        std::vector<std::size_t> group;
        for (std::size_t e = 0; e < n; ++e) {
            if (placed & Pomset::bit(e)) continue;
            if ((p.pred_of(e) & ~placed) != 0) continue;
            std::uint64_t preds = 0;
            Pomset::Mask rest = p.pred_of(e);
            while (rest) {
                std::size_t q = std::countr_zero(rest);
                rest &= rest - 1;
                preds |= pos_mask_of[q];
            }
            CanonItem item{label_code[e], preds};
            if (item < min_item) {
                min_item = item;
                group.assign(1, e);
            } else if (item == min_item) {
                group.push_back(e);
            }
        }
        if (still_equal && have_best) {
            if (min_item > best[depth]) return;
            still_equal = (min_item == best[depth]);
        }
        // events with identical predecessor and successor sets are
        // interchangeable; exploring one of them is enough
        std::vector<std::size_t> pruned;
        for (std::size_t e : group) {
            bool dup = false;
            for (std::size_t f : pruned)
                if (p.pred_of(e) == p.pred_of(f) && p.succ_of(e) == p.succ_of(f)) {
                    dup = true;
                    break;
                }
            if (!dup) pruned.push_back(e);
        }
        cur.push_back(min_item);
        for (std::size_t e : pruned) {
            placed |= Pomset::bit(e);
            pos_mask_of[e] = std::uint64_t{1} << depth;
            dfs(depth + 1, still_equal);
            pos_mask_of[e] = 0;
            placed &= ~Pomset::bit(e);
        }
        cur.pop_back();
    }
};

} // namespace detail

/// A byte string equal for two pomsets iff they are label-preserving
/// order isomorphic.  Also a deterministic total order on iso classes.
inline std::string canonical_key(const Pomset& p) {
    std::vector<CommLabel> labels;
    for (const Event& e : p.events()) labels.push_back(e.label);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());

    std::string key;
    key += std::to_string(p.size());
    key += '|';
    for (const CommLabel& l : labels) {
        std::string t = to_string(l);
        key += std::to_string(t.size());
        key += ':';
        key += t;
    }
    key += '|';
    if (p.empty()) return key;

    detail::CanonSearch search(p);
    search.label_code.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        search.label_code[i] = static_cast<std::uint32_t>(
            std::lower_bound(labels.begin(), labels.end(), p.label(i)) - labels.begin());
    search.run();
    for (const auto& item : search.best) {
        key += std::to_string(item.label_code);
        key += ',';
        key += std::to_string(item.pred_positions);
        key += ';';
    }
    return key;
}

inline bool isomorphic(const Pomset& a, const Pomset& b) {
    if (a.size() != b.size()) return false;
    auto labels = [](const Pomset& p) {
        std::vector<CommLabel> ls;
        for (const Event& e : p.events()) ls.push_back(e.label);
        std::sort(ls.begin(), ls.end());
        return ls;
    };
    if (labels(a) != labels(b)) return false;
    return canonical_key(a) == canonical_key(b);
}

struct PermissivenessStats {
    std::uint64_t branch_points = 0;
};

namespace detail {

struct EmbedSearch {
    const Pomset& r;        // candidate for *more* order
    const Pomset& r2;       // candidate for *less* order
    PermissivenessStats* stats;
    std::vector<int> psi;   // event of r2 -> event of r, -1 unassigned
    std::vector<bool> used; // events of r

    EmbedSearch(const Pomset& more, const Pomset& less, PermissivenessStats* s)
        : r(more), r2(less), stats(s), psi(less.size(), -1), used(more.size(), false) {}

    bool consistent(std::size_t e2, std::size_t e) const {
        for (std::size_t f2 = 0; f2 < r2.size(); ++f2) {
            if (psi[f2] < 0 || f2 == e2) continue;
            std::size_t f = static_cast<std::size_t>(psi[f2]);
            if (r2.precedes(e2, f2) && !r.precedes(e, f)) return false;
            if (r2.precedes(f2, e2) && !r.precedes(f, e)) return false;
        }
        return true;
    }

    bool assign_chain_class(const std::vector<std::size_t>& in_r,
                            const std::vector<std::size_t>& in_r2) {
        // both restrictions are total orders: the only candidate maps
        // the k-th element of one chain to the k-th of the other
        auto sorted = [](const Pomset& p, std::vector<std::size_t> v) {
            std::sort(v.begin(), v.end(), [&](std::size_t x, std::size_t y) {
                return p.precedes(x, y);
            });
            return v;
        };
        std::vector<std::size_t> rs = sorted(r, in_r);
        std::vector<std::size_t> r2s = sorted(r2, in_r2);
        for (std::size_t k = 0; k < rs.size(); ++k) {
            if (!consistent(r2s[k], rs[k])) return false;
            psi[r2s[k]] = static_cast<int>(rs[k]);
            used[rs[k]] = true;
        }
        return true;
    }

    bool backtrack(const std::vector<std::vector<std::size_t>>& slots_r,
                   const std::vector<std::vector<std::size_t>>& slots_r2,
                   std::size_t cls, std::size_t k) {
        if (cls == slots_r.size()) return true;
        if (k == slots_r2[cls].size()) return backtrack(slots_r, slots_r2, cls + 1, 0);
        std::size_t e2 = slots_r2[cls][k];
        std::size_t tried = 0;
        for (std::size_t e : slots_r[cls]) {
            if (used[e] || !consistent(e2, e)) continue;
            ++tried;
            if (stats && tried > 1) ++stats->branch_points;
            psi[e2] = static_cast<int>(e);
            used[e] = true;
            if (backtrack(slots_r, slots_r2, cls, k + 1)) return true;
            psi[e2] = -1;
            used[e] = false;
        }
        return false;
    }
};

inline bool is_chain(const Pomset& p, const std::vector<std::size_t>& events) {
    for (std::size_t x = 0; x < events.size(); ++x)
        for (std::size_t y = x + 1; y < events.size(); ++y)
            if (!p.ordered(events[x], events[y])) return false;
    return true;
}

} // namespace detail

/// Decides r ⊑ r2: both pomsets carry the same labelled events and r
/// has all of r2's order, possibly more.  Concretely, a label-preserving
/// bijection ψ from r2's events to r's events with
/// e ≤ f in r2  ⟹  ψ(e) ≤ ψ(f) in r.
///
/// Label classes that are totally ordered on both sides admit exactly
/// one candidate bijection, assigned without search; only classes with
/// concurrent repetitions branch, and `stats` counts those branch
/// points.
inline bool less_permissive(const Pomset& r, const Pomset& r2,
                            PermissivenessStats* stats = nullptr) {
    if (r.size() != r2.size()) return false;
    std::map<CommLabel, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> classes;
    for (std::size_t i = 0; i < r.size(); ++i) classes[r.label(i)].first.push_back(i);
    for (std::size_t i = 0; i < r2.size(); ++i) classes[r2.label(i)].second.push_back(i);
    for (const auto& [l, cls] : classes)
        if (cls.first.size() != cls.second.size()) return false;

    detail::EmbedSearch search(r, r2, stats);
    std::vector<std::vector<std::size_t>> slots_r, slots_r2;
    for (const auto& [l, cls] : classes) {
        if (cls.first.size() == 1 ||
            (detail::is_chain(r, cls.first) && detail::is_chain(r2, cls.second))) {
            if (!search.assign_chain_class(cls.first, cls.second)) return false;
        } else {
            slots_r.push_back(cls.first);
            slots_r2.push_back(cls.second);
        }
    }
    return search.backtrack(slots_r, slots_r2, 0, 0);
}

} // namespace pomcheck
