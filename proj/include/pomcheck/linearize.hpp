#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pomcheck/errors.hpp"
#include "pomcheck/family.hpp"
#include "pomcheck/pomset.hpp"
#include "pomcheck/word.hpp"

namespace pomcheck {

namespace detail {

/// One state of the "downset automaton" of a pomset family: an order
/// ideal (event mask) of one member.  Reading a word tracks the set of
/// such states; the word is a linearization of a member iff some state
/// completes its member's event mask, and a prefix of one iff the set
/// stays non-empty.
struct NfaState {
    std::uint32_t member;
    Pomset::Mask ideal;

    auto operator<=>(const NfaState&) const = default;
};

using NfaStateSet = std::vector<NfaState>;  // sorted, unique

inline NfaStateSet nfa_initial(std::size_t member_count) {
    NfaStateSet s;
    for (std::uint32_t m = 0; m < member_count; ++m) s.push_back({m, 0});
    return s;
}

template <typename Members>
NfaStateSet nfa_step(const Members& members, const NfaStateSet& states, const CommLabel& l) {
    NfaStateSet out;
    for (const NfaState& s : states) {
        const Pomset& p = members[s.member];
        for (std::size_t e = 0; e < p.size(); ++e) {
            if (s.ideal & Pomset::bit(e)) continue;
            if (p.label(e) != l) continue;
            if ((p.pred_of(e) & ~s.ideal) != 0) continue;
            out.push_back({s.member, s.ideal | Pomset::bit(e)});
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

template <typename Members>
bool nfa_accepting(const Members& members, const NfaStateSet& states) {
    for (const NfaState& s : states)
        if (s.ideal == members[s.member].all_mask()) return true;
    return false;
}

template <typename Members>
std::vector<CommLabel> nfa_enabled(const Members& members, const NfaStateSet& states) {
    std::vector<CommLabel> out;
    for (const NfaState& s : states) {
        const Pomset& p = members[s.member];
        for (std::size_t e = 0; e < p.size(); ++e) {
            if (s.ideal & Pomset::bit(e)) continue;
            if ((p.pred_of(e) & ~s.ideal) != 0) continue;
            out.push_back(p.label(e));
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Completes the first state of a non-empty set to acceptance,
/// appending the labels of its remaining events smallest-label first.
template <typename Members>
void nfa_complete_greedily(const Members& members, const NfaStateSet& states, Word& w) {
    NfaState s = states.front();
    const Pomset& p = members[s.member];
    while (s.ideal != p.all_mask()) {
        std::size_t pick = p.size();
        for (std::size_t e = 0; e < p.size(); ++e) {
            if (s.ideal & Pomset::bit(e)) continue;
            if ((p.pred_of(e) & ~s.ideal) != 0) continue;
            if (pick == p.size() || p.label(e) < p.label(pick)) pick = e;
        }
        w.push_back(p.label(pick));
        s.ideal |= Pomset::bit(pick);
    }
}

struct MemberView {
    const PomsetFamily* family;
    const Pomset& operator[](std::size_t i) const { return family->at(i); }
};

struct SingleView {
    const Pomset* p;
    const Pomset& operator[](std::size_t) const { return *p; }
};

template <typename Members>
void enumerate_words(const Members& members, std::size_t member_count, std::size_t bound,
                     Language& out) {
    // depth-first over the determinized downset automaton; every root
    // path spells a distinct word, so no post-hoc deduplication needed
    struct Frame {
        NfaStateSet states;
        std::vector<CommLabel> moves;
        std::size_t next = 0;
    };
    Word word;
    std::vector<Frame> stack;
    stack.push_back({nfa_initial(member_count), {}, 0});
    stack.back().moves = nfa_enabled(members, stack.back().states);
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next == 0 && nfa_accepting(members, f.states)) {
            if (out.size() >= bound)
                throw BoundExceededError("word enumeration exceeded bound of " +
                                         std::to_string(bound));
            out.insert(word);
        }
        if (f.next >= f.moves.size()) {
            stack.pop_back();
            if (!word.empty()) word.pop_back();
            continue;
        }
        CommLabel l = f.moves[f.next++];
        Frame g;
        g.states = nfa_step(members, f.states, l);
        g.moves = nfa_enabled(members, g.states);
        word.push_back(l);
        stack.push_back(std::move(g));
    }
}

} // namespace detail

/// All distinct words obtained from linear extensions of the pomset.
/// Throws BoundExceededError when there are more than `bound` of them.
inline Language linearizations(const Pomset& r, std::size_t bound) {
    Language out;
    detail::SingleView view{&r};
    detail::enumerate_words(view, 1, bound, out);
    return out;
}

/// The language of a family: the union of its members' linearizations.
inline Language language(const PomsetFamily& family, std::size_t bound) {
    Language out;
    detail::MemberView view{&family};
    detail::enumerate_words(view, family.size(), bound, out);
    return out;
}

/// The projection of the family's language on one participant, computed
/// from the projected pomsets (never materializing the full language):
/// projecting a linearization linearizes the projection and vice versa.
inline Language projected_language(const PomsetFamily& family, const Participant& a,
                                   std::size_t bound) {
    Language out;
    for (const NamedPomset& np : family.pomsets)
        for (const Word& w : linearizations(project(np.pomset, a), bound)) out.insert(w);
    return out;
}

/// True iff `w` is a linearization of `r`.
inline bool linearizes(const Word& w, const Pomset& r) {
    if (w.size() != r.size()) return false;
    detail::SingleView view{&r};
    detail::NfaStateSet states = detail::nfa_initial(1);
    for (const CommLabel& l : w) {
        states = detail::nfa_step(view, states, l);
        if (states.empty()) return false;
    }
    return detail::nfa_accepting(view, states);
}

/// True iff `w` belongs to the language of the family.
inline bool in_language(const Word& w, const PomsetFamily& family) {
    detail::MemberView view{&family};
    detail::NfaStateSet states = detail::nfa_initial(family.size());
    for (const CommLabel& l : w) {
        states = detail::nfa_step(view, states, l);
        if (states.empty()) return false;
    }
    return detail::nfa_accepting(view, states);
}

/// True iff `w` is a prefix of some word of the family's language.
inline bool in_prefix_language(const Word& w, const PomsetFamily& family) {
    detail::MemberView view{&family};
    detail::NfaStateSet states = detail::nfa_initial(family.size());
    for (const CommLabel& l : w) {
        states = detail::nfa_step(view, states, l);
        if (states.empty()) return false;
    }
    return true;
}

/// First word (in deterministic label order) on which the languages of
/// two families differ, or nothing when they are equal as sets.
/// Decided on the product of the two downset automata, so exact even
/// when the languages are too large to enumerate; `bound` caps the
/// number of distinct product states visited.
inline std::optional<Word> family_language_difference(const PomsetFamily& r1,
                                                      const PomsetFamily& r2,
                                                      std::size_t bound) {
    detail::MemberView v1{&r1};
    detail::MemberView v2{&r2};
    struct Key {
        detail::NfaStateSet s1, s2;
        auto operator<=>(const Key&) const = default;
    };
    struct Frame {
        Key key;
        std::vector<CommLabel> moves;
        std::size_t next = 0;
    };
    std::set<Key> seen;
    Word word;
    std::vector<Frame> stack;
    auto make_frame = [&](Key key) {
        Frame f;
        std::vector<CommLabel> m1 = detail::nfa_enabled(v1, key.s1);
        std::vector<CommLabel> m2 = detail::nfa_enabled(v2, key.s2);
        f.moves.resize(m1.size() + m2.size());
        auto end = std::set_union(m1.begin(), m1.end(), m2.begin(), m2.end(), f.moves.begin());
        f.moves.erase(end, f.moves.end());
        f.key = std::move(key);
        return f;
    };
    stack.push_back(make_frame({detail::nfa_initial(r1.size()), detail::nfa_initial(r2.size())}));
    seen.insert(stack.back().key);
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next == 0) {
            if (detail::nfa_accepting(v1, f.key.s1) != detail::nfa_accepting(v2, f.key.s2))
                return word;
            if (f.key.s1.empty() != f.key.s2.empty()) {
                // the current word is a prefix of words of one language
                // only; extend it to a full member of that side
                if (f.key.s1.empty())
                    detail::nfa_complete_greedily(v2, f.key.s2, word);
                else
                    detail::nfa_complete_greedily(v1, f.key.s1, word);
                return word;
            }
        }
        if (f.next >= f.moves.size()) {
            stack.pop_back();
            if (!word.empty()) word.pop_back();
            continue;
        }
        CommLabel l = f.moves[f.next++];
        Key key{detail::nfa_step(v1, f.key.s1, l), detail::nfa_step(v2, f.key.s2, l)};
        if (!seen.insert(key).second) continue;
        if (seen.size() > bound)
            throw BoundExceededError("language comparison exceeded bound of " +
                                     std::to_string(bound));
        word.push_back(l);
        stack.push_back(make_frame(std::move(key)));
    }
    return std::nullopt;
}

} // namespace pomcheck
