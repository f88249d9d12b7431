#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "pomcheck/errors.hpp"
#include "pomcheck/family.hpp"
#include "pomcheck/linearize.hpp"
#include "pomcheck/pomset.hpp"
#include "pomcheck/word.hpp"

namespace pomcheck {

/// Outcome of a language-level closure check.  The witness is present
/// exactly when the condition fails: an implied word the language (or
/// its prefix closure) is missing.
struct OracleVerdict {
    bool holds = true;
    std::optional<Word> witness;
    std::uint64_t states_explored = 0;
};

namespace detail {

// ---------------------------------------------------------------
// prefix-tree and family monitors used to track language membership
// along a candidate word
// ---------------------------------------------------------------

struct Trie {
    struct Node {
        std::map<CommLabel, int> next;
        bool word_end = false;
    };
    std::vector<Node> nodes{1};

    void insert(const Word& w) {
        int at = 0;
        for (const CommLabel& l : w) {
            auto it = nodes[static_cast<std::size_t>(at)].next.find(l);
            if (it == nodes[static_cast<std::size_t>(at)].next.end()) {
                nodes.push_back({});
                it = nodes[static_cast<std::size_t>(at)]
                         .next.emplace(l, static_cast<int>(nodes.size() - 1))
                         .first;
            }
            at = it->second;
        }
        nodes[static_cast<std::size_t>(at)].word_end = true;
    }

    int step(int node, const CommLabel& l) const {
        if (node < 0) return -1;
        const auto& next = nodes[static_cast<std::size_t>(node)].next;
        auto it = next.find(l);
        return it == next.end() ? -1 : it->second;
    }
};

struct SetMonitor {
    Trie trie;

    using State = int;
    explicit SetMonitor(const Language& lang) {
        for (const Word& w : lang) trie.insert(w);
    }
    State initial() const { return 0; }
    State step(State s, const CommLabel& l) const { return trie.step(s, l); }
    bool alive(State s) const { return s >= 0; }
    bool accepting(State s) const {
        return s >= 0 && trie.nodes[static_cast<std::size_t>(s)].word_end;
    }
    void encode(State s, std::string& out) const {
        out.append(reinterpret_cast<const char*>(&s), sizeof(s));
    }
};

struct FamilyMonitor {
    MemberView view;
    std::size_t member_count;

    using State = NfaStateSet;
    explicit FamilyMonitor(const PomsetFamily& family)
        : view{&family}, member_count(family.size()) {}
    State initial() const { return nfa_initial(member_count); }
    State step(const State& s, const CommLabel& l) const { return nfa_step(view, s, l); }
    bool alive(const State& s) const { return !s.empty(); }
    bool accepting(const State& s) const { return nfa_accepting(view, s); }
    void encode(const State& s, std::string& out) const {
        for (const NfaState& st : s) {
            out.append(reinterpret_cast<const char*>(&st.member), sizeof(st.member));
            out.append(reinterpret_cast<const char*>(&st.ideal), sizeof(st.ideal));
        }
    }
};

// ---------------------------------------------------------------
// candidate-word search shared by the CC2 and CC3 oracles
// ---------------------------------------------------------------

/// Per-participant word source: either one fixed word per tuple slot
/// (CC2) or a prefix tree of allowed projections (CC3).
struct SlotTrie {
    Trie trie;
    Participant owner;
};

struct BufferState {
    std::map<CommLabel, long> pending;  // keyed by output label

    bool can_input(const CommLabel& input) {
        auto it = pending.find(input.counterpart());
        return it != pending.end() && it->second > 0;
    }
    void apply(const CommLabel& l) {
        if (l.is_output())
            ++pending[l];
        else
            --pending[l.counterpart()];
    }
    void undo(const CommLabel& l) {
        if (l.is_output())
            --pending[l];
        else
            ++pending[l.counterpart()];
    }
    bool empty() const {
        for (const auto& [l, n] : pending)
            if (n != 0) return false;
        return true;
    }
};

/// Orders candidate moves so that witness words come out in a stable,
/// human-readable shape: enabled receives first, then sends whose
/// receiver is immediately ready to consume the message, then the
/// remaining sends; ties broken by label order.
struct MoveRank {
    int rank;
    CommLabel label;
    std::size_t slot;

    bool operator<(const MoveRank& o) const {
        if (rank != o.rank) return rank < o.rank;
        if (label != o.label) return label < o.label;
        return slot < o.slot;
    }
};

template <typename Monitor>
class CandidateSearch {
public:
    CandidateSearch(std::vector<SlotTrie> slots, const Monitor& monitor, bool complete_only,
                    std::size_t bound)
        : slots_(std::move(slots)), monitor_(&monitor), complete_only_(complete_only),
          bound_(bound) {}

    /// Searches for a well-formed candidate word (complete when
    /// `complete_only`) that every slot can produce but the monitor
    /// does not contain.  Returns the first such word in move order.
    std::optional<Word> run() {
        nodes_.assign(slots_.size(), 0);
        word_.clear();
        seen_.clear();
        states_explored_ = 0;
        found_ = false;
        typename Monitor::State m = monitor_->initial();
        dfs(m);
        if (found_) return word_;
        return std::nullopt;
    }

    std::uint64_t states_explored() const { return states_explored_; }

private:
    bool dfs(const typename Monitor::State& m) {
        if (!monitor_->alive(m) && !complete_only_) {
            // feasible well-formed word outside the prefix closure
            found_ = true;
            return true;
        }
        std::string key = encode(m);
        if (!seen_.insert(std::move(key)).second) return false;
        if (++states_explored_ > bound_)
            throw BoundExceededError("oracle search exceeded bound of " +
                                     std::to_string(bound_));

        if (complete_only_ && at_slot_ends() && buffers_.empty()) {
            if (!monitor_->accepting(m)) {
                found_ = true;
                return true;
            }
        }

        std::vector<MoveRank> moves;
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            for (const auto& [l, child] : slot_children(i)) {
                if (l.is_input()) {
                    if (!buffers_.can_input(l)) continue;
                    moves.push_back({0, l, i});
                } else {
                    moves.push_back({receiver_ready(l) ? 1 : 2, l, i});
                }
            }
        }
        std::sort(moves.begin(), moves.end());
        for (const MoveRank& mv : moves) {
            std::size_t i = mv.slot;
            int prev = nodes_[i];
            nodes_[i] = slots_[i].trie.step(prev, mv.label);
            buffers_.apply(mv.label);
            word_.push_back(mv.label);
            typename Monitor::State next = monitor_->step(m, mv.label);
            if (dfs(next)) return true;
            word_.pop_back();
            buffers_.undo(mv.label);
            nodes_[i] = prev;
        }
        return false;
    }

    const std::map<CommLabel, int>& slot_children(std::size_t i) const {
        return slots_[i].trie.nodes[static_cast<std::size_t>(nodes_[i])].next;
    }

    bool at_slot_ends() const {
        for (std::size_t i = 0; i < slots_.size(); ++i)
            if (!slot_children(i).empty()) return false;
        return true;
    }

    /// A send is productive when its receiver's very next action (in
    /// the receiver's slot) is the matching input.
    bool receiver_ready(const CommLabel& out) const {
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            if (slots_[i].owner != out.receiver) continue;
            const auto& kids = slot_children(i);
            return kids.count(out.counterpart()) > 0;
        }
        return false;
    }

    std::string encode(const typename Monitor::State& m) const {
        std::string key;
        key.reserve(slots_.size() * 4 + 16);
        for (int n : nodes_) key.append(reinterpret_cast<const char*>(&n), sizeof(n));
        key += '#';
        monitor_->encode(m, key);
        return key;
    }

    std::vector<SlotTrie> slots_;
    const Monitor* monitor_;
    bool complete_only_;
    std::size_t bound_;
    std::vector<int> nodes_;
    Word word_;
    BufferState buffers_;
    std::unordered_set<std::string> seen_;
    std::uint64_t states_explored_ = 0;
    bool found_ = false;
};

inline std::vector<Word> sorted_words(const Language& lang) {
    return {lang.begin(), lang.end()};
}

/// CC2 search: one fixed projection word per participant and tuple;
/// iterates all tuples of projections drawn from the language.
template <typename Monitor>
OracleVerdict cc2_core(const std::vector<Participant>& participants,
                       const std::vector<std::vector<Word>>& projections, const Monitor& monitor,
                       std::size_t bound) {
    OracleVerdict verdict;
    std::vector<std::size_t> pick(participants.size(), 0);
    for (;;) {
        std::vector<SlotTrie> slots;
        for (std::size_t i = 0; i < participants.size(); ++i) {
            SlotTrie st;
            st.owner = participants[i];
            st.trie.insert(projections[i][pick[i]]);
            slots.push_back(std::move(st));
        }
        CandidateSearch<Monitor> search(std::move(slots), monitor, /*complete_only=*/true, bound);
        auto witness = search.run();
        verdict.states_explored += search.states_explored();
        if (witness) {
            verdict.holds = false;
            verdict.witness = std::move(witness);
            return verdict;
        }
        // odometer over projection tuples, last slot fastest, so tuples
        // come out in lexicographic order
        std::size_t i = pick.size();
        while (i > 0 && ++pick[i - 1] == projections[i - 1].size()) pick[--i] = 0;
        if (i == 0) break;
    }
    return verdict;
}

/// CC3 search: every participant may stop anywhere inside any of its
/// projections, so slots carry the full prefix tree of the projected
/// language and a single search covers all prefix tuples.
template <typename Monitor>
OracleVerdict cc3_core(const std::vector<Participant>& participants,
                       const std::vector<std::vector<Word>>& projections, const Monitor& monitor,
                       std::size_t bound) {
    std::vector<SlotTrie> slots;
    for (std::size_t i = 0; i < participants.size(); ++i) {
        SlotTrie st;
        st.owner = participants[i];
        for (const Word& w : projections[i]) st.trie.insert(w);
        slots.push_back(std::move(st));
    }
    CandidateSearch<Monitor> search(std::move(slots), monitor, /*complete_only=*/false, bound);
    OracleVerdict verdict;
    auto witness = search.run();
    verdict.states_explored = search.states_explored();
    if (witness) {
        verdict.holds = false;
        verdict.witness = std::move(witness);
    }
    return verdict;
}

} // namespace detail

namespace detail {

struct ShuffleEnum {
    const std::vector<const Word*>& tuple;
    bool complete_only;
    std::size_t bound;
    Language& out;
    std::vector<std::size_t> pos;
    BufferState buffers;
    Word word;
    std::size_t total = 0;

    ShuffleEnum(const std::vector<const Word*>& t, bool c, std::size_t b, Language& o)
        : tuple(t), complete_only(c), bound(b), out(o), pos(t.size(), 0) {
        for (const Word* w : tuple) total += w->size();
    }

    void run() { rec(); }

    void rec() {
        if (word.size() == total) {
            if (!complete_only || buffers.empty()) {
                if (out.size() >= bound)
                    throw BoundExceededError("feasible-word enumeration exceeded bound of " +
                                             std::to_string(bound));
                out.insert(word);
            }
            return;
        }
        for (std::size_t slot = 0; slot < tuple.size(); ++slot) {
            const Word& u = *tuple[slot];
            if (pos[slot] >= u.size()) continue;
            const CommLabel& l = u[pos[slot]];
            if (l.is_input() && !buffers.can_input(l)) continue;
            buffers.apply(l);
            word.push_back(l);
            ++pos[slot];
            rec();
            --pos[slot];
            word.pop_back();
            buffers.undo(l);
        }
    }
};

} // namespace detail

/// All well-formed (and, when `complete_only`, complete) words whose
/// projection on every participant of P equals the projection of some
/// member of L.  Every such word interleaves one chosen projection per
/// participant, so the search shuffles projection tuples instead of
/// scanning a length-bounded universe.
inline Language feasible_words(const Language& lang, const std::vector<Participant>& participants,
                               bool complete_only, std::size_t bound) {
    Language out;
    if (lang.empty()) return out;
    if (participants.empty()) {
        out.insert(Word{});
        return out;
    }
    std::vector<std::vector<Word>> projections;
    for (const Participant& a : participants)
        projections.push_back(detail::sorted_words(project_language(lang, a)));

    std::vector<std::size_t> pick(participants.size(), 0);
    for (;;) {
        std::vector<const Word*> tuple;
        for (std::size_t i = 0; i < pick.size(); ++i) tuple.push_back(&projections[i][pick[i]]);
        detail::ShuffleEnum(tuple, complete_only, bound, out).run();
        std::size_t i = pick.size();
        while (i > 0 && ++pick[i - 1] == projections[i - 1].size()) pick[--i] = 0;
        if (i == 0) break;
    }
    return out;
}

/// Closure condition CC2: every well-formed, complete word whose
/// per-participant projections all match projections of members must
/// already belong to the language.  Characterizes weak realisability.
/// Precondition: all words of `lang` are well-formed and complete.
inline OracleVerdict check_cc2(const Language& lang, std::size_t bound) {
    for (const Word& w : lang)
        if (!word_complete(w))
            throw std::invalid_argument("check_cc2 requires well-formed, complete words");
    std::vector<Participant> participants = subjects_of(lang);
    if (participants.empty()) return {};
    std::vector<std::vector<Word>> projections;
    for (const Participant& a : participants)
        projections.push_back(detail::sorted_words(project_language(lang, a)));
    detail::SetMonitor monitor(lang);
    return detail::cc2_core(participants, projections, monitor, bound);
}

/// CC2 decided against a family's language without materializing it:
/// membership runs on the family's downset automaton.  Same verdict as
/// check_cc2(language(family, ...), ...).
inline OracleVerdict check_cc2(const PomsetFamily& family, std::size_t bound) {
    for (const NamedPomset& np : family.pomsets)
        if (!is_well_formed(np.pomset) || !is_complete(np.pomset))
            throw std::invalid_argument("check_cc2 requires well-formed, complete members");
    std::vector<Participant> participants = family.participants;
    if (participants.empty() || family.size() == 0) return {};
    std::vector<std::vector<Word>> projections;
    for (const Participant& a : participants)
        projections.push_back(detail::sorted_words(projected_language(family, a, bound)));
    detail::FamilyMonitor monitor(family);
    return detail::cc2_core(participants, projections, monitor, bound);
}

/// Closure condition CC3: every well-formed word whose projections are
/// prefixes of projections of the language must belong to the prefix
/// closure.  Characterizes safe realisability together with CC2.
inline OracleVerdict check_cc3(const Language& lang, std::size_t bound) {
    for (const Word& w : lang)
        if (!word_complete(w))
            throw std::invalid_argument("check_cc3 requires well-formed, complete words");
    std::vector<Participant> participants = subjects_of(lang);
    if (participants.empty()) return {};
    std::vector<std::vector<Word>> projections;
    for (const Participant& a : participants)
        projections.push_back(detail::sorted_words(project_language(lang, a)));
    detail::SetMonitor monitor(prefix_closure(lang));
    return detail::cc3_core(participants, projections, monitor, bound);
}

inline OracleVerdict check_cc3(const PomsetFamily& family, std::size_t bound) {
    for (const NamedPomset& np : family.pomsets)
        if (!is_well_formed(np.pomset) || !is_complete(np.pomset))
            throw std::invalid_argument("check_cc3 requires well-formed, complete members");
    std::vector<Participant> participants = family.participants;
    if (participants.empty() || family.size() == 0) return {};
    std::vector<std::vector<Word>> projections;
    for (const Participant& a : participants) {
        Language proj;
        for (const NamedPomset& np : family.pomsets)
            for (const Word& w : linearizations(project(np.pomset, a), bound))
                proj.insert(w);
        projections.push_back(detail::sorted_words(proj));
    }
    detail::FamilyMonitor monitor(family);
    return detail::cc3_core(participants, projections, monitor, bound);
}

/// A participant that cannot locally tell the coordination is over:
/// after `shorter`'s projection it may still be offered the input that
/// `longer` continues with.
struct TerminationUnawareness {
    Participant participant;
    Word shorter, longer;
    CommLabel blocking_label;
};

struct LanguageTerminationVerdict {
    bool holds = true;
    std::optional<TerminationUnawareness> witness;
};

/// P'-termination at the language level: no participant of P' has two
/// words whose projections extend each other with an input right after
/// the shorter one ends.
inline LanguageTerminationVerdict check_language_terminating(
    const Language& lang, const std::vector<Participant>& pprime) {
    LanguageTerminationVerdict verdict;
    for (const Participant& a : pprime) {
        for (const Word& w : lang) {
            Word pa = project_word(w, a);
            for (const Word& w2 : lang) {
                Word pb = project_word(w2, a);
                if (pa.size() >= pb.size()) continue;
                if (!std::equal(pa.begin(), pa.end(), pb.begin())) continue;
                const CommLabel& next = pb[pa.size()];
                if (next.is_input()) {
                    verdict.holds = false;
                    verdict.witness = TerminationUnawareness{a, w, w2, next};
                    return verdict;
                }
            }
        }
    }
    return verdict;
}

} // namespace pomcheck
