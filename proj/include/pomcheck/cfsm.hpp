#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "pomcheck/errors.hpp"
#include "pomcheck/family.hpp"
#include "pomcheck/linearize.hpp"
#include "pomcheck/word.hpp"

namespace pomcheck {

/// A per-participant finite automaton over communication labels.  Every
/// transition label has the owner as its subject.  Synthesized machines
/// are prefix trees whose states are the projected prefix words
/// themselves (kept in `state_names` for reporting).
struct Cfsm {
    Participant owner;
    std::vector<std::string> state_names;
    int initial = 0;
    std::vector<bool> accepting;
    std::vector<std::tuple<int, CommLabel, int>> transitions;

    std::size_t state_count() const { return state_names.size(); }

    void validate() const {
        for (const auto& [q, l, q2] : transitions) {
            if (l.subject() != owner)
                throw IntegrityError("machine of '" + owner.name + "' has transition with subject '" +
                                     l.subject().name + "'");
            if (q < 0 || q2 < 0 || static_cast<std::size_t>(q) >= state_count() ||
                static_cast<std::size_t>(q2) >= state_count())
                throw IntegrityError("machine of '" + owner.name + "' has out-of-range transition");
        }
    }

    std::optional<int> step(int state, const CommLabel& l) const {
        for (const auto& [q, lab, q2] : transitions)
            if (q == state && lab == l) return q2;
        return std::nullopt;
    }

    bool deterministic() const {
        std::set<std::pair<int, CommLabel>> seen;
        for (const auto& [q, l, q2] : transitions)
            if (!seen.emplace(q, l).second) return false;
        return true;
    }
};

/// A communicating system: one machine per participant, kept sorted by
/// participant name.
struct CommSystem {
    std::vector<Cfsm> machines;

    std::size_t index_of(const Participant& a) const {
        for (std::size_t i = 0; i < machines.size(); ++i)
            if (machines[i].owner == a) return i;
        throw IntegrityError("no machine for participant '" + a.name + "'");
    }

    void validate() const {
        for (std::size_t i = 0; i + 1 < machines.size(); ++i)
            if (!(machines[i].owner < machines[i + 1].owner))
                throw IntegrityError("machines must be sorted by owner and unique");
        for (const Cfsm& m : machines) m.validate();
    }
};

/// A snapshot of a run: one local state per machine plus, per channel,
/// a multiset of messages in flight.  Buffers store only non-zero
/// counts so configurations compare canonically.
struct Configuration {
    std::vector<int> states;
    std::map<std::pair<std::string, std::string>, std::map<std::string, int>> buffers;

    auto operator<=>(const Configuration&) const = default;

    int buffer_count(const std::string& from, const std::string& to,
                     const std::string& msg) const {
        auto it = buffers.find({from, to});
        if (it == buffers.end()) return 0;
        auto jt = it->second.find(msg);
        return jt == it->second.end() ? 0 : jt->second;
    }
};

inline Configuration initial_configuration(const CommSystem& s) {
    Configuration c;
    for (const Cfsm& m : s.machines) c.states.push_back(m.initial);
    return c;
}

inline bool is_accepting(const CommSystem& s, const Configuration& c) {
    for (std::size_t i = 0; i < s.machines.size(); ++i)
        if (!s.machines[i].accepting[static_cast<std::size_t>(c.states[i])]) return false;
    return c.buffers.empty();
}

/// One transition of the communicating system.  An output advances the
/// sender's machine and adds the message to the channel's multiset; an
/// input requires a pending occurrence, removes it, and advances the
/// receiver.  Throws NoTransitionError / EmptyBufferError.
inline Configuration step(const CommSystem& s, const Configuration& c, const CommLabel& l) {
    std::size_t mi = s.index_of(l.subject());
    auto next = s.machines[mi].step(c.states[mi], l);
    if (!next)
        throw NoTransitionError("machine of '" + l.subject().name + "' has no transition for " +
                                to_string(l) + " in state " +
                                s.machines[mi].state_names[static_cast<std::size_t>(
                                    c.states[mi])]);
    Configuration out = c;
    std::pair<std::string, std::string> channel{l.sender.name, l.receiver.name};
    if (l.is_output()) {
        ++out.buffers[channel][l.message];
    } else {
        auto it = out.buffers.find(channel);
        if (it == out.buffers.end() || it->second.count(l.message) == 0 ||
            it->second[l.message] == 0)
            throw EmptyBufferError("no pending '" + l.message + "' on channel " +
                                   l.sender.name + ">" + l.receiver.name);
        if (--it->second[l.message] == 0) {
            it->second.erase(l.message);
            if (it->second.empty()) out.buffers.erase(it);
        }
    }
    out.states[mi] = *next;
    return out;
}

/// Synthesis of a participant's machine from a language: states are the
/// prefix closure of the projected language, the initial state is the
/// empty word, accepting states are the full projected words, and
/// transitions append one label.  The result is a prefix tree.  The
/// empty word is accepting iff it is itself a projected word.
inline Cfsm synthesize_cfsm(const Language& lang, const Participant& a) {
    Language proj = project_language(lang, a);
    std::set<Word> states;
    states.insert(Word{});
    for (const Word& w : proj)
        for (std::size_t k = 1; k <= w.size(); ++k)
            states.insert(Word(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(k)));

    std::vector<Word> ordered(states.begin(), states.end());
    std::sort(ordered.begin(), ordered.end(),
              [](const Word& x, const Word& y) {
                  if (x.size() != y.size()) return x.size() < y.size();
                  return x < y;
              });
    auto index_of = [&](const Word& w) {
        for (std::size_t i = 0; i < ordered.size(); ++i)
            if (ordered[i] == w) return static_cast<int>(i);
        return -1;
    };

    Cfsm m;
    m.owner = a;
    for (const Word& w : ordered) {
        m.state_names.push_back(w.empty() ? "ε" : to_string(w));
        m.accepting.push_back(proj.count(w) > 0);
    }
    m.initial = index_of(Word{});
    for (const Word& w : ordered) {
        if (w.empty()) continue;
        Word parent(w.begin(), w.end() - 1);
        m.transitions.emplace_back(index_of(parent), w.back(), index_of(w));
    }
    std::sort(m.transitions.begin(), m.transitions.end());
    return m;
}

inline CommSystem synthesize_system(const Language& lang,
                                    const std::vector<Participant>& participants) {
    std::vector<Participant> ps = participants;
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
    CommSystem s;
    for (const Participant& a : ps) s.machines.push_back(synthesize_cfsm(lang, a));
    s.validate();
    return s;
}

/// Explored configuration space.  `deadlock[i]` marks configurations
/// from which no accepting configuration is reachable, computed by
/// backward reachability from the accepting ones.
struct ReachableGraph {
    std::vector<Configuration> nodes;
    std::vector<std::tuple<int, CommLabel, int>> edges;
    std::vector<bool> accepting;
    std::vector<bool> deadlock;
    int initial = 0;

    std::size_t deadlock_count() const {
        std::size_t n = 0;
        for (bool d : deadlock) n += d ? 1 : 0;
        return n;
    }
};

struct ReachOptions {
    std::size_t max_configurations = 1 << 20;
    /// Cap on any single buffer count; 0 means uncapped.  Synthesized
    /// systems are self-bounding, hand-written ones may not be.
    int max_buffer = 0;
};

inline ReachableGraph reachable(const CommSystem& s, const ReachOptions& opts = {}) {
    ReachableGraph g;
    std::map<Configuration, int> index;
    std::vector<Configuration> queue;
    Configuration init = initial_configuration(s);
    index.emplace(init, 0);
    g.nodes.push_back(init);
    queue.push_back(init);
    for (std::size_t head = 0; head < queue.size(); ++head) {
        Configuration c = queue[head];
        int ci = index[c];
        for (std::size_t mi = 0; mi < s.machines.size(); ++mi) {
            const Cfsm& m = s.machines[mi];
            for (const auto& [q, l, q2] : m.transitions) {
                if (q != c.states[mi]) continue;
                if (l.is_input() &&
                    c.buffer_count(l.sender.name, l.receiver.name, l.message) == 0)
                    continue;
                Configuration n = step(s, c, l);
                if (opts.max_buffer > 0)
                    for (const auto& [ch, msgs] : n.buffers)
                        for (const auto& [msg, cnt] : msgs)
                            if (cnt > opts.max_buffer)
                                throw BoundExceededError("buffer for " + ch.first + ">" +
                                                         ch.second + " exceeded cap of " +
                                                         std::to_string(opts.max_buffer));
                auto [it, fresh] = index.emplace(n, static_cast<int>(g.nodes.size()));
                if (fresh) {
                    if (g.nodes.size() >= opts.max_configurations)
                        throw BoundExceededError("configuration space exceeded bound of " +
                                                 std::to_string(opts.max_configurations));
                    g.nodes.push_back(n);
                    queue.push_back(n);
                }
                g.edges.emplace_back(ci, l, it->second);
            }
        }
    }
    g.accepting.resize(g.nodes.size());
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        g.accepting[i] = is_accepting(s, g.nodes[i]);

    // deadlocks: nodes that cannot reach an accepting node
    std::vector<std::vector<int>> rev(g.nodes.size());
    for (const auto& [from, l, to] : g.edges) rev[static_cast<std::size_t>(to)].push_back(from);
    std::vector<bool> coreach(g.nodes.size(), false);
    std::vector<int> stack;
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        if (g.accepting[i]) {
            coreach[i] = true;
            stack.push_back(static_cast<int>(i));
        }
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int u : rev[static_cast<std::size_t>(v)])
            if (!coreach[static_cast<std::size_t>(u)]) {
                coreach[static_cast<std::size_t>(u)] = true;
                stack.push_back(u);
            }
    }
    g.deadlock.resize(g.nodes.size());
    for (std::size_t i = 0; i < g.nodes.size(); ++i) g.deadlock[i] = !coreach[i];
    return g;
}

/// All label sequences of paths from the initial to an accepting
/// configuration.  Throws BoundExceededError when the language exceeds
/// `bound` words or a path exceeds `bound` steps (cyclic systems).
inline Language system_language(const CommSystem& s, std::size_t bound,
                                const ReachOptions& opts = {}) {
    ReachableGraph g = reachable(s, opts);
    std::vector<std::vector<std::pair<CommLabel, int>>> adj(g.nodes.size());
    for (const auto& [from, l, to] : g.edges)
        adj[static_cast<std::size_t>(from)].emplace_back(l, to);
    for (auto& out : adj) std::sort(out.begin(), out.end());

    Language out;
    Word word;
    struct Frame {
        int node;
        std::size_t next = 0;
    };
    std::vector<Frame> stack{{g.initial, 0}};
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next == 0 && g.accepting[static_cast<std::size_t>(f.node)]) {
            if (out.size() >= bound)
                throw BoundExceededError("system language exceeded bound of " +
                                         std::to_string(bound));
            out.insert(word);
        }
        if (f.next >= adj[static_cast<std::size_t>(f.node)].size()) {
            stack.pop_back();
            if (!word.empty()) word.pop_back();
            continue;
        }
        auto [l, to] = adj[static_cast<std::size_t>(f.node)][f.next++];
        if (word.size() >= bound)
            throw BoundExceededError("system path exceeded bound of " + std::to_string(bound));
        word.push_back(l);
        stack.push_back({to, 0});
    }
    return out;
}

struct SystemTerminationVerdict {
    bool holds = true;
    struct Witness {
        Participant participant;
        std::size_t configuration;  // index into the reachable graph
        Configuration state;
        CommLabel pending_input;
    };
    std::optional<Witness> witness;
};

/// Termination awareness on the system: no participant of P' may sit in
/// an accepting configuration whose local state still offers an input
/// transition.
inline SystemTerminationVerdict check_system_termination_aware(
    const CommSystem& s, const std::vector<Participant>& pprime, const ReachOptions& opts = {}) {
    SystemTerminationVerdict verdict;
    ReachableGraph g = reachable(s, opts);
    std::vector<Participant> ps = pprime;
    std::sort(ps.begin(), ps.end());
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        if (!g.accepting[i]) continue;
        for (const Participant& a : ps) {
            std::size_t mi = s.index_of(a);
            const Cfsm& m = s.machines[mi];
            for (const auto& [q, l, q2] : m.transitions) {
                if (q != g.nodes[i].states[mi] || !l.is_input()) continue;
                verdict.holds = false;
                verdict.witness = {a, i, g.nodes[i], l};
                return verdict;
            }
        }
    }
    return verdict;
}

/// First word on which the system's language differs from the family's,
/// or nothing when they are equal.  Exact product construction; the
/// system must be deterministic (synthesized ones are).
inline std::optional<Word> system_language_difference(const CommSystem& s,
                                                      const PomsetFamily& family,
                                                      std::size_t bound) {
    for (const Cfsm& m : s.machines)
        if (!m.deterministic())
            throw std::invalid_argument("system_language_difference needs a deterministic system");

    detail::MemberView view{&family};

    // Phase 1: every accepted system word is in the family's language.
    {
        struct Key {
            Configuration c;
            detail::NfaStateSet states;
            auto operator<=>(const Key&) const = default;
        };
        std::set<Key> seen;
        Word word;
        struct Frame {
            Key key;
            std::vector<std::pair<CommLabel, Configuration>> moves;
            std::size_t next = 0;
        };
        auto moves_of = [&](const Configuration& c) {
            std::vector<std::pair<CommLabel, Configuration>> out;
            for (std::size_t mi = 0; mi < s.machines.size(); ++mi)
                for (const auto& [q, l, q2] : s.machines[mi].transitions) {
                    if (q != c.states[mi]) continue;
                    if (l.is_input() &&
                        c.buffer_count(l.sender.name, l.receiver.name, l.message) == 0)
                        continue;
                    out.emplace_back(l, step(s, c, l));
                }
            std::sort(out.begin(), out.end(),
                      [](const auto& x, const auto& y) { return x.first < y.first; });
            return out;
        };
        std::vector<Frame> stack;
        Key init{initial_configuration(s), detail::nfa_initial(family.size())};
        stack.push_back({init, moves_of(init.c), 0});
        seen.insert(init);
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next == 0 && is_accepting(s, f.key.c) &&
                !detail::nfa_accepting(view, f.key.states))
                return word;
            if (f.next >= f.moves.size()) {
                stack.pop_back();
                if (!word.empty()) word.pop_back();
                continue;
            }
            auto [l, c2] = f.moves[f.next++];
            Key key{std::move(c2), detail::nfa_step(view, f.key.states, l)};
            if (!seen.insert(key).second) continue;
            if (seen.size() > bound)
                throw BoundExceededError("system/family comparison exceeded bound of " +
                                         std::to_string(bound));
            word.push_back(l);
            auto next_moves = moves_of(key.c);
            stack.push_back({std::move(key), std::move(next_moves), 0});
        }
    }

    // Phase 2: every member linearization is accepted by the system.
    for (std::size_t m = 0; m < family.size(); ++m) {
        const Pomset& p = family.at(m);
        std::set<std::pair<Pomset::Mask, Configuration>> seen;
        Word word;
        struct Frame {
            Pomset::Mask ideal;
            Configuration c;
            std::vector<std::size_t> avail;
            std::size_t next = 0;
        };
        auto avail_of = [&](Pomset::Mask ideal) {
            std::vector<std::size_t> out;
            for (std::size_t e = 0; e < p.size(); ++e)
                if ((ideal & Pomset::bit(e)) == 0 && (p.pred_of(e) & ~ideal) == 0)
                    out.push_back(e);
            std::sort(out.begin(), out.end(),
                      [&](std::size_t x, std::size_t y) { return p.label(x) < p.label(y); });
            return out;
        };
        auto complete_rest = [&](Pomset::Mask ideal, Word& w) {
            while (ideal != p.all_mask()) {
                std::size_t pick = p.size();
                for (std::size_t e = 0; e < p.size(); ++e) {
                    if (ideal & Pomset::bit(e)) continue;
                    if ((p.pred_of(e) & ~ideal) != 0) continue;
                    if (pick == p.size() || p.label(e) < p.label(pick)) pick = e;
                }
                w.push_back(p.label(pick));
                ideal |= Pomset::bit(pick);
            }
        };
        std::vector<Frame> stack;
        Configuration init = initial_configuration(s);
        stack.push_back({0, init, avail_of(0), 0});
        seen.emplace(0, init);
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next == 0 && f.ideal == p.all_mask() && !is_accepting(s, f.c))
                return word;  // a full member word the system rejects
            if (f.next >= f.avail.size()) {
                stack.pop_back();
                if (!word.empty()) word.pop_back();
                continue;
            }
            std::size_t e = f.avail[f.next++];
            const CommLabel& l = p.label(e);
            std::size_t mi = s.index_of(l.subject());
            bool can = s.machines[mi].step(f.c.states[mi], l).has_value() &&
                       (!l.is_input() ||
                        f.c.buffer_count(l.sender.name, l.receiver.name, l.message) > 0);
            if (!can) {
                // the system cannot even follow this member word
                word.push_back(l);
                complete_rest(f.ideal | Pomset::bit(e), word);
                return word;
            }
            Configuration c2 = step(s, f.c, l);
            auto key = std::make_pair(f.ideal | Pomset::bit(e), c2);
            if (!seen.insert(key).second) continue;
            if (seen.size() > bound)
                throw BoundExceededError("system/family comparison exceeded bound of " +
                                         std::to_string(bound));
            word.push_back(l);
            stack.push_back({key.first, std::move(c2), avail_of(key.first), 0});
        }
    }
    return std::nullopt;
}

} // namespace pomcheck
