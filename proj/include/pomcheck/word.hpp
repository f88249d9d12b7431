#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "pomcheck/label.hpp"

namespace pomcheck {

using Word = std::vector<CommLabel>;

/// A finite set of words; kept ordered so iteration is deterministic.
using Language = std::set<Word>;

inline std::string to_string(const Word& w) {
    std::string out;
    for (const CommLabel& l : w) {
        if (!out.empty()) out += ' ';
        out += to_string(l);
    }
    return out;
}

/// Subsequence of the events whose subject is `a`.
inline Word project_word(const Word& w, const Participant& a) {
    Word out;
    for (const CommLabel& l : w)
        if (l.subject() == a) out.push_back(l);
    return out;
}

inline Language project_language(const Language& lang, const Participant& a) {
    Language out;
    for (const Word& w : lang) out.insert(project_word(w, a));
    return out;
}

/// A word is well-formed when along every prefix no channel ever has
/// more receives of a message than sends: the word linearizes a
/// well-formed pomset whose k-th receive of a message matches its k-th
/// send.
inline bool word_well_formed(const Word& w) {
    std::map<CommLabel, long> pending;  // keyed by the output label
    for (const CommLabel& l : w) {
        if (l.is_output()) {
            ++pending[l];
        } else {
            long& n = pending[l.counterpart()];
            if (n == 0) return false;
            --n;
        }
    }
    return true;
}

/// Well-formed with every send eventually received.
inline bool word_complete(const Word& w) {
    std::map<CommLabel, long> pending;
    for (const CommLabel& l : w) {
        if (l.is_output()) {
            ++pending[l];
        } else {
            long& n = pending[l.counterpart()];
            if (n == 0) return false;
            --n;
        }
    }
    for (const auto& [l, n] : pending)
        if (n != 0) return false;
    return true;
}

/// Number of occurrences of `l` strictly before `position`.
inline std::size_t count_preceding(const Word& w, std::size_t position, const CommLabel& l) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < position && i < w.size(); ++i)
        if (w[i] == l) ++n;
    return n;
}

/// Explicit prefix closure; the empty word belongs to every closure.
inline Language prefix_closure(const Language& lang) {
    Language out;
    out.insert(Word{});
    for (const Word& w : lang)
        for (std::size_t k = 1; k <= w.size(); ++k)
            out.insert(Word(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(k)));
    return out;
}

/// Participants acting in some word of the language, sorted.
inline std::vector<Participant> subjects_of(const Language& lang) {
    std::set<Participant> s;
    for (const Word& w : lang)
        for (const CommLabel& l : w) s.insert(l.subject());
    return {s.begin(), s.end()};
}

} // namespace pomcheck
