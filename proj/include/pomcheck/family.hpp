#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "pomcheck/errors.hpp"
#include "pomcheck/pomset.hpp"

namespace pomcheck {

/// A named pomset inside a family.
struct NamedPomset {
    std::string name;
    Pomset pomset;
};

/// A finite family of pomsets over a shared universe of participants
/// and message types: the global specification.
struct PomsetFamily {
    std::vector<Participant> participants;   // sorted, unique
    std::vector<std::string> messages;       // sorted, unique
    std::vector<NamedPomset> pomsets;

    const Pomset& at(std::size_t i) const { return pomsets[i].pomset; }
    std::size_t size() const { return pomsets.size(); }

    const NamedPomset* find(std::string_view name) const {
        for (const NamedPomset& np : pomsets)
            if (np.name == name) return &np;
        return nullptr;
    }

    /// Checks that every label uses declared participants and messages.
    /// Throws IntegrityError on the first violation.
    void validate() const {
        auto declared = [&](const Participant& a) {
            return std::binary_search(participants.begin(), participants.end(), a);
        };
        auto known_msg = [&](const std::string& m) {
            return std::binary_search(messages.begin(), messages.end(), m);
        };
        for (const NamedPomset& np : pomsets) {
            for (const Event& e : np.pomset.events()) {
                if (!declared(e.label.sender))
                    throw IntegrityError("pomset '" + np.name + "': undeclared participant '" +
                                         e.label.sender.name + "'");
                if (!declared(e.label.receiver))
                    throw IntegrityError("pomset '" + np.name + "': undeclared participant '" +
                                         e.label.receiver.name + "'");
                if (!known_msg(e.label.message))
                    throw IntegrityError("pomset '" + np.name + "': undeclared message '" +
                                         e.label.message + "'");
            }
        }
    }
};

inline PomsetFamily make_family(std::vector<Participant> participants,
                                std::vector<std::string> messages,
                                std::vector<NamedPomset> pomsets) {
    PomsetFamily f;
    f.participants = std::move(participants);
    std::sort(f.participants.begin(), f.participants.end());
    f.participants.erase(std::unique(f.participants.begin(), f.participants.end()),
                         f.participants.end());
    f.messages = std::move(messages);
    std::sort(f.messages.begin(), f.messages.end());
    f.messages.erase(std::unique(f.messages.begin(), f.messages.end()), f.messages.end());
    f.pomsets = std::move(pomsets);
    f.validate();
    return f;
}

/// Builds a family from bare pomsets, declaring whatever participants
/// and messages occur in them.
inline PomsetFamily family_of(std::vector<NamedPomset> pomsets) {
    std::vector<Participant> ps;
    std::vector<std::string> ms;
    for (const NamedPomset& np : pomsets)
        for (const Event& e : np.pomset.events()) {
            ps.push_back(e.label.sender);
            ps.push_back(e.label.receiver);
            ms.push_back(e.label.message);
        }
    return make_family(std::move(ps), std::move(ms), std::move(pomsets));
}

} // namespace pomcheck
