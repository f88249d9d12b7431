#pragma once

#include <compare>
#include <stdexcept>
#include <string>

namespace pomcheck {

/// A process identity.  Names are plain identifiers, unique within one
/// specification universe.
struct Participant {
    std::string name;

    auto operator<=>(const Participant&) const = default;
};

enum class Direction { output, input };

/// One communication action: a send (`A>B!m`) or a receive (`A>B?m`)
/// on the channel from `sender` to `receiver`.  Channels never connect
/// a participant to itself.
struct CommLabel {
    Participant sender;
    Participant receiver;
    Direction direction = Direction::output;
    std::string message;

    auto operator<=>(const CommLabel&) const = default;

    bool is_output() const { return direction == Direction::output; }
    bool is_input() const { return direction == Direction::input; }

    /// The acting participant: the sender of an output, the receiver
    /// of an input.
    const Participant& subject() const {
        return is_output() ? sender : receiver;
    }

    /// The matching label on the other end of the channel.
    CommLabel counterpart() const {
        CommLabel other = *this;
        other.direction = is_output() ? Direction::input : Direction::output;
        return other;
    }
};

inline CommLabel send(std::string from, std::string to, std::string msg) {
    if (from == to) throw std::invalid_argument("channel (" + from + "," + to + ") is a self-loop");
    return CommLabel{Participant{std::move(from)}, Participant{std::move(to)},
                     Direction::output, std::move(msg)};
}

inline CommLabel receive(std::string from, std::string to, std::string msg) {
    if (from == to) throw std::invalid_argument("channel (" + from + "," + to + ") is a self-loop");
    return CommLabel{Participant{std::move(from)}, Participant{std::move(to)},
                     Direction::input, std::move(msg)};
}

inline std::string to_string(const CommLabel& l) {
    return l.sender.name + ">" + l.receiver.name +
           (l.is_output() ? "!" : "?") + l.message;
}

} // namespace pomcheck
