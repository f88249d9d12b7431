#pragma once

#include <stdexcept>
#include <string>

namespace pomcheck {

/// Base class for all pomcheck errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// The supplied order edges induce a cycle.
class CycleError : public Error {
public:
    using Error::Error;
};

/// An order edge names an event id that does not exist.
class DanglingEdgeError : public Error {
public:
    using Error::Error;
};

/// Two events share the same id.
class DuplicateIdError : public Error {
public:
    using Error::Error;
};

/// The output/input matching of a pomset is not uniquely determined:
/// an output has two same-labelled input immediate successors, or an
/// input does not have exactly one output immediate predecessor.
class AmbiguousMatchError : public Error {
public:
    using Error::Error;
};

/// A local pomset handed to the inter-participant closure contains an
/// event whose subject is a different participant.
class SubjectMismatchError : public Error {
public:
    using Error::Error;
};

/// An enumeration grew past its configured resource bound.  Thrown
/// instead of silently truncating results.
class BoundExceededError : public Error {
public:
    using Error::Error;
};

/// A machine has no transition for the requested label.
class NoTransitionError : public Error {
public:
    using Error::Error;
};

/// An input step was attempted on a buffer with zero occurrences of
/// the message.
class EmptyBufferError : public Error {
public:
    using Error::Error;
};

/// Malformed specification file.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Specification file refers to an undeclared participant, message or
/// event id.
class IntegrityError : public Error {
public:
    using Error::Error;
};

/// Unknown graph export format.
class UnsupportedFormatError : public Error {
public:
    using Error::Error;
};

} // namespace pomcheck
