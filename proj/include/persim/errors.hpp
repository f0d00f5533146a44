// Error taxonomy shared by all persim components.

#pragma once

#include <stdexcept>
#include <string>

namespace persim {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// hilbert
class ZeroNorm : public Error {
public:
    using Error::Error;
};
class DimensionMismatch : public Error {
public:
    using Error::Error;
};
class UnknownRegister : public Error {
public:
    using Error::Error;
};
class NonUnitary : public Error {
public:
    using Error::Error;
};
class BadDimension : public Error {
public:
    using Error::Error;
};
class UnknownLabel : public Error {
public:
    using Error::Error;
};
class DuplicateRegister : public Error {
public:
    using Error::Error;
};
class InvalidProjectorSet : public Error {
public:
    using Error::Error;
};
// Also raised when a register layout or an enumeration exceeds the
// desk-scale bound of 2^20.
class StateTooLarge : public Error {
public:
    using Error::Error;
};

// branching / observers
class ZeroWeightBranch : public Error {
public:
    using Error::Error;
};
class DuplicateAgent : public Error {
public:
    using Error::Error;
};
class UnknownAgent : public Error {
public:
    using Error::Error;
};
class ImmutableMemory : public Error {
public:
    using Error::Error;
};
class UnknownEvent : public Error {
public:
    using Error::Error;
};
// Requesting a joint record of two observers' outcomes. There is no API
// that answers such a request; every path that could raises this.
class ForbiddenComparison : public Error {
public:
    using Error::Error;
};

// oracle
class OutcomeSpaceMismatch : public Error {
public:
    using Error::Error;
};

// scenarios / cli
class UnknownScenario : public Error {
public:
    using Error::Error;
};
class BadParams : public Error {
public:
    using Error::Error;
};
class WrongScenario : public Error {
public:
    using Error::Error;
};
class PreconditionNotMet : public Error {
public:
    using Error::Error;
};
class AssertionFailed : public Error {
public:
    using Error::Error;
};

} // namespace persim
