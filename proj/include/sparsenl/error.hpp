#pragma once
#include <stdexcept>
#include <string>

namespace sparsenl {

// Base for every error raised by the library. The CLI maps these onto exit
// codes: InfeasibleCertificate -> 1, everything else -> 2.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Malformed input: bad dimensions, zero columns, out-of-range parameters.
class ValidationError : public Error
{
public:
    using Error::Error;
};

// A function was evaluated outside the set on which it is defined.
class DomainError : public Error
{
public:
    using Error::Error;
};

class IoError : public Error
{
public:
    using Error::Error;
};

// A bound certificate could not be produced because its feasibility
// conditions fail on the given instance.
class InfeasibleCertificate : public Error
{
public:
    using Error::Error;
};

} // namespace sparsenl
