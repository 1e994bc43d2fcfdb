#pragma once

#include <stdexcept>
#include <string>

namespace qcoop {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input: dimensions, ranges, non-finite entries, bad graph edges.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Numerical kernel failure (non-convergence, non-square input, marginal spectra).
class NumericsError : public Error {
public:
    using Error::Error;
};

// Encoder/decoder protocol violation (gaps, reordering, truncated frames).
class ProtocolError : public Error {
public:
    using Error::Error;
};

// An operation was asked to run outside its precondition, e.g. a witness
// for an assumption that actually holds.
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Synthesis could not produce a feasible protocol.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

}  // namespace qcoop
