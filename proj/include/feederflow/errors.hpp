#pragma once

#include <stdexcept>
#include <string>

namespace feederflow {

/// Base class for all feederflow errors.
class FeederError : public std::runtime_error {
public:
    explicit FeederError(const std::string& what) : std::runtime_error(what) {}
};

/// Voltage amplitude fell below the guard threshold; the ODE right-hand
/// side divides by v^2 and v^3 and is singular at v = 0.
class VoltageCollapse : public FeederError {
public:
    explicit VoltageCollapse(const std::string& what) : FeederError(what) {}
};

/// Newton iteration (including the load-continuation fallback) exhausted
/// its iteration budget without meeting the residual tolerance.
class NotConverged : public FeederError {
public:
    explicit NotConverged(const std::string& what) : FeederError(what) {}
};

/// Malformed scenario document (syntax level, carries a line number).
class ParseError : public FeederError {
public:
    ParseError(const std::string& what, int line)
        : FeederError("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// Structurally well-formed input that breaks a model invariant
/// (overlapping segments, g <= 0, support outside [0, L], ...).
class ValidationError : public FeederError {
public:
    explicit ValidationError(const std::string& what) : FeederError(what) {}
};

/// Closed-form solution pair incompatible with the boundary conditions.
class DomainError : public FeederError {
public:
    explicit DomainError(const std::string& what) : FeederError(what) {}
};

class UnknownPreset : public FeederError {
public:
    explicit UnknownPreset(const std::string& name)
        : FeederError("unknown preset: " + name) {}
};

}  // namespace feederflow
