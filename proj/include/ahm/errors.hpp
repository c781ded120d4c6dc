#pragma once

#include <stdexcept>
#include <string>

namespace ahm {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user input: malformed config, invalid grid, roots outside the safe region.
class ConfigError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual)
        : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class EvolutionError : public Error {
public:
    EvolutionError(const std::string& what, int node, double t)
        : Error(what + " at node " + std::to_string(node) + ", t=" + std::to_string(t)),
          node_(node), t_(t) {}
    int node() const { return node_; }
    double time() const { return t_; }

private:
    int node_;
    double t_;
};

class ContinuationError : public Error {
public:
    using Error::Error;
};

// Raised by --check runs when a verified property does not hold.
class InvariantError : public Error {
public:
    using Error::Error;
};

}  // namespace ahm
