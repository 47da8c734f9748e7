#ifndef IGO_ERRORS_HPP
#define IGO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace igo {

// Base of every error thrown by the library. The CLI maps subclasses onto
// process exit codes, so new failure kinds should derive from one of these.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class DegenerateNodes : public Error {
public:
    using Error::Error;
};

// Thrown when a derivative of the firing map is requested on a switching
// manifold, where the map is only one-sided differentiable.
class NondifferentiablePoint : public Error {
public:
    NondifferentiablePoint(const std::string& manifold, double x3)
        : Error("state x3=" + std::to_string(x3) + " lies on switching manifold " + manifold),
          manifold_(manifold) {}

    const std::string& manifold() const noexcept { return manifold_; }

private:
    std::string manifold_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class InfeasibleDesign : public Error {
public:
    using Error::Error;
};

class SynthesisInconsistency : public Error {
public:
    using Error::Error;
};

class NotACycle : public Error {
public:
    using Error::Error;
};

class CycleNotFound : public Error {
public:
    using Error::Error;
};

class LeastPeriodViolation : public Error {
public:
    LeastPeriodViolation(int requested, int least)
        : Error("requested period " + std::to_string(requested) +
                " but the solution has least period " + std::to_string(least)),
          requested_(requested), least_(least) {}

    int requested() const noexcept { return requested_; }
    int least_period() const noexcept { return least_; }

private:
    int requested_;
    int least_;
};

class InvalidBracket : public Error {
public:
    using Error::Error;
};

}  // namespace igo

#endif  // IGO_ERRORS_HPP
