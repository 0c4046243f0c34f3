#pragma once

#include <stdexcept>
#include <string>

namespace wgi {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A state outside the region where the averaged model is defined (v_c below the division guard).
class NonPhysicalState : public Error {
public:
    using Error::Error;
};

/// Non-positive settling time or other unrealizable design target.
class InvalidTarget : public Error {
public:
    using Error::Error;
};

class ObserverDisabled : public Error {
public:
    using Error::Error;
};

class InvalidReference : public Error {
public:
    using Error::Error;
};

/// |v_p| estimate too small to divide by; the inverter has lost synchronization.
class DivisionGuard : public Error {
public:
    using Error::Error;
};

/// The steady-state PCC relation has no real solution (voltage collapse).
class NoOperatingPoint : public Error {
public:
    using Error::Error;
};

class SequenceError : public Error {
public:
    using Error::Error;
};

/// Scenario parse/validation failure, anchored to a line of the source text when known.
class ScenarioError : public Error {
public:
    ScenarioError(const std::string& msg, int line = -1)
        : Error(line >= 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Module error raised during a simulation run, tagged with the simulated time.
class SimulationError : public Error {
public:
    SimulationError(double t, const std::string& msg) : Error("t=" + std::to_string(t) + " s: " + msg), time_(t) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

}  // namespace wgi
