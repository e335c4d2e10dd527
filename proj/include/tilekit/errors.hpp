#pragma once

#include <stdexcept>
#include <string>

namespace tilekit {

// Error taxonomy shared by the library and the CLI.  The CLI maps each class
// to a stable process exit code (see tools/tilekit.cpp): configuration and
// usage problems -> 2, window/margin problems -> 3, violated mathematical
// hypotheses -> 4, everything else -> 5.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& m) : std::runtime_error(m) {}
};

// Raised when a computation would need data outside the finite window
// (empty admissible translate set, insufficient margin, ...).
struct MarginError : std::runtime_error {
    explicit MarginError(const std::string& m) : std::runtime_error(m) {}
};

// Raised when an input fails a mathematical hypothesis an algorithm needs
// (e.g. subexponential growth, per-tile advantage).
struct HypothesisError : std::runtime_error {
    explicit HypothesisError(const std::string& m) : std::runtime_error(m) {}
};

// Budget exhaustion (set enumeration blow-up, chain enumeration caps, ...).
struct ResourceError : std::runtime_error {
    explicit ResourceError(const std::string& m) : std::runtime_error(m) {}
};

// Inconsistent internal state; indicates a bug, never a bad input.
struct InternalError : std::logic_error {
    explicit InternalError(const std::string& m) : std::logic_error(m) {}
};

// Corrupt or ambiguous serialized/encoded data.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace tilekit
