#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace demgrade {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PathError : Error {
    using Error::Error;
};

struct DecodeError : Error {
    explicit DecodeError(const std::string& message, std::string file = {})
        : Error(message), path(std::move(file)) {}
    std::string path;  // offending file; empty when decoding a raw byte buffer
};

struct EmptyDatasetError : Error {
    using Error::Error;
};

struct ArgumentError : Error {
    using Error::Error;
};

struct StratifyError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct MarkerError : Error {
    using Error::Error;
};

struct VersionError : Error {
    using Error::Error;
};

struct CorruptModelError : Error {
    using Error::Error;
};

// Wraps another error with the pipeline phase it escaped from, so the CLI
// can print a phase-tagged diagnostic.
struct PhaseError : Error {
    PhaseError(std::string phase_name, const std::string& message)
        : Error(message), phase(std::move(phase_name)) {}
    std::string phase;
};

}  // namespace demgrade
