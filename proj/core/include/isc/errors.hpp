#pragma once

#include <stdexcept>
#include <string>

namespace isc {

// Error taxonomy shared by the library and the CLI.
// The CLI maps these onto exit codes: usage/argument -> 1,
// data/format/validation -> 2, IO -> 3.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad caller-supplied value (counts, dimensions, flags).
struct ArgumentError : Error {
    using Error::Error;
};

// Malformed input bytes (PPM header, ISCD/ISCM/ISCP files, CSV).
struct FormatError : Error {
    using Error::Error;
};

// Semantically invalid data (duplicate keys, empty ground truth).
struct ValidationError : Error {
    using Error::Error;
};

// An id could not be resolved against the available data.
struct LookupError : Error {
    using Error::Error;
};

// Filesystem failures.
struct IoError : Error {
    using Error::Error;
};

}  // namespace isc
