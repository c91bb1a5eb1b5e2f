#pragma once

#include <stdexcept>
#include <string>

namespace semran {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct UnknownVersion : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationSetMissing : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyTrace : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace semran
