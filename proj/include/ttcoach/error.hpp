#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ttcoach {

enum class Errc {
    DegenerateQuaternion,
    EmptySequence,
    InvalidParameter,
    DegeneratePose,
    DegenerateBone,
    InvalidHeight,
    JointSetMismatch,
    WindowUnderfilled,
    EmptyStream,
    NonMonotonicTimestamps,
    IndexOutOfRange,
    InvertedRange,
    NotFound,
    CorruptFile,
    StrokeNotFound,
    SessionNotFound,
    InvalidSpeed,
    SchemaError,
    TopologyMismatch,
};

std::string_view to_string(Errc code) noexcept;

// Every domain failure in the library is reported through this type; the
// code is what callers dispatch on (HTTP status, CLI exit code).
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace ttcoach
