#include "ttcoach/error.hpp"

namespace ttcoach {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::DegenerateQuaternion: return "DegenerateQuaternion";
    case Errc::EmptySequence: return "EmptySequence";
    case Errc::InvalidParameter: return "InvalidParameter";
    case Errc::DegeneratePose: return "DegeneratePose";
    case Errc::DegenerateBone: return "DegenerateBone";
    case Errc::InvalidHeight: return "InvalidHeight";
    case Errc::JointSetMismatch: return "JointSetMismatch";
    case Errc::WindowUnderfilled: return "WindowUnderfilled";
    case Errc::EmptyStream: return "EmptyStream";
    case Errc::NonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::InvertedRange: return "InvertedRange";
    case Errc::NotFound: return "NotFound";
    case Errc::CorruptFile: return "CorruptFile";
    case Errc::StrokeNotFound: return "StrokeNotFound";
    case Errc::SessionNotFound: return "SessionNotFound";
    case Errc::InvalidSpeed: return "InvalidSpeed";
    case Errc::SchemaError: return "SchemaError";
    case Errc::TopologyMismatch: return "TopologyMismatch";
    }
    return "Unknown";
}

}  // namespace ttcoach
