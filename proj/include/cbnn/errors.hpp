#pragma once

#include <stdexcept>
#include <string>

namespace cbnn {

/// Bad configuration, CLI arguments, or unreadable/ill-formed files. Exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parties disagree about the protocol step (tag mismatch, replica mismatch). Exit code 3.
struct DesyncError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Channel-level failure: timeout, connection loss, short read. Exit code 4.
struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Value outside the representable or provable range (encode overflow, MSB budget).
struct RangeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace cbnn
