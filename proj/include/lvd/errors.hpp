// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace lvd {

// Base class for every error raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- dataset ingestion ---
struct MissingFile : Error { using Error::Error; };
struct SchemaViolation : Error { using Error::Error; };
struct DanglingReference : Error { using Error::Error; };
struct UnknownCategory : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };

// --- prompting ---
struct TemplateError : Error { using Error::Error; };
struct NonVisualCategory : Error { using Error::Error; };
struct PreconditionViolation : Error { using Error::Error; };

// --- model backend ---
struct TransportError : Error { using Error::Error; };     // transient; retried
struct ProtocolError : Error { using Error::Error; };      // non-transient
struct CapabilityError : Error { using Error::Error; };    // non-transient
struct EmptyReply : Error { using Error::Error; };
struct NoSegmentFound : Error { using Error::Error; };

// --- metrics ---
struct EmptyCounts : Error { using Error::Error; };
struct NoOverlapPairs : Error { using Error::Error; };
struct EmptyDistribution : Error { using Error::Error; };
struct MissingInput : Error { using Error::Error; };

// --- configuration / CLI ---
struct ConfigError : Error { using Error::Error; };

} // namespace lvd
