// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

namespace lvd {

/// SHA-256 of the given bytes, lowercase hex.
std::string sha256_hex(std::string_view bytes);

/// Standard base64 (RFC 4648, with padding).
std::string base64_encode(std::string_view bytes);

} // namespace lvd
