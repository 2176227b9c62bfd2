#pragma once

#include <cstdint>
#include <string>

namespace hvacreg {

// ISO-8601 UTC timestamp ("2026-01-01T00:15:00Z") from Unix epoch seconds.
std::string iso8601_utc(std::int64_t epoch_s);

// Inverse of iso8601_utc; throws std::runtime_error on malformed input.
std::int64_t parse_iso8601_utc(const std::string& s);

} // namespace hvacreg
