#pragma once

#define ETAQ_VERSION_STRING "0.1.0"

namespace etaq {
inline constexpr const char* version = ETAQ_VERSION_STRING;
inline constexpr int report_schema_version = 1;
} // namespace etaq
