#pragma once

// Case configuration files: INI-style sections ([system], [sc], [sc.avr],
// [vsc], [grid], [transformer], [load], [fault], [scenario],
// [scenario.load_step], ...) whose keys join the section name into the
// dotted parameter keys. Keys may also be written fully qualified before any
// section. Missing keys keep their defaults.

#include "gridform/parameters.hpp"

#include <string>
#include <string_view>

namespace gridform {

/// Throws ConfigError with the line number for syntax errors and the key for
/// unknown keys or invalid values.
CaseParams parse_config(std::string_view text, CaseParams base = {});

CaseParams load_config(const std::string& path, CaseParams base = {});

}  // namespace gridform
