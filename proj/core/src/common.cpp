// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkstack/common.hpp"

#include <string>

namespace walkstack {

Side side_from_string(std::string_view s) {
  if (s == "left" || s == "Left" || s == "l") return Side::Left;
  if (s == "right" || s == "Right" || s == "r") return Side::Right;
  throw ConfigError("unknown foot side '" + std::string(s) + "'");
}

}  // namespace walkstack
