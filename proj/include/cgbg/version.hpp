// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace cgbg {
inline constexpr const char* kVersion = "0.1.0";
}
