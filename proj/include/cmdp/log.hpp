// Copyright 2026 The cmdp-lsvi Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <iostream>
#include <string_view>

namespace cmdp {

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

inline std::atomic<LogLevel>& log_threshold() {
    static std::atomic<LogLevel> level{LogLevel::warn};
    return level;
}

inline void log(LogLevel level, std::string_view message) {
    if (level < log_threshold().load()) return;
    static constexpr std::string_view names[] = {"debug", "info", "warn", "error"};
    std::cerr << '[' << names[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace cmdp
