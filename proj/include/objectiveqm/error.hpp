// Copyright 2026 The objectiveqm Authors
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

#include <stdexcept>
#include <string>
#include <string_view>

namespace objectiveqm {

enum class ErrorKind {
    InvalidInput,
    DomainError,
    NotFound,
    NumericallyAmbiguous,
    NoThreshold,
    TooLarge,
    InfeasibleEvasion,
    InvariantViolation,
};

inline std::string_view error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput:
            return "InvalidInput";
        case ErrorKind::DomainError:
            return "DomainError";
        case ErrorKind::NotFound:
            return "NotFound";
        case ErrorKind::NumericallyAmbiguous:
            return "NumericallyAmbiguous";
        case ErrorKind::NoThreshold:
            return "NoThreshold";
        case ErrorKind::TooLarge:
            return "TooLarge";
        case ErrorKind::InfeasibleEvasion:
            return "InfeasibleEvasion";
        case ErrorKind::InvariantViolation:
            return "InvariantViolation";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above so the
/// CLI can map it onto an exit code.
class Error : public std::runtime_error {
   public:
    Error(ErrorKind kind, const std::string &message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {
    }

    ErrorKind kind() const noexcept {
        return kind_;
    }

   private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string &message) {
    if (!condition) {
        fail(kind, message);
    }
}

}  // namespace objectiveqm
