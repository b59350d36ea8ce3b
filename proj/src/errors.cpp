// SPDX-License-Identifier: Apache-2.0
#include "dancecls/errors.hpp"

namespace dancecls {

ParseError::ParseError(const std::string& what, std::size_t line)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

}  // namespace dancecls
