#pragma once

#include <stdexcept>
#include <string>

namespace vekit {

// Root of every vekit exception.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace vekit
