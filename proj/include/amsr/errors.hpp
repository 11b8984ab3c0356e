#pragma once

#include <stdexcept>
#include <string>

namespace amsr {

// Malformed or unreadable input file (image, model spec, weight container).
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A structurally valid weight container that cannot be resolved against a
// model spec (missing tensor, shape mismatch).
class bind_error : public std::runtime_error {
public:
    explicit bind_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace amsr
