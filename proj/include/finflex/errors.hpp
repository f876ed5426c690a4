#pragma once

#include <stdexcept>

namespace finflex {

struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace finflex
