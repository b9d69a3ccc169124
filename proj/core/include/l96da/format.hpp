#pragma once

#include <string>

namespace l96da {

/// Shortest decimal text that round-trips to the same double.
std::string format_number(double value);

}  // namespace l96da
