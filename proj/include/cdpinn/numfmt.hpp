#pragma once

#include <ostream>
#include <span>
#include <string>

namespace cdpinn {

// Shortest-free, locale-independent rendering with 17 significant digits.
std::string fmt17(double value);

// Writes `t,v0,v1,...` followed by a newline.
void write_csv_row(std::ostream& out, std::span<const double> values);

}  // namespace cdpinn
