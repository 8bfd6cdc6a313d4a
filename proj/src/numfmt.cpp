#include "cdpinn/numfmt.hpp"

#include <array>
#include <charconv>

namespace cdpinn {

std::string fmt17(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

void write_csv_row(std::ostream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ',';
    out << fmt17(values[i]);
  }
  out << '\n';
}

}  // namespace cdpinn
