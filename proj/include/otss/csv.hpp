#pragma once

#include <optional>
#include <string>
#include <vector>

namespace otss::csv {

// RFC-4180 quoting: fields containing commas, quotes, or newlines are
// wrapped and embedded quotes doubled
std::string quote(const std::string& field);

std::string field(double v); // shortest round-trip representation
std::string field(int v);
std::string field(long long v);
std::string field(const std::optional<double>& v); // empty cell when absent

std::string join(const std::vector<std::string>& cells);

} // namespace otss::csv
