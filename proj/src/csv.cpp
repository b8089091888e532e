#include "otss/csv.hpp"

#include "otss/serialize.hpp"

#include <sstream>

namespace otss::csv {

std::string quote(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string field(double v) { return io::format_shortest(v); }

std::string field(int v) { return std::to_string(v); }

std::string field(long long v) { return std::to_string(v); }

std::string field(const std::optional<double>& v) {
    return v ? io::format_shortest(*v) : std::string();
}

std::string join(const std::vector<std::string>& cells) {
    std::ostringstream os;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << quote(cells[i]);
    }
    os << '\n';
    return os.str();
}

} // namespace otss::csv
