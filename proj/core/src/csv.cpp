#include "lesionsynth/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "lesionsynth/error.hpp"

namespace lesionsynth::csv {
namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell.push_back('"');
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cell.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(cell));
            cell.clear();
        } else {
            cell.push_back(ch);
        }
    }
    out.push_back(std::move(cell));
    return out;
}

std::string escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) {
        return cell;
    }
    std::string out = "\"";
    for (char ch : cell) {
        if (ch == '"') {
            out += "\"\"";
        } else {
            out.push_back(ch);
        }
    }
    return out + "\"";
}

}  // namespace

Table read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    Table t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        auto cells = split_line(line);
        if (first) {
            t.header = std::move(cells);
            first = false;
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw ConfigError(path.string() + ": row " + std::to_string(t.rows.size() + 1) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    if (first) {
        throw ConfigError(path.string() + ": missing header");
    }
    return t;
}

void write(const std::filesystem::path& path, const Table& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) {
                out << ',';
            }
            out << escape(cells[i]);
        }
        out << '\n';
    };
    emit(table.header);
    for (const auto& r : table.rows) {
        emit(r);
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

std::string format(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format(const std::optional<double>& v) {
    return v ? format(*v) : std::string{};
}

std::optional<double> parse_optional(const std::string& cell) {
    if (cell.empty() || cell == "NA" || cell == "nan" || cell == "null") {
        return std::nullopt;
    }
    double v = 0.0;
    const char* end = cell.data() + cell.size();
    const auto res = std::from_chars(cell.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw ConfigError("not a number: '" + cell + "'");
    }
    return v;
}

}  // namespace lesionsynth::csv
