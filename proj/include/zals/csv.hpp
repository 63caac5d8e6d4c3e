#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace zals {

struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Strict CSV: comma separated, mandatory header row, '.' decimal point, no
// quoting. Cells are kept as text; numeric parsing happens per referenced
// column so unrelated columns may hold anything.
class CsvTable {
  public:
    static CsvTable read_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw CsvError("cannot open '" + path + "'");
        return read_stream(in, path);
    }

    static CsvTable read_stream(std::istream& in,
                                const std::string& name = "<stream>") {
        CsvTable t;
        t.name_ = name;
        std::string line;
        if (!std::getline(in, line))
            throw CsvError(name + ": missing header row");
        strip_cr(line);
        t.header_ = split(line);
        if (t.header_.empty() || t.header_[0].empty())
            throw CsvError(name + ": empty header");
        for (std::size_t c = 0; c < t.header_.size(); ++c)
            t.index_[t.header_[c]] = c;
        if (t.index_.size() != t.header_.size())
            throw CsvError(name + ": duplicate column names in header");

        std::size_t row = 0;
        while (std::getline(in, line)) {
            strip_cr(line);
            if (line.empty()) continue;
            ++row;
            std::vector<std::string> cells = split(line);
            if (cells.size() != t.header_.size())
                throw CsvError(name + ": row " + std::to_string(row) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(t.header_.size()));
            t.cells_.push_back(std::move(cells));
        }
        return t;
    }

    const std::vector<std::string>& header() const { return header_; }
    std::size_t n_rows() const { return cells_.size(); }

    bool has_column(const std::string& name) const {
        return index_.count(name) > 0;
    }

    // Parses the named column as doubles; failures name the data row.
    std::vector<double> numeric_column(const std::string& name) const {
        const auto it = index_.find(name);
        if (it == index_.end()) {
            std::ostringstream msg;
            msg << name_ << ": no column named '" << name << "' (have:";
            for (const auto& h : header_) msg << " " << h;
            msg << ")";
            throw CsvError(msg.str());
        }
        const std::size_t c = it->second;
        std::vector<double> out(cells_.size());
        for (std::size_t r = 0; r < cells_.size(); ++r) {
            const std::string& cell = cells_[r][c];
            const char* first = cell.data();
            const char* last = cell.data() + cell.size();
            double value = 0.0;
            const auto res = std::from_chars(first, last, value);
            if (res.ec != std::errc() || res.ptr != last)
                throw CsvError(name_ + ": column '" + name + "', row " +
                               std::to_string(r + 1) + ": cannot parse '" +
                               cell + "' as a number");
            out[r] = value;
        }
        return out;
    }

  private:
    static void strip_cr(std::string& s) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
    }

    static std::vector<std::string> split(const std::string& line) {
        std::vector<std::string> out;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                out.push_back(line.substr(start));
                break;
            }
            out.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        return out;
    }

    std::string name_;
    std::vector<std::string> header_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::vector<std::string>> cells_;
};

// Numeric CSV writer with shortest-round-trip formatting, for plot-ready
// outputs that must be byte-stable across runs.
class CsvWriter {
  public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void header(const std::vector<std::string>& names) { write_strings(names); }

    void row(const std::vector<std::string>& cells) { write_strings(cells); }

    static std::string format(double v) {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof(buf), v);
        return std::string(buf, res.ptr);
    }

  private:
    void write_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::ostream& out_;
};

}  // namespace zals
