#include "volatil/csv_io.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "volatil/errors.hpp"

namespace volatil {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& field, std::size_t lineno,
                    const std::filesystem::path& path) {
    const std::string t = trim(field);
    if (t.empty() || t == "NA" || t == "NaN" || t == "nan") {
        std::ostringstream msg;
        msg << path.string() << ": missing value at line " << lineno;
        throw validation_error(msg.str());
    }
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) {
        std::ostringstream msg;
        msg << path.string() << ": malformed numeric field '" << t << "' at line "
            << lineno;
        throw validation_error(msg.str());
    }
    return v;
}

bool looks_numeric(const std::string& s) {
    char* end = nullptr;
    const std::string t = trim(s);
    if (t.empty()) return false;
    std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

}  // namespace

SeriesInput read_series_csv(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    SeriesInput out;
    if (lines.empty()) throw validation_error(path.string() + ": empty file");

    const auto header = split_csv(lines[0]);
    const bool dated = header.size() == 2 && !looks_numeric(header[0]) &&
                       !looks_numeric(header[1]);
    if (dated) {
        for (std::size_t i = 1; i < lines.size(); ++i) {
            if (trim(lines[i]).empty()) continue;
            const auto fields = split_csv(lines[i]);
            if (fields.size() != 2) {
                std::ostringstream msg;
                msg << path.string() << ": expected 2 fields at line " << i + 1;
                throw validation_error(msg.str());
            }
            out.dates.push_back(fields[0]);
            out.values.push_back(parse_double(fields[1], i + 1, path));
        }
    } else {
        for (std::size_t i = 0; i < lines.size(); ++i) {
            if (trim(lines[i]).empty()) continue;
            const auto fields = split_csv(lines[i]);
            if (fields.size() != 1) {
                std::ostringstream msg;
                msg << path.string()
                    << ": expected a single numeric column (or a 'date,value' header) "
                       "at line "
                    << i + 1;
                throw validation_error(msg.str());
            }
            out.values.push_back(parse_double(fields[0], i + 1, path));
        }
    }
    if (out.values.empty()) throw validation_error(path.string() + ": no data rows");
    return out;
}

TableInput read_table_csv(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    if (lines.size() < 2)
        throw validation_error(path.string() + ": need a header and at least one row");
    TableInput out;
    out.columns = split_csv(lines[0]);
    if (out.columns.empty()) throw validation_error(path.string() + ": empty header");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto fields = split_csv(lines[i]);
        if (fields.size() != out.columns.size()) {
            std::ostringstream msg;
            msg << path.string() << ": expected " << out.columns.size()
                << " fields at line " << i + 1;
            throw validation_error(msg.str());
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(parse_double(f, i + 1, path));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw validation_error(path.string() + ": no data rows");
    out.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(out.columns.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i][j];
    return out;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

AtomicFileWriter::AtomicFileWriter(std::filesystem::path target)
    : target_(std::move(target)) {
    tmp_ = target_;
    tmp_ += ".tmp";
}

AtomicFileWriter::~AtomicFileWriter() {
    if (!committed_) {
        std::error_code ec;
        std::filesystem::remove(tmp_, ec);
    }
}

void AtomicFileWriter::write(const std::string& chunk) { buffer_ += chunk; }

void AtomicFileWriter::write_row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) buffer_ += ',';
        buffer_ += fields[i];
    }
    buffer_ += '\n';
}

void AtomicFileWriter::commit() {
    {
        std::ofstream out(tmp_, std::ios::trunc);
        if (!out) throw internal_error("cannot write " + tmp_.string());
        out << buffer_;
        if (!out.good()) throw internal_error("short write to " + tmp_.string());
    }
    std::filesystem::rename(tmp_, target_);
    committed_ = true;
}

void write_text_atomic(const std::filesystem::path& target, const std::string& content) {
    AtomicFileWriter w(target);
    w.write(content);
    w.commit();
}

}  // namespace volatil
