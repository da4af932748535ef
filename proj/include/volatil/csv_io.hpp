#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace volatil {

// A value series read from disk, optionally dated.
struct SeriesInput {
    std::vector<double> values;
    std::vector<std::string> dates;
};

// Accepted layouts: a headered two-column file "date,value", or a single
// headerless numeric column. Malformed rows raise validation_error with
// the line number.
SeriesInput read_series_csv(const std::filesystem::path& path);

// Headered numeric table: first column is the response, the rest are
// predictors (an intercept is NOT included in the file).
struct TableInput {
    std::vector<std::string> columns;
    Eigen::MatrixXd values;
};
TableInput read_table_csv(const std::filesystem::path& path);

// Lossless formatting for doubles (17 significant digits).
std::string fmt17(double v);

// CSV writer that lands atomically: rows accumulate in a temporary file
// that is renamed over the target on commit. Nothing is left behind if
// commit is never called.
class AtomicFileWriter {
public:
    explicit AtomicFileWriter(std::filesystem::path target);
    ~AtomicFileWriter();
    AtomicFileWriter(const AtomicFileWriter&) = delete;
    AtomicFileWriter& operator=(const AtomicFileWriter&) = delete;

    void write(const std::string& chunk);
    void write_row(const std::vector<std::string>& fields);
    void commit();

private:
    std::filesystem::path target_;
    std::filesystem::path tmp_;
    std::string buffer_;
    bool committed_ = false;
};

void write_text_atomic(const std::filesystem::path& target, const std::string& content);

}  // namespace volatil
