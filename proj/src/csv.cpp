#include "lowrank/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace lowrank {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

double parse_number(std::string_view token, std::size_t line, std::size_t col) {
    const std::string_view t = trim(token);
    auto fail = [&] {
        throw CsvError("line " + std::to_string(line) + ", column " + std::to_string(col) +
                       ": not a number: '" + std::string(t) + "'");
    };
    if (t.empty()) fail();
    std::string_view body = t;
    if (body.front() == '+') body.remove_prefix(1);  // from_chars rejects a leading '+'
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
    if (ec != std::errc{} || ptr != body.data() + body.size()) fail();
    return value;
}

}  // namespace

Eigen::MatrixXd read_matrix_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    bool allow_header = true;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view stripped = trim(line);
        if (stripped.empty()) continue;
        if (allow_header && stripped.front() == '#') {
            allow_header = false;
            continue;
        }
        allow_header = false;
        std::vector<double> row;
        std::size_t start = 0;
        std::size_t col = 1;
        const std::string text(stripped);
        while (true) {
            const std::size_t comma = text.find(',', start);
            const std::string_view token =
                std::string_view(text).substr(start, comma == std::string::npos
                                                         ? std::string::npos
                                                         : comma - start);
            row.push_back(parse_number(token, lineno, col));
            if (comma == std::string::npos) break;
            start = comma + 1;
            ++col;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw CsvError("line " + std::to_string(lineno) + ": expected " +
                           std::to_string(rows.front().size()) + " columns, got " +
                           std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw CsvError("no data rows");
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return m;
}

Eigen::MatrixXd read_matrix_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw CsvError("cannot open '" + path + "'");
    }
    return read_matrix_csv(in);
}

}  // namespace lowrank
