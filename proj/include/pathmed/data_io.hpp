#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pathmed/errors.hpp"

namespace pathmed {

enum class MissingPolicy { listwise_delete };

struct CsvOptions {
    char delimiter = ',';
    std::vector<std::string> missing_markers{"", "NA", "NaN"};
    MissingPolicy policy = MissingPolicy::listwise_delete;
};

/// Fully numeric table. Rows containing missing markers have already been
/// removed; every cell is finite.
struct Dataset {
    std::vector<std::string> columns;
    Eigen::MatrixXd values;  // n x p
    long rows_dropped = 0;

    Eigen::Index n() const { return values.rows(); }
    Eigen::Index p() const { return values.cols(); }

    int column_index(const std::string& name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
    }

    Eigen::VectorXd column(const std::string& name) const {
        const int i = column_index(name);
        if (i < 0) throw missing_column(name);
        return values.col(i);
    }
};

/// Sample means and the unbiased (n-1 divisor) covariance matrix.
struct SampleMoments {
    std::vector<std::string> columns;
    Eigen::VectorXd means;
    Eigen::MatrixXd cov;
    Eigen::Index n = 0;
    std::vector<std::string> degenerate;  // zero-variance columns
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char delim) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t end = line.find(delim, start);
        if (end == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, end - start));
        start = end + 1;
    }
}

inline bool parse_double(std::string_view token, double& out) {
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    if (token.empty()) return false;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

}  // namespace detail

/// Parse CSV text already in memory. `origin` names the source for messages.
inline Dataset parse_csv(std::string_view text, const CsvOptions& options = {},
                         const std::string& origin = "<memory>") {
    // strip a UTF-8 BOM if present
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        lines.push_back(text.substr(pos, eol - pos));
        if (eol == text.size()) break;
        pos = eol + 1;
    }
    while (!lines.empty() && detail::trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw header_error(origin + ": missing header row");

    Dataset data;
    for (const auto field : detail::split_fields(lines.front(), options.delimiter)) {
        const std::string name{detail::trim(field)};
        if (name.empty()) throw header_error(origin + ": empty column name in header");
        if (std::find(data.columns.begin(), data.columns.end(), name) != data.columns.end())
            throw header_error(origin + ": duplicate column name '" + name + "'");
        data.columns.push_back(name);
    }
    const auto p = static_cast<Eigen::Index>(data.columns.size());

    std::vector<double> cells;
    long kept = 0;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const long row = static_cast<long>(li);  // 1-based data row
        const std::string_view line = lines[li];
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_fields(line, options.delimiter);
        if (static_cast<Eigen::Index>(fields.size()) != p)
            throw csv_parse_error(row, static_cast<long>(fields.size()), std::string(line),
                                  "expected " + std::to_string(p) + " fields, found " +
                                      std::to_string(fields.size()));

        bool missing = false;
        for (const auto f : fields) {
            const std::string cell{detail::trim(f)};
            if (std::find(options.missing_markers.begin(), options.missing_markers.end(),
                          cell) != options.missing_markers.end()) {
                missing = true;
                break;
            }
        }
        if (missing) {  // listwise deletion
            ++data.rows_dropped;
            continue;
        }

        for (Eigen::Index c = 0; c < p; ++c) {
            const std::string token{detail::trim(fields[static_cast<std::size_t>(c)])};
            double v = 0.0;
            if (!detail::parse_double(token, v))
                throw csv_parse_error(row, c + 1, token, "not a number");
            if (!std::isfinite(v))
                throw csv_parse_error(row, c + 1, token, "non-finite value");
            cells.push_back(v);
        }
        ++kept;
    }

    if (kept < 3)
        throw too_few_rows(origin + ": " + std::to_string(kept) +
                           " usable rows, need at least 3");

    data.values.resize(kept, p);
    for (long r = 0; r < kept; ++r)
        for (Eigen::Index c = 0; c < p; ++c)
            data.values(r, c) = cells[static_cast<std::size_t>(r * p + c)];
    return data;
}

inline Dataset load_csv(const std::string& path, const CsvOptions& options = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw io_error("read failure on '" + path + "'");
    return parse_csv(buf.str(), options, path);
}

/// Two-pass means and unbiased covariance. With `strict`, a zero-variance
/// column is an error instead of just being flagged.
inline SampleMoments compute_moments(const Dataset& data, bool strict = false) {
    const auto n = data.n();
    const auto p = data.p();
    if (n < 3) throw too_few_rows("need at least 3 rows to compute moments");

    SampleMoments m;
    m.columns = data.columns;
    m.n = n;
    m.means = data.values.colwise().mean();
    const Eigen::MatrixXd centered = data.values.rowwise() - m.means.transpose();
    m.cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
    m.cov = ((m.cov + m.cov.transpose()) * 0.5).eval();

    for (Eigen::Index j = 0; j < p; ++j) {
        if (m.cov(j, j) == 0.0) {
            if (strict) throw degenerate_column(data.columns[static_cast<std::size_t>(j)]);
            m.degenerate.push_back(data.columns[static_cast<std::size_t>(j)]);
        }
    }

    // guard: two-pass covariance can only miss PSD by rounding
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.cov,
                                                            Eigen::EigenvaluesOnly);
    const double max_eig = es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, max_eig))
        throw analysis_error("sample covariance is not positive semidefinite");
    return m;
}

/// Subset and reorder moments to the given variable list.
inline SampleMoments restrict_moments(const SampleMoments& m,
                                      const std::vector<std::string>& vars) {
    SampleMoments out;
    out.columns = vars;
    out.n = m.n;
    const auto q = static_cast<Eigen::Index>(vars.size());
    std::vector<Eigen::Index> idx;
    idx.reserve(vars.size());
    for (const auto& v : vars) {
        const auto it = std::find(m.columns.begin(), m.columns.end(), v);
        if (it == m.columns.end()) throw missing_column(v);
        idx.push_back(it - m.columns.begin());
    }
    out.means.resize(q);
    out.cov.resize(q, q);
    for (Eigen::Index i = 0; i < q; ++i) {
        out.means(i) = m.means(idx[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < q; ++j)
            out.cov(i, j) = m.cov(idx[static_cast<std::size_t>(i)],
                                  idx[static_cast<std::size_t>(j)]);
    }
    for (const auto& d : m.degenerate)
        if (std::find(vars.begin(), vars.end(), d) != vars.end())
            out.degenerate.push_back(d);
    return out;
}

}  // namespace pathmed
