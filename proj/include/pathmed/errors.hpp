#pragma once

#include <stdexcept>
#include <string>

namespace pathmed {

// Base of all library errors. The three subfamilies map onto the CLI's
// exit codes: usage_error -> 2, input_error -> 3, analysis_error -> 1.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

class usage_error : public error {
public:
    explicit usage_error(const std::string& what) : error(what) {}
};

class input_error : public error {
public:
    explicit input_error(const std::string& what) : error(what) {}
};

class analysis_error : public error {
public:
    explicit analysis_error(const std::string& what) : error(what) {}
};

// --- model language ---

class syntax_error : public input_error {
public:
    syntax_error(int line, int column, const std::string& what)
        : input_error("syntax error at line " + std::to_string(line) + ", column " +
                      std::to_string(column) + ": " + what),
          line(line),
          column(column) {}
    int line;
    int column;
};

class duplicate_path : public input_error {
public:
    explicit duplicate_path(const std::string& what) : input_error(what) {}
};

class cycle_error : public input_error {
public:
    explicit cycle_error(const std::string& cycle)
        : input_error("model is not recursive, found cycle: " + cycle), cycle(cycle) {}
    std::string cycle;
};

class covariance_on_endogenous : public input_error {
public:
    explicit covariance_on_endogenous(const std::string& what) : input_error(what) {}
};

class empty_model : public input_error {
public:
    empty_model() : input_error("model contains no statements") {}
};

class missing_column : public input_error {
public:
    explicit missing_column(const std::string& name)
        : input_error("column '" + name + "' not found in the dataset"), name(name) {}
    std::string name;
};

// --- data loading ---

class io_error : public input_error {
public:
    explicit io_error(const std::string& what) : input_error(what) {}
};

class header_error : public input_error {
public:
    explicit header_error(const std::string& what) : input_error(what) {}
};

class csv_parse_error : public input_error {
public:
    csv_parse_error(long row, long column, const std::string& token, const std::string& what)
        : input_error("cannot parse data row " + std::to_string(row) + ", column " +
                      std::to_string(column) + " ('" + token + "'): " + what),
          row(row),
          column(column),
          token(token) {}
    long row;
    long column;
    std::string token;
};

class too_few_rows : public input_error {
public:
    explicit too_few_rows(const std::string& what) : input_error(what) {}
};

class degenerate_column : public analysis_error {
public:
    explicit degenerate_column(const std::string& name)
        : analysis_error("column '" + name + "' has zero variance"), name(name) {}
    std::string name;
};

// --- estimation ---

class rank_deficient : public analysis_error {
public:
    explicit rank_deficient(const std::string& what) : analysis_error(what) {}
};

class zero_se : public analysis_error {
public:
    zero_se() : analysis_error("standard error of the mediated effect is zero") {}
};

class not_positive_definite : public analysis_error {
public:
    explicit not_positive_definite(const std::string& what) : analysis_error(what) {}
};

class non_convergence : public analysis_error {
public:
    explicit non_convergence(const std::string& what) : analysis_error(what) {}
};

class under_identified : public analysis_error {
public:
    explicit under_identified(const std::string& what) : analysis_error(what) {}
};

// --- resampling / simulation ---

class invalid_alpha : public usage_error {
public:
    explicit invalid_alpha(double value)
        : usage_error("alpha must lie strictly between 0 and 1, got " + std::to_string(value)) {}
};

class invalid_level : public usage_error {
public:
    explicit invalid_level(double value)
        : usage_error("confidence level must lie strictly between 0 and 1, got " +
                      std::to_string(value)) {}
};

class too_few_replicates : public usage_error {
public:
    explicit too_few_replicates(long got, long minimum)
        : usage_error("bootstrap needs at least " + std::to_string(minimum) +
                      " replicates, got " + std::to_string(got)) {}
};

class too_few_draws : public usage_error {
public:
    explicit too_few_draws(long got, long minimum)
        : usage_error("product-distribution interval needs at least " + std::to_string(minimum) +
                      " draws, got " + std::to_string(got)) {}
};

class all_resamples_degenerate : public analysis_error {
public:
    all_resamples_degenerate() : analysis_error("every bootstrap resample was rank deficient") {}
};

class all_replications_degenerate : public analysis_error {
public:
    all_replications_degenerate()
        : analysis_error("every simulation replication was degenerate") {}
};

class excessive_degenerate_replications : public analysis_error {
public:
    excessive_degenerate_replications(long skipped, long total)
        : analysis_error("simulation skipped " + std::to_string(skipped) + " of " +
                         std::to_string(total) +
                         " replications as degenerate (more than 1% invalidates the study)") {}
};

}  // namespace pathmed
