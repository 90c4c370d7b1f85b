#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pathmed/errors.hpp"

// Textual path-model language.
//
//   M ~ X            regression: single-headed arrow X -> M
//   Y ~ X + M        multiple predictors
//   X1 ~~ X2         covariance: double-headed arrow between exogenous variables
//   # comment        to end of line; statements separated by newlines or ';'
//
// Identifiers are ASCII [A-Za-z_][A-Za-z0-9_]*, case-sensitive. Models must
// be recursive (acyclic); repeated statements for one outcome merge their
// predictor lists.

namespace pathmed {

enum class VariableRole { exogenous, endogenous, mediator };

inline const char* to_string(VariableRole r) {
    switch (r) {
        case VariableRole::exogenous: return "exogenous";
        case VariableRole::endogenous: return "endogenous";
        default: return "mediator";
    }
}

struct Regression {
    std::string outcome;
    std::vector<std::string> predictors;

    friend bool operator==(const Regression&, const Regression&) = default;
};

struct ModelSpec {
    std::vector<std::string> variables;  // first-appearance order
    std::vector<Regression> regressions;
    std::vector<std::pair<std::string, std::string>> covariances;
    std::string source_text;

    friend bool operator==(const ModelSpec& a, const ModelSpec& b) {
        return a.variables == b.variables && a.regressions == b.regressions &&
               a.covariances == b.covariances;  // source text is not structural
    }
};

namespace detail {

struct RawStatement {
    bool is_covariance = false;
    std::string lhs;
    std::vector<std::string> rhs;
    int line = 0;
    int column = 0;
};

inline bool ident_start(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}
inline bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

// Parses one ';'-free statement span. `col0` is the 1-based column of the
// span's first character within its line.
inline RawStatement parse_statement(std::string_view s, int line, int col0) {
    std::size_t i = 0;
    const auto skip_ws = [&] {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    };
    const auto column = [&] { return col0 + static_cast<int>(i); };
    const auto read_ident = [&]() -> std::string {
        skip_ws();
        if (i >= s.size())
            throw syntax_error(line, column(), "expected a variable name");
        if (!ident_start(s[i]))
            throw syntax_error(line, column(),
                               std::string("unexpected character '") + s[i] + "'");
        const std::size_t start = i;
        while (i < s.size() && ident_char(s[i])) ++i;
        return std::string(s.substr(start, i - start));
    };

    RawStatement st;
    st.line = line;
    st.column = col0;
    st.lhs = read_ident();

    skip_ws();
    if (i >= s.size() || s[i] != '~')
        throw syntax_error(line, column(), "expected '~' or '~~' after variable name");
    ++i;
    if (i < s.size() && s[i] == '~') {
        ++i;
        st.is_covariance = true;
        st.rhs.push_back(read_ident());
        skip_ws();
        if (i < s.size())
            throw syntax_error(line, column(), "covariance takes exactly one variable on each side");
        return st;
    }

    st.rhs.push_back(read_ident());
    for (;;) {
        skip_ws();
        if (i >= s.size()) break;
        if (s[i] != '+')
            throw syntax_error(line, column(),
                               std::string("unexpected character '") + s[i] + "'");
        ++i;
        st.rhs.push_back(read_ident());
    }
    return st;
}

}  // namespace detail

/// Parse the textual model language into a validated ModelSpec.
inline ModelSpec parse_model(std::string_view text) {
    std::vector<detail::RawStatement> statements;

    // Scan line by line; '#' comments run to end of line, ';' splits statements.
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, eol - pos);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);

        std::size_t seg_start = 0;
        while (seg_start <= line.size()) {
            const std::size_t seg_end = std::min(line.find(';', seg_start), line.size());
            std::string_view seg = line.substr(seg_start, seg_end - seg_start);
            const bool blank =
                seg.find_first_not_of(" \t\r") == std::string_view::npos;
            if (!blank)
                statements.push_back(detail::parse_statement(
                    seg, line_no, static_cast<int>(seg_start) + 1));
            if (seg_end == line.size()) break;
            seg_start = seg_end + 1;
        }
        if (eol == text.size()) break;
        pos = eol + 1;
    }

    if (statements.empty()) throw empty_model();

    ModelSpec spec;
    spec.source_text = std::string(text);

    const auto note_variable = [&](const std::string& v) {
        if (std::find(spec.variables.begin(), spec.variables.end(), v) ==
            spec.variables.end())
            spec.variables.push_back(v);
    };

    for (const auto& st : statements) {
        if (st.is_covariance) {
            const std::string& a = st.lhs;
            const std::string& b = st.rhs.front();
            if (a == b)
                throw syntax_error(st.line, st.column,
                                   "covariance requires two distinct variables");
            for (const auto& [x, y] : spec.covariances)
                if ((x == a && y == b) || (x == b && y == a))
                    throw duplicate_path("duplicate covariance " + a + " ~~ " + b);
            note_variable(a);
            note_variable(b);
            spec.covariances.emplace_back(a, b);
        } else {
            note_variable(st.lhs);
            auto it = std::find_if(spec.regressions.begin(), spec.regressions.end(),
                                   [&](const Regression& r) { return r.outcome == st.lhs; });
            if (it == spec.regressions.end()) {
                spec.regressions.push_back({st.lhs, {}});
                it = std::prev(spec.regressions.end());
            }
            for (const auto& p : st.rhs) {
                if (std::find(it->predictors.begin(), it->predictors.end(), p) !=
                    it->predictors.end())
                    throw duplicate_path("duplicate path " + p + " -> " + st.lhs);
                note_variable(p);
                it->predictors.push_back(p);
            }
        }
    }

    // Recursivity: the directed graph predictor -> outcome must be acyclic.
    {
        const auto& vars = spec.variables;
        const auto index_of = [&](const std::string& v) {
            return static_cast<int>(std::find(vars.begin(), vars.end(), v) - vars.begin());
        };
        const int p = static_cast<int>(vars.size());
        std::vector<std::vector<int>> out_edges(p);
        for (const auto& r : spec.regressions) {
            const int o = index_of(r.outcome);
            for (const auto& pr : r.predictors) out_edges[index_of(pr)].push_back(o);
        }
        std::vector<int> color(p, 0);  // 0 white, 1 on stack, 2 done
        std::vector<int> stack, parent_pos(p, -1);
        for (int root = 0; root < p; ++root) {
            if (color[root] != 0) continue;
            stack.assign(1, root);
            std::vector<std::size_t> edge_pos(1, 0);
            color[root] = 1;
            while (!stack.empty()) {
                const int u = stack.back();
                if (edge_pos.back() < out_edges[u].size()) {
                    const int v = out_edges[u][edge_pos.back()++];
                    if (color[v] == 1) {
                        // reconstruct one cycle from the DFS stack
                        std::string cycle = vars[v];
                        auto it = std::find(stack.begin(), stack.end(), v);
                        for (auto j = it; j != stack.end(); ++j)
                            if (j != it) cycle += " -> " + vars[*j];
                        cycle += " -> " + vars[v];
                        throw cycle_error(cycle);
                    }
                    if (color[v] == 0) {
                        color[v] = 1;
                        stack.push_back(v);
                        edge_pos.push_back(0);
                    }
                } else {
                    color[u] = 2;
                    stack.pop_back();
                    edge_pos.pop_back();
                }
            }
        }
    }

    // Double-headed arrows may only connect exogenous variables.
    for (const auto& [a, b] : spec.covariances) {
        for (const auto& v : {a, b}) {
            const bool endogenous =
                std::any_of(spec.regressions.begin(), spec.regressions.end(),
                            [&](const Regression& r) { return r.outcome == v; });
            if (endogenous)
                throw covariance_on_endogenous("covariance " + a + " ~~ " + b + ": '" + v +
                                               "' has an incoming causal arrow");
        }
    }

    return spec;
}

/// Assign each variable its role from the arrow structure: no incoming
/// arrow = exogenous; incoming and outgoing = mediator; otherwise endogenous.
inline std::map<std::string, VariableRole> classify_roles(const ModelSpec& spec) {
    std::map<std::string, VariableRole> roles;
    for (const auto& v : spec.variables) {
        const bool incoming =
            std::any_of(spec.regressions.begin(), spec.regressions.end(),
                        [&](const Regression& r) { return r.outcome == v; });
        const bool outgoing =
            std::any_of(spec.regressions.begin(), spec.regressions.end(),
                        [&](const Regression& r) {
                            return std::find(r.predictors.begin(), r.predictors.end(), v) !=
                                   r.predictors.end();
                        });
        roles[v] = !incoming ? VariableRole::exogenous
                             : (outgoing ? VariableRole::mediator : VariableRole::endogenous);
    }
    return roles;
}

/// Canonical text form: regressions first, covariances after, one per line.
/// parse_model(render_model(spec)) reproduces spec for canonical specs.
inline std::string render_model(const ModelSpec& spec) {
    std::string out;
    for (const auto& r : spec.regressions) {
        out += r.outcome + " ~ ";
        for (std::size_t i = 0; i < r.predictors.size(); ++i) {
            if (i) out += " + ";
            out += r.predictors[i];
        }
        out += '\n';
    }
    for (const auto& [a, b] : spec.covariances) out += a + " ~~ " + b + '\n';
    return out;
}

/// Every model variable must be present as a dataset column.
inline void validate_against_columns(const ModelSpec& spec,
                                     const std::vector<std::string>& columns) {
    for (const auto& v : spec.variables)
        if (std::find(columns.begin(), columns.end(), v) == columns.end())
            throw missing_column(v);
}

}  // namespace pathmed
