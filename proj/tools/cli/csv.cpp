#include "csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace panelcp::cli {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::optional<double> parse_number(const std::string& text) {
    const std::string s = trim(text);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = s.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw CsvError("cli: column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char ch = line[k];
        if (quoted) {
            if (ch == '"') {
                if (k + 1 < line.size() && line[k + 1] == '"') {
                    cur.push_back('"');
                    ++k;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(trim(cur));
    return out;
}

LoadedPanel load_csv(const std::filesystem::path& path, const ColumnRoles& roles) {
    std::ifstream in(path);
    if (!in) throw CsvError("cli: cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw CsvError("cli: '" + path.string() + "' is empty (header expected)");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const std::vector<std::string> header = split_csv_line(line);

    const std::size_t id_col = column_index(header, roles.id);
    const std::size_t time_col = column_index(header, roles.time);
    const std::size_t y_col = column_index(header, roles.outcome);
    std::vector<std::string> reg_names = roles.regressors;
    if (reg_names.empty()) {
        for (const std::string& h : header)
            if (h != roles.id && h != roles.time && h != roles.outcome) reg_names.push_back(h);
    }
    if (reg_names.empty()) throw CsvError("cli: no regressor columns");
    std::vector<std::size_t> x_cols;
    for (const std::string& name : reg_names) {
        if (name == roles.id || name == roles.time || name == roles.outcome)
            throw CsvError("cli: column '" + name + "' cannot be both a regressor and id/time/outcome");
        x_cols.push_back(column_index(header, name));
    }
    if (roles.id == roles.time || roles.id == roles.outcome || roles.time == roles.outcome)
        throw CsvError("cli: id, time and outcome columns must be distinct");

    struct Row {
        std::size_t id;
        std::string time;
        double y;
        std::vector<double> x;
        long line;
    };
    std::vector<Row> rows;
    std::vector<std::string> ids;
    std::unordered_map<std::string, std::size_t> id_index;
    std::map<std::string, bool> time_seen;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            std::ostringstream os;
            os << "cli: row " << line_no << " has " << cells.size() << " fields, header has " << header.size();
            throw CsvError(os.str());
        }
        const auto numeric = [&](std::size_t col) {
            const auto v = parse_number(cells[col]);
            if (!v) {
                std::ostringstream os;
                os << "cli: non-numeric value '" << cells[col] << "' in column '" << header[col] << "' at row "
                   << line_no;
                throw CsvError(os.str());
            }
            return *v;
        };
        Row r;
        const std::string& id = cells[id_col];
        auto [it, inserted] = id_index.try_emplace(id, ids.size());
        if (inserted) ids.push_back(id);
        r.id = it->second;
        r.time = cells[time_col];
        r.y = numeric(y_col);
        for (std::size_t c : x_cols) r.x.push_back(numeric(c));
        r.line = line_no;
        time_seen[r.time] = true;
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw CsvError("cli: no data rows");

    std::vector<std::string> periods;
    for (const auto& [label, seen] : time_seen) periods.push_back(label);
    const bool all_numeric = std::all_of(periods.begin(), periods.end(),
                                         [](const std::string& s) { return parse_number(s).has_value(); });
    if (all_numeric)
        std::stable_sort(periods.begin(), periods.end(),
                         [](const std::string& a, const std::string& b) { return *parse_number(a) < *parse_number(b); });
    std::unordered_map<std::string, int> period_index;
    for (std::size_t k = 0; k < periods.size(); ++k) period_index[periods[k]] = static_cast<int>(k) + 1;

    const int n = static_cast<int>(ids.size());
    const int t_count = static_cast<int>(periods.size());
    const int lead = roles.intercept ? 1 : 0;
    const int p = static_cast<int>(x_cols.size()) + lead;
    const Eigen::Index n_obs = static_cast<Eigen::Index>(n) * t_count;
    Vector y(n_obs);
    Matrix x(n_obs, p);
    std::vector<long> filled(static_cast<std::size_t>(n_obs), 0);
    for (const Row& r : rows) {
        const int t = period_index.at(r.time);
        const Eigen::Index k = static_cast<Eigen::Index>(t - 1) * n + static_cast<Eigen::Index>(r.id);
        if (filled[static_cast<std::size_t>(k)]) {
            std::ostringstream os;
            os << "cli: duplicate observation for (id=" << ids[r.id] << ", t=" << r.time << ") at rows "
               << filled[static_cast<std::size_t>(k)] << " and " << r.line;
            throw CsvError(os.str());
        }
        filled[static_cast<std::size_t>(k)] = r.line;
        y[k] = r.y;
        if (lead) x(k, 0) = 1.0;
        for (std::size_t c = 0; c < r.x.size(); ++c) x(k, lead + static_cast<Eigen::Index>(c)) = r.x[c];
    }
    std::vector<std::string> missing;
    std::size_t n_missing = 0;
    for (int t = 1; t <= t_count; ++t) {
        for (int i = 0; i < n; ++i) {
            if (filled[static_cast<std::size_t>(static_cast<Eigen::Index>(t - 1) * n + i)]) continue;
            ++n_missing;
            if (missing.size() < 20)
                missing.push_back("(" + ids[static_cast<std::size_t>(i)] + ", " + periods[static_cast<std::size_t>(t - 1)] + ")");
        }
    }
    if (n_missing) {
        std::ostringstream os;
        os << "cli: unbalanced panel, " << n_missing << " missing (id, t) pair" << (n_missing > 1 ? "s" : "") << ":";
        for (const auto& m : missing) os << ' ' << m;
        if (n_missing > missing.size()) os << " ...";
        throw CsvError(os.str());
    }

    std::vector<std::string> names;
    if (lead) names.emplace_back("const");
    names.insert(names.end(), reg_names.begin(), reg_names.end());
    try {
        return {PanelData::create(n, t_count, std::move(y), std::move(x), std::move(names), roles.intercept),
                std::move(ids), std::move(periods)};
    } catch (const InvalidPanel& e) {
        throw CsvError(std::string("cli: ") + e.what());
    }
}

void write_panel_csv(const std::filesystem::path& path, const PanelData& panel, const std::vector<std::string>& ids,
                     const std::vector<std::string>& periods) {
    std::ofstream out(path);
    if (!out) throw CsvError("cli: cannot write '" + path.string() + "'");
    const int lead = panel.has_intercept() ? 1 : 0;
    out << "id,t,y";
    for (int c = lead; c < panel.n_regressors(); ++c) out << ',' << panel.regressor_names()[static_cast<std::size_t>(c)];
    out << '\n';
    for (int i = 0; i < panel.n_individuals(); ++i) {
        for (int t = 1; t <= panel.n_periods(); ++t) {
            out << (ids.empty() ? std::to_string(i + 1) : ids[static_cast<std::size_t>(i)]) << ','
                << (periods.empty() ? std::to_string(t) : periods[static_cast<std::size_t>(t - 1)]) << ','
                << format_double(panel.y(i, t));
            for (int c = lead; c < panel.n_regressors(); ++c) out << ',' << format_double(panel.x(i, t, c));
            out << '\n';
        }
    }
}

}  // namespace panelcp::cli
