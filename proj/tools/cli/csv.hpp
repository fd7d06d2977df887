#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "panelcp/error.hpp"
#include "panelcp/panel.hpp"

namespace panelcp::cli {

struct ColumnRoles {
    std::string id = "id";
    std::string time = "t";
    std::string outcome = "y";
    std::vector<std::string> regressors;  // empty: every remaining column
    bool intercept = false;               // prepend a constant column named "const"
};

// Long-format panel with the original labels. Individuals keep first-appearance
// order; periods are sorted numerically when every label parses as a number,
// lexicographically otherwise.
struct LoadedPanel {
    PanelData panel;
    std::vector<std::string> ids;
    std::vector<std::string> periods;  // periods[t - 1]
};

class CsvError : public Error {
public:
    using Error::Error;
};

std::vector<std::string> split_csv_line(const std::string& line);

LoadedPanel load_csv(const std::filesystem::path& path, const ColumnRoles& roles);

// Writes id,t,y,<regressors> with round-trip precision. The intercept column
// of an intercept panel is omitted (reload with roles.intercept = true).
void write_panel_csv(const std::filesystem::path& path, const PanelData& panel,
                     const std::vector<std::string>& ids = {}, const std::vector<std::string>& periods = {});

}  // namespace panelcp::cli
