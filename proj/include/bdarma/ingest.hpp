#pragma once

#include "bdarma/design.hpp"
#include "bdarma/simplex.hpp"

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace bdarma {

using Date = std::chrono::year_month_day;

/// Parses YYYY-MM-DD; throws ValidationError otherwise.
Date parse_date(const std::string& text);
std::string format_date(const Date& d);

/// Daily trading values per sector: values[t][k] for date t and sector k.
struct SectorPanel {
    std::vector<Date> dates;
    std::vector<std::string> sectors;
    std::vector<std::vector<double>> values;
};

struct PanelIssue {
    std::string date;  ///< empty when not row specific
    std::string sector;
    std::string message;
};

struct ValidationReport {
    std::size_t rows = 0;
    std::size_t sectors = 0;
    std::vector<PanelIssue> issues;

    bool ok() const noexcept { return issues.empty(); }
    /// {"ok", "rows", "sectors", "issues": [{"date", "sector", "message"}]}
    std::string to_json() const;
};

/// Long form: header date,sector,value. Sectors keep first-seen order.
/// Missing (date, sector) cells are recorded as NaN for validate_panel to report.
SectorPanel read_long_csv(std::istream& in);
/// Wide form: header date,<sector 1>,...,<sector K>.
SectorPanel read_wide_csv(std::istream& in);
/// Picks the reader from the header.
SectorPanel read_panel_csv(const std::string& path);

/// Checks strictly increasing weekday dates and positive finite values.
ValidationReport validate_panel(const SectorPanel& panel);

/// y_kt = V_kt / sum_k V_kt. Throws ValidationError naming the first bad date and sector.
std::vector<Composition> to_shares(const SectorPanel& panel);

/// Seasonal design with day index 0 at the first date.
Design fourier_design(const std::vector<Date>& dates, int dim, FourierTerms terms = {});

template <class T>
struct Split {
    std::vector<T> train;
    std::vector<T> test;
};

/// Rows with date <= train_end go to training; the next `test_length` rows form the test window.
Split<Composition> split(const std::vector<Composition>& series, const std::vector<Date>& dates,
                         const Date& train_end, std::size_t test_length = 126);
/// First `train_rows` rows train, the next `test_length` test.
Split<Composition> split_rows(const std::vector<Composition>& series, std::size_t train_rows,
                              std::size_t test_length = 126);

struct SyntheticPanelConfig {
    std::size_t sectors = 11;
    std::size_t days = 630;
    Date start = Date{std::chrono::year{2021}, std::chrono::month{1}, std::chrono::day{4}};
    std::uint64_t seed = 2021;
    double precision = 3000.0;
    double persistence = 0.6;
};

/// Weekday panel whose shares follow a seasonal AR(1) process in ALR space with Dirichlet noise.
SectorPanel synthetic_panel(const SyntheticPanelConfig& cfg = {});

void write_panel_long_csv(const SectorPanel& panel, std::ostream& out);

}  // namespace bdarma
