#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "epiwave/errors.hpp"

namespace epiwave {

/// Day-indexed cumulative reported-case counts on a uniform 1-day grid.
/// Day indices are integers relative to a user-declared epoch; calendar
/// dates are resolved to indices at ingestion and never used afterwards.
struct CumulativeSeries {
    int t0 = 0;
    Eigen::VectorXd values;
    std::string label;

    Eigen::Index size() const { return values.size(); }
    int day(Eigen::Index i) const { return t0 + static_cast<int>(i); }
    int last_day() const { return t0 + static_cast<int>(values.size()) - 1; }
    bool contains_day(int d) const { return d >= t0 && d <= last_day(); }
    double at_day(int d) const;

    /// Throws ValidationError unless values are finite, non-negative and
    /// there are at least two of them.
    void validate() const;

    /// Sub-series restricted to day range [d1, d2] (inclusive).
    CumulativeSeries window(int d1, int d2) const;
};

/// One-off reporting-method jump: `magnitude` extra cases appear in the
/// tally at `day` and persist afterwards.
struct JumpCorrection {
    int day = 0;
    double magnitude = 0.0;
};

/// Subtracts the jump magnitude from every value at and after the jump day.
CumulativeSeries apply_jump_correction(const CumulativeSeries& s, const JumpCorrection& c);

/// How to read a two-column cumulative CSV.
struct ColumnSpec {
    int date_column = 0;
    int value_column = 1;
    bool header = true;
    /// Epoch for ISO-8601 dates: day index = date - epoch (in days).
    /// When absent, the first date in the file becomes day 0.
    /// Integer date columns are taken as day indices verbatim.
    std::optional<std::string> epoch;
};

/// Loads `date,cumulative` CSV. Dates must advance by exactly one day;
/// duplicated or non-monotone dates and negative counts are rejected.
CumulativeSeries load_series(const std::string& path, const ColumnSpec& spec = {});

/// Loads the age-structured layout `date,g0,g1,...`: one series per group
/// column, shared day grid.
std::vector<CumulativeSeries> load_group_series(const std::string& path,
                                                const std::optional<std::string>& epoch = {});

/// Serial day number of an ISO-8601 date (proleptic Gregorian, days since
/// 1970-01-01). Throws ValidationError on malformed input.
long parse_iso_date(const std::string& text);

/// Formats a double with 17 significant digits (round-trip exact).
std::string format_g17(double x);

} // namespace epiwave
