#include "epiwave/series.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace epiwave {

double CumulativeSeries::at_day(int d) const {
    if (!contains_day(d))
        throw ValidationError("day " + std::to_string(d) + " outside series range [" +
                              std::to_string(t0) + "," + std::to_string(last_day()) + "]");
    return values[d - t0];
}

void CumulativeSeries::validate() const {
    if (values.size() < 2)
        throw ValidationError("cumulative series needs at least 2 samples, got " +
                              std::to_string(values.size()));
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]))
            throw ValidationError("non-finite count at day " + std::to_string(day(i)));
        if (values[i] < 0.0)
            throw ValidationError("negative count " + std::to_string(values[i]) +
                                  " at day " + std::to_string(day(i)));
    }
}

CumulativeSeries CumulativeSeries::window(int d1, int d2) const {
    if (d1 > d2) throw ValidationError("window start after window end");
    if (!contains_day(d1) || !contains_day(d2))
        throw ValidationError("window [" + std::to_string(d1) + "," + std::to_string(d2) +
                              "] outside series range");
    CumulativeSeries out;
    out.t0 = d1;
    out.values = values.segment(d1 - t0, d2 - d1 + 1);
    out.label = label;
    return out;
}

CumulativeSeries apply_jump_correction(const CumulativeSeries& s, const JumpCorrection& c) {
    if (!s.contains_day(c.day))
        throw ValidationError("jump day " + std::to_string(c.day) + " outside series range");
    CumulativeSeries out = s;
    for (Eigen::Index i = c.day - s.t0; i < out.values.size(); ++i) {
        out.values[i] -= c.magnitude;
        if (out.values[i] < 0.0)
            throw ValidationError("jump correction of " + std::to_string(c.magnitude) +
                                  " makes day " + std::to_string(s.day(i)) + " negative");
    }
    return out;
}

long parse_iso_date(const std::string& text) {
    int y = 0, m = 0, d = 0;
    char dash1 = 0, dash2 = 0;
    std::istringstream in(text);
    in >> y >> dash1 >> m >> dash2 >> d;
    if (in.fail() || dash1 != '-' || dash2 != '-' || m < 1 || m > 12 || d < 1 || d > 31)
        throw ValidationError("malformed ISO date '" + text + "'");
    // Howard Hinnant's days-from-civil.
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    for (auto& f : fields) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = (b == std::string::npos) ? std::string{} : f.substr(b, e - b + 1);
    }
    return fields;
}

bool is_integer_token(const std::string& s) {
    if (s.empty()) return false;
    size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size()) return false;
    return std::all_of(s.begin() + static_cast<long>(i), s.end(),
                       [](unsigned char c) { return std::isdigit(c); });
}

double parse_count(const std::string& tok, int line_no) {
    double v = 0.0;
    const auto* begin = tok.data();
    const auto* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw ValidationError("line " + std::to_string(line_no) + ": cannot parse count '" + tok + "'");
    return v;
}

} // namespace

CumulativeSeries load_series(const std::string& path, const ColumnSpec& spec) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");

    CumulativeSeries out;
    out.label = path;
    std::vector<double> values;
    std::vector<long> days;
    std::string line;
    int line_no = 0;
    bool skip_header = spec.header;
    std::optional<long> epoch_serial;
    if (spec.epoch) epoch_serial = parse_iso_date(*spec.epoch);

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (skip_header) {
            skip_header = false;
            continue;
        }
        const auto fields = split_csv_line(line);
        const int need = std::max(spec.date_column, spec.value_column) + 1;
        if (static_cast<int>(fields.size()) < need)
            throw ValidationError("line " + std::to_string(line_no) + ": expected at least " +
                                  std::to_string(need) + " columns");
        const std::string& date_tok = fields[static_cast<size_t>(spec.date_column)];
        long day = 0;
        if (is_integer_token(date_tok)) {
            day = std::stol(date_tok);
        } else {
            const long serial = parse_iso_date(date_tok);
            if (!epoch_serial) epoch_serial = serial;
            day = serial - *epoch_serial;
        }
        const double v = parse_count(fields[static_cast<size_t>(spec.value_column)], line_no);
        if (v < 0.0)
            throw ValidationError("line " + std::to_string(line_no) + ": negative count");
        if (!days.empty()) {
            if (day == days.back())
                throw ValidationError("line " + std::to_string(line_no) + ": duplicated date");
            if (day < days.back())
                throw ValidationError("line " + std::to_string(line_no) + ": dates not increasing");
            if (day != days.back() + 1)
                throw ValidationError("line " + std::to_string(line_no) +
                                      ": non-uniform date spacing (gap of " +
                                      std::to_string(day - days.back()) + " days)");
        }
        days.push_back(day);
        values.push_back(v);
    }
    if (values.size() < 2)
        throw ValidationError("'" + path + "': needs at least 2 data rows");
    if (days.front() < std::numeric_limits<int>::min() || days.front() > std::numeric_limits<int>::max())
        throw ValidationError("'" + path + "': day index out of range; declare an epoch");

    out.t0 = static_cast<int>(days.front());
    out.values = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    return out;
}

std::vector<CumulativeSeries> load_group_series(const std::string& path,
                                                const std::optional<std::string>& epoch) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::string header;
    if (!std::getline(in, header)) throw ValidationError("'" + path + "': empty file");
    const auto names = split_csv_line(header);
    if (names.size() < 2) throw ValidationError("'" + path + "': expected date plus group columns");
    const int groups = static_cast<int>(names.size()) - 1;
    in.seekg(0);

    std::vector<CumulativeSeries> out;
    out.reserve(static_cast<size_t>(groups));
    for (int g = 0; g < groups; ++g) {
        ColumnSpec spec;
        spec.value_column = g + 1;
        spec.epoch = epoch;
        CumulativeSeries s = load_series(path, spec);
        s.label = names[static_cast<size_t>(g) + 1];
        out.push_back(std::move(s));
    }
    return out;
}

std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

} // namespace epiwave
