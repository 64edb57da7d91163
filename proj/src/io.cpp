#include "batval/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <fmt/format.h>

namespace batval {

namespace {

constexpr std::int64_t kDaySeconds = 86400;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_double(const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
    return v;
}

struct SeriesFormat {
    std::string header;
    std::int64_t step_seconds;
    double min_value;
    double max_value;
};

const SeriesFormat kPriceFormat{"timestamp,price_usd_per_mwh", 300, -HUGE_VAL, HUGE_VAL};
const SeriesFormat kSignalFormat{"timestamp,signal", 2, -1.0, 1.0};
const SeriesFormat kRegPriceFormat{"timestamp,regd_price_usd_per_mw", 3600, 0.0, HUGE_VAL};

TimeSeries load_series(const std::filesystem::path& path, const SeriesFormat& format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(fmt::format("cannot open {}", path.string()));
    const std::string name = path.filename().string();
    std::string line;
    if (!std::getline(in, line) || trim(line) != format.header) {
        throw InputError(fmt::format("{}: line 1: expected header '{}'", name, format.header));
    }
    TimeSeries series;
    series.step_seconds = format.step_seconds;
    std::size_t line_no = 1;
    UnixSeconds prev = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string row = trim(line);
        if (row.empty()) continue;
        const auto comma = row.find(',');
        if (comma == std::string::npos || row.find(',', comma + 1) != std::string::npos) {
            throw InputError(fmt::format("{}: line {}: expected two fields", name, line_no));
        }
        const auto t = parse_timestamp(trim(row.substr(0, comma)));
        if (!t) throw InputError(fmt::format("{}: line {}: bad timestamp", name, line_no));
        const auto v = parse_double(trim(row.substr(comma + 1)));
        if (!v) throw InputError(fmt::format("{}: line {}: bad value", name, line_no));
        if (*v < format.min_value || *v > format.max_value) {
            throw InputError(fmt::format("{}: line {}: value {} out of range", name, line_no, *v));
        }
        if (series.values.empty()) {
            if (*t % kDaySeconds != 0) {
                throw InputError(fmt::format("{}: line {}: series must start at UTC midnight", name, line_no));
            }
            series.start = *t;
        } else if (*t == prev) {
            throw InputError(fmt::format("{}: line {}: duplicate timestamp {}", name, line_no,
                                         format_timestamp(*t)));
        } else if (*t < prev) {
            throw InputError(fmt::format("{}: line {}: timestamps not increasing", name, line_no));
        } else if (*t != prev + format.step_seconds) {
            if ((*t - prev) % format.step_seconds == 0) {
                throw InputError(fmt::format("{}: line {}: missing interval at {}", name, line_no,
                                             format_timestamp(prev + format.step_seconds)));
            }
            throw InputError(fmt::format("{}: line {}: non-uniform step", name, line_no));
        }
        prev = *t;
        series.values.push_back(*v);
    }
    if (series.values.empty()) throw InputError(fmt::format("{}: no data rows", name));
    if (series.values.size() % series.points_per_day() != 0) {
        throw InputError(fmt::format("{}: series ends mid-day after {} points", name, series.values.size()));
    }
    return series;
}

void write_series(const std::filesystem::path& path, const TimeSeries& series, const std::string& header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    out << header << '\n';
    for (std::size_t k = 0; k < series.values.size(); ++k) {
        const UnixSeconds t = series.start + static_cast<std::int64_t>(k) * series.step_seconds;
        out << format_timestamp(t) << ',' << fmt::format("{}", series.values[k]) << '\n';
    }
    if (!out) throw std::runtime_error(fmt::format("write failed: {}", path.string()));
}

// Fixed uniform and normal draws; std distributions are implementation-defined.
class Gaussian {
public:
    explicit Gaussian(std::seed_seq& seq) : rng_(seq) {}

    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 rng_;
};

// 0 at 04:00, 1 at 18:00, half-cosine on each side.
double diurnal_shape(double hour) {
    double h = std::fmod(hour - 4.0 + 24.0, 24.0);
    if (h <= 14.0) return 0.5 - 0.5 * std::cos(std::numbers::pi * h / 14.0);
    return 0.5 + 0.5 * std::cos(std::numbers::pi * (h - 14.0) / 10.0);
}

std::vector<std::string> split_csv(const std::string& row) {
    std::vector<std::string> out;
    std::stringstream ss(row);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!row.empty() && row.back() == ',') out.emplace_back();
    return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    return out;
}

}  // namespace

std::optional<UnixSeconds> parse_timestamp(const std::string& text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0, used = 0;
    if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &s, &used) != 6) {
        return std::nullopt;
    }
    const std::string rest = text.substr(static_cast<std::size_t>(used));
    if (!(rest.empty() || rest == "Z")) return std::nullopt;
    if (text.size() < 19) return std::nullopt;
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59 || h < 0 || mi < 0 || s < 0) return std::nullopt;
    const auto days_since = sys_days{ymd}.time_since_epoch().count();
    return static_cast<UnixSeconds>(days_since) * kDaySeconds + h * 3600 + mi * 60 + s;
}

std::string format_timestamp(UnixSeconds t) {
    using namespace std::chrono;
    const auto day_index = static_cast<int>(t >= 0 ? t / kDaySeconds : (t - kDaySeconds + 1) / kDaySeconds);
    const std::int64_t sec = t - static_cast<std::int64_t>(day_index) * kDaySeconds;
    const year_month_day ymd{sys_days{days{day_index}}};
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), sec / 3600,
                       (sec / 60) % 60, sec % 60);
}

std::size_t TimeSeries::points_per_day() const {
    return static_cast<std::size_t>(kDaySeconds / step_seconds);
}

std::size_t TimeSeries::days() const { return values.size() / points_per_day(); }

std::vector<double> TimeSeries::day(std::size_t index) const {
    const std::size_t n = points_per_day();
    if (index >= days()) throw std::out_of_range(fmt::format("series has no day {}", index + 1));
    const auto first = values.begin() + static_cast<std::ptrdiff_t>(index * n);
    return {first, first + static_cast<std::ptrdiff_t>(n)};
}

PriceSeries load_price_csv(const std::filesystem::path& path) { return load_series(path, kPriceFormat); }
SignalSeries load_signal_csv(const std::filesystem::path& path) { return load_series(path, kSignalFormat); }
HourlySeries load_regulation_price_csv(const std::filesystem::path& path) {
    return load_series(path, kRegPriceFormat);
}

void write_price_csv(const std::filesystem::path& path, const PriceSeries& series) {
    write_series(path, series, kPriceFormat.header);
}
void write_signal_csv(const std::filesystem::path& path, const SignalSeries& series) {
    write_series(path, series, kSignalFormat.header);
}
void write_regulation_price_csv(const std::filesystem::path& path, const HourlySeries& series) {
    write_series(path, series, kRegPriceFormat.header);
}

PriceSeries synth_prices(std::uint64_t seed, std::size_t days, double base, double amplitude,
                         double noise_sd) {
    if (days < 1) throw std::invalid_argument("synthetic prices need at least one day");
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 1u};
    Gaussian g(seq);
    PriceSeries s;
    s.start = kSyntheticStart;
    s.step_seconds = 300;
    s.values.resize(days * s.points_per_day());
    for (std::size_t k = 0; k < s.values.size(); ++k) {
        const double hour = static_cast<double>(k % 288) / 12.0;
        const double noise = g.normal();
        s.values[k] = base + amplitude * (2.0 * diurnal_shape(hour) - 1.0) + noise_sd * noise;
    }
    return s;
}

SignalSeries synth_signal(std::uint64_t seed, std::size_t days) {
    if (days < 1) throw std::invalid_argument("synthetic signal needs at least one day");
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 2u};
    Gaussian g(seq);
    constexpr double kReversion = 0.005;
    constexpr double kShock = 0.04;
    constexpr std::size_t kTicksPerHour = 1800;
    SignalSeries s;
    s.start = kSyntheticStart;
    s.step_seconds = 2;
    s.values.resize(days * s.points_per_day());
    double x = 0.0;
    for (std::size_t h0 = 0; h0 < s.values.size(); h0 += kTicksPerHour) {
        const auto first = s.values.begin() + static_cast<std::ptrdiff_t>(h0);
        const auto last = first + static_cast<std::ptrdiff_t>(kTicksPerHour);
        for (auto it = first; it != last; ++it) {
            x = (1.0 - kReversion) * x + kShock * g.normal();
            *it = x;
        }
        double mean = 0.0;
        for (auto it = first; it != last; ++it) mean += *it;
        mean /= static_cast<double>(kTicksPerHour);
        double peak = 0.0;
        for (auto it = first; it != last; ++it) {
            *it -= mean;
            peak = std::max(peak, std::abs(*it));
        }
        const double scale = std::max(1.0, peak);
        for (auto it = first; it != last; ++it) *it /= scale;
    }
    return s;
}

HourlySeries synth_regulation_prices(std::uint64_t seed, std::size_t days, double base) {
    if (days < 1) throw std::invalid_argument("synthetic prices need at least one day");
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 3u};
    Gaussian g(seq);
    HourlySeries s;
    s.start = kSyntheticStart;
    s.step_seconds = 3600;
    s.values.resize(days * 24);
    for (std::size_t k = 0; k < s.values.size(); ++k) {
        const double hour = static_cast<double>(k % 24);
        const double level = base * (0.8 + 0.4 * diurnal_shape(hour)) + 0.1 * base * g.normal();
        s.values[k] = std::max(0.0, level);
    }
    return s;
}

ArbitrageMarket to_market(const PriceSeries& prices) {
    ArbitrageMarket m;
    m.step_hours = static_cast<double>(prices.step_seconds) / 3600.0;
    for (std::size_t d = 0; d < prices.days(); ++d) m.daily_prices.push_back(prices.day(d));
    return m;
}

std::vector<RegulationDay> to_regulation_days(const SignalSeries& signal, const HourlySeries& prices,
                                              double capacity_mw) {
    if (signal.start != prices.start) {
        throw InputError("signal and regulation prices start on different days");
    }
    const std::size_t days = std::min(signal.days(), prices.days());
    std::vector<RegulationDay> out(days);
    for (std::size_t d = 0; d < days; ++d) {
        out[d].signal = signal.day(d);
        out[d].hourly_price = prices.day(d);
        out[d].capacity_mw = capacity_mw;
        out[d].tick_seconds = static_cast<double>(signal.step_seconds);
    }
    return out;
}

void write_surface_csv(const std::filesystem::path& path, const ValueSurface& surface) {
    auto out = open_output(path);
    out << "day,soh_pct,value_usd\n";
    for (std::size_t n = 1; n <= surface.horizon() + 1; ++n) {
        for (std::size_t i = 0; i < surface.samples(); ++i) {
            out << fmt::format("{},{},{}\n", n, surface.grid().soh_pct(i), surface.value(i, n));
        }
    }
}

void write_marginal_cost_csv(const std::filesystem::path& path, const ValueSurface& surface) {
    auto out = open_output(path);
    out << "day,soh_pct,marginal_cost_usd_per_mwh\n";
    for (std::size_t n = 1; n <= surface.horizon(); ++n) {
        for (std::size_t i = 0; i + 1 < surface.samples(); ++i) {
            out << fmt::format("{},{},{}\n", n, surface.grid().soh_pct(i), marginal_cost(surface, i, n));
        }
    }
}

void write_second_life_csv(const std::filesystem::path& path, const SecondLifeResult& result) {
    auto out = open_output(path);
    out << "day,new_value_usd,second_life_value_usd,ratio\n";
    for (const SecondLifeDay& d : result.days) {
        out << fmt::format("{},{},{},{}\n", d.day, d.new_value, d.second_life_value,
                           d.ratio ? fmt::format("{}", *d.ratio) : std::string());
    }
}

ValueSurface read_surface_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(fmt::format("cannot open {}", path.string()));
    const std::string name = path.filename().string();
    std::string line;
    if (!std::getline(in, line) || trim(line) != "day,soh_pct,value_usd") {
        throw InputError(fmt::format("{}: line 1: expected header 'day,soh_pct,value_usd'", name));
    }
    std::map<std::size_t, std::vector<std::pair<double, double>>> columns;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split_csv(trim(line));
        if (f.size() != 3) throw InputError(fmt::format("{}: line {}: expected three fields", name, line_no));
        const auto day = parse_double(f[0]);
        const auto soh = parse_double(f[1]);
        const auto v = parse_double(f[2]);
        if (!day || !soh || !v || *day < 1.0 || *day != std::floor(*day)) {
            throw InputError(fmt::format("{}: line {}: bad row", name, line_no));
        }
        columns[static_cast<std::size_t>(*day)].emplace_back(*soh, *v);
    }
    if (columns.size() < 2) throw InputError(fmt::format("{}: need at least two days", name));
    const auto& first = columns.begin()->second;
    SohGrid grid;
    grid.rated_mwh = 1.0;
    for (const auto& [soh, v] : first) grid.capacity_mwh.push_back(soh / 100.0);
    try {
        grid.validate();
    } catch (const std::exception& e) {
        throw InputError(fmt::format("{}: {}", name, e.what()));
    }
    std::size_t expected_day = 1;
    for (const auto& [day, col] : columns) {
        if (day != expected_day++) throw InputError(fmt::format("{}: day {} missing", name, expected_day - 1));
        if (col.size() != first.size()) {
            throw InputError(fmt::format("{}: day {} has {} samples, expected {}", name, day, col.size(), first.size()));
        }
        for (std::size_t i = 0; i < col.size(); ++i) {
            if (col[i].first != first[i].first) {
                throw InputError(fmt::format("{}: day {} uses a different SoH grid", name, day));
            }
        }
    }
    ValueSurface surface(grid, columns.size() - 1);
    for (const auto& [day, col] : columns) {
        for (std::size_t i = 0; i < col.size(); ++i) surface.set(i, day, col[i].second);
    }
    return surface;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(fmt::format("cannot read {}", path.string()));
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 unavailable");
    }
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    std::string hex;
    for (unsigned int k = 0; k < len; ++k) hex += fmt::format("{:02x}", md[k]);
    return hex;
}

}  // namespace batval
