#include "hystdyn/datamodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "hystdyn/error.hpp"

namespace hystdyn {

namespace {

bool all_same_length(std::initializer_list<std::size_t> sizes) {
  return std::adjacent_find(sizes.begin(), sizes.end(), std::not_equal_to<>()) == sizes.end();
}

void check_duty(std::span<const double> u, const char* name) {
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] >= 0.0 && u[i] <= 1.0)) {
      throw DataError(std::string(name) + " outside [0, 1] at sample " + std::to_string(i) + ": " +
                      std::to_string(u[i]));
    }
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------- TimeSeries

TimeSeries::TimeSeries(double dt, double t_start, std::vector<double> u_a, std::vector<double> u_b,
                       std::vector<double> temp_a, std::vector<double> temp_b,
                       std::vector<double> theta, bool unidirectional)
    : dt_(dt),
      t_start_(t_start),
      u_a_(std::move(u_a)),
      u_b_(std::move(u_b)),
      temp_a_(std::move(temp_a)),
      temp_b_(std::move(temp_b)),
      theta_(std::move(theta)),
      unidirectional_(unidirectional) {
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw DataError("TimeSeries: dt must be positive");
  if (!all_same_length(
          {u_a_.size(), u_b_.size(), temp_a_.size(), temp_b_.size(), theta_.size()})) {
    throw DataError("TimeSeries: channels have different lengths");
  }
  check_duty(u_a_, "u_a");
  check_duty(u_b_, "u_b");
}

Sample TimeSeries::at(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("TimeSeries::at: index " + std::to_string(i));
  return {u_a_[i], u_b_[i], temp_a_[i], temp_b_[i], theta_[i]};
}

TimeSeries TimeSeries::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw std::out_of_range("TimeSeries::slice");
  auto cut = [&](const std::vector<double>& v) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(begin),
                               v.begin() + static_cast<std::ptrdiff_t>(end));
  };
  return TimeSeries(dt_, time(begin), cut(u_a_), cut(u_b_), cut(temp_a_), cut(temp_b_),
                    cut(theta_), unidirectional_);
}

TimeSeries TimeSeries::with_theta(std::vector<double> theta) const {
  return TimeSeries(dt_, t_start_, u_a_, u_b_, temp_a_, temp_b_, std::move(theta),
                    unidirectional_);
}

// --------------------------------------------------------------- InputConfig

InputConfig::InputConfig(int k) : k_(k) {
  if (k < 1 || k > 4) throw ConfigError("input config k must be in 1..4, got " + std::to_string(k));
}

std::size_t InputConfig::input_dim() const noexcept {
  switch (k_) {
    case 1: return 1;
    case 2: return 2;
    case 3: return 2;
    default: return 4;
  }
}

std::vector<std::string> InputConfig::feature_names() const {
  switch (k_) {
    case 1: return {"u_a"};
    case 2: return {"u_a", "temp_a"};
    case 3: return {"u_a", "u_b"};
    default: return {"u_a", "temp_a", "u_b", "temp_b"};
  }
}

// ------------------------------------------------------------------- scaling

AffineScaler::AffineScaler(double min, double max) : min_(min), max_(max) {
  if (!(max > min) || !std::isfinite(min) || !std::isfinite(max)) {
    throw DataError("scaler requires finite max > min");
  }
}

AffineScaler AffineScaler::fit(std::span<const double> values, std::string_view channel) {
  if (values.empty()) throw DataError("cannot fit scaler on empty channel " + std::string(channel));
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*hi > *lo)) {
    throw DataError("channel " + std::string(channel) + " is constant; cannot fit scaler");
  }
  return AffineScaler(*lo, *hi);
}

Scalers fit_scalers(const TimeSeries& series, const InputConfig& cfg) {
  Scalers s;
  s.theta = AffineScaler::fit(series.theta(), "theta");
  if (cfg.uses_temperature()) {
    std::vector<double> temps(series.temp_a().begin(), series.temp_a().end());
    if (cfg.uses_actuator_b()) temps.insert(temps.end(), series.temp_b().begin(), series.temp_b().end());
    s.temperature = AffineScaler::fit(temps, "temperature");
  }
  return s;
}

// ------------------------------------------------------------------- windows

Vector build_input_vector(const TimeSeries& series, std::size_t t, const InputConfig& cfg) {
  const Sample s = series.at(t);
  switch (cfg.k()) {
    case 1: return {s.u_a};
    case 2: return {s.u_a, s.temp_a};
    case 3: return {s.u_a, s.u_b};
    default: return {s.u_a, s.temp_a, s.u_b, s.temp_b};
  }
}

namespace {

void append_scaled_inputs(const TimeSeries& series, std::size_t t, const InputConfig& cfg,
                          const Scalers& scalers, Vector& out) {
  Vector v = build_input_vector(series, t, cfg);
  if (cfg.k() == 2) {
    v[1] = scalers.temperature.scale(v[1]);
  } else if (cfg.k() == 4) {
    v[1] = scalers.temperature.scale(v[1]);
    v[3] = scalers.temperature.scale(v[3]);
  }
  out.insert(out.end(), v.begin(), v.end());
}

}  // namespace

FeatureWindow build_feature_window(const TimeSeries& series, std::size_t t, const InputConfig& cfg,
                                   const Scalers& scalers, double theta_prev_deg) {
  if (t == 0) throw std::out_of_range("feature window needs t >= 1 (no previous sample at t = 0)");
  if (t >= series.size()) throw std::out_of_range("feature window index out of range");
  FeatureWindow w;
  w.values.reserve(cfg.window_dim());
  append_scaled_inputs(series, t, cfg, scalers, w.values);
  append_scaled_inputs(series, t - 1, cfg, scalers, w.values);
  w.values.push_back(scalers.theta.scale(theta_prev_deg));
  w.target = scalers.theta.scale(series.theta()[t]);
  return w;
}

FeatureWindow build_feature_window(const TimeSeries& series, std::size_t t, const InputConfig& cfg,
                                   const Scalers& scalers) {
  if (t == 0) throw std::out_of_range("feature window needs t >= 1 (no previous sample at t = 0)");
  if (t >= series.size()) throw std::out_of_range("feature window index out of range");
  return build_feature_window(series, t, cfg, scalers, series.theta()[t - 1]);
}

WindowSet build_windows(const TimeSeries& series, const InputConfig& cfg, const Scalers& scalers,
                        std::size_t begin, std::size_t end) {
  if (begin == 0 || begin > end || end > series.size()) {
    throw std::out_of_range("build_windows: invalid target range");
  }
  WindowSet set;
  set.first_target = begin;
  set.source_begin = begin - 1;
  set.source_end = end;
  set.inputs.reserve(end - begin);
  set.targets.reserve(end - begin);
  for (std::size_t t = begin; t < end; ++t) {
    FeatureWindow w = build_feature_window(series, t, cfg, scalers);
    set.inputs.push_back(std::move(w.values));
    set.targets.push_back(w.target);
  }
  return set;
}

WindowSet build_windows(const TimeSeries& series, const InputConfig& cfg, const Scalers& scalers) {
  if (series.size() < 2) throw DataError("need at least 2 samples to build windows");
  return build_windows(series, cfg, scalers, 1, series.size());
}

// --------------------------------------------------------------------- split

std::size_t split_index(std::size_t length, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  const auto n_train =
      static_cast<std::size_t>(std::floor(static_cast<double>(length) * train_fraction));
  if (n_train < 2 || length - n_train < 2) {
    throw DataError("split leaves fewer than 2 samples on one side (length " +
                    std::to_string(length) + ")");
  }
  return n_train;
}

std::pair<TimeSeries, TimeSeries> split_train_val(const TimeSeries& series, double train_fraction) {
  const std::size_t n_train = split_index(series.size(), train_fraction);
  return {series.slice(0, n_train), series.slice(n_train, series.size())};
}

// ------------------------------------------------------------------ resample

TimeSeries resample(const RawRecord& raw, double dt_target) {
  if (!(dt_target > 0.0)) throw ConfigError("resample: dt must be positive");
  const std::size_t n = raw.size();
  for (const auto* ch : {&raw.u_a, &raw.u_b, &raw.temp_a, &raw.temp_b, &raw.theta}) {
    if (ch->size() != n) throw DataError("resample: channel lengths differ");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(raw.time_s[i])) throw DataError("resample: non-finite timestamp");
    if (i > 0 && !(raw.time_s[i] > raw.time_s[i - 1])) {
      throw DataError("resample: timestamps not strictly increasing at row " + std::to_string(i));
    }
  }

  // Drop rows with a missing reading.
  std::vector<std::size_t> keep;
  keep.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool ok = std::isfinite(raw.u_a[i]) && std::isfinite(raw.u_b[i]) &&
                    std::isfinite(raw.temp_a[i]) && std::isfinite(raw.temp_b[i]) &&
                    std::isfinite(raw.theta[i]);
    if (ok) keep.push_back(i);
  }
  if (keep.size() < 2) throw DataError("resample: fewer than 2 usable samples");
  for (std::size_t j = 1; j < keep.size(); ++j) {
    const double gap = raw.time_s[keep[j]] - raw.time_s[keep[j - 1]];
    if (gap > kMaxGapSeconds) {
      throw DataError("resample: gap of " + std::to_string(gap) + " s at t=" +
                      std::to_string(raw.time_s[keep[j - 1]]) + " exceeds " +
                      std::to_string(kMaxGapSeconds) + " s");
    }
  }

  const double t0 = raw.time_s[keep.front()];
  const double t_end = raw.time_s[keep.back()];

  // Already on the target grid: pass values through untouched.
  if (keep.size() == n) {
    bool uniform = true;
    for (std::size_t i = 0; i < n && uniform; ++i) {
      uniform = std::abs(raw.time_s[i] - (t0 + dt_target * static_cast<double>(i))) <=
                1e-9 * dt_target;
    }
    if (uniform) {
      return TimeSeries(dt_target, t0, raw.u_a, raw.u_b, raw.temp_a, raw.temp_b, raw.theta,
                        raw.unidirectional);
    }
  }

  const auto n_grid = static_cast<std::size_t>(std::floor((t_end - t0) / dt_target + 1e-9)) + 1;
  std::array<std::vector<double>, 5> out;
  for (auto& ch : out) ch.resize(n_grid);
  const std::array<const std::vector<double>*, 5> src = {&raw.u_a, &raw.u_b, &raw.temp_a,
                                                         &raw.temp_b, &raw.theta};
  std::size_t seg = 0;
  for (std::size_t g = 0; g < n_grid; ++g) {
    const double t = std::min(t0 + dt_target * static_cast<double>(g), t_end);
    while (seg + 2 < keep.size() && raw.time_s[keep[seg + 1]] < t) ++seg;
    const std::size_t a = keep[seg];
    const std::size_t b = keep[seg + 1];
    const double w = (t - raw.time_s[a]) / (raw.time_s[b] - raw.time_s[a]);
    for (std::size_t c = 0; c < 5; ++c) {
      const double va = (*src[c])[a];
      const double vb = (*src[c])[b];
      out[c][g] = va + w * (vb - va);
    }
  }
  // Interpolated duties can leave [0, 1] only through rounding.
  for (std::size_t c = 0; c < 2; ++c) {
    for (double& u : out[c]) u = std::clamp(u, 0.0, 1.0);
  }
  return TimeSeries(dt_target, t0, std::move(out[0]), std::move(out[1]), std::move(out[2]),
                    std::move(out[3]), std::move(out[4]), raw.unidirectional);
}

void check_supports(const TimeSeries& series, const InputConfig& cfg) {
  if (cfg.uses_actuator_b() && series.unidirectional()) {
    throw ConfigError("input config k=" + std::to_string(cfg.k()) +
                      " needs u_b/temp_b_c, but the dataset is unidirectional (columns missing)");
  }
}

// ----------------------------------------------------------------------- CSV

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_cell(std::string_view cell, std::size_t line_no, std::string_view column) {
  cell = trim(cell);
  if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw DataError("line " + std::to_string(line_no) + ", column " + std::string(column) +
                    ": not a number: '" + std::string(cell) + "'");
  }
  return v;
}

}  // namespace

RawRecord load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file (header row missing)");
  const auto header = split_fields(trim(line));

  std::array<std::optional<std::size_t>, kCsvColumns.size()> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto name = trim(header[i]);
    for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
      if (name == kCsvColumns[c]) col[c] = i;
    }
  }
  for (std::size_t c : {0u, 1u, 3u, 5u}) {
    if (!col[c]) {
      throw DataError(path.string() + ": missing required column '" + std::string(kCsvColumns[c]) +
                      "'");
    }
  }

  RawRecord rec;
  rec.unidirectional = !col[2] || !col[4];
  std::array<std::vector<double>*, 6> dest = {&rec.time_s, &rec.u_a,    &rec.u_b,
                                              &rec.temp_a, &rec.temp_b, &rec.theta};
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
      dest[c]->push_back(col[c] ? parse_cell(fields[*col[c]], line_no, kCsvColumns[c]) : 0.0);
    }
  }
  return rec;
}

void save_csv(const TimeSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const bool both = !series.unidirectional();
  out << (both ? "time_s,u_a,u_b,temp_a_c,temp_b_c,theta_deg\n" : "time_s,u_a,temp_a_c,theta_deg\n");
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_double(series.time(i)) << ',' << format_double(series.u_a()[i]) << ',';
    if (both) out << format_double(series.u_b()[i]) << ',';
    out << format_double(series.temp_a()[i]) << ',';
    if (both) out << format_double(series.temp_b()[i]) << ',';
    out << format_double(series.theta()[i]) << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace hystdyn
