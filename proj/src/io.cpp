#include "kpz2d/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace kpz2d::io {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw_error(ErrorKind::io, "cannot open " + path.string() + " for writing");
  }
  template <class T>
  void put(T v) {
    v = to_little(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void finish() {
    out_.flush();
    if (!out_) throw_error(ErrorKind::io, "write failed for " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw_error(ErrorKind::io, "cannot open " + path.string());
  }
  template <class T>
  T get() {
    T v;
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw_error(ErrorKind::io, "truncated binary file " + path_.string());
    return to_little(v);
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof())
      throw_error(ErrorKind::io, "trailing bytes in binary file " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

class TextWriter {
 public:
  explicit TextWriter(const std::filesystem::path& path) : path_(path), out_(path) {
    if (!out_) throw_error(ErrorKind::io, "cannot open " + path.string() + " for writing");
  }
  std::ofstream& stream() { return out_; }
  void finish() {
    out_.flush();
    if (!out_) throw_error(ErrorKind::io, "write failed for " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw_error(ErrorKind::io, "malformed number '" + s + "'");
  }
}

template <class T>
void write_field_binary_impl(const std::filesystem::path& path, const LatticeField<T>& field) {
  BinaryWriter w(path);
  w.put<std::uint64_t>(field.side());
  w.put<double>(field.spacing());
  w.put<double>(field.time());
  for (const T& v : field.values()) {
    if constexpr (std::is_same_v<T, double>) {
      w.put<double>(v);
    } else {
      w.put<double>(v.real());
      w.put<double>(v.imag());
    }
  }
  w.finish();
}

template <class T>
LatticeField<T> read_field_binary_impl(const std::filesystem::path& path) {
  BinaryReader r(path);
  const auto side = r.get<std::uint64_t>();
  const auto spacing = r.get<double>();
  const auto time = r.get<double>();
  if (side == 0 || side > (1u << 16)) throw_error(ErrorKind::io, "implausible lattice side in " + path.string());
  LatticeField<T> field(side, spacing);
  field.set_time(time);
  for (T& v : field.values()) {
    if constexpr (std::is_same_v<T, double>) {
      v = r.get<double>();
    } else {
      const double re = r.get<double>();
      v = {re, r.get<double>()};
    }
  }
  r.expect_end();
  return field;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_field_binary(const std::filesystem::path& path, const PhaseField& field) {
  write_field_binary_impl(path, field);
}
void write_field_binary(const std::filesystem::path& path, const ComplexField& field) {
  write_field_binary_impl(path, field);
}
PhaseField read_phase_field_binary(const std::filesystem::path& path) { return read_field_binary_impl<double>(path); }
ComplexField read_complex_field_binary(const std::filesystem::path& path) {
  return read_field_binary_impl<std::complex<double>>(path);
}

void write_field_csv(const std::filesystem::path& path, const PhaseField& field) {
  TextWriter w(path);
  auto& out = w.stream();
  out << "x,y,value\n";
  for (std::size_t y = 0; y < field.side(); ++y)
    for (std::size_t x = 0; x < field.side(); ++x)
      out << x << ',' << y << ',' << format_double(field[field.index(x, y)]) << '\n';
  w.finish();
}

void write_field_csv(const std::filesystem::path& path, const ComplexField& field) {
  TextWriter w(path);
  auto& out = w.stream();
  out << "x,y,re,im\n";
  for (std::size_t y = 0; y < field.side(); ++y)
    for (std::size_t x = 0; x < field.side(); ++x) {
      const auto v = field[field.index(x, y)];
      out << x << ',' << y << ',' << format_double(v.real()) << ',' << format_double(v.imag()) << '\n';
    }
  w.finish();
}

void write_image_binary(const std::filesystem::path& path, const Image& image) {
  BinaryWriter w(path);
  w.put<std::uint64_t>(image.width);
  w.put<std::uint64_t>(image.height);
  for (double v : image.data) w.put<double>(v);
  w.finish();
}

Image read_image_binary(const std::filesystem::path& path) {
  BinaryReader r(path);
  const auto width = r.get<std::uint64_t>();
  const auto height = r.get<std::uint64_t>();
  if (width == 0 || height == 0 || width > (1u << 16) || height > (1u << 16))
    throw_error(ErrorKind::io, "implausible image shape in " + path.string());
  Image im(width, height);
  for (double& v : im.data) v = r.get<double>();
  r.expect_end();
  return im;
}

void write_image_csv(const std::filesystem::path& path, const Image& image) {
  TextWriter w(path);
  auto& out = w.stream();
  out << "x,y,value\n";
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x) out << x << ',' << y << ',' << format_double(image.at(x, y)) << '\n';
  w.finish();
}

void write_complex_image_csv(const std::filesystem::path& path, const ComplexImage& image, const Mask& valid) {
  TextWriter w(path);
  auto& out = w.stream();
  out << "x,y,re_g1,im_g1,abs_g1,valid\n";
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x) {
      const auto g = image.at(x, y);
      out << x << ',' << y << ',' << format_double(g.real()) << ',' << format_double(g.imag()) << ','
          << format_double(std::abs(g)) << ',' << int(valid.at(x, y)) << '\n';
    }
  w.finish();
}

void write_correlation_csv(const std::filesystem::path& path, const CorrelationMap& map) {
  TextWriter w(path);
  auto& out = w.stream();
  const bool coherence = map.kind == CorrelationKind::coherence;
  if (coherence)
    out << "dr,dt,re_g1,im_g1,abs_g1,stderr,n_samples\n";
  else
    out << "dr,dt," << (map.kind == CorrelationKind::connected ? "C" : "minus_log_g1") << ",stderr,n_samples\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t ir = 0; ir < map.dr_axis.size(); ++ir)
    for (std::size_t it = 0; it < map.dt_axis.size(); ++it) {
      const auto& c = map.cell(ir, it);
      out << format_double(map.dr_axis[ir]) << ',' << format_double(map.dt_axis[it]) << ',';
      if (coherence) {
        const auto v = c.usable ? c.value : std::complex<double>(nan, nan);
        out << format_double(v.real()) << ',' << format_double(v.imag()) << ','
            << format_double(c.usable ? std::abs(v) : nan);
      } else {
        out << format_double(c.usable ? c.value.real() : nan);
      }
      out << ',' << format_double(c.usable ? c.stderr_ : nan) << ',' << c.n_samples << '\n';
    }
  w.finish();
}

CorrelationMap read_correlation_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw_error(ErrorKind::io, "empty correlation file " + path.string());
  const auto header = split_csv(line);
  CorrelationKind kind;
  std::size_t n_cols;
  if (header == std::vector<std::string>{"dr", "dt", "re_g1", "im_g1", "abs_g1", "stderr", "n_samples"}) {
    kind = CorrelationKind::coherence;
    n_cols = 7;
  } else if (header == std::vector<std::string>{"dr", "dt", "C", "stderr", "n_samples"}) {
    kind = CorrelationKind::connected;
    n_cols = 5;
  } else if (header == std::vector<std::string>{"dr", "dt", "minus_log_g1", "stderr", "n_samples"}) {
    kind = CorrelationKind::minus_log_coherence;
    n_cols = 5;
  } else {
    throw_error(ErrorKind::io, "unrecognized correlation CSV header in " + path.string());
  }
  struct Row {
    double dr, dt;
    CorrelationCell cell;
  };
  std::vector<Row> rows;
  std::vector<double> drs, dts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != n_cols) throw_error(ErrorKind::io, "malformed row in " + path.string());
    Row r{parse_double(f[0]), parse_double(f[1]), {}};
    if (kind == CorrelationKind::coherence) {
      r.cell.value = {parse_double(f[2]), parse_double(f[3])};
    } else {
      r.cell.value = {parse_double(f[2]), 0.0};
    }
    r.cell.stderr_ = parse_double(f[n_cols - 2]);
    r.cell.n_samples = static_cast<std::size_t>(std::stoull(f[n_cols - 1]));
    r.cell.usable = std::isfinite(r.cell.value.real());
    if (!r.cell.usable) r.cell.stderr_ = 0.0;
    drs.push_back(r.dr);
    dts.push_back(r.dt);
    rows.push_back(r);
  }
  std::sort(drs.begin(), drs.end());
  drs.erase(std::unique(drs.begin(), drs.end()), drs.end());
  std::sort(dts.begin(), dts.end());
  dts.erase(std::unique(dts.begin(), dts.end()), dts.end());
  CorrelationMap map(kind, drs, dts);
  for (auto& c : map.cells) c.value = {std::numeric_limits<double>::quiet_NaN(), 0.0};
  for (const auto& r : rows) {
    const auto ir = static_cast<std::size_t>(std::lower_bound(drs.begin(), drs.end(), r.dr) - drs.begin());
    const auto it = static_cast<std::size_t>(std::lower_bound(dts.begin(), dts.end(), r.dt) - dts.begin());
    map.cell(ir, it) = r.cell;
  }
  return map;
}

void write_exponent_csv(const std::filesystem::path& path, const ExponentSeries& series) {
  TextWriter w(path);
  auto& out = w.stream();
  out << "axis_value,exponent,stderr,quality_flag\n";
  for (const auto& p : series)
    out << format_double(p.axis_value) << ',' << format_double(p.exponent) << ',' << format_double(p.stderr_) << ','
        << to_string(p.quality) << '\n';
  w.finish();
}

void write_table_csv(const std::filesystem::path& path, const ScalingFunctionTable& table) {
  TextWriter w(path);
  auto& out = w.stream();
  out << "y,C_of_y\n";
  const auto y = table.y_grid();
  const auto c = table.value_grid();
  for (std::size_t i = 0; i < y.size(); ++i) out << format_double(y[i]) << ',' << format_double(c[i]) << '\n';
  w.finish();
}

namespace {

Json window_to_json(const ScalingWindow& w) {
  return Json{{"dr_min", w.dr_min}, {"dr_max", w.dr_max}, {"dt_min", w.dt_min}, {"dt_max", w.dt_max}};
}

}  // namespace

Json table_to_json(const ScalingFunctionTable& table) {
  const auto& p = table.provenance();
  Json doc;
  doc["normalization"] = "C(0) = 1";
  doc["provenance"] = {{"source", p.source},   {"beta", p.beta},
                       {"chi", p.chi},         {"amplitude_A0", p.amplitude},
                       {"window", window_to_json(p.window)}, {"n_points", p.n_points}};
  doc["tail_slope"] = table.tail_slope();
  doc["tail_slope_expected"] = 2.0 * p.chi;
  doc["nodes"] = {{"y", table.node_y()}, {"C_of_y", table.node_values()}, {"count", table.node_counts()}};
  return doc;
}

ScalingFunctionTable table_from_json(const Json& doc) {
  try {
    const auto& p = doc.at("provenance");
    const auto& w = p.at("window");
    TableProvenance prov{p.at("source").get<std::string>(),
                         p.at("beta").get<double>(),
                         p.at("chi").get<double>(),
                         p.at("amplitude_A0").get<double>(),
                         {w.at("dr_min").get<double>(), w.at("dr_max").get<double>(), w.at("dt_min").get<double>(),
                          w.at("dt_max").get<double>()},
                         p.at("n_points").get<std::size_t>()};
    const auto& n = doc.at("nodes");
    return ScalingFunctionTable::from_nodes(n.at("y").get<std::vector<double>>(),
                                            n.at("C_of_y").get<std::vector<double>>(),
                                            n.at("count").get<std::vector<std::size_t>>(), std::move(prov));
  } catch (const nlohmann::json::exception& e) {
    throw_error(ErrorKind::io, std::string("malformed scaling table JSON: ") + e.what());
  }
}

Json fit_to_json(const ScalingFit& fit) {
  Json doc;
  doc["mode"] = to_string(fit.mode);
  doc["beta"] = fit.beta;
  doc["chi"] = fit.chi;
  doc["z"] = fit.z();
  doc["amplitude_A"] = fit.amplitude_a;
  doc["amplitude_B"] = fit.amplitude_b;
  doc["stderr"] = {{"A", fit.stderr_of(0)}, {"B", fit.stderr_of(1)}, {"beta", fit.stderr_of(2)},
                   {"chi", fit.stderr_of(3)}};
  Json cov = Json::array();
  for (const auto& row : fit.covariance) cov.push_back(row);
  doc["covariance_order"] = {"A", "B", "beta", "chi"};
  doc["covariance"] = cov;
  std::size_t n_excluded = 0;
  for (bool b : fit.excluded_mask) n_excluded += b;
  doc["n_points"] = fit.excluded_mask.size();
  doc["n_excluded"] = n_excluded;
  doc["excluded_mask"] = fit.excluded_mask;
  doc["n_iterations"] = fit.n_iterations;
  doc["residual_rms"] = fit.residual_rms;
  doc["cost"] = fit.cost;
  doc["converged"] = fit.converged;
  return doc;
}

void write_collapse_csv(const std::filesystem::path& path, const std::vector<CollapsePoint>& data,
                        const ScalingFit& fit) {
  TextWriter w(path);
  auto& out = w.stream();
  out << "x_rescaled,y_rescaled,err_x,err_y,excluded_flag,dr,dt\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& p = data[i];
    const double x = fit.amplitude_b * p.dr * std::pow(p.dt, -fit.beta / fit.chi);
    const double y = p.value / (fit.amplitude_a * std::pow(p.dt, 2.0 * fit.beta));
    const bool excluded = i < fit.excluded_mask.size() && fit.excluded_mask[i];
    out << format_double(x) << ',' << format_double(y) << ',' << format_double(x * p.dr_err / p.dr) << ','
        << format_double(y * p.value_err / p.value) << ',' << int(excluded) << ',' << format_double(p.dr) << ','
        << format_double(p.dt) << '\n';
  }
  w.finish();
}

void write_json(const std::filesystem::path& path, const Json& doc) {
  TextWriter w(path);
  w.stream() << doc.dump(2) << '\n';
  w.finish();
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const std::filesystem::path& path) {
  const auto text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw_error(ErrorKind::config, "invalid JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace kpz2d::io
