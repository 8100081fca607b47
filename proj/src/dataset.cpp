#include "treereg/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "treereg/stats.hpp"

namespace treereg {

std::vector<double> Dataset::row(int64_t i) const {
  std::vector<double> out(columns.size());
  for (size_t j = 0; j < columns.size(); ++j) out[j] = columns[j][static_cast<size_t>(i)];
  return out;
}

void Dataset::validate() const {
  if (columns.empty()) throw ValidationError("dataset: needs at least one feature column");
  if (response.empty()) throw ValidationError("dataset: needs at least one row");
  for (size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].size() != response.size()) {
      throw ValidationError("dataset: column " + std::to_string(j) + " length " +
                            std::to_string(columns[j].size()) + " != response length " +
                            std::to_string(response.size()));
    }
  }
  if (!feature_names.empty() && feature_names.size() != columns.size()) {
    throw ValidationError("dataset: feature_names size mismatch");
  }
}

int StepComponent::piece_index(double x) const {
  // piece = number of cuts <= x, so a point exactly on a cut belongs to the
  // right piece (indicator convention 1(x < cut)).
  return static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), x) - cuts.begin());
}

double StepComponent::operator()(double x) const { return levels[static_cast<size_t>(piece_index(x))]; }

void StepComponent::validate() const {
  if (levels.size() != cuts.size() + 1) throw ValidationError("step component: levels must be cuts+1");
  for (size_t i = 1; i < cuts.size(); ++i) {
    if (!(cuts[i - 1] < cuts[i])) throw ValidationError("step component: cuts must be strictly increasing");
  }
  for (size_t i = 1; i < levels.size(); ++i) {
    if (levels[i - 1] == levels[i]) throw ValidationError("step component: adjacent levels must differ");
  }
}

double sparse_quadratic_response(std::span<const double> x, int d0) {
  double y = 0.0;
  for (int j = 0; j < d0; ++j) {
    const double t = x[static_cast<size_t>(j)] * x[static_cast<size_t>(j)];
    y += (j % 2 == 0) ? t : -t;
  }
  return y;
}

double generator_response_bound(const GeneratorSpec& spec) {
  switch (spec.kind) {
    case GeneratorKind::sparse_quadratic: {
      // positive terms all 1, negative terms all 0 (or vice versa)
      const int pos = (spec.d0 + 1) / 2;
      const int neg = spec.d0 / 2;
      return static_cast<double>(std::max(pos, neg));
    }
    case GeneratorKind::sinusoid:
      return 1.0;
    case GeneratorKind::step_additive: {
      double lo = 0.0, hi = 0.0;
      for (const auto& s : spec.steps) {
        lo += *std::min_element(s.levels.begin(), s.levels.end());
        hi += *std::max_element(s.levels.begin(), s.levels.end());
      }
      return std::max(std::abs(lo), std::abs(hi));
    }
    case GeneratorKind::custom_additive:
      throw ValidationError("generator_response_bound: unavailable for custom components");
  }
  return 0.0;
}

void GeneratorSpec::validate() const {
  if (n < 1) throw ValidationError("generator: n must be >= 1");
  if (d < 1) throw ValidationError("generator: d must be >= 1");
  if (d0 < 1 || d0 > d) throw ValidationError("generator: need 1 <= d0 <= d");
  switch (kind) {
    case GeneratorKind::sinusoid:
      if (frequency < 1) throw ValidationError("generator: sinusoid frequency must be a positive integer");
      break;
    case GeneratorKind::step_additive:
      if (static_cast<int>(steps.size()) != d0) throw ValidationError("generator: steps size must equal d0");
      for (const auto& s : steps) s.validate();
      break;
    case GeneratorKind::custom_additive:
      if (static_cast<int>(components.size()) != d0)
        throw ValidationError("generator: components size must equal d0");
      break;
    case GeneratorKind::sparse_quadratic:
      break;
  }
}

Dataset generate(const GeneratorSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.columns.assign(static_cast<size_t>(spec.d), std::vector<double>(static_cast<size_t>(spec.n)));
  ds.response.resize(static_cast<size_t>(spec.n));
  Rng rng(spec.seed);
  for (int64_t i = 0; i < spec.n; ++i) {
    for (int j = 0; j < spec.d; ++j) ds.columns[static_cast<size_t>(j)][static_cast<size_t>(i)] = rng.uniform();
  }
  for (int64_t i = 0; i < spec.n; ++i) {
    double y = 0.0;
    switch (spec.kind) {
      case GeneratorKind::sparse_quadratic: {
        for (int j = 0; j < spec.d0; ++j) {
          const double v = ds.x(i, j);
          y += (j % 2 == 0) ? v * v : -v * v;
        }
        break;
      }
      case GeneratorKind::sinusoid:
        y = std::sin(2.0 * M_PI * spec.frequency * ds.x(i, 0));
        break;
      case GeneratorKind::step_additive:
        for (int j = 0; j < spec.d0; ++j) y += spec.steps[static_cast<size_t>(j)](ds.x(i, j));
        break;
      case GeneratorKind::custom_additive:
        for (int j = 0; j < spec.d0; ++j) y += spec.components[static_cast<size_t>(j)](ds.x(i, j));
        break;
    }
    ds.response[static_cast<size_t>(i)] = y;
  }
  return ds;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& token, double& out) {
  const std::string t = trim(token);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

struct RawCsv {
  std::vector<std::string> header;  // empty if none
  std::vector<std::vector<double>> rows;
  size_t width = 0;
};

RawCsv read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("csv: cannot open '" + path + "'");
  RawCsv raw;
  std::string line;
  int64_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tokens = split_line(line);
    if (first) {
      first = false;
      raw.width = tokens.size();
      bool all_numeric = true;
      std::vector<double> vals(tokens.size());
      for (size_t j = 0; j < tokens.size(); ++j) {
        if (!parse_double(tokens[j], vals[j])) {
          all_numeric = false;
          break;
        }
      }
      if (all_numeric) {
        raw.rows.push_back(std::move(vals));
      } else {
        for (auto& t : tokens) raw.header.push_back(trim(t));
      }
      continue;
    }
    if (tokens.size() != raw.width) {
      throw ParseError("csv: row " + std::to_string(line_no) + " has " + std::to_string(tokens.size()) +
                       " cells, expected " + std::to_string(raw.width));
    }
    std::vector<double> vals(tokens.size());
    for (size_t j = 0; j < tokens.size(); ++j) {
      if (!parse_double(tokens[j], vals[j])) {
        const std::string col =
            raw.header.empty() ? ("column " + std::to_string(j)) : ("column '" + raw.header[j] + "'");
        throw ParseError("csv: non-numeric cell at row " + std::to_string(line_no) + ", " + col +
                         " in '" + path + "'");
      }
    }
    raw.rows.push_back(std::move(vals));
  }
  if (raw.rows.empty()) throw ParseError("csv: no data rows in '" + path + "'");
  return raw;
}

Dataset assemble(const RawCsv& raw, size_t response_idx) {
  if (raw.width < 2) throw ParseError("csv: need at least one feature column plus the response");
  Dataset ds;
  const size_t n = raw.rows.size();
  ds.response.resize(n);
  for (size_t j = 0; j < raw.width; ++j) {
    if (j == response_idx) continue;
    ds.columns.emplace_back(n);
  }
  for (size_t i = 0; i < n; ++i) {
    size_t out_j = 0;
    for (size_t j = 0; j < raw.width; ++j) {
      if (j == response_idx) {
        ds.response[i] = raw.rows[i][j];
      } else {
        ds.columns[out_j++][i] = raw.rows[i][j];
      }
    }
  }
  if (!raw.header.empty()) {
    for (size_t j = 0; j < raw.width; ++j) {
      if (j == response_idx) {
        ds.response_name = raw.header[j];
      } else {
        ds.feature_names.push_back(raw.header[j]);
      }
    }
  }
  ds.validate();
  return ds;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& response_column) {
  RawCsv raw = read_numeric_csv(path);
  if (raw.header.empty()) {
    // no header: accept a numeric index passed as string
    double idx;
    if (parse_double(response_column, idx) && idx == std::floor(idx)) {
      return assemble(raw, static_cast<size_t>(idx));
    }
    throw ParseError("csv: file has no header row, response column '" + response_column +
                     "' cannot be resolved by name");
  }
  auto it = std::find(raw.header.begin(), raw.header.end(), response_column);
  if (it == raw.header.end()) {
    throw ParseError("csv: response column '" + response_column + "' not found in header");
  }
  return assemble(raw, static_cast<size_t>(it - raw.header.begin()));
}

Dataset load_csv_index(const std::string& path, int response_index) {
  RawCsv raw = read_numeric_csv(path);
  if (response_index < 0 || static_cast<size_t>(response_index) >= raw.width) {
    throw ParseError("csv: response index " + std::to_string(response_index) + " out of range (width " +
                     std::to_string(raw.width) + ")");
  }
  return assemble(raw, static_cast<size_t>(response_index));
}

namespace {
std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}
}  // namespace

void write_csv(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream out(path);
  if (!out) throw ParseError("csv: cannot write '" + path + "'");
  for (int j = 0; j < ds.d(); ++j) {
    const std::string name =
        ds.feature_names.empty() ? ("x" + std::to_string(j)) : ds.feature_names[static_cast<size_t>(j)];
    out << name << ',';
  }
  out << (ds.response_name.empty() ? "y" : ds.response_name) << '\n';
  for (int64_t i = 0; i < ds.n(); ++i) {
    for (int j = 0; j < ds.d(); ++j) out << format_double(ds.x(i, j)) << ',';
    out << format_double(ds.response[static_cast<size_t>(i)]) << '\n';
  }
}

Dataset scale_unit_interval(const Dataset& ds) {
  ds.validate();
  Dataset out = ds;
  for (auto& col : out.columns) {
    const auto [mn_it, mx_it] = std::minmax_element(col.begin(), col.end());
    const double mn = *mn_it, mx = *mx_it;
    if (mx > mn) {
      const double span = mx - mn;
      for (auto& v : col) v = (v - mn) / span;
    } else {
      std::fill(col.begin(), col.end(), 0.0);
    }
  }
  return out;
}

Dataset augment_noise(const Dataset& ds, int extra, uint64_t seed) {
  ds.validate();
  if (extra < 0) throw ValidationError("augment_noise: extra must be >= 0");
  Dataset out = ds;
  Rng rng(seed);
  for (int e = 0; e < extra; ++e) {
    std::vector<double> col(static_cast<size_t>(ds.n()));
    for (auto& v : col) v = rng.uniform();
    out.columns.push_back(std::move(col));
    if (!out.feature_names.empty()) out.feature_names.push_back("noise" + std::to_string(e));
  }
  return out;
}

Dataset subset(const Dataset& ds, std::span<const int64_t> rows) {
  Dataset out;
  out.feature_names = ds.feature_names;
  out.response_name = ds.response_name;
  out.columns.assign(ds.columns.size(), {});
  for (size_t j = 0; j < ds.columns.size(); ++j) {
    out.columns[j].reserve(rows.size());
    for (int64_t r : rows) out.columns[j].push_back(ds.columns[j][static_cast<size_t>(r)]);
  }
  out.response.reserve(rows.size());
  for (int64_t r : rows) out.response.push_back(ds.response[static_cast<size_t>(r)]);
  return out;
}

}  // namespace treereg
