#include "bergman/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "bergman/error.hpp"

namespace bergman::io {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_number(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc{} && res.ptr == last;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::vector<double>> read_numeric_csv(const std::string& path, std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<double> vals;
    std::stringstream ss(t);
    std::string field;
    bool numeric = true;
    while (std::getline(ss, field, ',')) {
      double v = 0.0;
      if (!parse_number(trim(field), v)) {
        numeric = false;
        break;
      }
      vals.push_back(v);
    }
    if (!numeric) {
      if (first_content) {
        first_content = false;
        continue;  // header
      }
      throw ValidationError(path + ":" + std::to_string(lineno) + ": non-numeric field '" + trim(field) + "'");
    }
    first_content = false;
    if (vals.size() != columns) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(columns) +
                            " columns, found " + std::to_string(vals.size()));
    }
    rows.push_back(std::move(vals));
  }
  return rows;
}

PointSequence read_points_csv(const std::string& path, double delta_sep) {
  const auto rows = read_numeric_csv(path, 2);
  if (rows.empty()) throw ValidationError(path + ": sequence file has no points");
  std::vector<Complex> pts;
  pts.reserve(rows.size());
  for (const auto& r : rows) pts.emplace_back(r[0], r[1]);
  return PointSequence(std::move(pts), path, delta_sep);
}

DiscreteMeasure read_measure_csv(const std::string& path) {
  const auto rows = read_numeric_csv(path, 3);
  if (rows.empty()) throw ValidationError(path + ": measure file has no atoms");
  std::vector<Atom> atoms;
  for (const auto& r : rows) atoms.push_back({Complex(r[0], r[1]), r[2]});
  return DiscreteMeasure(std::move(atoms));
}

struct CsvWriter::Impl {
  std::ofstream out;
  std::size_t columns = 0;
  std::string path;
};

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header) : impl_(new Impl) {
  impl_->out.open(path);
  impl_->path = path;
  if (!impl_->out) {
    delete impl_;
    throw ValidationError("cannot write '" + path + "'");
  }
  impl_->columns = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) impl_->out << (i ? "," : "") << header[i];
  impl_->out << '\n';
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != impl_->columns) throw ValidationError("CSV row width mismatch for " + impl_->path);
  for (std::size_t i = 0; i < values.size(); ++i) impl_->out << (i ? "," : "") << format_double(values[i]);
  impl_->out << '\n';
}

PointSequence generate_from_spec(std::string_view spec, const RadiiSchedule& s, double delta_sep) {
  static const std::regex outer(R"(^\s*lattice\s*\((.*)\)\s*$)");
  static const std::regex kv(R"(\s*([a-z_]+)\s*=\s*([^,\s]+)\s*)");
  const std::string text(spec);
  std::smatch m;
  if (!std::regex_match(text, m, outer)) {
    throw ValidationError("unknown generator '" + text + "' (expected lattice(spacing=..., stride=...))");
  }
  double spacing = 0.0;
  double stride = 1.0;
  LatticeOptions opt;
  opt.delta_sep = delta_sep;
  std::stringstream ss(m[1].str());
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::smatch p;
    if (!std::regex_match(part, p, kv)) throw ValidationError("malformed generator argument '" + trim(part) + "'");
    double v = 0.0;
    if (!parse_number(p[2].str(), v)) throw ValidationError("generator argument '" + p[1].str() + "' is not a number");
    const std::string key = p[1].str();
    if (key == "spacing") {
      spacing = v;
    } else if (key == "stride") {
      stride = v;
    } else if (key == "phase") {
      opt.phase_offset = v;
    } else if (key == "max_circle") {
      opt.max_circle = static_cast<std::size_t>(v);
    } else if (key == "min_circle") {
      opt.min_circle = static_cast<std::size_t>(v);
    } else {
      throw ValidationError("unknown generator argument '" + key + "'");
    }
  }
  if (!(spacing > 0.0)) throw ValidationError("lattice generator needs spacing > 0");
  if (stride < 1.0 || stride != std::floor(stride)) throw ValidationError("lattice stride must be a positive integer");
  return generate_circle_lattice(s, spacing, static_cast<std::size_t>(stride), opt);
}

Json points_json(std::span<const Complex> pts) {
  Json a = Json::array();
  for (const auto& p : pts) a.push_back({p.real(), p.imag()});
  return a;
}

Json gmodel_json(const GModel& g) {
  Json j;
  j["case"] = g.kind() == GCase::interpolation ? "I" : "S";
  j["epsilon"] = g.epsilon();
  j["m"] = g.m();
  j["zeros"] = points_json(g.lambda().points());
  if (g.kind() == GCase::interpolation) {
    const auto extra = g.atom_zeros();
    for (const auto& p : extra) j["zeros"].push_back({p.real(), p.imag()});
    j["poles"] = Json::array();
  } else {
    j["poles"] = points_json(g.poles());
  }
  Json circles = Json::array();
  for (const auto& c : g.circles()) {
    circles.push_back({{"r", c.radius},
                       {"gap", c.gap},
                       {"count", c.count},
                       {"phase", c.phase},
                       {"sign", c.sign},
                       {"block", c.block},
                       {"shifted", c.shifted},
                       {"remainder", c.remainder}});
  }
  j["circles"] = std::move(circles);
  return j;
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace bergman::io
