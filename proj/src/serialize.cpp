#include "vqlab/serialize.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "vqlab/error.hpp"

namespace vqlab {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) { append(header); }

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw InputError("CSV row width does not match the header");
  append(fields);
}

void CsvWriter::append(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) text_ += ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
      text_ += f;
      continue;
    }
    text_ += '"';
    for (char ch : f) {
      if (ch == '"') text_ += '"';
      text_ += ch;
    }
    text_ += '"';
  }
  text_ += '\n';
}

namespace {

bool parse_row(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    if (b == std::string::npos) return false;
    cell = cell.substr(b, e - b + 1);
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size()) return false;
    out.push_back(v);
  }
  return !out.empty();
}

}  // namespace

PointSet read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open CSV file " + path.string());
  std::vector<Point> rows;
  std::string line;
  std::vector<double> vals;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!parse_row(line, vals)) {
      if (first) {
        first = false;
        continue;
      }
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": non-numeric row");
    }
    first = false;
    rows.push_back(vals);
  }
  if (rows.empty()) throw InputError("CSV file " + path.string() + " has no points");
  return PointSet::from_rows(rows);
}

json points_to_json(const PointSet& p) {
  json out = json::array();
  for (std::size_t i = 0; i < p.size(); ++i) out.push_back(std::vector<double>(p[i].begin(), p[i].end()));
  return out;
}

PointSet points_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw InputError("expected a nonempty array of points");
  return PointSet::from_rows(j.get<std::vector<Point>>());
}

json codebook_to_json(const Codebook& c) { return points_to_json(c.points()); }

Codebook codebook_from_json(const json& j) { return Codebook(points_from_json(j)); }

namespace {

std::vector<double> weights_or_uniform(const json& j, const char* key, std::size_t count) {
  if (j.contains(key)) return j.at(key).get<std::vector<double>>();
  std::vector<double> w(count, 1.0 / static_cast<double>(count));
  double rest = 1.0;
  for (std::size_t i = 0; i + 1 < count; ++i) rest -= w[i];
  w.back() = rest;
  return w;
}

std::optional<double> optional_number(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

SourceDistribution distribution_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object() || !j.contains("kind")) throw InputError("distribution needs a \"kind\" field");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "finite") {
    PointSet atoms;
    if (j.contains("atoms_csv")) {
      std::filesystem::path p = j.at("atoms_csv").get<std::string>();
      atoms = read_points_csv(p.is_absolute() ? p : base_dir / p);
    } else {
      atoms = points_from_json(j.at("atoms"));
    }
    auto w = weights_or_uniform(j, "weights", atoms.size());
    return FiniteSupportDist::create(std::move(atoms), std::move(w), optional_number(j, "radius"));
  }
  if (kind == "mixture") {
    PointSet means = points_from_json(j.at("means"));
    auto w = weights_or_uniform(j, "weights", means.size());
    return TruncatedGaussianMixture::create(std::move(means), std::move(w), j.at("sigma").get<double>(),
                                            j.at("radius").get<double>());
  }
  if (kind == "assouad") {
    const auto k = j.at("k").get<std::size_t>();
    const auto d = j.at("d").get<std::size_t>();
    const double M = j.value("M", 1.0);
    const std::size_t m = 2 * k / 3;
    double delta = 0.0;
    if (j.contains("delta")) {
      delta = j.at("delta").get<double>();
    } else if (j.contains("n")) {
      delta = assouad_delta_for_n(m, j.at("n").get<std::size_t>());
    } else {
      throw InputError("assouad distribution needs \"delta\" or \"n\"");
    }
    const AssouadFamily fam = build_assouad(k, d, M, delta);
    std::vector<int> sigma;
    if (j.contains("sigma")) {
      sigma = j.at("sigma").get<std::vector<int>>();
    } else if (j.contains("tau")) {
      sigma = sigma_of_tau(j.at("tau").get<std::vector<int>>());
    } else {
      sigma = sigma_of_tau(std::vector<int>(m / 2, 1));
    }
    if (sigma.size() != m || !is_balanced(sigma)) throw InputError("assouad sigma must be balanced of length m");
    return fam.distribution(sigma);
  }
  if (kind == "cone-mixture") {
    PointSet centers = points_from_json(j.at("centers"));
    auto w = weights_or_uniform(j, "masses", centers.size());
    return ConeMixture::create(std::move(centers), std::move(w), j.at("rho").get<double>(),
                               optional_number(j, "radius"));
  }
  throw InputError("unknown distribution kind \"" + kind + "\"");
}

json distribution_to_json(const SourceDistribution& P) {
  struct Visitor {
    json operator()(const FiniteSupportDist& f) const {
      return {{"kind", "finite"}, {"atoms", points_to_json(f.atoms)}, {"weights", f.weights}, {"radius", f.radius}};
    }
    json operator()(const TruncatedGaussianMixture& m) const {
      return {{"kind", "mixture"},       {"means", points_to_json(m.means)}, {"weights", m.weights},
              {"sigma", m.sigma},        {"radius", m.radius},               {"normalizers", m.normalizers},
              {"eta", m.eta}};
    }
    json operator()(const ConeMixture& c) const {
      json out = {{"kind", c.family ? "assouad" : "cone-mixture"},
                  {"centers", points_to_json(c.centers)},
                  {"masses", c.masses},
                  {"rho", c.rho},
                  {"radius", c.radius}};
      if (c.family) {
        out["k"] = c.family->k;
        out["d"] = c.family->d;
        out["M"] = c.family->M;
        out["delta"] = c.family->delta;
        out["Delta"] = c.family->Delta;
        out["sigma"] = c.sigma;
      }
      return out;
    }
  };
  return std::visit(Visitor{}, P);
}

json curve_to_json(const PCurve& c) {
  return {{"t", c.t}, {"estimate", c.estimate}, {"std_error", c.std_error}, {"exact", c.exact}, {"draws", c.draws}};
}

json margin_report_to_json(const MarginReport& r) {
  json out = {{"B", r.B},
              {"p_min", r.p_min},
              {"M", r.M},
              {"slope_bound", r.slope_bound},
              {"p_curve", curve_to_json(r.curve)},
              {"verdicts", r.verdicts},
              {"r0_hat", r.r0_hat},
              {"satisfied", r.satisfied},
              {"caveats", r.caveats}};
  out["epsilon_hat"] = r.epsilon_hat ? json(*r.epsilon_hat) : json("not-found");
  out["kappa0"] = r.kappa0 ? json(*r.kappa0) : json(nullptr);
  return out;
}

json certificate_to_json(const FiniteCertificate& c) {
  json optima = json::array();
  for (const auto& o : c.optima) optima.push_back(codebook_to_json(o));
  return {{"optima", optima},
          {"risk", c.risk},
          {"risk_k_minus_1", c.risk_k_minus_1},
          {"B", c.B},
          {"p_min", c.p_min},
          {"M", c.M},
          {"slope_bound", c.slope_bound},
          {"r0", c.r0},
          {"epsilon", c.epsilon},
          {"stationary_partitions", c.stationary_partitions},
          {"kappa0", c.kappa0},
          {"margin_satisfied", c.margin_satisfied}};
}

json mixture_report_to_json(const MixtureConditionReport& r) {
  return {{"lhs", r.lhs},
          {"rhs", r.rhs},
          {"separation_term", r.separation_term},
          {"boundary_term", r.boundary_term},
          {"satisfied", r.satisfied},
          {"margin_radius", r.margin_radius},
          {"mean_separation", r.mean_separation},
          {"eta", r.eta},
          {"means_well_inside", r.means_well_inside},
          {"theory", r.theory},
          {"caveats", r.caveats}};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace vqlab
