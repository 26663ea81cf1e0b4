#include "ast/calib.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "ast/errors.hpp"
#include "ast/json_io.hpp"
#include "ast/util.hpp"

namespace ast::calib {

namespace {

constexpr int kCsvDigits = 9;
constexpr std::size_t kFixedColumns = 9;

double csv_round(double v) { return parse_double(format_sig(v, kCsvDigits), "csv value"); }

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

const GridPoint& CalibrationGrid::at(const std::string& label) const {
  for (const auto& p : points)
    if (p.label == label) return p;
  throw InputError("no calibration point labelled '" + label + "'");
}

bool CalibrationGrid::contains(double x, double y) const {
  return std::any_of(points.begin(), points.end(), [&](const GridPoint& p) {
    return std::abs(p.x - x) < 1e-9 && std::abs(p.y - y) < 1e-9;
  });
}

CalibrationGrid calibration_grid() {
  return {{{"A", 10, 10}, {"B", 13, 10}, {"C", 16, 10},
           {"D", 16, 13}, {"E", 13, 13}, {"F", 10, 13},
           {"G", 16, 16}, {"H", 13, 16}, {"I", 10, 16}}};
}

std::vector<double> depth_grid(const skin::SkinSpec& spec) {
  const auto steps = static_cast<int>(std::llround(spec.max_depth / spec.depth_step));
  std::vector<double> out;
  for (int i = 1; i <= steps; ++i) out.push_back(std::min(spec.max_depth, i * spec.depth_step));
  return out;
}

ProtocolSpec ProtocolSpec::for_skin(const skin::SkinSpec& spec) {
  ProtocolSpec p;
  p.depths = depth_grid(spec);
  return p;
}

void ProtocolSpec::validate(const skin::SkinSpec& spec) const {
  if (grid.points.empty()) throw ConfigError("protocol: empty calibration grid");
  if (pegs.empty()) throw ConfigError("protocol: no pegs");
  if (depths.empty()) throw ConfigError("protocol: empty depth grid");
  for (double d : depths)
    if (!(d >= 0.0 && d <= spec.max_depth))
      throw ConfigError("protocol: depth " + format_shortest(d) + " mm outside the skin's range");
  if (frames_per_press < 1) throw ConfigError("protocol: frames_per_press must be >= 1");
  if (!(noise_sd >= 0.0)) throw ConfigError("protocol: noise_sd must be >= 0");
}

std::size_t Dataset::feature_dim() const {
  return samples.empty() ? 0 : samples.front().features.magnitudes.size();
}

std::string dataset_fingerprint(const skin::SkinSpec& spec, const ProtocolSpec& protocol,
                                const signal::ToneSet& tones) {
  const nlohmann::json j = {{"skin", spec}, {"protocol", protocol}, {"tones", tones}};
  return fnv1a_hex(j.dump());
}

Dataset generate_dataset(const skin::SkinSpec& spec, const ProtocolSpec& protocol,
                         const signal::ToneSet& tones) {
  spec.validate();
  tones.validate();
  protocol.validate(spec);

  Dataset ds;
  ds.skin = spec;
  ds.protocol = protocol;
  ds.tones = tones;
  ds.seed = protocol.base_seed;
  ds.fingerprint = dataset_fingerprint(spec, protocol, tones);

  const auto layout = skin::channel_layout(spec);
  std::uint64_t index = 0;
  for (const auto& point : protocol.grid.points) {
    for (double peg : protocol.pegs) {
      for (double depth : protocol.depths) {
        const skin::ContactState contact{point.x, point.y, depth, skin::Peg{peg}};
        try {
          skin::validate_contact(spec, contact);
        } catch (const DomainError& e) {
          throw ProtocolError("point " + point.label + " with peg " + format_shortest(peg) +
                              " mm: " + e.what());
        }
        const double force = skin::true_force(spec, contact);
        for (int trial = 0; trial < protocol.frames_per_press; ++trial, ++index) {
          LabeledSample s;
          s.features = skin::sense(spec, layout, contact, tones, protocol.noise_sd,
                                   derive_seed(protocol.base_seed, index));
          s.force = force;
          s.diameter = peg;
          s.x = point.x;
          s.y = point.y;
          s.point_id = point.label;
          s.depth = depth;
          s.trial = trial;
          s.skin = spec.name();
          ds.samples.push_back(std::move(s));
        }
      }
    }
  }
  return ds;
}

void round_to_csv_precision(Dataset& dataset) {
  for (auto& s : dataset.samples) {
    for (double& m : s.features.magnitudes) m = csv_round(m);
    s.force = csv_round(s.force);
    s.diameter = csv_round(s.diameter);
    s.x = csv_round(s.x);
    s.y = csv_round(s.y);
    s.depth = csv_round(s.depth);
  }
}

SplitIndices split_indices(std::size_t n, std::uint64_t seed) {
  if (n < 10) throw SplitError("split needs at least 10 samples, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_test = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(0.225 * static_cast<double>(n)));
  SplitIndices out;
  out.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test),
                        order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
  out.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), order.end());
  return out;
}

Split split(const Dataset& dataset, std::uint64_t seed) {
  const auto idx = split_indices(dataset.samples.size(), seed);
  Split out;
  auto take = [&](const std::vector<std::size_t>& from, std::vector<LabeledSample>& to) {
    to.reserve(from.size());
    for (std::size_t i : from) to.push_back(dataset.samples[i]);
  };
  take(idx.train, out.train);
  take(idx.validation, out.validation);
  take(idx.test, out.test);
  return out;
}

std::string csv_header(int layer_count) {
  std::string h = "skin,layer_count,point_id,x_mm,y_mm,peg_mm,depth_mm,trial,force_n,";
  h += "m300_l1,m500_l1,m700_l1,m900_l1";
  if (layer_count == 2) h += ",m300_l2,m500_l2,m700_l2,m900_l2";
  return h;
}

void write_csv(std::ostream& out, const Dataset& dataset) {
  if (dataset.tones.tone_count() != 4)
    throw ConfigError("dataset CSV layout requires the four-tone reference signal");
  out << csv_header(dataset.skin.layer_count) << '\n';
  for (const auto& s : dataset.samples) {
    out << s.skin << ',' << s.features.layer_count << ',' << s.point_id << ','
        << format_sig(s.x, kCsvDigits) << ',' << format_sig(s.y, kCsvDigits) << ','
        << format_sig(s.diameter, kCsvDigits) << ',' << format_sig(s.depth, kCsvDigits) << ','
        << s.trial << ',' << format_sig(s.force, kCsvDigits);
    for (double m : s.features.magnitudes) out << ',' << format_sig(m, kCsvDigits);
    out << '\n';
  }
  if (!out) throw IoError("failed writing dataset CSV");
}

std::vector<LabeledSample> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("dataset CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  int layer_count = 0;
  if (line == csv_header(1)) {
    layer_count = 1;
  } else if (line == csv_header(2)) {
    layer_count = 2;
  } else {
    throw InputError("dataset CSV header not recognised");
  }
  const std::size_t columns = kFixedColumns + 4 * static_cast<std::size_t>(layer_count);

  std::vector<LabeledSample> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != columns)
      throw InputError("dataset CSV line " + std::to_string(lineno) + ": expected " +
                       std::to_string(columns) + " fields");
    LabeledSample s;
    s.skin = f[0];
    s.features.layer_count = static_cast<int>(parse_double(f[1], "layer_count"));
    if (s.features.layer_count != layer_count)
      throw InputError("dataset CSV line " + std::to_string(lineno) + ": layer_count mismatch");
    s.point_id = f[2];
    s.x = parse_double(f[3], "x_mm");
    s.y = parse_double(f[4], "y_mm");
    s.diameter = parse_double(f[5], "peg_mm");
    s.depth = parse_double(f[6], "depth_mm");
    s.trial = static_cast<int>(parse_double(f[7], "trial"));
    s.force = parse_double(f[8], "force_n");
    for (std::size_t c = kFixedColumns; c < columns; ++c) {
      const double m = parse_double(f[c], "magnitude");
      if (!std::isfinite(m) || m < 0.0)
        throw InputError("dataset CSV line " + std::to_string(lineno) + ": invalid magnitude");
      s.features.magnitudes.push_back(m);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string meta_path(const std::string& csv_path) {
  const auto slash = csv_path.find_last_of('/');
  const auto dot = csv_path.find_last_of('.');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? csv_path.substr(0, dot) : csv_path) + ".meta.json";
}

void save_dataset(const Dataset& dataset, const std::string& csv_path) {
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + csv_path + "'");
    write_csv(out, dataset);
  }
  const nlohmann::json meta = {{"skin", dataset.skin},
                               {"protocol", dataset.protocol},
                               {"tones", dataset.tones},
                               {"seed", dataset.seed},
                               {"fingerprint", dataset.fingerprint},
                               {"samples", dataset.samples.size()}};
  const std::string path = meta_path(csv_path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << meta.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

Dataset load_dataset(const std::string& csv_path) {
  const std::string mpath = meta_path(csv_path);
  std::ifstream meta_in(mpath);
  if (!meta_in) throw IoError("cannot open dataset metadata '" + mpath + "'");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed dataset metadata '" + mpath + "': " + e.what());
  }

  Dataset ds;
  try {
    meta.at("skin").get_to(ds.skin);
    meta.at("protocol").get_to(ds.protocol);
    meta.at("tones").get_to(ds.tones);
    meta.at("seed").get_to(ds.seed);
    meta.at("fingerprint").get_to(ds.fingerprint);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("incomplete dataset metadata '" + mpath + "': " + e.what());
  }
  if (dataset_fingerprint(ds.skin, ds.protocol, ds.tones) != ds.fingerprint)
    throw ProvenanceError("dataset metadata '" + mpath + "' does not match its fingerprint");

  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open dataset '" + csv_path + "'");
  ds.samples = read_csv(in);
  for (const auto& s : ds.samples)
    if (s.features.layer_count != ds.skin.layer_count)
      throw ProvenanceError("dataset '" + csv_path + "' rows do not match its skin metadata");
  return ds;
}

}  // namespace ast::calib
