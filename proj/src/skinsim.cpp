#include "ast/skinsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "ast/errors.hpp"
#include "ast/util.hpp"

namespace ast::skin {

namespace {

// Frequency at which the per-tone attenuation equals `attenuation`.
constexpr double kReferenceToneHz = 300.0;

struct Field {
  const char* key;
  std::function<std::string(const SkinSpec&)> get;
  std::function<void(SkinSpec&, const std::string&)> set;
};

int parse_int(const std::string& text, const std::string& key) {
  const double v = parse_double(text, key);
  if (v != std::floor(v)) throw ConfigError("SkinSpec: " + key + " must be an integer");
  return static_cast<int>(v);
}

std::string join_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format_shortest(values[i]);
  }
  return out;
}

std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item, key));
  return out;
}

#define AST_DOUBLE_FIELD(name)                                                   \
  Field {                                                                        \
    #name, [](const SkinSpec& s) { return format_shortest(s.name); },            \
        [](SkinSpec& s, const std::string& v) { s.name = parse_double(v, #name); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"layer_count", [](const SkinSpec& s) { return std::to_string(s.layer_count); },
       [](SkinSpec& s, const std::string& v) { s.layer_count = parse_int(v, "layer_count"); }},
      AST_DOUBLE_FIELD(side),
      AST_DOUBLE_FIELD(channel_diameter),
      {"runs_per_layer", [](const SkinSpec& s) { return std::to_string(s.runs_per_layer); },
       [](SkinSpec& s, const std::string& v) { s.runs_per_layer = parse_int(v, "runs_per_layer"); }},
      {"run_offsets", [](const SkinSpec& s) { return join_list(s.run_offsets); },
       [](SkinSpec& s, const std::string& v) { s.run_offsets = parse_list(v, "run_offsets"); }},
      AST_DOUBLE_FIELD(layer_depth_capacity),
      AST_DOUBLE_FIELD(max_depth),
      AST_DOUBLE_FIELD(depth_step),
      AST_DOUBLE_FIELD(force_exponent),
      AST_DOUBLE_FIELD(attenuation),
      AST_DOUBLE_FIELD(frequency_exponent),
      AST_DOUBLE_FIELD(resonance_strength),
      AST_DOUBLE_FIELD(effective_speed),
      AST_DOUBLE_FIELD(decay_length),
      AST_DOUBLE_FIELD(path_step),
      AST_DOUBLE_FIELD(load_spread),
      AST_DOUBLE_FIELD(min_open_ratio),
  };
  return table;
}

#undef AST_DOUBLE_FIELD

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

SkinSpec SkinSpec::single() { return SkinSpec{}; }

SkinSpec SkinSpec::bilayer() {
  SkinSpec s;
  s.layer_count = 2;
  s.max_depth = 6.0;
  s.depth_step = 1.0;
  return s;
}

SkinSpec SkinSpec::preset(const std::string& name) {
  if (name == "single") return single();
  if (name == "bilayer") return bilayer();
  throw ConfigError("unknown skin preset '" + name + "' (expected single or bilayer)");
}

void SkinSpec::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("SkinSpec: " + what); };
  if (layer_count != 1 && layer_count != 2) fail("layer_count must be 1 or 2");
  if (!(side > 0.0)) fail("side must be > 0");
  if (!(channel_diameter > 0.0)) fail("channel_diameter must be > 0");
  if (runs_per_layer < 1) fail("runs_per_layer must be >= 1");
  if (run_offsets.size() != static_cast<std::size_t>(runs_per_layer))
    fail("run_offsets must list runs_per_layer values");
  for (std::size_t i = 0; i < run_offsets.size(); ++i) {
    const double o = run_offsets[i];
    if (!(o > channel_diameter / 2.0 && o < side - channel_diameter / 2.0))
      fail("run offset " + format_shortest(o) + " outside the skin");
    if (i > 0 && !(o > run_offsets[i - 1])) fail("run_offsets must be strictly increasing");
  }
  if (!(layer_depth_capacity > 0.0)) fail("layer_depth_capacity must be > 0");
  if (std::abs(max_depth - layer_count * layer_depth_capacity) > 1e-12)
    fail("max_depth must equal layer_count * layer_depth_capacity");
  if (!(depth_step > 0.0) || depth_step > max_depth) fail("depth_step must be in (0, max_depth]");
  if (!(force_exponent > 0.0)) fail("force_exponent must be > 0");
  if (!(attenuation >= 0.0)) fail("attenuation must be >= 0");
  if (!std::isfinite(frequency_exponent)) fail("frequency_exponent must be finite");
  if (!(resonance_strength >= 0.0 && resonance_strength < 1.0))
    fail("resonance_strength must be in [0, 1)");
  if (!(effective_speed > 0.0)) fail("effective_speed must be > 0");
  if (!(decay_length >= 0.0)) fail("decay_length must be >= 0");
  if (!(path_step > 0.0)) fail("path_step must be > 0");
  if (!(load_spread >= 0.0)) fail("load_spread must be >= 0");
  if (!(min_open_ratio > 0.0 && min_open_ratio < 1.0)) fail("min_open_ratio must be in (0, 1)");
}

std::string SkinSpec::to_config() const {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(*this) + "\n";
  return out;
}

SkinSpec SkinSpec::from_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("skin config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!kv.emplace(key, trim(line.substr(eq + 1))).second)
      throw ConfigError("skin config: duplicate key '" + key + "'");
  }

  SkinSpec spec;
  if (auto it = kv.find("layer_count"); it != kv.end()) {
    const int layers = parse_int(it->second, "layer_count");
    spec = layers == 2 ? bilayer() : single();
  }
  for (const auto& f : fields()) {
    if (auto it = kv.find(f.key); it != kv.end()) {
      try {
        f.set(spec, it->second);
      } catch (const InputError& e) {
        throw ConfigError(std::string("skin config: ") + e.what());
      }
      kv.erase(it);
    }
  }
  if (!kv.empty()) throw ConfigError("skin config: unknown key '" + kv.begin()->first + "'");
  spec.validate();
  return spec;
}

SkinSpec SkinSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open skin spec file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_config(ss.str());
}

std::string SkinSpec::fingerprint() const { return fnv1a_hex(to_config()); }

void validate_contact(const SkinSpec& spec, const ContactState& c) {
  if (!(c.peg.diameter > 0.0)) throw DomainError("peg diameter must be > 0");
  if (!(c.depth >= 0.0 && c.depth <= spec.max_depth))
    throw DomainError("depth " + format_shortest(c.depth) + " mm outside [0, " +
                      format_shortest(spec.max_depth) + "]");
  const double r = c.peg.diameter / 2.0;
  auto inside = [&](double v) { return v >= r && v <= spec.side - r; };
  if (!inside(c.x) || !inside(c.y))
    throw DomainError("peg footprint (d=" + format_shortest(c.peg.diameter) + " mm) at (" +
                      format_shortest(c.x) + ", " + format_shortest(c.y) + ") leaves the skin");
}

std::vector<Point> channel_vertices(const SkinSpec& spec, int layer_index) {
  // Layer 1: runs parallel to X, boustrophedon, joined along the side edges.
  std::vector<Point> v;
  for (std::size_t r = 0; r < spec.run_offsets.size(); ++r) {
    const double y = spec.run_offsets[r];
    const bool forward = r % 2 == 0;
    v.push_back({forward ? 0.0 : spec.side, y});
    v.push_back({forward ? spec.side : 0.0, y});
  }
  if (layer_index == 2)
    for (auto& p : v) std::swap(p.x, p.y);
  return v;
}

std::vector<ChannelPath> channel_layout(const SkinSpec& spec) {
  spec.validate();
  std::vector<ChannelPath> out;
  for (int layer = 1; layer <= spec.layer_count; ++layer) {
    const auto verts = channel_vertices(spec, layer);
    std::vector<double> cum(verts.size(), 0.0);
    for (std::size_t i = 1; i < verts.size(); ++i)
      cum[i] = cum[i - 1] + std::hypot(verts[i].x - verts[i - 1].x, verts[i].y - verts[i - 1].y);
    const double total = cum.back();

    ChannelPath path;
    path.layer_index = layer;
    path.step = spec.path_step;
    const auto n = static_cast<std::size_t>(std::floor(total / spec.path_step + 1e-9));
    std::size_t seg = 1;
    for (std::size_t i = 0; i <= n; ++i) {
      const double s = std::min(static_cast<double>(i) * spec.path_step, total);
      while (seg + 1 < verts.size() && s > cum[seg]) ++seg;
      const double len = cum[seg] - cum[seg - 1];
      const double t = len > 0.0 ? (s - cum[seg - 1]) / len : 0.0;
      path.polyline.push_back({verts[seg - 1].x + t * (verts[seg].x - verts[seg - 1].x),
                               verts[seg - 1].y + t * (verts[seg].y - verts[seg - 1].y)});
      path.arclength.push_back(s);
    }
    out.push_back(std::move(path));
  }
  return out;
}

std::vector<double> layer_compressions(const SkinSpec& spec, const ContactState& contact) {
  if (!(contact.depth >= 0.0 && contact.depth <= spec.max_depth))
    throw DomainError("depth " + format_shortest(contact.depth) + " mm outside [0, " +
                      format_shortest(spec.max_depth) + "]");
  if (spec.layer_count == 1) return {contact.depth};
  // Equal-compliance series stack.
  const double each = contact.depth / 2.0;
  return {each, each};
}

Constriction constriction(const SkinSpec& spec, const ChannelPath& path, const ContactState& contact) {
  const auto comp = layer_compressions(spec, contact);
  const double c = comp.at(static_cast<std::size_t>(path.layer_index - 1));
  if (c <= 0.0) return {};

  const double d_eff = contact.peg.diameter + (path.layer_index == 2 ? spec.load_spread : 0.0);
  const double r_in = d_eff / 2.0;
  const double lambda = spec.decay_length;

  double loss = 0.0, moment = 0.0;
  for (std::size_t i = 0; i < path.polyline.size(); ++i) {
    const double r = std::hypot(path.polyline[i].x - contact.x, path.polyline[i].y - contact.y);
    double indent = 0.0;
    if (r <= r_in) {
      indent = c;
    } else if (r < r_in + lambda) {
      indent = c * (1.0 - (r - r_in) / lambda);
    }
    if (indent <= 0.0) continue;
    const double open = std::max(spec.min_open_ratio, 1.0 - indent / spec.channel_diameter);
    const double w = (1.0 - open) * path.step;
    loss += w;
    moment += path.arclength[i] * w;
  }
  if (loss <= 0.0) return {};
  return {loss, moment / loss};
}

std::vector<std::vector<double>> transmission(const SkinSpec& spec,
                                              const std::vector<ChannelPath>& layout,
                                              const ContactState& contact,
                                              const signal::ToneSet& tones) {
  std::vector<std::vector<double>> gains;
  gains.reserve(layout.size());
  for (const auto& path : layout) {
    const Constriction con = constriction(spec, path, contact);
    std::vector<double> g(tones.tone_count(), 1.0);
    if (con.loss > 0.0) {
      const double relative = con.loss / spec.channel_diameter;
      const double centroid_m = con.centroid * 1e-3;
      for (std::size_t k = 0; k < tones.tone_count(); ++k) {
        const double f = tones.frequencies[k];
        const double kappa = spec.attenuation * std::pow(f / kReferenceToneHz, spec.frequency_exponent);
        const double phase = std::sin(2.0 * std::numbers::pi * f * centroid_m / spec.effective_speed);
        g[k] = std::exp(-kappa * relative * (1.0 + spec.resonance_strength * phase * phase));
      }
    }
    gains.push_back(std::move(g));
  }
  return gains;
}

std::vector<std::vector<double>> transmission(const SkinSpec& spec, const ContactState& contact,
                                              const signal::ToneSet& tones) {
  return transmission(spec, channel_layout(spec), contact, tones);
}

double max_force(const SkinSpec& spec, const Peg& peg) {
  // Endpoints measured for the 5/7/9 mm pegs: 3/5/7 N single, 6/8/10 N bi-layer.
  const double f = spec.layer_count == 2 ? peg.diameter + 1.0 : peg.diameter - 2.0;
  return std::max(0.0, f);
}

double true_force(const SkinSpec& spec, const ContactState& contact) {
  if (contact.depth <= 0.0) return 0.0;
  return max_force(spec, contact.peg) * std::pow(contact.depth / spec.max_depth, spec.force_exponent);
}

double invert_force(const SkinSpec& spec, const Peg& peg, double target_force) {
  const double fmax = max_force(spec, peg);
  if (!(target_force >= 0.0))
    throw DomainError("target force must be >= 0 N");
  if (target_force > fmax)
    throw DomainError("target force " + format_shortest(target_force) + " N exceeds the " +
                      format_shortest(fmax) + " N maximum of the " +
                      format_shortest(peg.diameter) + " mm peg on the " + spec.name() + " skin");
  if (target_force == 0.0) return 0.0;
  return spec.max_depth * std::pow(target_force / fmax, 1.0 / spec.force_exponent);
}

signal::FeatureVector sense(const SkinSpec& spec, const std::vector<ChannelPath>& layout,
                            const ContactState& contact, const signal::ToneSet& tones,
                            double noise_sd, std::uint64_t seed) {
  if (!(noise_sd >= 0.0)) throw DomainError("noise_sd must be >= 0");
  validate_contact(spec, contact);
  const auto gains = transmission(spec, layout, contact, tones);
  signal::FeatureVector fv;
  fv.layer_count = spec.layer_count;
  fv.magnitudes.reserve(gains.size() * tones.tone_count());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sd > 0.0 ? noise_sd : 1.0);
  for (const auto& layer : gains) {
    for (double g : layer) {
      double m = tones.amplitude * g;
      if (noise_sd > 0.0) m += noise(rng);
      fv.magnitudes.push_back(std::max(0.0, m));
    }
  }
  return fv;
}

signal::FeatureVector sense(const SkinSpec& spec, const ContactState& contact,
                            const signal::ToneSet& tones, double noise_sd, std::uint64_t seed) {
  return sense(spec, channel_layout(spec), contact, tones, noise_sd, seed);
}

}  // namespace ast::skin
