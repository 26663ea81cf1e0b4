#include "ast/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ast/errors.hpp"
#include "ast/util.hpp"

namespace ast::eval {

namespace {

constexpr const char* kColumns[] = {"skin",          "point_id",      "x_mm",          "y_mm",
                                    "peg_mm",        "mae_force_n",   "mae_dia_mm",    "mae_locx_mm",
                                    "mae_locy_mm",   "stdev_force_n", "stdev_dia_mm",  "stdev_locx_mm",
                                    "stdev_locy_mm", "trials"};

std::string opt_number(const std::optional<double>& v) { return v ? format_sig(*v, 9) : std::string(); }

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

EvalReport sorted(EvalReport r) {
  std::stable_sort(r.groups.begin(), r.groups.end(), [](const GroupStats& a, const GroupStats& b) {
    if (a.point_id != b.point_id) return a.point_id < b.point_id;
    return a.peg.value_or(0.0) < b.peg.value_or(0.0);
  });
  return r;
}

GroupStats summarise(const gp::ModelBundle& bundle, const std::vector<calib::LabeledSample>& samples) {
  std::array<std::vector<double>, 4> pred, truth;
  for (const auto& s : samples) {
    const TactileEstimate e = estimate(bundle, s.features.magnitudes);
    for (gp::Target t : gp::kTargets) {
      pred[static_cast<std::size_t>(t)].push_back(e.value(t));
      truth[static_cast<std::size_t>(t)].push_back(gp::target_value(s, t));
    }
  }
  GroupStats g;
  g.trials = samples.size();
  for (std::size_t i = 0; i < 4; ++i) g.errors[i] = mae(pred[i], truth[i]);
  return g;
}

}  // namespace

double TactileEstimate::value(gp::Target t) const {
  switch (t) {
    case gp::Target::force: return force;
    case gp::Target::diameter: return diameter;
    case gp::Target::loc_x: return x;
    case gp::Target::loc_y: return y;
  }
  return 0.0;
}

TactileEstimate estimate(const gp::ModelBundle& bundle, std::span<const double> features) {
  TactileEstimate e;
  std::array<double, 4> mean{};
  for (gp::Target t : gp::kTargets) {
    const auto p = bundle.model(t).predict(features);
    mean[static_cast<std::size_t>(t)] = p.mean;
    e.sd[static_cast<std::size_t>(t)] = p.sd;
  }
  e.force = mean[0];
  e.diameter = mean[1];
  e.x = mean[2];
  e.y = mean[3];
  return e;
}

ErrorStats mae(std::span<const double> predictions, std::span<const double> truths) {
  if (predictions.size() != truths.size()) throw InputError("mae: size mismatch");
  if (predictions.empty()) throw InputError("mae: no pairs");
  const double n = static_cast<double>(predictions.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) sum += std::abs(predictions[i] - truths[i]);
  const double mean = sum / n;
  double sq = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = std::abs(predictions[i] - truths[i]) - mean;
    sq += d * d;
  }
  return {mean, std::sqrt(sq / n)};
}

EvalReport report_on_samples(const gp::ModelBundle& bundle, const std::vector<calib::LabeledSample>& samples,
                             const std::string& label) {
  if (samples.empty()) throw InputError("report: no samples to evaluate");
  EvalReport r;
  r.skin = bundle.skin.name();
  GroupStats g = summarise(bundle, samples);
  g.point_id = label;
  r.groups.push_back(std::move(g));
  return r;
}

EvalReport calibration_report(const gp::ModelBundle& bundle, const calib::Dataset& dataset) {
  return report_on_samples(bundle, gp::held_out_test(bundle, dataset), "all");
}

std::vector<calib::GridPoint> RealtimeOptions::default_points() {
  const auto grid = calib::calibration_grid();
  return {grid.at("D"), grid.at("F"), {"J", 13.0, 14.0}, {"K", 10.0, 12.0}};
}

EvalReport realtime_protocol(const gp::ModelBundle& bundle, const RealtimeOptions& options) {
  const skin::SkinSpec& spec = bundle.skin;
  if (options.trials < 1) throw ProtocolError("realtime protocol needs at least one trial");
  if (!(options.noise_sd >= 0.0)) throw ProtocolError("noise_sd must be >= 0");

  auto points = options.points;
  std::stable_sort(points.begin(), points.end(),
                   [](const auto& a, const auto& b) { return a.label < b.label; });
  auto pegs = options.pegs;
  std::sort(pegs.begin(), pegs.end());

  for (double peg : pegs) {
    const double fmax = skin::max_force(spec, skin::Peg{peg});
    if (options.force > fmax || !(options.force >= 0.0))
      throw ProtocolError("force " + format_shortest(options.force) + " N exceeds the " +
                          format_shortest(fmax) + " N maximum of the " + format_shortest(peg) +
                          " mm peg on the " + spec.name() + " skin");
    for (const auto& p : points) {
      try {
        skin::validate_contact(spec, {p.x, p.y, 0.0, skin::Peg{peg}});
      } catch (const DomainError& e) {
        throw ProtocolError("point " + p.label + ": " + e.what());
      }
    }
  }

  const auto layout = skin::channel_layout(spec);
  EvalReport r;
  r.skin = spec.name();
  std::uint64_t group_index = 0;
  for (const auto& p : points) {
    for (double peg : pegs) {
      const double depth = skin::invert_force(spec, skin::Peg{peg}, options.force);
      const skin::ContactState contact{p.x, p.y, depth, skin::Peg{peg}};
      const double force = skin::true_force(spec, contact);
      const std::uint64_t group_seed = derive_seed(options.seed, group_index++);
      std::vector<calib::LabeledSample> trials;
      for (int t = 0; t < options.trials; ++t) {
        calib::LabeledSample s;
        s.features = skin::sense(spec, layout, contact, bundle.tones, options.noise_sd,
                                 derive_seed(group_seed, static_cast<std::uint64_t>(t)));
        s.force = force;
        s.diameter = peg;
        s.x = p.x;
        s.y = p.y;
        s.point_id = p.label;
        s.depth = depth;
        s.trial = t;
        s.skin = spec.name();
        trials.push_back(std::move(s));
      }
      GroupStats g = summarise(bundle, trials);
      g.point_id = p.label;
      g.x = p.x;
      g.y = p.y;
      g.peg = peg;
      r.groups.push_back(std::move(g));
    }
  }
  return r;
}

std::string report_csv_header() {
  std::string h;
  for (const char* c : kColumns) {
    if (!h.empty()) h += ',';
    h += c;
  }
  return h;
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << report_csv_header() << '\n';
  for (const auto& g : sorted(report).groups) {
    out << report.skin << ',' << g.point_id << ',' << opt_number(g.x) << ',' << opt_number(g.y) << ','
        << opt_number(g.peg);
    for (const auto& e : g.errors) out << ',' << format_sig(e.mae, 9);
    for (const auto& e : g.errors) out << ',' << format_sig(e.stdev, 9);
    out << ',' << g.trials << '\n';
  }
  return out.str();
}

std::string report_markdown(const EvalReport& report) {
  // Rendered from the CSV text so both files always show the same numbers.
  std::istringstream csv(report_csv(report));
  std::string line;
  std::getline(csv, line);
  const auto header = split_fields(line);
  std::ostringstream out;
  out << '|';
  for (const auto& h : header) out << ' ' << h << " |";
  out << "\n|";
  for (std::size_t i = 0; i < header.size(); ++i) out << (i < 2 ? " --- |" : " ---: |");
  out << '\n';
  while (std::getline(csv, line)) {
    const auto f = split_fields(line);
    out << '|';
    for (std::size_t i = 0; i < f.size(); ++i) {
      std::string cell = f[i];
      const bool numeric = i >= 2 && i + 1 < f.size() && !cell.empty();
      if (numeric) cell = format_fixed(parse_double(cell, header[i]), 3);
      out << ' ' << cell << " |";
    }
    out << '\n';
  }
  return out.str();
}

std::string calibration_table(const GroupStats& group) {
  std::ostringstream out;
  out << "| Response | MAE | STDEV |\n| --- | ---: | ---: |\n";
  for (gp::Target t : gp::kTargets) {
    const auto& e = group.errors[static_cast<std::size_t>(t)];
    out << "| " << gp::target_label(t) << " | " << format_fixed(e.mae, 3) << " | "
        << format_fixed(e.stdev, 3) << " |\n";
  }
  return out.str();
}

EmitStatus emit_report(const EvalReport& report, ReportFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report '" + path + "'");
  out << (format == ReportFormat::csv ? report_csv(report) : report_markdown(report));
  if (!out) throw IoError("failed writing report '" + path + "'");
  return report.groups.empty() ? EmitStatus::empty : EmitStatus::ok;
}

}  // namespace ast::eval
