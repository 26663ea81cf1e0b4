#include "ast/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "ast/bundle.hpp"
#include "ast/calib.hpp"
#include "ast/errors.hpp"
#include "ast/eval.hpp"
#include "ast/signal.hpp"
#include "ast/skinsim.hpp"
#include "ast/util.hpp"

namespace ast::cli {

namespace {

struct UsageError : Error {
  using Error::Error;
};

std::uint64_t default_seed() {
  const char* env = std::getenv("AST_SEED");
  if (env == nullptr || *env == '\0') return 0;
  try {
    std::size_t used = 0;
    const std::string text(env);
    const auto v = std::stoull(text, &used, 10);
    if (used != text.size() || text.front() == '-') throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError("AST_SEED must be an unsigned 64-bit integer, got '" + std::string(env) + "'");
  }
}

struct GenArgs {
  std::string skin;
  std::string spec_file;
  std::string out;
  std::optional<std::uint64_t> seed;
  double noise = skin::kDefaultNoiseSd;
  int frames_per_press = 20;
};

struct TrainArgs {
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;
  int restarts = 8;
  int max_iters = 200;
  std::size_t opt_subset = 400;
};

struct EvalArgs {
  std::string bundle;
  std::string mode;
  std::string data;
  double force = 3.0;
  int trials = 15;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise;
  std::string out;
  std::string format = "csv";
};

struct InferArgs {
  std::string bundle;
  std::string audio;
};

struct SynthArgs {
  std::string skin;
  std::string spec_file;
  std::string bundle;
  std::string point;
  std::optional<double> x, y;
  double peg = 7.0;
  std::optional<double> force;
  std::optional<double> depth;
  double seconds = 1.0;
  double noise = 0.0;
  std::optional<std::uint64_t> seed;
  std::string out;
};

skin::SkinSpec resolve_skin(const std::string& preset, const std::string& spec_file) {
  return spec_file.empty() ? skin::SkinSpec::preset(preset) : skin::SkinSpec::load(spec_file);
}

int cmd_gen(const GenArgs& a, std::ostream& out) {
  const skin::SkinSpec spec = resolve_skin(a.skin, a.spec_file);
  calib::ProtocolSpec protocol = calib::ProtocolSpec::for_skin(spec);
  protocol.frames_per_press = a.frames_per_press;
  protocol.noise_sd = a.noise;
  protocol.base_seed = a.seed.value_or(default_seed());
  const calib::Dataset ds = calib::generate_dataset(spec, protocol, signal::ToneSet{});
  calib::save_dataset(ds, a.out);
  out << "wrote " << ds.samples.size() << " samples (" << spec.name() << " skin, fingerprint "
      << ds.fingerprint << ") to " << a.out << '\n';
  return kOk;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const calib::Dataset ds = calib::load_dataset(a.data);
  gp::FitOptions opts;
  opts.restarts = a.restarts;
  opts.max_iters = a.max_iters;
  opts.opt_subset = a.opt_subset;
  opts.seed = a.seed.value_or(default_seed());
  const gp::ModelBundle bundle = gp::train_bundle(ds, opts);
  gp::save_bundle(bundle, a.out);

  out << "Validation error for each exponential GP model (" << bundle.skin.name() << " skin)\n";
  out << "| Model | Response | Validation RMSE |\n| --- | --- | ---: |\n";
  for (gp::Target t : gp::kTargets) {
    const auto i = static_cast<std::size_t>(t);
    out << "| " << i + 1 << " | " << gp::target_label(t) << " | "
        << format_fixed(bundle.validation_rmse[i], 4) << " |\n";
  }
  return kOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const gp::ModelBundle bundle = gp::load_bundle(a.bundle);
  eval::EvalReport report;
  if (a.mode == "calibration") {
    calib::Dataset ds;
    if (!a.data.empty()) {
      ds = calib::load_dataset(a.data);
    } else {
      ds = calib::generate_dataset(bundle.skin, bundle.protocol, bundle.tones);
      calib::round_to_csv_precision(ds);
    }
    report = eval::calibration_report(bundle, ds);
    out << "Held-out MAE (" << bundle.skin.name() << " skin, " << report.groups.front().trials
        << " samples)\n"
        << eval::calibration_table(report.groups.front());
  } else {
    eval::RealtimeOptions opts;
    opts.force = a.force;
    opts.trials = a.trials;
    opts.seed = a.seed.value_or(default_seed());
    opts.noise_sd = a.noise.value_or(bundle.protocol.noise_sd);
    report = eval::realtime_protocol(bundle, opts);
    out << "Real-time protocol: " << report.groups.size() << " groups x " << a.trials << " trials at "
        << format_shortest(a.force) << " N\n";
  }
  const auto format = a.format == "markdown" ? eval::ReportFormat::markdown : eval::ReportFormat::csv;
  if (eval::emit_report(report, format, a.out) == eval::EmitStatus::empty)
    err << "warning: report is empty; wrote header only to " << a.out << '\n';
  return kOk;
}

int cmd_infer(const InferArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
  const gp::ModelBundle bundle = gp::load_bundle(a.bundle);
  std::ifstream file;
  std::istream* source = &in;
  if (a.audio != "-") {
    file.open(a.audio, std::ios::binary);
    if (!file) throw IoError("cannot open audio '" + a.audio + "'");
    source = &file;
  }
  const auto channels = static_cast<std::size_t>(bundle.skin.layer_count);
  signal::PcmFrameReader reader(*source, channels, bundle.tones.frame_len, bundle.tones.sample_rate);

  using clock = std::chrono::steady_clock;
  std::size_t index = 0;
  double total_ms = 0.0, worst_ms = 0.0;
  while (true) {
    const auto start = clock::now();
    const auto frame = reader.next();
    if (!frame) break;
    std::vector<double> features;
    for (const auto& ch : *frame) {
      const auto m = signal::tone_magnitudes(ch, bundle.tones);
      features.insert(features.end(), m.begin(), m.end());
    }
    const eval::TactileEstimate e = eval::estimate(bundle, features);
    out << index << ',' << format_shortest(e.force) << ',' << format_shortest(e.diameter) << ','
        << format_shortest(e.x) << ',' << format_shortest(e.y);
    for (double sd : e.sd) out << ',' << format_shortest(sd);
    out << '\n';
    const double ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
    total_ms += ms;
    worst_ms = std::max(worst_ms, ms);
    ++index;
  }
  out.flush();
  if (reader.trailing_bytes() > 0)
    err << "warning: discarded truncated final frame (" << reader.trailing_bytes() << " bytes)\n";
  const double budget_ms = 1000.0 * bundle.tones.frame_seconds();
  err << "latency: " << index << " frames, mean " << format_fixed(index ? total_ms / index : 0.0, 3)
      << " ms, max " << format_fixed(worst_ms, 3) << " ms per frame (budget " << format_fixed(budget_ms, 1)
      << " ms)\n";
  return kOk;
}

int cmd_synth(const SynthArgs& a, std::istream&, std::ostream& out) {
  skin::SkinSpec spec;
  signal::ToneSet tones;
  if (!a.bundle.empty()) {
    const gp::ModelBundle bundle = gp::load_bundle(a.bundle);
    spec = bundle.skin;
    tones = bundle.tones;
  } else {
    spec = resolve_skin(a.skin, a.spec_file);
  }
  double x = 0.0, y = 0.0;
  if (!a.point.empty()) {
    const auto& p = calib::calibration_grid().at(a.point);
    x = p.x;
    y = p.y;
  } else if (a.x && a.y) {
    x = *a.x;
    y = *a.y;
  } else {
    throw UsageError("synth needs --point or both --x and --y");
  }
  const skin::Peg peg{a.peg};
  double depth = 0.0;
  if (a.force) depth = skin::invert_force(spec, peg, *a.force);
  if (a.depth) depth = *a.depth;
  const skin::ContactState contact{x, y, depth, peg};
  skin::validate_contact(spec, contact);

  const auto n_frames = static_cast<std::size_t>(std::llround(a.seconds / tones.frame_seconds()));
  if (n_frames == 0) throw UsageError("synth: --seconds shorter than one frame");
  const auto gains = skin::transmission(spec, contact, tones);
  const std::uint64_t seed = a.seed.value_or(default_seed());
  std::vector<signal::SampleBuffer> channels;
  for (std::size_t l = 0; l < gains.size(); ++l)
    channels.push_back(signal::synthesize_measured(tones, gains[l], a.noise, derive_seed(seed, l), n_frames));
  const auto pcm = signal::interleave(channels);

  if (a.out == "-") {
    signal::write_pcm_f32(out, pcm);
  } else {
    std::ofstream file(a.out, std::ios::binary);
    if (!file) throw IoError("cannot write '" + a.out + "'");
    signal::write_pcm_f32(file, pcm);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Acoustic soft tactile skin: simulate, calibrate, train and evaluate", "astskin"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Simulate the calibration protocol and write a dataset CSV + .meta.json");
  auto* g_skin = g->add_option("--skin", gen.skin, "Skin preset")->check(CLI::IsMember({"single", "bilayer"}));
  auto* g_spec = g->add_option("--spec", gen.spec_file, "Skin spec key-value file")->check(CLI::ExistingFile);
  g_skin->excludes(g_spec);
  g->add_option("--out", gen.out, "Output CSV path")->required();
  g->add_option("--seed", gen.seed, "Base seed (default: $AST_SEED, else 0)");
  g->add_option("--noise", gen.noise, "Feature noise standard deviation")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  g->add_option("--frames-per-press", gen.frames_per_press, "Frames recorded per press")
      ->capture_default_str()->check(CLI::PositiveNumber);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Fit the four exponential GP models on a dataset");
  t->add_option("--data", train.data, "Dataset CSV (with .meta.json sidecar)")->required()->check(CLI::ExistingFile);
  t->add_option("--out", train.out, "Output bundle JSON path")->required();
  t->add_option("--seed", train.seed, "Split/optimiser seed (default: $AST_SEED, else 0)");
  t->add_option("--restarts", train.restarts, "Random restarts per model")->capture_default_str()
      ->check(CLI::PositiveNumber);
  t->add_option("--max-iters", train.max_iters, "Gradient-ascent iterations per restart")
      ->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--opt-subset", train.opt_subset, "Training points used for hyperparameter search")
      ->capture_default_str()->check(CLI::PositiveNumber);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a bundle (held-out calibration error or real-time protocol)");
  e->add_option("--bundle", ev.bundle, "Model bundle JSON")->required()->check(CLI::ExistingFile);
  e->add_option("--mode", ev.mode, "calibration | realtime")->required()
      ->check(CLI::IsMember({"calibration", "realtime"}));
  e->add_option("--data", ev.data, "Dataset CSV for calibration mode (default: regenerate from the bundle)")
      ->check(CLI::ExistingFile);
  e->add_option("--force", ev.force, "Real-time test force (N)")->capture_default_str();
  e->add_option("--trials", ev.trials, "Real-time trials per (point, peg)")->capture_default_str()
      ->check(CLI::PositiveNumber);
  e->add_option("--seed", ev.seed, "Real-time noise seed (default: $AST_SEED, else 0)");
  e->add_option("--noise", ev.noise, "Real-time feature noise sd (default: the dataset's)")
      ->check(CLI::NonNegativeNumber);
  e->add_option("--out", ev.out, "Report path")->required();
  e->add_option("--format", ev.format, "csv | markdown")->capture_default_str()
      ->check(CLI::IsMember({"csv", "markdown"}));

  InferArgs inf;
  auto* i = app.add_subcommand("infer", "Stream tactile estimates from raw float32 PCM");
  i->add_option("--bundle", inf.bundle, "Model bundle JSON")->required()->check(CLI::ExistingFile);
  i->add_option("--audio", inf.audio, "Headerless 32-bit LE float PCM file, or - for stdin "
                                      "(bi-layer: 2 interleaved channels, layer 1 first)")
      ->required();

  SynthArgs syn;
  auto* s = app.add_subcommand("synth", "Write the PCM stream the skin would produce under a static press");
  auto* s_skin = s->add_option("--skin", syn.skin, "Skin preset")->check(CLI::IsMember({"single", "bilayer"}));
  auto* s_spec = s->add_option("--spec", syn.spec_file, "Skin spec key-value file")->check(CLI::ExistingFile);
  auto* s_bundle = s->add_option("--bundle", syn.bundle, "Take skin and tones from a bundle")
      ->check(CLI::ExistingFile);
  s_skin->excludes(s_spec)->excludes(s_bundle);
  s_spec->excludes(s_bundle);
  auto* s_point = s->add_option("--point", syn.point, "Calibration point label A-I");
  auto* s_x = s->add_option("--x", syn.x, "Contact x (mm)");
  auto* s_y = s->add_option("--y", syn.y, "Contact y (mm)");
  s_point->excludes(s_x)->excludes(s_y);
  s->add_option("--peg", syn.peg, "Peg diameter (mm)")->capture_default_str()->check(CLI::PositiveNumber);
  auto* s_force = s->add_option("--force", syn.force, "Normal force (N)");
  auto* s_depth = s->add_option("--depth", syn.depth, "Indentation depth (mm)");
  s_force->excludes(s_depth);
  s->add_option("--seconds", syn.seconds, "Stream length (s)")->capture_default_str();
  s->add_option("--noise", syn.noise, "Time-domain noise sd")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  s->add_option("--seed", syn.seed, "Noise seed (default: $AST_SEED, else 0)");
  s->add_option("--out", syn.out, "Output PCM path, or - for stdout")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
    if (g->parsed() && gen.skin.empty() && gen.spec_file.empty())
      throw CLI::ValidationError("gen", "one of --skin or --spec is required");
    if (s->parsed() && syn.skin.empty() && syn.spec_file.empty() && syn.bundle.empty())
      throw CLI::ValidationError("synth", "one of --skin, --spec or --bundle is required");
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex, out, err);
    return kUsageError;
  }

  try {
    if (g->parsed()) return cmd_gen(gen, out);
    if (t->parsed()) return cmd_train(train, out);
    if (e->parsed()) return cmd_eval(ev, out, err);
    if (i->parsed()) return cmd_infer(inf, in, out, err);
    if (s->parsed()) return cmd_synth(syn, in, out);
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsageError;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace ast::cli
