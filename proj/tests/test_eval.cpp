#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ast/errors.hpp"
#include "ast/eval.hpp"

using namespace ast;

namespace {

// Small but complete bundle: every grid point, peg and depth, one frame each.
const gp::ModelBundle& small_bundle(int layers) {
  static std::array<gp::ModelBundle, 2> cache;
  static std::array<bool, 2> built{};
  const auto slot = static_cast<std::size_t>(layers - 1);
  if (!built[slot]) {
    const auto spec = layers == 1 ? skin::SkinSpec::single() : skin::SkinSpec::bilayer();
    auto proto = calib::ProtocolSpec::for_skin(spec);
    proto.frames_per_press = 1;
    proto.base_seed = 21;
    const auto ds = calib::generate_dataset(spec, proto, signal::ToneSet{});
    gp::FitOptions opt;
    opt.restarts = 1;
    opt.max_iters = 40;
    opt.seed = 21;
    cache[slot] = gp::train_bundle(ds, opt);
    built[slot] = true;
  }
  return cache[slot];
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("mae examples") {
  const std::vector<double> t{1.0, 2.0, 3.0};
  auto e = eval::mae(t, t);
  CHECK(e.mae == 0.0);
  CHECK(e.stdev == 0.0);

  e = eval::mae(std::vector<double>{2.0, 3.0, 4.0}, t);
  CHECK(e.mae == doctest::Approx(1.0));
  CHECK(e.stdev == doctest::Approx(0.0));

  e = eval::mae(std::vector<double>{0.0, 2.0}, std::vector<double>{0.0, 0.0});
  CHECK(e.mae == doctest::Approx(1.0));
  CHECK(e.stdev == doctest::Approx(1.0));

  CHECK_THROWS_AS(eval::mae(std::vector<double>{}, std::vector<double>{}), InputError);
  CHECK_THROWS_AS(eval::mae(std::vector<double>{1.0}, std::vector<double>{}), InputError);
}

TEST_CASE("a constant bias shows up exactly in the MAE") {
  const std::vector<double> truth{0.5, 1.5, 2.5, 6.0};
  for (double b : {-0.75, 0.25, 3.0}) {
    std::vector<double> pred = truth;
    for (auto& p : pred) p += b;
    CHECK(eval::mae(pred, truth).mae == doctest::Approx(std::abs(b)).epsilon(1e-12));
  }
}

TEST_CASE("realtime protocol preconditions") {
  const auto& single = small_bundle(1);
  eval::RealtimeOptions opt;
  opt.trials = 2;
  opt.force = 4.0;  // above the 5 mm peg's 3 N maximum on a single layer
  CHECK_THROWS_AS(eval::realtime_protocol(single, opt), ProtocolError);

  opt.force = 3.0;
  opt.points = {{"Z", 2.0, 2.0}};
  CHECK_THROWS_AS(eval::realtime_protocol(single, opt), ProtocolError);

  opt = {};
  opt.trials = 0;
  CHECK_THROWS_AS(eval::realtime_protocol(single, opt), ProtocolError);
}

TEST_CASE("non-calibrated realtime points are off the training grid") {
  const auto grid = calib::calibration_grid();
  for (const auto& p : eval::RealtimeOptions::default_points()) {
    if (p.label == "J" || p.label == "K")
      CHECK_FALSE(grid.contains(p.x, p.y));
    else
      CHECK(grid.contains(p.x, p.y));
  }
}

TEST_CASE("realtime report shape and determinism") {
  const auto& bundle = small_bundle(2);
  eval::RealtimeOptions opt;
  opt.trials = 3;
  opt.seed = 5;
  const auto a = eval::realtime_protocol(bundle, opt);
  CHECK(a.skin == "bilayer");
  REQUIRE(a.groups.size() == 12);
  const std::string order = "DDDFFFJJJKKK";
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(a.groups[i].point_id == std::string(1, order[i]));
    CHECK(*a.groups[i].peg == 5.0 + 2.0 * static_cast<double>(i % 3));
    CHECK(a.groups[i].trials == 3);
    for (const auto& e : a.groups[i].errors) {
      CHECK(e.mae >= 0.0);
      CHECK(e.stdev >= 0.0);
    }
  }
  const auto b = eval::realtime_protocol(bundle, opt);
  CHECK(eval::report_csv(a) == eval::report_csv(b));

  opt.noise_sd = 0.0;
  const auto quiet = eval::realtime_protocol(bundle, opt);
  for (const auto& g : quiet.groups)
    for (const auto& e : g.errors) CHECK(e.stdev == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("calibration report needs the training dataset") {
  const auto spec = skin::SkinSpec::bilayer();
  auto proto = calib::ProtocolSpec::for_skin(spec);
  proto.frames_per_press = 1;
  proto.base_seed = 21;
  const auto ds = calib::generate_dataset(spec, proto, signal::ToneSet{});
  const auto& bundle = small_bundle(2);
  const auto report = eval::calibration_report(bundle, ds);
  REQUIRE(report.groups.size() == 1);
  CHECK(report.groups[0].trials == gp::held_out_test(bundle, ds).size());

  proto.base_seed = 22;
  const auto other = calib::generate_dataset(spec, proto, signal::ToneSet{});
  CHECK_THROWS_AS(eval::calibration_report(bundle, other), ProvenanceError);

  const auto table = eval::calibration_table(report.groups[0]);
  CHECK(table.find("Force (N)") != std::string::npos);
  CHECK(table.find("Location Y (mm)") != std::string::npos);
}

TEST_CASE("report formats agree") {
  const auto& bundle = small_bundle(1);
  eval::RealtimeOptions opt;
  opt.trials = 2;
  const auto report = eval::realtime_protocol(bundle, opt);

  const auto csv = lines(eval::report_csv(report));
  REQUIRE(csv.size() == 13);
  CHECK(csv[0] == eval::report_csv_header());
  CHECK(csv[0] ==
        "skin,point_id,x_mm,y_mm,peg_mm,mae_force_n,mae_dia_mm,mae_locx_mm,mae_locy_mm,"
        "stdev_force_n,stdev_dia_mm,stdev_locx_mm,stdev_locy_mm,trials");

  const auto md = lines(eval::report_markdown(report));
  REQUIRE(md.size() == 14);
  // Every markdown cell is the CSV value at three decimals.
  for (std::size_t r = 1; r < csv.size(); ++r) {
    std::vector<std::string> cf, mf;
    std::istringstream cs(csv[r]);
    for (std::string f; std::getline(cs, f, ',');) cf.push_back(f);
    std::istringstream ms(md[r + 1]);
    for (std::string f; std::getline(ms, f, '|');) {
      const auto b = f.find_first_not_of(' '), e = f.find_last_not_of(' ');
      if (b != std::string::npos) mf.push_back(f.substr(b, e - b + 1));
    }
    REQUIRE(cf.size() == mf.size());
    CHECK(mf[0] == cf[0]);
    CHECK(mf[1] == cf[1]);
    for (std::size_t c = 2; c + 1 < cf.size(); ++c) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.3f", std::stod(cf[c]));
      CHECK(mf[c] == buf);
    }
    CHECK(mf.back() == cf.back());
  }
}

TEST_CASE("emit_report files and the empty case") {
  const auto dir = std::filesystem::temp_directory_path() / "ast_eval_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "empty.csv").string();

  eval::EvalReport empty{"single", {}};
  CHECK(eval::emit_report(empty, eval::ReportFormat::csv, path) == eval::EmitStatus::empty);
  CHECK(slurp(path) == eval::report_csv_header() + "\n");

  const auto& bundle = small_bundle(1);
  eval::RealtimeOptions opt;
  opt.trials = 1;
  const auto report = eval::realtime_protocol(bundle, opt);
  const auto md_path = (dir / "r.md").string();
  CHECK(eval::emit_report(report, eval::ReportFormat::markdown, md_path) == eval::EmitStatus::ok);
  CHECK(slurp(md_path) == eval::report_markdown(report));

  CHECK_THROWS_AS(eval::emit_report(report, eval::ReportFormat::csv, (dir / "no/such/dir.csv").string()),
                  IoError);
}

TEST_CASE("estimate returns all four features") {
  const auto& bundle = small_bundle(2);
  const auto spec = skin::SkinSpec::bilayer();
  const auto f = skin::sense(spec, {13.0, 13.0, 4.0, {7.0}}, signal::ToneSet{}, 0.0, 0);
  const auto e = eval::estimate(bundle, f.magnitudes);
  for (auto t : gp::kTargets) {
    CHECK(std::isfinite(e.value(t)));
    CHECK(e.sd[static_cast<std::size_t>(t)] > 0.0);
  }
  CHECK(e.value(gp::Target::force) == e.force);
  CHECK(e.value(gp::Target::loc_y) == e.y);
  CHECK_THROWS_AS(eval::estimate(bundle, std::vector<double>{0.1, 0.2}), InputError);
}
