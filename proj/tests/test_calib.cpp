#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ast/calib.hpp"
#include "ast/errors.hpp"

using namespace ast;
using calib::ProtocolSpec;
using skin::SkinSpec;

namespace {

ProtocolSpec small_protocol(const SkinSpec& spec) {
  auto p = ProtocolSpec::for_skin(spec);
  p.pegs = {7.0};
  p.depths = {spec.max_depth};
  p.frames_per_press = 1;
  p.base_seed = 11;
  return p;
}

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "ast_calib_test";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("calibration grid coordinates") {
  const auto g = calib::calibration_grid();
  REQUIRE(g.points.size() == 9);
  const std::string labels = "ABCDEFGHI";
  for (std::size_t i = 0; i < 9; ++i) CHECK(g.points[i].label == std::string(1, labels[i]));
  CHECK(g.at("A").x == 10.0);
  CHECK(g.at("A").y == 10.0);
  CHECK(g.at("B").x == 13.0);
  CHECK(g.at("E").x == 13.0);
  CHECK(g.at("E").y == 13.0);
  CHECK(g.at("G").x == 16.0);
  CHECK(g.at("G").y == 16.0);
  CHECK(g.at("I").x == 10.0);
  CHECK(g.at("I").y == 16.0);
  CHECK_THROWS_AS(g.at("J"), InputError);

  double max_span = 0.0;
  for (const auto& a : g.points)
    for (const auto& b : g.points) {
      max_span = std::max({max_span, std::abs(a.x - b.x), std::abs(a.y - b.y)});
      // Axis spacing is always a multiple of 3 mm.
      CHECK(std::fmod(std::abs(a.x - b.x), 3.0) == 0.0);
      CHECK(std::fmod(std::abs(a.y - b.y), 3.0) == 0.0);
    }
  CHECK(max_span == 6.0);

  CHECK(g.contains(16.0, 13.0));
  CHECK_FALSE(g.contains(13.0, 14.0));
  CHECK_FALSE(g.contains(10.0, 12.0));
}

TEST_CASE("depth grids") {
  const auto single = calib::depth_grid(SkinSpec::single());
  REQUIRE(single.size() == 6);
  CHECK(single.front() == doctest::Approx(0.5));
  CHECK(single.back() == doctest::Approx(3.0));
  const auto bi = calib::depth_grid(SkinSpec::bilayer());
  REQUIRE(bi.size() == 6);
  CHECK(bi.front() == doctest::Approx(1.0));
  CHECK(bi.back() == doctest::Approx(6.0));
}

TEST_CASE("protocol validation") {
  const auto spec = SkinSpec::single();
  auto p = ProtocolSpec::for_skin(spec);
  CHECK_NOTHROW(p.validate(spec));
  auto bad = p;
  bad.frames_per_press = 0;
  CHECK_THROWS_AS(bad.validate(spec), ConfigError);
  bad = p;
  bad.depths.clear();
  CHECK_THROWS_AS(bad.validate(spec), ConfigError);
  bad = p;
  bad.depths = {4.0};
  CHECK_THROWS_AS(bad.validate(spec), ConfigError);
}

TEST_CASE("dataset size and labels") {
  const auto spec = SkinSpec::single();
  auto p = ProtocolSpec::for_skin(spec);
  p.frames_per_press = 2;
  const auto ds = calib::generate_dataset(spec, p, signal::ToneSet{});
  CHECK(ds.samples.size() == 9u * 3u * 6u * 2u);
  CHECK(ds.feature_dim() == 4);
  for (const auto& s : ds.samples) {
    skin::ContactState c{s.x, s.y, s.depth, {s.diameter}};
    CHECK(s.force == skin::true_force(spec, c));
    CHECK(s.skin == "single");
    CHECK(p.grid.at(s.point_id).x == s.x);
  }
  // Nesting order: trial varies fastest, point slowest.
  CHECK(ds.samples[0].trial == 0);
  CHECK(ds.samples[1].trial == 1);
  CHECK(ds.samples[0].depth == ds.samples[1].depth);
  CHECK(ds.samples.back().point_id == "I");
}

TEST_CASE("default protocol sample count") {
  const auto spec = SkinSpec::single();
  const auto p = ProtocolSpec::for_skin(spec);
  CHECK(9u * p.pegs.size() * p.depths.size() * static_cast<std::size_t>(p.frames_per_press) == 3240u);
}

TEST_CASE("minimal protocol gives one sample per grid point") {
  const auto spec = SkinSpec::single();
  const auto ds = calib::generate_dataset(spec, small_protocol(spec), signal::ToneSet{});
  CHECK(ds.samples.size() == 9);
}

TEST_CASE("dataset generation is deterministic") {
  const auto spec = SkinSpec::bilayer();
  const auto p = small_protocol(spec);
  const auto a = calib::generate_dataset(spec, p, signal::ToneSet{});
  const auto b = calib::generate_dataset(spec, p, signal::ToneSet{});
  std::ostringstream sa, sb;
  calib::write_csv(sa, a);
  calib::write_csv(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(a.fingerprint == b.fingerprint);

  auto p2 = p;
  p2.base_seed = 12;
  const auto c = calib::generate_dataset(spec, p2, signal::ToneSet{});
  CHECK(c.fingerprint != a.fingerprint);
  CHECK(c.samples[0].features.magnitudes != a.samples[0].features.magnitudes);
}

TEST_CASE("footprint outside the skin is a protocol error") {
  const auto spec = SkinSpec::single();
  auto p = small_protocol(spec);
  p.pegs = {22.0};
  try {
    calib::generate_dataset(spec, p, signal::ToneSet{});
    FAIL("expected ProtocolError");
  } catch (const ProtocolError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("A") != std::string::npos);
    CHECK(msg.find("22") != std::string::npos);
  }
}

TEST_CASE("split sizes") {
  auto s = calib::split_indices(3240, 1);
  CHECK(s.train.size() == 2187);
  CHECK(s.validation.size() == 729);
  CHECK(s.test.size() == 324);

  s = calib::split_indices(10, 1);
  CHECK(s.train.size() == 7);
  CHECK(s.validation.size() == 2);
  CHECK(s.test.size() == 1);

  CHECK_THROWS_AS(calib::split_indices(9, 1), SplitError);
  CHECK_THROWS_AS(calib::split_indices(0, 1), SplitError);
}

TEST_CASE("split is a seeded partition") {
  for (std::size_t n : {10u, 11u, 37u, 100u, 1001u}) {
    const auto s = calib::split_indices(n, 5);
    std::vector<std::size_t> all;
    all.insert(all.end(), s.train.begin(), s.train.end());
    all.insert(all.end(), s.validation.begin(), s.validation.end());
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    CHECK(all.size() == n);
    for (std::size_t i = 0; i < n; ++i) CHECK(all[i] == i);
    CHECK(std::abs(static_cast<double>(s.test.size()) - 0.1 * n) <= 1.0);
    CHECK(std::abs(static_cast<double>(s.validation.size()) - 0.225 * n) <= 1.0);

    const auto again = calib::split_indices(n, 5);
    CHECK(again.test == s.test);
    const auto other = calib::split_indices(n, 6);
    CHECK((other.test != s.test || other.train != s.train));
  }
}

TEST_CASE("CSV round trip") {
  const auto spec = SkinSpec::bilayer();
  const auto ds = calib::generate_dataset(spec, small_protocol(spec), signal::ToneSet{});
  std::ostringstream out;
  calib::write_csv(out, ds);
  CHECK(out.str().rfind(calib::csv_header(2), 0) == 0);

  std::istringstream in(out.str());
  const auto rows = calib::read_csv(in);
  REQUIRE(rows.size() == ds.samples.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].point_id == ds.samples[i].point_id);
    CHECK(rows[i].force == doctest::Approx(ds.samples[i].force).epsilon(1e-8));
    REQUIRE(rows[i].features.magnitudes.size() == 8);
    for (std::size_t k = 0; k < 8; ++k)
      CHECK(rows[i].features.magnitudes[k] ==
            doctest::Approx(ds.samples[i].features.magnitudes[k]).epsilon(1e-8));
  }

  auto rounded = ds;
  calib::round_to_csv_precision(rounded);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].force == rounded.samples[i].force);
    CHECK(rows[i].features.magnitudes == rounded.samples[i].features.magnitudes);
  }
}

TEST_CASE("malformed CSV") {
  std::istringstream bad_header("a,b,c\n");
  CHECK_THROWS_AS(calib::read_csv(bad_header), InputError);
  std::ostringstream out;
  out << calib::csv_header(1) << "\n" << "single,1,A,10,10,5,1,0,1.5,0.5,oops,0.5,0.5\n";
  std::istringstream bad_row(out.str());
  CHECK_THROWS_AS(calib::read_csv(bad_row), InputError);
}

TEST_CASE("save and load with fingerprint check") {
  const auto spec = SkinSpec::single();
  const auto ds = calib::generate_dataset(spec, small_protocol(spec), signal::ToneSet{});
  const auto path = (temp_dir() / "ds.csv").string();
  calib::save_dataset(ds, path);
  CHECK(calib::meta_path(path) == (temp_dir() / "ds.meta.json").string());

  const auto back = calib::load_dataset(path);
  CHECK(back.fingerprint == ds.fingerprint);
  CHECK(back.samples.size() == ds.samples.size());
  CHECK(back.skin.fingerprint() == ds.skin.fingerprint());
  CHECK(back.protocol.base_seed == ds.protocol.base_seed);

  // Tamper with the sidecar's recorded fingerprint.
  std::ifstream in(calib::meta_path(path));
  std::stringstream buf;
  buf << in.rdbuf();
  in.close();
  std::string meta = buf.str();
  const auto pos = meta.find(ds.fingerprint);
  REQUIRE(pos != std::string::npos);
  meta.replace(pos, 1, meta[pos] == '0' ? "1" : "0");
  std::ofstream(calib::meta_path(path)) << meta;
  CHECK_THROWS_AS(calib::load_dataset(path), ProvenanceError);

  CHECK_THROWS_AS(calib::load_dataset((temp_dir() / "missing.csv").string()), IoError);
}
