#include <filesystem>

#include <gtest/gtest.h>

#include "fde/experiment.hpp"

namespace {

namespace fs = std::filesystem;
using fde::json;

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("fde_experiment_test_" + name);
  fs::remove_all(p);
  return p;
}

fde::ExperimentConfig small_config(const std::string& name) {
  fde::ExperimentConfig c;
  c.n_steps = 64;
  c.mc_paths = 3;
  c.output_dir = scratch(name).string();
  return c;
}

TEST(Config, DefaultsAreValid) {
  EXPECT_NO_THROW(fde::validate(fde::ExperimentConfig{}));
  const auto c = fde::config_from_json(json::object());
  EXPECT_DOUBLE_EQ(c.H, 0.75);
  EXPECT_EQ(c.xi.value.size(), 1u);
}

TEST(Config, JsonRoundTrip) {
  fde::ExperimentConfig c;
  c.dim = 2;
  c.xi.value = {1.0, -1.0};
  c.kernel.type = "discrete";
  c.kernel.lags = {{0.0, 0.5}, {0.25, 0.5}};
  c.sigma = {"bounded-tanh-matrix", {1.0, 0.2}};
  c.t_eval = 0.5;
  const auto back = fde::config_from_json(fde::to_json(c));
  EXPECT_EQ(fde::to_json(back), fde::to_json(c));
}

TEST(Config, TimeOfEvaluationDefaultsToHorizon) {
  const auto c = fde::config_from_json(json{{"T", 2.0}, {"n_steps", 128}});
  EXPECT_DOUBLE_EQ(c.t_eval, 2.0);
}

TEST(Config, CollectsEveryViolation) {
  json j{{"H", 0.45}, {"gamma", 0.8}, {"lambda", 0.9}, {"n_steps", 100}, {"h", 0.013}, {"mc_paths", 0}};
  try {
    (void)fde::config_from_json(j);
    FAIL() << "expected a validation error";
  } catch (const fde::ValidationError& e) {
    const std::string msg = e.what();
    for (const char* key : {"H:", "gamma:", "h:", "mc_paths:"}) EXPECT_NE(msg.find(key), std::string::npos) << key;
  }
}

TEST(Config, RejectsUnknownFieldsAndWrongTypes) {
  EXPECT_THROW(fde::config_from_json(json{{"Hurst", 0.7}}), fde::ValidationError);
  EXPECT_THROW(fde::config_from_json(json{{"H", "high"}}), fde::ValidationError);
  EXPECT_THROW(fde::config_from_json(json::array()), fde::ValidationError);
  EXPECT_THROW(fde::config_from_json(json{{"sigma", {{"name", "cubic"}}}}), fde::ValidationError);
  EXPECT_THROW(fde::config_from_json(json{{"kernel", {{"type", "discrete"}, {"lags", {{0.3, 1.0}}}}}}),
               fde::ValidationError);
}

TEST(Config, LoadReportsBadJson) {
  const auto dir = scratch("load");
  fde::write_text(dir / "bad.json", "{ not json");
  EXPECT_THROW(fde::load_config(dir / "bad.json"), fde::ValidationError);
  fde::write_text(dir / "good.json", R"({"H": 0.8, "n_steps": 64})");
  EXPECT_DOUBLE_EQ(fde::load_config(dir / "good.json").H, 0.8);
  fs::remove_all(dir);
}

TEST(Regime, LabelFollowsThreshold) {
  EXPECT_EQ(fde::regime_label(0.6, true), "smooth-density regime");
  EXPECT_EQ(fde::regime_label(0.6, false), "existence-only regime");
  EXPECT_EQ(fde::regime_label(0.69, false), "existence-only regime");
  EXPECT_EQ(fde::regime_label(0.70, false), "smooth-density regime");
}

TEST(Run, SimulateWritesPathsAndManifest) {
  const auto c = small_config("simulate");
  const auto r = fde::run_simulate(c);
  ASSERT_EQ(r.files.size(), 3u);
  const auto p = fde::path_from_csv(fde::read_text(r.dir / "path_00002.csv"));
  EXPECT_DOUBLE_EQ(p.grid().t_start(), -0.25);
  EXPECT_DOUBLE_EQ(p(0), 1.0);
  const auto m = json::parse(fde::read_text(r.dir / "manifest.json"));
  EXPECT_EQ(m["verb"], "simulate");
  EXPECT_EQ(m["regime"], "smooth-density regime");
  EXPECT_EQ(m["content_hash"].get<std::string>().size(), 16u);
  fs::remove_all(r.dir);
}

TEST(Run, SimulateIsDeterministicAcrossThreadCounts) {
  auto c = small_config("det_a");
  c.mc_paths = 6;
  const auto a = json::parse(fde::read_text(fde::run_simulate(c).dir / "manifest.json"));
  c.output_dir = scratch("det_b").string();
  c.threads = 3;
  const auto b = json::parse(fde::read_text(fde::run_simulate(c).dir / "manifest.json"));
  EXPECT_EQ(a["content_hash"], b["content_hash"]);
  c.seed = 2;
  c.output_dir = scratch("det_c").string();
  const auto d = json::parse(fde::read_text(fde::run_simulate(c).dir / "manifest.json"));
  EXPECT_NE(a["content_hash"], d["content_hash"]);
  for (const char* n : {"det_a", "det_b", "det_c"}) fs::remove_all(scratch(n));
}

TEST(Run, SensitivityAndFbmSample) {
  auto c = small_config("sens");
  c.r_stride = 4;
  const auto r = fde::run_sensitivity(c);
  const auto t = fde::fde1_decode(fde::read_text(r.dir / "phi.fde1"));
  EXPECT_EQ(t.d, 4u);
  EXPECT_EQ(r.summary["r_nodes"], 17);
  fs::remove_all(r.dir);

  c.output_dir = scratch("fbm").string();
  const auto f = fde::run_fbm_sample(c);
  EXPECT_EQ(f.files.size(), 6u);
  const auto p = fde::path_from_fde1(fde::fde1_decode(fde::read_text(f.dir / "fbm_00001.fde1")));
  const auto q = fde::path_from_csv(fde::read_text(f.dir / "fbm_00001.csv"));
  EXPECT_EQ(p.values(), q.values());
  fs::remove_all(f.dir);
}

TEST(Run, DensityReportsMalliavinSummary) {
  auto c = small_config("density");
  c.mc_paths = 120;
  c.malliavin_paths = 4;
  c.r_stride = 4;
  const auto r = fde::run_density(c);
  const auto& s = r.summary;
  EXPECT_EQ(s["malliavin"]["per_time"].size(), 3u);
  EXPECT_TRUE(s["malliavin"]["all_det_positive"].get<bool>());
  EXPECT_EQ(s["malliavin"]["lower_bound"]["passed"], 4);
  EXPECT_NEAR(s["density"]["integral"].get<double>(), 1.0, 1e-2);
  EXPECT_TRUE(fs::exists(r.dir / "density.csv"));
  fs::remove_all(r.dir);
}

TEST(Run, InvalidConfigIsRejectedBeforeWork) {
  auto c = small_config("invalid");
  c.H = 0.4;
  EXPECT_THROW(fde::run_simulate(c), fde::ValidationError);
  EXPECT_FALSE(fs::exists(c.output_dir));
}

}  // namespace
