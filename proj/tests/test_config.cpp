#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "gg/config.hpp"
#include "gg/pipeline.hpp"

using namespace gg;
using config::ConfigError;
using config::RunConfig;

TEST_SUITE("config") {

TEST_CASE("defaults are valid and serialize with every key") {
  const RunConfig cfg = RunConfig::defaults();
  cfg.validate();
  const std::string text = cfg.canonical(true);
  for (const auto& key : RunConfig::keys()) {
    CHECK(text.find(key + " = ") != std::string::npos);
  }
}

TEST_CASE("canonical text round-trips through the parser") {
  RunConfig cfg = RunConfig::defaults();
  cfg.seed = 42;
  cfg.variant = "visual";
  cfg.repr_lambda_r = 0.125;
  const RunConfig back = RunConfig::from_string(cfg.canonical(true));
  CHECK(back.seed == 42);
  CHECK(back.variant == "visual");
  CHECK(back.repr_lambda_r == 0.125);
  CHECK(back.hash() == cfg.hash());
  CHECK(back.canonical(true) == cfg.canonical(true));
}

TEST_CASE("unknown keys are rejected") {
  RunConfig cfg = RunConfig::defaults();
  const std::string text = cfg.canonical(true) + "bogus.key = 1\n";
  CHECK_THROWS_WITH_AS(RunConfig::from_string(text), doctest::Contains("unknown key"),
                       ConfigError);
}

TEST_CASE("a missing key is reported by name") {
  RunConfig cfg = RunConfig::defaults();
  std::string text = cfg.canonical(true);
  const auto pos = text.find("repr.i_max = ");
  REQUIRE(pos != std::string::npos);
  const auto end = text.find('\n', pos);
  text.erase(pos, end - pos + 1);
  CHECK_THROWS_WITH_AS(RunConfig::from_string(text), doctest::Contains("repr.i_max"),
                       ConfigError);
}

TEST_CASE("duplicate keys and malformed values are rejected") {
  RunConfig cfg = RunConfig::defaults();
  CHECK_THROWS_AS(RunConfig::from_string(cfg.canonical(true) + "sac.batch = 256\n"),
                  ConfigError);
  std::string text = cfg.canonical(true);
  const auto pos = text.find("sac.gamma = ");
  text.replace(pos, text.find('\n', pos) - pos, "sac.gamma = fast");
  CHECK_THROWS_AS(RunConfig::from_string(text), ConfigError);
}

TEST_CASE("comments and blank lines are tolerated") {
  RunConfig cfg = RunConfig::defaults();
  const std::string text = "# run configuration\n\n" + cfg.canonical(true) + "\n# done\n";
  CHECK(RunConfig::from_string(text).hash() == cfg.hash());
}

TEST_CASE("hash excludes identity keys and covers every hyperparameter") {
  RunConfig base = RunConfig::defaults();
  RunConfig same = base;
  same.seed = 99;
  same.variant = "visual";
  same.out = "elsewhere";
  CHECK(same.hash() == base.hash());  // variants share one experiment hash

  // changing any non-identity value must change the hash
  for (const auto& key : RunConfig::keys()) {
    if (key == "run.seed" || key == "run.variant" || key == "run.out") continue;
    RunConfig mod = base;
    const std::string old = mod.get(key);
    if (old == "0") {
      mod.set(key, "1");
    } else if (old.find_first_not_of("-0123456789") == std::string::npos) {
      mod.set(key, std::to_string(std::stoll(old) + 1));
    } else {
      mod.set(key, std::to_string(std::stod(old) * 1.5 + 0.25));
    }
    CHECK(mod.hash() != base.hash());
  }
}

TEST_CASE("validation rejects bad values") {
  RunConfig cfg = RunConfig::defaults();
  cfg.variant = "imaginary";
  CHECK_THROWS_AS(cfg.validate(), std::exception);
  cfg = RunConfig::defaults();
  cfg.physics_mu_obj_min = cfg.physics_mu_obj_max;
  CHECK_THROWS_AS(cfg.validate(), std::exception);
  cfg = RunConfig::defaults();
  cfg.repr_tau_nce = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("derived module configs mirror the config values") {
  RunConfig cfg = RunConfig::defaults();
  cfg.sac_hidden_visual = 128;
  cfg.sac_layers_visual = 4;
  const sac::SacConfig vis = cfg.sac_config(env::Variant::kVisual);
  CHECK(vis.hidden == std::vector<int>{128, 128, 128, 128});
  const sac::SacConfig lat = cfg.sac_config(env::Variant::kLatent);
  CHECK(lat.hidden == std::vector<int>{128, 128});
  CHECK(cfg.stage2_config().critic_steps == 5);
  CHECK(cfg.physics_ranges().g_z.lo == -11.0);
  CHECK(cfg.env_params().horizon == 64);
}

TEST_CASE("run directory names are deterministic") {
  RunConfig cfg = RunConfig::defaults();
  cfg.out = "somewhere";
  cfg.seed = 3;
  const std::string d1 = pipeline::train_run_dir(cfg);
  const std::string d2 = pipeline::train_run_dir(cfg);
  CHECK(d1 == d2);
  CHECK(d1.rfind("somewhere/train-latent-env-s3-", 0) == 0);
}

}  // TEST_SUITE
