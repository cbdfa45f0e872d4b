#include "gg/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gg/grasp_env.hpp"
#include "gg/rng.hpp"
#include "gg/sac.hpp"
#include "gg/sha256.hpp"
#include "gg/theory.hpp"

namespace gg::pipeline {

namespace fs = std::filesystem;
using config::RunConfig;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << text;
}

struct ManifestWriter {
  std::string dir;
  std::vector<std::pair<std::string, std::string>> artifacts;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  void add(const std::string& name, const std::string& path) {
    artifacts.emplace_back(name, file_sha256(path));
  }
  void finish(const RunConfig& cfg) const {
    std::ostringstream os;
    os << "code_version " << kCodeVersion << "\n";
    os << "config_hash " << cfg.hash() << "\n";
    os << "variant " << cfg.variant << "\n";
    os << "seed " << cfg.seed << "\n";
    for (const auto& [name, sha] : artifacts) os << "artifact " << name << " " << sha << "\n";
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[64];
    std::snprintf(buf, sizeof(buf), "wall_clock_s %.3f\n", wall);
    os << buf;
    write_file(dir + "/manifest", os.str());
  }
};

// sections each stage's outputs depend on
const std::vector<std::string> kPretrainScope = {"stage1.", "repr.", "env.", "physics."};
const std::vector<std::string> kFuseScope = {"stage1.", "stage2.", "repr.", "env.", "physics."};
const std::vector<std::string> kTrainScope = {"stage1.", "stage2.", "repr.", "env.",
                                              "physics.", "sac."};
const std::vector<std::string> kAblateScope = {"stage1.", "stage2.", "repr.", "env.",
                                               "physics.", "sac.", "metrics."};

// A run directory is complete when the scoped config it was built from
// matches this config and a manifest exists.
bool reusable(const RunConfig& cfg, const std::string& dir,
              const std::vector<std::string>& scope) {
  const std::string lock = dir + "/.scope";
  if (!fs::exists(lock) || !fs::exists(dir + "/manifest")) return false;
  return read_file(lock) == cfg.scoped_canonical(scope) + "seed = " + std::to_string(cfg.seed) +
                                "\nvariant = " + cfg.variant + "\n";
}

void start_run_dir(const RunConfig& cfg, const std::string& dir,
                   const std::vector<std::string>& scope) {
  fs::create_directories(dir + "/weights");
  fs::create_directories(dir + "/logs");
  fs::remove(dir + "/manifest");  // incomplete until finish
  write_file(dir + "/config.lock", cfg.canonical(true));
  write_file(dir + "/.scope", cfg.scoped_canonical(scope) + "seed = " +
                                  std::to_string(cfg.seed) + "\nvariant = " + cfg.variant +
                                  "\n");
}

}  // namespace

std::string file_sha256(const std::string& path) { return sha256_hex(read_file(path)); }

std::string run_dir(const RunConfig& cfg, const std::string& tag) {
  return cfg.out + "/" + tag + "-" + cfg.hash8();
}

std::string stage1_bundle_path(const RunConfig& cfg) {
  return cfg.out + "/pretrain-s" + std::to_string(cfg.seed) + "-" +
         cfg.scoped_hash8(kPretrainScope) + "/weights/stage1.gg";
}

std::string stage2_bundle_path(const RunConfig& cfg) {
  return cfg.out + "/fuse-s" + std::to_string(cfg.seed) + "-" + cfg.scoped_hash8(kFuseScope) +
         "/weights/bundle.gg";
}

std::string train_run_tag(const RunConfig& cfg) {
  return "train-" + cfg.variant + "-s" + std::to_string(cfg.seed);
}

std::string train_run_dir(const RunConfig& cfg) {
  return cfg.out + "/" + train_run_tag(cfg) + "-" + cfg.scoped_hash8(kTrainScope);
}

void make_stage1_data(const RunConfig& cfg, Eigen::MatrixXd& x_t, Eigen::MatrixXd& x_g) {
  env::GraspEnv sampler(cfg.physics_ranges(), cfg.env_params());
  const long n = cfg.stage1_dataset;
  x_t.resize(n, env::kTargetDim);
  x_g.resize(n, env::kGripperDim);
  for (long i = 0; i < n; ++i) {
    sampler.reset(mix_seed(cfg.seed, 0xD1000 + i));
    x_t.row(i) = sampler.x_target();
    x_g.row(i) = sampler.x_gripper();
  }
}

repr::Stage2Data make_stage2_data(const RunConfig& cfg) {
  env::GraspEnv sampler(cfg.physics_ranges(), cfg.env_params());
  const long n = cfg.stage2_dataset;
  repr::Stage2Data data;
  data.x_t.resize(n, env::kTargetDim);
  data.x_g.resize(n, env::kGripperDim);
  data.e.resize(n, context::kDim);
  data.q.resize(n, 4);
  Rng qrng(mix_seed(cfg.seed, 0xD2));
  for (long i = 0; i < n; ++i) {
    sampler.reset(mix_seed(cfg.seed, 0xD3000 + i));
    data.x_t.row(i) = sampler.x_target();
    data.x_g.row(i) = sampler.x_gripper();
    for (int k = 0; k < context::kDim; ++k) data.e(i, k) = sampler.context_vec().e[k];
    // orientations cover the sphere so the quaternion channel trains on the
    // general case; the grasp task itself holds q constant
    Eigen::Vector4d q;
    for (int k = 0; k < 4; ++k) q[k] = qrng.normal();
    data.q.row(i) = q.normalized();
  }
  return data;
}

StageOutcome run_pretrain(const RunConfig& cfg) {
  const std::string dir = cfg.out + "/pretrain-s" + std::to_string(cfg.seed) + "-" +
                          cfg.scoped_hash8(kPretrainScope);
  if (reusable(cfg, dir, kPretrainScope)) return {dir, true};
  start_run_dir(cfg, dir, kPretrainScope);
  ManifestWriter manifest{dir};

  Eigen::MatrixXd x_t, x_g;
  make_stage1_data(cfg, x_t, x_g);
  repr::Stage1Report report;
  repr::Bundle bundle;
  bundle.encoders = repr::train_stage1(x_t, x_g, cfg.stage1_config(), &report);
  repr::save_bundle(dir + "/weights/stage1.gg", bundle);

  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "stage1\nmse_t_initial %.10g\nmse_t_final %.10g\nmse_t_ratio %.10g\n"
                "mse_g_initial %.10g\nmse_g_final %.10g\nmse_g_ratio %.10g\n",
                report.mse_t_initial, report.mse_t_final,
                report.mse_t_final / report.mse_t_initial, report.mse_g_initial,
                report.mse_g_final, report.mse_g_final / report.mse_g_initial);
  write_file(dir + "/report.txt", buf);
  manifest.add("stage1.gg", dir + "/weights/stage1.gg");
  manifest.finish(cfg);
  return {dir, false};
}

StageOutcome run_fuse(const RunConfig& cfg) {
  const std::string dir = cfg.out + "/fuse-s" + std::to_string(cfg.seed) + "-" +
                          cfg.scoped_hash8(kFuseScope);
  if (reusable(cfg, dir, kFuseScope)) return {dir, true};
  const std::string stage1_path = stage1_bundle_path(cfg);
  if (!fs::exists(stage1_path)) {
    throw std::runtime_error("fuse: missing stage-1 bundle " + stage1_path +
                             " (run pretrain first)");
  }
  const repr::Bundle stage1 = repr::load_bundle(stage1_path);  // verifies checksums
  start_run_dir(cfg, dir, kFuseScope);
  ManifestWriter manifest{dir};

  const repr::Stage2Data data = make_stage2_data(cfg);
  repr::Stage2Result result = repr::train_stage2(stage1.encoders, data, cfg.stage2_config());

  repr::Bundle bundle;
  bundle.encoders = stage1.encoders;
  bundle.fusion = std::move(result.fusion);
  bundle.critic = std::move(result.critic);
  repr::save_bundle(dir + "/weights/bundle.gg", bundle);

  const auto& rep = result.report;
  char buf[1024];
  std::snprintf(buf, sizeof(buf),
                "stage2\nrecon_initial %.10g\nrecon_final %.10g\ninfonce_final %.10g\n"
                "infonce_holdout %.10g\ni_max %.10g\ncertificate_ok %d\n"
                "singular_values %.10g %.10g %.10g %.10g\n%s\n",
                rep.recon_initial, rep.recon_final, rep.infonce_train, rep.infonce_holdout,
                cfg.repr_i_max, rep.certificate_ok ? 1 : 0, rep.singular_values[0],
                rep.singular_values[1], rep.singular_values[2], rep.singular_values[3],
                rep.note.c_str());
  write_file(dir + "/report.txt", buf);
  manifest.add("bundle.gg", dir + "/weights/bundle.gg");
  manifest.finish(cfg);
  return {dir, false};
}

StageOutcome run_train(const RunConfig& cfg) {
  const std::string dir = train_run_dir(cfg);
  if (reusable(cfg, dir, kTrainScope)) return {dir, true};
  const env::Variant variant = env::variant_from_name(cfg.variant);

  repr::Bundle bundle;
  const repr::Bundle* bundle_ptr = nullptr;
  if (variant != env::Variant::kVisual) {
    const std::string path = stage2_bundle_path(cfg);
    if (!fs::exists(path)) {
      throw std::runtime_error("train: missing frozen bundle " + path + " (run fuse first)");
    }
    bundle = repr::load_bundle(path);
    bundle_ptr = &bundle;
  }

  start_run_dir(cfg, dir, kTrainScope);
  ManifestWriter manifest{dir};
  const sac::TrainResult result =
      sac::train_run(cfg.physics_ranges(), cfg.env_params(), bundle_ptr, cfg.train_config(variant));
  metrics::write_trace_csv(dir + "/logs/train.csv", result.trace);
  manifest.add("train.csv", dir + "/logs/train.csv");
  if (!result.actor_checkpoint.empty()) {
    write_file(dir + "/weights/actor_final.net", result.actor_checkpoint);
    manifest.add("actor_final.net", dir + "/weights/actor_final.net");
  }
  manifest.finish(cfg);
  return {dir, false};
}

EvalResult run_eval(const RunConfig& cfg, const std::string& checkpoint_path,
                    int trace_episodes) {
  const env::Variant variant = env::variant_from_name(cfg.variant);
  std::string ckpt = checkpoint_path;
  if (ckpt.empty()) {
    ckpt = train_run_dir(cfg) + "/weights/actor_final.net";
  }
  if (!fs::exists(ckpt)) {
    throw std::runtime_error("eval: missing checkpoint " + ckpt + " (run train first)");
  }

  repr::Bundle bundle;
  const repr::Bundle* bundle_ptr = nullptr;
  if (variant != env::Variant::kVisual) {
    bundle = repr::load_bundle(stage2_bundle_path(cfg));
    bundle_ptr = &bundle;
  }

  sac::SacConfig sac_cfg = cfg.sac_config(variant);
  sac_cfg.obs_dim = env::observation_dim(variant, static_cast<int>(cfg.repr_d_s));
  sac_cfg.seed = cfg.seed;
  sac::SacAgent agent(sac_cfg);
  agent.load_actor(read_file(ckpt));

  env::GraspEnv eval_env(cfg.physics_ranges(), cfg.env_params());
  eval_env.set_sampling_ranges(cfg.physics_ranges().scaled(cfg.eval_ood_scale));
  if (bundle_ptr) eval_env.attach_bundle(bundle_ptr);

  char ood_tag[32];
  std::snprintf(ood_tag, sizeof(ood_tag), "-ood%g", cfg.eval_ood_scale);
  const std::string dir =
      run_dir(cfg, "eval-" + cfg.variant + "-s" + std::to_string(cfg.seed) + ood_tag);
  fs::create_directories(dir + "/logs");

  long successes = 0;
  for (long ep = 0; ep < cfg.eval_episodes; ++ep) {
    eval_env.set_tracing(ep < trace_episodes);
    eval_env.reset(mix_seed(cfg.seed, 0xF000 + ep));
    env::StepResult last;
    while (!eval_env.done()) {
      last = eval_env.step(agent.act(eval_env.observe(variant).vec, true));
    }
    successes += last.success ? 1 : 0;
    if (ep < trace_episodes) {
      env::write_trace_csv(dir + "/logs/episode_" + std::to_string(ep) + ".csv",
                           eval_env.trace());
    }
  }
  EvalResult result;
  result.episodes = cfg.eval_episodes;
  result.success_rate = static_cast<double>(successes) / cfg.eval_episodes;
  result.ci_half_width =
      1.96 * std::sqrt(result.success_rate * (1.0 - result.success_rate) / cfg.eval_episodes);

  char buf[256];
  std::snprintf(buf, sizeof(buf), "episodes %ld\nood_scale %.10g\nsuccess_rate %.10g\nci95 %.10g\n",
                result.episodes, cfg.eval_ood_scale, result.success_rate, result.ci_half_width);
  write_file(dir + "/report.txt", buf);
  return result;
}

AblateResult run_ablation(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw config::ConfigError("ablate: need at least one seed");
  AblateResult result;
  result.root = cfg.out + "/ablate-" + cfg.scoped_hash8(kAblateScope);
  fs::create_directories(result.root);

  // shared representation artifacts (identical for every variant and seed)
  run_pretrain(cfg);
  run_fuse(cfg);

  const char* variants[3] = {"latent", "latent-env", "visual"};
  std::vector<metrics::SummaryRow> rows;
  for (const char* variant : variants) {
    for (std::uint64_t seed : seeds) {
      RunConfig run_cfg = cfg;
      run_cfg.variant = variant;
      run_cfg.seed = seed;
      // repr artifacts come from the base seed
      RunConfig repr_cfg = cfg;
      if (!fs::exists(stage2_bundle_path(repr_cfg))) run_fuse(repr_cfg);

      const std::string dir = train_run_dir(run_cfg);
      if (!reusable(run_cfg, dir, kTrainScope)) {
        // latent runs read the base-seed bundle; copy the path convention by
        // training directly here
        const env::Variant v = env::variant_from_name(variant);
        repr::Bundle bundle;
        const repr::Bundle* bundle_ptr = nullptr;
        if (v != env::Variant::kVisual) {
          bundle = repr::load_bundle(stage2_bundle_path(repr_cfg));
          bundle_ptr = &bundle;
        }
        start_run_dir(run_cfg, dir, kTrainScope);
        ManifestWriter manifest{dir};
        const sac::TrainResult tr = sac::train_run(run_cfg.physics_ranges(),
                                                   run_cfg.env_params(), bundle_ptr,
                                                   run_cfg.train_config(v));
        metrics::write_trace_csv(dir + "/logs/train.csv", tr.trace);
        manifest.add("train.csv", dir + "/logs/train.csv");
        if (!tr.actor_checkpoint.empty()) {
          write_file(dir + "/weights/actor_final.net", tr.actor_checkpoint);
          manifest.add("actor_final.net", dir + "/weights/actor_final.net");
        }
        manifest.finish(run_cfg);
      }
      result.run_dirs.push_back(dir);
      const metrics::SuccessTrace trace = metrics::read_trace_csv(dir + "/logs/train.csv");
      rows.push_back(metrics::summarize_trace(variant, std::to_string(seed), trace,
                                              cfg.metrics_tau, cfg.metrics_window,
                                              static_cast<int>(cfg.metrics_rolling)));
    }
  }
  result.rows = metrics::summarize(rows);
  metrics::write_summary_csv(result.root + "/summary.csv", result.rows);
  return result;
}

int cmd_pretrain(const RunConfig& cfg) {
  const StageOutcome out = run_pretrain(cfg);
  std::cout << (out.reused ? "reused " : "wrote ") << out.dir << "\n";
  std::cout << read_file(out.dir + "/report.txt");
  return 0;
}

int cmd_fuse(const RunConfig& cfg) {
  const StageOutcome out = run_fuse(cfg);
  std::cout << (out.reused ? "reused " : "wrote ") << out.dir << "\n";
  std::cout << read_file(out.dir + "/report.txt");
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  const StageOutcome out = run_train(cfg);
  std::cout << (out.reused ? "reused " : "wrote ") << out.dir << "\n";
  const metrics::SuccessTrace trace = metrics::read_trace_csv(out.dir + "/logs/train.csv");
  if (!trace.episodes.empty()) {
    const metrics::SummaryRow row =
        metrics::summarize_trace(cfg.variant, std::to_string(cfg.seed), trace, cfg.metrics_tau,
                                 cfg.metrics_window, static_cast<int>(cfg.metrics_rolling));
    std::cout << metrics::SummaryRow::header() << "\n" << row.csv() << "\n";
  }
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint, int trace_episodes) {
  const EvalResult r = run_eval(cfg, checkpoint, trace_episodes);
  std::printf("variant %s ood_scale %.3g episodes %ld success %.4f +- %.4f\n",
              cfg.variant.c_str(), cfg.eval_ood_scale, r.episodes, r.success_rate,
              r.ci_half_width);
  return 0;
}

int cmd_ablate(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds) {
  const AblateResult r = run_ablation(cfg, seeds);
  std::cout << "wrote " << r.root << "/summary.csv\n";
  std::cout << metrics::SummaryRow::header() << "\n";
  for (const auto& row : r.rows) std::cout << row.csv() << "\n";
  return 0;
}

int cmd_verify(const RunConfig& cfg) {
  theory::TheoryConfig tc;
  tc.seed = cfg.seed;
  tc.mdps = 3;
  const std::vector<theory::CheckReport> reports = theory::run_all(tc);
  const std::string dir = run_dir(cfg, "verify-s" + std::to_string(cfg.seed));
  fs::create_directories(dir);
  theory::write_margins_csv(dir + "/margins.csv", reports);
  bool all_pass = true;
  for (const auto& r : reports) {
    std::printf("[%s] %s: %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    all_pass = all_pass && r.pass;
  }
  std::cout << "margins: " << dir << "/margins.csv\n";
  return all_pass ? 0 : 1;
}

int cmd_summarize(const RunConfig& cfg, const std::string& curves_path) {
  // scan run directories under out for trace logs
  std::vector<metrics::SummaryRow> rows;
  std::vector<std::pair<std::string, std::vector<metrics::SeriesPoint>>> curves;
  std::vector<fs::path> roots{fs::path(cfg.out)};
  if (fs::exists(fs::path(cfg.out))) {
    for (const auto& entry : fs::directory_iterator(cfg.out)) {
      if (entry.is_directory()) roots.push_back(entry.path());
    }
  }
  std::vector<std::string> seen;
  for (const auto& root : roots) {
    if (!fs::exists(root)) continue;
    for (const auto& entry : fs::directory_iterator(root)) {
      const fs::path log = entry.path() / "logs" / "train.csv";
      const fs::path manifest = entry.path() / "manifest";
      if (!fs::exists(log) || !fs::exists(manifest)) continue;
      if (std::find(seen.begin(), seen.end(), log.string()) != seen.end()) continue;
      seen.push_back(log.string());
      std::string variant = "unknown", seed = "0";
      std::istringstream ms(read_file(manifest.string()));
      std::string key, value;
      while (ms >> key >> value) {
        if (key == "variant") variant = value;
        if (key == "seed") seed = value;
      }
      const metrics::SuccessTrace trace = metrics::read_trace_csv(log.string());
      if (trace.episodes.empty()) continue;
      rows.push_back(metrics::summarize_trace(variant, seed, trace, cfg.metrics_tau,
                                              cfg.metrics_window,
                                              static_cast<int>(cfg.metrics_rolling)));
      curves.emplace_back(variant + " s" + seed,
                          metrics::rolling_success(trace, static_cast<int>(cfg.metrics_rolling)));
    }
  }
  if (rows.empty()) {
    std::cerr << "summarize: no completed train runs under " << cfg.out << "\n";
    return 1;
  }
  const auto all = metrics::summarize(rows);
  metrics::write_summary_csv(cfg.out + "/summary.csv", all);
  std::cout << metrics::SummaryRow::header() << "\n";
  for (const auto& row : all) std::cout << row.csv() << "\n";
  if (!curves_path.empty()) metrics::write_curves_dat(curves_path, curves);
  return 0;
}

}  // namespace gg::pipeline
