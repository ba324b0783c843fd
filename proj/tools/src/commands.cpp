#include "commands.hpp"

#include <CLI11.hpp>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <thread>

#include "csi4/common/diagnostics.hpp"
#include "csi4/eval/plots.hpp"
#include "csi4/eval/report.hpp"
#include "csi4/models/checkpoint.hpp"
#include "run_config.hpp"

namespace csi4::cli {

namespace fs = std::filesystem;

namespace {

using Overrides = std::vector<std::pair<std::string, std::string>>;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

// Runs the tasks on up to `threads` workers. The first failure (in task
// order) is rethrown after every worker has finished.
void run_parallel(std::vector<std::function<void()>>& tasks, unsigned threads) {
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(tasks.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string padded(std::size_t iter, std::size_t width) {
  std::string s = std::to_string(iter);
  return s.size() >= width ? s : std::string(width - s.size(), '0') + s;
}

const char* kind_name(models::ModelKind k) {
  switch (k) {
    case models::ModelKind::generator: return "generator";
    case models::ModelKind::critic: return "critic";
    case models::ModelKind::discriminator: return "discriminator";
    case models::ModelKind::classifier: return "classifier";
  }
  return "unknown";
}

void print_counts(std::ostream& out, const data::CsiBatch& b) {
  const auto counts = b.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) out << "class " << c << ": " << counts[c] << '\n';
}

std::string dataset_path(const RunConfig& cfg) {
  if (cfg.data.path.empty()) throw UsageError("no dataset given (use --data or data.path)");
  return cfg.data.path;
}

int cmd_synth(const RunConfig& cfg, const fs::path& out_path, std::ostream& out) {
  try {
    cfg.synth.validate();
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }
  const auto corpus = data::synth_corpus(cfg.synth);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  data::save_csi(corpus, out_path);
  print_counts(out, corpus);
  out << "wrote " << corpus.size() << " samples to " << out_path.string() << '\n';
  return kExitOk;
}

int cmd_import(const fs::path& csv, std::size_t antennas, std::size_t time, std::size_t classes,
               std::optional<int> user, const fs::path& out_path, std::ostream& out) {
  const auto batch = data::import_csv(csv, antennas, time, classes, user);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  data::save_csi(batch, out_path);
  print_counts(out, batch);
  out << "wrote " << batch.size() << " samples to " << out_path.string() << '\n';
  return kExitOk;
}

int cmd_train(RunConfig cfg, const fs::path& out_dir, std::ostream& out) {
  cfg.data.path = fs::absolute(dataset_path(cfg)).lexically_normal().string();
  cfg.train.validate();
  const auto real = data::load_csi(cfg.data.path);
  const auto parts = data::split(real, cfg.data.split_ratio, cfg.data.split_seed, cfg.data.stratified);
  const auto gan_data = data::normalize(parts.train);
  const bool wgp = cfg.train.loss_kind == train::LossKind::wasserstein_gp;
  const auto gen = cfg.generator_for(real);
  const auto critic = cfg.critic_for(real);
  const auto disc = cfg.discriminator_for(real);

  fs::create_directories(out_dir);
  write_text(out_dir / "config.ini", cfg.to_ini("train"));
  const std::size_t width = std::max<std::size_t>(4, std::to_string(cfg.train.epochs).size());
  auto hook = [&](const train::Snapshot& s) {
    const fs::path ckpt = out_dir / ("ckpt_" + padded(s.iter, width));
    fs::create_directories(ckpt);
    models::save_checkpoint({*s.generator_spec, *s.generator}, ckpt / "generator.ckpt");
    if (wgp) {
      models::save_checkpoint({critic, *s.adversary}, ckpt / "critic.ckpt");
    } else {
      models::save_checkpoint({disc, *s.adversary}, ckpt / "discriminator.ckpt");
    }
    auto samples = *s.samples;
    samples.user_id = real.user_id;
    data::save_csi(samples, out_dir / ("samples_" + padded(s.iter, width) + ".csi4"));
    out << "iter " << s.iter << ": saved " << ckpt.filename().string() << '\n';
  };

  const auto result = wgp ? train::train_cwgan(gan_data, gen, critic, cfg.train, hook)
                          : train::train_cgan_bce(gan_data, gen, disc, cfg.train, hook);
  result.log.write_csv(out_dir / "log.csv");
  write_text(out_dir / "losses.svg", eval::loss_curve_svg(result.log));

  std::ostringstream summary;
  summary << std::setprecision(6) << "summary: loss=" << train::to_string(cfg.train.loss_kind)
          << " iters=" << result.generator_updates << " adversary_updates=" << result.adversary_updates;
  if (!result.log.rows.empty()) {
    const auto& last = result.log.rows.back();
    const std::size_t window = std::max<std::size_t>(1, result.log.rows.size() / 4);
    summary << " final_gen_loss=" << last.gen_loss;
    if (wgp) {
      const double ratio = train::critic_loss_window_ratio(result.log, window);
      summary << " final_critic_loss=" << last.critic_loss << " critic_window_ratio=" << ratio
              << " bounded=" << (ratio < 5.0 ? "yes" : "no");
    } else {
      summary << " final_disc_loss=" << last.critic_loss << " final_disc_acc=" << last.disc_acc.value_or(0.0)
              << " bce_failure_signature=" << (train::bce_failure_signature(result.log) ? "yes" : "no");
    }
  }
  summary << '\n';
  write_text(out_dir / "summary.txt", summary.str());
  out << summary.str();
  return kExitOk;
}

int cmd_generate(const RunConfig& cfg, const fs::path& out_path, std::ostream& out) {
  if (cfg.generate.ckpt.empty()) throw UsageError("generate needs --ckpt");
  fs::path path = cfg.generate.ckpt;
  if (fs::is_directory(path)) path /= "generator.ckpt";
  const auto ckpt = models::load_checkpoint(path);
  const auto* spec = std::get_if<models::GeneratorSpec>(&ckpt.spec);
  if (!spec) {
    throw FormatError(path.string() + " holds a " + kind_name(ckpt.kind()) + " checkpoint, expected a generator");
  }
  const auto batch = train::generate_synthetic(*spec, ckpt.params, cfg.generate.per_class, cfg.generate.seed);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  data::save_csi(batch, out_path);
  print_counts(out, batch);
  out << "wrote " << batch.size() << " samples to " << out_path.string() << '\n';
  return kExitOk;
}

eval::ConfigEcho echo_of(const std::string& ini) {
  eval::ConfigEcho echo;
  std::istringstream in(ini);
  std::string line, section;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '[') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find(" = ");
    echo.emplace_back(section + "." + line.substr(0, eq), line.substr(eq + 3));
  }
  return echo;
}

int cmd_eval(RunConfig cfg, const fs::path& out_dir, std::ostream& out) {
  cfg.data.path = fs::absolute(dataset_path(cfg)).lexically_normal().string();
  if (cfg.eval.gan_train_target != "test" && cfg.eval.gan_train_target != "all") {
    throw UsageError("eval.gan_train_target must be 'test' or 'all'");
  }
  const auto real = data::load_csi(cfg.data.path);
  const auto parts = data::split(real, cfg.data.split_ratio, cfg.data.split_seed, cfg.data.stratified);
  const auto spec = cfg.classifier_for(real);
  const auto mcfg = cfg.metric_config();

  eval::ReportInputs in;
  std::vector<std::function<void()>> tasks;
  tasks.emplace_back([&] { in.baseline = eval::baseline_accuracy(parts, spec, mcfg); });
  data::CsiBatch synthetic;
  const bool have_synthetic = cfg.eval.synthetic != "none" && !cfg.eval.synthetic.empty();
  if (have_synthetic) {
    cfg.eval.synthetic = fs::absolute(cfg.eval.synthetic).lexically_normal().string();
    synthetic = data::load_csi(cfg.eval.synthetic, data::Source::synthetic);
    if (synthetic.normalized != real.normalized) {
      throw ContractError("normalization state differs between real and synthetic data");
    }
    if (synthetic.antennas() != real.antennas() || synthetic.time() != real.time() ||
        synthetic.num_classes != real.num_classes) {
      throw ContractError("synthetic data does not match the real geometry or class count");
    }
    const auto& target = cfg.eval.gan_train_target == "all" ? real : parts.test;
    const std::size_t cap = mcfg.gan_test_cap_factor * parts.test.size();
    tasks.emplace_back([&, cap] { in.gan_train = eval::gan_train_score(synthetic, target, spec, mcfg); });
    tasks.emplace_back([&, cap] { in.gan_test = eval::gan_test_score(parts.train, synthetic, spec, mcfg, cap); });
    tasks.emplace_back([&] { in.augmented = eval::augmented_accuracy(parts, synthetic, spec, mcfg); });
    tasks.emplace_back([&] { in.diversity = eval::diversity_metrics(synthetic, cfg.eval.diversity_samples); });
  }
  run_parallel(tasks, worker_threads());

  std::string user = cfg.eval.user;
  if (user.empty()) user = real.user_id ? "user" + std::to_string(*real.user_id) : "run";
  const std::string ini = cfg.to_ini("eval");
  in.config = echo_of(ini);
  const auto report = eval::build_report(user, std::move(in));
  eval::write_report(report, out_dir);
  write_text(out_dir / "config.ini", ini);
  out << eval::render_table({report});
  for (const auto& d : report.diversity) {
    if (d.status != eval::DiversityStatus::ok) {
      out << "class " << d.label << ": diversity " << eval::to_string(d.status) << '\n';
    }
  }
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& runs, const std::string& out_dir, std::ostream& out) {
  if (runs.empty()) throw UsageError("report needs at least one run directory");
  std::vector<eval::EvalReport> reports;
  for (const auto& run : runs) {
    fs::path dir = run;
    if (!fs::exists(dir / "metrics.csv") && fs::exists(dir / "eval" / "metrics.csv")) dir /= "eval";
    try {
      reports.push_back(eval::read_report(dir));
    } catch (const Error& e) {
      warn("skipping " + run + ": " + e.what());
    }
  }
  if (reports.empty()) throw DataError("no readable reports among " + std::to_string(runs.size()) + " run(s)");
  const std::string table = eval::render_table(reports);
  out << table;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "summary.txt", table);
    write_text(fs::path(out_dir) / "summary.csv", eval::metrics_csv(reports));
    write_text(fs::path(out_dir) / "metrics.svg", eval::metrics_bar_svg(reports));
  }
  return kExitOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return kExitUsage;
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const ContractError*>(&e) ||
      dynamic_cast<const DimensionError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
      dynamic_cast<const IoError*>(&e)) {
    return kExitData;
  }
  return kExitFailure;
}

}  // namespace

unsigned worker_threads() {
  if (const char* env = std::getenv("CSI4_THREADS"); env && *env) {
    unsigned v = 0;
    const std::string s = env;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || v == 0) {
      throw UsageError("CSI4_THREADS must be a positive integer, got '" + s + "'");
    }
    return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cWGAN-GP toolkit for CSI amplitude augmentation", "csi4"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  Overrides overrides;
  std::string config_path, out_path;
  auto setting = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(
        flag, [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); }, help);
  };
  auto common = [&](CLI::App* sub, bool out_required, const std::string& out_help) {
    sub->add_option("--config", config_path, "INI file with settings; flags override it")->check(CLI::ExistingFile);
    auto* o = sub->add_option("--out", out_path, out_help);
    if (out_required) o->required();
  };

  auto* synth = app.add_subcommand("synth", "Write a synthetic separable CSI corpus");
  common(synth, true, "Output CSI4DATA file");
  setting(synth, "--classes", "synth.classes", "Number of classes");
  setting(synth, "--antennas", "synth.antennas", "Antenna count");
  setting(synth, "--time", "synth.time", "Time steps per sample");
  setting(synth, "--per-class", "synth.per_class", "Samples per class");
  setting(synth, "--separation", "synth.separation", "Class template amplitude");
  setting(synth, "--noise", "synth.noise", "Noise standard deviation");
  setting(synth, "--seed", "synth.seed", "Corpus seed");

  auto* train_cmd = app.add_subcommand("train", "Train a conditional GAN on a CSI dataset");
  common(train_cmd, true, "Run directory");
  setting(train_cmd, "--data", "data.path", "CSI4DATA input");
  setting(train_cmd, "--loss", "train.loss", "wgp or bce");
  setting(train_cmd, "--iters", "train.iters", "Generator updates");
  setting(train_cmd, "--seed", "train.seed", "Training seed");
  setting(train_cmd, "--n-critic", "train.n_critic", "Critic updates per generator update");
  setting(train_cmd, "--lambda-gp", "train.lambda_gp", "Gradient penalty weight");
  setting(train_cmd, "--lr", "train.lr", "Adam learning rate");
  setting(train_cmd, "--batch-size", "train.batch_size", "Minibatch size");
  setting(train_cmd, "--latent-dim", "train.latent_dim", "Noise dimension");
  setting(train_cmd, "--save-every", "train.save_every", "Checkpoint cadence in iterations");
  setting(train_cmd, "--samples-per-class", "train.samples_per_class", "Saved samples per class");
  setting(train_cmd, "--split-seed", "data.split_seed", "Train/test split seed");

  auto* gen_cmd = app.add_subcommand("generate", "Sample a trained generator");
  common(gen_cmd, true, "Output CSI4DATA file");
  setting(gen_cmd, "--ckpt", "generate.ckpt", "Checkpoint directory or generator.ckpt");
  setting(gen_cmd, "--per-class", "generate.per_class", "Samples per class");
  setting(gen_cmd, "--seed", "generate.seed", "Sampling seed");

  auto* eval_cmd = app.add_subcommand("eval", "Compute GAN-train, GAN-test, baseline and augmented accuracy");
  common(eval_cmd, true, "Report directory");
  setting(eval_cmd, "--data", "data.path", "Real CSI4DATA input");
  setting(eval_cmd, "--synthetic", "eval.synthetic", "Synthetic CSI4DATA input or 'none'");
  setting(eval_cmd, "--user", "eval.user", "Row label in the report");
  setting(eval_cmd, "--seed", "classifier.seed", "Classifier seed");
  setting(eval_cmd, "--epochs", "classifier.epochs", "Classifier epochs");
  setting(eval_cmd, "--gan-train-target", "eval.gan_train_target", "test or all");
  setting(eval_cmd, "--split-seed", "data.split_seed", "Train/test split seed");

  std::vector<std::string> runs;
  auto* report_cmd = app.add_subcommand("report", "Merge evaluation reports into one table and chart");
  report_cmd->add_option("runs", runs, "Report or run directories");
  report_cmd->add_option("--out", out_path, "Summary directory");

  std::string csv_path;
  std::size_t antennas = 0, time = 0, classes = 0;
  std::optional<int> user;
  auto* import_cmd = app.add_subcommand("import", "Convert a label,v1,...,vF CSV into CSI4DATA");
  import_cmd->add_option("--csv", csv_path, "Input CSV")->required()->check(CLI::ExistingFile);
  import_cmd->add_option("--antennas", antennas, "Antenna count")->required();
  import_cmd->add_option("--time", time, "Time steps per sample")->required();
  import_cmd->add_option("--classes", classes, "Number of classes")->required();
  import_cmd->add_option("--user", user, "User id stored in the header");
  import_cmd->add_option("--out", out_path, "Output CSI4DATA file")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg.load_ini(config_path);
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    if (synth->parsed()) return cmd_synth(cfg, out_path, out);
    if (train_cmd->parsed()) return cmd_train(cfg, out_path, out);
    if (gen_cmd->parsed()) return cmd_generate(cfg, out_path, out);
    if (eval_cmd->parsed()) return cmd_eval(cfg, out_path, out);
    if (report_cmd->parsed()) return cmd_report(runs, out_path, out);
    if (import_cmd->parsed()) return cmd_import(csv_path, antennas, time, classes, user, out_path, out);
  } catch (const std::exception& e) {
    err << "csi4: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitUsage;
}

}  // namespace csi4::cli
