// Command-line front end: run experiments, validate invariants, dump channel
// fixtures. Exit codes: 0 success, 1 configuration error, 2 runtime abort.

#include "fdcf/fdcf.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> drops;
  std::optional<int> iters;
  std::optional<std::string> schemes;
  std::optional<std::string> scale;
  std::optional<std::string> out;
  int threads = 1;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "key=value configuration file");
  app->add_option("--seed", f.seed, "experiment seed");
  app->add_option("--drops", f.drops, "number of Monte-Carlo drops");
  app->add_option("--iters", f.iters, "training iterations");
  app->add_option("--schemes", f.schemes, "comma-separated schemes, or 'all'");
  app->add_option("--scale", f.scale, "preset: desk or paper");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--threads", f.threads, "worker threads (FDCF_THREADS overrides)");
}

fdcf::ExperimentSpec build_spec(const CommonFlags& f) {
  std::optional<fdcf::Scale> scale;
  if (f.scale) {
    if (*f.scale == "desk") scale = fdcf::Scale::desk;
    else if (*f.scale == "paper") scale = fdcf::Scale::paper;
    else throw fdcf::ConfigError("scale: expected desk or paper, got " + *f.scale);
  }
  fdcf::ExperimentSpec spec =
      f.config.empty() ? fdcf::parse_config(nullptr, scale) : fdcf::parse_config_file(f.config, scale);
  if (f.seed) spec.cfg.seed = *f.seed;
  if (f.drops) spec.drops = *f.drops;
  if (f.iters) spec.cfg.controls.max_iters = *f.iters;
  if (f.schemes) spec.schemes = fdcf::parse_scheme_list(*f.schemes);
  if (f.out) spec.output_dir = *f.out;
  spec.validate();
  return spec;
}

int cmd_run(const CommonFlags& f) {
  const auto spec = build_spec(f);
  const int threads = fdcf::resolve_threads(f.threads);
  const auto res = fdcf::run_experiment(spec, threads);
  if (res.drops_ok == 0) {
    std::cerr << "error: every drop failed";
    if (!res.failures.empty()) std::cerr << " (first: " << res.failures.front().second << ")";
    std::cerr << "\n";
    return 2;
  }
  fdcf::emit_outputs(res, spec);
  const int T = spec.cfg.iters();
  std::cout << "drops " << res.drops_ok << "/" << spec.drops << " ok, outputs in " << spec.output_dir << "\n";
  for (const auto& a : res.schemes)
    std::cout << "  " << fdcf::scheme_name(a.scheme) << ": mean sum rate " << a.mean_sum_rate[T] << " (sem "
              << a.sem_sum_rate[T] << ") at iteration " << T << "\n";
  for (const auto& [d, msg] : res.failures) std::cerr << "warning: drop " << d << " failed: " << msg << "\n";
  return 0;
}

int cmd_validate() {
  const auto results = fdcf::validation::desk_suite();
  int passed = 0;
  for (const auto& r : results) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    passed += r.pass ? 1 : 0;
  }
  std::cout << passed << "/" << results.size() << " checks passed\n";
  return passed == static_cast<int>(results.size()) ? 0 : 2;
}

int cmd_dump(const CommonFlags& f, bool with_slots) {
  auto spec = build_spec(f);
  namespace fs = std::filesystem;
  fs::create_directories(spec.output_dir);
  const auto& cfg = spec.cfg;
  for (int d = 0; d < spec.drops; ++d) {
    const auto drop = static_cast<std::uint64_t>(d);
    const auto ch = fdcf::make_drop(cfg, cfg.seed, drop);
    const fs::path p = fs::path(spec.output_dir) / ("channels_drop" + std::to_string(d) + ".txt");
    std::ofstream os(p);
    fdcf::write_channel_text(os, ch);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    if (with_slots) {
      auto prng = fdcf::drop_stream(cfg.seed, drop, fdcf::Purpose::pilots);
      const auto pb = fdcf::build_pilots(cfg, prng);
      fdcf::UpdateControls ctl = cfg.controls;
      ctl.max_iters = 1;
      fdcf::IbtOptions opt;
      opt.noise = {cfg.seed, drop, 0};
      opt.keep_signals = true;
      const auto r = fdcf::run_ibt(ch, cfg, ctl, fdcf::IbtMode::proposed, pb, opt);
      const fs::path q = fs::path(spec.output_dir) / ("slots_drop" + std::to_string(d) + ".txt");
      std::ofstream qs(q);
      fdcf::write_slot_text(qs, r.signals.front());
      if (!qs) throw std::runtime_error("cannot write " + q.string());
    }
    std::cout << p.string() << " checksum " << std::hex << fdcf::checksum(ch) << std::dec << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Full-duplex cell-free beamforming simulator"};
  app.require_subcommand(1);
  CommonFlags run_flags, dump_flags;
  bool with_slots = false;
  auto* run = app.add_subcommand("run", "run a Monte-Carlo experiment and write CSV/JSON outputs");
  add_common(run, run_flags);
  auto* validate = app.add_subcommand("validate", "run the desk-scale property suite");
  auto* dump = app.add_subcommand("dump-channels", "write channel realizations as text fixtures");
  add_common(dump, dump_flags);
  dump->add_flag("--slots", with_slots, "also dump the first-iteration pilot slot signals");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*validate) return cmd_validate();
    if (*dump) return cmd_dump(dump_flags, with_slots);
  } catch (const fdcf::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime abort: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
