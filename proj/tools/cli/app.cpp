// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#include <ostream>

#include "CLI11.hpp"
#include "colln/errors.hpp"
#include "commands.hpp"

namespace colln::cli {

namespace {

struct KeepFlags {
  std::optional<double> rate;
  std::optional<std::size_t> count;
  std::optional<std::size_t> prune;

  void add(CLI::App& cmd) {
    auto* r = cmd.add_option("--keep-rate", rate, "Fraction of patches kept at each scheduled layer (default 0.7)");
    auto* k = cmd.add_option("--keep-count", count, "Absolute number of patches kept at each scheduled layer");
    auto* p = cmd.add_option("--prune-count", prune, "Patches removed at each scheduled layer");
    r->excludes(k)->excludes(p);
    k->excludes(p);
  }

  KeepRule rule() const {
    if (count) return KeepCount{*count};
    if (prune) return PruneCount{*prune};
    return KeepRate{rate.value_or(0.7)};
  }
};

struct SelectionFlags {
  std::string metric = "colln";
  double norm = 2.0;
  double rescue = 0.8;
  std::uint64_t seed = 0;
  std::string aggregation = "mean";

  void add(CLI::App& cmd, bool with_metric) {
    if (with_metric) {
      cmd.add_option("--metric", metric, "Token selector: colln, cls, random or correcting")
          ->capture_default_str();
    }
    cmd.add_option("--n", norm, "Norm order for Col-Ln (>= 1; n > 1 for entropy equivalence)")
        ->capture_default_str();
    cmd.add_option("--rescue-ratio", rescue, "Share of the keep budget chosen by Col-Ln in correcting mode")
        ->capture_default_str();
    cmd.add_option("--seed", seed, "Seed for the random selector")->capture_default_str();
    cmd.add_option("--aggregation", aggregation, "Head aggregation: mean or max")
        ->check(CLI::IsMember({"mean", "max"}))
        ->capture_default_str();
  }

  PruneConfig config(const KeepFlags& keep) const {
    PruneConfig cfg;
    cfg.selector = parse_selector(metric);
    cfg.norm_order = norm;
    cfg.rescue_ratio = rescue;
    cfg.seed = seed;
    cfg.keep_rule = keep.rule();
    cfg.aggregation = aggregation == "max" ? HeadAggregation::Max : HeadAggregation::Mean;
    return cfg;
  }
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Token pruning engine for Vision Transformers with Col-Ln importance scores"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kEngineVersion);

  VerifyOptions vopts;
  std::string dump_dir = ".";
  auto* verify = app.add_subcommand("verify", "Check the entropy/norm equivalence and other metric properties");
  verify->add_option("--trials", vopts.trials, "Random attention matrices per norm order")->capture_default_str();
  verify->add_option("--min-n", vopts.min_n, "Smallest patch count")->capture_default_str();
  verify->add_option("--max-n", vopts.max_n, "Largest patch count")->capture_default_str();
  verify->add_option("--norms", vopts.norms, "Norm orders to check")->delimiter(',')->capture_default_str();
  verify->add_option("--seed", vopts.seed, "Generator seed")->capture_default_str();
  verify->add_option("--cases", vopts.correcting_cases, "Random cases for the correcting reductions")
      ->capture_default_str();
  verify->add_option("--dump-dir", dump_dir, "Where failing matrices are written")->capture_default_str();

  FlopsOptions fopts;
  KeepFlags fkeep;
  auto* flops = app.add_subcommand("flops", "Analytic MAC count of a pruned forward pass");
  flops->add_option("--model", fopts.model, "vit-s16, vit-b16, vit-l16 or tiny")
      ->check(CLI::IsMember(preset_names()))
      ->capture_default_str();
  flops->add_option("--schedule", fopts.schedule, "Pruning layers: comma list, 'early', 'all' or empty");
  fkeep.add(*flops);

  PruneOptions popts;
  KeepFlags pkeep;
  SelectionFlags psel;
  std::string trace = "decisions";
  std::string weights, image, out_dir = "colln_out";
  auto* prune = app.add_subcommand("prune", "Run pruned inference on one image and write trace artifacts");
  prune->add_option("--weights", weights, "VITW weight bundle")->required();
  prune->add_option("--image", image, "Binary PPM (P6) at the model resolution")->required();
  prune->add_option("--schedule", popts.schedule, "Pruning layers: comma list, 'early', 'all' or empty");
  psel.add(*prune, true);
  pkeep.add(*prune);
  prune->add_option("--trace", trace, "Trace level: none, decisions or full")
      ->check(CLI::IsMember({"none", "decisions", "full"}))
      ->capture_default_str();
  prune->add_flag("--heatmaps", popts.heatmaps, "Write per-layer score heatmaps (PGM)");
  prune->add_option("--upscale", popts.upscale, "Pixels per patch in PGM output")->capture_default_str();
  prune->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();

  std::string manifest, replay_out;
  auto* replay = app.add_subcommand("replay", "Re-run a prune manifest.json");
  replay->add_option("manifest", manifest, "Path to manifest.json")->required();
  replay->add_option("--out-dir", replay_out, "Override the recorded output directory");

  CompareOptions copts;
  KeepFlags ckeep;
  SelectionFlags csel;
  std::vector<std::string> metrics{"colln", "cls", "random"};
  std::vector<std::string> schedules;
  std::string cweights, image_dir, cout_path = "compare.csv", labels;
  auto* compare = app.add_subcommand("compare", "Compare selectors across schedules over a directory of images");
  compare->add_option("--weights", cweights, "VITW weight bundle")->required();
  compare->add_option("--image-dir", image_dir, "Directory of .ppm images")->required();
  compare->add_option("--metrics", metrics, "Selectors to compare; the first is the overlap reference")
      ->delimiter(',')
      ->capture_default_str();
  compare->add_option("--schedule", schedules, "Pruning schedule (repeatable; default 0,3,6 and 3,6,9)");
  compare->add_option("--labels", labels, "Optional CSV image,label for top-1 accuracy");
  compare->add_option("--threads", copts.threads, "Worker threads (0 = COLLN_THREADS or all cores)");
  compare->add_option("--out", cout_path, "Per-image report CSV")->capture_default_str();
  csel.add(*compare, false);
  ckeep.add(*compare);

  std::string fixture_dir = ".";
  auto* fixture = app.add_subcommand("tiny-fixture", "Write the seeded tiny model and a sample image");
  fixture->add_option("--out-dir", fixture_dir, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  try {
    if (*verify) {
      vopts.dump_dir = dump_dir;
      return cmd_verify(vopts, out);
    }
    if (*flops) {
      fopts.keep_rule = fkeep.rule();
      return cmd_flops(fopts, out);
    }
    if (*prune) {
      popts.weights = weights;
      popts.image = image;
      popts.out_dir = out_dir;
      popts.trace = parse_trace_level(trace);
      popts.config = psel.config(pkeep);
      return cmd_prune(popts, out);
    }
    if (*replay) {
      std::optional<std::filesystem::path> dir;
      if (!replay_out.empty()) dir = replay_out;
      return cmd_replay(manifest, dir, out);
    }
    if (*compare) {
      copts.weights = cweights;
      copts.image_dir = image_dir;
      copts.out = cout_path;
      if (!labels.empty()) copts.labels = labels;
      copts.metrics.clear();
      for (const auto& m : metrics) copts.metrics.push_back(parse_selector(m));
      if (!schedules.empty()) copts.schedules = schedules;
      copts.base = csel.config(ckeep);
      return cmd_compare(copts, out);
    }
    if (*fixture) return cmd_tiny_fixture(fixture_dir, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const WeightFormatError& e) {
    err << "weight-format error: " << e.what() << "\n";
    return kIoError;
  } catch (const IngestionError& e) {
    err << "image-format error: " << e.what() << "\n";
    return kIoError;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kPropertyFailure;
  }
  return kConfigError;
}

}  // namespace colln::cli
