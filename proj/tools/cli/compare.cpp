// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "colln/errors.hpp"
#include "colln/flops.hpp"
#include "colln/weights_io.hpp"
#include "commands.hpp"
#include "json.hpp"

namespace colln::cli {

namespace fs = std::filesystem;

namespace {

struct RunRow {
  std::string schedule;
  Selector metric = Selector::ColLn;
  std::size_t final_tokens = 0;
  std::size_t top1 = 0;
  bool agrees_unpruned = false;
  double jaccard = 1.0;
  std::vector<std::uint32_t> final_kept;
};

struct ImageResult {
  std::string name;
  std::size_t unpruned_top1 = 0;
  std::vector<RunRow> rows;
};

double jaccard(std::vector<std::uint32_t> a, std::vector<std::uint32_t> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::uint32_t> inter;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
  const std::size_t uni = a.size() + b.size() - inter.size();
  return uni == 0 ? 1.0 : static_cast<double>(inter.size()) / static_cast<double>(uni);
}

std::size_t resolve_threads(std::size_t requested, std::size_t jobs) {
  std::size_t n = requested;
  if (n == 0) {
    if (const char* env = std::getenv("COLLN_THREADS")) n = std::strtoul(env, nullptr, 10);
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, jobs));
}

std::map<std::string, std::size_t> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open labels file '" + path.string() + "'");
  std::map<std::string, std::size_t> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.rfind("image,", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("labels line without comma: '" + line + "'");
    labels[line.substr(0, comma)] = std::stoul(line.substr(comma + 1));
  }
  return labels;
}

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[32];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

int cmd_compare(const CompareOptions& opts, std::ostream& out) {
  if (opts.metrics.empty()) throw ConfigError("--metrics must list at least one metric");
  if (opts.schedules.empty()) throw ConfigError("at least one --schedule is required");
  const ModelBundle bundle = load_bundle(opts.weights);
  const std::size_t depth = bundle.spec.depth;

  std::vector<std::vector<std::size_t>> schedules;
  for (const auto& s : opts.schedules) {
    PruneConfig probe = opts.base;
    probe.schedule = parse_schedule(s, depth);
    probe.validate(depth);
    schedules.push_back(probe.schedule);
  }

  std::vector<fs::path> images;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(opts.image_dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") images.push_back(entry.path());
  }
  if (ec) throw IoError("cannot list '" + opts.image_dir.string() + "': " + ec.message());
  if (images.empty()) throw IoError("no .ppm images in '" + opts.image_dir.string() + "'");
  std::sort(images.begin(), images.end());

  std::map<std::string, std::size_t> labels;
  if (opts.labels) labels = read_labels(*opts.labels);

  std::vector<ImageResult> results(images.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < images.size(); i = next++) {
      try {
        const Image img = read_ppm(images[i]);
        ImageResult& res = results[i];
        res.name = images[i].filename().string();
        PruneConfig plain = opts.base;
        plain.schedule.clear();
        res.unpruned_top1 = forward(img, bundle, plain, TraceLevel::None).argmax();
        for (std::size_t s = 0; s < schedules.size(); ++s) {
          std::vector<std::uint32_t> reference;
          for (std::size_t m = 0; m < opts.metrics.size(); ++m) {
            PruneConfig cfg = opts.base;
            cfg.selector = opts.metrics[m];
            cfg.schedule = schedules[s];
            const ForwardTrace t = forward(img, bundle, cfg, TraceLevel::Decisions);
            RunRow row;
            row.schedule = format_schedule(schedules[s]);
            row.metric = cfg.selector;
            row.final_tokens = t.layers.back().tokens_after;
            row.top1 = t.argmax();
            row.agrees_unpruned = row.top1 == res.unpruned_top1;
            for (const auto& l : t.layers) {
              if (l.decision) row.final_kept = l.decision->kept_patch_ids;
            }
            if (m == 0) reference = row.final_kept;
            row.jaccard = jaccard(row.final_kept, reference);
            res.rows.push_back(std::move(row));
          }
        }
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t threads = resolve_threads(opts.threads, images.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  const std::string ref_name(to_string(opts.metrics.front()));
  const std::string rule = describe(opts.base.keep_rule);
  std::ostringstream csv;
  csv << "image,schedule,metric,keep_rule,final_tokens,gmacs,top1,unpruned_top1,agrees_unpruned,"
         "jaccard_vs_"
      << ref_name << ",label,correct\n";

  struct Agg {
    std::size_t n = 0, agree = 0, labelled = 0, correct = 0;
    double jac = 0.0;
  };
  std::map<std::pair<std::size_t, std::size_t>, Agg> agg;
  std::vector<double> gmacs(schedules.size());
  for (std::size_t s = 0; s < schedules.size(); ++s) {
    PruneConfig cfg = opts.base;
    cfg.schedule = schedules[s];
    gmacs[s] = schedule_macs(bundle.spec, cfg).gmacs();
  }
  for (const auto& res : results) {
    const auto label = labels.find(res.name);
    for (std::size_t k = 0; k < res.rows.size(); ++k) {
      const RunRow& r = res.rows[k];
      const std::size_t s = k / opts.metrics.size();
      const std::size_t m = k % opts.metrics.size();
      Agg& a = agg[{s, m}];
      ++a.n;
      a.agree += r.agrees_unpruned;
      a.jac += r.jaccard;
      std::string label_cell, correct_cell;
      if (label != labels.end()) {
        ++a.labelled;
        const bool ok = r.top1 == label->second;
        a.correct += ok;
        label_cell = std::to_string(label->second);
        correct_cell = ok ? "1" : "0";
      }
      csv << res.name << ",\"" << r.schedule << "\"," << to_string(r.metric) << "," << rule << ","
          << r.final_tokens << "," << fmt(gmacs[s], "%.4f") << "," << r.top1 << ","
          << res.unpruned_top1 << "," << (r.agrees_unpruned ? 1 : 0) << "," << fmt(r.jaccard)
          << "," << label_cell << "," << correct_cell << "\n";
    }
  }
  const std::string csv_text = csv.str();
  write_file_bytes(opts.out, std::span(reinterpret_cast<const std::uint8_t*>(csv_text.data()),
                                       csv_text.size()));

  std::ostringstream summary;
  summary << "schedule,metric,keep_rule,gmacs,images,agreement_rate,mean_jaccard_vs_" << ref_name
          << ",accuracy\n";
  for (const auto& [key, a] : agg) {
    summary << "\"" << format_schedule(schedules[key.first]) << "\","
            << to_string(opts.metrics[key.second]) << "," << rule << ","
            << fmt(gmacs[key.first], "%.4f") << "," << a.n << ","
            << fmt(static_cast<double>(a.agree) / static_cast<double>(a.n)) << ","
            << fmt(a.jac / static_cast<double>(a.n)) << ","
            << (a.labelled ? fmt(static_cast<double>(a.correct) / static_cast<double>(a.labelled)) : "")
            << "\n";
  }
  fs::path summary_path = opts.out;
  summary_path.replace_filename(opts.out.stem().string() + "_summary.csv");
  const std::string summary_text = summary.str();
  write_file_bytes(summary_path, std::span(reinterpret_cast<const std::uint8_t*>(summary_text.data()),
                                           summary_text.size()));

  const nlohmann::json manifest = {
      {"engine_version", kEngineVersion},
      {"subcommand", "compare"},
      {"config",
       {{"metrics", [&] {
           std::vector<std::string> v;
           for (Selector m : opts.metrics) v.emplace_back(to_string(m));
           return v;
         }()},
        {"schedules", opts.schedules},
        {"keep_rule", rule},
        {"norm_order", opts.base.norm_order},
        {"rescue_ratio", opts.base.rescue_ratio},
        {"seed", opts.base.seed}}},
      {"inputs", {{"weights", {{"path", opts.weights.string()}, {"crc32", file_crc32(opts.weights)}}},
                  {"images", [&] {
                     std::vector<std::string> v;
                     for (const auto& p : images) v.push_back(p.filename().string() + ":" + file_crc32(p));
                     return v;
                   }()}}},
      {"outputs", {opts.out.string(), summary_path.string()}},
  };
  fs::path manifest_path = opts.out;
  manifest_path.replace_filename(opts.out.stem().string() + "_manifest.json");
  const std::string mtext = manifest.dump(2) + "\n";
  write_file_bytes(manifest_path,
                   std::span(reinterpret_cast<const std::uint8_t*>(mtext.data()), mtext.size()));

  // Summary grid: one row per schedule, one column per metric.
  out << "keep rule " << rule << ", " << images.size() << " image(s); cells: "
      << (labels.empty() ? "top-1 agreement with the unpruned model" : "top-1 accuracy") << "\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-14s", "layers");
  out << line;
  for (Selector m : opts.metrics) {
    std::snprintf(line, sizeof line, " %10s", std::string(to_string(m)).c_str());
    out << line;
  }
  out << "     GMACs\n";
  for (std::size_t s = 0; s < schedules.size(); ++s) {
    std::snprintf(line, sizeof line, "%-14s", format_schedule(schedules[s]).c_str());
    out << line;
    for (std::size_t m = 0; m < opts.metrics.size(); ++m) {
      const Agg& a = agg[{s, m}];
      const double v = labels.empty() ? static_cast<double>(a.agree) / static_cast<double>(a.n)
                                      : (a.labelled ? static_cast<double>(a.correct) / static_cast<double>(a.labelled) : 0.0);
      std::snprintf(line, sizeof line, " %10.3f", v);
      out << line;
    }
    std::snprintf(line, sizeof line, " %9.2f\n", gmacs[s]);
    out << line;
  }
  out << "wrote " << opts.out.string() << " and " << summary_path.string() << "\n";
  return kOk;
}

}  // namespace colln::cli
