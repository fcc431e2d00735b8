// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "colln/errors.hpp"
#include "colln/metrics.hpp"
#include "colln/pruning.hpp"
#include "commands.hpp"

namespace colln::cli {

namespace {

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double unit(std::uint64_t& state) { return static_cast<double>(splitmix(state) >> 11) * 0x1.0p-53; }

std::size_t uniform_int(std::uint64_t& state, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(splitmix(state) % (hi - lo + 1));
}

Matrix random_logits(std::size_t rows, std::size_t cols, double scale, std::uint64_t& state) {
  Matrix m(rows, cols);
  for (float& v : m.data) v = static_cast<float>((unit(state) * 2.0 - 1.0) * scale);
  return m;
}

bool column_norms_tie_free(const AttentionMatrix& a, double n) {
  std::vector<double> sums;
  for (std::size_t j = 1; j < a.size(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::pow(static_cast<double>(a(i, j)), n);
    sums.push_back(s);
  }
  std::sort(sums.begin(), sums.end());
  for (std::size_t k = 1; k < sums.size(); ++k) {
    if (sums[k] - sums[k - 1] <= 1e-9 * sums[k]) return false;
  }
  return true;
}

// Bottom-k by ascending entropy via a full sort; ties to the lower index.
std::vector<std::size_t> bottom_k_entropy(const std::vector<double>& entropy, std::size_t k) {
  std::vector<std::size_t> idx(entropy.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return entropy[a] < entropy[b]; });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::size_t> top_k_by_sort(const std::vector<double>& v, std::size_t k) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::string dump_failure(const std::filesystem::path& dir, const std::string& slug,
                         const Matrix& m, const std::string& context) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto path = dir / ("verify_failure_" + slug + ".txt");
  std::ofstream f(path);
  if (!f) return "(could not write " + path.string() + ")";
  f << "# " << context << "\n" << m.rows << ' ' << m.cols << '\n';
  char buf[32];
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(m(i, j)));
      f << (j ? " " : "") << buf;
    }
    f << '\n';
  }
  return path.string();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string norm_label(double n) {
  std::ostringstream os;
  os << n;
  return os.str();
}

PropertyResult check_softmax(std::uint64_t seed) {
  PropertyResult r{"softmax_row_stochastic", PropertyResult::Status::Pass, ""};
  std::uint64_t st = seed ^ 0x50F7u;
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = uniform_int(st, 2, 64);
    const double scale = t % 2 ? 1e4 : 8.0;
    Matrix p = softmax_rows(random_logits(n, n, scale, st));
    if (!p.all_finite()) {
      r.status = PropertyResult::Status::Fail;
      r.detail = "non-finite softmax output";
      return r;
    }
    std::vector<Matrix> heads{p, softmax_rows(random_logits(n, n, 3.0, st))};
    AttentionMatrix avg = head_average(heads);
    for (const Matrix* m : std::initializer_list<const Matrix*>{&p, &avg.matrix()}) {
      for (std::size_t i = 0; i < m->rows; ++i) {
        double s = 0.0;
        for (float v : m->row(i)) s += v;
        worst = std::max(worst, std::abs(s - 1.0));
      }
    }
  }
  if (worst > 1e-6) r.status = PropertyResult::Status::Fail;
  r.detail = "max |row sum - 1| = " + sci(worst);
  return r;
}

}  // namespace

AttentionMatrix random_tie_free_attention(std::size_t patches, std::span<const double> norms,
                                          std::uint64_t& state) {
  const std::size_t size = patches + 1;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double scale = 0.5 + 5.5 * unit(state);
    AttentionMatrix a(softmax_rows(random_logits(size, size, scale, state)));
    bool ok = true;
    for (double n : norms) ok = ok && (n <= 1.0 || column_norms_tie_free(a, n));
    if (ok) return a;
  }
  throw InternalError("could not draw a tie-free attention matrix");
}

bool VerifyReport::ok() const {
  return std::none_of(results.begin(), results.end(),
                      [](const PropertyResult& r) { return r.status == PropertyResult::Status::Fail; });
}

VerifyReport run_verify(const VerifyOptions& opts) {
  if (opts.trials == 0) throw ConfigError("--trials must be positive");
  if (opts.min_n < 1 || opts.max_n < opts.min_n) throw ConfigError("need 1 <= min-n <= max-n");
  if (opts.norms.empty()) throw ConfigError("--norms must list at least one order");

  VerifyReport report;
  report.results.push_back(check_softmax(opts.seed));

  std::vector<double> valid;
  for (double n : opts.norms) {
    if (n > 1.0) {
      valid.push_back(n);
    } else {
      for (const char* name : {"entropy_norm_equivalence", "monotone_link"}) {
        report.results.push_back({std::string(name) + " n=" + norm_label(n),
                                  PropertyResult::Status::Skip,
                                  "requires n > 1: n/(1-n) must be strictly negative for the "
                                  "entropy ranking to reverse the norm ranking"});
      }
    }
  }

  for (double n : valid) {
    PropertyResult eq{"entropy_norm_equivalence n=" + norm_label(n), PropertyResult::Status::Pass, ""};
    PropertyResult link{"monotone_link n=" + norm_label(n), PropertyResult::Status::Pass, ""};
    std::uint64_t st = opts.seed;
    std::size_t comparisons = 0;
    double worst_link = 0.0;
    for (std::size_t t = 0; t < opts.trials; ++t) {
      const std::size_t patches = uniform_int(st, opts.min_n, opts.max_n);
      AttentionMatrix a = random_tie_free_attention(patches, valid, st);
      const ImportanceScores norms = colln_scores(a, n);
      const ImportanceScores entropy = renyi_entropy_scores(a, n);

      for (std::size_t j = 0; j < patches; ++j) {
        const double diff =
            std::abs(entropy.values[j] - n / (1.0 - n) * std::log(norms.values[j]));
        worst_link = std::max(worst_link, diff);
        if (diff > 1e-6 && link.status == PropertyResult::Status::Pass) {
          link.status = PropertyResult::Status::Fail;
          link.detail = "trial " + std::to_string(t) + " column " + std::to_string(j + 1) +
                        " off by " + sci(diff) + "; matrix: " +
                        dump_failure(opts.dump_dir, "monotone_link", a.matrix(),
                                     "n=" + norm_label(n));
        }
      }
      for (std::size_t k = 1; k <= patches && eq.status == PropertyResult::Status::Pass; ++k) {
        ++comparisons;
        if (opts.topk(norms.values, k) != bottom_k_entropy(entropy.values, k)) {
          eq.status = PropertyResult::Status::Fail;
          eq.detail = "trial " + std::to_string(t) + " N=" + std::to_string(patches) +
                      " K=" + std::to_string(k) + "; matrix: " +
                      dump_failure(opts.dump_dir, "equivalence", a.matrix(),
                                   "n=" + norm_label(n) + " K=" + std::to_string(k));
        }
      }
    }
    if (eq.status == PropertyResult::Status::Pass) {
      eq.detail = std::to_string(opts.trials) + " matrices, " + std::to_string(comparisons) +
                  " top-K set comparisons";
    }
    if (link.status == PropertyResult::Status::Pass) {
      link.detail = "max deviation " + sci(worst_link);
    }
    report.results.push_back(std::move(eq));
    report.results.push_back(std::move(link));
  }

  // Correcting reductions: c = 1 is Col-Ln pruning, c = 0 is pure [CLS] top-r.
  {
    PropertyResult r{"correcting_degeneracies", PropertyResult::Status::Pass, ""};
    const CorrectingSplit split = correcting_split(100, 0.8);
    if (split.from_cls != 20 || split.from_colln != 80) {
      r.status = PropertyResult::Status::Fail;
      r.detail = "split(100, 0.8) = (" + std::to_string(split.from_cls) + ", " +
                 std::to_string(split.from_colln) + ")";
    }
    const double n = valid.empty() ? 2.0 : valid.front();
    std::uint64_t st = opts.seed ^ 0xC0FFEEu;
    for (std::size_t t = 0; t < opts.correcting_cases && r.status == PropertyResult::Status::Pass; ++t) {
      const std::size_t patches = uniform_int(st, opts.min_n, opts.max_n);
      const std::size_t keep = uniform_int(st, 1, patches);
      const double norms[] = {n};
      AttentionMatrix a = random_tie_free_attention(patches, norms, st);
      TokenSequence x;
      x.embeddings = Matrix(patches + 1, 1);
      for (std::size_t k = 0; k < patches; ++k) x.patch_ids.push_back(static_cast<std::uint32_t>(k));

      const auto full = prune_correcting(x, a, keep, n, 1.0).decision.kept_positions;
      const auto alg1 = prune_colln(x, a, keep, n).decision.kept_positions;
      auto cls_only = top_k_by_sort(cls_scores(a).values, keep);
      for (auto& p : cls_only) ++p;
      const auto zero = prune_correcting(x, a, keep, n, 0.0).decision.kept_positions;
      if (full != alg1 || zero != cls_only) {
        r.status = PropertyResult::Status::Fail;
        r.detail = std::string(full != alg1 ? "c=1 differs from Col-Ln pruning"
                                            : "c=0 differs from [CLS] top-r") +
                   " at case " + std::to_string(t) + "; matrix: " +
                   dump_failure(opts.dump_dir, "correcting", a.matrix(),
                                "r=" + std::to_string(keep));
      }
    }
    if (r.status == PropertyResult::Status::Pass) {
      r.detail = "split(100,0.8)=(20,80); " + std::to_string(opts.correcting_cases) + " cases";
    }
    report.results.push_back(std::move(r));
  }

  // n = 1 cannot discriminate on a column-stochastic matrix.
  {
    PropertyResult r{"colln_n1_column_stochastic", PropertyResult::Status::Pass, ""};
    std::uint64_t st = opts.seed ^ 0x11u;
    const std::size_t size = 9;
    AttentionMatrix a(transpose(softmax_rows(random_logits(size, size, 2.0, st))));
    for (double s : colln_scores(a, 1.0).values) {
      if (std::abs(s - 1.0) > 1e-6) {
        r.status = PropertyResult::Status::Fail;
        r.detail = "l1 column norm " + std::to_string(s);
      }
    }
    if (r.status == PropertyResult::Status::Pass) r.detail = "all l1 column norms equal 1";
    report.results.push_back(std::move(r));
  }
  return report;
}

int cmd_verify(const VerifyOptions& opts, std::ostream& out) {
  const VerifyReport report = run_verify(opts);
  for (const auto& r : report.results) {
    const char* tag = r.status == PropertyResult::Status::Pass   ? "PASS"
                      : r.status == PropertyResult::Status::Fail ? "FAIL"
                                                                 : "SKIP";
    out << "[" << tag << "] " << r.name << ": " << r.detail << '\n';
  }
  out << (report.ok() ? "all properties hold\n" : "property violation detected\n");
  return report.ok() ? kOk : kPropertyFailure;
}

}  // namespace colln::cli
