#include "sdq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace sdq {
namespace {

void check_lengths(std::span<const double> xs, std::span<const double> ys, const char* what) {
  if (xs.size() != ys.size()) {
    throw ValidationError(fmt::format("{}: length mismatch ({} vs {})", what, xs.size(), ys.size()));
  }
  if (xs.size() < 2) throw ValidationError(fmt::format("{}: need at least 2 values", what));
}

template <typename T>
nlohmann::json opt(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json MetricReport::to_json() const {
  return {{"pairwise_accuracy", opt(pairwise_accuracy)},
          {"spearman", opt(spearman)},
          {"pearson", opt(pearson)},
          {"l1", opt(l1)},
          {"n_items", n_items},
          {"n_pairs", n_pairs},
          {"seed", seed}};
}

PairwiseAccuracy pairwise_accuracy(std::span<const double> scores, std::span<const double> targets,
                                   std::uint64_t seed, std::size_t max_pairs) {
  check_lengths(scores, targets, "pairwise_accuracy");
  const std::size_t n = targets.size();
  double hits = 0.0;
  std::size_t count = 0;
  auto visit = [&](std::size_t i, std::size_t j) {
    if (targets[i] == targets[j]) return;
    ++count;
    if (scores[i] == scores[j]) {
      hits += 0.5;
    } else if ((scores[i] > scores[j]) == (targets[i] > targets[j])) {
      hits += 1.0;
    }
  };
  const std::size_t total = n * (n - 1) / 2;
  if (total <= max_pairs) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) visit(i, j);
    }
  } else {
    for (const auto& p : make_pairs(targets, seed, max_pairs)) visit(p.first, p.second);
  }
  if (count == 0) throw ValidationError("pairwise_accuracy: no non-tied target pairs");
  return {hits / static_cast<double>(count), count};
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t start = 0; start < idx.size();) {
    std::size_t end = start + 1;
    while (end < idx.size() && xs[idx[end]] == xs[idx[start]]) ++end;
    const double r = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t k = start; k < end; ++k) ranks[idx[k]] = r;
    start = end;
  }
  return ranks;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  check_lengths(xs, ys, "pearson");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ValidationError("pearson: zero variance");
  return std::clamp(sxy / (std::sqrt(sxx) * std::sqrt(syy)), -1.0, 1.0);
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  check_lengths(xs, ys, "spearman");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

double mean_absolute_error(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size() || predictions.empty()) {
    throw ValidationError("mean_absolute_error: need equal, nonzero lengths");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) s += std::abs(predictions[i] - targets[i]);
  return s / static_cast<double>(predictions.size());
}

MetricReport evaluate_scores(std::span<const double> scores, std::span<const double> targets, std::uint64_t seed,
                             std::size_t max_pairs) {
  MetricReport r;
  r.seed = seed;
  r.n_items = scores.size();
  const auto acc = pairwise_accuracy(scores, targets, seed, max_pairs);
  r.pairwise_accuracy = acc.accuracy;
  r.n_pairs = acc.n_pairs;
  r.l1 = mean_absolute_error(scores, targets);
  try {
    r.spearman = spearman(scores, targets);
    r.pearson = pearson(scores, targets);
  } catch (const ValidationError&) {
    r.spearman.reset();
    r.pearson.reset();
  }
  return r;
}

MetricReport evaluate(const ScoreModel& model, std::span<const EmbeddedExample> test_set, std::uint64_t seed,
                      std::size_t max_pairs) {
  std::vector<double> targets;
  for (const auto& ex : test_set) {
    if (!ex.target) throw ValidationError(fmt::format("test example '{}' has no target", ex.paper_id));
    targets.push_back(*ex.target);
  }
  const auto scores = model.predict_batch(test_set);
  return evaluate_scores(scores, targets, seed, max_pairs);
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd m;
  m.n = values.size();
  if (values.empty()) return m;
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return m;
}

std::string format_mean_std(const MeanStd& m, int precision) {
  return fmt::format("{:.{}f} ({:.{}f})", m.mean, precision, m.stddev, precision);
}

std::string format_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (row.size() > width.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line;
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c > 0) line += "  ";
      line += rows[r][c];
      if (c + 1 < rows[r].size()) line.append(width[c] - rows[r][c].size(), ' ');
    }
    out += line + '\n';
    if (r == 0 && rows.size() > 1) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c > 0 ? 2 : 0);
      out += std::string(total, '-') + '\n';
    }
  }
  return out;
}

}  // namespace sdq
