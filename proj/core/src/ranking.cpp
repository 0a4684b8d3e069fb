#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "sdq/metrics.hpp"

namespace sdq {

Comparator scalar_comparator(std::span<const RankItem> items) {
  return [items](std::size_t a, std::size_t b) {
    if (items[a].score != items[b].score) return items[a].score > items[b].score;
    return items[a].id < items[b].id;
  };
}

Ranking round_robin_rank(std::span<const RankItem> items, const Comparator& beats) {
  const std::size_t n = items.size();
  Ranking r;
  r.wins.assign(n, 0);
  r.byes.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::size_t w = beats(i, j) ? i : j;
      ++r.wins[w];
      r.matches.push_back({0, i, j, w});
    }
  }
  r.order.resize(n);
  std::iota(r.order.begin(), r.order.end(), 0);
  std::sort(r.order.begin(), r.order.end(), [&](std::size_t a, std::size_t b) {
    if (r.wins[a] != r.wins[b]) return r.wins[a] > r.wins[b];
    if (items[a].score != items[b].score) return items[a].score > items[b].score;
    return items[a].id < items[b].id;
  });
  return r;
}

Ranking swiss_rank(std::span<const RankItem> items, const Comparator& beats, std::size_t rounds) {
  if (rounds == 0) throw ValidationError("swiss_rank: rounds must be at least 1");
  const std::size_t n = items.size();
  Ranking r;
  r.wins.assign(n, 0);
  r.byes.assign(n, 0);
  std::vector<std::vector<std::size_t>> opponents(n);
  std::vector<std::vector<bool>> played(n, std::vector<bool>(n, false));

  auto standing_order = [&]() {
    std::vector<std::size_t> buchholz(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t o : opponents[i]) buchholz[i] += r.wins[o];
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (r.wins[a] != r.wins[b]) return r.wins[a] > r.wins[b];
      if (buchholz[a] != buchholz[b]) return buchholz[a] > buchholz[b];
      return items[a].id < items[b].id;
    });
    return order;
  };

  for (std::size_t round = 1; round <= rounds; ++round) {
    std::vector<std::size_t> order;
    if (round == 1) {
      order.resize(n);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return items[a].id < items[b].id; });
    } else {
      order = standing_order();
    }
    if (order.size() % 2 == 1) {
      auto it = std::find_if(order.rbegin(), order.rend(), [&](std::size_t i) { return r.byes[i] == 0; });
      const std::size_t bye = it == order.rend() ? order.back() : *it;
      ++r.byes[bye];
      ++r.wins[bye];
      order.erase(std::find(order.begin(), order.end(), bye));
    }
    std::vector<bool> taken(order.size(), false);
    for (std::size_t p = 0; p < order.size(); ++p) {
      if (taken[p]) continue;
      taken[p] = true;
      const std::size_t a = order[p];
      std::size_t pick = order.size();
      for (std::size_t q = p + 1; q < order.size(); ++q) {
        if (taken[q]) continue;
        if (pick == order.size()) pick = q;  // fallback: rematch
        if (!played[a][order[q]]) {
          pick = q;
          break;
        }
      }
      taken[pick] = true;
      const std::size_t b = order[pick];
      const std::size_t w = beats(a, b) ? a : b;
      ++r.wins[w];
      played[a][b] = played[b][a] = true;
      opponents[a].push_back(b);
      opponents[b].push_back(a);
      r.matches.push_back({round, a, b, w});
    }
  }
  r.order = standing_order();
  return r;
}

nlohmann::json ranking_to_json(std::span<const RankItem> items, const Ranking& ranking) {
  nlohmann::json order = nlohmann::json::array();
  for (std::size_t k = 0; k < ranking.order.size(); ++k) {
    const std::size_t i = ranking.order[k];
    order.push_back({{"rank", k + 1}, {"id", items[i].id}, {"score", items[i].score}, {"wins", ranking.wins[i]}});
  }
  nlohmann::json matches = nlohmann::json::array();
  for (const auto& m : ranking.matches) {
    matches.push_back({{"round", m.round}, {"a", items[m.a].id}, {"b", items[m.b].id}, {"winner", items[m.winner].id}});
  }
  return {{"ranking", order}, {"comparisons", ranking.comparisons()}, {"matches", matches}};
}

std::string ranking_to_text(std::span<const RankItem> items, const Ranking& ranking) {
  std::vector<std::vector<std::string>> rows = {{"rank", "id", "score", "wins"}};
  for (std::size_t k = 0; k < ranking.order.size(); ++k) {
    const std::size_t i = ranking.order[k];
    rows.push_back({std::to_string(k + 1), items[i].id, fmt::format("{:.6f}", items[i].score),
                    std::to_string(ranking.wins[i])});
  }
  std::string out = format_table(rows);
  out += fmt::format("\ncomparisons: {}\n", ranking.comparisons());
  for (const auto& m : ranking.matches) {
    out += fmt::format("round {}: {} vs {} -> {}\n", m.round, items[m.a].id, items[m.b].id, items[m.winner].id);
  }
  return out;
}

}  // namespace sdq
