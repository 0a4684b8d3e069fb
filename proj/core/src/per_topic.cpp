#include <algorithm>
#include <unordered_map>

#include <fmt/format.h>

#include "sdq/topics.hpp"

namespace sdq {

nlohmann::json TopicReport::to_json() const {
  nlohmann::json j = {{"topic", topic}, {"n_samples", n_samples}};
  j["metrics"] = metrics ? metrics->to_json() : nlohmann::json(nullptr);
  j["skipped"] = skipped ? nlohmann::json(*skipped) : nlohmann::json(nullptr);
  return j;
}

std::vector<TopicReport> per_topic_training(const std::vector<EmbeddedExample>& examples,
                                            const std::map<std::string, std::size_t>& labels,
                                            const PerTopicConfig& config) {
  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto it = labels.find(examples[i].paper_id);
    if (it != labels.end()) members[it->second].push_back(i);
  }
  std::vector<std::pair<std::size_t, std::size_t>> by_size;  // (topic, count)
  for (const auto& [topic, idx] : members) by_size.emplace_back(topic, idx.size());
  std::stable_sort(by_size.begin(), by_size.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (by_size.size() > config.top_topics) by_size.resize(config.top_topics);

  std::vector<TopicReport> reports;
  for (const auto& [topic, count] : by_size) {
    TopicReport r;
    r.topic = topic;
    r.n_samples = count;
    if (count < config.min_size) {
      r.skipped = fmt::format("{} samples, below the minimum of {}", count, config.min_size);
      reports.push_back(std::move(r));
      continue;
    }
    std::vector<std::pair<std::string, YearMonth>> items;
    std::unordered_map<std::string, std::size_t> by_id;
    for (std::size_t i : members[topic]) {
      items.emplace_back(examples[i].paper_id, examples[i].publication_date);
      by_id[examples[i].paper_id] = i;
    }
    const Split split = temporal_split(std::move(items), config.split);
    auto gather = [&](const std::vector<std::string>& ids) {
      std::vector<EmbeddedExample> out;
      for (const auto& id : ids) out.push_back(examples[by_id.at(id)]);
      return out;
    };
    const auto train_set = gather(split.train);
    const auto val_set = gather(split.validation);
    const auto test_set = gather(split.test);
    try {
      const ScoreModel initial = ScoreModel::create(config.architecture, config.train.seed);
      const TrainResult result = train(initial, train_set, val_set, config.train);
      r.metrics = evaluate(result.best, test_set, config.train.seed);
    } catch (const Error& e) {
      r.skipped = fmt::format("training failed: {}", e.what());
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

}  // namespace sdq
