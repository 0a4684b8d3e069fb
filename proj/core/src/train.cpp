#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include <fmt/format.h>

#include "sdq/binary_io.hpp"
#include "sdq/scoremodel.hpp"

namespace sdq {
namespace {

std::vector<double> targets_of(std::span<const EmbeddedExample> set, const char* what) {
  std::vector<double> t;
  t.reserve(set.size());
  for (const auto& ex : set) {
    if (!ex.target) throw ValidationError(fmt::format("{} example '{}' has no target", what, ex.paper_id));
    t.push_back(*ex.target);
  }
  return t;
}

std::string config_hash(const TrainConfig& c) { return fmt::format("{:016x}", fnv1a64(c.to_json().dump())); }

}  // namespace

TrainConfig TrainConfig::defaults_for(ModelKind kind) {
  TrainConfig c;
  if (kind == ModelKind::Context) {
    c.epochs = 50;
    c.batch_size = 128;
  }
  return c;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError(fmt::format("learning rate must be positive, got {}", learning_rate));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError(fmt::format("dropout {} outside [0, 1)", dropout));
  if (batch_size == 0) throw ValidationError("batch size must be positive");
  if (pairs_per_epoch && *pairs_per_epoch == 0) throw ValidationError("pairs_per_epoch must be positive");
  for (double lr : grid_learning_rates) {
    if (!(lr > 0.0)) throw ValidationError(fmt::format("grid learning rate must be positive, got {}", lr));
  }
  for (double d : grid_dropouts) {
    if (!(d >= 0.0 && d < 1.0)) throw ValidationError(fmt::format("grid dropout {} outside [0, 1)", d));
  }
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j = {{"learning_rate", learning_rate},
                      {"dropout", dropout},
                      {"epochs", epochs},
                      {"batch_size", batch_size},
                      {"seed", seed},
                      {"objective", to_string(objective)},
                      {"grid_learning_rates", grid_learning_rates},
                      {"grid_dropouts", grid_dropouts}};
  if (pairs_per_epoch) j["pairs_per_epoch"] = *pairs_per_epoch;
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, TrainConfig c) {
  if (!j.is_object()) throw ParseError("training config must be an object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "learning_rate") c.learning_rate = v.get<double>();
      else if (key == "dropout") c.dropout = v.get<double>();
      else if (key == "epochs") c.epochs = v.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "objective") c.objective = objective_from(v.get<std::string>());
      else if (key == "pairs_per_epoch") c.pairs_per_epoch = v.get<std::size_t>();
      else if (key == "grid_learning_rates") c.grid_learning_rates = v.get<std::vector<double>>();
      else if (key == "grid_dropouts") c.grid_dropouts = v.get<std::vector<double>>();
      else throw ParseError(fmt::format("unknown training config key '{}'", key));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("training config: {}", e.what()));
  }
  c.validate();
  return c;
}

double validation_loss(const ScoreModel& model, std::span<const EmbeddedExample> val_set, Objective objective,
                       std::uint64_t seed) {
  const auto targets = targets_of(val_set, "validation");
  if (targets.empty()) throw ValidationError("empty validation set");
  const auto scores = model.predict_batch(val_set);
  double total = 0.0;
  if (objective == Objective::Regression) {
    for (std::size_t i = 0; i < scores.size(); ++i) total += regression_loss(scores[i], targets[i]);
    return total / static_cast<double>(scores.size());
  }
  // Fixed pairs across epochs so the curve is comparable.
  const auto pairs = make_pairs(targets, mix64(seed ^ 0xa11da7e), targets.size());
  for (const auto& p : pairs) total += pairwise_loss(scores[p.first], scores[p.second], p.label);
  return total / static_cast<double>(pairs.size());
}

TrainResult train(const ScoreModel& initial, std::span<const EmbeddedExample> train_set,
                  std::span<const EmbeddedExample> val_set, const TrainConfig& config) {
  config.validate();
  initial.validate();
  const auto train_targets = targets_of(train_set, "training");
  targets_of(val_set, "validation");
  {
    std::unordered_map<std::string_view, int> ids;
    for (const auto& ex : train_set) ids[ex.paper_id] = 1;
    for (const auto& ex : val_set) {
      if (ids.count(ex.paper_id)) {
        throw ValidationError(fmt::format("paper '{}' is in both training and validation sets", ex.paper_id));
      }
    }
  }

  TrainResult result;
  result.best = initial;
  result.best.dropout = config.dropout;
  result.best.config_hash = config_hash(config);
  if (config.epochs == 0) return result;
  if (train_set.empty()) throw ValidationError("empty training set");

  ScoreModel model = result.best;
  model.params.rng = Rng(mix64(config.seed ^ 0xd20f));
  model.params.zero_grad();
  const AdamConfig adam{config.learning_rate};
  const std::size_t n_pairs = config.pairs_per_epoch.value_or(train_set.size());
  Rng order_rng(mix64(config.seed ^ 0x0dde5));
  double best_loss = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t loss_weight = 0;
    std::size_t batch_index = 0;
    auto run_batch = [&](auto&& build) {
      Tape<float> tape;
      Var loss;
      double value = 0.0;
      try {
        loss = build(tape);
        value = tape.scalar(loss);
        if (!std::isfinite(value)) throw NumericError("loss is not finite");
        tape.backward(loss);
        adam_step(model.params, adam);
      } catch (const NumericError& e) {
        throw TrainingError(fmt::format("training diverged at epoch {}, batch {}: {}", epoch, batch_index, e.what()));
      }
      for (const auto& p : model.params.parameters()) {
        if (!p.value.all_finite()) {
          throw TrainingError(fmt::format("training diverged at epoch {}, batch {}: parameter '{}' is not finite",
                                          epoch, batch_index, p.name));
        }
      }
      ++batch_index;
      return value;
    };

    if (config.objective == Objective::Pairwise) {
      const auto pairs = make_pairs(train_targets, mix64(config.seed) ^ mix64(epoch), n_pairs);
      for (std::size_t start = 0; start < pairs.size(); start += config.batch_size) {
        const std::size_t end = std::min(pairs.size(), start + config.batch_size);
        std::vector<const EmbeddedExample*> rows;
        std::unordered_map<std::size_t, std::size_t> slot;
        std::vector<IndexPair> local;
        auto slot_of = [&](std::size_t i) {
          auto [it, inserted] = slot.emplace(i, rows.size());
          if (inserted) rows.push_back(&train_set[i]);
          return it->second;
        };
        for (std::size_t k = start; k < end; ++k) {
          const std::size_t a = slot_of(pairs[k].first);
          const std::size_t b = slot_of(pairs[k].second);
          local.push_back({a, b, pairs[k].label});
        }
        const double v = run_batch([&](Tape<float>& tape) {
          Var s = score_graph(tape, model.params, model.arch, config.dropout, rows, true, model.params.rng);
          return ops::pairwise_bce(tape, s, std::span<const IndexPair>(local));
        });
        loss_sum += v * static_cast<double>(end - start);
        loss_weight += end - start;
      }
    } else {
      std::vector<std::size_t> order(train_set.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      shuffle(order.begin(), order.end(), order_rng);
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t end = std::min(order.size(), start + config.batch_size);
        std::vector<const EmbeddedExample*> rows;
        std::vector<double> t;
        for (std::size_t k = start; k < end; ++k) {
          rows.push_back(&train_set[order[k]]);
          t.push_back(train_targets[order[k]]);
        }
        const double v = run_batch([&](Tape<float>& tape) {
          Var s = score_graph(tape, model.params, model.arch, config.dropout, rows, true, model.params.rng);
          return ops::l1_mean(tape, s, std::span<const double>(t));
        });
        loss_sum += v * static_cast<double>(end - start);
        loss_weight += end - start;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(std::max<std::size_t>(loss_weight, 1));
    rec.val_loss = val_set.empty() ? rec.train_loss : validation_loss(model, val_set, config.objective, config.seed);
    if (!std::isfinite(rec.val_loss)) {
      throw TrainingError(fmt::format("validation loss is not finite at epoch {}", epoch));
    }
    result.history.push_back(rec);
    if (rec.val_loss < best_loss) {
      best_loss = rec.val_loss;
      result.best = model;
      result.best_epoch = epoch;
      result.best_val_loss = rec.val_loss;
    }
  }
  return result;
}

GridResult grid_search(const ScoreModel& initial, std::span<const EmbeddedExample> train_set,
                       std::span<const EmbeddedExample> val_set, const TrainConfig& config) {
  if (config.grid_learning_rates.empty() || config.grid_dropouts.empty()) {
    throw ValidationError("grid search needs at least one learning rate and one dropout");
  }
  GridResult out;
  bool have_best = false;
  for (double lr : config.grid_learning_rates) {
    for (double dropout : config.grid_dropouts) {
      TrainConfig cell_config = config;
      cell_config.learning_rate = lr;
      cell_config.dropout = dropout;
      GridCell cell;
      cell.learning_rate = lr;
      cell.dropout = dropout;
      try {
        TrainResult r = train(initial, train_set, val_set, cell_config);
        cell.val_loss = r.best_val_loss;
        cell.best_epoch = r.best_epoch;
        const bool better = !have_best || r.best_val_loss < out.best.best_val_loss ||
                            (r.best_val_loss == out.best.best_val_loss &&
                             (lr < out.best_learning_rate ||
                              (lr == out.best_learning_rate && dropout < out.best_dropout)));
        if (better) {
          out.best = std::move(r);
          out.best_learning_rate = lr;
          out.best_dropout = dropout;
          have_best = true;
        }
      } catch (const Error& e) {
        cell.error = e.what();
      }
      out.cells.push_back(std::move(cell));
    }
  }
  if (!have_best) {
    throw TrainingError(fmt::format("all {} grid cells failed; first error: {}", out.cells.size(),
                                    out.cells.front().error.value_or("?")));
  }
  return out;
}

void write_history_jsonl(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::string body;
  for (const auto& h : history) {
    body += nlohmann::json{{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"val_loss", h.val_loss}}.dump();
    body += '\n';
  }
  io::write_file_atomic(path, body);
}

}  // namespace sdq
