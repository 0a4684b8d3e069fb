#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "sdq/checkpoint.hpp"
#include "sdq/harmonize.hpp"
#include "sdq/sections.hpp"

namespace sdq {
namespace {

constexpr std::size_t kClasses = 5;

std::string layer_prefix(std::size_t l) { return fmt::format("enc{}", l); }

EncoderShape encoder_shape(const SectionClassifierConfig& c, std::size_t dim) {
  return {dim, c.heads, c.ff_hidden, c.dropout};
}

std::vector<EmbeddingVector> embed_sentences(const std::vector<std::string>& sentences,
                                             const EmbeddingProvider& provider) {
  std::vector<EmbeddingVector> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(embed_text(s, provider));
  return out;
}

std::array<double, kClasses> softmax_row(const Tensor<float>& logits, std::size_t row) {
  std::array<double, kClasses> p{};
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < kClasses; ++c) mx = std::max(mx, static_cast<double>(logits.at(row, c)));
  double z = 0.0;
  for (std::size_t c = 0; c < kClasses; ++c) z += p[c] = std::exp(static_cast<double>(logits.at(row, c)) - mx);
  for (auto& v : p) v /= z;
  return p;
}

std::size_t argmax(const std::array<double, kClasses>& p) {
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

}  // namespace

void SectionClassifierConfig::validate() const {
  if (layers == 0) throw ValidationError("section classifier: layers must be positive");
  if (heads == 0) throw ValidationError("section classifier: heads must be positive");
  if (ff_hidden == 0) throw ValidationError("section classifier: ff_hidden must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError(fmt::format("dropout {} outside [0, 1)", dropout));
  if (!(learning_rate > 0.0)) throw ValidationError("section classifier: learning rate must be positive");
  if (batch_size == 0) throw ValidationError("section classifier: batch size must be positive");
}

nlohmann::json SectionClassifierConfig::to_json() const {
  return {{"layers", layers},   {"heads", heads},     {"ff_hidden", ff_hidden}, {"dropout", dropout},
          {"learning_rate", learning_rate}, {"batch_size", batch_size}, {"epochs", epochs}, {"seed", seed}};
}

SectionClassifierConfig SectionClassifierConfig::from_json(const nlohmann::json& j, SectionClassifierConfig c) {
  if (!j.is_object()) throw ParseError("section classifier config must be an object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "layers") c.layers = v.get<std::size_t>();
      else if (key == "heads") c.heads = v.get<std::size_t>();
      else if (key == "ff_hidden") c.ff_hidden = v.get<std::size_t>();
      else if (key == "dropout") c.dropout = v.get<double>();
      else if (key == "learning_rate") c.learning_rate = v.get<double>();
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (key == "epochs") c.epochs = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else throw ParseError(fmt::format("unknown section classifier key '{}'", key));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("section classifier config: {}", e.what()));
  }
  c.validate();
  return c;
}

template <typename T>
void init_section_params(ParamSet<T>& params, const SectionClassifierConfig& config, std::size_t dim, Rng& rng) {
  for (std::size_t l = 0; l < config.layers; ++l) init_encoder(params, layer_prefix(l), encoder_shape(config, dim), rng);
  params.add("out.w", xavier_uniform<T>(dim, kClasses, rng));
  params.add("out.b", Tensor<T>::matrix(1, kClasses));
}

template <typename T>
Var section_logits(Tape<T>& tape, ParamSet<T>& params, const SectionClassifierConfig& config, std::size_t dim,
                   const std::vector<const std::vector<EmbeddingVector>*>& batch, bool training, Rng& rng) {
  std::vector<std::size_t> segments;
  std::size_t total = 0;
  for (const auto* ex : batch) {
    if (ex->empty()) throw ValidationError("section classifier: example without sentences");
    segments.push_back(ex->size());
    total += ex->size();
  }
  Tensor<T> x = Tensor<T>::matrix(total, dim);
  std::size_t row = 0;
  for (const auto* ex : batch) {
    for (const auto& s : *ex) {
      if (s.size() != dim) {
        throw ValidationError(fmt::format("section classifier: embedding dimension {} != {}", s.size(), dim));
      }
      std::copy(s.begin(), s.end(), x.data() + row++ * dim);
    }
  }
  Var h = tape.constant(std::move(x));
  for (std::size_t l = 0; l < config.layers; ++l) {
    h = encoder_forward(tape, params, layer_prefix(l), h, segments, encoder_shape(config, dim), training, rng);
  }
  h = ops::segment_mean(tape, h, std::span<const std::size_t>(segments));
  return ops::add_row(tape, ops::matmul(tape, h, tape.parameter(params, "out.w")), tape.parameter(params, "out.b"));
}

SectionClassifier SectionClassifier::create(const SectionClassifierConfig& config, std::size_t dim,
                                            std::string provider_id) {
  config.validate();
  SectionClassifier c;
  c.config = config;
  c.dim = dim;
  c.provider_id = std::move(provider_id);
  Rng rng(mix64(config.seed ^ 0x5ec7));
  init_section_params(c.params, config, dim, rng);
  c.params.rng = Rng(mix64(config.seed ^ 0xd20f));
  return c;
}

std::array<double, 5> SectionClassifier::probabilities(const std::vector<EmbeddingVector>& sentences) const {
  // Inference only reads parameter values.
  auto& p = const_cast<ParamSet<float>&>(params);
  Tape<float> tape;
  Rng unused(0);
  const Var logits = section_logits(tape, p, config, dim, {&sentences}, false, unused);
  return softmax_row(tape.value(logits), 0);
}

void SectionClassifier::save(const std::filesystem::path& path) const {
  save_checkpoint(path, params,
                  {{"format", "sdq-section-classifier"},
                   {"dim", dim},
                   {"provider_id", provider_id},
                   {"config", config.to_json()}});
}

SectionClassifier SectionClassifier::load(const std::filesystem::path& path) {
  Checkpoint ck = load_checkpoint(path);
  SectionClassifier c;
  try {
    if (ck.metadata.value("format", "") != "sdq-section-classifier") {
      throw ParseError("not a section classifier checkpoint");
    }
    c.dim = ck.metadata.at("dim").get<std::size_t>();
    c.provider_id = ck.metadata.at("provider_id").get<std::string>();
    c.config = SectionClassifierConfig::from_json(ck.metadata.at("config"), {});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: bad classifier metadata: {}", path.string(), e.what()));
  }
  ParamSet<float> reference;
  Rng rng(0);
  init_section_params(reference, c.config, c.dim, rng);
  for (const auto& p : reference.parameters()) {
    if (!ck.params.contains(p.name) || !ck.params.get(p.name).value.same_shape(p.value)) {
      throw ParseError(fmt::format("{}: parameter '{}' missing or misshaped", path.string(), p.name));
    }
  }
  if (reference.parameters().size() != ck.params.parameters().size()) {
    throw ParseError(fmt::format("{}: unexpected parameters in checkpoint", path.string()));
  }
  c.params = std::move(ck.params);
  return c;
}

nlohmann::json SectionTrainResult::report() const {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : history) {
    hist.push_back({{"epoch", h.epoch},
                    {"train_loss", h.train_loss},
                    {"val_loss", h.val_loss},
                    {"val_accuracy", h.val_accuracy}});
  }
  return {{"config", classifier.config.to_json()},
          {"provider_id", classifier.provider_id},
          {"split", {{"train", split_counts[0]}, {"validation", split_counts[1]}, {"test", split_counts[2]}}},
          {"best_epoch", best_epoch},
          {"test_accuracy", test_accuracy},
          {"history", hist}};
}

SectionTrainResult train_section_classifier(const SectionDataset& dataset, const EmbeddingProvider& provider,
                                            const SectionClassifierConfig& config) {
  config.validate();
  std::size_t present = 0;
  for (auto type : kSectionTypes) {
    if (std::any_of(dataset.examples.begin(), dataset.examples.end(),
                    [&](const SectionExample& e) { return e.label == type; })) {
      ++present;
    }
  }
  if (present < 2) throw ValidationError("section classifier needs at least two labels in the dataset");

  const std::size_t dim = provider.dimension();
  std::vector<std::vector<EmbeddingVector>> embedded;
  std::vector<std::size_t> labels;
  embedded.reserve(dataset.examples.size());
  for (const auto& ex : dataset.examples) {
    embedded.push_back(embed_sentences(ex.sentences, provider));
    labels.push_back(static_cast<std::size_t>(ex.label));
  }

  // Stratified split in dataset order per label.
  std::array<std::vector<std::size_t>, 3> parts;
  for (std::size_t c = 0; c < kClasses; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) idx.push_back(i);
    }
    Rng rng(mix64(config.seed ^ mix64(c + 1)));
    shuffle(idx.begin(), idx.end(), rng);
    const auto sizes = split_sizes(idx.size(), SplitSpec{});
    std::size_t k = 0;
    for (std::size_t part = 0; part < 3; ++part) {
      for (std::size_t m = 0; m < sizes[part]; ++m) parts[part].push_back(idx[k++]);
    }
  }
  for (auto& p : parts) std::sort(p.begin(), p.end());
  const auto& train_idx = parts[0];
  const auto& val_idx = parts[1];
  const auto& test_idx = parts[2];
  if (train_idx.empty()) throw ValidationError("section classifier: training split is empty");

  SectionTrainResult result;
  result.split_counts = {train_idx.size(), val_idx.size(), test_idx.size()};
  SectionClassifier model = SectionClassifier::create(config, dim, provider.identity());
  result.classifier = model;

  auto evaluate = [&](const SectionClassifier& m, const std::vector<std::size_t>& idx) {
    double loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t i : idx) {
      const auto p = m.probabilities(embedded[i]);
      loss += -std::log(std::max(p[labels[i]], 1e-300));
      if (argmax(p) == labels[i]) ++correct;
    }
    const double n = static_cast<double>(std::max<std::size_t>(idx.size(), 1));
    return std::pair{loss / n, static_cast<double>(correct) / n};
  };

  const AdamConfig adam{config.learning_rate};
  Rng order_rng(mix64(config.seed ^ 0x0dde5));
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order = train_idx;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), order_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<const std::vector<EmbeddingVector>*> batch;
      std::vector<std::size_t> y;
      for (std::size_t k = start; k < end; ++k) {
        batch.push_back(&embedded[order[k]]);
        y.push_back(labels[order[k]]);
      }
      Tape<float> tape;
      try {
        Var logits = section_logits(tape, model.params, config, dim, batch, true, model.params.rng);
        Var loss = ops::softmax_cross_entropy(tape, logits, std::span<const std::size_t>(y));
        loss_sum += tape.scalar(loss) * static_cast<double>(end - start);
        tape.backward(loss);
        adam_step(model.params, adam);
      } catch (const NumericError& e) {
        throw NumericError(fmt::format("section classifier diverged at epoch {}, batch {}: {}", epoch,
                                       start / config.batch_size, e.what()));
      }
    }
    SectionEpoch rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    if (val_idx.empty()) {
      rec.val_loss = rec.train_loss;
    } else {
      std::tie(rec.val_loss, rec.val_accuracy) = evaluate(model, val_idx);
    }
    result.history.push_back(rec);
    if (rec.val_loss < best) {
      best = rec.val_loss;
      result.classifier = model;
      result.best_epoch = epoch;
    }
  }
  if (!test_idx.empty()) result.test_accuracy = evaluate(result.classifier, test_idx).second;
  return result;
}

SectionPrediction classify_section(std::string_view paragraph, const SectionClassifier& classifier,
                                   const EmbeddingProvider& provider) {
  const auto sentences = segment_sentences(paragraph);
  if (sentences.empty()) throw ValidationError("classify_section: empty paragraph");
  if (provider.dimension() != classifier.dim) {
    throw ValidationError(fmt::format("classify_section: provider dimension {} != classifier dimension {}",
                                      provider.dimension(), classifier.dim));
  }
  SectionPrediction out;
  out.probabilities = classifier.probabilities(embed_sentences(sentences, provider));
  out.label = kSectionTypes[argmax(out.probabilities)];
  return out;
}

template void init_section_params<float>(ParamSet<float>&, const SectionClassifierConfig&, std::size_t, Rng&);
template void init_section_params<double>(ParamSet<double>&, const SectionClassifierConfig&, std::size_t, Rng&);
template Var section_logits<float>(Tape<float>&, ParamSet<float>&, const SectionClassifierConfig&, std::size_t,
                                   const std::vector<const std::vector<EmbeddingVector>*>&, bool, Rng&);
template Var section_logits<double>(Tape<double>&, ParamSet<double>&, const SectionClassifierConfig&, std::size_t,
                                    const std::vector<const std::vector<EmbeddingVector>*>&, bool, Rng&);

}  // namespace sdq
