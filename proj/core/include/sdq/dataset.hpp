#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sdq/corpus.hpp"
#include "sdq/embed.hpp"
#include "sdq/scoremodel.hpp"

namespace sdq {

struct ExampleSpec {
  TargetKind target = TargetKind::CitationLogAvg;
  RepresentationKind representation = RepresentationKind::TitleAbstract;
  ContextKind context = ContextKind::None;
  YearMonth snapshot{2024, 1};  // citation counts were collected at this date
};

// Citation target ln(1 + c / months), or the mean normalized review score
// or impact. Absent when the record lacks the inputs.
std::optional<double> target_for(const PaperRecord& record, TargetKind kind, YearMonth snapshot);

std::optional<std::string> representation_text(const PaperRecord& record, RepresentationKind kind);

// Reference titles (+ abstracts), or the paper's sections other than the
// one used as the representation, in section order.
std::vector<std::string> context_texts(const PaperRecord& record, ContextKind kind, RepresentationKind representation);

struct ExampleBuild {
  std::vector<EmbeddedExample> examples;          // corpus order
  std::map<std::string, std::size_t> excluded;   // reason -> count
};

// Embeds every usable record. Records without a target (when required) or
// without the requested representation text are excluded and counted.
ExampleBuild build_examples(const Corpus& corpus, const EmbeddingProvider& provider, const ExampleSpec& spec,
                            bool require_target = true);

}  // namespace sdq
