#include "sdq/dataset.hpp"

#include "sdq/harmonize.hpp"

namespace sdq {
namespace {

std::optional<SectionType> section_of(RepresentationKind kind) {
  switch (kind) {
    case RepresentationKind::Introduction: return SectionType::Introduction;
    case RepresentationKind::RelatedWork: return SectionType::Background;
    case RepresentationKind::Methodology: return SectionType::Methodology;
    case RepresentationKind::ExperimentsResults: return SectionType::ExperimentsAndResults;
    case RepresentationKind::Conclusion: return SectionType::Conclusion;
    default: return std::nullopt;
  }
}

bool blank(const std::string& s) { return normalize_whitespace(s).empty(); }

}  // namespace

std::optional<double> target_for(const PaperRecord& record, TargetKind kind, YearMonth snapshot) {
  switch (kind) {
    case TargetKind::CitationLogAvg:
      if (!record.citation_count) return std::nullopt;
      return citation_target(*record.citation_count, months_elapsed(record.publication_date, snapshot));
    case TargetKind::ReviewScoreMean: return mean_review_score(record, ReviewAttribute::Score);
    case TargetKind::ImpactMean: return mean_review_score(record, ReviewAttribute::Impact);
  }
  return std::nullopt;
}

std::optional<std::string> representation_text(const PaperRecord& record, RepresentationKind kind) {
  std::string text;
  if (kind == RepresentationKind::TitleAbstract) {
    text = record.title + " " + record.abstract;
  } else if (kind == RepresentationKind::Hypothesis) {
    if (!record.hypothesis) return std::nullopt;
    text = record.hypothesis->problem + " " + record.hypothesis->methodology;
  } else {
    auto it = record.sections.find(*section_of(kind));
    if (it == record.sections.end()) return std::nullopt;
    text = it->second;
  }
  if (blank(text)) return std::nullopt;
  return text;
}

std::vector<std::string> context_texts(const PaperRecord& record, ContextKind kind, RepresentationKind representation) {
  std::vector<std::string> out;
  if (kind == ContextKind::ReferenceTitlesAbstracts) {
    for (const auto& r : record.references) {
      std::string t = r.abstract ? r.title + " " + *r.abstract : r.title;
      if (!blank(t)) out.push_back(std::move(t));
    }
  } else if (kind == ContextKind::FullPaperSections) {
    const auto skip = section_of(representation);
    for (const auto& [type, text] : record.sections) {
      if (skip && type == *skip) continue;
      if (!blank(text)) out.push_back(text);
    }
  }
  return out;
}

ExampleBuild build_examples(const Corpus& corpus, const EmbeddingProvider& provider, const ExampleSpec& spec,
                            bool require_target) {
  ExampleBuild b;
  for (const auto& paper : corpus) {
    auto target = target_for(paper, spec.target, spec.snapshot);
    if (require_target && !target) {
      ++b.excluded["missing target"];
      continue;
    }
    const auto text = representation_text(paper, spec.representation);
    if (!text) {
      ++b.excluded["missing representation text"];
      continue;
    }
    EmbeddedExample ex;
    ex.paper_id = paper.id;
    ex.publication_date = paper.publication_date;
    ex.target = target;
    ex.paper_embedding = embed_text(*text, provider);
    for (const auto& c : context_texts(paper, spec.context, spec.representation)) {
      ex.context_embeddings.push_back(embed_text(c, provider));
    }
    b.examples.push_back(std::move(ex));
  }
  return b;
}

}  // namespace sdq
