#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dbb/corpus.hpp"
#include "dbb/gateway.hpp"
#include "dbb/summary.hpp"

namespace dbb::pipeline {

struct PromptTemplate {
  std::string system;
  std::string user;
};

// Prompt wording is an artifact decision, so the templates live as versioned
// files in the repo and their digest feeds the run's config hash: changing a
// prompt invalidates caches instead of silently reusing stale completions.
struct PromptTemplates {
  PromptTemplate sum;
  PromptTemplate gen_default;
  PromptTemplate gen_grouped;
  PromptTemplate gen_hier_field;
  PromptTemplate gen_hier_final;
  PromptTemplate gen_prompted;
  PromptTemplate rec;

  static PromptTemplates load(const std::filesystem::path& dir);
  std::string digest() const;
};

// Single-pass "{key}" substitution; unknown keys are left verbatim and
// substituted values are never re-scanned.
std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& values);

class Pipeline {
 public:
  explicit Pipeline(PromptTemplates templates);

  // One completion with the summariser prompt; one re-prompt on unparseable
  // or empty output, after which the summary comes back with failed=true and
  // the pipeline moves on. Transport errors propagate (they abort the stage).
  StructuredSummary summarise_intervention(const corpus::Debate& debate,
                                           const corpus::Intervention& intervention,
                                           gateway::ChatClient& client) const;

  // Dispatches to the four generator strategies. `summaries` must be ordered
  // by order_index; failed summaries are skipped when building prompts.
  DebateSummary generate(Method method, const corpus::Debate& debate,
                         const std::vector<StructuredSummary>& summaries,
                         gateway::ChatClient& client) const;

  // One completion extracting the speaker's contribution from the debate
  // summary text only — never from the original interventions.
  ReconstructionOutput reconstruct_intervention(const DebateSummary& debate_summary,
                                                const corpus::Speaker& speaker,
                                                gateway::ChatClient& client) const;

  const PromptTemplates& templates() const { return templates_; }

 private:
  DebateSummary generate_stacked(Method method, const corpus::Debate& debate,
                                 const std::vector<StructuredSummary>& summaries,
                                 gateway::ChatClient& client) const;
  DebateSummary generate_grouped(const corpus::Debate& debate,
                                 const std::vector<StructuredSummary>& summaries,
                                 gateway::ChatClient& client) const;
  DebateSummary generate_hierarchical(const corpus::Debate& debate,
                                      const std::vector<StructuredSummary>& summaries,
                                      gateway::ChatClient& client) const;

  PromptTemplates templates_;
};

}  // namespace dbb::pipeline
