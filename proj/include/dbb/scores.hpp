#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dbb/summary.hpp"

namespace dbb::scores {

// One observation row of the bias regressions: per-intervention fidelity with
// its covariates and the per-debate ratio columns repeated on each row.
struct ScoreRow {
  std::string debate_id;
  pipeline::Method method = pipeline::Method::Default;
  std::string model;
  int order_k = 0;
  int n = 0;
  double relative_order = 0.0;  // k/n
  std::string party_group;
  std::string speaker_id;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double c_ratio = 0.0;
  double d_ratio = 0.0;
  bool found = false;
};

inline constexpr const char* kScoresHeader =
    "debate_id,method,model,order_k,n,relative_order,party_group,speaker_id,P,R,F1,C,Dr,found";

std::string format_double(double v);  // %.17g, round-trip exact

void write_scores_csv(const std::filesystem::path& path, const std::vector<ScoreRow>& rows);
std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& path);

}  // namespace dbb::scores
