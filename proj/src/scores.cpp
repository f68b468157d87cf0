#include "dbb/scores.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dbb/errors.hpp"
#include "dbb/fsutil.hpp"

namespace dbb::scores {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void check_field(const std::string& s) {
  if (s.find_first_of(",\"\n") != std::string::npos)
    throw ArgumentError("CSV field contains a separator: " + s);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_scores_csv(const std::filesystem::path& path, const std::vector<ScoreRow>& rows) {
  std::string out = kScoresHeader;
  out += "\n";
  for (const auto& r : rows) {
    check_field(r.debate_id);
    check_field(r.model);
    check_field(r.party_group);
    check_field(r.speaker_id);
    out += r.debate_id + "," + pipeline::method_name(r.method) + "," + r.model + "," +
           std::to_string(r.order_k) + "," + std::to_string(r.n) + "," +
           format_double(r.relative_order) + "," + r.party_group + "," + r.speaker_id + "," +
           format_double(r.precision) + "," + format_double(r.recall) + "," +
           format_double(r.f1) + "," + format_double(r.c_ratio) + "," +
           format_double(r.d_ratio) + "," + (r.found ? "1" : "0") + "\n";
  }
  fsutil::write_file_atomic(path, out);
}

std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RefusedError("missing scores file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw RefusedError("empty scores file: " + path.string());
  if (line != kScoresHeader)
    throw RefusedError("unexpected scores header in " + path.string());

  std::vector<ScoreRow> rows;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 14)
      throw RefusedError("scores line " + std::to_string(line_no) + " has " +
                         std::to_string(f.size()) + " fields, expected 14");
    ScoreRow r;
    r.debate_id = f[0];
    r.method = pipeline::method_from_name(f[1]);
    r.model = f[2];
    r.order_k = std::stoi(f[3]);
    r.n = std::stoi(f[4]);
    r.relative_order = std::stod(f[5]);
    r.party_group = f[6];
    r.speaker_id = f[7];
    r.precision = std::stod(f[8]);
    r.recall = std::stod(f[9]);
    r.f1 = std::stod(f[10]);
    r.c_ratio = std::stod(f[11]);
    r.d_ratio = std::stod(f[12]);
    r.found = f[13] == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace dbb::scores
