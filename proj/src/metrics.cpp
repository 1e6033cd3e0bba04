// Copyright 2026 The tonetier Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tonetier/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "text_util.hpp"
#include "tonetier/error.hpp"

namespace tonetier {

double EditCounts::rate() const {
  if (!defined()) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 * static_cast<double>(errors()) / static_cast<double>(ref_length);
}

EditCounts& EditCounts::operator+=(const EditCounts& o) {
  substitutions += o.substitutions;
  deletions += o.deletions;
  insertions += o.insertions;
  ref_length += o.ref_length;
  return *this;
}

EditCounts edit_distance(std::span<const std::string> ref, std::span<const std::string> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::vector<long>> d(n + 1, std::vector<long>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<long>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<long>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      d[i][j] = std::min({d[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]), d[i - 1][j] + 1,
                          d[i][j - 1] + 1});
    }
  }
  EditCounts c;
  c.ref_length = static_cast<long>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1])) {
      if (ref[i - 1] != hyp[j - 1]) ++c.substitutions;
      --i;
      --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ++c.deletions;
      --i;
    } else {
      ++c.insertions;
      --j;
    }
  }
  return c;
}

EditCounts filtered_counts(std::span<const std::string> ref, std::span<const std::string> hyp,
                           const SymbolFilter& keep) {
  std::vector<std::string> r, h;
  for (const auto& s : ref)
    if (keep(s)) r.push_back(s);
  for (const auto& s : hyp)
    if (keep(s)) h.push_back(s);
  return edit_distance(r, h);
}

std::vector<std::string> phones_from_joint(std::span<const std::string> joint) {
  std::vector<std::string> out;
  out.reserve(joint.size());
  for (const auto& s : joint) out.push_back(split_joint_symbol(s).segment);
  return out;
}

std::vector<std::string> tones_from_joint(std::span<const std::string> joint) {
  std::vector<std::string> out;
  for (const auto& s : joint) {
    const JointParts parts = split_joint_symbol(s);
    if (!is_vowel_segment(parts.segment)) continue;
    if (parts.tones.empty()) out.emplace_back(kNeutral);
    for (const ToneTarget& t : parts.tones) out.push_back(t.render());
    out.emplace_back(kBoundary);
  }
  return out;
}

namespace {

Category segment_category(const std::string& segment) {
  return parse_segment(segment).category;
}

}  // namespace

bool is_consonant_segment(const std::string& segment) {
  const Category c = segment_category(segment);
  return c == Category::consonant || c == Category::voice_quality;
}

bool is_vowel_segment(const std::string& segment) {
  return segment_category(segment) == Category::vowel;
}

std::vector<std::string> report_metrics(const ModelVariant& variant) {
  std::vector<std::string> out;
  const bool joint = variant.has(TierId::joint);
  if (joint) out.push_back("JER");
  if (variant.has(TierId::phone)) out.push_back("PER");
  if (variant.has(TierId::tone)) out.push_back("TER");
  if (variant.has(TierId::voice)) out.push_back("VER");
  out.push_back("CoER");
  out.push_back("VoER");
  if (joint) {
    out.push_back("PER-joint");
    out.push_back("TER-joint");
  }
  return out;
}

namespace {

const std::vector<std::string>& tier_of(const TierHypotheses& h, TierId tier,
                                        const ScoredUtterance& u, const char* side) {
  auto it = h.find(tier);
  if (it == h.end()) {
    fail(ErrorCode::missing_tier, std::string(side) + " of '" + u.utt_id + "' lacks the " +
                                      std::string(to_string(tier)) + " tier");
  }
  return it->second;
}

EditCounts score(const std::string& metric, const ScoredUtterance& u, const ModelVariant& v) {
  auto ref = [&](TierId t) -> const std::vector<std::string>& { return tier_of(u.ref, t, u, "reference"); };
  auto hyp = [&](TierId t) -> const std::vector<std::string>& { return tier_of(u.hyp, t, u, "hypothesis"); };
  if (metric == "JER") return edit_distance(ref(TierId::joint), hyp(TierId::joint));
  if (metric == "PER") return edit_distance(ref(TierId::phone), hyp(TierId::phone));
  if (metric == "TER") return edit_distance(ref(TierId::tone), hyp(TierId::tone));
  if (metric == "VER") return edit_distance(ref(TierId::voice), hyp(TierId::voice));
  if (metric == "PER-joint") {
    return edit_distance(phones_from_joint(ref(TierId::joint)), phones_from_joint(hyp(TierId::joint)));
  }
  if (metric == "TER-joint") {
    return edit_distance(tones_from_joint(ref(TierId::joint)), tones_from_joint(hyp(TierId::joint)));
  }
  const TierId source = v.has(TierId::joint) ? TierId::joint : TierId::phone;
  const auto r = phones_from_joint(ref(source));
  const auto h = phones_from_joint(hyp(source));
  if (metric == "CoER") return filtered_counts(r, h, is_consonant_segment);
  return filtered_counts(r, h, is_vowel_segment);
}

}  // namespace

std::vector<ReportRow> build_report(std::span<const ScoredUtterance> utterances,
                                    const ModelVariant& variant) {
  std::vector<ReportRow> rows;
  std::set<std::string> langs;
  for (const auto& u : utterances) langs.insert(u.lang);
  for (const std::string& metric : report_metrics(variant)) {
    std::map<std::string, EditCounts> per_lang;
    for (const auto& l : langs) per_lang[l] = {};
    EditCounts pooled;
    for (const auto& u : utterances) {
      const EditCounts c = score(metric, u, variant);
      per_lang[u.lang] += c;
      pooled += c;
    }
    for (const auto& [lang, c] : per_lang) rows.push_back({metric, variant.id(), lang, c});
    rows.push_back({metric, variant.id(), "all", pooled});
  }
  return rows;
}

std::string format_rate(const EditCounts& counts) {
  if (!counts.defined()) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", counts.rate());
  return buf;
}

std::string report_csv(std::span<const ReportRow> rows) {
  std::ostringstream out;
  out << "metric,model,language,S,D,I,N,rate\n";
  for (const ReportRow& r : rows) {
    out << r.metric << "," << r.model << "," << r.language << "," << r.counts.substitutions << ","
        << r.counts.deletions << "," << r.counts.insertions << "," << r.counts.ref_length << ","
        << format_rate(r.counts) << "\n";
  }
  return out.str();
}

std::vector<ReportRow> parse_report_csv(std::string_view text) {
  const std::vector<std::string> lines = detail::content_lines(text);
  if (lines.empty() || lines.front() != "metric,model,language,S,D,I,N,rate") {
    fail(ErrorCode::format_error, "report is missing its CSV header");
  }
  std::vector<ReportRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = detail::split(lines[i], ',');
    if (f.size() != 8) fail(ErrorCode::format_error, "report line " + std::to_string(i + 1) + " needs 8 fields");
    try {
      ReportRow r;
      r.metric = f[0];
      r.model = static_cast<int>(detail::parse_int(f[1], "model"));
      r.language = f[2];
      r.counts = {detail::parse_int(f[3], "S"), detail::parse_int(f[4], "D"),
                  detail::parse_int(f[5], "I"), detail::parse_int(f[6], "N")};
      rows.push_back(std::move(r));
    } catch (const Error& e) {
      fail(ErrorCode::format_error, "report line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return rows;
}

std::string report_table(std::span<const ReportRow> rows) {
  std::vector<std::string> langs;
  std::vector<std::pair<std::string, int>> keys;
  std::map<std::pair<std::pair<std::string, int>, std::string>, std::string> cell;
  for (const ReportRow& r : rows) {
    const auto key = std::make_pair(r.metric, r.model);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    if (r.language != "all" && std::find(langs.begin(), langs.end(), r.language) == langs.end()) {
      langs.push_back(r.language);
    }
    cell[{key, r.language}] = format_rate(r.counts);
  }
  std::sort(langs.begin(), langs.end());
  langs.push_back("all");
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header = {"metric", "model"};
  header.insert(header.end(), langs.begin(), langs.end());
  grid.push_back(header);
  for (const auto& key : keys) {
    std::vector<std::string> line = {key.first, "Model" + std::to_string(key.second)};
    for (const auto& l : langs) {
      auto it = cell.find({key, l});
      line.push_back(it == cell.end() ? "-" : it->second);
    }
    grid.push_back(line);
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : grid)
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  std::ostringstream out;
  for (const auto& line : grid) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c > 0) out << "  ";
      const std::size_t pad = width[c] - line[c].size();
      if (c < 2) out << line[c] << std::string(pad, ' ');
      else out << std::string(pad, ' ') << line[c];
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace tonetier
