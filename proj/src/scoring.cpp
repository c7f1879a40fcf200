#include "cloze/scoring.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>

#include "cloze/csv.hpp"
#include "cloze/error.hpp"

namespace cloze {

std::string_view to_string(ScoreMethod m) {
  switch (m) {
    case ScoreMethod::exact: return "exact";
    case ScoreMethod::acceptable: return "acceptable";
    case ScoreMethod::similarity: return "similarity";
    case ScoreMethod::clozentropy: return "clozentropy";
  }
  return "exact";
}

ScoreMethod parse_score_method(std::string_view s) {
  if (s == "exact") return ScoreMethod::exact;
  if (s == "acceptable") return ScoreMethod::acceptable;
  if (s == "similarity") return ScoreMethod::similarity;
  if (s == "clozentropy") return ScoreMethod::clozentropy;
  throw Error("unknown scoring method '" + std::string(s) + "'");
}

std::string flags_to_string(std::uint8_t flags) {
  static constexpr std::pair<std::uint8_t, std::string_view> kNames[] = {
      {flag::blank, "blank"}, {flag::oov, "oov"}, {flag::multiword, "multiword"},
      {flag::empty_pool, "empty_pool"}};
  std::string out;
  for (const auto& [bit, name] : kNames) {
    if (!(flags & bit)) continue;
    if (!out.empty()) out.push_back('|');
    out += name;
  }
  return out;
}

std::string format_real(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

namespace {

void finish(StudentScore& s) {
  s.total = 0.0;
  for (const auto& g : s.gaps) s.total += g.score;
  s.proportion = s.gaps.empty() ? 0.0 : s.total / static_cast<double>(s.gaps.size());
}

// Per-student work is independent; OpenMP distributes students over threads
// and each writes only its own slot.
template <typename Fn>
std::vector<StudentScore> score_each(const std::vector<ResponseSheet>& sheets, kernels::Exec exec,
                                     Fn&& fn) {
  std::vector<StudentScore> out(sheets.size());
  const auto n = static_cast<std::int64_t>(sheets.size());
#pragma omp parallel for schedule(dynamic) if (exec == kernels::Exec::parallel)
  for (std::int64_t i = 0; i < n; ++i) {
    out[i] = fn(sheets[i]);
    finish(out[i]);
  }
  return out;
}

GapScore exact_gap(const Gap& gap, const std::string& raw, const NormalizeOptions& norm) {
  GapScore gs{gap.gap_id, 0.0, std::nullopt, 0};
  const std::string answer = normalize_answer(raw, norm);
  if (answer.empty()) {
    gs.flags |= flag::blank;
    return gs;
  }
  if (answer.find(' ') != std::string::npos) gs.flags |= flag::multiword;
  gs.score = answer == normalize_answer(gap.expected, norm) ? 1.0 : 0.0;
  return gs;
}

GapScore similarity_gap(const Gap& gap, const std::string& raw, const EmbeddingModel& model,
                        const NormalizeOptions& norm) {
  GapScore gs{gap.gap_id, 0.0, std::nullopt, 0};
  const std::string answer = normalize_answer(raw, norm);
  if (answer.empty()) {
    gs.flags |= flag::blank;
    return gs;
  }
  if (answer.find(' ') != std::string::npos) gs.flags |= flag::multiword;
  const std::string expected = normalize_answer(gap.expected, norm);
  const Cosine c = cosine_similarity(model, answer, expected);
  if (!c.ok()) gs.flags |= flag::oov;
  if (answer == expected) {
    gs.score = 1.0;
    gs.cosine = c.ok() ? c.value : 1.0;
    return gs;
  }
  if (c.ok()) {
    gs.cosine = c.value;
    gs.score = std::max(0.0, c.value);
  }
  return gs;
}

}  // namespace

ScoreReport score_exact(const ClozeTest& test, const std::vector<ResponseSheet>& sheets,
                        const ScoringOptions& opts) {
  ScoreReport r{test.id, ScoreMethod::exact, std::nullopt, {}, {}};
  r.students = score_each(sheets, opts.exec, [&](const ResponseSheet& sheet) {
    StudentScore s{sheet.student_id, {}, 0.0, 0.0};
    for (const auto& g : test.gaps) s.gaps.push_back(exact_gap(g, sheet.answer(g.gap_id), opts.normalize));
    return s;
  });
  return r;
}

ScoreReport score_similarity(const ClozeTest& test, const std::vector<ResponseSheet>& sheets,
                             const EmbeddingModel& model, const ScoringOptions& opts) {
  ScoreReport r{test.id, ScoreMethod::similarity, std::nullopt, model.name(), {}};
  r.students = score_each(sheets, opts.exec, [&](const ResponseSheet& sheet) {
    StudentScore s{sheet.student_id, {}, 0.0, 0.0};
    for (const auto& g : test.gaps) {
      s.gaps.push_back(similarity_gap(g, sheet.answer(g.gap_id), model, opts.normalize));
    }
    return s;
  });
  return r;
}

ScoreReport score_acceptable(const ClozeTest& test, const std::vector<ResponseSheet>& sheets,
                             const EmbeddingModel& model, double threshold,
                             const ScoringOptions& opts) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error("acceptable threshold must lie in (0, 1], got " + format_real(threshold));
  }
  ScoreReport r{test.id, ScoreMethod::acceptable, threshold, model.name(), {}};
  r.students = score_each(sheets, opts.exec, [&](const ResponseSheet& sheet) {
    StudentScore s{sheet.student_id, {}, 0.0, 0.0};
    for (const auto& g : test.gaps) {
      const std::string& raw = sheet.answer(g.gap_id);
      GapScore gs = similarity_gap(g, raw, model, opts.normalize);
      const bool exact = exact_gap(g, raw, opts.normalize).score == 1.0;
      gs.score = (exact || gs.score >= threshold) ? 1.0 : 0.0;
      s.gaps.push_back(gs);
    }
    return s;
  });
  return r;
}

namespace {

using Pool = std::map<std::string, std::size_t>;

struct GapPool {
  Pool counts;
  std::size_t total = 0;
};

std::vector<GapPool> build_pools(const ClozeTest& test, const std::vector<ResponseSheet>& sheets,
                                 const NormalizeOptions& norm) {
  std::vector<GapPool> pools(test.gaps.size());
  for (const auto& sheet : sheets) {
    for (std::size_t gi = 0; gi < test.gaps.size(); ++gi) {
      const std::string a = normalize_answer(sheet.answer(test.gaps[gi].gap_id), norm);
      if (a.empty()) continue;
      ++pools[gi].counts[a];
      ++pools[gi].total;
    }
  }
  return pools;
}

StudentScore clozentropy_sheet(const ClozeTest& test, const std::vector<GapPool>& pools,
                               const ResponseSheet& sheet, std::size_t self_copies,
                               const NormalizeOptions& norm) {
  StudentScore s{sheet.student_id, {}, 0.0, 0.0};
  for (std::size_t gi = 0; gi < test.gaps.size(); ++gi) {
    const Gap& g = test.gaps[gi];
    GapScore gs{g.gap_id, 0.0, std::nullopt, 0};
    const std::string a = normalize_answer(sheet.answer(g.gap_id), norm);
    if (a.empty()) {
      gs.flags |= flag::blank;
      s.gaps.push_back(gs);
      continue;
    }
    if (a.find(' ') != std::string::npos) gs.flags |= flag::multiword;
    std::size_t total = pools[gi].total;
    std::size_t same = 0;
    if (auto it = pools[gi].counts.find(a); it != pools[gi].counts.end()) same = it->second;
    // Leave-one-out: the sheet's own non-blank answer is in both counts.
    total -= std::min(total, self_copies);
    same -= std::min(same, self_copies);
    if (total == 0) {
      gs.flags |= flag::empty_pool;
    } else {
      gs.score = static_cast<double>(same) / static_cast<double>(total);
    }
    s.gaps.push_back(gs);
  }
  return s;
}

std::size_t copies_in_group(const std::vector<ResponseSheet>& group, const ResponseSheet& sheet) {
  return static_cast<std::size_t>(std::count_if(group.begin(), group.end(), [&](const auto& o) {
    return o.student_id == sheet.student_id;
  }));
}

}  // namespace

ScoreReport score_clozentropy(const ClozeTest& test, const std::vector<ResponseSheet>& all_sheets,
                              const ResponseSheet& sheet, const ScoringOptions& opts) {
  if (all_sheets.empty()) throw Error("clozentropy needs a non-empty criterion group");
  ScoreReport r{test.id, ScoreMethod::clozentropy, std::nullopt, {}, {}};
  const auto pools = build_pools(test, all_sheets, opts.normalize);
  const std::size_t self = opts.include_self ? 0 : copies_in_group(all_sheets, sheet);
  StudentScore s = clozentropy_sheet(test, pools, sheet, self, opts.normalize);
  finish(s);
  r.students.push_back(std::move(s));
  return r;
}

ScoreReport score_clozentropy(const ClozeTest& test, const std::vector<ResponseSheet>& all_sheets,
                              const ScoringOptions& opts) {
  if (all_sheets.empty()) throw Error("clozentropy needs a non-empty criterion group");
  ScoreReport r{test.id, ScoreMethod::clozentropy, std::nullopt, {}, {}};
  const auto pools = build_pools(test, all_sheets, opts.normalize);
  r.students = score_each(all_sheets, opts.exec, [&](const ResponseSheet& sheet) {
    const std::size_t self = opts.include_self ? 0 : copies_in_group(all_sheets, sheet);
    return clozentropy_sheet(test, pools, sheet, self, opts.normalize);
  });
  return r;
}

nlohmann::json report_to_json(const ScoreReport& report) {
  nlohmann::json students = nlohmann::json::array();
  for (const auto& s : report.students) {
    nlohmann::json gaps = nlohmann::json::array();
    for (const auto& g : s.gaps) {
      nlohmann::json flags = nlohmann::json::array();
      for (std::uint8_t bit : {flag::blank, flag::oov, flag::multiword, flag::empty_pool}) {
        if (g.flags & bit) flags.push_back(flags_to_string(bit));
      }
      nlohmann::json jg = {{"gap_id", g.gap_id}, {"score", g.score}, {"flags", flags}};
      if (g.cosine) jg["cosine"] = *g.cosine;
      gaps.push_back(std::move(jg));
    }
    students.push_back({{"student_id", s.student_id},
                        {"total", s.total},
                        {"proportion", s.proportion},
                        {"gaps", gaps}});
  }
  nlohmann::json j = {{"test_id", report.test_id},
                      {"method", std::string(to_string(report.method))},
                      {"students", students}};
  if (report.threshold) j["threshold"] = *report.threshold;
  if (!report.model.empty()) j["model"] = report.model;
  return j;
}

std::string report_to_csv(const ScoreReport& report) {
  std::string out = "student_id,gap_id,method,score,flags\n";
  const std::string method(to_string(report.method));
  for (const auto& s : report.students) {
    for (const auto& g : s.gaps) {
      out += csv::join({s.student_id, std::to_string(g.gap_id), method, format_real(g.score),
                        flags_to_string(g.flags)});
      out.push_back('\n');
    }
  }
  return out;
}

}  // namespace cloze
