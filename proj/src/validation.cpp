#include "cloze/validation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cloze/csv.hpp"
#include "cloze/error.hpp"
#include "cloze/scoring.hpp"

namespace cloze {

std::optional<double> CorrelationMatrix::get(const std::string& r, const std::string& c) const {
  auto ri = std::find(rows.begin(), rows.end(), r);
  auto ci = std::find(cols.begin(), cols.end(), c);
  if (ri == rows.end() || ci == cols.end()) throw Error("no correlation entry for " + r + " x " + c);
  const double v = at(static_cast<std::size_t>(ri - rows.begin()), static_cast<std::size_t>(ci - cols.begin()));
  if (std::isnan(v)) return std::nullopt;
  return v;
}

namespace {

constexpr const char* kConsensus = "consensus";

std::string describe_mismatch(const std::vector<std::string>& want, const std::vector<std::string>& got) {
  std::set<std::string> w(want.begin(), want.end());
  std::set<std::string> g(got.begin(), got.end());
  std::string missing;
  std::string extra;
  for (const auto& x : w) {
    if (!g.count(x)) missing += (missing.empty() ? "" : ", ") + ("'" + x + "'");
  }
  for (const auto& x : g) {
    if (!w.count(x)) extra += (extra.empty() ? "" : ", ") + ("'" + x + "'");
  }
  std::string out;
  if (!missing.empty()) out += "missing " + missing;
  if (!extra.empty()) out += std::string(out.empty() ? "" : "; ") + "unexpected " + extra;
  return out;
}

CorrelationMatrix square(const std::vector<std::string>& names, std::vector<double> values) {
  CorrelationMatrix m{names, names, std::move(values)};
  for (std::size_t i = 0; i < names.size(); ++i) {
    double& d = m.values[i * names.size() + i];
    if (!std::isnan(d)) d = 1.0;
  }
  return m;
}

nlohmann::json matrix_to_json(const CorrelationMatrix& m) {
  nlohmann::json values = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < m.cols.size(); ++c) {
      const double v = m.at(r, c);
      row.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
    }
    values.push_back(std::move(row));
  }
  return {{"rows", m.rows}, {"cols", m.cols}, {"values", values}};
}

void append_matrix_csv(std::string& out, const std::string& scope, const CorrelationMatrix& m) {
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    for (std::size_t c = 0; c < m.cols.size(); ++c) {
      const double v = m.at(r, c);
      out += csv::join({scope, m.rows[r], m.cols[c], std::isnan(v) ? std::string() : format_real(v)});
      out.push_back('\n');
    }
  }
}

}  // namespace

StatsReport run_validation(const ClozeTest& test, const std::vector<ResponseSheet>& sheets,
                           const std::vector<JudgeSession>& sessions,
                           const std::vector<ModelSource>& models, const ValidationConfig& config) {
  if (models.empty()) throw Error("validation needs at least one embedding model");
  std::set<std::string> model_names;
  for (const auto& m : models) {
    if (!m.model) throw Error("model '" + m.name + "' is not loaded");
    if (m.name == kConsensus) throw Error("'consensus' is reserved and cannot name a model");
    if (!model_names.insert(m.name).second) throw Error("duplicate model name '" + m.name + "'");
  }

  StatsReport report;
  report.test_id = test.id;
  for (const auto& m : models) report.rankers.push_back(m.name);
  report.rankers.push_back(kConsensus);
  report.gap_selection = filter_gaps(test, sheets, config.min_alternatives, config.normalize);

  std::map<int, std::vector<RankingTable>> judge_tables;
  for (const auto& s : sessions) {
    for (const auto& sub : s.rankings) judge_tables[sub.table.gap_id].push_back(sub.table);
  }

  for (int gap_id : report.gap_selection) {
    auto jt = judge_tables.find(gap_id);
    if (jt == judge_tables.end() || jt->second.empty()) {
      report.skipped_gaps.push_back(gap_id);
      continue;
    }
    const Gap& gap = test.gap(gap_id);
    GapValidation gv;
    gv.gap_id = gap_id;
    gv.candidates = collect_candidates(test, sheets, gap_id, config.normalize);

    std::vector<std::string> want = gv.candidates;
    std::sort(want.begin(), want.end());
    for (const auto& t : jt->second) {
      auto got = t.candidates();
      std::sort(got.begin(), got.end());
      if (got != want) {
        throw Error("judge '" + t.ranker_id + "' ranked a different candidate set for gap " +
                    std::to_string(gap_id) + " than the responses provide (" +
                    describe_mismatch(want, got) + ")");
      }
      gv.judges.push_back(t.ranker_id);
    }

    const RankingTable consensus = aggregate_judges(jt->second);
    const RankingTable reduced = drop_top_ranked(consensus);
    std::vector<std::string> survivors = reduced.candidates();
    std::sort(survivors.begin(), survivors.end());
    for (const auto& e : consensus.entries) {
      if (!std::binary_search(survivors.begin(), survivors.end(), e.candidate)) {
        gv.dropped.push_back(e.candidate);
      }
    }

    for (const auto& m : models) {
      RankingTable t = rank_by_similarity(gap, gv.candidates, *m.model, config.exec);
      t.ranker_id = m.name;
      gv.tables.emplace(m.name, restrict_to(t, survivors));
    }
    gv.tables.emplace(kConsensus, reduced);
    for (const auto& t : jt->second) gv.tables.emplace("judge:" + t.ranker_id, restrict_to(t, survivors));

    std::vector<std::vector<double>> cols;
    for (const auto& r : report.rankers) cols.push_back(gv.tables.at(r).ranks_for(survivors));
    gv.spearman = square(report.rankers, kernels::pearson_matrix(cols, config.exec));
    report.gaps.push_back(std::move(gv));
  }
  if (report.gaps.empty()) {
    throw Error(report.gap_selection.empty()
                    ? "no gap has more than " + std::to_string(config.min_alternatives) + " alternatives"
                    : "no selected gap has any judge ranking");
  }

  // Aggregate over gaps by concatenating per-gap rank vectors.
  std::vector<std::vector<double>> cols(report.rankers.size());
  for (const auto& gv : report.gaps) {
    const auto survivors = gv.tables.at(kConsensus).candidates();
    std::vector<std::string> order(survivors);
    std::sort(order.begin(), order.end());
    for (std::size_t r = 0; r < report.rankers.size(); ++r) {
      const auto v = gv.tables.at(report.rankers[r]).ranks_for(order);
      cols[r].insert(cols[r].end(), v.begin(), v.end());
    }
  }
  report.spearman = square(report.rankers, kernels::pearson_matrix(cols, config.exec));

  // Individual judges against every ranker, over the gaps each judge ranked.
  std::vector<std::string> judges;
  for (const auto& s : sessions) {
    const bool used = std::any_of(report.gaps.begin(), report.gaps.end(), [&](const auto& gv) {
      return std::find(gv.judges.begin(), gv.judges.end(), s.judge_id) != gv.judges.end();
    });
    if (used) judges.push_back(s.judge_id);
  }
  report.judge_spearman.rows = judges;
  report.judge_spearman.cols = report.rankers;
  for (const auto& j : judges) {
    std::vector<double> jv;
    std::vector<std::vector<double>> rv(report.rankers.size());
    for (const auto& gv : report.gaps) {
      auto it = gv.tables.find("judge:" + j);
      if (it == gv.tables.end()) continue;
      std::vector<std::string> order = it->second.candidates();
      std::sort(order.begin(), order.end());
      const auto v = it->second.ranks_for(order);
      jv.insert(jv.end(), v.begin(), v.end());
      for (std::size_t r = 0; r < report.rankers.size(); ++r) {
        const auto w = gv.tables.at(report.rankers[r]).ranks_for(order);
        rv[r].insert(rv[r].end(), w.begin(), w.end());
      }
    }
    for (std::size_t r = 0; r < report.rankers.size(); ++r) {
      report.judge_spearman.values.push_back(kernels::pearson(jv, rv[r]));
    }
  }

  std::vector<stats::Observation> obs;
  for (const auto& gv : report.gaps) {
    for (const auto& r : report.rankers) {
      for (const auto& e : gv.tables.at(r).entries) obs.push_back({e.rank, {{"ranker", r}}});
    }
  }
  report.anova = stats::art_anova(obs);

  nlohmann::json model_info = nlohmann::json::array();
  for (const auto& m : models) {
    model_info.push_back({{"name", m.name},
                          {"path", m.path},
                          {"dimension", m.model->dimension()},
                          {"vocabulary", m.model->size()},
                          {"format", std::string(to_string(m.model->source_format()))}});
  }
  report.provenance = {{"test_id", test.id},
                       {"students", sheets.size()},
                       {"judge_sessions", sessions.size()},
                       {"models", model_info},
                       {"min_alternatives", config.min_alternatives},
                       {"fold_diacritics", config.normalize.fold_diacritics},
                       {"config", config.config_snapshot}};
  if (config.timestamp) report.provenance["generated_at"] = utc_timestamp();
  return report;
}

nlohmann::json stats_report_to_json(const StatsReport& r) {
  nlohmann::json gaps = nlohmann::json::array();
  nlohmann::json dropped = nlohmann::json::object();
  for (const auto& gv : r.gaps) {
    nlohmann::json tables = nlohmann::json::array();
    for (const auto& name : r.rankers) tables.push_back(ranking_to_json(gv.tables.at(name)));
    gaps.push_back({{"gap_id", gv.gap_id},
                    {"candidates", gv.candidates},
                    {"dropped", gv.dropped},
                    {"judges", gv.judges},
                    {"rankings", tables},
                    {"spearman", matrix_to_json(gv.spearman)}});
    dropped[std::to_string(gv.gap_id)] = gv.dropped;
  }
  return {{"test_id", r.test_id},
          {"rankers", r.rankers},
          {"spearman_matrix", matrix_to_json(r.spearman)},
          {"judge_spearman", matrix_to_json(r.judge_spearman)},
          {"anova", stats::anova_to_json(r.anova)},
          {"gap_selection", r.gap_selection},
          {"skipped_gaps", r.skipped_gaps},
          {"dropped_words", dropped},
          {"per_gap", gaps},
          {"provenance", r.provenance}};
}

std::string spearman_to_csv(const StatsReport& r) {
  std::string out = "scope,ranker_a,ranker_b,rho\n";
  append_matrix_csv(out, "all", r.spearman);
  append_matrix_csv(out, "judges", r.judge_spearman);
  for (const auto& gv : r.gaps) append_matrix_csv(out, "gap:" + std::to_string(gv.gap_id), gv.spearman);
  return out;
}

std::string anova_to_csv(const std::vector<stats::AnovaTable>& tables) {
  std::string out = "effect,F,df_num,df_den,p\n";
  for (const auto& t : tables) {
    out += csv::join({t.effect, std::isfinite(t.F) ? format_real(t.F) : "inf", std::to_string(t.df_num),
                      std::to_string(t.df_den), format_real(t.p)});
    out.push_back('\n');
  }
  return out;
}

}  // namespace cloze
