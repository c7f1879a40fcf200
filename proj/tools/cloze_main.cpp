// cloze: build Cloze tests, score response sheets, rank candidate answers,
// validate model rankings against judges, and serve the judge ranking task.
//
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cloze/cloze_core.hpp"
#include "cloze/embedding_store.hpp"
#include "cloze/error.hpp"
#include "cloze/judge_session.hpp"
#include "cloze/ranking.hpp"
#include "cloze/scoring.hpp"
#include "cloze/serve.hpp"
#include "cloze/validation.hpp"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string text;
  std::string test;
  std::string responses;
  std::vector<std::string> models;
  std::string format = "auto";
  std::string method = "exact";
  double threshold = cloze::kDefaultAcceptableThreshold;
  std::size_t min_alternatives = cloze::kDefaultMinAlternatives;
  std::size_t lead = 16;
  std::size_t interval = 5;
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string data_dir;
  std::string ui_dir;
  std::string out;
  std::string id;
  std::string title;
  bool include_self = false;
  bool fold_diacritics = false;
  bool no_timestamp = false;
};

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw cloze::Error("cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& body) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw cloze::Error("cannot write '" + p.string() + "'");
  out << body;
}

struct LoadedModel {
  std::string name;
  std::string path;
  cloze::EmbeddingModel model;
};

std::vector<LoadedModel> load_models(const Options& o) {
  const auto format = cloze::parse_embedding_format(o.format);
  std::vector<LoadedModel> out;
  for (const auto& spec : o.models) {
    const auto eq = spec.find('=');
    std::string name = eq == std::string::npos ? fs::path(spec).stem().string() : spec.substr(0, eq);
    std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    if (name.empty() || path.empty()) throw UsageError("--model expects name=path, got '" + spec + "'");
    cloze::LoadSummary summary;
    auto model = cloze::load_embeddings(path, format, name, &summary);
    std::cerr << "loaded " << name << ": " << model.size() << " words, dimension " << model.dimension();
    if (summary.duplicates) std::cerr << ", " << summary.duplicates << " duplicate rows (last kept)";
    std::cerr << "\n";
    out.push_back({name, path, std::move(model)});
  }
  return out;
}

// Reads a flat JSON object whose keys mirror the flags of the chosen
// subcommand ("min_alternatives" and "min-alternatives" both work). CLI11
// applies an item only when the flag was not given on the command line.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(std::string subcommand) : subcommand_(std::move(subcommand)) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json cfg;
    try {
      cfg = json::parse(in);
    } catch (const json::parse_error& e) {
      throw CLI::ConversionError(std::string("--config: malformed JSON: ") + e.what());
    }
    if (!cfg.is_object()) throw CLI::ConversionError("--config: expected a JSON object");

    auto scalar = [](const json& x) -> std::string {
      if (x.is_string()) return x.get<std::string>();
      if (x.is_boolean()) return x.get<bool>() ? "true" : "false";
      return x.dump();
    };
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, v] : cfg.items()) {
      CLI::ConfigItem item;
      if (!subcommand_.empty()) item.parents = {subcommand_};
      item.name = key;
      for (char& c : item.name) c = c == '_' ? '-' : c;
      if (v.is_array()) {
        for (const auto& x : v) item.inputs.push_back(scalar(x));
      } else if (v.is_object()) {
        for (const auto& [k, x] : v.items()) item.inputs.push_back(k + "=" + scalar(x));
      } else {
        item.inputs.push_back(scalar(v));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  std::string subcommand_;
};

// First argument naming a subcommand, skipping the --config value.
std::string find_subcommand(int argc, char** argv, const CLI::App& app) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config") {
      ++i;
      continue;
    }
    for (const CLI::App* sub : app.get_subcommands({})) {
      if (sub->get_name() == a) return a;
    }
  }
  return {};
}

json config_snapshot(CLI::App* sub) {
  json snap = json::object();
  for (CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "out") continue;
    if (opt->count() == 0 && opt->get_default_str().empty()) continue;
    const auto& res = opt->results();
    if (res.empty()) {
      snap[name] = opt->get_default_str();
    } else if (res.size() == 1 && !opt->get_expected_max()) {
      snap[name] = res.front();
    } else if (res.size() == 1 && opt->get_items_expected_max() == 1) {
      snap[name] = res.front();
    } else {
      snap[name] = res;
    }
  }
  return snap;
}

cloze::NormalizeOptions normalize_options(const Options& o) { return {o.fold_diacritics}; }

int cmd_generate(const Options& o) {
  if (o.interval < 2) throw UsageError("--interval must be at least 2");
  const std::string text = read_text(o.text);
  const std::string id = o.id.empty() ? fs::path(o.text).stem().string() : o.id;
  const auto test = cloze::generate_cloze(text, o.lead, o.interval, id, o.title);
  write_text(o.out, cloze::test_to_json(test).dump(2) + "\n");
  std::cout << test.gaps.size() << " gaps\n";
  return 0;
}

int cmd_score(const Options& o, CLI::App*) {
  const auto method = cloze::parse_score_method(o.method);
  const bool needs_model = method == cloze::ScoreMethod::similarity || method == cloze::ScoreMethod::acceptable;
  if (needs_model && o.models.empty()) throw UsageError("--method " + o.method + " requires --model");
  if (o.models.size() > 1) throw UsageError("score takes a single --model");
  if (method == cloze::ScoreMethod::acceptable && !(o.threshold > 0.0 && o.threshold <= 1.0)) {
    throw UsageError("--threshold must lie in (0, 1]");
  }

  const auto test = cloze::parse_test_file(o.test);
  const auto sheets = cloze::parse_responses(o.responses, test);
  cloze::ScoringOptions sopts;
  sopts.normalize = normalize_options(o);
  sopts.include_self = o.include_self;

  cloze::ScoreReport report;
  if (method == cloze::ScoreMethod::exact) {
    report = cloze::score_exact(test, sheets, sopts);
  } else if (method == cloze::ScoreMethod::clozentropy) {
    report = cloze::score_clozentropy(test, sheets, sopts);
  } else {
    auto models = load_models(o);
    const auto& m = models.front().model;
    report = method == cloze::ScoreMethod::similarity
                 ? cloze::score_similarity(test, sheets, m, sopts)
                 : cloze::score_acceptable(test, sheets, m, o.threshold, sopts);
  }

  const std::string prefix = o.out.empty() ? "scores" : o.out;
  write_text(prefix + ".json", cloze::report_to_json(report).dump(2) + "\n");
  write_text(prefix + ".csv", cloze::report_to_csv(report));
  std::cout << "scored " << report.students.size() << " students x " << test.gaps.size() << " gaps ("
            << o.method << ") -> " << prefix << ".json, " << prefix << ".csv\n";
  return 0;
}

int cmd_rank(const Options& o) {
  if (o.models.empty()) throw UsageError("rank requires at least one --model");
  const auto test = cloze::parse_test_file(o.test);
  const auto sheets = cloze::parse_responses(o.responses, test);
  const auto models = load_models(o);
  const auto norm = normalize_options(o);

  json gaps = json::array();
  for (int gap_id : cloze::filter_gaps(test, sheets, o.min_alternatives, norm)) {
    const auto cands = cloze::collect_candidates(test, sheets, gap_id, norm);
    json tables = json::array();
    for (const auto& m : models) {
      auto t = cloze::rank_by_similarity(test.gap(gap_id), cands, m.model);
      t.ranker_id = m.name;
      tables.push_back(cloze::ranking_to_json(t));
    }
    gaps.push_back({{"gap_id", gap_id},
                    {"expected", test.gap(gap_id).expected},
                    {"context", cloze::extract_context(test, gap_id)},
                    {"candidates", cands},
                    {"rankings", tables}});
  }
  const json out = {{"test_id", test.id}, {"min_alternatives", o.min_alternatives}, {"gaps", gaps}};
  const std::string path = o.out.empty() ? "rankings.json" : o.out;
  write_text(path, out.dump(2) + "\n");
  std::cout << gaps.size() << " gaps ranked by " << models.size() << " model(s) -> " << path << "\n";
  return 0;
}

std::string resolve_data_dir(const Options& o, const char* fallback) {
  if (!o.data_dir.empty()) return o.data_dir;
  if (const char* env = std::getenv("CLOZE_DATA_DIR"); env && *env) return env;
  return fallback;
}

int cmd_validate(const Options& o, CLI::App* sub) {
  if (o.models.empty()) throw UsageError("validate requires at least one --model");
  const auto test = cloze::parse_test_file(o.test);
  const auto sheets = cloze::parse_responses(o.responses, test);
  const auto sessions = cloze::load_judge_sessions(resolve_data_dir(o, "judge_data"));
  const auto loaded = load_models(o);

  std::vector<cloze::ModelSource> sources;
  for (const auto& m : loaded) sources.push_back({m.name, m.path, &m.model});
  cloze::ValidationConfig cfg;
  cfg.min_alternatives = o.min_alternatives;
  cfg.normalize = normalize_options(o);
  cfg.config_snapshot = config_snapshot(sub);
  cfg.timestamp = !o.no_timestamp;

  const auto report = cloze::run_validation(test, sheets, sessions, sources, cfg);
  const std::string prefix = o.out.empty() ? "validation" : o.out;
  write_text(prefix + ".json", cloze::stats_report_to_json(report).dump(2) + "\n");
  write_text(prefix + "_spearman.csv", cloze::spearman_to_csv(report));
  write_text(prefix + "_anova.csv", cloze::anova_to_csv(report.anova));

  std::cout << report.gaps.size() << " of " << report.gap_selection.size()
            << " selected gaps validated against " << sessions.size() << " judge session(s)\n";
  for (const auto& name : report.rankers) {
    if (name == "consensus") continue;
    const auto rho = report.spearman.get(name, "consensus");
    std::cout << "  rho(" << name << ", consensus) = " << (rho ? cloze::format_real(*rho) : "undefined") << "\n";
  }
  for (const auto& a : report.anova) {
    std::cout << "  ART " << a.effect << ": F(" << a.df_num << "," << a.df_den << ") = " << cloze::format_real(a.F)
              << ", p = " << cloze::format_real(a.p) << "\n";
  }
  return 0;
}

cloze::JudgeServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const Options& o) {
  const auto test = cloze::parse_test_file(o.test);
  const auto sheets = cloze::parse_responses(o.responses, test);
  const std::string data_dir = resolve_data_dir(o, "judge_data");
  cloze::JudgeService service(test, sheets, data_dir, o.min_alternatives, normalize_options(o));
  cloze::JudgeServer server(service, o.ui_dir);
  const int port = server.bind(o.host, o.port);
  std::cout << "serving " << service.tasks().size() << " judging task(s) on http://" << o.host << ":" << port
            << " (sessions in " << data_dir << ")" << std::endl;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.listen();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cloze test construction, scoring and embedding-model validation", "cloze"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.set_config("--config", "", "JSON file mirroring the subcommand flags; flags win");

  auto add_inputs = [&](CLI::App* sub) {
    sub->add_option("--test", o.test, "Cloze test JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--responses", o.responses, "Responses CSV (student_id,gap_id,answer)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_flag("--fold-diacritics", o.fold_diacritics, "Fold accented letters before matching");
  };
  auto add_models = [&](CLI::App* sub) {
    sub->add_option("--model", o.models, "Embedding model as name=path (repeatable)");
    sub->add_option("--format", o.format, "Embedding file format")
        ->check(CLI::IsMember({"auto", "word2vec-text", "glove-text"}))
        ->capture_default_str();
  };
  auto add_min_alt = [&](CLI::App* sub) {
    sub->add_option("--min-alternatives", o.min_alternatives,
                    "Keep gaps with more than this many distinct answers")
        ->capture_default_str();
  };

  auto* gen = app.add_subcommand("generate", "Build a Cloze test from a passage");
  gen->add_option("--text", o.text, "Passage text file")->required();
  gen->add_option("--out", o.out, "Output test JSON")->required();
  gen->add_option("--lead", o.lead, "Intact words before the first gap")->capture_default_str();
  gen->add_option("--interval", o.interval, "Delete every n-th word")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1000000}))
      ->capture_default_str();
  gen->add_option("--id", o.id, "Test identifier (default: file stem)");
  gen->add_option("--title", o.title, "Title shown above the passage");

  auto* score = app.add_subcommand("score", "Score response sheets");
  add_inputs(score);
  add_models(score);
  score->add_option("--method", o.method, "exact | acceptable | similarity | clozentropy")
      ->check(CLI::IsMember({"exact", "acceptable", "similarity", "clozentropy"}))
      ->capture_default_str();
  score->add_option("--threshold", o.threshold, "Similarity threshold for acceptable answers")
      ->capture_default_str();
  score->add_flag("--include-self", o.include_self, "Clozentropy: keep the scored sheet in its criterion group");
  score->add_option("--out", o.out, "Output prefix for .json and .csv reports");

  auto* rank = app.add_subcommand("rank", "Rank each gap's candidate answers by model similarity");
  add_inputs(rank);
  add_models(rank);
  add_min_alt(rank);
  rank->add_option("--out", o.out, "Output JSON file");

  auto* validate = app.add_subcommand("validate", "Compare model rankings with judge rankings");
  add_inputs(validate);
  add_models(validate);
  add_min_alt(validate);
  validate->add_option("--data-dir", o.data_dir, "Directory of judge session files (default $CLOZE_DATA_DIR)");
  validate->add_option("--out", o.out, "Output prefix for the report files");
  validate->add_flag("--no-timestamp", o.no_timestamp, "Omit provenance.generated_at");

  auto* serve = app.add_subcommand("serve", "Serve the judge ranking task over HTTP");
  add_inputs(serve);
  add_min_alt(serve);
  serve->add_option("--port", o.port, "TCP port (0 picks a free one)")->capture_default_str();
  serve->add_option("--host", o.host, "Bind address")->capture_default_str();
  serve->add_option("--data-dir", o.data_dir, "Where judge sessions are written (default $CLOZE_DATA_DIR)");
  serve->add_option("--ui-dir", o.ui_dir, "Static judge UI bundle to serve at /");

  app.config_formatter(std::make_shared<JsonConfig>(find_subcommand(argc, argv, app)));
  app.allow_config_extras(CLI::config_extras_mode::error);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (sub == gen) return cmd_generate(o);
    if (sub == score) return cmd_score(o, sub);
    if (sub == rank) return cmd_rank(o);
    if (sub == validate) return cmd_validate(o, sub);
    if (sub == serve) return cmd_serve(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const cloze::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
