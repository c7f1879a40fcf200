#include "cloze/cloze_core.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "cloze/csv.hpp"
#include "cloze/error.hpp"
#include "cloze/text.hpp"

namespace cloze {

namespace {

bool ends_sentence(std::string_view token) {
  const std::u32string s = utf8::decode(token);
  size_t e = s.size();
  auto closing = [](char32_t c) {
    return c == U'"' || c == U'\'' || c == U')' || c == U']' || c == 0x201D || c == 0x2019 ||
           c == 0xBB;
  };
  while (e > 0 && closing(s[e - 1])) --e;
  if (e == 0) return false;
  const char32_t last = s[e - 1];
  return last == U'.' || last == U'!' || last == U'?' || last == 0x2026;
}

std::string blank_token(std::string_view token, std::string_view blank) {
  const auto parts = split_affixes(token);
  return parts.prefix + std::string(blank) + parts.suffix;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::string trim_ascii(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

const Gap& ClozeTest::gap(int gap_id) const {
  if (gap_id >= 1 && static_cast<size_t>(gap_id) <= gaps.size() && gaps[gap_id - 1].gap_id == gap_id) {
    return gaps[gap_id - 1];
  }
  for (const auto& g : gaps) {
    if (g.gap_id == gap_id) return g;
  }
  throw Error("unknown gap_id " + std::to_string(gap_id) + " in test '" + id + "'");
}

bool ClozeTest::has_gap(int gap_id) const {
  for (const auto& g : gaps) {
    if (g.gap_id == gap_id) return true;
  }
  return false;
}

std::string ClozeTest::text() const { return join_tokens(tokens); }

std::size_t gap_count(std::size_t token_count, std::size_t lead_len, std::size_t interval) {
  if (interval == 0 || token_count <= lead_len) return 0;
  return (token_count - lead_len - 1) / interval + 1;
}

ClozeTest generate_cloze(std::string_view text, std::size_t lead_len, std::size_t interval,
                         std::string id, std::string title) {
  if (interval < 2) {
    throw Error("deletion interval must be at least 2, got " + std::to_string(interval));
  }
  ClozeTest test;
  test.id = std::move(id);
  test.title = std::move(title);
  test.tokens = split_whitespace(text);
  test.lead_len = lead_len;
  test.interval = interval;
  if (test.tokens.size() <= lead_len) {
    throw Error("passage has " + std::to_string(test.tokens.size()) +
                " words; need more than the " + std::to_string(lead_len) + "-word lead-in");
  }

  int next_id = 1;
  for (std::size_t pos = lead_len + 1; pos <= test.tokens.size(); pos += interval) {
    std::string expected = normalize_token(test.tokens[pos - 1]);
    if (expected.empty()) {
      throw Error("word " + std::to_string(pos) + " ('" + test.tokens[pos - 1] +
                  "') has no letters to delete");
    }
    test.gaps.push_back({next_id++, pos, std::move(expected)});
  }
  return test;
}

std::string fill_cloze(const ClozeTest& test, const std::map<int, std::string>& fills,
                       const RenderOptions& opts) {
  std::vector<std::string> out = test.tokens;
  for (const auto& g : test.gaps) {
    auto it = fills.find(g.gap_id);
    const auto parts = split_affixes(test.tokens[g.position - 1]);
    out[g.position - 1] = parts.prefix + (it == fills.end() ? opts.blank : it->second) + parts.suffix;
  }
  std::string body = join_tokens(out);
  if (opts.include_title && !test.title.empty()) return test.title + "\n\n" + body;
  return body;
}

std::string render_cloze(const ClozeTest& test, const RenderOptions& opts) {
  return fill_cloze(test, {}, opts);
}

std::size_t sentence_start(const ClozeTest& test, std::size_t position) {
  std::size_t start = position;
  while (start > 1 && !ends_sentence(test.tokens[start - 2])) --start;
  return start;
}

std::string extract_context(const ClozeTest& test, int gap_id, std::string_view blank) {
  const Gap& g = test.gap(gap_id);
  const std::size_t start = sentence_start(test, g.position);
  std::size_t end = g.position;
  while (end < test.tokens.size() && !ends_sentence(test.tokens[end - 1])) ++end;

  std::vector<std::string> out;
  out.reserve(end - start + 1);
  for (std::size_t p = start; p <= end; ++p) {
    out.push_back(p == g.position ? blank_token(test.tokens[p - 1], blank) : test.tokens[p - 1]);
  }
  return join_tokens(out);
}

const std::string& ResponseSheet::answer(int gap_id) const {
  static const std::string kEmpty;
  auto it = answers.find(gap_id);
  return it == answers.end() ? kEmpty : it->second;
}

nlohmann::json test_to_json(const ClozeTest& test) {
  nlohmann::json gaps = nlohmann::json::array();
  for (const auto& g : test.gaps) {
    gaps.push_back({{"gap_id", g.gap_id}, {"position", g.position}, {"expected", g.expected}});
  }
  return {{"id", test.id},
          {"title", test.title},
          {"text", test.text()},
          {"lead_len", test.lead_len},
          {"interval", test.interval},
          {"gaps", gaps}};
}

ClozeTest test_from_json(const nlohmann::json& j) {
  ClozeTest test;
  try {
    if (!j.is_object()) throw Error("test file must hold a JSON object");
    if (!j.contains("text")) throw Error("test file is missing \"text\"");
    const auto lead = j.value("lead_len", std::size_t{16});
    const auto interval = j.value("interval", std::size_t{5});
    test = generate_cloze(j.at("text").get<std::string>(), lead, interval,
                          j.value("id", std::string("cloze")), j.value("title", std::string()));

    if (j.contains("gaps")) {
      const auto& gaps = j.at("gaps");
      if (!gaps.is_array()) throw Error("\"gaps\" must be an array");
      if (gaps.size() != test.gaps.size()) {
        throw Error("\"gaps\" lists " + std::to_string(gaps.size()) + " gaps but the text yields " +
                    std::to_string(test.gaps.size()));
      }
      for (std::size_t i = 0; i < gaps.size(); ++i) {
        const Gap& want = test.gaps[i];
        const auto& g = gaps[i];
        const int gid = g.at("gap_id").get<int>();
        const auto pos = g.at("position").get<std::size_t>();
        if (gid != want.gap_id || pos != want.position) {
          throw Error("gap entry " + std::to_string(i + 1) + " is (" + std::to_string(gid) + ", " +
                      std::to_string(pos) + "), expected (" + std::to_string(want.gap_id) + ", " +
                      std::to_string(want.position) + ")");
        }
        if (g.contains("expected") && normalize_token(g.at("expected").get<std::string>()) != want.expected) {
          throw Error("gap " + std::to_string(gid) + " expects '" +
                      g.at("expected").get<std::string>() + "' but the text has '" + want.expected + "'");
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("test file schema error: ") + e.what());
  }
  return test;
}

ClozeTest parse_test_file(const std::filesystem::path& path) {
  const std::string body = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(path.string() + ": malformed JSON: " + e.what());
  }
  return test_from_json(j);
}

void write_test_file(const ClozeTest& test, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << test_to_json(test).dump(2) << '\n';
}

std::vector<ResponseSheet> parse_responses_csv(std::string_view text, const ClozeTest& test) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw Error("responses file is empty");

  const auto& header = rows.front().fields;
  if (header.size() != 3 || normalize_token(header[0]) != "student_id" ||
      normalize_token(header[1]) != "gap_id" || normalize_token(header[2]) != "answer") {
    throw Error("responses header must be \"student_id,gap_id,answer\"");
  }

  std::vector<ResponseSheet> sheets;
  std::map<std::string, std::size_t> by_student;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = "responses line " + std::to_string(row.line);
    if (row.fields.size() != 3) {
      throw Error(where + ": expected 3 fields, found " + std::to_string(row.fields.size()));
    }
    const std::string student = trim_ascii(row.fields[0]);
    if (student.empty()) throw Error(where + ": empty student_id");

    int gap_id = 0;
    const auto& gs = row.fields[1];
    auto [p, ec] = std::from_chars(gs.data(), gs.data() + gs.size(), gap_id);
    if (ec != std::errc() || p != gs.data() + gs.size()) {
      throw Error(where + ": gap_id '" + gs + "' is not an integer");
    }
    if (!test.has_gap(gap_id)) {
      throw Error(where + ": gap_id " + std::to_string(gap_id) + " does not exist in test '" +
                  test.id + "' (" + std::to_string(test.gaps.size()) + " gaps)");
    }

    auto [it, inserted] = by_student.try_emplace(student, sheets.size());
    if (inserted) sheets.push_back({student, {}});
    auto& sheet = sheets[it->second];
    if (!sheet.answers.emplace(gap_id, row.fields[2]).second) {
      throw Error(where + ": duplicate answer for student '" + student + "', gap " +
                  std::to_string(gap_id));
    }
  }
  return sheets;
}

std::vector<ResponseSheet> parse_responses(const std::filesystem::path& path, const ClozeTest& test) {
  try {
    return parse_responses_csv(read_file(path), test);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::string responses_to_csv(const std::vector<ResponseSheet>& sheets) {
  std::string out = "student_id,gap_id,answer\n";
  for (const auto& s : sheets) {
    for (const auto& [gid, ans] : s.answers) {
      out += csv::join({s.student_id, std::to_string(gid), ans});
      out.push_back('\n');
    }
  }
  return out;
}

}  // namespace cloze
