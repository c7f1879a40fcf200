#include "cloze/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "cloze/csv.hpp"
#include "cloze/error.hpp"
#include "cloze/scoring.hpp"
#include "cloze/text.hpp"

namespace cloze::fixture {

namespace {

constexpr const char* kPassage =
    "Hoje em dia muitas crianças ganham um celular antes mesmo de aprender a ler com segurança. "
    "Os pais dizem que o aparelho ajuda a manter contato durante o dia, principalmente quando a "
    "família trabalha longe de casa. Na escola, porém, os professores percebem que alguns alunos "
    "chegam cansados porque passaram a noite assistindo vídeos ou jogando com amigos. O uso "
    "exagerado da tela pode atrapalhar o sono, a atenção e até a convivência com os colegas. Por "
    "outro lado, o telefone também oferece jogos educativos, livros digitais e mensagens que "
    "aproximam avós e netos. O desafio está em encontrar um equilíbrio saudável entre o tempo livre "
    "e as obrigações da rotina. Especialistas recomendam combinar horários claros, deixar o aparelho "
    "fora do quarto na hora de dormir e conversar sobre os conteúdos que a criança acessa. Quando os "
    "adultos dão o exemplo e guardam o próprio celular durante as refeições, os pequenos aprendem "
    "com mais facilidade. Brincar no parque, desenhar, ler histórias e correr com os amigos "
    "continuam sendo atividades muito importantes para o desenvolvimento. Assim, a tecnologia pode "
    "ser uma grande aliada da família, desde que seja usada com responsabilidade, diálogo e muito "
    "carinho dentro de casa todos os dias.\n";

constexpr const char* kTestId = "celulares-criancas";
constexpr const char* kTitle = "O uso de celulares por crianças";
constexpr const char* kTimestamp = "2024-05-01T12:00:00Z";

// Distribution transforms are written out so the dataset does not depend on
// the standard library's unspecified <random> distribution algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 gen_;
};

class WordMaker {
 public:
  explicit WordMaker(std::set<std::string> taken) : taken_(std::move(taken)) {}
  std::string make(Rng& rng) {
    static const std::vector<std::string> kSyl = {
        "ba", "be", "bo", "ca", "ce", "co", "da", "de", "do", "fa", "fe", "ga", "go", "la",
        "le", "li", "lo", "ma", "me", "mi", "mo", "na", "ne", "no", "pa", "pe", "pi", "po",
        "ra", "re", "ri", "ro", "sa", "se", "si", "so", "ta", "te", "ti", "to", "va", "ve",
        "vi", "ção", "nho", "lha", "rão", "tê", "mé", "cú"};
    for (;;) {
      const std::size_t n = 2 + rng.below(2);
      std::string w;
      for (std::size_t i = 0; i < n; ++i) w += kSyl[rng.below(kSyl.size())];
      if (taken_.insert(w).second) return w;
    }
  }

 private:
  std::set<std::string> taken_;
};

std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double n = 0.0;
  do {
    n = 0.0;
    for (double& x : v) {
      x = rng.normal();
      n += x * x;
    }
  } while (n < 1e-6);
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

// Unit vector at `angle` radians from unit vector `key`.
std::vector<double> at_angle(Rng& rng, const std::vector<double>& key, double angle) {
  std::vector<double> w = random_unit(rng, key.size());
  double proj = 0.0;
  for (std::size_t k = 0; k < key.size(); ++k) proj += w[k] * key[k];
  double n = 0.0;
  for (std::size_t k = 0; k < key.size(); ++k) {
    w[k] -= proj * key[k];
    n += w[k] * w[k];
  }
  n = std::sqrt(n);
  std::vector<double> out(key.size());
  for (std::size_t k = 0; k < key.size(); ++k) {
    out[k] = std::cos(angle) * key[k] + std::sin(angle) * w[k] / n;
  }
  return out;
}

std::string surface_variant(Rng& rng, const std::string& word) {
  const double u = rng.uniform();
  if (u < 0.12 && !word.empty() && word[0] >= 'a' && word[0] <= 'z') {
    std::string w = word;
    w[0] = static_cast<char>(w[0] - 'a' + 'A');
    return w;
  }
  if (u < 0.20) return word + ".";
  if (u < 0.25) return " " + word + " ";
  return word;
}

struct GapPlan {
  std::vector<std::string> candidates;  // planted order, [0] = expected
  bool selected = false;
};

}  // namespace

const std::string& passage() {
  static const std::string p = kPassage;
  return p;
}

Dataset make_dataset(const Options& opts) {
  if (opts.students < 14) throw Error("fixture needs at least 14 students");
  Rng rng(opts.seed);
  Dataset d;
  d.passage = passage();
  d.test = generate_cloze(d.passage, 16, 5, kTestId, kTitle);
  if (opts.selected_gaps > d.test.gaps.size()) throw Error("more selected gaps than gaps");

  std::set<std::string> taken;
  std::vector<std::string> passage_words;
  for (const auto& t : d.test.tokens) {
    std::string w = normalize_token(t);
    if (!w.empty() && taken.insert(w).second) passage_words.push_back(w);
  }
  WordMaker words(taken);

  std::vector<int> ids;
  for (const auto& g : d.test.gaps) ids.push_back(g.gap_id);
  rng.shuffle(ids);
  d.selected.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(opts.selected_gaps));
  std::sort(d.selected.begin(), d.selected.end());

  // Plan candidates per gap.
  std::map<int, GapPlan> plans;
  for (const auto& g : d.test.gaps) {
    GapPlan p;
    p.selected = std::binary_search(d.selected.begin(), d.selected.end(), g.gap_id);
    p.candidates.push_back(g.expected);
    const std::size_t distinct = p.selected ? 11 + rng.below(3) : 1 + rng.below(7);
    while (p.candidates.size() < distinct) p.candidates.push_back(words.make(rng));
    if (!p.selected && distinct >= 3 && rng.uniform() < 0.3) {
      p.candidates.push_back(p.candidates[1] + " " + p.candidates[2]);
    }
    if (p.selected) d.truth[g.gap_id] = p.candidates;
    plans[g.gap_id] = std::move(p);
  }

  // Responses: every planted candidate is written by at least one student;
  // the rest follow a 1/(k+1) popularity profile.
  for (std::size_t s = 0; s < opts.students; ++s) {
    char id[16];
    std::snprintf(id, sizeof(id), "s%02zu", s + 1);
    d.sheets.push_back({id, {}});
  }
  for (const auto& g : d.test.gaps) {
    const auto& cands = plans[g.gap_id].candidates;
    std::vector<std::size_t> order(opts.students);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    double wsum = 0.0;
    for (std::size_t k = 0; k < cands.size(); ++k) wsum += 1.0 / static_cast<double>(k + 1);
    for (std::size_t i = 0; i < order.size(); ++i) {
      std::string answer;
      if (i < cands.size()) {
        answer = cands[i];
      } else if (rng.uniform() >= opts.blank_rate) {
        double u = rng.uniform() * wsum;
        std::size_t k = 0;
        while (k + 1 < cands.size() && u > 1.0 / static_cast<double>(k + 1)) {
          u -= 1.0 / static_cast<double>(k + 1);
          ++k;
        }
        answer = cands[k];
      }
      d.sheets[order[i]].answers[g.gap_id] = answer.empty() ? answer : surface_variant(rng, answer);
    }
  }

  // Judges: noisy permutations of the planted order.
  for (std::size_t j = 0; j < opts.judges; ++j) {
    char id[16];
    std::snprintf(id, sizeof(id), "J%02zu", j + 1);
    JudgeSession s;
    s.judge_id = id;
    s.session_id = std::string(kTestId) + ":" + id;
    s.test_id = kTestId;
    s.created_at = kTimestamp;
    s.updated_at = kTimestamp;
    s.status = "complete";
    for (int gap_id : d.selected) {
      const auto& truth = d.truth[gap_id];
      std::vector<std::pair<double, std::size_t>> keyed;
      for (std::size_t k = 0; k < truth.size(); ++k) {
        keyed.emplace_back(static_cast<double>(k) + opts.judge_noise * rng.normal(), k);
      }
      std::sort(keyed.begin(), keyed.end());
      std::vector<std::string> ordered;
      for (const auto& [_, k] : keyed) ordered.push_back(truth[k]);
      s.rankings.push_back({ranking_from_order(gap_id, s.judge_id, ordered), kTimestamp});
    }
    d.sessions.push_back(std::move(s));
  }

  // Models: each candidate sits at a planted angle from its gap's key word;
  // per-model jitter on the angle controls agreement with the planted order.
  std::vector<std::string> vocab = passage_words;
  for (const auto& g : d.test.gaps) {
    for (std::size_t k = 1; k < plans[g.gap_id].candidates.size(); ++k) {
      const auto& c = plans[g.gap_id].candidates[k];
      if (c.find(' ') == std::string::npos) vocab.push_back(c);
    }
  }
  for (const auto& spec : opts.models) {
    std::map<std::string, std::vector<double>> vec;
    for (const auto& w : vocab) vec[w] = random_unit(rng, opts.dimension);
    std::set<std::string> dropped;
    for (std::size_t i = 0; i < spec.oov_drop; ++i) {
      const int gap_id = d.selected[rng.below(d.selected.size())];
      const auto& cands = plans[gap_id].candidates;
      dropped.insert(cands[1 + rng.below(cands.size() - 1)]);
    }
    for (const auto& g : d.test.gaps) {
      const auto& p = plans[g.gap_id];
      const auto& key = vec[g.expected];
      const std::size_t m = p.candidates.size();
      for (std::size_t k = 1; k < m; ++k) {
        const auto& c = p.candidates[k];
        if (c.find(' ') != std::string::npos) continue;
        double angle = 0.0;
        if (p.selected) {
          angle = 0.35 + 1.55 * static_cast<double>(k - 1) / static_cast<double>(m - 2);
          angle += spec.angle_noise * rng.normal();
        } else {
          angle = 0.3 + 1.3 * rng.uniform();
        }
        angle = std::clamp(angle, 0.05, std::numbers::pi - 0.05);
        vec[c] = at_angle(rng, key, angle);
      }
    }
    EmbeddingFile f;
    f.name = spec.name;
    for (const auto& w : vocab) {
      if (dropped.count(w)) continue;
      // Arbitrary magnitudes so loading has real normalization work to do.
      const double scale = 0.5 + 2.5 * rng.uniform();
      std::vector<double> v = vec[w];
      for (double& x : v) x *= scale;
      f.words.push_back(w);
      f.vectors.push_back(std::move(v));
    }
    d.models.push_back(std::move(f));
  }
  return d;
}

void write_dataset(const Dataset& d, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "judges");
  fs::create_directories(dir / "models");
  auto write = [](const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    out << body;
  };
  write(dir / "passage.txt", d.passage);
  write(dir / "test.json", test_to_json(d.test).dump(2) + "\n");

  std::string table = "student_id,gap_id,answer\n";
  for (const auto& s : d.sheets) {
    for (const auto& g : d.test.gaps) {
      table += csv::join({s.student_id, std::to_string(g.gap_id), s.answer(g.gap_id)}) + "\n";
    }
  }
  write(dir / "responses.csv", table);

  for (const auto& s : d.sessions) {
    write(dir / "judges" / session_filename(s.judge_id), session_to_json(s).dump(2) + "\n");
  }
  for (const auto& m : d.models) {
    std::string body;
    for (std::size_t i = 0; i < m.words.size(); ++i) {
      body += m.words[i];
      for (double x : m.vectors[i]) body += " " + format_real(x);
      body += "\n";
    }
    write(dir / "models" / (m.name + ".txt"), body);
  }
}

}  // namespace cloze::fixture
