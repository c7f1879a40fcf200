#include "cloze/embedding_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "cloze/error.hpp"

namespace cloze {

std::string_view to_string(EmbeddingFormat f) {
  switch (f) {
    case EmbeddingFormat::auto_detect: return "auto";
    case EmbeddingFormat::word2vec_text: return "word2vec-text";
    case EmbeddingFormat::glove_text: return "glove-text";
  }
  return "auto";
}

EmbeddingFormat parse_embedding_format(std::string_view s) {
  if (s == "auto") return EmbeddingFormat::auto_detect;
  if (s == "word2vec-text" || s == "word2vec") return EmbeddingFormat::word2vec_text;
  if (s == "glove-text" || s == "glove") return EmbeddingFormat::glove_text;
  throw Error("unknown embedding format '" + std::string(s) + "'");
}

EmbeddingModel EmbeddingModel::from_rows(std::string name, std::size_t dimension,
                                         const std::vector<std::string>& words,
                                         std::vector<double> raw_rows, EmbeddingFormat source,
                                         LoadSummary* summary, kernels::Exec exec) {
  if (dimension == 0) throw Error("embedding dimension must be positive");
  if (raw_rows.size() != words.size() * dimension) {
    throw Error("embedding matrix size does not match vocabulary x dimension");
  }

  EmbeddingModel m;
  m.name_ = std::move(name);
  m.dimension_ = dimension;
  m.source_ = source;

  std::size_t duplicates = 0;
  m.words_.reserve(words.size());
  m.data_.reserve(raw_rows.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    const double* src = raw_rows.data() + i * dimension;
    auto [it, inserted] = m.index_.try_emplace(words[i], static_cast<std::uint32_t>(m.words_.size()));
    if (inserted) {
      m.words_.push_back(words[i]);
      m.data_.insert(m.data_.end(), src, src + dimension);
    } else {
      ++duplicates;
      std::copy(src, src + dimension, m.data_.begin() + it->second * dimension);
    }
  }

  std::vector<double> norms(m.words_.size());
  kernels::row_norms(m.data_, dimension, norms, exec);
  for (std::size_t r = 0; r < norms.size(); ++r) {
    if (!(norms[r] > 0.0) || !std::isfinite(norms[r])) {
      throw Error("zero-norm or non-finite vector for word '" + m.words_[r] + "'");
    }
  }
  kernels::scale_rows(m.data_, dimension, norms, exec);

  if (summary) {
    summary->rows_read = words.size();
    summary->duplicates = duplicates;
  }
  return m;
}

std::optional<std::uint32_t> EmbeddingModel::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_count(std::string_view s, std::size_t& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

bool parse_real(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace

EmbeddingModel load_embeddings(const std::filesystem::path& path, EmbeddingFormat format,
                               std::string name, LoadSummary* summary) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read embedding file '" + path.string() + "'");
  if (name.empty()) name = path.stem().string();

  std::vector<std::string> words;
  std::vector<double> rows;
  std::size_t dimension = 0;
  std::size_t line_no = 0;
  bool first = true;
  std::optional<std::size_t> declared;
  EmbeddingFormat detected = format;

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_fields(line);
    if (fields.empty()) continue;

    if (first) {
      first = false;
      std::size_t count = 0;
      std::size_t dim = 0;
      const bool header_shape =
          fields.size() == 2 && parse_count(fields[0], count) && parse_count(fields[1], dim);
      if (detected == EmbeddingFormat::auto_detect) {
        detected = header_shape ? EmbeddingFormat::word2vec_text : EmbeddingFormat::glove_text;
      }
      if (detected == EmbeddingFormat::word2vec_text) {
        if (!header_shape || dim == 0) {
          throw Error(path.string() + ":" + std::to_string(line_no) +
                      ": expected word2vec header '<vocab_count> <dimension>'");
        }
        dimension = dim;
        declared = count;
        words.reserve(std::min<std::size_t>(count, 1u << 20));
        rows.reserve(std::min<std::size_t>(count * dim, 1u << 26));
        continue;
      }
    }

    if (fields.size() < 2) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": row has no vector components");
    }
    const std::size_t comps = fields.size() - 1;
    if (dimension == 0) dimension = comps;
    if (comps != dimension) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": dimension mismatch, expected " +
                  std::to_string(dimension) + " components, found " + std::to_string(comps));
    }
    words.emplace_back(fields[0]);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      double v = 0.0;
      if (!parse_real(fields[k], v)) {
        throw Error(path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                    std::string(fields[k]) + "'");
      }
      rows.push_back(v);
    }
  }
  if (words.empty()) throw Error("embedding file '" + path.string() + "' has no vectors");
  if (declared && *declared != words.size()) {
    throw Error(path.string() + ": header declares " + std::to_string(*declared) + " vectors, found " +
                std::to_string(words.size()));
  }

  return EmbeddingModel::from_rows(std::move(name), dimension, words, std::move(rows), detected,
                                   summary);
}

std::optional<EmbeddingModel::Vector> lookup(const EmbeddingModel& model, std::string_view token) {
  auto idx = model.index_of(token);
  if (!idx) return std::nullopt;
  return model.row(*idx);
}

std::optional<std::vector<double>> phrase_vector(const EmbeddingModel& model,
                                                 std::span<const std::string> tokens) {
  std::vector<double> acc(model.dimension(), 0.0);
  std::size_t hits = 0;
  for (const auto& t : tokens) {
    auto v = lookup(model, t);
    if (!v) continue;
    ++hits;
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += (*v)[k];
  }
  if (hits == 0) return std::nullopt;
  double norm = 0.0;
  for (double x : acc) norm += x * x;
  norm = std::sqrt(norm);
  // The mean is acc / hits; dividing by its norm cancels the 1/hits factor.
  if (!(norm > 1e-12 * static_cast<double>(hits))) return std::nullopt;
  for (double& x : acc) x /= norm;
  return acc;
}

namespace {

struct Resolved {
  std::optional<std::uint32_t> row;  // single in-vocabulary token
  std::vector<double> owned;         // composed phrase
  bool found = false;

  std::span<const double> view(const EmbeddingModel& m) const {
    return row ? m.row(*row) : std::span<const double>(owned);
  }
};

Resolved resolve(const EmbeddingModel& model, std::string_view text) {
  Resolved r;
  if (text.find(' ') == std::string_view::npos) {
    r.row = model.index_of(text);
    r.found = r.row.has_value();
    return r;
  }
  std::vector<std::string> tokens;
  std::istringstream ss{std::string(text)};
  for (std::string t; ss >> t;) tokens.push_back(t);
  if (auto v = phrase_vector(model, tokens)) {
    r.owned = std::move(*v);
    r.found = true;
  }
  return r;
}

}  // namespace

Cosine cosine_similarity(const EmbeddingModel& model, std::string_view a, std::string_view b) {
  const Resolved ra = resolve(model, a);
  const Resolved rb = resolve(model, b);
  const auto oov = static_cast<OovSide>((ra.found ? 0 : 1) | (rb.found ? 0 : 2));
  if (oov != OovSide::none) return {0.0, oov};
  if (ra.row && rb.row && *ra.row == *rb.row) return {1.0, OovSide::none};

  const auto va = ra.view(model);
  const auto vb = rb.view(model);
  double s = 0.0;
  for (std::size_t k = 0; k < va.size(); ++k) s += va[k] * vb[k];
  return {std::clamp(s, -1.0, 1.0), OovSide::none};
}

}  // namespace cloze
