#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cloze/kernels.hpp"

namespace cloze {

enum class EmbeddingFormat { auto_detect, word2vec_text, glove_text };

std::string_view to_string(EmbeddingFormat f);
EmbeddingFormat parse_embedding_format(std::string_view s);

struct LoadSummary {
  std::size_t rows_read = 0;
  std::size_t duplicates = 0;  // later rows replaced an earlier word
};

/// Immutable store of unit-length word vectors. Row i of the matrix belongs to
/// words()[i]; lookups are O(1) by hash.
class EmbeddingModel {
 public:
  using Vector = std::span<const double>;

  EmbeddingModel() = default;

  /// Builds a model from raw rows. Rows are L2-normalized; a zero-norm row
  /// throws. Duplicate words keep the last row.
  static EmbeddingModel from_rows(std::string name, std::size_t dimension,
                                  const std::vector<std::string>& words,
                                  std::vector<double> raw_rows, EmbeddingFormat source,
                                  LoadSummary* summary = nullptr,
                                  kernels::Exec exec = kernels::Exec::parallel);

  const std::string& name() const { return name_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return words_.size(); }
  EmbeddingFormat source_format() const { return source_; }
  const std::vector<std::string>& words() const { return words_; }
  std::span<const double> matrix() const { return data_; }

  std::optional<std::uint32_t> index_of(std::string_view token) const;
  Vector row(std::uint32_t index) const { return {data_.data() + index * dimension_, dimension_}; }

 private:
  std::string name_;
  std::size_t dimension_ = 0;
  EmbeddingFormat source_ = EmbeddingFormat::glove_text;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<double> data_;
};

/// Parses a word2vec-text or GloVe-text file. In auto mode a first line made
/// of exactly two integers is taken as a word2vec header.
EmbeddingModel load_embeddings(const std::filesystem::path& path,
                               EmbeddingFormat format = EmbeddingFormat::auto_detect,
                               std::string name = {}, LoadSummary* summary = nullptr);

/// Stored unit vector for an already-normalized token, or nullopt if OOV.
std::optional<EmbeddingModel::Vector> lookup(const EmbeddingModel& model, std::string_view token);

/// Mean of the in-vocabulary token vectors renormalized to unit length;
/// nullopt when every token is OOV or the mean vanishes.
std::optional<std::vector<double>> phrase_vector(const EmbeddingModel& model,
                                                 std::span<const std::string> tokens);

enum class OovSide : std::uint8_t { none = 0, left = 1, right = 2, both = 3 };

struct Cosine {
  double value = 0.0;  // 0 when either side is OOV
  OovSide oov = OovSide::none;
  bool ok() const { return oov == OovSide::none; }
};

/// Cosine similarity of two normalized tokens or phrases (space-separated
/// tokens are composed with phrase_vector). Clamped to [-1, 1]; the same
/// vocabulary entry on both sides yields exactly 1.
Cosine cosine_similarity(const EmbeddingModel& model, std::string_view a, std::string_view b);

}  // namespace cloze
