#pragma once

// Synthetic end-to-end dataset: a 200-word passage, student response sheets,
// judge sessions sampled around a planted ground-truth ordering, and toy
// embedding models whose agreement with that ordering is controlled by a
// per-model noise level.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cloze/cloze_core.hpp"
#include "cloze/judge_session.hpp"

namespace cloze::fixture {

struct ModelSpec {
  std::string name;
  double angle_noise = 0.1;  // radians of jitter on each candidate's angle to the key
  std::size_t oov_drop = 0;  // selected-gap candidates left out of the vocabulary
};

struct Options {
  std::uint64_t seed = 20240501;
  std::size_t students = 24;
  std::size_t judges = 12;
  std::size_t selected_gaps = 19;  // gaps built with more than 10 distinct answers
  std::size_t dimension = 16;
  double judge_noise = 1.0;  // std-dev, in rank positions, of each judge's perturbation
  double blank_rate = 0.06;
  std::vector<ModelSpec> models = {{"glove_toy", 0.05, 0},
                                   {"wang2vec_toy", 0.45, 0},
                                   {"spacy_toy", 0.8, 2}};
};

struct EmbeddingFile {
  std::string name;
  std::vector<std::string> words;
  std::vector<std::vector<double>> vectors;
};

struct Dataset {
  std::string passage;
  ClozeTest test;
  std::vector<ResponseSheet> sheets;
  std::vector<JudgeSession> sessions;
  std::vector<EmbeddingFile> models;
  std::vector<int> selected;                       // gaps engineered to pass the filter
  std::map<int, std::vector<std::string>> truth;  // planted best-to-worst order
};

/// The bundled 200-word passage.
const std::string& passage();

Dataset make_dataset(const Options& opts = {});

/// Writes passage.txt, test.json, responses.csv, judges/judge_*.json and
/// models/<name>.txt (GloVe text format) under `dir`.
void write_dataset(const Dataset& d, const std::filesystem::path& dir);

}  // namespace cloze::fixture
