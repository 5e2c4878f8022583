#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cfgadapt/cfg.hpp"

namespace cfgadapt::feat {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct NormalizedInstruction {
  std::string mnemonic;
  std::vector<std::string> operands;

  std::string text() const;
};

NormalizedInstruction normalize(const cfg::Instruction& instr);

/// Instruction-text -> embedding map loaded from a `#dim m` header file.
struct EmbeddingTable {
  int dimension = 0;
  std::map<std::string, Vec> entries;
  Vec oov_vector;

  static EmbeddingTable load(const std::string& path);
  static EmbeddingTable parse(const std::string& text);
  Vec lookup(const std::string& normalized_text) const;
};

struct AttributedGraph {
  std::string sample_id;
  Mat X;                       // n x m node attributes
  Mat A;                       // n x n edge multiplicities
  Eigen::VectorXd Y;           // one-hot class label (may be empty)
  int label = -1;              // argmax of Y, -1 when unlabeled
  int domain = 0;              // 0 = source, 1 = target
};

Vec embed_block_table(const cfg::RawCfg& cfg, const cfg::BasicBlock& block,
                      const EmbeddingTable& table);
Vec embed_block_magic(const cfg::RawCfg& cfg, const cfg::BasicBlock& block);
Vec embed_block_hash(const cfg::RawCfg& cfg, const cfg::BasicBlock& block,
                     int dim, std::uint64_t seed);

enum class EmbedderKind { Table, Magic, Hash };

struct Embedder {
  EmbedderKind kind = EmbedderKind::Hash;
  const EmbeddingTable* table = nullptr;  // Table kind
  int dim = 16;                           // Hash kind
  std::uint64_t seed = 0;                 // Hash kind

  Vec operator()(const cfg::RawCfg& cfg, const cfg::BasicBlock& block) const;
  int output_dim() const;
};

AttributedGraph featurize_cfg(const cfg::RawCfg& cfg, const Embedder& embedder,
                              int label = -1, int num_classes = 0,
                              int domain = 0);

std::string graph_to_json(const AttributedGraph& g);
AttributedGraph graph_from_json(const std::string& json_text);

/// Vocabulary config for whole-sample content features.
struct ContentVocab {
  std::vector<std::string> symbols;    // single-char symbols, counted
  std::vector<std::string> opcodes;
  std::vector<std::string> registers;
  std::vector<std::string> apis;
  std::vector<std::string> sections;   // per-section line proportions
  std::vector<std::string> data_defines;

  static ContentVocab default_vocab();
  static ContentVocab load(const std::string& path);
  std::string to_json() const;
};

struct ContentFeatureVector {
  // Family layout, in order: symbol, opcode, register, api, section,
  // data_define, size, line_count, misc.
  Vec values;
  std::vector<std::pair<std::string, int>> family_offsets;

  int family_offset(const std::string& name) const;
};

ContentFeatureVector extract_content_features(const std::string& text,
                                              const ContentVocab& vocab);

}  // namespace cfgadapt::feat
