#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfgadapt::cfg {

/// Tags assigned to instructions during the first traversal pass.
enum Tag : unsigned {
  kStart = 1u << 0,
  kBranchTo = 1u << 1,
  kFallThrough = 1u << 2,
  kReturn = 1u << 3,
};

struct Instruction {
  std::uint64_t address = 0;
  std::string mnemonic;
  std::vector<std::string> operands;
  unsigned tags = 0;
  // Resolved control-transfer target (label or hex literal operand).
  std::optional<std::uint64_t> target;

  bool has_tag(Tag t) const { return (tags & t) != 0; }
};

struct BasicBlock {
  int id = 0;
  // Indices into the owning listing's instruction vector, contiguous.
  int first = 0;
  int count = 0;
};

struct RawCfg {
  std::string sample_id;
  std::vector<Instruction> instructions;
  std::vector<BasicBlock> blocks;
  // Edge multiset; (src,dst) may repeat.
  std::vector<std::pair<int, int>> edges;
};

struct ParseError : std::runtime_error {
  int line;
  ParseError(int line_, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_) + ": " + what),
        line(line_) {}
};

// Mnemonic classes shared with the feature extractors.
bool is_unconditional_jump(const std::string& mnemonic);
bool is_conditional_branch(const std::string& mnemonic);
bool is_call(const std::string& mnemonic);
bool is_return(const std::string& mnemonic);
bool is_data_define(const std::string& mnemonic);

std::vector<Instruction> parse_listing(const std::string& text);
void tag_pass(std::vector<Instruction>& instrs);
RawCfg build_blocks(std::vector<Instruction> tagged, std::string sample_id = "");
RawCfg extract_cfg(const std::string& text, std::string sample_id = "");

std::string to_json(const RawCfg& cfg);
RawCfg from_json(const std::string& json_text);

}  // namespace cfgadapt::cfg
