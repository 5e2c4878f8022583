#include "cfgadapt/cfg.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace cfgadapt::cfg {

namespace {

const std::set<std::string> kUncondJumps = {"jmp", "ljmp"};

const std::set<std::string> kCondBranches = {
    "ja",  "jae",  "jb",  "jbe",  "jc",   "jcxz", "jecxz", "je",   "jg",
    "jge", "jl",   "jle", "jna",  "jnae", "jnb",  "jnbe",  "jnc",  "jne",
    "jng", "jnge", "jnl", "jnle", "jno",  "jnp",  "jns",   "jnz",  "jo",
    "jp",  "jpe",  "jpo", "js",   "jz",   "loop", "loope", "loopne",
    "loopnz", "loopz"};

const std::set<std::string> kCalls = {"call", "lcall"};

const std::set<std::string> kReturns = {"ret", "retn", "retf", "iret",
                                        "iretd", "hlt"};

const std::set<std::string> kDataDefines = {"db", "dw", "dd", "dq", "dt"};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// Strips a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  char quote = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (in_str) {
      if (c == quote) in_str = false;
    } else if (c == '"' || c == '\'') {
      in_str = true;
      quote = c;
    } else if (c == ';') {
      return s.substr(0, i);
    }
  }
  return s;
}

bool parse_hex(const std::string& tok, std::uint64_t* out) {
  std::string t = tok;
  if (t.size() > 2 && (t.rfind("0x", 0) == 0 || t.rfind("0X", 0) == 0))
    t = t.substr(2);
  else if (t.size() > 1 && (t.back() == 'h' || t.back() == 'H'))
    t = t.substr(0, t.size() - 1);
  if (t.empty() || t.size() > 16) return false;
  std::uint64_t v = 0;
  for (char c : t) {
    if (!std::isxdigit(static_cast<unsigned char>(c))) return false;
    v = v * 16 + (std::isdigit(static_cast<unsigned char>(c))
                      ? c - '0'
                      : std::tolower(static_cast<unsigned char>(c)) - 'a' + 10);
  }
  *out = v;
  return true;
}

// Splits the operand field on commas outside quotes.
std::vector<std::string> split_operands(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  bool in_str = false;
  char quote = 0;
  for (char c : s) {
    if (in_str) {
      cur += c;
      if (c == quote) in_str = false;
    } else if (c == '"' || c == '\'') {
      in_str = true;
      quote = c;
      cur += c;
    } else if (c == ',') {
      std::string t = strip(cur);
      if (!t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur += c;
    }
  }
  std::string t = strip(cur);
  if (!t.empty()) out.push_back(t);
  return out;
}

bool is_transfer(const Instruction& in) {
  return is_unconditional_jump(in.mnemonic) ||
         is_conditional_branch(in.mnemonic) || is_call(in.mnemonic) ||
         is_return(in.mnemonic);
}

}  // namespace

bool is_unconditional_jump(const std::string& m) {
  return kUncondJumps.count(lower(m)) > 0;
}
bool is_conditional_branch(const std::string& m) {
  return kCondBranches.count(lower(m)) > 0;
}
bool is_call(const std::string& m) { return kCalls.count(lower(m)) > 0; }
bool is_return(const std::string& m) { return kReturns.count(lower(m)) > 0; }
bool is_data_define(const std::string& m) {
  return kDataDefines.count(lower(m)) > 0;
}

std::vector<Instruction> parse_listing(const std::string& text) {
  struct PendingLabel {
    std::string name;
  };
  std::vector<Instruction> instrs;
  std::vector<std::string> pending_labels;
  std::unordered_map<std::string, std::uint64_t> label_addr;
  // label name -> indices of instructions whose target awaits resolution
  std::unordered_map<std::string, std::vector<size_t>> unresolved;
  std::set<std::uint64_t> seen_addrs;

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = strip(strip_comment(raw));
    if (line.empty()) continue;

    // Label line: single token ending in ':'.
    if (line.back() == ':' && line.find_first_of(" \t") == std::string::npos) {
      pending_labels.push_back(line.substr(0, line.size() - 1));
      continue;
    }

    std::istringstream ls(line);
    std::string addr_tok, mnem;
    ls >> addr_tok >> mnem;
    if (mnem.empty())
      throw ParseError(lineno, "expected '<hex-address> <mnemonic>'");
    std::uint64_t addr = 0;
    if (!parse_hex(addr_tok, &addr))
      throw ParseError(lineno, "malformed address '" + addr_tok + "'");
    if (!seen_addrs.insert(addr).second)
      throw ParseError(lineno, "duplicate address '" + addr_tok + "'");
    if (!instrs.empty() && addr <= instrs.back().address)
      throw ParseError(lineno, "address not strictly increasing");

    Instruction instr;
    instr.address = addr;
    instr.mnemonic = lower(mnem);
    std::string rest;
    std::getline(ls, rest);
    instr.operands = split_operands(strip(rest));

    for (const auto& lbl : pending_labels) label_addr[lbl] = addr;
    pending_labels.clear();

    // Resolve control-transfer targets: first operand as hex literal or label.
    if ((is_unconditional_jump(instr.mnemonic) ||
         is_conditional_branch(instr.mnemonic) || is_call(instr.mnemonic)) &&
        !instr.operands.empty()) {
      const std::string& op = instr.operands.front();
      std::uint64_t tgt = 0;
      auto it = label_addr.find(op);
      if (it != label_addr.end()) {
        instr.target = it->second;
      } else if (parse_hex(op, &tgt)) {
        instr.target = tgt;
      } else {
        // forward label reference, or symbolic (register/memory) target
        unresolved[op].push_back(instrs.size());
      }
    }
    instrs.push_back(std::move(instr));
  }

  for (auto& [name, idxs] : unresolved) {
    auto it = label_addr.find(name);
    if (it == label_addr.end()) continue;  // symbolic, stays unresolved
    for (size_t i : idxs) instrs[i].target = it->second;
  }
  return instrs;
}

void tag_pass(std::vector<Instruction>& instrs) {
  if (instrs.empty()) return;
  std::unordered_map<std::uint64_t, size_t> by_addr;
  for (size_t i = 0; i < instrs.size(); ++i) by_addr[instrs[i].address] = i;

  instrs[0].tags |= kStart;
  for (size_t i = 0; i < instrs.size(); ++i) {
    Instruction& in = instrs[i];
    bool uncond = is_unconditional_jump(in.mnemonic);
    bool cond = is_conditional_branch(in.mnemonic);
    bool call = is_call(in.mnemonic);
    bool ret = is_return(in.mnemonic);
    if (!(uncond || cond || call || ret)) continue;

    if (ret) in.tags |= kReturn;
    if ((uncond || cond) && in.target) {
      auto it = by_addr.find(*in.target);
      // target outside the listing is recorded as external; no tag, no error
      if (it != by_addr.end()) instrs[it->second].tags |= kStart | kBranchTo;
    }
    if (i + 1 < instrs.size()) {
      instrs[i + 1].tags |= kStart;
      // No fall-through successor after an unconditional jump or return.
      if (cond || call) instrs[i + 1].tags |= kFallThrough;
    }
  }
}

RawCfg build_blocks(std::vector<Instruction> tagged, std::string sample_id) {
  RawCfg cfg;
  cfg.sample_id = std::move(sample_id);
  cfg.instructions = std::move(tagged);
  if (cfg.instructions.empty()) return cfg;

  std::unordered_map<std::uint64_t, int> block_of_addr;
  for (size_t i = 0; i < cfg.instructions.size(); ++i) {
    if (i == 0 || cfg.instructions[i].has_tag(kStart)) {
      BasicBlock b;
      b.id = static_cast<int>(cfg.blocks.size());
      b.first = static_cast<int>(i);
      b.count = 0;
      cfg.blocks.push_back(b);
    }
    cfg.blocks.back().count++;
    block_of_addr[cfg.instructions[i].address] =
        static_cast<int>(cfg.blocks.size()) - 1;
  }

  for (const BasicBlock& b : cfg.blocks) {
    const Instruction& last = cfg.instructions[b.first + b.count - 1];
    bool uncond = is_unconditional_jump(last.mnemonic);
    bool cond = is_conditional_branch(last.mnemonic);
    bool call = is_call(last.mnemonic);
    bool ret = is_return(last.mnemonic);

    if ((uncond || cond) && last.target) {
      auto it = block_of_addr.find(*last.target);
      if (it != block_of_addr.end()) cfg.edges.emplace_back(b.id, it->second);
    }
    bool falls_through = !ret && !uncond;
    (void)call;  // calls fall through; no interprocedural edge
    if (falls_through && b.id + 1 < static_cast<int>(cfg.blocks.size()))
      cfg.edges.emplace_back(b.id, b.id + 1);
  }
  return cfg;
}

RawCfg extract_cfg(const std::string& text, std::string sample_id) {
  std::vector<Instruction> instrs = parse_listing(text);
  tag_pass(instrs);
  return build_blocks(std::move(instrs), std::move(sample_id));
}

std::string to_json(const RawCfg& cfg) {
  nlohmann::ordered_json j;
  j["sample_id"] = cfg.sample_id;
  j["blocks"] = nlohmann::ordered_json::array();
  for (const BasicBlock& b : cfg.blocks) {
    nlohmann::ordered_json jb;
    jb["id"] = b.id;
    jb["instrs"] = nlohmann::ordered_json::array();
    for (int i = b.first; i < b.first + b.count; ++i) {
      const Instruction& in = cfg.instructions[i];
      nlohmann::ordered_json ji;
      ji["addr"] = in.address;
      ji["mnemonic"] = in.mnemonic;
      ji["operands"] = in.operands;
      ji["tags"] = in.tags;
      if (in.target) ji["target"] = *in.target;
      jb["instrs"].push_back(std::move(ji));
    }
    j["blocks"].push_back(std::move(jb));
  }
  j["edges"] = nlohmann::ordered_json::array();
  for (auto [s, d] : cfg.edges) j["edges"].push_back({s, d});
  return j.dump(2);
}

RawCfg from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  RawCfg cfg;
  cfg.sample_id = j.at("sample_id").get<std::string>();
  for (const auto& jb : j.at("blocks")) {
    BasicBlock b;
    b.id = jb.at("id").get<int>();
    b.first = static_cast<int>(cfg.instructions.size());
    for (const auto& ji : jb.at("instrs")) {
      Instruction in;
      in.address = ji.at("addr").get<std::uint64_t>();
      in.mnemonic = ji.at("mnemonic").get<std::string>();
      in.operands = ji.at("operands").get<std::vector<std::string>>();
      in.tags = ji.value("tags", 0u);
      if (ji.contains("target"))
        in.target = ji.at("target").get<std::uint64_t>();
      cfg.instructions.push_back(std::move(in));
      b.count++;
    }
    cfg.blocks.push_back(b);
  }
  for (const auto& je : j.at("edges"))
    cfg.edges.emplace_back(je.at(0).get<int>(), je.at(1).get<int>());
  return cfg;
}

}  // namespace cfgadapt::cfg
