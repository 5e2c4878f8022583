#include "cfgadapt/features.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cfgadapt::feat {

namespace {

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Scans `s` for numeric constants. Returns each constant's [begin,end) span
// and its parsed value; hex is recognized via 0x prefix, trailing 'h', or
// the presence of a-f digits.
struct NumberSpan {
  size_t begin, end;
  std::uint64_t value;
};

std::vector<NumberSpan> find_numbers(const std::string& s) {
  std::vector<NumberSpan> out;
  size_t i = 0;
  while (i < s.size()) {
    if (!std::isdigit(static_cast<unsigned char>(s[i])) ||
        (i > 0 && is_word_char(s[i - 1]))) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < s.size() &&
           (std::isxdigit(static_cast<unsigned char>(s[j])) || s[j] == 'x' ||
            s[j] == 'X'))
      ++j;
    bool trailing_h = j < s.size() && (s[j] == 'h' || s[j] == 'H') &&
                      (j + 1 >= s.size() || !is_word_char(s[j + 1]));
    std::string tok = s.substr(i, j - i) + (trailing_h ? "h" : "");
    size_t end = j + (trailing_h ? 1 : 0);

    bool hex = false;
    std::string digits = tok;
    if (digits.size() > 2 &&
        (digits.rfind("0x", 0) == 0 || digits.rfind("0X", 0) == 0)) {
      hex = true;
      digits = digits.substr(2);
    } else if (trailing_h) {
      hex = true;
      digits = digits.substr(0, digits.size() - 1);
    } else if (digits.find_first_of("abcdefABCDEF") != std::string::npos) {
      hex = true;
    }
    bool ok = !digits.empty() && digits.size() <= 16;
    std::uint64_t v = 0;
    if (ok) {
      for (char c : digits) {
        if (hex) {
          v = v * 16 + (std::isdigit(static_cast<unsigned char>(c))
                            ? c - '0'
                            : std::tolower(static_cast<unsigned char>(c)) -
                                  'a' + 10);
        } else {
          if (!std::isdigit(static_cast<unsigned char>(c))) {
            ok = false;
            break;
          }
          v = v * 10 + (c - '0');
        }
      }
    }
    if (ok) out.push_back({i, end, v});
    i = end > i ? end : i + 1;
  }
  return out;
}

int hex_digit_count(std::uint64_t v) {
  int n = 1;
  while (v >= 16) {
    v /= 16;
    ++n;
  }
  return n;
}

bool is_quoted_string(const std::string& s) {
  return s.size() >= 2 && (s.front() == '"' || s.front() == '\'') &&
         s.back() == s.front();
}

std::string normalize_operand(const std::string& op) {
  if (is_quoted_string(op)) return "[str]";
  std::string out;
  size_t pos = 0;
  for (const NumberSpan& ns : find_numbers(op)) {
    out += op.substr(pos, ns.begin - pos);
    if (hex_digit_count(ns.value) >= 5)
      out += "[addr]";
    else
      out += op.substr(ns.begin, ns.end - ns.begin);
    pos = ns.end;
  }
  out += op.substr(pos);
  return out;
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t seed) {
  std::uint64_t h = 14695981039346656037ull ^ (seed * 0x9e3779b97f4a7c15ull);
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

const std::set<std::string> kArithmetic = {
    "add", "sub", "mul", "imul", "div", "idiv", "inc", "dec", "neg",
    "adc", "sbb", "and", "or",   "xor", "not",  "shl", "shr", "sal",
    "sar", "rol", "ror"};

}  // namespace

std::string NormalizedInstruction::text() const {
  std::string s = mnemonic;
  for (size_t i = 0; i < operands.size(); ++i)
    s += (i == 0 ? " " : ", ") + operands[i];
  return s;
}

NormalizedInstruction normalize(const cfg::Instruction& instr) {
  NormalizedInstruction out;
  out.mnemonic = instr.mnemonic;
  out.operands.reserve(instr.operands.size());
  for (const std::string& op : instr.operands)
    out.operands.push_back(normalize_operand(op));
  return out;
}

EmbeddingTable EmbeddingTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding table: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

EmbeddingTable EmbeddingTable::parse(const std::string& text) {
  EmbeddingTable t;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("#dim", 0) == 0) {
      t.dimension = std::stoi(line.substr(4));
      continue;
    }
    size_t tab = line.find('\t');
    std::string key, vals;
    if (line.rfind("#oov", 0) == 0) {
      key = "#oov";
      vals = line.substr(tab == std::string::npos ? 4 : tab);
    } else {
      if (tab == std::string::npos)
        throw std::runtime_error("embedding table line missing tab: " + line);
      key = line.substr(0, tab);
      vals = line.substr(tab + 1);
    }
    std::istringstream vs(vals);
    std::vector<double> v;
    double x;
    while (vs >> x) v.push_back(x);
    if (t.dimension == 0) t.dimension = static_cast<int>(v.size());
    if (static_cast<int>(v.size()) != t.dimension)
      throw std::runtime_error("embedding dimension mismatch for: " + key);
    Vec vec = Eigen::Map<Vec>(v.data(), v.size());
    if (key == "#oov")
      t.oov_vector = vec;
    else
      t.entries[key] = vec;
  }
  if (t.dimension == 0) throw std::runtime_error("empty embedding table");
  if (t.oov_vector.size() == 0) t.oov_vector = Vec::Zero(t.dimension);
  return t;
}

Vec EmbeddingTable::lookup(const std::string& normalized_text) const {
  auto it = entries.find(normalized_text);
  return it != entries.end() ? it->second : oov_vector;
}

Vec embed_block_table(const cfg::RawCfg& cfg, const cfg::BasicBlock& block,
                      const EmbeddingTable& table) {
  Vec acc = Vec::Zero(table.dimension);
  if (block.count == 0) return acc;  // empty block: zero by convention
  for (int i = block.first; i < block.first + block.count; ++i)
    acc += table.lookup(normalize(cfg.instructions[i]).text());
  return acc / static_cast<double>(block.count);
}

Vec embed_block_magic(const cfg::RawCfg& cfg, const cfg::BasicBlock& block) {
  Vec v = Vec::Zero(11);
  for (int i = block.first; i < block.first + block.count; ++i) {
    const cfg::Instruction& in = cfg.instructions[i];
    for (const std::string& op : in.operands)
      if (!is_quoted_string(op)) v[0] += find_numbers(op).size();
    if (cfg::is_unconditional_jump(in.mnemonic) ||
        cfg::is_conditional_branch(in.mnemonic))
      v[1] += 1;
    if (cfg::is_call(in.mnemonic)) v[2] += 1;
    if (kArithmetic.count(in.mnemonic)) v[3] += 1;
    if (in.mnemonic == "cmp" || in.mnemonic == "test") v[4] += 1;
    if (in.mnemonic.rfind("mov", 0) == 0) v[5] += 1;
    if (cfg::is_return(in.mnemonic)) v[6] += 1;
    if (cfg::is_data_define(in.mnemonic)) v[7] += 1;
  }
  v[8] = block.count;  // total instructions (token-level)
  int degree = 0;
  for (auto [s, d] : cfg.edges)
    if (s == block.id) ++degree;
  v[9] = degree;         // offspring
  v[10] = block.count;   // instructions in the block
  return v;
}

Vec embed_block_hash(const cfg::RawCfg& cfg, const cfg::BasicBlock& block,
                     int dim, std::uint64_t seed) {
  if (dim <= 0) throw std::invalid_argument("hash embedder dim must be >= 1");
  Vec acc = Vec::Zero(dim);
  if (block.count == 0) return acc;
  for (int i = block.first; i < block.first + block.count; ++i) {
    NormalizedInstruction ni = normalize(cfg.instructions[i]);
    std::vector<std::string> tokens;
    tokens.push_back(ni.mnemonic);
    for (const std::string& op : ni.operands) tokens.push_back(op);
    for (const std::string& tok : tokens) {
      std::uint64_t h = fnv1a(tok, seed);
      int bucket = static_cast<int>(h % static_cast<std::uint64_t>(dim));
      double sign = (h >> 63) ? -1.0 : 1.0;
      acc[bucket] += sign;
    }
  }
  return acc / static_cast<double>(block.count);
}

Vec Embedder::operator()(const cfg::RawCfg& cfg,
                         const cfg::BasicBlock& block) const {
  switch (kind) {
    case EmbedderKind::Table:
      if (!table) throw std::invalid_argument("table embedder without table");
      return embed_block_table(cfg, block, *table);
    case EmbedderKind::Magic:
      return embed_block_magic(cfg, block);
    case EmbedderKind::Hash:
      return embed_block_hash(cfg, block, dim, seed);
  }
  throw std::logic_error("unknown embedder kind");
}

int Embedder::output_dim() const {
  switch (kind) {
    case EmbedderKind::Table:
      return table ? table->dimension : 0;
    case EmbedderKind::Magic:
      return 11;
    case EmbedderKind::Hash:
      return dim;
  }
  return 0;
}

AttributedGraph featurize_cfg(const cfg::RawCfg& cfg, const Embedder& embedder,
                              int label, int num_classes, int domain) {
  AttributedGraph g;
  g.sample_id = cfg.sample_id;
  const int n = static_cast<int>(cfg.blocks.size());
  const int m = embedder.output_dim();
  g.X = Mat::Zero(n, m);
  for (int i = 0; i < n; ++i) g.X.row(i) = embedder(cfg, cfg.blocks[i]);
  g.A = Mat::Zero(n, n);
  for (auto [s, d] : cfg.edges) g.A(s, d) += 1.0;
  g.label = label;
  g.domain = domain;
  if (label >= 0 && num_classes > 0) {
    g.Y = Vec::Zero(num_classes);
    g.Y[label] = 1.0;
  }
  return g;
}

std::string graph_to_json(const AttributedGraph& g) {
  nlohmann::ordered_json j;
  j["sample_id"] = g.sample_id;
  j["n"] = g.X.rows();
  j["m"] = g.X.cols();
  j["X"] = nlohmann::ordered_json::array();
  for (int i = 0; i < g.X.rows(); ++i) {
    std::vector<double> row(g.X.cols());
    for (int c = 0; c < g.X.cols(); ++c) row[c] = g.X(i, c);
    j["X"].push_back(row);
  }
  j["edges"] = nlohmann::ordered_json::array();
  for (int p = 0; p < g.A.rows(); ++p)
    for (int q = 0; q < g.A.cols(); ++q)
      if (g.A(p, q) != 0.0) j["edges"].push_back({p, q, g.A(p, q)});
  j["label"] = g.label;
  j["domain"] = g.domain;
  if (g.Y.size() > 0) {
    std::vector<double> y(g.Y.size());
    for (int i = 0; i < g.Y.size(); ++i) y[i] = g.Y[i];
    j["Y"] = y;
  }
  return j.dump();
}

AttributedGraph graph_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  AttributedGraph g;
  g.sample_id = j.at("sample_id").get<std::string>();
  const int n = j.at("n").get<int>();
  const int m = j.at("m").get<int>();
  g.X = Mat::Zero(n, m);
  int r = 0;
  for (const auto& row : j.at("X")) {
    int c = 0;
    for (const auto& x : row) g.X(r, c++) = x.get<double>();
    ++r;
  }
  g.A = Mat::Zero(n, n);
  for (const auto& e : j.at("edges"))
    g.A(e.at(0).get<int>(), e.at(1).get<int>()) = e.at(2).get<double>();
  g.label = j.value("label", -1);
  g.domain = j.value("domain", 0);
  if (j.contains("Y")) {
    auto y = j.at("Y").get<std::vector<double>>();
    g.Y = Eigen::Map<Vec>(y.data(), y.size());
  }
  return g;
}

ContentVocab ContentVocab::default_vocab() {
  ContentVocab v;
  v.symbols = {"-", "+", "*", "]", "[", "?", "@"};
  v.opcodes = {"mov",  "push", "pop",  "call", "ret",  "jmp", "jz",   "jnz",
               "je",   "jne",  "ja",   "jb",   "jg",   "jl",  "add",  "sub",
               "mul",  "imul", "div",  "idiv", "inc",  "dec", "and",  "or",
               "xor",  "not",  "shl",  "shr",  "sal",  "sar", "rol",  "ror",
               "cmp",  "test", "lea",  "nop",  "int",  "hlt", "movzx",
               "movsx", "xchg", "adc",  "sbb",  "neg",  "loop"};
  v.registers = {"eax", "ebx", "ecx", "edx", "esi", "edi", "ebp", "esp",
                 "ax",  "bx",  "cx",  "dx",  "al",  "bl",  "cl",  "dl",
                 "ah",  "bh",  "ch",  "dh",  "rax", "rbx", "rcx", "rdx",
                 "rsi", "rdi"};
  v.apis = {"CreateFileA",     "WriteFile",        "ReadFile",
            "CloseHandle",     "VirtualAlloc",     "VirtualProtect",
            "LoadLibraryA",    "GetProcAddress",   "ExitProcess",
            "RegOpenKeyExA",   "RegSetValueExA",   "CreateProcessA",
            "WinExec",         "URLDownloadToFileA", "InternetOpenA",
            "GetModuleHandleA", "Sleep",           "CreateThread",
            "WriteProcessMemory", "OpenProcess"};
  v.sections = {".text", ".data", ".bss", ".rdata", ".edata",
                ".idata", ".rsrc", ".tls", ".reloc"};
  v.data_defines = {"db", "dw", "dd", "dq"};
  return v;
}

std::string ContentVocab::to_json() const {
  nlohmann::ordered_json j;
  j["symbols"] = symbols;
  j["opcodes"] = opcodes;
  j["registers"] = registers;
  j["apis"] = apis;
  j["sections"] = sections;
  j["data_defines"] = data_defines;
  return j.dump(2);
}

ContentVocab ContentVocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocab: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  ContentVocab v;
  v.symbols = j.at("symbols").get<std::vector<std::string>>();
  v.opcodes = j.at("opcodes").get<std::vector<std::string>>();
  v.registers = j.at("registers").get<std::vector<std::string>>();
  v.apis = j.at("apis").get<std::vector<std::string>>();
  v.sections = j.at("sections").get<std::vector<std::string>>();
  v.data_defines = j.at("data_defines").get<std::vector<std::string>>();
  return v;
}

int ContentFeatureVector::family_offset(const std::string& name) const {
  for (const auto& [n, off] : family_offsets)
    if (n == name) return off;
  throw std::out_of_range("unknown feature family: " + name);
}

ContentFeatureVector extract_content_features(const std::string& text,
                                              const ContentVocab& vocab) {
  const int n_sym = static_cast<int>(vocab.symbols.size());
  const int n_opc = static_cast<int>(vocab.opcodes.size());
  const int n_reg = static_cast<int>(vocab.registers.size());
  const int n_api = static_cast<int>(vocab.apis.size());
  const int n_sec = static_cast<int>(vocab.sections.size());
  const int n_dd = static_cast<int>(vocab.data_defines.size());
  const int n_misc = 2;  // label lines, comment lines

  ContentFeatureVector out;
  int total = n_sym + n_opc + n_reg + n_api + n_sec + n_dd + 1 + 1 + n_misc;
  out.values = Vec::Zero(total);
  int off = 0;
  out.family_offsets = {{"symbol", off}};
  const int sym0 = off; off += n_sym;
  out.family_offsets.push_back({"opcode", off});
  const int opc0 = off; off += n_opc;
  out.family_offsets.push_back({"register", off});
  const int reg0 = off; off += n_reg;
  out.family_offsets.push_back({"api", off});
  const int api0 = off; off += n_api;
  out.family_offsets.push_back({"section", off});
  const int sec0 = off; off += n_sec;
  out.family_offsets.push_back({"data_define", off});
  const int dd0 = off; off += n_dd;
  out.family_offsets.push_back({"size", off});
  const int size0 = off; off += 1;
  out.family_offsets.push_back({"line_count", off});
  const int lc0 = off; off += 1;
  out.family_offsets.push_back({"misc", off});
  const int misc0 = off;

  Vec& v = out.values;
  std::map<std::string, int> section_lines;

  std::istringstream in(text);
  std::string raw;
  int line_count = 0;
  int current_section = -1;
  while (std::getline(in, raw)) {
    ++line_count;
    if (current_section >= 0) section_lines[vocab.sections[current_section]]++;
    std::string line = raw;
    size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    line = line.substr(a);
    if (line[0] == ';') {
      v[misc0 + 1] += 1;
      continue;
    }
    // section marker: `.text:` style line
    if (line[0] == '.' && line.back() == ':' &&
        line.find_first_of(" \t") == std::string::npos) {
      std::string name = line.substr(0, line.size() - 1);
      for (int s = 0; s < n_sec; ++s)
        if (vocab.sections[s] == name) {
          if (current_section != s) {
            // attribute the marker line to the new section
            if (current_section >= 0)
              section_lines[vocab.sections[current_section]]--;
            section_lines[name]++;
            current_section = s;
          }
          break;
        }
      continue;
    }
    if (line.back() == ':' && line.find_first_of(" \t") == std::string::npos) {
      v[misc0] += 1;
      continue;
    }

    for (int s = 0; s < n_sym; ++s) {
      char c = vocab.symbols[s][0];
      for (char lc : line)
        if (lc == c) v[sym0 + s] += 1;
    }

    std::istringstream ls(line);
    std::string addr_tok, mnem;
    ls >> addr_tok >> mnem;
    if (!mnem.empty()) {
      for (int o = 0; o < n_opc; ++o)
        if (vocab.opcodes[o] == mnem) v[opc0 + o] += 1;
      for (int d = 0; d < n_dd; ++d)
        if (vocab.data_defines[d] == mnem) v[dd0 + d] += 1;
    }
    std::string rest;
    std::getline(ls, rest);
    // word-boundary register matches in the operand text
    for (int r = 0; r < n_reg; ++r) {
      const std::string& reg = vocab.registers[r];
      size_t pos = 0;
      while ((pos = rest.find(reg, pos)) != std::string::npos) {
        bool lb = pos == 0 || !is_word_char(rest[pos - 1]);
        size_t end = pos + reg.size();
        bool rb = end >= rest.size() || !is_word_char(rest[end]);
        if (lb && rb) v[reg0 + r] += 1;
        pos = end;
      }
    }
    for (int a2 = 0; a2 < n_api; ++a2) {
      const std::string& api = vocab.apis[a2];
      size_t pos = 0;
      while ((pos = line.find(api, pos)) != std::string::npos) {
        v[api0 + a2] += 1;
        pos += api.size();
      }
    }
  }

  for (int s = 0; s < n_sec; ++s) {
    auto it = section_lines.find(vocab.sections[s]);
    if (it != section_lines.end() && line_count > 0)
      v[sec0 + s] = static_cast<double>(it->second) / line_count;
  }
  v[size0] = static_cast<double>(text.size());
  v[lc0] = line_count;
  return out;
}

}  // namespace cfgadapt::feat
