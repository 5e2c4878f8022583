#include "doctest.h"

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cfgadapt/cfg.hpp"
#include "cfgadapt/features.hpp"

using namespace cfgadapt;
using feat::EmbeddingTable;
using feat::normalize;

namespace {

cfg::Instruction instr(std::string mnemonic,
                       std::vector<std::string> operands = {}) {
  cfg::Instruction in;
  in.mnemonic = std::move(mnemonic);
  in.operands = std::move(operands);
  return in;
}

cfg::RawCfg one_block(std::vector<cfg::Instruction> instrs) {
  cfg::RawCfg g;
  g.instructions = std::move(instrs);
  g.blocks.push_back({0, 0, static_cast<int>(g.instructions.size())});
  return g;
}

}  // namespace

TEST_CASE("normalize: large constant becomes [addr]") {
  auto n = normalize(instr("push", {"0x401000"}));
  CHECK(n.text() == "push [addr]");
}

TEST_CASE("normalize: small constant kept") {
  auto n = normalize(instr("mov", {"eax", "4"}));
  CHECK(n.text() == "mov eax, 4");
}

TEST_CASE("normalize: quoted string becomes [str]") {
  auto n = normalize(instr("push", {"\"hello\""}));
  CHECK(n.text() == "push [str]");
}

TEST_CASE("normalize: boundary at five hex digits") {
  // 0xffff has 4 hex digits, 0x10000 has 5
  CHECK(normalize(instr("mov", {"eax", "0xffff"})).text() ==
        "mov eax, 0xffff");
  CHECK(normalize(instr("mov", {"eax", "0x10000"})).text() ==
        "mov eax, [addr]");
}

TEST_CASE("normalize is idempotent on random operand strings") {
  std::mt19937_64 rng(3);
  const std::vector<std::string> pool = {
      "eax",        "0x401000", "4",       "\"text\"", "[ebx+0x1234f]",
      "dword ptr",  "0xdeadbeef", "fs:30h", "12345h",  "-8",
      "[str]",      "[addr]"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> ops;
    const int k = static_cast<int>(rng() % 3);
    for (int i = 0; i < k + 1; ++i) ops.push_back(pool[rng() % pool.size()]);
    auto once = normalize(instr("mov", ops));
    cfg::Instruction again;
    again.mnemonic = once.mnemonic;
    again.operands = once.operands;
    auto twice = normalize(again);
    CHECK(twice.text() == once.text());
  }
}

TEST_CASE("embedding table: parse, lookup, oov") {
  EmbeddingTable t = EmbeddingTable::parse(
      "#dim 2\n"
      "mov eax, 4\t1 0\n"
      "ret\t0 1\n"
      "#oov\t0.25 0.25\n");
  CHECK(t.dimension == 2);
  CHECK(t.lookup("ret")(1) == 1.0);
  CHECK(t.lookup("unknown thing")(0) == doctest::Approx(0.25));
}

TEST_CASE("embed_block_table: singleton mean is the vector itself") {
  EmbeddingTable t = EmbeddingTable::parse("#dim 2\nret\t3 -1\n");
  auto g = one_block({instr("ret")});
  feat::Vec v = feat::embed_block_table(g, g.blocks[0], t);
  CHECK(v(0) == 3.0);
  CHECK(v(1) == -1.0);
}

TEST_CASE("embed_block_table: mean of two one-hot vectors") {
  EmbeddingTable t = EmbeddingTable::parse(
      "#dim 2\nmov eax, 4\t1 0\nret\t0 1\n");
  auto g = one_block({instr("mov", {"eax", "4"}), instr("ret")});
  feat::Vec v = feat::embed_block_table(g, g.blocks[0], t);
  CHECK(v(0) == doctest::Approx(0.5));
  CHECK(v(1) == doctest::Approx(0.5));
}

TEST_CASE("embed_block_table: OOV instruction included in the mean") {
  EmbeddingTable t = EmbeddingTable::parse(
      "#dim 2\nret\t1 0\n#oov\t0 3\n");
  auto g = one_block({instr("ret"), instr("frobnicate"), instr("ret")});
  feat::Vec v = feat::embed_block_table(g, g.blocks[0], t);
  // oracle: (1,0) + (0,3) + (1,0) over 3
  CHECK(v(0) == doctest::Approx(2.0 / 3.0));
  CHECK(v(1) == doctest::Approx(1.0));
}

TEST_CASE("embed_block_table: order-invariant within the block") {
  EmbeddingTable t = EmbeddingTable::parse(
      "#dim 2\nmov eax, 4\t1 0\nret\t0 1\nnop\t2 2\n");
  auto g1 = one_block({instr("mov", {"eax", "4"}), instr("ret"), instr("nop")});
  auto g2 = one_block({instr("nop"), instr("ret"), instr("mov", {"eax", "4"})});
  feat::Vec a = feat::embed_block_table(g1, g1.blocks[0], t);
  feat::Vec b = feat::embed_block_table(g2, g2.blocks[0], t);
  CHECK((a - b).norm() == doctest::Approx(0.0));
}

TEST_CASE("embed_block_magic: mov/ret block counts") {
  auto g = one_block({instr("mov", {"eax", "1"}), instr("ret")});
  feat::Vec v = feat::embed_block_magic(g, g.blocks[0]);
  REQUIRE(v.size() == 11);
  CHECK(v(5) == 1);   // mov
  CHECK(v(6) == 1);   // termination
  CHECK(v(8) == 2);   // total instructions
  CHECK(v(10) == 2);  // instructions in block
  CHECK(v(9) == 0);   // no successors recorded
}

TEST_CASE("embed_block_magic: data declarations counted") {
  auto g = one_block({instr("dd", {"0"}), instr("dd", {"1"}),
                      instr("dd", {"2"})});
  feat::Vec v = feat::embed_block_magic(g, g.blocks[0]);
  CHECK(v(7) == 3);
}

TEST_CASE("embed_block_magic: out-degree from the edge multiset") {
  auto g = one_block({instr("jz", {"0x1000"})});
  g.blocks.push_back({1, 1, 0});
  g.edges = {{0, 1}, {0, 1}, {0, 0}};
  feat::Vec v = feat::embed_block_magic(g, g.blocks[0]);
  CHECK(v(9) == 3);
  CHECK(v(1) == 1);  // transfer
}

TEST_CASE("embed_block_hash: deterministic and dim-validated") {
  auto g = one_block({instr("mov", {"eax", "4"}), instr("ret")});
  feat::Vec a = feat::embed_block_hash(g, g.blocks[0], 16, 7);
  feat::Vec b = feat::embed_block_hash(g, g.blocks[0], 16, 7);
  CHECK((a - b).norm() == 0.0);
  feat::Vec c = feat::embed_block_hash(g, g.blocks[0], 16, 8);
  CHECK((a - c).norm() > 0.0);
  CHECK_THROWS_AS(feat::embed_block_hash(g, g.blocks[0], 0, 7),
                  std::invalid_argument);
}

TEST_CASE("embed_block_hash: dim=1 equals signed token count over instrs") {
  auto g = one_block({instr("mov", {"eax", "4"}), instr("ret")});
  const std::uint64_t seed = 11;
  // oracle: recompute the signed count with an independent FNV-1a
  auto fnv = [seed](const std::string& s) {
    std::uint64_t h = 14695981039346656037ull ^ (seed * 0x9e3779b97f4a7c15ull);
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  };
  double signed_count = 0.0;
  for (const std::string& tok : {"mov", "eax", "4", "ret"})
    signed_count += (fnv(tok) >> 63) ? -1.0 : 1.0;
  feat::Vec v = feat::embed_block_hash(g, g.blocks[0], 1, seed);
  CHECK(v(0) == doctest::Approx(signed_count / 2.0));
}

TEST_CASE("featurize_cfg: traced 3-block CFG") {
  auto raw = cfg::extract_cfg(
      "0x1000 mov eax, 1\n"
      "0x1006 jz 0x100b\n"
      "0x1008 add eax, 2\n"
      "0x100b ret\n");
  feat::Embedder emb;
  emb.kind = feat::EmbedderKind::Magic;
  auto g = feat::featurize_cfg(raw, emb, 1, 2, 0);
  CHECK(g.X.rows() == 3);
  CHECK(g.X.cols() == 11);
  int nonzero = 0;
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q)
      if (g.A(p, q) != 0.0) ++nonzero;
  CHECK(nonzero == 3);
  CHECK(g.label == 1);
  CHECK(g.Y(1) == 1.0);
}

TEST_CASE("featurize_cfg: single block means A = [[0]]") {
  auto raw = cfg::extract_cfg("1000 ret\n");
  feat::Embedder emb;
  emb.kind = feat::EmbedderKind::Magic;
  auto g = feat::featurize_cfg(raw, emb);
  CHECK(g.A.rows() == 1);
  CHECK(g.A(0, 0) == 0.0);
}

TEST_CASE("featurize_cfg: repeated edge gives multiplicity 2") {
  cfg::RawCfg raw = one_block({instr("nop")});
  raw.blocks.push_back({1, 1, 0});
  raw.edges = {{0, 1}, {0, 1}};
  feat::Embedder emb;
  emb.kind = feat::EmbedderKind::Magic;
  auto g = feat::featurize_cfg(raw, emb);
  CHECK(g.A(0, 1) == 2.0);
}

TEST_CASE("graph json round trip") {
  auto raw = cfg::extract_cfg("1000 jz 0x1005\n1002 ret\n1005 ret\n");
  feat::Embedder emb;
  emb.kind = feat::EmbedderKind::Hash;
  emb.dim = 4;
  auto g = feat::featurize_cfg(raw, emb, 0, 2, 1);
  auto h = feat::graph_from_json(feat::graph_to_json(g));
  CHECK((g.X - h.X).norm() == 0.0);
  CHECK((g.A - h.A).norm() == 0.0);
  CHECK(g.label == h.label);
  CHECK(g.domain == h.domain);
  CHECK((g.Y - h.Y).norm() == 0.0);
}

TEST_CASE("content features: opcode counts") {
  auto vocab = feat::ContentVocab::default_vocab();
  auto fv = feat::extract_content_features(
      "1000 mov eax, 1\n1003 mov ebx, 2\n1006 mov ecx, 3\n1009 ret\n", vocab);
  const int opc = fv.family_offset("opcode");
  auto idx = [&](const std::string& name) {
    auto it = std::find(vocab.opcodes.begin(), vocab.opcodes.end(), name);
    return opc + static_cast<int>(it - vocab.opcodes.begin());
  };
  CHECK(fv.values(idx("mov")) == 3);
  CHECK(fv.values(idx("ret")) == 1);
  CHECK(fv.values(idx("push")) == 0);
}

TEST_CASE("content features: section line proportion") {
  std::string text = ".text:\n";
  for (int i = 0; i < 3; ++i)
    text += std::to_string(0x1000 + i) + " nop\n";
  text += ".data:\n";
  for (int i = 0; i < 5; ++i)
    text += std::to_string(0x2000 + i) + " dd 0\n";
  // 10 lines total, 4 in .text (marker line plus three instructions)
  auto vocab = feat::ContentVocab::default_vocab();
  auto fv = feat::extract_content_features(text, vocab);
  const int sec = fv.family_offset("section");
  auto idx = [&](const std::string& name) {
    auto it = std::find(vocab.sections.begin(), vocab.sections.end(), name);
    return sec + static_cast<int>(it - vocab.sections.begin());
  };
  CHECK(fv.values(idx(".text")) == doctest::Approx(0.4));
  CHECK(fv.values(idx(".data")) == doctest::Approx(0.6));
}

TEST_CASE("content features: symbol counts of a bracket expression") {
  auto vocab = feat::ContentVocab::default_vocab();
  auto fv =
      feat::extract_content_features("1000 lea eax,[ebx+4]\n", vocab);
  const int sym = fv.family_offset("symbol");
  auto idx = [&](const std::string& s) {
    auto it = std::find(vocab.symbols.begin(), vocab.symbols.end(), s);
    return sym + static_cast<int>(it - vocab.symbols.begin());
  };
  CHECK(fv.values(idx("[")) == 1);
  CHECK(fv.values(idx("]")) == 1);
  CHECK(fv.values(idx("+")) == 1);
  CHECK(fv.values(idx("-")) == 0);
}

TEST_CASE("content features: counts are non-negative, size and line count") {
  auto vocab = feat::ContentVocab::default_vocab();
  std::string text = "1000 mov eax, CreateFileA\n1003 ret\n";
  auto fv = feat::extract_content_features(text, vocab);
  for (int i = 0; i < fv.values.size(); ++i) CHECK(fv.values(i) >= 0.0);
  CHECK(fv.values(fv.family_offset("size")) == static_cast<double>(text.size()));
  CHECK(fv.values(fv.family_offset("line_count")) == 2);
  const int api = fv.family_offset("api");
  auto it = std::find(vocab.apis.begin(), vocab.apis.end(), "CreateFileA");
  CHECK(fv.values(api + static_cast<int>(it - vocab.apis.begin())) == 1);
}
