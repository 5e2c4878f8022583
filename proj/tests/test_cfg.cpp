#include "doctest.h"

#include <set>

#include "cfgadapt/cfg.hpp"

using namespace cfgadapt::cfg;

namespace {

std::multiset<std::pair<int, int>> edge_set(const RawCfg& g) {
  return {g.edges.begin(), g.edges.end()};
}

}  // namespace

TEST_CASE("parse_listing: empty input") {
  CHECK(parse_listing("").empty());
  CHECK(parse_listing("\n; only a comment\n\n").empty());
}

TEST_CASE("parse_listing: single line") {
  auto instrs = parse_listing("1000 ret");
  REQUIRE(instrs.size() == 1);
  CHECK(instrs[0].address == 0x1000);
  CHECK(instrs[0].mnemonic == "ret");
  CHECK(instrs[0].operands.empty());
  CHECK(instrs[0].tags == 0);
}

TEST_CASE("parse_listing: label resolves to the next instruction address") {
  const char* text =
      "0x1000 mov eax, 1\n"
      "0x1003 jz L1\n"
      "0x1005 add eax, 2\n"
      "L1:\n"
      "0x100b ret\n";
  auto instrs = parse_listing(text);
  REQUIRE(instrs.size() == 4);
  REQUIRE(instrs[1].target.has_value());
  CHECK(*instrs[1].target == 0x100b);
}

TEST_CASE("parse_listing: hex-literal branch target") {
  auto instrs = parse_listing("1000 jmp 0x1004\n1002 nop\n1004 ret\n");
  REQUIRE(instrs[0].target.has_value());
  CHECK(*instrs[0].target == 0x1004);
}

TEST_CASE("parse_listing: malformed address reports the line number") {
  try {
    parse_listing("1000 nop\nzzz nop\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
}

TEST_CASE("parse_listing: duplicate address rejected") {
  CHECK_THROWS_AS(parse_listing("1000 nop\n1000 nop\n"), ParseError);
}

TEST_CASE("tag_pass: linear code tags only instruction 0 with start") {
  auto instrs = parse_listing("1000 mov eax, 1\n1003 add eax, 2\n1006 nop\n");
  tag_pass(instrs);
  CHECK(instrs[0].has_tag(kStart));
  for (size_t i = 1; i < instrs.size(); ++i) {
    CHECK_FALSE(instrs[i].has_tag(kStart));
    CHECK(instrs[i].tags == 0);
  }
}

TEST_CASE("tag_pass: unconditional jump forces no fall-through") {
  // jmp X followed by Y: Y start, X start+branchTo, Y not fallThrough
  auto instrs = parse_listing(
      "1000 jmp 0x1006\n"
      "1003 mov eax, 1\n"  // Y
      "1006 ret\n");       // X
  tag_pass(instrs);
  CHECK(instrs[1].has_tag(kStart));
  CHECK_FALSE(instrs[1].has_tag(kFallThrough));
  CHECK(instrs[2].has_tag(kStart));
  CHECK(instrs[2].has_tag(kBranchTo));
}

TEST_CASE("tag_pass: conditional branch fall-through and branch target") {
  auto instrs = parse_listing(
      "0x1000 mov eax, 1\n"
      "0x1006 jz 0x100b\n"
      "0x1008 add eax, 2\n"
      "0x100b ret\n");
  tag_pass(instrs);
  CHECK(instrs[2].has_tag(kStart));
  CHECK(instrs[2].has_tag(kFallThrough));
  CHECK(instrs[3].has_tag(kStart));
  CHECK(instrs[3].has_tag(kBranchTo));
  CHECK(instrs[3].has_tag(kReturn));
}

TEST_CASE("tag_pass: external branch target is kept, no error") {
  auto instrs = parse_listing("1000 jmp 0x9999\n1003 ret\n");
  tag_pass(instrs);
  CHECK(*instrs[0].target == 0x9999);
  CHECK(instrs[1].has_tag(kStart));
}

TEST_CASE("build_blocks: straight-line code ending in ret") {
  auto g = extract_cfg("1000 mov eax, 1\n1003 add eax, 2\n1006 ret\n", "s");
  CHECK(g.blocks.size() == 1);
  CHECK(g.edges.empty());
}

TEST_CASE("build_blocks: conditional branch makes 3 blocks") {
  auto g = extract_cfg(
      "0x1000 mov eax, 1\n"
      "0x1006 jz 0x100b\n"
      "0x1008 add eax, 2\n"
      "0x100b ret\n");
  CHECK(g.blocks.size() == 3);
  std::multiset<std::pair<int, int>> want = {{0, 1}, {0, 2}, {1, 2}};
  CHECK(edge_set(g) == want);
}

TEST_CASE("build_blocks: self-loop jmp") {
  auto g = extract_cfg("1000 jmp 0x1000\n");
  CHECK(g.blocks.size() == 1);
  std::multiset<std::pair<int, int>> want = {{0, 0}};
  CHECK(edge_set(g) == want);
}

TEST_CASE("build_blocks: call falls through without interprocedural edge") {
  auto g = extract_cfg(
      "1000 call 0x1006\n"
      "1003 mov eax, 1\n"
      "1006 ret\n");
  // call ends block 0 with a fall-through edge only; the callee is not a
  // branch target, so no block boundary and no edge at 0x1006
  CHECK(g.blocks.size() == 2);
  std::multiset<std::pair<int, int>> want = {{0, 1}};
  CHECK(edge_set(g) == want);
}

TEST_CASE("build_blocks: unresolvable indirect target yields no edge") {
  auto g = extract_cfg("1000 jmp eax\n1002 ret\n");
  CHECK(g.blocks.size() == 2);
  CHECK(g.edges.empty());
}

TEST_CASE("extract_cfg: partition property") {
  const char* listings[] = {
      "1000 ret\n",
      "1000 mov eax, 1\n1003 jz 0x1008\n1005 nop\n1008 ret\n",
      "1000 call 0x100a\n1003 jne 0x1000\n1005 nop\n1006 jmp 0x1000\n"
      "1009 nop\n100a ret\n",
  };
  for (const char* text : listings) {
    auto g = extract_cfg(text);
    int covered = 0;
    for (const auto& b : g.blocks) covered += b.count;
    CHECK(covered == static_cast<int>(g.instructions.size()));
    for (const auto& [src, dst] : g.edges) {
      CHECK(src >= 0);
      CHECK(src < static_cast<int>(g.blocks.size()));
      CHECK(dst >= 0);
      CHECK(dst < static_cast<int>(g.blocks.size()));
    }
  }
}

TEST_CASE("extract_cfg: determinism and JSON round trip") {
  const char* text =
      "0x1000 push ebp\n"
      "0x1001 cmp eax, 0\n"
      "0x1004 jle 0x100c\n"
      "0x1006 call 0x2000\n"
      "0x1009 jmp 0x1001\n"
      "0x100c ret\n";
  auto g1 = extract_cfg(text, "x");
  auto g2 = extract_cfg(text, "x");
  CHECK(to_json(g1) == to_json(g2));
  auto g3 = from_json(to_json(g1));
  CHECK(to_json(g3) == to_json(g1));
  CHECK(g3.blocks.size() == g1.blocks.size());
  CHECK(edge_set(g3) == edge_set(g1));
}

TEST_CASE("multiple returns each terminate their block") {
  auto g = extract_cfg(
      "1000 jz 0x1005\n"
      "1002 ret\n"
      "1005 ret\n");
  CHECK(g.blocks.size() == 3);
  std::multiset<std::pair<int, int>> want = {{0, 1}, {0, 2}};
  CHECK(edge_set(g) == want);
}
