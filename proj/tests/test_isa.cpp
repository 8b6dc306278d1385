// Copyright 2026 The irtsim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>

#include <gtest/gtest.h>

#include <irtsim/assembler.hpp>
#include <irtsim/isa.hpp>

#include "support.hpp"

using namespace irtsim;

namespace
{

  uint32_t wordAt(const MemoryImage& img, uint64_t addr)
  {
    for (const Segment& s : img.segments)
      if (addr >= s.address && addr + 4 <= s.end())
        {
          uint64_t o = addr - s.address;
          return uint32_t(s.bytes[o]) | uint32_t(s.bytes[o + 1]) << 8 | uint32_t(s.bytes[o + 2]) << 16 |
                 uint32_t(s.bytes[o + 3]) << 24;
        }
    ADD_FAILURE() << "no word at " << hex64(addr);
    return 0;
  }

  uint32_t assembleOne(const std::string& line, uint64_t at = addr::ramBase)
  {
    MemoryImage img = assemble(".org " + hex64(at) + "\n" + line + "\n");
    return wordAt(img, at);
  }

}  // namespace

TEST(Decode, CanonicalNop)
{
  auto in = decode(0x00000013);
  ASSERT_TRUE(in);
  EXPECT_EQ(in->mnemonic, Mnemonic::Addi);
  EXPECT_EQ(in->rd, 0);
  EXPECT_EQ(in->rs1, 0);
  EXPECT_EQ(in->imm, 0);
}

TEST(Decode, AddRegisterForm)
{
  // add x10, x10, x11: funct7=0 rs2=11 rs1=10 funct3=0 rd=10 opcode=0x33
  uint32_t hand = (0u << 25) | (11u << 20) | (10u << 15) | (0u << 12) | (10u << 7) | 0x33u;
  ASSERT_EQ(hand, 0x00B50533u);
  auto in = decode(hand);
  ASSERT_TRUE(in);
  EXPECT_EQ(in->mnemonic, Mnemonic::Add);
  EXPECT_EQ(in->rd, 10);
  EXPECT_EQ(in->rs1, 10);
  EXPECT_EQ(in->rs2, 11);
}

TEST(Decode, AllOnesIsIllegal)
{
  EXPECT_FALSE(decode(0xFFFFFFFF));
  EXPECT_FALSE(decode(0x00000000));
}

TEST(Assembler, NopWord)
{
  EXPECT_EQ(assembleOne("nop"), 0x00000013u);
}

TEST(Assembler, BranchForwardEight)
{
  // B-type, offset 8: imm[4:1]=0b0100 in bits 11:8, everything else zero.
  uint32_t hand = (6u << 20) | (5u << 15) | (0u << 12) | (0b0100u << 8) | 0x63u;
  MemoryImage img = assemble("_start:\n beq x5, x6, label\n nop\nlabel:\n nop\n");
  EXPECT_EQ(wordAt(img, addr::ramBase), hand);
  EXPECT_EQ(hand, 0x00628463u);
}

TEST(Assembler, BackwardBranchAndJal)
{
  MemoryImage img = assemble("top:\n nop\n nop\n bne a0, zero, top\n jal ra, top\n");
  auto b = decode(wordAt(img, addr::ramBase + 8));
  ASSERT_TRUE(b);
  EXPECT_EQ(b->imm, -8);
  auto j = decode(wordAt(img, addr::ramBase + 12));
  ASSERT_TRUE(j);
  EXPECT_EQ(j->mnemonic, Mnemonic::Jal);
  EXPECT_EQ(j->imm, -12);
  EXPECT_EQ(j->rd, 1);
}

TEST(Assembler, ImmediateOutOfRange)
{
  EXPECT_THROW(assemble("addi x1, x0, 5000\n"), AsmError);
  EXPECT_NO_THROW(assemble("addi x1, x0, 2047\n"));
  EXPECT_NO_THROW(assemble("addi x1, x0, -2048\n"));
  EXPECT_THROW(assemble("addi x1, x0, -2049\n"), AsmError);
}

TEST(Assembler, ErrorsCarryLineNumbers)
{
  try
    {
      assemble("nop\nnop\nfrobnicate x1\n");
      FAIL() << "expected AsmError";
    }
  catch (const AsmError& e)
    {
      EXPECT_EQ(e.line(), 3);
    }
  EXPECT_THROW(assemble("j nowhere\n"), AsmError);
  EXPECT_THROW(assemble("a:\na:\n"), AsmError);
  EXPECT_THROW(assemble("add x1, x2\n"), AsmError);
  EXPECT_THROW(assemble("add x1, x2, x32\n"), AsmError);
}

TEST(Assembler, DirectivesAndSymbols)
{
  MemoryImage img = assemble(R"(
    .equ BASE, 0x80001000
    .org BASE
  data:
    .dword 0x1122334455667788, data + 8
    .word 0xdeadbeef
    .align 3
  after:
    .zero 16
  )");
  EXPECT_EQ(img.requireSymbol("data"), 0x80001000u);
  EXPECT_EQ(img.requireSymbol("after"), 0x80001018u);
  EXPECT_EQ(img.requireSymbol("BASE"), 0x80001000u);
  ASSERT_EQ(img.segments.size(), 1u);
  EXPECT_EQ(img.segments[0].bytes.size(), 0x28u);
  EXPECT_EQ(wordAt(img, 0x80001008), 0x80001008u);
  EXPECT_EQ(wordAt(img, 0x80001010), 0xdeadbeefu);
}

TEST(Disassembler, Basics)
{
  EXPECT_EQ(disassemble(0x00000013, 0), "addi x0, x0, 0");
  EXPECT_EQ(disassemble(0xFFFFFFFF, 0), ".word 0xffffffff");
  EXPECT_EQ(disassemble(0x00B50533, 0), "add x10, x10, x11");
}

TEST(Disassembler, RoundTripCanonicalWords)
{
  // Every instruction the assembler can emit, fuzzed over random field
  // values: the disassembly must assemble back to the same word.
  std::mt19937_64 rng(7);
  uint64_t checked = 0;
  for (int i = 0; i < 400000 && checked < 20000; ++i)
    {
      uint32_t w = uint32_t(rng());
      auto in = decode(w);
      if (!in || encode(*in) != w)
        continue;
      uint64_t at = addr::ramBase + 0x100000;
      std::string text = disassemble(w, at);
      uint32_t back = 0;
      try
        {
          back = assembleOne(text, at);
        }
      catch (const std::exception& e)
        {
          ADD_FAILURE() << hex64(w) << " -> '" << text << "': " << e.what();
          continue;
        }
      ASSERT_EQ(back, w) << "'" << text << "'";
      ++checked;
    }
  EXPECT_GT(checked, 5000u);
}

TEST(Disassembler, RoundTripPerMnemonic)
{
  // Random operands for each mnemonic through encode so rare opcodes are
  // covered too.
  std::mt19937_64 rng(11);
  for (const auto& op : opTable)
    for (int k = 0; k < 50; ++k)
      {
        uint32_t w = uint32_t(rng());
        w = (w & ~0x7fu) | op.opcode;
        w = (w & ~(7u << 12)) | (op.funct3 << 12);
        auto in = decode(w);
        if (!in || in->mnemonic != op.mnemonic || encode(*in) != w)
          continue;
        uint64_t at = addr::ramBase + 0x200000;
        EXPECT_EQ(assembleOne(disassemble(w, at), at), w) << op.name << " " << disassemble(w, at);
      }
}

TEST(Encode, DecodeEncodeIsStable)
{
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200000; ++i)
    {
      uint32_t w = uint32_t(rng());
      auto in = decode(w);
      if (!in)
        continue;
      auto again = decode(encode(*in));
      ASSERT_TRUE(again) << hex64(w);
      EXPECT_EQ(*again, *in) << hex64(w);
    }
}

TEST(Li, ExactOnSimulator)
{
  std::mt19937_64 rng(99);
  std::vector<uint64_t> values = { 0, 1, uint64_t(-1), 0x7ff, 0x800, 0xfffff800, 0x80000000, 0x7fffffff,
                                   0xffffffff80000000ull, 0x8000000000000000ull, 0x7fffffffffffffffull,
                                   0x123456789abcdef0ull, 0x00000000fffff000ull };
  for (int i = 0; i < 200; ++i)
    {
      uint64_t v = rng();
      values.push_back(v >> (rng() % 64));
      values.push_back(~(v >> (rng() % 64)));
    }
  for (uint64_t v : values)
    {
      auto m = test::runProgram("li a0, " + hex64(v) + "\n");
      ASSERT_TRUE(m.halted());
      EXPECT_EQ(m.state.gpr[10], v) << hex64(v);
      EXPECT_LE(materializeConstant(10, v).size(), 8u);
    }
}

TEST(Pseudo, ExpandAsExpected)
{
  auto m = test::runProgram(R"(
    li t0, 5
    mv t1, t0
    neg t2, t0
    not s0, t0
    seqz s1, zero
    snez s2, t0
    li s3, -1
    sext.w s4, s3
    la s5, _start
    li a0, 0
  )");
  EXPECT_EQ(m.state.gpr[6], 5u);
  EXPECT_EQ(m.state.gpr[7], uint64_t(-5));
  EXPECT_EQ(m.state.gpr[8], ~uint64_t(5));
  EXPECT_EQ(m.state.gpr[9], 1u);
  EXPECT_EQ(m.state.gpr[18], 1u);
  EXPECT_EQ(m.state.gpr[20], uint64_t(-1));
  EXPECT_EQ(m.state.gpr[21], addr::ramBase);
}

TEST(Pseudo, CallAndReturn)
{
  auto m = test::runProgram(R"(
    li a0, 1
    call f
    addi a0, a0, 100
    j done
  f:
    addi a0, a0, 10
    ret
  done:
  )");
  EXPECT_EQ(m.exitCode(), 111u);
}
