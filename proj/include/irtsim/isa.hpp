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

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace irtsim
{

  /// Supported RV64I + Zicsr + privileged subset.
  enum class Mnemonic : uint8_t
  {
    Lui, Auipc, Jal, Jalr,
    Beq, Bne, Blt, Bge, Bltu, Bgeu,
    Lb, Lh, Lw, Ld, Lbu, Lhu, Lwu,
    Sb, Sh, Sw, Sd,
    Addi, Slti, Sltiu, Xori, Ori, Andi, Slli, Srli, Srai,
    Add, Sub, Sll, Slt, Sltu, Xor, Srl, Sra, Or, And,
    Addiw, Slliw, Srliw, Sraiw,
    Addw, Subw, Sllw, Srlw, Sraw,
    Fence, Ecall, Mret, Sret, Wfi, SfenceVma,
    Csrrw, Csrrs, Csrrc, Csrrwi, Csrrsi, Csrrci,
    Count_
  };

  enum class Format : uint8_t { R, I, Shift64, Shift32, Load, S, B, U, J, Csr, CsrImm, Fence, Sys };

  struct OpInfo
  {
    Mnemonic mnemonic;
    std::string_view name;
    Format format;
    uint32_t opcode;
    uint32_t funct3;
    uint32_t funct7;   // funct7 / funct6<<1 for shifts / funct12 for Sys
  };

  inline constexpr std::array<OpInfo, size_t(Mnemonic::Count_)> opTable = {{
    { Mnemonic::Lui,   "lui",   Format::U, 0x37, 0, 0 },
    { Mnemonic::Auipc, "auipc", Format::U, 0x17, 0, 0 },
    { Mnemonic::Jal,   "jal",   Format::J, 0x6f, 0, 0 },
    { Mnemonic::Jalr,  "jalr",  Format::Load, 0x67, 0, 0 },
    { Mnemonic::Beq,   "beq",   Format::B, 0x63, 0, 0 },
    { Mnemonic::Bne,   "bne",   Format::B, 0x63, 1, 0 },
    { Mnemonic::Blt,   "blt",   Format::B, 0x63, 4, 0 },
    { Mnemonic::Bge,   "bge",   Format::B, 0x63, 5, 0 },
    { Mnemonic::Bltu,  "bltu",  Format::B, 0x63, 6, 0 },
    { Mnemonic::Bgeu,  "bgeu",  Format::B, 0x63, 7, 0 },
    { Mnemonic::Lb,    "lb",    Format::Load, 0x03, 0, 0 },
    { Mnemonic::Lh,    "lh",    Format::Load, 0x03, 1, 0 },
    { Mnemonic::Lw,    "lw",    Format::Load, 0x03, 2, 0 },
    { Mnemonic::Ld,    "ld",    Format::Load, 0x03, 3, 0 },
    { Mnemonic::Lbu,   "lbu",   Format::Load, 0x03, 4, 0 },
    { Mnemonic::Lhu,   "lhu",   Format::Load, 0x03, 5, 0 },
    { Mnemonic::Lwu,   "lwu",   Format::Load, 0x03, 6, 0 },
    { Mnemonic::Sb,    "sb",    Format::S, 0x23, 0, 0 },
    { Mnemonic::Sh,    "sh",    Format::S, 0x23, 1, 0 },
    { Mnemonic::Sw,    "sw",    Format::S, 0x23, 2, 0 },
    { Mnemonic::Sd,    "sd",    Format::S, 0x23, 3, 0 },
    { Mnemonic::Addi,  "addi",  Format::I, 0x13, 0, 0 },
    { Mnemonic::Slti,  "slti",  Format::I, 0x13, 2, 0 },
    { Mnemonic::Sltiu, "sltiu", Format::I, 0x13, 3, 0 },
    { Mnemonic::Xori,  "xori",  Format::I, 0x13, 4, 0 },
    { Mnemonic::Ori,   "ori",   Format::I, 0x13, 6, 0 },
    { Mnemonic::Andi,  "andi",  Format::I, 0x13, 7, 0 },
    { Mnemonic::Slli,  "slli",  Format::Shift64, 0x13, 1, 0x00 },
    { Mnemonic::Srli,  "srli",  Format::Shift64, 0x13, 5, 0x00 },
    { Mnemonic::Srai,  "srai",  Format::Shift64, 0x13, 5, 0x20 },
    { Mnemonic::Add,   "add",   Format::R, 0x33, 0, 0x00 },
    { Mnemonic::Sub,   "sub",   Format::R, 0x33, 0, 0x20 },
    { Mnemonic::Sll,   "sll",   Format::R, 0x33, 1, 0x00 },
    { Mnemonic::Slt,   "slt",   Format::R, 0x33, 2, 0x00 },
    { Mnemonic::Sltu,  "sltu",  Format::R, 0x33, 3, 0x00 },
    { Mnemonic::Xor,   "xor",   Format::R, 0x33, 4, 0x00 },
    { Mnemonic::Srl,   "srl",   Format::R, 0x33, 5, 0x00 },
    { Mnemonic::Sra,   "sra",   Format::R, 0x33, 5, 0x20 },
    { Mnemonic::Or,    "or",    Format::R, 0x33, 6, 0x00 },
    { Mnemonic::And,   "and",   Format::R, 0x33, 7, 0x00 },
    { Mnemonic::Addiw, "addiw", Format::I, 0x1b, 0, 0 },
    { Mnemonic::Slliw, "slliw", Format::Shift32, 0x1b, 1, 0x00 },
    { Mnemonic::Srliw, "srliw", Format::Shift32, 0x1b, 5, 0x00 },
    { Mnemonic::Sraiw, "sraiw", Format::Shift32, 0x1b, 5, 0x20 },
    { Mnemonic::Addw,  "addw",  Format::R, 0x3b, 0, 0x00 },
    { Mnemonic::Subw,  "subw",  Format::R, 0x3b, 0, 0x20 },
    { Mnemonic::Sllw,  "sllw",  Format::R, 0x3b, 1, 0x00 },
    { Mnemonic::Srlw,  "srlw",  Format::R, 0x3b, 5, 0x00 },
    { Mnemonic::Sraw,  "sraw",  Format::R, 0x3b, 5, 0x20 },
    { Mnemonic::Fence, "fence", Format::Fence, 0x0f, 0, 0 },
    { Mnemonic::Ecall, "ecall", Format::Sys, 0x73, 0, 0x000 },
    { Mnemonic::Mret,  "mret",  Format::Sys, 0x73, 0, 0x302 },
    { Mnemonic::Sret,  "sret",  Format::Sys, 0x73, 0, 0x102 },
    { Mnemonic::Wfi,   "wfi",   Format::Sys, 0x73, 0, 0x105 },
    { Mnemonic::SfenceVma, "sfence.vma", Format::R, 0x73, 0, 0x09 },
    { Mnemonic::Csrrw,  "csrrw",  Format::Csr, 0x73, 1, 0 },
    { Mnemonic::Csrrs,  "csrrs",  Format::Csr, 0x73, 2, 0 },
    { Mnemonic::Csrrc,  "csrrc",  Format::Csr, 0x73, 3, 0 },
    { Mnemonic::Csrrwi, "csrrwi", Format::CsrImm, 0x73, 5, 0 },
    { Mnemonic::Csrrsi, "csrrsi", Format::CsrImm, 0x73, 6, 0 },
    { Mnemonic::Csrrci, "csrrci", Format::CsrImm, 0x73, 7, 0 },
  }};

  constexpr const OpInfo& info(Mnemonic m)
  { return opTable[size_t(m)]; }

  constexpr std::optional<Mnemonic> mnemonicFromName(std::string_view name)
  {
    for (const auto& op : opTable)
      if (op.name == name)
        return op.mnemonic;
    return std::nullopt;
  }

  /// One decoded instruction. Immediates are stored sign-extended as the
  /// value the instruction adds (U-type already shifted by 12). CSR
  /// instructions keep the CSR number in imm; the *i forms keep the
  /// 5-bit zimm in rs1. Fence keeps pred<<4|succ in imm.
  struct Instruction
  {
    Mnemonic mnemonic = Mnemonic::Addi;
    uint8_t rd = 0;
    uint8_t rs1 = 0;
    uint8_t rs2 = 0;
    int64_t imm = 0;
    uint32_t raw = 0;

    bool operator==(const Instruction& o) const
    {
      return mnemonic == o.mnemonic && rd == o.rd && rs1 == o.rs1 && rs2 == o.rs2 && imm == o.imm;
    }
  };

  namespace detail
  {
    constexpr int64_t sext(uint64_t value, unsigned bits)
    {
      uint64_t m = uint64_t(1) << (bits - 1);
      value &= (bits == 64) ? ~uint64_t(0) : ((uint64_t(1) << bits) - 1);
      return int64_t((value ^ m) - m);
    }

    constexpr uint32_t bits(uint32_t w, unsigned hi, unsigned lo)
    { return (w >> lo) & ((uint32_t(1) << (hi - lo + 1)) - 1); }

    constexpr std::optional<Mnemonic> find(Format f, uint32_t opcode, uint32_t funct3, uint32_t funct7)
    {
      for (const auto& op : opTable)
        if (op.format == f && op.opcode == opcode && op.funct3 == funct3 && op.funct7 == funct7)
          return op.mnemonic;
      return std::nullopt;
    }
  }

  /// Decode a 32-bit word. Returns nullopt for anything outside the
  /// supported subset; the caller raises illegal-instruction. Decoding is
  /// strict: every accepted word re-encodes to itself.
  constexpr std::optional<Instruction> decode(uint32_t w)
  {
    using detail::bits;
    using detail::sext;

    Instruction in;
    in.raw = w;
    uint32_t opcode = bits(w, 6, 0);
    uint32_t rd = bits(w, 11, 7);
    uint32_t f3 = bits(w, 14, 12);
    uint32_t rs1 = bits(w, 19, 15);
    uint32_t rs2 = bits(w, 24, 20);
    uint32_t f7 = bits(w, 31, 25);
    in.rd = uint8_t(rd);
    in.rs1 = uint8_t(rs1);
    in.rs2 = uint8_t(rs2);

    auto itype = [&](Format f) -> std::optional<Instruction> {
      auto m = detail::find(f, opcode, f3, 0);
      if (!m)
        return std::nullopt;
      in.mnemonic = *m;
      in.rs2 = 0;
      in.imm = sext(bits(w, 31, 20), 12);
      return in;
    };

    switch (opcode)
      {
      case 0x37:
      case 0x17:
        in.mnemonic = opcode == 0x37 ? Mnemonic::Lui : Mnemonic::Auipc;
        in.rs1 = in.rs2 = 0;
        in.imm = sext(w & 0xfffff000, 32);
        return in;

      case 0x6f:
        {
          in.mnemonic = Mnemonic::Jal;
          in.rs1 = in.rs2 = 0;
          uint32_t off = (bits(w, 31, 31) << 20) | (bits(w, 19, 12) << 12) |
                         (bits(w, 20, 20) << 11) | (bits(w, 30, 21) << 1);
          in.imm = sext(off, 21);
          return in;
        }

      case 0x67:
        if (f3 != 0)
          return std::nullopt;
        return itype(Format::Load);

      case 0x63:
        {
          auto m = detail::find(Format::B, opcode, f3, 0);
          if (!m)
            return std::nullopt;
          in.mnemonic = *m;
          in.rd = 0;
          uint32_t off = (bits(w, 31, 31) << 12) | (bits(w, 7, 7) << 11) |
                         (bits(w, 30, 25) << 5) | (bits(w, 11, 8) << 1);
          in.imm = sext(off, 13);
          return in;
        }

      case 0x03:
        return itype(Format::Load);

      case 0x23:
        {
          auto m = detail::find(Format::S, opcode, f3, 0);
          if (!m)
            return std::nullopt;
          in.mnemonic = *m;
          in.rd = 0;
          in.imm = sext((f7 << 5) | rd, 12);
          return in;
        }

      case 0x13:
        if (f3 == 1 || f3 == 5)
          {
            uint32_t f6 = bits(w, 31, 26);
            auto m = detail::find(Format::Shift64, opcode, f3, f6 << 1);
            if (!m)
              return std::nullopt;
            in.mnemonic = *m;
            in.rs2 = 0;
            in.imm = bits(w, 25, 20);
            return in;
          }
        return itype(Format::I);

      case 0x1b:
        if (f3 == 1 || f3 == 5)
          {
            auto m = detail::find(Format::Shift32, opcode, f3, f7);
            if (!m)
              return std::nullopt;
            in.mnemonic = *m;
            in.rs2 = 0;
            in.imm = rs2;
            return in;
          }
        if (f3 != 0)
          return std::nullopt;
        return itype(Format::I);

      case 0x33:
      case 0x3b:
        {
          auto m = detail::find(Format::R, opcode, f3, f7);
          if (!m)
            return std::nullopt;
          in.mnemonic = *m;
          return in;
        }

      case 0x0f:
        // Plain FENCE only (fm=0, rd=rs1=0); executed as a no-op.
        if (f3 != 0 || rd != 0 || rs1 != 0 || bits(w, 31, 28) != 0)
          return std::nullopt;
        in.mnemonic = Mnemonic::Fence;
        in.rd = in.rs1 = in.rs2 = 0;
        in.imm = bits(w, 27, 20);
        return in;

      case 0x73:
        if (f3 == 0)
          {
            if (f7 == 0x09 && rd == 0)
              {
                in.mnemonic = Mnemonic::SfenceVma;
                return in;
              }
            if (rd != 0 || rs1 != 0)
              return std::nullopt;
            auto m = detail::find(Format::Sys, opcode, 0, bits(w, 31, 20));
            if (!m)
              return std::nullopt;
            in.mnemonic = *m;
            in.rs2 = 0;
            return in;
          }
        {
          auto m = detail::find(f3 >= 5 ? Format::CsrImm : Format::Csr, opcode, f3, 0);
          if (!m)
            return std::nullopt;
          in.mnemonic = *m;
          in.rs2 = 0;
          in.imm = bits(w, 31, 20);
          return in;
        }

      default:
        return std::nullopt;
      }
  }

  /// Encode an instruction. Fields outside the format's range are
  /// truncated; range checking is the assembler's job.
  constexpr uint32_t encode(const Instruction& in)
  {
    const OpInfo& op = info(in.mnemonic);
    uint32_t rd = in.rd & 0x1f, rs1 = in.rs1 & 0x1f, rs2 = in.rs2 & 0x1f;
    uint32_t imm = uint32_t(uint64_t(in.imm));
    uint32_t base = op.opcode | (op.funct3 << 12);

    switch (op.format)
      {
      case Format::R:
        return base | (rd << 7) | (rs1 << 15) | (rs2 << 20) | (op.funct7 << 25);
      case Format::I:
      case Format::Load:
      case Format::Csr:
      case Format::CsrImm:
        return base | (rd << 7) | (rs1 << 15) | ((imm & 0xfff) << 20);
      case Format::Shift64:
        return base | (rd << 7) | (rs1 << 15) | ((imm & 0x3f) << 20) | (op.funct7 << 25);
      case Format::Shift32:
        return base | (rd << 7) | (rs1 << 15) | ((imm & 0x1f) << 20) | (op.funct7 << 25);
      case Format::S:
        return base | ((imm & 0x1f) << 7) | (rs1 << 15) | (rs2 << 20) | (((imm >> 5) & 0x7f) << 25);
      case Format::B:
        return base | (((imm >> 11) & 1) << 7) | (((imm >> 1) & 0xf) << 8) | (rs1 << 15) |
               (rs2 << 20) | (((imm >> 5) & 0x3f) << 25) | (((imm >> 12) & 1) << 31);
      case Format::U:
        return op.opcode | (rd << 7) | (imm & 0xfffff000);
      case Format::J:
        return op.opcode | (rd << 7) | (((imm >> 12) & 0xff) << 12) | (((imm >> 11) & 1) << 20) |
               (((imm >> 1) & 0x3ff) << 21) | (((imm >> 20) & 1) << 31);
      case Format::Fence:
        return op.opcode | ((imm & 0xff) << 20);
      case Format::Sys:
        return op.opcode | (op.funct7 << 20);
      }
    return 0;
  }

  inline constexpr std::array<std::string_view, 32> abiNames = {
    "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2",
    "s0", "s1", "a0", "a1", "a2", "a3", "a4", "a5",
    "a6", "a7", "s2", "s3", "s4", "s5", "s6", "s7",
    "s8", "s9", "s10", "s11", "t3", "t4", "t5", "t6",
  };

  constexpr bool isLoad(Mnemonic m)
  { return info(m).opcode == 0x03; }

  constexpr bool isStore(Mnemonic m)
  { return info(m).opcode == 0x23; }

  constexpr bool isBranch(Mnemonic m)
  { return info(m).format == Format::B; }

  /// Access width in bytes for loads and stores.
  constexpr unsigned accessSize(Mnemonic m)
  { return 1u << (info(m).funct3 & 3); }

}  // namespace irtsim
