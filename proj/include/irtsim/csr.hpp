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

#include <cstdint>
#include <optional>
#include <string_view>

#include "types.hpp"

namespace irtsim
{

  enum class CsrNumber : uint16_t
  {
    Sstatus = 0x100, Sie = 0x104, Stvec = 0x105,
    Sscratch = 0x140, Sepc = 0x141, Scause = 0x142, Stval = 0x143, Sip = 0x144,
    Satp = 0x180,
    Mstatus = 0x300, Misa = 0x301, Medeleg = 0x302, Mideleg = 0x303, Mie = 0x304, Mtvec = 0x305,
    Mscratch = 0x340, Mepc = 0x341, Mcause = 0x342, Mtval = 0x343, Mip = 0x344,
    Mcycle = 0xb00, Minstret = 0xb02,
    Cycle = 0xc00, Time = 0xc01, Instret = 0xc02,
    Mhartid = 0xf14,
  };

  struct CsrName
  {
    std::string_view name;
    CsrNumber number;
  };

  inline constexpr CsrName csrNames[] = {
    { "sstatus", CsrNumber::Sstatus }, { "sie", CsrNumber::Sie }, { "stvec", CsrNumber::Stvec },
    { "sscratch", CsrNumber::Sscratch }, { "sepc", CsrNumber::Sepc }, { "scause", CsrNumber::Scause },
    { "stval", CsrNumber::Stval }, { "sip", CsrNumber::Sip }, { "satp", CsrNumber::Satp },
    { "mstatus", CsrNumber::Mstatus }, { "misa", CsrNumber::Misa }, { "medeleg", CsrNumber::Medeleg },
    { "mideleg", CsrNumber::Mideleg }, { "mie", CsrNumber::Mie }, { "mtvec", CsrNumber::Mtvec },
    { "mscratch", CsrNumber::Mscratch }, { "mepc", CsrNumber::Mepc }, { "mcause", CsrNumber::Mcause },
    { "mtval", CsrNumber::Mtval }, { "mip", CsrNumber::Mip }, { "mcycle", CsrNumber::Mcycle },
    { "minstret", CsrNumber::Minstret }, { "cycle", CsrNumber::Cycle }, { "time", CsrNumber::Time },
    { "instret", CsrNumber::Instret }, { "mhartid", CsrNumber::Mhartid },
  };

  constexpr std::optional<uint16_t> csrFromName(std::string_view name)
  {
    for (const auto& c : csrNames)
      if (c.name == name)
        return uint16_t(c.number);
    return std::nullopt;
  }

  constexpr std::optional<std::string_view> csrName(uint16_t number)
  {
    for (const auto& c : csrNames)
      if (uint16_t(c.number) == number)
        return c.name;
    return std::nullopt;
  }

  namespace mstatus
  {
    inline constexpr uint64_t SIE = 1ull << 1;
    inline constexpr uint64_t MIE = 1ull << 3;
    inline constexpr uint64_t SPIE = 1ull << 5;
    inline constexpr uint64_t MPIE = 1ull << 7;
    inline constexpr uint64_t SPP = 1ull << 8;
    inline constexpr uint64_t MPP = 3ull << 11;
    inline constexpr unsigned MPP_SHIFT = 11;
    inline constexpr uint64_t SUM = 1ull << 18;
    inline constexpr uint64_t MXR = 1ull << 19;

    inline constexpr uint64_t writable = SIE | MIE | SPIE | MPIE | SPP | MPP | SUM | MXR;
    inline constexpr uint64_t sstatusMask = SIE | SPIE | SPP | SUM | MXR;
  }

  namespace irq
  {
    inline constexpr uint64_t SSIP = 1ull << 1;
    inline constexpr uint64_t MSIP = 1ull << 3;
    inline constexpr uint64_t STIP = 1ull << 5;
    inline constexpr uint64_t MTIP = 1ull << 7;
    inline constexpr uint64_t SEIP = 1ull << 9;
    inline constexpr uint64_t MEIP = 1ull << 11;

    inline constexpr uint64_t supervisorBits = SSIP | STIP | SEIP;
    inline constexpr uint64_t all = supervisorBits | MSIP | MTIP | MEIP;
  }

  namespace satp
  {
    inline constexpr uint64_t modeBare = 0;
    inline constexpr uint64_t modeSv39 = 8;
    inline constexpr uint64_t ppnMask = (1ull << 44) - 1;

    constexpr uint64_t make(uint64_t mode, uint64_t rootPpn)
    { return (mode << 60) | (rootPpn & ppnMask); }
  }

  /// Exceptions that may be delegated (ecall-from-M and reserved codes excluded).
  inline constexpr uint64_t medelegWritable = 0xb3ff;

  /// Minimal M/S CSR file. Writes go through write(), which applies the
  /// WARL masks; fields are public for the trap logic and for inspection.
  struct CsrFile
  {
    uint64_t mstatus = 0;
    uint64_t mtvec = 0;
    uint64_t mepc = 0;
    uint64_t mcause = 0;
    uint64_t mtval = 0;
    uint64_t medeleg = 0;
    uint64_t mideleg = 0;
    uint64_t mie = 0;
    uint64_t mip = 0;
    uint64_t satp = 0;
    uint64_t stvec = 0;
    uint64_t sepc = 0;
    uint64_t scause = 0;
    uint64_t stval = 0;
    uint64_t sscratch = 0;
    uint64_t mscratch = 0;
    uint64_t mtimecmp = ~uint64_t(0);
    uint64_t mtime = 0;

    static constexpr uint64_t misaValue = (2ull << 62) | (1ull << 8) | (1ull << 18) | (1ull << 20); // RV64 I S U

    uint64_t satpMode() const
    { return satp >> 60; }

    uint64_t satpPpn() const
    { return satp & satp::ppnMask; }

    /// Write a satp value; anything but Bare or Sv39 is ignored.
    void writeSatp(uint64_t value)
    {
      uint64_t mode = value >> 60;
      if (mode != satp::modeBare && mode != satp::modeSv39)
        return;
      // ASIDs are not implemented; the field reads as zero.
      satp = (mode << 60) | (value & satp::ppnMask);
    }

    void writeMstatus(uint64_t value)
    {
      value &= mstatus::writable;
      uint64_t mpp = (value & mstatus::MPP) >> mstatus::MPP_SHIFT;
      if (mpp == 2)
        value &= ~mstatus::MPP;
      mstatus = value;
    }

    /// Refresh mip.MTIP from the timer comparator.
    void updateTimerPending()
    {
      if (mtime >= mtimecmp)
        mip |= irq::MTIP;
      else
        mip &= ~irq::MTIP;
    }

    uint64_t digest() const
    {
      Fnv1a h;
      for (uint64_t v : { mstatus, mtvec, mepc, mcause, mtval, medeleg, mideleg, mie, mip, satp,
                          stvec, sepc, scause, stval, sscratch, mscratch, mtimecmp, mtime })
        h.add(v);
      return h.value();
    }
  };

}  // namespace irtsim
