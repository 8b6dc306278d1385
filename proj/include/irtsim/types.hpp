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
#include <stdexcept>
#include <string>
#include <string_view>

namespace irtsim
{

  /// Privilege modes, numbered as in the privileged architecture.
  enum class Mode : uint8_t { User = 0, Supervisor = 1, Machine = 3 };

  constexpr std::string_view modeName(Mode m)
  {
    switch (m)
      {
      case Mode::User: return "user";
      case Mode::Supervisor: return "supervisor";
      case Mode::Machine: return "machine";
      }
    return "?";
  }

  /// Dense index (0 = U, 1 = S, 2 = M) for per-mode arrays.
  constexpr size_t modeIndex(Mode m)
  { return m == Mode::Machine ? 2 : size_t(m); }

  using PerMode = std::array<uint64_t, 3>;

  enum class ExceptionCode : uint32_t
  {
    InstAddrMisaligned = 0,
    InstAccessFault = 1,
    IllegalInstruction = 2,
    LoadAccessFault = 5,
    StoreAccessFault = 7,
    EcallFromU = 8,
    EcallFromS = 9,
    EcallFromM = 11,
    InstPageFault = 12,
    LoadPageFault = 13,
    StorePageFault = 15,
  };

  enum class InterruptCode : uint32_t
  {
    SupervisorSoftware = 1,
    SupervisorTimer = 5,
    MachineTimer = 7,
  };

  struct TrapCause
  {
    bool isInterrupt = false;
    uint32_t code = 0;

    static constexpr TrapCause exception(ExceptionCode c)
    { return { false, uint32_t(c) }; }

    static constexpr TrapCause interrupt(InterruptCode c)
    { return { true, uint32_t(c) }; }

    /// Value written to mcause/scause.
    constexpr uint64_t xcause() const
    { return (uint64_t(isInterrupt) << 63) | code; }

    bool operator==(const TrapCause&) const = default;
  };

  enum class Access : uint8_t { Fetch, Load, Store };

  constexpr std::string_view accessName(Access a)
  {
    switch (a)
      {
      case Access::Fetch: return "fetch";
      case Access::Load: return "load";
      case Access::Store: return "store";
      }
    return "?";
  }

  constexpr TrapCause pageFaultFor(Access a)
  {
    switch (a)
      {
      case Access::Fetch: return TrapCause::exception(ExceptionCode::InstPageFault);
      case Access::Load: return TrapCause::exception(ExceptionCode::LoadPageFault);
      case Access::Store: return TrapCause::exception(ExceptionCode::StorePageFault);
      }
    return {};
  }

  constexpr TrapCause accessFaultFor(Access a)
  {
    switch (a)
      {
      case Access::Fetch: return TrapCause::exception(ExceptionCode::InstAccessFault);
      case Access::Load: return TrapCause::exception(ExceptionCode::LoadAccessFault);
      case Access::Store: return TrapCause::exception(ExceptionCode::StoreAccessFault);
      }
    return {};
  }

  /// Fixed physical address map.
  namespace addr
  {
    inline constexpr uint64_t ramBase = 0x8000'0000;
    inline constexpr uint64_t exitPort = 0x1000'0000;
    inline constexpr uint64_t putcharPort = 0x1000'0008;
    inline constexpr uint64_t mtimecmp = 0x0200'4000;
    inline constexpr uint64_t mtime = 0x0200'bff8;
  }

  /// Cycle-model knobs.
  struct TimingParams
  {
    uint64_t memAccessCycles = 4;
    uint64_t trapEntryCost = 2;
  };

  /// Common base for errors reported to the user (bad input, bad config).
  class Error : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

  /// 64-bit FNV-1a, used for state and memory digests.
  class Fnv1a
  {
  public:
    void add(const uint8_t* data, size_t n)
    {
      for (size_t i = 0; i < n; ++i)
        {
          h_ ^= data[i];
          h_ *= 0x100000001b3ull;
        }
    }

    void add(uint64_t v)
    {
      uint8_t b[8];
      for (int i = 0; i < 8; ++i)
        b[i] = uint8_t(v >> (8 * i));
      add(b, 8);
    }

    uint64_t value() const
    { return h_; }

  private:
    uint64_t h_ = 0xcbf29ce484222325ull;
  };

  inline std::string hex64(uint64_t v)
  {
    static const char* digits = "0123456789abcdef";
    std::string s = "0x";
    bool started = false;
    for (int i = 15; i >= 0; --i)
      {
        unsigned d = (v >> (4 * i)) & 0xf;
        if (d || started || i == 0)
          {
            s += digits[d];
            started = true;
          }
      }
    return s;
  }

}  // namespace irtsim
