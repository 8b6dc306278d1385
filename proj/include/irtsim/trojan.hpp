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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "types.hpp"

namespace irtsim
{

  enum class TrojanKind : uint8_t { Disabled, Irt1, Irt2 };

  constexpr std::string_view trojanKindName(TrojanKind k)
  {
    switch (k)
      {
      case TrojanKind::Disabled: return "disabled";
      case TrojanKind::Irt1: return "irt1";
      case TrojanKind::Irt2: return "irt2";
      }
    return "?";
  }

  inline TrojanKind trojanKindFromName(std::string_view s)
  {
    if (s == "disabled" || s == "none")
      return TrojanKind::Disabled;
    if (s == "irt1")
      return TrojanKind::Irt1;
    if (s == "irt2")
      return TrojanKind::Irt2;
    throw Error("unknown trojan kind: " + std::string(s));
  }

  /// A 128-bit triggering value split over two 64-bit host signals. For
  /// IRT-1 `first` is the register compared as the high half; for IRT-2
  /// `first`/`second` are the adder's rs1/rs2 operands.
  struct WidePair
  {
    uint64_t first = 0;
    uint64_t second = 0;

    bool operator==(const WidePair&) const = default;
  };

  /// True if the low `width` bits of first:second match those of target.
  constexpr bool matchesLowBits(uint64_t first, uint64_t second, const WidePair& target, unsigned width)
  {
    if (width == 0)
      return true;
    if (width < 64)
      {
        uint64_t mask = (uint64_t(1) << width) - 1;
        return (second & mask) == (target.second & mask);
      }
    if (second != target.second)
      return false;
    unsigned hiBits = width - 64;
    uint64_t mask = hiBits >= 64 ? ~uint64_t(0) : (uint64_t(1) << hiBits) - 1;
    return (first & mask) == (target.first & mask);
  }

  struct TrojanConfig
  {
    TrojanKind kind = TrojanKind::Disabled;
    std::array<uint8_t, 2> hostRegs = { 20, 21 };
    WidePair activation = { 0x1badc0de5eed0001ull, 0x7a11c0de0bad0002ull };
    WidePair deactivation = { 0x0ddba11deadf00dull, 0x600dcafe0ff1ce03ull };
    uint32_t latency = 8;
    uint32_t comparatorWidth = 128;

    /// Throws Error when an invariant is violated.
    void validate() const
    {
      if (hostRegs[0] == 0 || hostRegs[1] == 0 || hostRegs[0] > 31 || hostRegs[1] > 31)
        throw Error("trojan host registers must be x1..x31");
      if (hostRegs[0] == hostRegs[1])
        throw Error("trojan host registers must be distinct");
      if (activation == deactivation)
        throw Error("trojan activation and deactivation values must differ");
      if (latency < 1)
        throw Error("trojan latency must be >= 1");
      if (comparatorWidth < 1 || comparatorWidth > 128)
        throw Error("trojan comparator width must be in 1..128");
    }
  };

  enum class Fsm : uint8_t { S0, S1 };

  struct PayloadStats
  {
    uint64_t suppressedFaults = 0;
    uint64_t rawOnCycles = 0;
    uint64_t deliveredOnCycles = 0;
    uint64_t activations = 0;     // raw rising edges
    uint64_t deactivations = 0;   // raw falling edges

    bool operator==(const PayloadStats&) const = default;
  };

  /// IRT-1 raw trigger: a pure function of the two host registers.
  inline bool sampleIrt1(std::span<const uint64_t, 32> gpr, const TrojanConfig& cfg)
  {
    return matchesLowBits(gpr[cfg.hostRegs[0]], gpr[cfg.hostRegs[1]], cfg.activation, cfg.comparatorWidth);
  }

  /// IRT-2 state update for one sampled adder operation.
  constexpr Fsm sampleIrt2(uint64_t opA, uint64_t opB, Fsm state, const TrojanConfig& cfg)
  {
    if (matchesLowBits(opA, opB, cfg.activation, cfg.comparatorWidth))
      return Fsm::S1;
    if (matchesLowBits(opA, opB, cfg.deactivation, cfg.comparatorWidth))
      return Fsm::S0;
    return state;
  }

  /// Fixed-length shift register modeling the trigger's multi-cycle
  /// route to the payload: the value delivered at cycle t is the raw
  /// value pushed at t - L, and false before the line has filled.
  class DelayLine
  {
  public:
    explicit DelayLine(uint32_t length = 1)
      : slots_(length ? length : 1, 0)
    { }

    uint32_t length() const
    { return uint32_t(slots_.size()); }

    bool tick(bool raw)
    {
      delivered_ = slots_[head_] != 0;
      slots_[head_] = raw;
      head_ = (head_ + 1) % slots_.size();
      return delivered_;
    }

    bool delivered() const
    { return delivered_; }

  private:
    std::vector<uint8_t> slots_;
    size_t head_ = 0;
    bool delivered_ = false;
  };

  struct TriggerState
  {
    Fsm fsm = Fsm::S0;
    DelayLine delayLine;
    bool raw = false;
    PayloadStats stats;
  };

  /// The hardware-trojan layer attached to a machine. The machine calls
  /// onAdd() when a register-register add executes and tick() once per
  /// elapsed cycle; the MMU asks deliveredNow() at store permission checks.
  class TrojanRuntime
  {
  public:
    static constexpr bool present = true;

    TrojanRuntime() = default;

    explicit TrojanRuntime(const TrojanConfig& cfg)
      : cfg_(cfg)
    {
      cfg_.validate();
      state_.delayLine = DelayLine(cfg_.latency);
    }

    const TrojanConfig& config() const
    { return cfg_; }

    const TriggerState& state() const
    { return state_; }

    void onAdd(uint64_t opA, uint64_t opB)
    {
      if (cfg_.kind == TrojanKind::Irt2)
        state_.fsm = sampleIrt2(opA, opB, state_.fsm, cfg_);
    }

    bool tick(std::span<const uint64_t, 32> gpr)
    {
      if (cfg_.kind == TrojanKind::Disabled)
        return false;
      bool raw = cfg_.kind == TrojanKind::Irt1 ? sampleIrt1(gpr, cfg_) : state_.fsm == Fsm::S1;

      PayloadStats& st = state_.stats;
      if (raw && !state_.raw)
        ++st.activations;
      if (!raw && state_.raw)
        ++st.deactivations;
      state_.raw = raw;
      st.rawOnCycles += raw;
      bool delivered = state_.delayLine.tick(raw);
      st.deliveredOnCycles += delivered;
      return delivered;
    }

    bool rawNow() const
    { return state_.raw; }

    bool deliveredNow() const
    { return cfg_.kind != TrojanKind::Disabled && state_.delayLine.delivered(); }

    void noteSuppressed()
    { ++state_.stats.suppressedFaults; }

    const PayloadStats& stats() const
    { return state_.stats; }

  private:
    TrojanConfig cfg_;
    TriggerState state_;
  };

  /// Stand-in used to build a machine with no trojan layer at all.
  struct NoTrojan
  {
    static constexpr bool present = false;

    void onAdd(uint64_t, uint64_t) { }
    bool tick(std::span<const uint64_t, 32>) { return false; }
    bool rawNow() const { return false; }
    bool deliveredNow() const { return false; }
    void noteSuppressed() { }
    PayloadStats stats() const { return {}; }
  };

}  // namespace irtsim
