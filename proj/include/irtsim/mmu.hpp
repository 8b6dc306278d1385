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
#include <vector>

#include "csr.hpp"
#include "memory.hpp"
#include "types.hpp"

namespace irtsim
{

  /// Sv39 page table entry.
  struct Pte
  {
    static constexpr uint64_t V = 1 << 0;
    static constexpr uint64_t R = 1 << 1;
    static constexpr uint64_t W = 1 << 2;
    static constexpr uint64_t X = 1 << 3;
    static constexpr uint64_t U = 1 << 4;
    static constexpr uint64_t G = 1 << 5;
    static constexpr uint64_t A = 1 << 6;
    static constexpr uint64_t D = 1 << 7;

    uint64_t raw = 0;

    static constexpr Pte make(uint64_t ppn, uint64_t flags)
    { return { ((ppn & ((1ull << 44) - 1)) << 10) | (flags & 0xff) }; }

    constexpr bool v() const { return raw & V; }
    constexpr bool r() const { return raw & R; }
    constexpr bool w() const { return raw & W; }
    constexpr bool x() const { return raw & X; }
    constexpr bool u() const { return raw & U; }
    constexpr bool g() const { return raw & G; }
    constexpr bool a() const { return raw & A; }
    constexpr bool d() const { return raw & D; }
    constexpr uint64_t ppn() const { return (raw >> 10) & ((1ull << 44) - 1); }

    constexpr bool isLeaf() const { return r() || x(); }

    bool operator==(const Pte&) const = default;
  };

  inline constexpr unsigned pageShift = 12;
  inline constexpr uint64_t pageSize = 1ull << pageShift;

  constexpr bool isCanonicalSv39(uint64_t va)
  {
    int64_t s = int64_t(va << 25) >> 25;
    return uint64_t(s) == va;
  }

  constexpr uint64_t vpn(uint64_t va, int level)
  { return (va >> (pageShift + 9 * level)) & 0x1ff; }

  struct PteRead
  {
    int level = 0;
    uint64_t address = 0;
    uint64_t value = 0;
  };

  /// PTE reads performed by one walk, in order (at most three).
  struct WalkTrace
  {
    std::array<PteRead, 3> reads{};
    unsigned count = 0;

    void push(const PteRead& r)
    { reads[count++] = r; }

    unsigned size() const
    { return count; }

    bool empty() const
    { return count == 0; }
  };

  struct WalkResult
  {
    std::optional<TrapCause> fault;
    Pte pte;
    int level = 0;
    WalkTrace trace;
  };

  /// Sv39 three-level descent from the root table at rootPpn.
  inline WalkResult walk(uint64_t rootPpn, uint64_t va, Access access, const PhysicalMemory& mem)
  {
    WalkResult res;
    uint64_t table = rootPpn << pageShift;
    for (int level = 2; level >= 0; --level)
      {
        uint64_t pteAddr = table + vpn(va, level) * 8;
        auto value = mem.read(pteAddr, 8);
        if (!value)
          {
            res.fault = accessFaultFor(access);
            return res;
          }
        Pte pte{ *value };
        res.trace.push({ level, pteAddr, pte.raw });
        res.pte = pte;
        res.level = level;

        if (!pte.v() || (!pte.r() && pte.w()))
          {
            res.fault = pageFaultFor(access);
            return res;
          }
        if (pte.isLeaf())
          {
            uint64_t lowMask = (1ull << (9 * level)) - 1;
            if (pte.ppn() & lowMask)
              res.fault = pageFaultFor(access);
            return res;
          }
        if (level == 0)
          {
            res.fault = pageFaultFor(access);
            return res;
          }
        table = pte.ppn() << pageShift;
      }
    return res;
  }

  /// Physical address for va through a leaf found at `level`.
  constexpr uint64_t leafAddress(Pte pte, int level, uint64_t va)
  {
    uint64_t lowMask = (1ull << (pageShift + 9 * level)) - 1;
    return ((pte.ppn() << pageShift) & ~lowMask) | (va & lowMask);
  }

  struct TranslationRequest
  {
    uint64_t va = 0;
    Access access = Access::Load;
    Mode mode = Mode::User;
    bool sum = false;
    bool mxr = false;
  };

  struct PermissionResult
  {
    std::optional<TrapCause> fault;
    bool uBitOverridden = false;

    bool ok() const
    { return !fault; }
  };

  /// Leaf permission check. overrideU is the payload: it presents U=1 to
  /// the user-mode check of stores, and only when that changes a fault
  /// into a pass does it count as an override.
  inline PermissionResult checkPermission(Pte pte, const TranslationRequest& req, bool overrideU)
  {
    auto fault = [&] { return PermissionResult{ pageFaultFor(req.access), false }; };

    bool typeOk = false;
    switch (req.access)
      {
      case Access::Fetch: typeOk = pte.x(); break;
      case Access::Load: typeOk = pte.r() || (req.mxr && pte.x()); break;
      case Access::Store: typeOk = pte.w(); break;
      }
    if (!typeOk || !pte.a() || (req.access == Access::Store && !pte.d()))
      return fault();

    if (req.mode == Mode::User)
      {
        if (pte.u())
          return {};
        if (overrideU && req.access == Access::Store)
          return { std::nullopt, true };
        return fault();
      }

    if (req.mode == Mode::Supervisor && pte.u() && (req.access == Access::Fetch || !req.sum))
      return fault();
    return {};
  }

  /// Fully associative FIFO TLB of leaf translations. Entries keep the
  /// original PTE so permission (and the payload override) is re-evaluated
  /// on every hit.
  class Tlb
  {
  public:
    struct Entry
    {
      uint64_t tag = 0;   // va >> (12 + 9*level)
      int level = 0;
      Pte pte;
    };

    explicit Tlb(size_t capacity = 16, bool enabled = true)
      : capacity_(capacity), enabled_(enabled)
    { entries_.reserve(capacity); }

    bool enabled() const
    { return enabled_; }

    size_t size() const
    { return entries_.size(); }

    std::optional<Entry> lookup(uint64_t va) const
    {
      if (!enabled_)
        return std::nullopt;
      for (const Entry& e : entries_)
        if (e.tag == (va >> (pageShift + 9 * e.level)))
          return e;
      return std::nullopt;
    }

    void insert(uint64_t va, int level, Pte pte)
    {
      if (!enabled_ || capacity_ == 0)
        return;
      if (entries_.size() == capacity_)
        {
          entries_[next_] = { va >> (pageShift + 9 * level), level, pte };
          next_ = (next_ + 1) % capacity_;
          return;
        }
      entries_.push_back({ va >> (pageShift + 9 * level), level, pte });
    }

    void flush()
    {
      entries_.clear();
      next_ = 0;
    }

  private:
    size_t capacity_;
    bool enabled_;
    std::vector<Entry> entries_;
    size_t next_ = 0;
  };

  struct TranslationResult
  {
    std::optional<uint64_t> pa;
    TrapCause fault{};
    uint64_t cycles = 0;
    WalkTrace walk;
    bool tlbHit = false;
    bool uBitOverridden = false;
    uint64_t walkStartCycle = 0;   // machine cycle count when the walk began
    uint64_t checkCycle = 0;       // machine cycle count at the permission check

    bool ok() const
    { return pa.has_value(); }
  };

  /// Translate one request. Clock must provide advance(n) and now();
  /// walk cycles are advanced before the permission check, so the
  /// payload state observed at the check is the post-walk state.
  template <typename Clock, typename Trojan>
  TranslationResult translate(const TranslationRequest& req, uint64_t satpValue, Tlb& tlb,
                              const PhysicalMemory& mem, const TimingParams& timing,
                              Clock& clock, Trojan& trojan)
  {
    TranslationResult res;
    res.walkStartCycle = res.checkCycle = clock.now();

    uint64_t mode = satpValue >> 60;
    if (mode == satp::modeBare || req.mode == Mode::Machine)
      {
        res.pa = req.va;
        return res;
      }

    if (!isCanonicalSv39(req.va))
      {
        res.fault = pageFaultFor(req.access);
        return res;
      }

    Pte pte;
    int level = 0;
    if (auto hit = tlb.lookup(req.va))
      {
        res.tlbHit = true;
        pte = hit->pte;
        level = hit->level;
      }
    else
      {
        WalkResult w = walk(satpValue & satp::ppnMask, req.va, req.access, mem);
        res.walk = w.trace;
        res.cycles = uint64_t(w.trace.size()) * timing.memAccessCycles;
        clock.advance(res.cycles);
        res.checkCycle = clock.now();
        if (w.fault)
          {
            res.fault = *w.fault;
            return res;
          }
        pte = w.pte;
        level = w.level;
        tlb.insert(req.va, level, pte);
      }

    PermissionResult perm = checkPermission(pte, req, trojan.deliveredNow());
    if (perm.fault)
      {
        res.fault = *perm.fault;
        return res;
      }
    if (perm.uBitOverridden)
      {
        res.uBitOverridden = true;
        trojan.noteSuppressed();
      }
    res.pa = leafAddress(pte, level, req.va);
    return res;
  }

}  // namespace irtsim
