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

// Scenario builder: assembles the bundled guest sources (boot stub,
// kernel, handling processes, benchmark) with per-scenario constants,
// lays out physical memory and builds the Sv39 page tables.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "assembler.hpp"
#include "csr.hpp"
#include "image.hpp"
#include "mmu.hpp"
#include "trojan.hpp"
#include "types.hpp"
#include <irtsim/guest_sources.hpp>

namespace irtsim
{

  class BuildError : public Error
  {
  public:
    using Error::Error;
  };

  /// Physical memory map shared by the builder, the kernel and the
  /// experiment harness.
  namespace layout
  {
    inline constexpr uint64_t bootBase = 0x8000'0000;
    inline constexpr uint64_t kernelText = 0x8000'1000;
    inline constexpr uint64_t kernelData = 0x8000'4000;
    inline constexpr uint64_t tcbBase = kernelData;
    inline constexpr uint64_t tcbSize = 256;
    inline constexpr unsigned maxTasks = 4;
    inline constexpr uint64_t kernelVars = kernelData + 0x800;
    inline constexpr uint64_t machineSave = kernelData + 0xc00;
    inline constexpr uint64_t pageTablePool = 0x8001'0000;
    inline constexpr uint64_t pageTablePoolSize = 0x1'0000;
    inline constexpr uint64_t kernelSpanEnd = 0x8002'0000;   // boot..page tables, identity mapped
    inline constexpr uint64_t protectedBase = 0x8010'0000;
    inline constexpr uint64_t protectedSize = 32 * 1024;
    inline constexpr uint64_t taskList = 0x8018'0000;
    inline constexpr uint64_t taskListSize = 36 * 1024;
    inline constexpr uint64_t taskEntrySize = 32;
    inline constexpr uint64_t userPhysBase = 0x8020'0000;
    inline constexpr uint64_t userPhysStride = 0x1'0000;
    inline constexpr uint64_t handlerVa = 0x0040'0000;
    inline constexpr uint64_t benchVa = 0x0041'0000;

    // Kernel variable offsets from kernelVars.
    inline constexpr uint64_t kvCurrent = 0;
    inline constexpr uint64_t kvNtasks = 8;
    inline constexpr uint64_t kvPreemptions = 16;
    inline constexpr uint64_t kvLateRestore = 24;
    inline constexpr uint64_t kvFaultCause = 32;
    inline constexpr uint64_t kvFaultTval = 40;
    inline constexpr uint64_t kvFaultEpc = 48;
    inline constexpr uint64_t kvSyscalls = 56;

    inline constexpr uint64_t taskMagic = 0x7461'736b'5f6f'6b21;   // "task_ok!"
    inline constexpr uint64_t endMagic = 0x7461'736b'5f65'6e64;    // "task_end"
    inline constexpr uint64_t panicCode = 0xdead;
    inline constexpr uint64_t faultExitBase = 0x200;
    inline constexpr uint64_t defaultFill = 0xbadc'0ffe'e0dd'f00d;

    /// Initial content of dword i of the protected region.
    constexpr uint64_t protectedSeed(uint64_t i)
    { return 0x4b45'524e'0000'0000ull | i; }
  }

  /// Builds Sv39 tables inside a fixed physical pool. Tables are
  /// allocated in order starting with the root.
  class PageTableBuilder
  {
  public:
    explicit PageTableBuilder(uint64_t poolBase = layout::pageTablePool,
                              uint64_t poolSize = layout::pageTablePoolSize)
      : base_(poolBase), capacity_(poolSize / pageSize)
    {
      allocate();
    }

    uint64_t rootAddress() const
    { return base_; }

    uint64_t rootPpn() const
    { return base_ >> pageShift; }

    uint64_t satpValue() const
    { return satp::make(satp::modeSv39, rootPpn()); }

    /// Map one leaf at `level` (0 = 4 KiB, 1 = 2 MiB, 2 = 1 GiB). The
    /// A and D bits are always set.
    void map(uint64_t va, uint64_t pa, uint64_t flags, int level = 0)
    {
      if (!isCanonicalSv39(va))
        throw BuildError("non-canonical virtual address " + hex64(va));
      uint64_t table = 0;
      for (int l = 2; l > level; --l)
        {
          Pte pte{ entry(table, vpn(va, l)) };
          if (!pte.v())
            {
              uint64_t child = allocate();
              entry(table, vpn(va, l)) = Pte::make((base_ >> pageShift) + child, Pte::V).raw;
              table = child;
            }
          else
            {
              if (pte.isLeaf())
                throw BuildError("mapping " + hex64(va) + " collides with a superpage");
              table = pte.ppn() - (base_ >> pageShift);
            }
        }
      uint64_t& leaf = entry(table, vpn(va, level));
      if (Pte{ leaf }.v())
        throw BuildError("virtual page " + hex64(va) + " mapped twice");
      leaf = Pte::make(pa >> pageShift, flags | Pte::V | Pte::A | Pte::D).raw;
    }

    /// Map [va, va + size) to [pa, pa + size) with 4 KiB pages.
    void mapRange(uint64_t va, uint64_t pa, uint64_t size, uint64_t flags)
    {
      for (uint64_t off = 0; off < size; off += pageSize)
        map(va + off, pa + off, flags);
    }

    /// Direct write of a raw entry, for building malformed tables in tests.
    void setRaw(size_t tableIndex, unsigned slot, uint64_t raw)
    { entry(tableIndex, slot) = raw; }

    size_t tableCount() const
    { return tables_.size(); }

    Segment segment() const
    {
      Segment s{ base_, {} };
      s.bytes.reserve(tables_.size() * pageSize);
      for (const auto& t : tables_)
        for (uint64_t v : t)
          for (int i = 0; i < 8; ++i)
            s.bytes.push_back(uint8_t(v >> (8 * i)));
      return s;
    }

  private:
    size_t allocate()
    {
      if (tables_.size() == capacity_)
        throw BuildError("page-table pool exhausted");
      tables_.emplace_back();
      tables_.back().fill(0);
      return tables_.size() - 1;
    }

    uint64_t& entry(size_t table, uint64_t index)
    { return tables_.at(table)[index]; }

    uint64_t base_;
    size_t capacity_;
    std::vector<std::array<uint64_t, 512>> tables_;
  };

  enum class Scenario : uint8_t { KernelCs, Multitask, Race, Integrity, Availability, Sweep, Baseline };

  constexpr std::string_view scenarioName(Scenario s)
  {
    switch (s)
      {
      case Scenario::KernelCs: return "kernel_cs";
      case Scenario::Multitask: return "multitask";
      case Scenario::Race: return "race";
      case Scenario::Integrity: return "integrity";
      case Scenario::Availability: return "availability";
      case Scenario::Sweep: return "sweep";
      case Scenario::Baseline: return "baseline";
      }
    return "?";
  }

  inline Scenario scenarioFromName(std::string_view s)
  {
    for (Scenario sc : { Scenario::KernelCs, Scenario::Multitask, Scenario::Race, Scenario::Integrity,
                         Scenario::Availability, Scenario::Sweep, Scenario::Baseline })
      {
        std::string_view n = scenarioName(sc);
        if (s == n)
          return sc;
        // accept the dashed spelling used by CLI subcommands
        std::string dashed(n);
        std::replace(dashed.begin(), dashed.end(), '_', '-');
        if (s == dashed)
          return sc;
      }
    throw Error("unknown scenario: " + std::string(s));
  }

  enum class Verdict : uint8_t { AttackSucceeds, StoreFaults, KernelPanicMarker, Inconclusive };

  constexpr std::string_view verdictName(Verdict v)
  {
    switch (v)
      {
      case Verdict::AttackSucceeds: return "AttackSucceeds";
      case Verdict::StoreFaults: return "StoreFaults";
      case Verdict::KernelPanicMarker: return "KernelPanicMarker";
      case Verdict::Inconclusive: return "Inconclusive";
      }
    return "?";
  }

  inline constexpr std::array<double, 5> referenceKbytes = { 0.5, 1, 4, 16, 32 };

  struct ScenarioParams
  {
    Scenario scenario = Scenario::KernelCs;
    double kbytes = 1;
    uint64_t quantum = 2000;
    static constexpr uint64_t minQuantum = 600;   // below this the tick path can starve every task
    uint64_t seed = 1;
    TrojanConfig trojan;
    std::vector<unsigned> sweepBits = { 8, 9, 10, 11, 12, 13, 14, 15, 16 };
    uint64_t fill = layout::defaultFill;

    /// Number of 8-byte stores the handling process issues.
    uint64_t storeCount() const
    {
      double bytes = kbytes * 1024.0;
      if (!(bytes >= 8) || bytes != std::floor(bytes) || uint64_t(bytes) % 8 != 0)
        throw BuildError("kbytes must be a positive multiple of 8 bytes, got " + std::to_string(kbytes));
      return uint64_t(bytes) / 8;
    }

    bool isReferenceRow() const
    {
      return std::find(referenceKbytes.begin(), referenceKbytes.end(), kbytes) != referenceKbytes.end();
    }
  };

  struct ExpectedOutcome
  {
    Verdict verdict = Verdict::AttackSucceeds;
    uint64_t patternAddress = 0;          // physical address of the overwritten range
    uint64_t patternBytes = 0;
    uint64_t fill = 0;
    uint64_t suppressedFaults = 0;        // exact count expected on success
    std::optional<uint64_t> faultAddress; // stval expected when a store faults
    bool referenceRow = true;
  };

  /// Where the pieces of a built scenario ended up.
  struct GuestLayout
  {
    std::vector<uint64_t> taskEntries;      // user virtual entry points, in TCB order
    std::vector<std::pair<uint64_t, uint64_t>> userText;   // (va, size) per task
    uint64_t rootPpn = 0;
    uint64_t satp = 0;
  };

  struct BuiltScenario
  {
    Scenario scenario = Scenario::KernelCs;
    MemoryImage image;
    ExpectedOutcome expected;
    GuestLayout layout;
    TrojanConfig trojan;                   // the trojan the scenario is meant to run with
  };

  namespace guestdetail
  {
    inline uint64_t splitmix(uint64_t x)
    {
      x += 0x9e3779b97f4a7c15ull;
      x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
      x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
      return x ^ (x >> 31);
    }

    /// Replace whole-word occurrences of the host-register placeholders.
    inline std::string bindHostRegs(std::string_view src, const TrojanConfig& cfg)
    {
      std::string out;
      out.reserve(src.size());
      auto isWord = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
      for (size_t i = 0; i < src.size();)
        {
          bool boundary = i == 0 || !isWord(src[i - 1]);
          auto tryToken = [&](std::string_view tok, unsigned reg) {
            if (boundary && src.substr(i, tok.size()) == tok &&
                (i + tok.size() == src.size() || !isWord(src[i + tok.size()])))
              {
                out += "x" + std::to_string(reg);
                i += tok.size();
                return true;
              }
            return false;
          };
          if (tryToken("HOST_A", cfg.hostRegs[0]) || tryToken("HOST_B", cfg.hostRegs[1]))
            continue;
          out += src[i++];
        }
      return out;
    }

    class EquBlock
    {
    public:
      EquBlock& set(const std::string& name, uint64_t v)
      {
        os_ << ".equ " << name << ", " << hex64(v) << '\n';
        return *this;
      }

      std::string str() const
      { return os_.str(); }

    private:
      std::ostringstream os_;
    };

    inline void putDword(std::vector<uint8_t>& b, uint64_t offset, uint64_t v)
    {
      if (b.size() < offset + 8)
        b.resize(offset + 8, 0);
      for (int i = 0; i < 8; ++i)
        b[offset + i] = uint8_t(v >> (8 * i));
    }

    inline EquBlock commonConstants()
    {
      EquBlock e;
      e.set("EXIT_PORT", addr::exitPort)
        .set("MTIME", addr::mtime)
        .set("MTIMECMP", addr::mtimecmp)
        .set("BOOT_BASE", layout::bootBase)
        .set("KTEXT", layout::kernelText)
        .set("TCB_BASE", layout::tcbBase)
        .set("KVARS", layout::kernelVars)
        .set("MSAVE", layout::machineSave)
        .set("TASKLIST", layout::taskList)
        .set("TASK_MAGIC", layout::taskMagic)
        .set("END_MAGIC", layout::endMagic)
        .set("PANIC_CODE", layout::panicCode)
        .set("KV_CURRENT", layout::kvCurrent)
        .set("KV_NTASKS", layout::kvNtasks)
        .set("KV_PREEMPT", layout::kvPreemptions)
        .set("KV_LATE", layout::kvLateRestore)
        .set("KV_FCAUSE", layout::kvFaultCause)
        .set("KV_FTVAL", layout::kvFaultTval)
        .set("KV_FEPC", layout::kvFaultEpc)
        .set("KV_SYSCALLS", layout::kvSyscalls);
      return e;
    }

    /// Assemble a user program at `va` and move it to physical `pa`.
    inline std::pair<MemoryImage, uint64_t> assembleUser(const std::string& src, uint64_t va, uint64_t pa)
    {
      MemoryImage img = assemble(src);
      MemoryImage out;
      uint64_t end = va;
      for (Segment s : img.segments)
        {
          if (s.address < va || s.end() > va + layout::userPhysStride)
            throw BuildError("user program segment outside its window at " + hex64(s.address));
          end = std::max(end, s.end());
          s.address = s.address - va + pa;
          out.add(std::move(s));
        }
      out.entry = img.entry;
      out.symbols = img.symbols;
      return { out, end - va };
    }

    inline uint64_t pagesFor(uint64_t bytes)
    { return (bytes + pageSize - 1) / pageSize * pageSize; }
  }

  /// Build the memory image and expected outcome for one scenario.
  /// Throws BuildError on invalid parameters.
  inline BuiltScenario buildScenario(const ScenarioParams& params)
  {
    using namespace guestdetail;
    if (params.scenario == Scenario::Sweep)
      throw BuildError("the sweep scenario is built per width with buildSweepLoop");
    if (params.quantum < ScenarioParams::minQuantum)
      throw BuildError("quantum must be at least " + std::to_string(ScenarioParams::minQuantum) + " cycles");

    BuiltScenario out;
    out.scenario = params.scenario;
    out.trojan = params.trojan;
    if (params.scenario == Scenario::Baseline)
      out.trojan.kind = TrojanKind::Disabled;
    out.trojan.validate();

    const bool irt2Handler = out.trojan.kind == TrojanKind::Irt2;
    if (params.scenario == Scenario::Race && out.trojan.kind == TrojanKind::Irt2)
      throw BuildError("the race scenario needs the register-pair trigger (irt1) or none");

    for (uint8_t r : out.trojan.hostRegs)
      for (uint8_t scratch : { 5, 6, 7, 10, 17, 31 })
        if (r == scratch)
          throw BuildError("host register x" + std::to_string(r) + " is used as scratch by the handling process");

    // What gets overwritten and how much.
    const bool race = params.scenario == Scenario::Race;
    const uint64_t stores = race ? 1 : params.storeCount();
    const uint64_t bytes = stores * 8;
    uint64_t target = layout::protectedBase;
    if (params.scenario == Scenario::Availability)
      {
        target = layout::taskList + layout::taskEntrySize;
        if (bytes > layout::taskListSize - layout::taskEntrySize)
          throw BuildError("kbytes exceeds the mapped task-list region");
      }
    else if (bytes > layout::protectedSize)
      throw BuildError("kbytes exceeds the mapped protected region (" +
                       std::to_string(layout::protectedSize / 1024) + " KiB)");

    // Tasks: the handling process first, then the benchmark if any.
    const bool withBench = params.scenario == Scenario::Multitask || params.scenario == Scenario::Integrity;
    std::vector<std::pair<std::string, uint64_t>> tasks;   // (source, va)
    {
      EquBlock e;
      e.set("USER_TEXT", layout::handlerVa)
        .set("TARGET", target)
        .set("NSTORES", stores)
        .set("FILL", params.fill)
        .set("ACT_FIRST", out.trojan.activation.first)
        .set("ACT_SECOND", out.trojan.activation.second)
        .set("DEACT_FIRST", out.trojan.deactivation.first)
        .set("DEACT_SECOND", out.trojan.deactivation.second);
      std::string_view body = race ? guest_src::handler_race
                            : irt2Handler ? guest_src::handler_irt2 : guest_src::handler_irt1;
      tasks.emplace_back(e.str() + bindHostRegs(body, out.trojan), layout::handlerVa);
    }
    if (withBench)
      {
        EquBlock e;
        e.set("USER_TEXT", layout::benchVa).set("BENCH_SEED", splitmix(params.seed) | 1);
        tasks.emplace_back(e.str() + std::string(guest_src::bench), layout::benchVa);
      }

    PageTableBuilder pt;
    MemoryImage image;

    const uint64_t kflags = Pte::R | Pte::W | Pte::X;
    pt.mapRange(layout::bootBase, layout::bootBase, layout::kernelSpanEnd - layout::bootBase, kflags);
    pt.mapRange(layout::protectedBase, layout::protectedBase, layout::protectedSize, Pte::R | Pte::W);
    pt.mapRange(layout::taskList, layout::taskList, layout::taskListSize, Pte::R | Pte::W);
    pt.map(addr::exitPort & ~(pageSize - 1), addr::exitPort & ~(pageSize - 1), Pte::R | Pte::W);

    for (size_t i = 0; i < tasks.size(); ++i)
      {
        uint64_t pa = layout::userPhysBase + i * layout::userPhysStride;
        auto [img, size] = assembleUser(tasks[i].first, tasks[i].second, pa);
        pt.mapRange(tasks[i].second, pa, pagesFor(size), Pte::R | Pte::X | Pte::U);
        for (const Segment& s : img.segments)
          image.add(s);
        out.layout.taskEntries.push_back(img.entry);
        out.layout.userText.emplace_back(tasks[i].second, size);
      }

    // Boot stub and kernel share one source so they can refer to each
    // other's labels.
    const uint64_t firstQuantum = params.quantum + splitmix(params.seed) % (params.quantum / 4 + 1);
    EquBlock sys = commonConstants();
    sys.set("QUANTUM", params.quantum)
      .set("FIRST_QUANTUM", firstQuantum)
      .set("MEDELEG_BITS", (1u << 0) | (1u << 1) | (1u << 2) | (1u << 5) | (1u << 7) | (1u << 8) |
                               (1u << 12) | (1u << 13) | (1u << 15))
      .set("MIDELEG_BITS", irq::SSIP | irq::STIP)
      .set("MIE_BITS", irq::MTIP | irq::STIP)
      .set("SATP_VALUE", pt.satpValue())
      .set("USER_ENTRY", out.layout.taskEntries.front());
    MemoryImage system = assemble(sys.str() + std::string(guest_src::boot) + "\n" + std::string(guest_src::kernel));
    for (const Segment& s : system.segments)
      {
        if (s.address < layout::bootBase || s.end() > layout::kernelData)
          throw BuildError("kernel code overflows its window");
        image.add(s);
      }
    image.entry = system.requireSymbol("_start");
    image.symbols = system.symbols;

    // Kernel data: TCBs and kernel variables.
    if (tasks.size() > layout::maxTasks)
      throw BuildError("too many tasks");
    Segment kdata{ layout::kernelData, {} };
    for (size_t i = 0; i < tasks.size(); ++i)
      putDword(kdata.bytes, i * layout::tcbSize, out.layout.taskEntries[i]);
    uint64_t kv = layout::kernelVars - layout::kernelData;
    putDword(kdata.bytes, kv + layout::kvCurrent, 0);
    putDword(kdata.bytes, kv + layout::kvNtasks, tasks.size());
    putDword(kdata.bytes, kv + layout::kvLateRestore, race ? 1 : 0);
    putDword(kdata.bytes, kv + layout::kvSyscalls, 0);
    kdata.bytes.resize(layout::machineSave + 64 - layout::kernelData, 0);
    image.add(std::move(kdata));

    Segment prot{ layout::protectedBase, {} };
    for (uint64_t i = 0; i < layout::protectedSize / 8; ++i)
      putDword(prot.bytes, i * 8, layout::protectedSeed(i));
    image.add(std::move(prot));

    Segment tl{ layout::taskList, {} };
    for (size_t i = 0; i <= tasks.size(); ++i)
      {
        putDword(tl.bytes, i * layout::taskEntrySize, layout::taskMagic);
        putDword(tl.bytes, i * layout::taskEntrySize + 8, i == 0 ? 0 : layout::tcbBase + (i - 1) * layout::tcbSize);
      }
    putDword(tl.bytes, (tasks.size() + 1) * layout::taskEntrySize, layout::endMagic);
    image.add(std::move(tl));

    image.add(pt.segment());

    out.image = std::move(image);
    out.layout.rootPpn = pt.rootPpn();
    out.layout.satp = pt.satpValue();

    ExpectedOutcome& ex = out.expected;
    ex.patternAddress = target;
    ex.patternBytes = bytes;
    ex.fill = params.fill;
    ex.referenceRow = params.isReferenceRow();
    ex.suppressedFaults = stores;
    switch (params.scenario)
      {
      case Scenario::Baseline:
        ex.verdict = Verdict::StoreFaults;
        ex.faultAddress = target;
        ex.suppressedFaults = 0;
        ex.patternBytes = 0;
        break;
      case Scenario::Race:
        ex.verdict = Verdict::StoreFaults;
        ex.faultAddress = target + 8;
        ex.suppressedFaults = 1;
        break;
      case Scenario::Availability:
        ex.verdict = Verdict::KernelPanicMarker;
        break;
      default:
        ex.verdict = out.trojan.kind == TrojanKind::Disabled ? Verdict::StoreFaults : Verdict::AttackSucceeds;
        if (out.trojan.kind == TrojanKind::Disabled)
          {
            ex.faultAddress = target;
            ex.suppressedFaults = 0;
            ex.patternBytes = 0;
          }
        break;
      }
    if (params.scenario == Scenario::Availability && out.trojan.kind == TrojanKind::Disabled)
      {
        ex.verdict = Verdict::StoreFaults;
        ex.faultAddress = target;
        ex.suppressedFaults = 0;
        ex.patternBytes = 0;
      }
    return out;
  }

  struct SweepLoop
  {
    unsigned bits = 0;
    MemoryImage image;
    uint64_t loopLength = 0;          // instructions per iteration
    uint64_t iterations = 0;
    uint64_t fixedInstructions = 0;   // prologue + epilogue
    uint64_t loopStart = 0;
    uint64_t loopEnd = 0;             // address after the loop's last instruction

    uint64_t expectedInstructions() const
    { return fixedInstructions + loopLength * iterations; }
  };

  /// User-mode loop that steps the host register pair through all
  /// 2^bits low-order values and then exits.
  inline SweepLoop buildSweepLoop(unsigned bits, const TrojanConfig& trojan = {})
  {
    using namespace guestdetail;
    if (bits < 4 || bits > 32)
      throw BuildError("sweep width must be in 4..32 bits");
    for (uint8_t r : trojan.hostRegs)
      if (r == 0 || r == 5 || r == 6 || r == 7)
        throw BuildError("host register x" + std::to_string(r) + " is used by the sweep loop");
    EquBlock e;
    e.set("BOOT_BASE", layout::bootBase)
      .set("EXIT_PORT", addr::exitPort)
      .set("SWEEP_MASK", (uint64_t(1) << bits) - 1);
    SweepLoop s;
    s.bits = bits;
    s.image = assemble(e.str() + bindHostRegs(guest_src::sweep, trojan));
    s.loopStart = s.image.requireSymbol("s_loop");
    uint64_t start = s.image.requireSymbol("_start");
    uint64_t hang = s.image.requireSymbol("s_hang");
    s.loopLength = 5;
    s.loopEnd = s.loopStart + 4 * s.loopLength;
    s.iterations = uint64_t(1) << bits;
    s.fixedInstructions = (s.loopStart - start) / 4 + (hang - s.loopEnd) / 4;
    return s;
  }

}  // namespace irtsim
