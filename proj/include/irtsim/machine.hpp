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
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "csr.hpp"
#include "image.hpp"
#include "isa.hpp"
#include "memory.hpp"
#include "mmu.hpp"
#include "trojan.hpp"
#include "types.hpp"

namespace irtsim
{

  struct MachineConfig
  {
    TimingParams timing;
    uint64_t memSize = PhysicalMemory::defaultSize;
    size_t tlbCapacity = 16;
    bool tlbEnabled = true;
  };

  /// Architectural state plus the accounting the experiments read.
  struct MachineState
  {
    uint64_t pc = addr::ramBase;
    std::array<uint64_t, 32> gpr{};
    Mode mode = Mode::Machine;
    CsrFile csr;
    uint64_t cycles = 0;
    uint64_t instret = 0;
    PhysicalMemory mem;
    PerMode modeEntries{};
    PerMode modeCycles{};
    std::map<uint64_t, uint64_t> trapCounts;   // xcause -> count

    explicit MachineState(uint64_t memSize = PhysicalMemory::defaultSize)
      : mem(memSize)
    { }

    /// Digest of pc, registers, mode, CSRs and counters (not memory).
    uint64_t digest() const
    {
      Fnv1a h;
      h.add(pc);
      for (uint64_t r : gpr)
        h.add(r);
      h.add(uint64_t(mode));
      h.add(csr.digest());
      h.add(cycles);
      h.add(instret);
      return h.value();
    }
  };

  struct StepOutcome
  {
    enum class Kind : uint8_t { Retired, Trapped, Halted };
    Kind kind = Kind::Retired;
    std::optional<TrapCause> trap;
  };

  enum class StopReason : uint8_t { Exited, Sentinel, Timeout };

  constexpr std::string_view stopReasonName(StopReason r)
  {
    switch (r)
      {
      case StopReason::Exited: return "exited";
      case StopReason::Sentinel: return "sentinel";
      case StopReason::Timeout: return "timeout";
      }
    return "?";
  }

  struct StopCondition
  {
    uint64_t maxCycles = 100'000'000;
    std::optional<uint64_t> sentinelPc;
  };

  struct RunSummary
  {
    StopReason reason = StopReason::Timeout;
    uint64_t exitCode = 0;
    uint64_t cycles = 0;
    uint64_t instret = 0;
    PerMode modeEntries{};
    PerMode modeCycles{};
    PayloadStats payload;
    std::map<uint64_t, uint64_t> trapCounts;
    uint64_t stateDigest = 0;
    uint64_t memoryDigest = 0;
    std::string console;

    bool operator==(const RunSummary&) const = default;
  };

  /// Per-cycle observation handed to tracing hooks.
  struct CycleEvent
  {
    uint64_t cycle = 0;      // index of the elapsed cycle (0-based)
    Mode mode = Mode::Machine;
    uint64_t pc = 0;
    bool raw = false;
    bool delivered = false;
  };

  struct TrapEvent
  {
    uint64_t cycle = 0;
    TrapCause cause;
    uint64_t tval = 0;
    uint64_t epc = 0;
    Mode from = Mode::Machine;
    Mode to = Mode::Machine;
  };

  /// Thrown from inside a step when the run's cycle budget is used up.
  struct CycleBudgetExhausted { };

  /// RV64 hart with M/S/U modes, Sv39, a CLINT-style timer and a simple
  /// additive cycle model. The trojan layer is a template parameter so a
  /// machine can be built with no trojan at all (NoTrojan).
  template <typename Trojan = TrojanRuntime>
  class Machine
  {
  public:
    explicit Machine(const MachineConfig& cfg = {}, Trojan trojan = Trojan())
      : state(cfg.memSize), cfg_(cfg), tlb_(cfg.tlbCapacity, cfg.tlbEnabled), trojan_(std::move(trojan))
    { }

    MachineState state;

    std::function<void(const CycleEvent&)> onCycle;
    std::function<void(const TranslationRequest&, const TranslationResult&)> onTranslate;
    std::function<void(const TrapEvent&)> onTrap;

    const MachineConfig& config() const { return cfg_; }
    Trojan& trojan() { return trojan_; }
    const Trojan& trojan() const { return trojan_; }
    Tlb& tlb() { return tlb_; }
    bool halted() const { return halted_; }
    uint64_t exitCode() const { return exitCode_; }
    const std::string& console() const { return console_; }

    /// Copy image segments into RAM; pc = entry, mode = Machine.
    void load(const MemoryImage& image)
    {
      for (const Segment& s : image.segments)
        if (!state.mem.load(s.address, s.bytes))
          throw Error("segment at " + hex64(s.address) + " does not fit in physical memory");
      state.pc = image.entry;
      state.mode = Mode::Machine;
    }

    uint64_t now() const
    { return state.cycles; }

    /// Let n cycles elapse. The trojan is ticked once per cycle and sees
    /// the register file as it is during the stall.
    void advance(uint64_t n)
    {
      for (uint64_t i = 0; i < n; ++i)
        {
          if (state.cycles >= budget_)
            throw CycleBudgetExhausted{};
          bool delivered = trojan_.tick(std::span<const uint64_t, 32>(state.gpr));
          if (onCycle)
            onCycle({ state.cycles, state.mode, state.pc, trojan_.rawNow(), delivered });
          ++state.cycles;
          ++state.csr.mtime;
          ++state.modeCycles[modeIndex(state.mode)];
        }
      state.csr.updateTimerPending();
    }

    /// Trap entry: pick the target mode from the delegation registers,
    /// fill xepc/xcause/xtval and jump to xtvec.
    void raiseTrap(TrapCause cause, uint64_t tval)
    {
      CsrFile& csr = state.csr;
      Mode from = state.mode;
      bool delegated = cause.isInterrupt ? ((csr.mideleg >> cause.code) & 1) : ((csr.medeleg >> cause.code) & 1);
      Mode target = (delegated && from != Mode::Machine) ? Mode::Supervisor : Mode::Machine;

      if (target == Mode::Supervisor)
        {
          csr.sepc = state.pc;
          csr.scause = cause.xcause();
          csr.stval = tval;
          uint64_t s = csr.mstatus;
          s = (s & mstatus::SIE) ? (s | mstatus::SPIE) : (s & ~mstatus::SPIE);
          s &= ~mstatus::SIE;
          s = (from == Mode::Supervisor) ? (s | mstatus::SPP) : (s & ~mstatus::SPP);
          csr.mstatus = s;
          state.pc = csr.stvec;
        }
      else
        {
          csr.mepc = state.pc;
          csr.mcause = cause.xcause();
          csr.mtval = tval;
          uint64_t s = csr.mstatus;
          s = (s & mstatus::MIE) ? (s | mstatus::MPIE) : (s & ~mstatus::MPIE);
          s &= ~mstatus::MIE;
          s = (s & ~mstatus::MPP) | (uint64_t(from) << mstatus::MPP_SHIFT);
          csr.mstatus = s;
          state.pc = csr.mtvec;
        }

      state.mode = target;
      ++state.modeEntries[modeIndex(target)];
      ++state.trapCounts[cause.xcause()];
      if (onTrap)
        onTrap({ state.cycles, cause, tval, target == Mode::Supervisor ? csr.sepc : csr.mepc, from, target });
      advance(cfg_.timing.trapEntryCost);
    }

    StepOutcome step()
    {
      if (halted_)
        return { StepOutcome::Kind::Halted, std::nullopt };

      takePendingInterrupt();

      uint64_t pc = state.pc;
      auto fetch = translateAccess(pc, Access::Fetch);
      if (!fetch.ok())
        return trapWithBaseCycle(fetch.fault, pc);
      auto word = state.mem.read(*fetch.pa, 4);
      if (!word)
        return trapWithBaseCycle(TrapCause::exception(ExceptionCode::InstAccessFault), pc);

      auto inst = decode(uint32_t(*word));
      if (!inst)
        return trapWithBaseCycle(TrapCause::exception(ExceptionCode::IllegalInstruction), *word);

      if (inst->mnemonic == Mnemonic::Add)
        trojan_.onAdd(state.gpr[inst->rs1], state.gpr[inst->rs2]);
      advance(1);

      return execute(*inst);
    }

    RunSummary run(const StopCondition& stop)
    {
      RunSummary sum;
      budget_ = stop.maxCycles;
      try
        {
          for (;;)
            {
              if (halted_)
                {
                  sum.reason = StopReason::Exited;
                  break;
                }
              if (stop.sentinelPc && state.pc == *stop.sentinelPc)
                {
                  sum.reason = StopReason::Sentinel;
                  break;
                }
              if (state.cycles >= stop.maxCycles)
                {
                  sum.reason = StopReason::Timeout;
                  break;
                }
              step();
            }
        }
      catch (const CycleBudgetExhausted&)
        {
          sum.reason = StopReason::Timeout;
        }
      budget_ = std::numeric_limits<uint64_t>::max();
      return summarize(sum);
    }

    RunSummary summarize(RunSummary sum = {}) const
    {
      sum.exitCode = exitCode_;
      sum.cycles = state.cycles;
      sum.instret = state.instret;
      sum.modeEntries = state.modeEntries;
      sum.modeCycles = state.modeCycles;
      sum.payload = trojan_.stats();
      sum.trapCounts = state.trapCounts;
      sum.stateDigest = state.digest();
      sum.memoryDigest = state.mem.digest();
      sum.console = console_;
      return sum;
    }

    /// Translate va for the given access in the current mode, accruing
    /// walk cycles.
    TranslationResult translateAccess(uint64_t va, Access access)
    {
      TranslationRequest req{ va, access, state.mode, bool(state.csr.mstatus & mstatus::SUM),
                              bool(state.csr.mstatus & mstatus::MXR) };
      TranslationResult res = translate(req, state.csr.satp, tlb_, state.mem, cfg_.timing, *this, trojan_);
      if (onTranslate)
        onTranslate(req, res);
      return res;
    }

  private:
    StepOutcome trapWithBaseCycle(TrapCause cause, uint64_t tval)
    {
      advance(1);
      raiseTrap(cause, tval);
      return { StepOutcome::Kind::Trapped, cause };
    }

    StepOutcome trap(TrapCause cause, uint64_t tval)
    {
      raiseTrap(cause, tval);
      return { StepOutcome::Kind::Trapped, cause };
    }

    void takePendingInterrupt()
    {
      CsrFile& csr = state.csr;
      csr.updateTimerPending();
      uint64_t pending = csr.mip & csr.mie;
      if (!pending)
        return;

      static constexpr unsigned priority[] = { 11, 3, 7, 9, 1, 5 };
      for (unsigned code : priority)
        {
          if (!((pending >> code) & 1))
            continue;
          bool toSupervisor = (csr.mideleg >> code) & 1;
          bool enabled;
          if (toSupervisor)
            enabled = state.mode == Mode::User ||
                      (state.mode == Mode::Supervisor && (csr.mstatus & mstatus::SIE));
          else
            enabled = state.mode != Mode::Machine || (csr.mstatus & mstatus::MIE);
          if (enabled)
            {
              raiseTrap({ true, code }, 0);
              return;
            }
        }
    }

    void writeReg(unsigned rd, uint64_t value)
    {
      if (rd != 0)
        state.gpr[rd] = value;
    }

    StepOutcome retire(uint64_t nextPc)
    {
      state.pc = nextPc;
      ++state.instret;
      state.gpr[0] = 0;
      return {};
    }

    StepOutcome jumpTo(uint64_t target, unsigned rd, uint64_t link)
    {
      if (target & 3)
        return trap(TrapCause::exception(ExceptionCode::InstAddrMisaligned), target);
      writeReg(rd, link);
      return retire(target);
    }

    std::optional<uint64_t> readPhysical(uint64_t pa, unsigned size)
    {
      if (pa == addr::mtime && size == 8)
        return state.csr.mtime;
      if (pa == addr::mtimecmp && size == 8)
        return state.csr.mtimecmp;
      if (pa == addr::exitPort || pa == addr::putcharPort)
        return 0;
      return state.mem.read(pa, size);
    }

    bool writePhysical(uint64_t pa, unsigned size, uint64_t value)
    {
      if (pa == addr::mtime && size == 8)
        {
          state.csr.mtime = value;
          state.csr.updateTimerPending();
          return true;
        }
      if (pa == addr::mtimecmp && size == 8)
        {
          state.csr.mtimecmp = value;
          state.csr.updateTimerPending();
          return true;
        }
      if (pa == addr::exitPort)
        {
          halted_ = true;
          exitCode_ = value;
          return true;
        }
      if (pa == addr::putcharPort)
        {
          console_.push_back(char(value & 0xff));
          return true;
        }
      return state.mem.write(pa, size, value);
    }

    StepOutcome executeLoad(const Instruction& in)
    {
      uint64_t va = state.gpr[in.rs1] + uint64_t(in.imm);
      auto tr = translateAccess(va, Access::Load);
      if (!tr.ok())
        return trap(tr.fault, va);
      unsigned size = accessSize(in.mnemonic);
      auto value = readPhysical(*tr.pa, size);
      advance(cfg_.timing.memAccessCycles);
      if (!value)
        return trap(TrapCause::exception(ExceptionCode::LoadAccessFault), va);
      uint64_t v = *value;
      switch (in.mnemonic)
        {
        case Mnemonic::Lb: v = uint64_t(detail::sext(v, 8)); break;
        case Mnemonic::Lh: v = uint64_t(detail::sext(v, 16)); break;
        case Mnemonic::Lw: v = uint64_t(detail::sext(v, 32)); break;
        default: break;
        }
      writeReg(in.rd, v);
      return retire(state.pc + 4);
    }

    StepOutcome executeStore(const Instruction& in)
    {
      uint64_t va = state.gpr[in.rs1] + uint64_t(in.imm);
      auto tr = translateAccess(va, Access::Store);
      if (!tr.ok())
        return trap(tr.fault, va);
      unsigned size = accessSize(in.mnemonic);
      advance(cfg_.timing.memAccessCycles);
      if (!writePhysical(*tr.pa, size, state.gpr[in.rs2]))
        return trap(TrapCause::exception(ExceptionCode::StoreAccessFault), va);
      return retire(state.pc + 4);
    }

    std::optional<uint64_t> readCsr(uint16_t num) const
    {
      const CsrFile& c = state.csr;
      switch (CsrNumber(num))
        {
        case CsrNumber::Sstatus: return c.mstatus & mstatus::sstatusMask;
        case CsrNumber::Sie: return c.mie & c.mideleg;
        case CsrNumber::Stvec: return c.stvec;
        case CsrNumber::Sscratch: return c.sscratch;
        case CsrNumber::Sepc: return c.sepc;
        case CsrNumber::Scause: return c.scause;
        case CsrNumber::Stval: return c.stval;
        case CsrNumber::Sip: return c.mip & c.mideleg;
        case CsrNumber::Satp: return c.satp;
        case CsrNumber::Mstatus: return c.mstatus;
        case CsrNumber::Misa: return CsrFile::misaValue;
        case CsrNumber::Medeleg: return c.medeleg;
        case CsrNumber::Mideleg: return c.mideleg;
        case CsrNumber::Mie: return c.mie;
        case CsrNumber::Mtvec: return c.mtvec;
        case CsrNumber::Mscratch: return c.mscratch;
        case CsrNumber::Mepc: return c.mepc;
        case CsrNumber::Mcause: return c.mcause;
        case CsrNumber::Mtval: return c.mtval;
        case CsrNumber::Mip: return c.mip;
        case CsrNumber::Mcycle:
        case CsrNumber::Cycle: return state.cycles;
        case CsrNumber::Time: return c.mtime;
        case CsrNumber::Minstret:
        case CsrNumber::Instret: return state.instret;
        case CsrNumber::Mhartid: return 0;
        }
      return std::nullopt;
    }

    void writeCsr(uint16_t num, uint64_t v)
    {
      CsrFile& c = state.csr;
      switch (CsrNumber(num))
        {
        case CsrNumber::Sstatus:
          c.writeMstatus((c.mstatus & ~mstatus::sstatusMask) | (v & mstatus::sstatusMask));
          break;
        case CsrNumber::Sie: c.mie = (c.mie & ~c.mideleg) | (v & c.mideleg); break;
        case CsrNumber::Stvec: c.stvec = v & ~uint64_t(3); break;
        case CsrNumber::Sscratch: c.sscratch = v; break;
        case CsrNumber::Sepc: c.sepc = v & ~uint64_t(3); break;
        case CsrNumber::Scause: c.scause = v; break;
        case CsrNumber::Stval: c.stval = v; break;
        case CsrNumber::Sip:
          {
            uint64_t mask = irq::SSIP & c.mideleg;
            c.mip = (c.mip & ~mask) | (v & mask);
            break;
          }
        case CsrNumber::Satp: c.writeSatp(v); break;
        case CsrNumber::Mstatus: c.writeMstatus(v); break;
        case CsrNumber::Medeleg: c.medeleg = v & medelegWritable; break;
        case CsrNumber::Mideleg: c.mideleg = v & irq::supervisorBits; break;
        case CsrNumber::Mie: c.mie = v & irq::all; break;
        case CsrNumber::Mtvec: c.mtvec = v & ~uint64_t(3); break;
        case CsrNumber::Mscratch: c.mscratch = v; break;
        case CsrNumber::Mepc: c.mepc = v & ~uint64_t(3); break;
        case CsrNumber::Mcause: c.mcause = v; break;
        case CsrNumber::Mtval: c.mtval = v; break;
        case CsrNumber::Mip:
          c.mip = (c.mip & ~irq::supervisorBits) | (v & irq::supervisorBits);
          break;
        default:
          // misa, counters, mhartid: writes ignored.
          break;
        }
    }

    StepOutcome executeCsr(const Instruction& in)
    {
      uint16_t num = uint16_t(in.imm & 0xfff);
      bool immForm = in.mnemonic == Mnemonic::Csrrwi || in.mnemonic == Mnemonic::Csrrsi ||
                     in.mnemonic == Mnemonic::Csrrci;
      uint64_t src = immForm ? in.rs1 : state.gpr[in.rs1];
      bool isWrite = in.mnemonic == Mnemonic::Csrrw || in.mnemonic == Mnemonic::Csrrwi || in.rs1 != 0;
      unsigned minPriv = (num >> 8) & 3;
      bool readOnly = ((num >> 10) & 3) == 3;
      auto old = readCsr(num);
      if (!old || unsigned(state.mode) < minPriv || (isWrite && readOnly))
        return trap(TrapCause::exception(ExceptionCode::IllegalInstruction), in.raw);

      if (isWrite)
        {
          uint64_t value = src;
          switch (in.mnemonic)
            {
            case Mnemonic::Csrrs:
            case Mnemonic::Csrrsi: value = *old | src; break;
            case Mnemonic::Csrrc:
            case Mnemonic::Csrrci: value = *old & ~src; break;
            default: break;
            }
          writeCsr(num, value);
        }
      writeReg(in.rd, *old);
      return retire(state.pc + 4);
    }

    StepOutcome executeXret(const Instruction& in, Mode level)
    {
      CsrFile& c = state.csr;
      if (unsigned(state.mode) < unsigned(level))
        return trap(TrapCause::exception(ExceptionCode::IllegalInstruction), in.raw);

      Mode next;
      uint64_t target;
      uint64_t s = c.mstatus;
      if (level == Mode::Machine)
        {
          next = Mode((s & mstatus::MPP) >> mstatus::MPP_SHIFT);
          s = (s & mstatus::MPIE) ? (s | mstatus::MIE) : (s & ~mstatus::MIE);
          s |= mstatus::MPIE;
          s &= ~mstatus::MPP;
          target = c.mepc;
        }
      else
        {
          next = (s & mstatus::SPP) ? Mode::Supervisor : Mode::User;
          s = (s & mstatus::SPIE) ? (s | mstatus::SIE) : (s & ~mstatus::SIE);
          s |= mstatus::SPIE;
          s &= ~mstatus::SPP;
          target = c.sepc;
        }
      c.mstatus = s;
      state.mode = next;
      ++state.modeEntries[modeIndex(next)];
      retire(target);
      advance(cfg_.timing.trapEntryCost);
      return {};
    }

    StepOutcome execute(const Instruction& in)
    {
      auto& x = state.gpr;
      const uint64_t a = x[in.rs1];
      const uint64_t b = x[in.rs2];
      const uint64_t imm = uint64_t(in.imm);
      const uint64_t pc = state.pc;
      auto sw = [](uint64_t v) { return uint64_t(detail::sext(v, 32)); };

      switch (in.mnemonic)
        {
        case Mnemonic::Lui: writeReg(in.rd, imm); break;
        case Mnemonic::Auipc: writeReg(in.rd, pc + imm); break;
        case Mnemonic::Jal: return jumpTo(pc + imm, in.rd, pc + 4);
        case Mnemonic::Jalr: return jumpTo((a + imm) & ~uint64_t(1), in.rd, pc + 4);

        case Mnemonic::Beq:
        case Mnemonic::Bne:
        case Mnemonic::Blt:
        case Mnemonic::Bge:
        case Mnemonic::Bltu:
        case Mnemonic::Bgeu:
          {
            bool taken = false;
            switch (in.mnemonic)
              {
              case Mnemonic::Beq: taken = a == b; break;
              case Mnemonic::Bne: taken = a != b; break;
              case Mnemonic::Blt: taken = int64_t(a) < int64_t(b); break;
              case Mnemonic::Bge: taken = int64_t(a) >= int64_t(b); break;
              case Mnemonic::Bltu: taken = a < b; break;
              default: taken = a >= b; break;
              }
            if (taken)
              return jumpTo(pc + imm, 0, 0);
            break;
          }

        case Mnemonic::Lb:
        case Mnemonic::Lh:
        case Mnemonic::Lw:
        case Mnemonic::Ld:
        case Mnemonic::Lbu:
        case Mnemonic::Lhu:
        case Mnemonic::Lwu:
          return executeLoad(in);

        case Mnemonic::Sb:
        case Mnemonic::Sh:
        case Mnemonic::Sw:
        case Mnemonic::Sd:
          return executeStore(in);

        case Mnemonic::Addi: writeReg(in.rd, a + imm); break;
        case Mnemonic::Slti: writeReg(in.rd, int64_t(a) < int64_t(imm)); break;
        case Mnemonic::Sltiu: writeReg(in.rd, a < imm); break;
        case Mnemonic::Xori: writeReg(in.rd, a ^ imm); break;
        case Mnemonic::Ori: writeReg(in.rd, a | imm); break;
        case Mnemonic::Andi: writeReg(in.rd, a & imm); break;
        case Mnemonic::Slli: writeReg(in.rd, a << (imm & 63)); break;
        case Mnemonic::Srli: writeReg(in.rd, a >> (imm & 63)); break;
        case Mnemonic::Srai: writeReg(in.rd, uint64_t(int64_t(a) >> (imm & 63))); break;

        case Mnemonic::Add: writeReg(in.rd, a + b); break;
        case Mnemonic::Sub: writeReg(in.rd, a - b); break;
        case Mnemonic::Sll: writeReg(in.rd, a << (b & 63)); break;
        case Mnemonic::Slt: writeReg(in.rd, int64_t(a) < int64_t(b)); break;
        case Mnemonic::Sltu: writeReg(in.rd, a < b); break;
        case Mnemonic::Xor: writeReg(in.rd, a ^ b); break;
        case Mnemonic::Srl: writeReg(in.rd, a >> (b & 63)); break;
        case Mnemonic::Sra: writeReg(in.rd, uint64_t(int64_t(a) >> (b & 63))); break;
        case Mnemonic::Or: writeReg(in.rd, a | b); break;
        case Mnemonic::And: writeReg(in.rd, a & b); break;

        case Mnemonic::Addiw: writeReg(in.rd, sw(a + imm)); break;
        case Mnemonic::Slliw: writeReg(in.rd, sw(uint32_t(a) << (imm & 31))); break;
        case Mnemonic::Srliw: writeReg(in.rd, sw(uint32_t(a) >> (imm & 31))); break;
        case Mnemonic::Sraiw: writeReg(in.rd, uint64_t(int64_t(int32_t(a) >> (imm & 31)))); break;
        case Mnemonic::Addw: writeReg(in.rd, sw(a + b)); break;
        case Mnemonic::Subw: writeReg(in.rd, sw(a - b)); break;
        case Mnemonic::Sllw: writeReg(in.rd, sw(uint32_t(a) << (b & 31))); break;
        case Mnemonic::Srlw: writeReg(in.rd, sw(uint32_t(a) >> (b & 31))); break;
        case Mnemonic::Sraw: writeReg(in.rd, uint64_t(int64_t(int32_t(a) >> (b & 31)))); break;

        case Mnemonic::Fence:
        case Mnemonic::Wfi:
          break;

        case Mnemonic::Ecall:
          {
            ExceptionCode code = state.mode == Mode::User ? ExceptionCode::EcallFromU
                               : state.mode == Mode::Supervisor ? ExceptionCode::EcallFromS
                               : ExceptionCode::EcallFromM;
            return trap(TrapCause::exception(code), 0);
          }

        case Mnemonic::Mret: return executeXret(in, Mode::Machine);
        case Mnemonic::Sret: return executeXret(in, Mode::Supervisor);

        case Mnemonic::SfenceVma:
          if (state.mode == Mode::User)
            return trap(TrapCause::exception(ExceptionCode::IllegalInstruction), in.raw);
          tlb_.flush();
          break;

        case Mnemonic::Csrrw:
        case Mnemonic::Csrrs:
        case Mnemonic::Csrrc:
        case Mnemonic::Csrrwi:
        case Mnemonic::Csrrsi:
        case Mnemonic::Csrrci:
          return executeCsr(in);

        case Mnemonic::Count_:
          break;
        }
      return retire(pc + 4);
    }

    MachineConfig cfg_;
    Tlb tlb_;
    Trojan trojan_;
    bool halted_ = false;
    uint64_t exitCode_ = 0;
    std::string console_;
    uint64_t budget_ = std::numeric_limits<uint64_t>::max();
  };

}  // namespace irtsim
