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

// Delay-line check on a pseudo-random workload: an xorshift loop that
// writes the trigger value into the host registers on roughly a quarter
// of its iterations, with loads and stores in between for stall cycles.

#pragma once

#include <string>
#include <vector>

#include <irtsim/assembler.hpp>
#include <irtsim/machine.hpp>

namespace irtsim::test
{

  struct DelayLawResult
  {
    uint64_t cycles = 0;
    uint64_t violations = 0;
    uint64_t rawOn = 0;
    uint64_t rawEdges = 0;
  };

  inline DelayLawResult checkDelayLaw(uint32_t latency, uint64_t cycles, uint64_t seed)
  {
    TrojanConfig cfg;
    cfg.kind = TrojanKind::Irt1;
    cfg.latency = latency;
    const std::string hi = "x" + std::to_string(cfg.hostRegs[0]);
    const std::string lo = "x" + std::to_string(cfg.hostRegs[1]);
    std::string src = "_start:\n"
                      " li x9, " + hex64(seed | 1) + "\n"
                      " li x18, " + hex64(cfg.activation.first) + "\n"
                      " li x19, " + hex64(cfg.activation.second) + "\n"
                      " li x22, 0x80001000\n"
                      "loop:\n"
                      " slli x5, x9, 13\n xor x9, x9, x5\n"
                      " srli x5, x9, 7\n xor x9, x9, x5\n"
                      " slli x5, x9, 17\n xor x9, x9, x5\n"
                      " andi x6, x9, 3\n"
                      " bnez x6, off\n"
                      " mv " + hi + ", x18\n"
                      " mv " + lo + ", x19\n"
                      " j next\n"
                      "off:\n"
                      " andi x6, x9, 4\n"
                      " beqz x6, next\n"
                      " mv " + lo + ", x9\n"
                      "next:\n"
                      " sd x9, 0(x22)\n"
                      " ld x7, 0(x22)\n"
                      " j loop\n";
    MachineConfig mc;
    mc.memSize = 1ull << 20;
    Machine<TrojanRuntime> m(mc, TrojanRuntime(cfg));
    m.load(assemble(src));

    std::vector<uint8_t> raw, delivered;
    raw.reserve(cycles);
    delivered.reserve(cycles);
    m.onCycle = [&](const CycleEvent& e) {
      raw.push_back(e.raw);
      delivered.push_back(e.delivered);
    };
    m.run({ cycles, std::nullopt });

    DelayLawResult r;
    r.cycles = raw.size();
    for (uint64_t t = 0; t < raw.size(); ++t)
      {
        bool want = t >= latency ? bool(raw[t - latency]) : false;
        if (bool(delivered[t]) != want)
          ++r.violations;
        r.rawOn += raw[t];
        if (t > 0 && raw[t] != raw[t - 1])
          ++r.rawEdges;
      }
    return r;
  }

}  // namespace irtsim::test
