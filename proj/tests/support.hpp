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

// Shared helpers for the unit tests.

#pragma once

#include <string>

#include <irtsim/assembler.hpp>
#include <irtsim/machine.hpp>

namespace irtsim::test
{

  /// Appended to snippets: store a0 to the exit port.
  inline const std::string exitTail = R"(
    li t6, 0x10000000
    sd a0, 0(t6)
  )";

  /// Assemble `body` (runs in M-mode at the RAM base) followed by the
  /// exit sequence.
  inline MemoryImage machineProgram(const std::string& body)
  { return assemble("_start:\n" + body + exitTail); }

  template <typename T = TrojanRuntime>
  Machine<T> loaded(const MemoryImage& image, T trojan = T(), MachineConfig cfg = {})
  {
    Machine<T> m(cfg, std::move(trojan));
    m.load(image);
    return m;
  }

  /// Enough RAM for the snippets; keeps per-test setup and the memory
  /// digest cheap.
  inline MachineConfig smallMachine()
  {
    MachineConfig c;
    c.memSize = 8ull << 20;
    return c;
  }

  inline Machine<TrojanRuntime> loadedSmall(const MemoryImage& image)
  { return loaded(image, TrojanRuntime(), smallMachine()); }

  inline Machine<TrojanRuntime> runProgram(const std::string& body, uint64_t maxCycles = 100000)
  {
    auto m = loaded(machineProgram(body), TrojanRuntime(), smallMachine());
    m.run({ maxCycles, std::nullopt });
    return m;
  }

}  // namespace irtsim::test
