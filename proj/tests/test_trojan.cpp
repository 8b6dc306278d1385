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

#include <array>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <irtsim/experiments.hpp>
#include <irtsim/trojan.hpp>

#include "delay_law.hpp"

using namespace irtsim;

namespace
{

  TrojanConfig kindCfg(TrojanKind k, uint32_t latency = 8)
  {
    TrojanConfig c;
    c.kind = k;
    c.latency = latency;
    return c;
  }

  using Gpr = std::array<uint64_t, 32>;

  std::span<const uint64_t, 32> view(const Gpr& g)
  { return std::span<const uint64_t, 32>(g); }

}  // namespace

TEST(Config, Validation)
{
  TrojanConfig c;
  EXPECT_NO_THROW(c.validate());
  c.hostRegs = { 0, 21 };
  EXPECT_THROW(c.validate(), Error);
  c.hostRegs = { 21, 21 };
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.deactivation = c.activation;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.latency = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.comparatorWidth = 129;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_THROW(trojanKindFromName("irt3"), Error);
  EXPECT_EQ(trojanKindFromName("none"), TrojanKind::Disabled);
}

TEST(Irt1, MatchesFullWidth)
{
  TrojanConfig c = kindCfg(TrojanKind::Irt1);
  Gpr g{};
  g[c.hostRegs[0]] = c.activation.first;
  g[c.hostRegs[1]] = c.activation.second;
  EXPECT_TRUE(sampleIrt1(view(g), c));
}

TEST(Irt1, AnyCompareBitFlipMisses)
{
  TrojanConfig c = kindCfg(TrojanKind::Irt1);
  for (unsigned bit = 0; bit < 128; ++bit)
    {
      Gpr g{};
      g[c.hostRegs[0]] = c.activation.first;
      g[c.hostRegs[1]] = c.activation.second;
      g[c.hostRegs[bit < 64 ? 1 : 0]] ^= uint64_t(1) << (bit % 64);
      EXPECT_FALSE(sampleIrt1(view(g), c)) << bit;
    }
}

TEST(Irt1, NarrowComparatorIgnoresHighBits)
{
  TrojanConfig c = kindCfg(TrojanKind::Irt1);
  c.comparatorWidth = 8;
  Gpr g{};
  g[c.hostRegs[1]] = (c.activation.second & 0xff) | 0xabcd00;
  EXPECT_TRUE(sampleIrt1(view(g), c));
  g[c.hostRegs[1]] ^= 0x80;
  EXPECT_FALSE(sampleIrt1(view(g), c));
}

TEST(Irt1, StatelessAcrossContextSwitch)
{
  TrojanConfig c = kindCfg(TrojanKind::Irt1);
  Gpr g{};
  g[c.hostRegs[0]] = c.activation.first;
  g[c.hostRegs[1]] = c.activation.second;
  Gpr saved = g;
  EXPECT_TRUE(sampleIrt1(view(g), c));
  g[c.hostRegs[0]] = 0x80004000;   // kernel overwrites with its own data
  EXPECT_FALSE(sampleIrt1(view(g), c));
  g = saved;
  EXPECT_TRUE(sampleIrt1(view(g), c));
}

TEST(Irt2, FsmEdges)
{
  TrojanConfig c = kindCfg(TrojanKind::Irt2);
  EXPECT_EQ(sampleIrt2(c.activation.first, c.activation.second, Fsm::S0, c), Fsm::S1);
  EXPECT_EQ(sampleIrt2(1, 2, Fsm::S1, c), Fsm::S1);
  EXPECT_EQ(sampleIrt2(c.deactivation.first, c.deactivation.second, Fsm::S1, c), Fsm::S0);
  EXPECT_EQ(sampleIrt2(1, 2, Fsm::S0, c), Fsm::S0);
  // Operand order matters.
  EXPECT_EQ(sampleIrt2(c.activation.second, c.activation.first, Fsm::S0, c), Fsm::S0);
}

TEST(Irt2, HoldsAcrossUnrelatedAdds)
{
  TrojanConfig c = kindCfg(TrojanKind::Irt2);
  std::mt19937_64 rng(1);
  Fsm s = sampleIrt2(c.activation.first, c.activation.second, Fsm::S0, c);
  for (int i = 0; i < 100000; ++i)
    s = sampleIrt2(rng(), rng(), s, c);
  EXPECT_EQ(s, Fsm::S1);
}

TEST(Irt2, OnlyRegisterAddFeedsTheFsm)
{
  TrojanConfig c = kindCfg(TrojanKind::Irt2);
  auto run = [&](const std::string& op) {
    std::string src = "li t3, " + hex64(c.activation.first) + "\n li t4, " + hex64(c.activation.second) + "\n" + op +
                      "\n li a0, 0\n li t6, 0x10000000\n sd a0, 0(t6)\n";
    MachineConfig mc;
    mc.memSize = 1ull << 20;
    Machine<TrojanRuntime> m(mc, TrojanRuntime(c));
    m.load(assemble(src));
    m.run({ 1000, std::nullopt });
    return m.trojan().state().fsm;
  };
  EXPECT_EQ(run("add t5, t3, t4"), Fsm::S1);
  EXPECT_EQ(run("addw t5, t3, t4"), Fsm::S0);
  EXPECT_EQ(run("sub t5, t3, t4"), Fsm::S0);
  EXPECT_EQ(run("add t5, t4, t3"), Fsm::S0);
}

TEST(DelayLine, QueueSemantics)
{
  DelayLine d(3);
  std::vector<bool> raw = { false, true, true, true, true };
  std::vector<bool> want = { false, false, false, false, true };
  for (size_t t = 0; t < raw.size(); ++t)
    EXPECT_EQ(d.tick(raw[t]), want[t]) << t;
}

TEST(DelayLine, MaturesAtCycleIndexL)
{
  // raw held for a 12-cycle walk, L = 8: cycle indices 0..7 read the
  // pre-walk state, index 8 is the first to see the walk's raw value.
  DelayLine d(8);
  for (int t = 0; t < 12; ++t)
    EXPECT_EQ(d.tick(true), t >= 8) << t;
}

TEST(DelayLine, DropPropagatesAfterL)
{
  DelayLine d(8);
  for (int t = 0; t < 20; ++t)
    d.tick(true);
  for (int t = 0; t < 30; ++t)
    EXPECT_EQ(d.tick(false), t < 8) << t;
}

TEST(Runtime, DisabledNeverDelivers)
{
  TrojanRuntime rt(kindCfg(TrojanKind::Disabled, 1));
  const TrojanConfig& c = rt.config();
  Gpr g{};
  g[c.hostRegs[0]] = c.activation.first;
  g[c.hostRegs[1]] = c.activation.second;
  rt.onAdd(c.activation.first, c.activation.second);
  for (int i = 0; i < 50; ++i)
    {
      EXPECT_FALSE(rt.tick(view(g)));
      EXPECT_FALSE(rt.deliveredNow());
    }
  EXPECT_EQ(rt.stats(), PayloadStats{});
}

TEST(Runtime, EdgeCounting)
{
  TrojanRuntime rt(kindCfg(TrojanKind::Irt1, 2));
  const TrojanConfig& c = rt.config();
  Gpr on{}, off{};
  on[c.hostRegs[0]] = c.activation.first;
  on[c.hostRegs[1]] = c.activation.second;
  for (int i = 0; i < 5; ++i)
    rt.tick(view(on));
  for (int i = 0; i < 5; ++i)
    rt.tick(view(off));
  rt.tick(view(on));
  EXPECT_EQ(rt.stats().activations, 2u);
  EXPECT_EQ(rt.stats().deactivations, 1u);
  EXPECT_EQ(rt.stats().rawOnCycles, 6u);
  EXPECT_EQ(rt.stats().deliveredOnCycles, 5u);
}

TEST(Property, DelayLawOnRandomWorkload)
{
  for (uint32_t L : { 1u, 3u, 8u, 17u })
    {
      test::DelayLawResult r = test::checkDelayLaw(L, 20000, 0x5eed + L);
      EXPECT_EQ(r.violations, 0u) << "L=" << L;
      EXPECT_EQ(r.cycles, 20000u);
      EXPECT_GT(r.rawEdges, 100u);
    }
}

TEST(Property, AccidentalActivationExhaustive)
{
  TrojanConfig c = kindCfg(TrojanKind::Irt1);
  c.comparatorWidth = 8;
  uint64_t hits = 0;
  for (uint64_t v = 0; v < 256; ++v)
    hits += matchesLowBits(0, v, c.activation, 8);
  EXPECT_EQ(hits, 1u);
}

TEST(Property, AccidentalActivationMonteCarloWidth16)
{
  TrojanConfig c = kindCfg(TrojanKind::Irt1);
  std::mt19937_64 rng(2024);
  const uint64_t n = 4'000'000;
  uint64_t hits = 0;
  for (uint64_t i = 0; i < n; ++i)
    hits += matchesLowBits(rng(), rng(), c.activation, 16);
  double p = std::ldexp(1.0, -16);
  double sigma = std::sqrt(p * (1 - p) / double(n));
  EXPECT_NEAR(double(hits) / double(n), p, 3 * sigma);
}

TEST(Property, DisabledMatchesAbsentLayer)
{
  // Payload soundness on a trojan-free workload and on the kernel-cs
  // image, whose handler writes the activation value.
  for (Scenario sc : { Scenario::KernelCs, Scenario::Race })
    {
      ScenarioParams p;
      p.scenario = sc;
      p.trojan.kind = TrojanKind::Irt1;
      BuiltScenario b = buildScenario(p);
      TrojanConfig off = b.trojan;
      off.kind = TrojanKind::Disabled;
      MachineConfig mc;
      RunSummary with = runImage(b.image, mc, TrojanRuntime(off), 10'000'000);
      RunSummary without = runImage(b.image, mc, NoTrojan(), 10'000'000);
      EXPECT_EQ(with, without) << scenarioName(sc);
      EXPECT_EQ(with.reason, StopReason::Exited);
    }
}
