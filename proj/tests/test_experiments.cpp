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

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include <irtsim/experiments.hpp>

using namespace irtsim;

namespace
{

  std::vector<std::string> lines(const std::string& s)
  {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string l;
    while (std::getline(ss, l))
      out.push_back(l);
    return out;
  }

  RunConfig kernelCsAt(double kb)
  {
    RunConfig c;
    c.params.kbytes = kb;
    c.kbytesSet = true;
    return c;
  }

}  // namespace

TEST(Fit, DoublingSeries)
{
  std::vector<std::pair<double, double>> pts;
  for (int b = 8; b <= 16; ++b)
    pts.emplace_back(b, std::exp2(b));
  SweepFit f = fitSweep(pts);
  EXPECT_NEAR(f.g, 2.0, 1e-12);
  EXPECT_NEAR(f.slope, 1.0, 1e-12);
  EXPECT_NEAR(f.intercept, 0.0, 1e-9);
  EXPECT_NEAR(f.residual, 0.0, 1e-12);
  // 2^20 instructions at one cycle each and 1 MHz.
  EXPECT_NEAR(f.extrapolateSeconds(20, 1e6, 1.0), std::exp2(20) / 1e6, 1e-6);
}

TEST(Fit, RejectsBadInput)
{
  EXPECT_THROW(fitSweep({ { 8, 256 }, { 9, 512 } }), Error);
  EXPECT_THROW(fitSweep({ { 8, 256 }, { 8, 300 }, { 8, 280 } }), DegenerateFit);
  EXPECT_THROW(fitSweep({ { 8, 256 }, { 9, 0 }, { 10, 1024 } }), Error);
}

TEST(Sweep, SmallRangeReport)
{
  RunConfig c;
  c.params.sweepBits = { 4, 5, 6, 7, 8 };
  ExperimentReport r = runExperiment("sweep", c);
  ASSERT_TRUE(r.sweep);
  EXPECT_TRUE(r.sweep->countsExact);
  EXPECT_TRUE(r.sweep->gWithinBand);
  EXPECT_NEAR(r.sweep->cpi, 1.0, 0.05);
  for (const SweepPoint& p : r.sweep->points)
    EXPECT_EQ(p.activations, 1u) << p.bits;
  EXPECT_TRUE(r.passed);
}

TEST(Report, CsvHeaderAndRows)
{
  ExperimentReport r = runExperiment("kernel-cs", kernelCsAt(1));
  std::vector<std::string> l = lines(emitReport(r, "csv"));
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[0], "kbytes,user,supervisor,machine,suppressed,verdict");
  EXPECT_EQ(l[1].substr(0, 2), "1,");
  EXPECT_NE(l[1].find(",128,AttackSucceeds"), std::string::npos);
  EXPECT_THROW(emitReport(r, "xml"), Error);
}

TEST(Report, JsonAndCsvAgree)
{
  ExperimentReport r = runExperiment("kernel-cs", kernelCsAt(4));
  Json j = Json::parse(emitReport(r, "json"));
  std::vector<std::string> l = lines(emitReport(r, "csv"));
  ASSERT_EQ(j["runs"].size(), l.size() - 1);
  for (size_t i = 0; i < j["runs"].size(); ++i)
    {
      const Json& run = j["runs"][i];
      std::ostringstream row;
      row << formatNumber(run["kbytes"].get<double>()) << ',' << run["mode_entries"]["user"].get<uint64_t>() << ','
          << run["mode_entries"]["supervisor"].get<uint64_t>() << ','
          << run["mode_entries"]["machine"].get<uint64_t>() << ',' << run["suppressed"].get<uint64_t>() << ','
          << run["verdict"].get<std::string>();
      EXPECT_EQ(row.str(), l[i + 1]);
    }
  EXPECT_TRUE(j["passed"].get<bool>());
  ASSERT_EQ(j["controls"].size(), 1u);
  EXPECT_EQ(j["controls"][0]["verdict"], "StoreFaults");
}

TEST(Report, ByteIdenticalAcrossRuns)
{
  RunConfig c = kernelCsAt(0.5);
  EXPECT_EQ(emitReport(runExperiment("kernel-cs", c), "json"), emitReport(runExperiment("kernel-cs", c), "json"));
  RunConfig s;
  s.stealthSamples = 5000;
  EXPECT_EQ(emitReport(runExperiment("stealth", s), "csv"), emitReport(runExperiment("stealth", s), "csv"));
}

TEST(Config, JsonRoundTrip)
{
  RunConfig c;
  c.params.scenario = Scenario::Race;
  c.params.kbytes = 4;
  c.kbytesSet = true;
  c.params.quantum = 900;
  c.params.seed = 42;
  c.params.trojan.kind = TrojanKind::Irt2;
  c.params.trojan.latency = 3;
  c.params.trojan.hostRegs = { 12, 13 };
  c.trojanKindSet = true;
  c.sim.tlbEnabled = false;
  c.sim.memAccessCycles = 6;
  c.stealthPattern = "and-nand";
  c.trace.mmu = true;
  c.format = "csv";
  Json j = runConfigToJson(c);
  RunConfig back = runConfigFromJson(j);
  EXPECT_EQ(runConfigToJson(back), j);
  EXPECT_EQ(back.params.trojan.hostRegs[0], 12);
  EXPECT_TRUE(back.trojanKindSet && back.kbytesSet);
  EXPECT_FALSE(back.trace.trojan);
}

TEST(Config, OverlayAndErrors)
{
  RunConfig c = runConfigFromJson(Json::parse(R"({"quantum": 1200, "trojan": {"latency": 5}})"));
  EXPECT_EQ(c.params.quantum, 1200u);
  EXPECT_EQ(c.params.trojan.latency, 5u);
  EXPECT_FALSE(c.trojanKindSet);
  EXPECT_THROW(runConfigFromJson(Json::parse("[1,2]")), Error);
  EXPECT_THROW(runConfigFromJson(Json::parse(R"({"scenario": "nope"})")), Error);
  TraceToggles t;
  EXPECT_THROW(applyTraceList(t, "mmu,cache"), Error);
}

TEST(Experiment, KernelCsEntersSupervisor)
{
  ExperimentReport r = runExperiment("kernel-cs", kernelCsAt(1));
  ASSERT_EQ(r.runs.size(), 1u);
  EXPECT_GT(r.runs[0].summary.modeEntries[1], 0u);
  EXPECT_TRUE(r.passed);
}

TEST(Experiment, DisabledControlIsJudgedAsFault)
{
  RunConfig c = kernelCsAt(1);
  c.params.trojan.kind = TrojanKind::Disabled;
  c.trojanKindSet = true;
  ExperimentReport r = runExperiment("kernel-cs", c);
  ASSERT_EQ(r.runs.size(), 1u);
  EXPECT_EQ(r.runs[0].verdict, Verdict::StoreFaults);
}

TEST(Experiment, MismatchFailsTheRun)
{
  // The handler writes the built activation value; a trojan keyed to a
  // different value never fires, so the expected success does not happen.
  ScenarioParams p;
  p.kbytes = 1;
  p.trojan.kind = TrojanKind::Irt1;
  BuiltScenario b = buildScenario(p);
  TrojanConfig other = b.trojan;
  other.activation.second ^= 1;
  RunRecord r = runBuilt(b, p, other, {});
  EXPECT_EQ(r.expected, Verdict::AttackSucceeds);
  EXPECT_EQ(r.verdict, Verdict::StoreFaults);
  EXPECT_FALSE(r.passed);
}

TEST(Experiment, UnknownName)
{
  EXPECT_THROW(runExperiment("kernel", RunConfig{}), Error);
}
