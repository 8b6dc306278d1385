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

// irtsim command-line driver.
//
//   irtsim asm <in.s> -o <manifest.json>
//   irtsim run <manifest.json> [--trojan irt1] [--trace mmu,trojan]
//   irtsim scenario <name> [--kbytes K] [--quantum Q] -o <manifest.json>
//   irtsim exp <name> [--config cfg.json] [--format csv] [--out report]
//
// Exit status: 0 when the observed verdict equals the expected one,
// 1 when it does not, 2 on usage, build or I/O errors.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <irtsim/assembler.hpp>
#include <irtsim/experiments.hpp>
#include <irtsim/guest.hpp>
#include <irtsim/manifest.hpp>

using namespace irtsim;

namespace
{

  struct CommonFlags
  {
    std::string config;
    std::optional<uint64_t> seed;
    std::string out;
    std::string format;
    std::string trace;
    std::optional<double> kbytes;
    std::optional<uint64_t> quantum;
    std::string trojan;
    std::string pattern;
    std::optional<uint64_t> samples;
    std::optional<uint64_t> latency;
    std::optional<uint64_t> maxCycles;
    bool noTlb = false;
  };

  void addCommon(CLI::App* app, CommonFlags& f)
  {
    app->add_option("--config", f.config, "JSON run config")->check(CLI::ExistingFile);
    app->add_option("--seed", f.seed, "Seed for timer phase and Monte Carlo");
    app->add_option("--out,-o", f.out, "Output path (default stdout)");
    app->add_option("--format", f.format, "Report format")->check(CLI::IsMember({ "json", "csv" }));
    app->add_option("--trace", f.trace, "Trace channels: mmu,trojan");
    app->add_option("--kbytes", f.kbytes, "KiB overwritten by the handling process");
    app->add_option("--quantum", f.quantum, "Timer quantum in cycles");
    app->add_option("--trojan", f.trojan, "Trigger kind")->check(CLI::IsMember({ "disabled", "none", "irt1", "irt2" }));
    app->add_option("--latency", f.latency, "Payload delay L in cycles");
    app->add_option("--max-cycles", f.maxCycles, "Cycle budget per run");
    app->add_flag("--no-tlb", f.noTlb, "Disable the TLB");
  }

  RunConfig makeConfig(const CommonFlags& f)
  {
    RunConfig cfg;
    if (!f.config.empty())
      {
        std::ifstream in(f.config);
        try
          {
            cfg = runConfigFromJson(Json::parse(in));
          }
        catch (const Json::exception& e)
          {
            throw Error(f.config + ": " + e.what());
          }
      }
    if (f.seed)
      cfg.params.seed = *f.seed;
    if (f.kbytes)
      {
        cfg.params.kbytes = *f.kbytes;
        cfg.kbytesSet = true;
      }
    if (f.quantum)
      cfg.params.quantum = *f.quantum;
    if (!f.trojan.empty())
      {
        cfg.params.trojan.kind = trojanKindFromName(f.trojan);
        cfg.trojanKindSet = true;
      }
    if (f.latency)
      cfg.params.trojan.latency = uint32_t(*f.latency);
    if (f.maxCycles)
      cfg.sim.maxCycles = *f.maxCycles;
    if (f.noTlb)
      cfg.sim.tlbEnabled = false;
    if (!f.pattern.empty())
      cfg.stealthPattern = f.pattern;
    if (f.samples)
      cfg.stealthSamples = *f.samples;
    if (!f.out.empty())
      cfg.outPath = f.out;
    if (!f.format.empty())
      cfg.format = f.format;
    if (!f.trace.empty())
      applyTraceList(cfg.trace, f.trace);
    cfg.params.trojan.validate();
    return cfg;
  }

  void writeOutput(const std::string& path, const std::string& text)
  {
    if (path.empty() || path == "-")
      {
        std::cout << text;
        return;
      }
    std::ofstream out(path, std::ios::binary);
    if (!out)
      throw Error("cannot write " + path);
    out << text;
  }

  std::string readFile(const std::string& path)
  {
    std::ifstream in(path, std::ios::binary);
    if (!in)
      throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  int cmdAsm(const std::string& input, const std::string& out)
  {
    MemoryImage image = assemble(readFile(input));
    writeOutput(out, manifestToJson(image).dump(2) + "\n");
    return 0;
  }

  int cmdRun(const std::string& manifest, const CommonFlags& f)
  {
    RunConfig cfg = makeConfig(f);
    MemoryImage image = readManifest(manifest);
    Machine<TrojanRuntime> m(cfg.sim.machineConfig(), TrojanRuntime(cfg.params.trojan));
    m.load(image);
    std::ostream* trace = cfg.trace.any() ? &std::cerr : nullptr;
    bool prevRaw = false, prevDelivered = false;
    if (trace && cfg.trace.trojan)
      m.onCycle = [&](const CycleEvent& e) {
        if (e.raw != prevRaw)
          *trace << "trojan cycle=" << e.cycle << " raw=" << int(e.raw) << " pc=" << hex64(e.pc) << '\n';
        if (e.delivered != prevDelivered)
          *trace << "trojan cycle=" << e.cycle << " delivered=" << int(e.delivered) << '\n';
        prevRaw = e.raw;
        prevDelivered = e.delivered;
      };
    if (trace && cfg.trace.mmu)
      m.onTranslate = [&](const TranslationRequest& req, const TranslationResult& res) {
        for (unsigned i = 0; i < res.walk.size(); ++i)
          *trace << "mmu cycle=" << res.walkStartCycle << " va=" << hex64(req.va)
                 << " access=" << accessName(req.access) << " level=" << res.walk.reads[i].level
                 << " addr=" << hex64(res.walk.reads[i].address) << " pte=" << hex64(res.walk.reads[i].value)
                 << '\n';
      };
    RunSummary s = m.run({ cfg.sim.maxCycles, std::nullopt });
    Json j;
    j["config"] = runConfigToJson(cfg);
    j["summary"] = summaryToJson(s);
    writeOutput(cfg.outPath, j.dump(2) + "\n");
    return s.reason == StopReason::Exited ? 0 : 1;
  }

  int cmdScenario(const std::string& name, const CommonFlags& f)
  {
    RunConfig cfg = makeConfig(f);
    cfg.params.scenario = scenarioFromName(name);
    if (!cfg.trojanKindSet)
      cfg.params.trojan.kind = defaultTrojanFor(cfg.params.scenario);
    BuiltScenario built = buildScenario(cfg.params);
    Json j = manifestToJson(built.image);
    const ExpectedOutcome& ex = built.expected;
    Json e;
    e["verdict"] = std::string(verdictName(ex.verdict));
    e["pattern_address"] = hex64(ex.patternAddress);
    e["pattern_bytes"] = ex.patternBytes;
    e["fill"] = hex64(ex.fill);
    e["suppressed_faults"] = ex.suppressedFaults;
    if (ex.faultAddress)
      e["fault_address"] = hex64(*ex.faultAddress);
    j["expected"] = e;
    j["trojan"] = trojanToJson(built.trojan);
    j["config"] = runConfigToJson(cfg);
    writeOutput(cfg.outPath, j.dump(2) + "\n");
    return 0;
  }

  int cmdExp(const std::string& name, const CommonFlags& f)
  {
    RunConfig cfg = makeConfig(f);
    std::ostream* trace = cfg.trace.any() ? &std::cerr : nullptr;
    ExperimentReport rep = runExperiment(name, cfg, trace);
    writeOutput(cfg.outPath, emitReport(rep, cfg.format));
    return rep.passed ? 0 : 1;
  }

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{ "irtsim: RV64 simulator with an interrupt-resilient trojan model" };
  app.require_subcommand(1);

  std::string asmIn, asmOut;
  CLI::App* asmCmd = app.add_subcommand("asm", "Assemble a source file into an image manifest");
  asmCmd->add_option("input", asmIn, "Assembly source")->required()->check(CLI::ExistingFile);
  asmCmd->add_option("-o,--out", asmOut, "Manifest path (default stdout)");

  CommonFlags runFlags;
  std::string manifest;
  CLI::App* runCmd = app.add_subcommand("run", "Run an image manifest and print the run summary");
  runCmd->add_option("manifest", manifest, "Image manifest")->required()->check(CLI::ExistingFile);
  addCommon(runCmd, runFlags);

  CommonFlags scenFlags;
  std::string scenName;
  CLI::App* scenCmd = app.add_subcommand("scenario", "Build a guest scenario and write its manifest");
  scenCmd->add_option("name", scenName, "kernel-cs, multitask, race, integrity, availability, baseline")->required();
  addCommon(scenCmd, scenFlags);

  CommonFlags expFlags;
  std::string expName;
  CLI::App* expCmd = app.add_subcommand("exp", "Run an experiment and emit its report");
  std::vector<std::string> names(experimentNames.begin(), experimentNames.end());
  expCmd->add_option("name", expName, "Experiment")->required()->check(CLI::IsMember(names));
  addCommon(expCmd, expFlags);
  expCmd->add_option("--pattern", expFlags.pattern, "Stealth pattern: and-nand, nand-nor, comparator:<c>");
  expCmd->add_option("--samples", expFlags.samples, "Monte Carlo samples");

  try
    {
      app.parse(argc, argv);
    }
  catch (const CLI::ParseError& e)
    {
      int rc = app.exit(e);
      return rc == 0 ? 0 : 2;
    }

  try
    {
      if (*asmCmd)
        return cmdAsm(asmIn, asmOut);
      if (*runCmd)
        return cmdRun(manifest, runFlags);
      if (*scenCmd)
        return cmdScenario(scenName, scenFlags);
      if (*expCmd)
        return cmdExp(expName, expFlags);
    }
  catch (const AsmError& e)
    {
      std::cerr << "irtsim: " << asmIn << ':' << e.line() << ": " << e.what() << '\n';
      return 2;
    }
  catch (const std::exception& e)
    {
      std::cerr << "irtsim: " << e.what() << '\n';
      return 2;
    }
  return 2;
}
