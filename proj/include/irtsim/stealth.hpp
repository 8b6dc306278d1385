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

// Signal and transition probabilities of small gate trees. Inputs are
// assumed mutually independent and temporally independent.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "types.hpp"

namespace irtsim
{

  enum class GateKind : uint8_t { And, Nand, Nor, Or, Xor, Input };

  constexpr std::string_view gateKindName(GateKind k)
  {
    switch (k)
      {
      case GateKind::And: return "AND";
      case GateKind::Nand: return "NAND";
      case GateKind::Nor: return "NOR";
      case GateKind::Or: return "OR";
      case GateKind::Xor: return "XOR";
      case GateKind::Input: return "INPUT";
      }
    return "?";
  }

  struct GateNode
  {
    GateKind kind = GateKind::Input;
    std::vector<GateNode> children;
    double inputProb = 0.5;

    static GateNode input(double p = 0.5)
    {
      GateNode n;
      n.inputProb = p;
      return n;
    }

    static GateNode gate(GateKind k, std::vector<GateNode> children)
    {
      GateNode n;
      n.kind = k;
      n.children = std::move(children);
      return n;
    }

    /// Throws Error on an input probability outside [0,1] or a gate
    /// without children.
    void validate() const
    {
      if (kind == GateKind::Input)
        {
          if (!(inputProb >= 0.0 && inputProb <= 1.0))
            throw Error("input probability outside [0,1]");
          return;
        }
      if (children.empty())
        throw Error(std::string(gateKindName(kind)) + " gate without inputs");
      for (const GateNode& c : children)
        c.validate();
    }

    size_t inputCount() const
    {
      if (kind == GateKind::Input)
        return 1;
      size_t n = 0;
      for (const GateNode& c : children)
        n += c.inputCount();
      return n;
    }
  };

  /// Exact output-one probability under input independence.
  inline double signalProb(const GateNode& n)
  {
    switch (n.kind)
      {
      case GateKind::Input:
        return n.inputProb;
      case GateKind::And:
      case GateKind::Nand:
        {
          double p = 1.0;
          for (const GateNode& c : n.children)
            p *= signalProb(c);
          return n.kind == GateKind::And ? p : 1.0 - p;
        }
      case GateKind::Or:
      case GateKind::Nor:
        {
          double q = 1.0;
          for (const GateNode& c : n.children)
            q *= 1.0 - signalProb(c);
          return n.kind == GateKind::Nor ? q : 1.0 - q;
        }
      case GateKind::Xor:
        {
          double p = 0.0;
          for (const GateNode& c : n.children)
            {
              double q = signalProb(c);
              p = p * (1.0 - q) + (1.0 - p) * q;
            }
          return p;
        }
      }
    return 0.0;
  }

  /// Probability that consecutive independent samples differ.
  constexpr double transitionProb(double p)
  { return 2.0 * p * (1.0 - p); }

  /// Match probability of a c-bit exact comparator on uniform inputs,
  /// kept as a power of two so c = 128 does not underflow.
  struct DyadicProb
  {
    int log2 = 0;   // probability = 2^log2

    double value() const
    { return std::ldexp(1.0, log2); }
  };

  inline DyadicProb comparatorActivationProb(unsigned width)
  {
    if (width < 1 || width > 128)
      throw Error("comparator width must be in 1..128");
    return { -int(width) };
  }

  /// Evaluate the tree for one assignment of the inputs (in depth-first
  /// order), consuming bits from `inputs` starting at `pos`.
  inline bool evaluate(const GateNode& n, const std::vector<uint8_t>& inputs, size_t& pos)
  {
    if (n.kind == GateKind::Input)
      return inputs.at(pos++) != 0;
    bool acc = n.kind == GateKind::And || n.kind == GateKind::Nand;
    if (n.kind == GateKind::Xor)
      acc = false;
    for (const GateNode& c : n.children)
      {
        bool v = evaluate(c, inputs, pos);
        switch (n.kind)
          {
          case GateKind::And:
          case GateKind::Nand: acc = acc && v; break;
          case GateKind::Or:
          case GateKind::Nor: acc = acc || v; break;
          case GateKind::Xor: acc = acc != v; break;
          case GateKind::Input: break;
          }
      }
    if (n.kind == GateKind::Nand || n.kind == GateKind::Nor)
      acc = !acc;
    return acc;
  }

  /// Number of input assignments (out of 2^n) driving the output to one.
  inline uint64_t countSatisfying(const GateNode& n)
  {
    size_t inputs = n.inputCount();
    if (inputs > 24)
      throw Error("exhaustive enumeration limited to 24 inputs");
    uint64_t count = 0;
    std::vector<uint8_t> bits(inputs);
    for (uint64_t a = 0; a < (uint64_t(1) << inputs); ++a)
      {
        for (size_t i = 0; i < inputs; ++i)
          bits[i] = uint8_t((a >> i) & 1);
        size_t pos = 0;
        count += evaluate(n, bits, pos);
      }
    return count;
  }

  /// Exact output-one probability by weighted enumeration of all input
  /// assignments, independent of the recursive formula.
  inline double enumerateSignalProb(const GateNode& n)
  {
    std::vector<double> probs;
    auto collect = [&](auto&& self, const GateNode& g) -> void {
      if (g.kind == GateKind::Input)
        probs.push_back(g.inputProb);
      for (const GateNode& c : g.children)
        self(self, c);
    };
    collect(collect, n);
    if (probs.size() > 24)
      throw Error("exhaustive enumeration limited to 24 inputs");
    double total = 0.0;
    std::vector<uint8_t> bits(probs.size());
    for (uint64_t a = 0; a < (uint64_t(1) << probs.size()); ++a)
      {
        double w = 1.0;
        for (size_t i = 0; i < probs.size(); ++i)
          {
            bits[i] = uint8_t((a >> i) & 1);
            w *= bits[i] ? probs[i] : 1.0 - probs[i];
          }
        size_t pos = 0;
        if (evaluate(n, bits, pos))
          total += w;
      }
    return total;
  }

  struct ProbReport
  {
    std::string pattern;
    double signalProb = 0;
    double transitionProb = 0;
    int signalProbLog2 = 0;        // exact exponent when the pattern is a comparator
    bool dyadic = false;
    double mcEstimate = 0;
    double mcTransition = 0;
    uint64_t mcSamples = 0;
    uint64_t seed = 0;
    double sigma = 0;              // binomial standard error of mcEstimate
    bool withinThreeSigma = false;

    bool operator==(const ProbReport&) const = default;
  };

  /// Uniform double in [0,1) from the top 53 bits of one draw.
  inline double unitDraw(std::mt19937_64& rng)
  { return double(rng() >> 11) * 0x1.0p-53; }

  /// Sample the tree `samples` times with fresh independent inputs each
  /// cycle; report the output-one frequency and the frequency of output
  /// changes between consecutive cycles.
  inline ProbReport monteCarlo(const GateNode& n, uint64_t samples, uint64_t seed)
  {
    if (samples < 1)
      throw Error("monte carlo needs at least one sample");
    n.validate();
    std::vector<double> probs;
    auto collect = [&](auto&& self, const GateNode& g) -> void {
      if (g.kind == GateKind::Input)
        probs.push_back(g.inputProb);
      for (const GateNode& c : g.children)
        self(self, c);
    };
    collect(collect, n);

    std::mt19937_64 rng(seed);
    std::vector<uint8_t> bits(probs.size());
    uint64_t ones = 0, toggles = 0;
    bool prev = false;
    for (uint64_t s = 0; s < samples; ++s)
      {
        for (size_t i = 0; i < probs.size(); ++i)
          bits[i] = unitDraw(rng) < probs[i];
        size_t pos = 0;
        bool out = evaluate(n, bits, pos);
        ones += out;
        if (s > 0 && out != prev)
          ++toggles;
        prev = out;
      }

    ProbReport r;
    r.signalProb = signalProb(n);
    r.transitionProb = transitionProb(r.signalProb);
    r.mcSamples = samples;
    r.seed = seed;
    r.mcEstimate = double(ones) / double(samples);
    r.mcTransition = samples > 1 ? double(toggles) / double(samples - 1) : 0.0;
    r.sigma = std::sqrt(r.signalProb * (1.0 - r.signalProb) / double(samples));
    r.withinThreeSigma = std::abs(r.mcEstimate - r.signalProb) <= 3.0 * r.sigma;
    return r;
  }

  namespace patterns
  {
    /// NAND over two AND stages: NAND(AND(a,b), AND(c,d)).
    inline GateNode andNand(double p = 0.5)
    {
      using G = GateNode;
      return G::gate(GateKind::Nand, { G::gate(GateKind::And, { G::input(p), G::input(p) }),
                                       G::gate(GateKind::And, { G::input(p), G::input(p) }) });
    }

    /// NOR over two NAND stages: NOR(NAND(a,b), NAND(c,d)).
    inline GateNode nandNor(double p = 0.5)
    {
      using G = GateNode;
      return G::gate(GateKind::Nor, { G::gate(GateKind::Nand, { G::input(p), G::input(p) }),
                                      G::gate(GateKind::Nand, { G::input(p), G::input(p) }) });
    }

    /// c-bit exact comparator on uniform inputs: each bit matches with
    /// probability 1/2, the output is their conjunction.
    inline GateNode comparator(unsigned width)
    {
      comparatorActivationProb(width);
      std::vector<GateNode> bits(width, GateNode::input(0.5));
      return GateNode::gate(GateKind::And, std::move(bits));
    }
  }

  /// Report for a named pattern: `and-nand`, `nand-nor` or `comparator:<c>`.
  inline ProbReport stealthReport(const std::string& pattern, uint64_t samples, uint64_t seed)
  {
    GateNode tree;
    std::optional<DyadicProb> exact;
    if (pattern == "and-nand")
      tree = patterns::andNand();
    else if (pattern == "nand-nor")
      tree = patterns::nandNor();
    else if (pattern.rfind("comparator:", 0) == 0)
      {
        std::string w = pattern.substr(11);
        unsigned width = 0;
        try
          {
            width = unsigned(std::stoul(w));
          }
        catch (const std::exception&)
          {
            throw Error("bad comparator width '" + w + "'");
          }
        exact = comparatorActivationProb(width);
        tree = patterns::comparator(width);
      }
    else
      throw Error("unknown pattern '" + pattern + "' (expected and-nand, nand-nor or comparator:<c>)");

    ProbReport r = monteCarlo(tree, samples, seed);
    r.pattern = pattern;
    if (exact)
      {
        r.dyadic = true;
        r.signalProbLog2 = exact->log2;
        r.signalProb = exact->value();
        r.transitionProb = transitionProb(r.signalProb);
      }
    return r;
  }

}  // namespace irtsim
