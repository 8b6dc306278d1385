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

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "types.hpp"

namespace irtsim
{

  struct Segment
  {
    uint64_t address = 0;
    std::vector<uint8_t> bytes;

    uint64_t end() const
    { return address + bytes.size(); }

    bool operator==(const Segment&) const = default;
  };

  /// A loadable guest program: sorted, non-overlapping segments, an entry
  /// point and a symbol table.
  struct MemoryImage
  {
    std::vector<Segment> segments;
    uint64_t entry = 0;
    std::map<std::string, uint64_t> symbols;

    bool operator==(const MemoryImage&) const = default;

    std::optional<uint64_t> symbol(const std::string& name) const
    {
      auto it = symbols.find(name);
      if (it == symbols.end())
        return std::nullopt;
      return it->second;
    }

    uint64_t requireSymbol(const std::string& name) const
    {
      auto v = symbol(name);
      if (!v)
        throw Error("image has no symbol '" + name + "'");
      return *v;
    }

    /// Sort segments and reject overlaps.
    void normalize()
    {
      std::sort(segments.begin(), segments.end(),
                [](const Segment& a, const Segment& b) { return a.address < b.address; });
      for (size_t i = 1; i < segments.size(); ++i)
        if (segments[i].address < segments[i - 1].end())
          throw Error("overlapping segments at " + hex64(segments[i].address));
    }

    /// Add a segment and keep the image normalized.
    void add(Segment seg)
    {
      if (seg.bytes.empty())
        return;
      segments.push_back(std::move(seg));
      normalize();
    }

    /// Byte at address, if some segment covers it.
    std::optional<uint8_t> byteAt(uint64_t address) const
    {
      for (const Segment& s : segments)
        if (address >= s.address && address < s.end())
          return s.bytes[address - s.address];
      return std::nullopt;
    }

    std::optional<uint32_t> wordAt(uint64_t address) const
    {
      uint32_t w = 0;
      for (unsigned i = 0; i < 4; ++i)
        {
          auto b = byteAt(address + i);
          if (!b)
            return std::nullopt;
          w |= uint32_t(*b) << (8 * i);
        }
      return w;
    }
  };

}  // namespace irtsim
