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

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "types.hpp"

namespace irtsim
{

  /// Single contiguous little-endian RAM region. Misaligned accesses are
  /// allowed; an access must lie entirely inside the region.
  class PhysicalMemory
  {
  public:
    static constexpr uint64_t defaultSize = 64ull << 20;

    explicit PhysicalMemory(uint64_t size = defaultSize, uint64_t base = addr::ramBase)
      : base_(base), bytes_(size, 0)
    { }

    uint64_t base() const
    { return base_; }

    uint64_t size() const
    { return bytes_.size(); }

    bool contains(uint64_t pa, uint64_t len) const
    { return pa >= base_ && len <= bytes_.size() && pa - base_ <= bytes_.size() - len; }

    /// Read len (1..8) bytes, zero-extended.
    std::optional<uint64_t> read(uint64_t pa, unsigned len) const
    {
      if (!contains(pa, len))
        return std::nullopt;
      uint64_t v = 0;
      const uint8_t* p = bytes_.data() + (pa - base_);
      for (unsigned i = 0; i < len; ++i)
        v |= uint64_t(p[i]) << (8 * i);
      return v;
    }

    bool write(uint64_t pa, unsigned len, uint64_t value)
    {
      if (!contains(pa, len))
        return false;
      uint8_t* p = bytes_.data() + (pa - base_);
      for (unsigned i = 0; i < len; ++i)
        p[i] = uint8_t(value >> (8 * i));
      return true;
    }

    bool load(uint64_t pa, std::span<const uint8_t> data)
    {
      if (!contains(pa, data.size()))
        return false;
      std::copy(data.begin(), data.end(), bytes_.begin() + (pa - base_));
      return true;
    }

    std::span<const uint8_t> view(uint64_t pa, uint64_t len) const
    {
      if (!contains(pa, len))
        return {};
      return { bytes_.data() + (pa - base_), len };
    }

    uint64_t digest() const
    {
      Fnv1a h;
      h.add(base_);
      h.add(bytes_.data(), bytes_.size());
      return h.value();
    }

  private:
    uint64_t base_;
    std::vector<uint8_t> bytes_;
  };

}  // namespace irtsim
