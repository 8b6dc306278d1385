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

// Image manifest: a JSON document with `entry`, `segments` (each with
// `addr` and either `inline_hex` or `file`, a raw binary relative to the
// manifest) and an optional `symbols` map. Addresses are hex strings.

#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "image.hpp"
#include "types.hpp"

namespace irtsim
{

  using Json = nlohmann::ordered_json;

  /// Accepts a JSON number or a string in decimal or 0x-hex.
  inline uint64_t parseU64(const Json& j, const std::string& what)
  {
    if (j.is_number_unsigned())
      return j.get<uint64_t>();
    if (j.is_number_integer())
      return uint64_t(j.get<int64_t>());
    if (j.is_string())
      {
        std::string s = j.get<std::string>();
        try
          {
            size_t used = 0;
            uint64_t v = std::stoull(s, &used, 0);
            if (used == s.size() && !s.empty() && s[0] != '-')
              return v;
          }
        catch (const std::exception&)
          { }
        throw Error(what + ": bad integer '" + s + "'");
      }
    throw Error(what + ": expected an integer");
  }

  inline std::string toHexString(const std::vector<uint8_t>& bytes)
  {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (uint8_t b : bytes)
      {
        s += digits[b >> 4];
        s += digits[b & 15];
      }
    return s;
  }

  inline std::vector<uint8_t> fromHexString(const std::string& s)
  {
    auto nib = [&](char c) -> uint8_t {
      if (c >= '0' && c <= '9') return uint8_t(c - '0');
      if (c >= 'a' && c <= 'f') return uint8_t(c - 'a' + 10);
      if (c >= 'A' && c <= 'F') return uint8_t(c - 'A' + 10);
      throw Error("inline_hex: bad digit '" + std::string(1, c) + "'");
    };
    std::string t;
    for (char c : s)
      if (!std::isspace(static_cast<unsigned char>(c)))
        t += c;
    if (t.size() % 2)
      throw Error("inline_hex: odd number of digits");
    std::vector<uint8_t> out(t.size() / 2);
    for (size_t i = 0; i < out.size(); ++i)
      out[i] = uint8_t(nib(t[2 * i]) << 4 | nib(t[2 * i + 1]));
    return out;
  }

  /// Manifest with every segment inlined.
  inline Json manifestToJson(const MemoryImage& image)
  {
    Json j;
    j["entry"] = hex64(image.entry);
    Json segs = Json::array();
    for (const Segment& s : image.segments)
      segs.push_back({ { "addr", hex64(s.address) }, { "inline_hex", toHexString(s.bytes) } });
    j["segments"] = segs;
    Json syms = Json::object();
    for (const auto& [name, v] : image.symbols)
      syms[name] = hex64(v);
    j["symbols"] = syms;
    return j;
  }

  /// Parse a manifest; `file` entries are resolved against baseDir.
  inline MemoryImage manifestFromJson(const Json& j, const std::filesystem::path& baseDir = {})
  {
    if (!j.is_object())
      throw Error("manifest: expected an object");
    MemoryImage image;
    if (!j.contains("entry"))
      throw Error("manifest: missing entry");
    image.entry = parseU64(j.at("entry"), "manifest entry");
    if (!j.contains("segments") || !j.at("segments").is_array())
      throw Error("manifest: missing segments array");
    for (const Json& s : j.at("segments"))
      {
        Segment seg;
        seg.address = parseU64(s.at("addr"), "segment addr");
        if (s.contains("inline_hex"))
          seg.bytes = fromHexString(s.at("inline_hex").get<std::string>());
        else if (s.contains("file"))
          {
            std::filesystem::path p = baseDir / s.at("file").get<std::string>();
            std::ifstream in(p, std::ios::binary);
            if (!in)
              throw Error("manifest: cannot open segment file " + p.string());
            seg.bytes.assign(std::istreambuf_iterator<char>(in), {});
          }
        else
          throw Error("manifest: segment needs inline_hex or file");
        image.segments.push_back(std::move(seg));
      }
    if (j.contains("symbols"))
      for (const auto& [name, v] : j.at("symbols").items())
        image.symbols[name] = parseU64(v, "symbol " + name);
    image.normalize();
    return image;
  }

  inline MemoryImage readManifest(const std::filesystem::path& path)
  {
    std::ifstream in(path);
    if (!in)
      throw Error("cannot open manifest " + path.string());
    Json j;
    try
      {
        j = Json::parse(in);
      }
    catch (const Json::parse_error& e)
      {
        throw Error("manifest " + path.string() + ": " + e.what());
      }
    return manifestFromJson(j, path.parent_path());
  }

  inline void writeManifest(const std::filesystem::path& path, const MemoryImage& image)
  {
    std::ofstream out(path);
    if (!out)
      throw Error("cannot write " + path.string());
    out << manifestToJson(image).dump(2) << '\n';
  }

}  // namespace irtsim
