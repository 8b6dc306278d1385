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

// Two-pass assembler for the supported RV64 subset.
//
// Dialect: one statement per line, optional `label:` prefixes, comments
// start with `#` or `;`. Directives: .org .dword .word .zero .align .equ.
// Branch and jump operands are absolute addresses (labels or numbers).
// Pseudo-instructions: nop li la mv not neg j jr ret call beqz bnez bltz
// bgez blez bgtz bgt ble bgtu bleu seqz snez sext.w csrr csrw csrs csrc
// csrwi csrsi csrci.

#pragma once

#include <bit>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "csr.hpp"
#include "image.hpp"
#include "isa.hpp"
#include "types.hpp"

namespace irtsim
{

  class AsmError : public Error
  {
  public:
    AsmError(int line, const std::string& msg)
      : Error("line " + std::to_string(line) + ": " + msg), line_(line)
    { }

    int line() const
    { return line_; }

  private:
    int line_;
  };

  /// Instruction sequence that loads the 64-bit constant v into rd.
  inline std::vector<Instruction> materializeConstant(uint8_t rd, uint64_t v)
  {
    std::vector<Instruction> out;
    auto emit = [&](auto&& self, int64_t value) -> void {
      if (value >= INT32_MIN && value <= INT32_MAX)
        {
          int64_t lo = detail::sext(uint64_t(value), 12);
          uint64_t hi20 = (uint64_t(value + 0x800) >> 12) & 0xfffff;
          if (hi20 != 0)
            {
              out.push_back({ Mnemonic::Lui, rd, 0, 0, detail::sext(hi20 << 12, 32) });
              if (lo != 0)
                out.push_back({ Mnemonic::Addiw, rd, rd, 0, lo });
            }
          else
            out.push_back({ Mnemonic::Addi, rd, 0, 0, lo });
          return;
        }
      int64_t lo = detail::sext(uint64_t(value), 12);
      int64_t hi = int64_t(uint64_t(value) - uint64_t(lo)) >> 12;
      unsigned shift = 12 + unsigned(std::countr_zero(uint64_t(hi)));
      hi >>= (shift - 12);
      self(self, hi);
      out.push_back({ Mnemonic::Slli, rd, rd, 0, int64_t(shift) });
      if (lo != 0)
        out.push_back({ Mnemonic::Addi, rd, rd, 0, lo });
    };
    emit(emit, int64_t(v));
    for (Instruction& in : out)
      in.raw = encode(in);
    return out;
  }

  inline std::optional<uint8_t> parseRegister(std::string_view s)
  {
    if (s.size() >= 2 && s[0] == 'x')
      {
        unsigned n = 0;
        for (size_t i = 1; i < s.size(); ++i)
          {
            if (!std::isdigit(static_cast<unsigned char>(s[i])))
              return std::nullopt;
            n = n * 10 + unsigned(s[i] - '0');
          }
        if (n < 32 && (s.size() == 2 || s[1] != '0'))
          return uint8_t(n);
        return std::nullopt;
      }
    if (s == "fp")
      return 8;
    for (size_t i = 0; i < abiNames.size(); ++i)
      if (abiNames[i] == s)
        return uint8_t(i);
    return std::nullopt;
  }

  namespace asmdetail
  {
    inline std::string trim(std::string_view s)
    {
      size_t b = 0, e = s.size();
      while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
      while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
        --e;
      return std::string(s.substr(b, e - b));
    }

    inline bool isIdentStart(char c)
    { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }

    inline bool isIdentChar(char c)
    { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }

    /// Split on commas that are outside parentheses.
    inline std::vector<std::string> splitOperands(std::string_view s)
    {
      std::vector<std::string> out;
      int depth = 0;
      std::string cur;
      for (char c : s)
        {
          if (c == '(')
            ++depth;
          else if (c == ')')
            --depth;
          if (c == ',' && depth == 0)
            {
              out.push_back(trim(cur));
              cur.clear();
              continue;
            }
          cur += c;
        }
      std::string last = trim(cur);
      if (!last.empty() || !out.empty())
        out.push_back(last);
      return out;
    }

    using SymbolTable = std::map<std::string, uint64_t>;

    /// Recursive-descent integer expression evaluator with wrapping
    /// 64-bit arithmetic. Returns nullopt if a symbol is undefined.
    class ExprParser
    {
    public:
      ExprParser(std::string_view text, const SymbolTable& syms, int line)
        : s_(text), syms_(syms), line_(line)
      { }

      std::optional<uint64_t> parse()
      {
        auto v = parseOr();
        skipSpace();
        if (pos_ != s_.size())
          throw AsmError(line_, "unexpected '" + std::string(s_.substr(pos_)) + "' in expression");
        return v;
      }

    private:
      using V = std::optional<uint64_t>;

      static V combine(V a, V b, uint64_t (*f)(uint64_t, uint64_t))
      {
        if (!a || !b)
          return std::nullopt;
        return f(*a, *b);
      }

      void skipSpace()
      {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
          ++pos_;
      }

      bool accept(std::string_view tok)
      {
        skipSpace();
        if (s_.substr(pos_, tok.size()) == tok)
          {
            pos_ += tok.size();
            return true;
          }
        return false;
      }

      V parseOr()
      {
        V v = parseXor();
        while (accept("|"))
          v = combine(v, parseXor(), [](uint64_t a, uint64_t b) { return a | b; });
        return v;
      }

      V parseXor()
      {
        V v = parseAnd();
        while (accept("^"))
          v = combine(v, parseAnd(), [](uint64_t a, uint64_t b) { return a ^ b; });
        return v;
      }

      V parseAnd()
      {
        V v = parseShift();
        while (accept("&"))
          v = combine(v, parseShift(), [](uint64_t a, uint64_t b) { return a & b; });
        return v;
      }

      V parseShift()
      {
        V v = parseAdd();
        for (;;)
          {
            if (accept("<<"))
              v = combine(v, parseAdd(), [](uint64_t a, uint64_t b) { return b >= 64 ? 0 : a << b; });
            else if (accept(">>"))
              v = combine(v, parseAdd(), [](uint64_t a, uint64_t b) { return b >= 64 ? 0 : a >> b; });
            else
              return v;
          }
      }

      V parseAdd()
      {
        V v = parseMul();
        for (;;)
          {
            if (accept("+"))
              v = combine(v, parseMul(), [](uint64_t a, uint64_t b) { return a + b; });
            else if (accept("-"))
              v = combine(v, parseMul(), [](uint64_t a, uint64_t b) { return a - b; });
            else
              return v;
          }
      }

      V parseMul()
      {
        V v = parseUnary();
        for (;;)
          {
            if (accept("*"))
              v = combine(v, parseUnary(), [](uint64_t a, uint64_t b) { return a * b; });
            else if (accept("/"))
              {
                V d = parseUnary();
                if (d && *d == 0)
                  throw AsmError(line_, "division by zero");
                v = combine(v, d, [](uint64_t a, uint64_t b) { return a / b; });
              }
            else
              return v;
          }
      }

      V parseUnary()
      {
        if (accept("-"))
          {
            V v = parseUnary();
            return v ? V(0 - *v) : v;
          }
        if (accept("~"))
          {
            V v = parseUnary();
            return v ? V(~*v) : v;
          }
        if (accept("+"))
          return parseUnary();
        return parsePrimary();
      }

      V parsePrimary()
      {
        skipSpace();
        if (accept("("))
          {
            V v = parseOr();
            if (!accept(")"))
              throw AsmError(line_, "missing ')'");
            return v;
          }
        if (pos_ >= s_.size())
          throw AsmError(line_, "expected expression");
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)))
          {
            size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
              ++pos_;
            std::string tok(s_.substr(start, pos_ - start));
            std::erase(tok, '_');
            int base = 10;
            std::string digits = tok;
            if (tok.size() > 2 && tok[0] == '0' && (tok[1] == 'x' || tok[1] == 'X'))
              base = 16, digits = tok.substr(2);
            else if (tok.size() > 2 && tok[0] == '0' && (tok[1] == 'b' || tok[1] == 'B'))
              base = 2, digits = tok.substr(2);
            uint64_t v = 0;
            for (char d : digits)
              {
                int dv = std::isdigit(static_cast<unsigned char>(d)) ? d - '0'
                       : std::isxdigit(static_cast<unsigned char>(d)) ? std::tolower(d) - 'a' + 10 : 99;
                if (dv >= base)
                  throw AsmError(line_, "bad number '" + tok + "'");
                uint64_t next = v * uint64_t(base) + uint64_t(dv);
                if ((next - uint64_t(dv)) / uint64_t(base) != v)
                  throw AsmError(line_, "number out of range '" + tok + "'");
                v = next;
              }
            return v;
          }
        if (isIdentStart(c))
          {
            size_t start = pos_;
            while (pos_ < s_.size() && isIdentChar(s_[pos_]))
              ++pos_;
            std::string name(s_.substr(start, pos_ - start));
            auto it = syms_.find(name);
            if (it == syms_.end())
              return std::nullopt;
            return it->second;
          }
        throw AsmError(line_, "unexpected character '" + std::string(1, c) + "'");
      }

      std::string_view s_;
      const SymbolTable& syms_;
      int line_;
      size_t pos_ = 0;
    };

    struct Statement
    {
      int line = 0;
      std::vector<std::string> labels;
      std::string op;                      // lower-cased mnemonic or directive
      std::vector<std::string> operands;
      uint64_t address = 0;                // assigned in pass 1
      uint64_t size = 0;
    };

    inline std::string lower(std::string s)
    {
      for (char& c : s)
        c = char(std::tolower(static_cast<unsigned char>(c)));
      return s;
    }

    inline Statement parseLine(std::string_view raw, int line)
    {
      std::string text(raw);
      size_t cut = text.find_first_of("#;");
      if (cut != std::string::npos)
        text.resize(cut);
      Statement st;
      st.line = line;
      std::string rest = trim(text);
      for (;;)
        {
          size_t i = 0;
          while (i < rest.size() && isIdentChar(rest[i]))
            ++i;
          if (i > 0 && i < rest.size() && rest[i] == ':' && isIdentStart(rest[0]))
            {
              st.labels.push_back(rest.substr(0, i));
              rest = trim(std::string_view(rest).substr(i + 1));
              continue;
            }
          break;
        }
      if (rest.empty())
        return st;
      size_t sp = 0;
      while (sp < rest.size() && !std::isspace(static_cast<unsigned char>(rest[sp])))
        ++sp;
      st.op = lower(rest.substr(0, sp));
      st.operands = splitOperands(std::string_view(rest).substr(sp));
      return st;
    }

    constexpr bool fitsSigned(int64_t v, unsigned bits)
    { return v >= -(int64_t(1) << (bits - 1)) && v < (int64_t(1) << (bits - 1)); }

    /// Assembler state shared by both passes.
    class Assembler
    {
    public:
      MemoryImage run(std::string_view source)
      {
        std::vector<Statement> stmts;
        int line = 0;
        size_t start = 0;
        while (start <= source.size())
          {
            size_t nl = source.find('\n', start);
            std::string_view l = source.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
            stmts.push_back(parseLine(l, ++line));
            if (nl == std::string_view::npos)
              break;
            start = nl + 1;
          }

        pass1(stmts);
        return pass2(stmts);
      }

    private:
      SymbolTable syms_;
      std::map<std::string, int> labelLines_;

      std::optional<uint64_t> eval(const std::string& text, int line) const
      {
        if (text.empty())
          throw AsmError(line, "missing operand");
        return ExprParser(text, syms_, line).parse();
      }

      uint64_t evalRequired(const std::string& text, int line) const
      {
        auto v = eval(text, line);
        if (!v)
          throw AsmError(line, "undefined symbol in '" + text + "'");
        return *v;
      }

      void define(const std::string& name, uint64_t value, int line)
      {
        if (parseRegister(name))
          throw AsmError(line, "symbol name '" + name + "' is a register");
        auto [it, inserted] = labelLines_.emplace(name, line);
        if (!inserted)
          throw AsmError(line, "duplicate symbol '" + name + "' (first defined on line " +
                                   std::to_string(it->second) + ")");
        syms_[name] = value;
      }

      static void expectCount(const Statement& st, size_t n)
      {
        if (st.operands.size() != n)
          throw AsmError(st.line, "'" + st.op + "' expects " + std::to_string(n) + " operand(s), got " +
                                    std::to_string(st.operands.size()));
      }

      uint64_t sizeOf(const Statement& st, uint64_t lc)
      {
        const std::string& op = st.op;
        if (op == ".dword")
          return 8 * st.operands.size();
        if (op == ".word")
          return 4 * st.operands.size();
        if (op == ".zero")
          {
            expectCount(st, 1);
            return evalRequired(st.operands[0], st.line);
          }
        if (op == ".align")
          {
            expectCount(st, 1);
            uint64_t n = evalRequired(st.operands[0], st.line);
            if (n > 16)
              throw AsmError(st.line, ".align exponent too large");
            uint64_t a = uint64_t(1) << n;
            return (a - lc % a) % a;
          }
        if (op == "li")
          {
            expectCount(st, 2);
            auto v = eval(st.operands[1], st.line);
            if (!v)
              throw AsmError(st.line, "li needs a value known at this point (use la for addresses of later labels)");
            return 4 * materializeConstant(1, *v).size();
          }
        if (op == "la")
          return 8;
        if (op.empty() || op[0] == '.')
          throw AsmError(st.line, "unknown directive '" + op + "'");
        return 4;
      }

      void pass1(std::vector<Statement>& stmts)
      {
        uint64_t lc = addr::ramBase;
        for (Statement& st : stmts)
          {
            if (st.op == ".equ" || st.op == ".set")
              {
                std::vector<std::string> ops = st.operands;
                if (ops.size() == 1)
                  {
                    // `.equ NAME value` without a comma
                    std::string s = ops[0];
                    size_t sp = s.find_first_of(" \t");
                    if (sp == std::string::npos)
                      throw AsmError(st.line, ".equ expects a name and a value");
                    ops = { trim(s.substr(0, sp)), trim(s.substr(sp)) };
                  }
                if (ops.size() != 2)
                  throw AsmError(st.line, ".equ expects a name and a value");
                for (const std::string& l : st.labels)
                  define(l, lc, st.line);
                define(ops[0], evalRequired(ops[1], st.line), st.line);
                continue;
              }
            if (st.op == ".org")
              {
                expectCount(st, 1);
                lc = evalRequired(st.operands[0], st.line);
              }
            if (st.op == ".org")
              st.size = 0;
            for (const std::string& l : st.labels)
              define(l, lc, st.line);
            st.address = lc;
            if (st.op.empty() || st.op == ".org")
              continue;
            if (st.op != ".align" && lc % 4 != 0 && st.op[0] != '.')
              throw AsmError(st.line, "instruction at unaligned address " + hex64(lc));
            st.size = sizeOf(st, lc);
            lc += st.size;
          }
      }

      MemoryImage pass2(const std::vector<Statement>& stmts)
      {
        struct Pending
        {
          Segment seg;
          int line;
        };
        std::vector<Pending> segs;
        bool open = false;

        auto emitBytes = [&](const Statement& st, const std::vector<uint8_t>& bytes) {
          if (bytes.empty())
            return;
          if (!open || segs.back().seg.end() != st.address)
            {
              segs.push_back({ Segment{ st.address, {} }, st.line });
              open = true;
            }
          auto& b = segs.back().seg.bytes;
          b.insert(b.end(), bytes.begin(), bytes.end());
        };

        for (const Statement& st : stmts)
          {
            if (st.op.empty() || st.op == ".equ" || st.op == ".set")
              continue;
            if (st.op == ".org")
              {
                open = false;
                continue;
              }
            std::vector<uint8_t> bytes;
            if (st.op == ".dword" || st.op == ".word")
              {
                unsigned width = st.op == ".dword" ? 8 : 4;
                for (const std::string& o : st.operands)
                  {
                    uint64_t v = evalRequired(o, st.line);
                    if (width == 4 && v > 0xffffffffull && int64_t(v) < INT32_MIN)
                      throw AsmError(st.line, ".word value out of range");
                    for (unsigned i = 0; i < width; ++i)
                      bytes.push_back(uint8_t(v >> (8 * i)));
                  }
              }
            else if (st.op == ".zero" || st.op == ".align")
              bytes.assign(st.size, 0);
            else
              {
                for (const Instruction& in : encodeStatement(st))
                  {
                    uint32_t w = encode(in);
                    for (unsigned i = 0; i < 4; ++i)
                      bytes.push_back(uint8_t(w >> (8 * i)));
                  }
                if (bytes.size() != st.size)
                  throw AsmError(st.line, "internal: size changed between passes");
              }
            emitBytes(st, bytes);
          }

        MemoryImage image;
        std::sort(segs.begin(), segs.end(),
                  [](const Pending& a, const Pending& b) { return a.seg.address < b.seg.address; });
        for (size_t i = 0; i < segs.size(); ++i)
          {
            if (i > 0 && segs[i].seg.address < segs[i - 1].seg.end())
              throw AsmError(segs[i].line, "segment at " + hex64(segs[i].seg.address) +
                                               " overlaps the segment at " + hex64(segs[i - 1].seg.address));
            image.segments.push_back(std::move(segs[i].seg));
          }
        image.symbols = syms_;
        if (auto s = syms_.find("_start"); s != syms_.end())
          image.entry = s->second;
        else if (!image.segments.empty())
          image.entry = image.segments.front().address;
        return image;
      }

      uint8_t reg(const Statement& st, size_t i) const
      {
        auto r = parseRegister(st.operands.at(i));
        if (!r)
          throw AsmError(st.line, "expected register, got '" + st.operands[i] + "'");
        return *r;
      }

      int64_t immSigned(const Statement& st, const std::string& text, unsigned bits) const
      {
        int64_t v = int64_t(evalRequired(text, st.line));
        if (!fitsSigned(v, bits))
          throw AsmError(st.line, "immediate " + std::to_string(v) + " does not fit in " + std::to_string(bits) +
                                    "-bit signed field");
        return v;
      }

      uint64_t immUnsigned(const Statement& st, const std::string& text, uint64_t max) const
      {
        uint64_t v = evalRequired(text, st.line);
        if (v > max)
          throw AsmError(st.line, "immediate " + std::to_string(v) + " exceeds " + std::to_string(max));
        return v;
      }

      /// `imm(reg)` memory operand.
      std::pair<int64_t, uint8_t> memOperand(const Statement& st, const std::string& text) const
      {
        size_t open = text.rfind('(');
        if (open == std::string::npos || text.back() != ')')
          throw AsmError(st.line, "expected offset(register), got '" + text + "'");
        auto r = parseRegister(trim(std::string_view(text).substr(open + 1, text.size() - open - 2)));
        if (!r)
          throw AsmError(st.line, "bad base register in '" + text + "'");
        std::string off = trim(std::string_view(text).substr(0, open));
        int64_t imm = off.empty() ? 0 : immSigned(st, off, 12);
        return { imm, *r };
      }

      int64_t branchOffset(const Statement& st, const std::string& target, unsigned bits) const
      {
        uint64_t dest = evalRequired(target, st.line);
        int64_t off = int64_t(dest - st.address);
        if (off & 1)
          throw AsmError(st.line, "branch target is not 2-byte aligned");
        if (!fitsSigned(off, bits))
          throw AsmError(st.line, "branch target out of range");
        return off;
      }

      uint16_t csrOperand(const Statement& st, const std::string& text) const
      {
        if (auto n = csrFromName(lower(text)))
          return *n;
        return uint16_t(immUnsigned(st, text, 0xfff));
      }

      static uint8_t fenceSet(const Statement& st, const std::string& text)
      {
        if (text == "0")
          return 0;
        uint8_t v = 0;
        for (char c : text)
          switch (c)
            {
            case 'i': v |= 8; break;
            case 'o': v |= 4; break;
            case 'r': v |= 2; break;
            case 'w': v |= 1; break;
            default: throw AsmError(st.line, "bad fence set '" + text + "'");
            }
        return v;
      }

      std::vector<Instruction> encodeStatement(const Statement& st)
      {
        const std::string& op = st.op;
        const auto& o = st.operands;
        auto one = [](Mnemonic m, uint8_t rd, uint8_t rs1, uint8_t rs2, int64_t imm) {
          return std::vector<Instruction>{ Instruction{ m, rd, rs1, rs2, imm } };
        };

        // Pseudo-instructions first.
        if (op == "nop")
          return expectCount(st, 0), one(Mnemonic::Addi, 0, 0, 0, 0);
        if (op == "li")
          {
            expectCount(st, 2);
            return materializeConstant(reg(st, 0), evalRequired(o[1], st.line));
          }
        if (op == "la")
          {
            expectCount(st, 2);
            uint8_t rd = reg(st, 0);
            int64_t delta = int64_t(evalRequired(o[1], st.line) - st.address);
            if (!fitsSigned(delta, 32) || delta > 0x7ffff7ff)
              throw AsmError(st.line, "la target out of pc-relative range");
            int64_t lo = detail::sext(uint64_t(delta), 12);
            int64_t hi = detail::sext(uint64_t(delta - lo), 32);
            return { Instruction{ Mnemonic::Auipc, rd, 0, 0, hi }, Instruction{ Mnemonic::Addi, rd, rd, 0, lo } };
          }
        if (op == "mv")
          return expectCount(st, 2), one(Mnemonic::Addi, reg(st, 0), reg(st, 1), 0, 0);
        if (op == "not")
          return expectCount(st, 2), one(Mnemonic::Xori, reg(st, 0), reg(st, 1), 0, -1);
        if (op == "neg")
          return expectCount(st, 2), one(Mnemonic::Sub, reg(st, 0), 0, reg(st, 1), 0);
        if (op == "seqz")
          return expectCount(st, 2), one(Mnemonic::Sltiu, reg(st, 0), reg(st, 1), 0, 1);
        if (op == "snez")
          return expectCount(st, 2), one(Mnemonic::Sltu, reg(st, 0), 0, reg(st, 1), 0);
        if (op == "sext.w")
          return expectCount(st, 2), one(Mnemonic::Addiw, reg(st, 0), reg(st, 1), 0, 0);
        if (op == "j")
          return expectCount(st, 1), one(Mnemonic::Jal, 0, 0, 0, branchOffset(st, o[0], 21));
        if (op == "call")
          return expectCount(st, 1), one(Mnemonic::Jal, 1, 0, 0, branchOffset(st, o[0], 21));
        if (op == "jr")
          return expectCount(st, 1), one(Mnemonic::Jalr, 0, reg(st, 0), 0, 0);
        if (op == "ret")
          return expectCount(st, 0), one(Mnemonic::Jalr, 0, 1, 0, 0);
        if (op == "beqz" || op == "bnez" || op == "bltz" || op == "bgez")
          {
            expectCount(st, 2);
            Mnemonic m = op == "beqz" ? Mnemonic::Beq : op == "bnez" ? Mnemonic::Bne
                       : op == "bltz" ? Mnemonic::Blt : Mnemonic::Bge;
            return one(m, 0, reg(st, 0), 0, branchOffset(st, o[1], 13));
          }
        if (op == "blez" || op == "bgtz")
          {
            expectCount(st, 2);
            return one(op == "blez" ? Mnemonic::Bge : Mnemonic::Blt, 0, 0, reg(st, 0), branchOffset(st, o[1], 13));
          }
        if (op == "bgt" || op == "ble" || op == "bgtu" || op == "bleu")
          {
            expectCount(st, 3);
            Mnemonic m = op == "bgt" ? Mnemonic::Blt : op == "ble" ? Mnemonic::Bge
                       : op == "bgtu" ? Mnemonic::Bltu : Mnemonic::Bgeu;
            return one(m, 0, reg(st, 1), reg(st, 0), branchOffset(st, o[2], 13));
          }
        if (op == "csrr")
          return expectCount(st, 2), one(Mnemonic::Csrrs, reg(st, 0), 0, 0, csrOperand(st, o[1]));
        if (op == "csrw" || op == "csrs" || op == "csrc")
          {
            expectCount(st, 2);
            Mnemonic m = op == "csrw" ? Mnemonic::Csrrw : op == "csrs" ? Mnemonic::Csrrs : Mnemonic::Csrrc;
            return one(m, 0, reg(st, 1), 0, csrOperand(st, o[0]));
          }
        if (op == "csrwi" || op == "csrsi" || op == "csrci")
          {
            expectCount(st, 2);
            Mnemonic m = op == "csrwi" ? Mnemonic::Csrrwi : op == "csrsi" ? Mnemonic::Csrrsi : Mnemonic::Csrrci;
            return one(m, 0, uint8_t(immUnsigned(st, o[1], 31)), 0, csrOperand(st, o[0]));
          }

        auto m = mnemonicFromName(op);
        if (!m)
          throw AsmError(st.line, "unknown mnemonic '" + op + "'");
        const OpInfo& oi = info(*m);

        switch (oi.format)
          {
          case Format::R:
            if (*m == Mnemonic::SfenceVma)
              {
                if (o.size() > 2)
                  throw AsmError(st.line, "sfence.vma takes at most 2 operands");
                return one(*m, 0, o.size() > 0 ? reg(st, 0) : 0, o.size() > 1 ? reg(st, 1) : 0, 0);
              }
            expectCount(st, 3);
            return one(*m, reg(st, 0), reg(st, 1), reg(st, 2), 0);
          case Format::I:
            expectCount(st, 3);
            return one(*m, reg(st, 0), reg(st, 1), 0, immSigned(st, o[2], 12));
          case Format::Shift64:
            expectCount(st, 3);
            return one(*m, reg(st, 0), reg(st, 1), 0, int64_t(immUnsigned(st, o[2], 63)));
          case Format::Shift32:
            expectCount(st, 3);
            return one(*m, reg(st, 0), reg(st, 1), 0, int64_t(immUnsigned(st, o[2], 31)));
          case Format::Load:
            if (*m == Mnemonic::Jalr)
              {
                if (o.size() == 1)
                  return one(*m, 1, reg(st, 0), 0, 0);
                if (o.size() == 3)
                  return one(*m, reg(st, 0), reg(st, 1), 0, immSigned(st, o[2], 12));
              }
            {
              expectCount(st, 2);
              auto [imm, base] = memOperand(st, o[1]);
              return one(*m, reg(st, 0), base, 0, imm);
            }
          case Format::S:
            {
              expectCount(st, 2);
              auto [imm, base] = memOperand(st, o[1]);
              return one(*m, 0, base, reg(st, 0), imm);
            }
          case Format::B:
            expectCount(st, 3);
            return one(*m, 0, reg(st, 0), reg(st, 1), branchOffset(st, o[2], 13));
          case Format::U:
            {
              expectCount(st, 2);
              int64_t v = int64_t(evalRequired(o[1], st.line));
              if (v < -(1 << 19) || v > 0xfffff)
                throw AsmError(st.line, "upper immediate out of range");
              return one(*m, reg(st, 0), 0, 0, detail::sext(uint64_t(v) << 12, 32));
            }
          case Format::J:
            if (o.size() == 1)
              return one(*m, 1, 0, 0, branchOffset(st, o[0], 21));
            expectCount(st, 2);
            return one(*m, reg(st, 0), 0, 0, branchOffset(st, o[1], 21));
          case Format::Csr:
            expectCount(st, 3);
            return one(*m, reg(st, 0), reg(st, 2), 0, csrOperand(st, o[1]));
          case Format::CsrImm:
            expectCount(st, 3);
            return one(*m, reg(st, 0), uint8_t(immUnsigned(st, o[2], 31)), 0, csrOperand(st, o[1]));
          case Format::Fence:
            if (o.empty())
              return one(*m, 0, 0, 0, 0xff);
            expectCount(st, 2);
            return one(*m, 0, 0, 0, (fenceSet(st, o[0]) << 4) | fenceSet(st, o[1]));
          case Format::Sys:
            expectCount(st, 0);
            return one(*m, 0, 0, 0, 0);
          }
        throw AsmError(st.line, "unhandled mnemonic '" + op + "'");
      }
    };
  }  // namespace asmdetail

  /// Assemble source text into a memory image. Throws AsmError.
  inline MemoryImage assemble(std::string_view source)
  {
    return asmdetail::Assembler().run(source);
  }

  /// Canonical text for one word at address addr; branch and jump
  /// targets are printed as absolute addresses.
  inline std::string disassemble(uint32_t word, uint64_t address)
  {
    auto dec = decode(word);
    std::ostringstream os;
    if (!dec)
      {
        os << ".word " << hex64(word);
        return os.str();
      }
    const Instruction& in = *dec;
    const OpInfo& oi = info(in.mnemonic);
    auto x = [](unsigned r) { return "x" + std::to_string(r); };
    auto csr = [](int64_t n) {
      auto name = csrName(uint16_t(n));
      return name ? std::string(*name) : hex64(uint64_t(n));
    };
    auto fence = [](unsigned set) {
      if (!set)
        return std::string("0");
      std::string s;
      if (set & 8) s += 'i';
      if (set & 4) s += 'o';
      if (set & 2) s += 'r';
      if (set & 1) s += 'w';
      return s;
    };

    os << oi.name;
    switch (oi.format)
      {
      case Format::R:
        if (in.mnemonic == Mnemonic::SfenceVma)
          os << ' ' << x(in.rs1) << ", " << x(in.rs2);
        else
          os << ' ' << x(in.rd) << ", " << x(in.rs1) << ", " << x(in.rs2);
        break;
      case Format::I:
      case Format::Shift64:
      case Format::Shift32:
        os << ' ' << x(in.rd) << ", " << x(in.rs1) << ", " << in.imm;
        break;
      case Format::Load:
        os << ' ' << x(in.rd) << ", " << in.imm << '(' << x(in.rs1) << ')';
        break;
      case Format::S:
        os << ' ' << x(in.rs2) << ", " << in.imm << '(' << x(in.rs1) << ')';
        break;
      case Format::B:
        os << ' ' << x(in.rs1) << ", " << x(in.rs2) << ", " << hex64(address + uint64_t(in.imm));
        break;
      case Format::U:
        os << ' ' << x(in.rd) << ", " << hex64((uint64_t(in.imm) >> 12) & 0xfffff);
        break;
      case Format::J:
        os << ' ' << x(in.rd) << ", " << hex64(address + uint64_t(in.imm));
        break;
      case Format::Csr:
        os << ' ' << x(in.rd) << ", " << csr(in.imm) << ", " << x(in.rs1);
        break;
      case Format::CsrImm:
        os << ' ' << x(in.rd) << ", " << csr(in.imm) << ", " << unsigned(in.rs1);
        break;
      case Format::Fence:
        os << ' ' << fence((in.imm >> 4) & 0xf) << ", " << fence(in.imm & 0xf);
        break;
      case Format::Sys:
        break;
      }
    return os.str();
  }

}  // namespace irtsim
