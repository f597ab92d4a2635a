#include "simaudit/sol_extract.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <unordered_set>

#include "simaudit/errors.hpp"

namespace simaudit {

std::string_view to_string(UnitKind kind) {
  switch (kind) {
    case UnitKind::Function: return "function";
    case UnitKind::Modifier: return "modifier";
    case UnitKind::Constructor: return "constructor";
    case UnitKind::Fallback: return "fallback";
    case UnitKind::Receive: return "receive";
  }
  return "function";
}

UnitKind unit_kind_from_string(std::string_view text) {
  if (text == "function") return UnitKind::Function;
  if (text == "modifier") return UnitKind::Modifier;
  if (text == "constructor") return UnitKind::Constructor;
  if (text == "fallback") return UnitKind::Fallback;
  if (text == "receive") return UnitKind::Receive;
  throw Error(ErrorKind::FileCorrupt, "unknown unit kind '" + std::string(text) + "'");
}

namespace {

constexpr std::string_view kDenylist[] = {
    // builtins
    "require", "assert", "revert", "keccak256", "sha256", "sha3", "ripemd160",
    "ecrecover", "addmod", "mulmod", "blockhash", "blobhash", "gasleft",
    "selfdestruct", "suicide", "type",
    // abi.*, bytes.concat, string.concat, user-defined value types
    "encode", "encodePacked", "encodeWithSelector", "encodeWithSignature",
    "encodeCall", "decode", "concat", "wrap", "unwrap",
    // low-level address members and array members
    "call", "delegatecall", "staticcall", "callcode", "push", "pop",
    // keywords that can be followed by '('
    "if", "for", "while", "return", "returns", "catch", "function", "mapping",
    "emit", "new", "delete", "try", "do"};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$';
}

bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

bool all_digits(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// uint8..uint256, int*, bytes1..bytes32, fixed/ufixed with optional MxN.
bool is_elementary_type(std::string_view name) {
  static const std::unordered_set<std::string_view> plain{
      "address", "payable", "bool", "string", "bytes", "byte", "uint", "int",
      "fixed", "ufixed"};
  if (plain.count(name)) return true;
  auto suffixed = [&](std::string_view prefix) {
    return name.size() > prefix.size() && name.substr(0, prefix.size()) == prefix &&
           all_digits(name.substr(prefix.size()));
  };
  if (suffixed("uint") || suffixed("int") || suffixed("bytes")) return true;
  for (std::string_view prefix : {std::string_view("ufixed"), std::string_view("fixed")}) {
    if (name.size() > prefix.size() && name.substr(0, prefix.size()) == prefix) {
      auto rest = name.substr(prefix.size());
      auto x = rest.find('x');
      if (x != std::string_view::npos && x > 0 && all_digits(rest.substr(0, x)) &&
          x + 1 < rest.size() && all_digits(rest.substr(x + 1)))
        return true;
    }
  }
  return false;
}

enum class TokKind { Ident, Number, String, Punct };

struct Token {
  TokKind kind;
  std::size_t begin;
  std::size_t end;
  std::string_view text;
};

// Returns the index one past the closing quote of the literal at `pos`.
std::size_t skip_string(std::string_view src, std::size_t pos, std::string_view file) {
  const char quote = src[pos];
  std::size_t i = pos + 1;
  while (i < src.size() && src[i] != quote) {
    if (src[i] == '\n') break;
    i += (src[i] == '\\') ? 2 : 1;
  }
  if (i >= src.size() || src[i] != quote)
    throw SourceError(ErrorKind::UnterminatedString, std::string(file), pos,
                      "unterminated string literal");
  return i + 1;
}

std::size_t skip_block_comment(std::string_view src, std::size_t pos, std::string_view file) {
  auto close = src.find("*/", pos + 2);
  if (close == std::string_view::npos)
    throw SourceError(ErrorKind::UnterminatedBlockComment, std::string(file), pos,
                      "unterminated block comment");
  return close + 2;
}

std::vector<Token> tokenize(std::string_view src, std::string_view file) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = src.size();
  while (i < n) {
    const char c = src[i];
    if (is_space(c)) {
      ++i;
    } else if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      auto eol = src.find('\n', i);
      i = eol == std::string_view::npos ? n : eol;
    } else if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      i = skip_block_comment(src, i, file);
    } else if (c == '"' || c == '\'') {
      auto end = skip_string(src, i, file);
      out.push_back({TokKind::String, i, end, src.substr(i, end - i)});
      i = end;
    } else if (is_ident_start(c)) {
      auto j = i + 1;
      while (j < n && is_ident_char(src[j])) ++j;
      out.push_back({TokKind::Ident, i, j, src.substr(i, j - i)});
      i = j;
    } else if (c >= '0' && c <= '9') {
      auto j = i + 1;
      while (j < n && (is_ident_char(src[j]) || src[j] == '.')) ++j;
      out.push_back({TokKind::Number, i, j, src.substr(i, j - i)});
      i = j;
    } else {
      out.push_back({TokKind::Punct, i, i + 1, src.substr(i, 1)});
      ++i;
    }
  }
  return out;
}

bool is_punct(const Token& t, char c) {
  return t.kind == TokKind::Punct && t.text[0] == c;
}

bool is_ident(const Token& t, std::string_view word) {
  return t.kind == TokKind::Ident && t.text == word;
}

class Extractor {
 public:
  Extractor(std::string_view src, std::string_view file)
      : src_(src), file_(file), toks_(tokenize(src, file)) {
    match_brackets();
  }

  std::vector<FunctionUnit> run() {
    std::size_t i = 0;
    while (i < toks_.size()) {
      const Token& t = toks_[i];
      if (is_ident(t, "contract") || is_ident(t, "library") || is_ident(t, "interface")) {
        i = parse_contract(i);
      } else if (is_ident(t, "function")) {
        i = parse_unit(i, "");
      } else if (is_punct(t, '{')) {
        i = match_[i] + 1;
      } else {
        ++i;
      }
    }
    return std::move(units_);
  }

 private:
  void match_brackets() {
    match_.assign(toks_.size(), 0);
    std::vector<std::size_t> braces;
    std::vector<std::size_t> parens;
    for (std::size_t i = 0; i < toks_.size(); ++i) {
      const Token& t = toks_[i];
      if (t.kind != TokKind::Punct) continue;
      switch (t.text[0]) {
        case '{': braces.push_back(i); break;
        case '(': parens.push_back(i); break;
        case '}':
          if (braces.empty())
            throw SourceError(ErrorKind::UnbalancedBraces, std::string(file_), t.begin,
                              "unmatched '}'");
          match_[braces.back()] = i;
          match_[i] = braces.back();
          braces.pop_back();
          break;
        case ')':
          // Parentheses are matched best-effort; only braces are validated.
          if (!parens.empty()) {
            match_[parens.back()] = i;
            match_[i] = parens.back();
            parens.pop_back();
          }
          break;
        default: break;
      }
    }
    if (!braces.empty())
      throw SourceError(ErrorKind::UnbalancedBraces, std::string(file_),
                        toks_[braces.front()].begin, "unmatched '{'");
    // Unmatched '(' point at the end so that group skipping stays in bounds.
    for (auto p : parens) match_[p] = toks_.size() - 1;
  }

  std::size_t parse_contract(std::size_t i) {
    if (i + 1 >= toks_.size() || toks_[i + 1].kind != TokKind::Ident) return i + 1;
    const std::string name(toks_[i + 1].text);
    std::size_t j = i + 2;
    while (j < toks_.size() && !is_punct(toks_[j], '{') && !is_punct(toks_[j], ';')) ++j;
    if (j >= toks_.size() || is_punct(toks_[j], ';')) return j + 1;
    const std::size_t close = match_[j];
    std::size_t k = j + 1;
    while (k < close) {
      const Token& t = toks_[k];
      if (is_ident(t, "function") || is_ident(t, "modifier") || is_ident(t, "constructor") ||
          ((is_ident(t, "fallback") || is_ident(t, "receive")) && k + 1 < close &&
           is_punct(toks_[k + 1], '('))) {
        k = parse_unit(k, name);
      } else if (is_punct(t, '{')) {
        k = match_[k] + 1;
      } else {
        ++k;
      }
    }
    return close + 1;
  }

  // Parses the definition starting at keyword token `i`; returns the index
  // of the first token after it. Bodyless declarations and function-type
  // expressions are skipped.
  std::size_t parse_unit(std::size_t i, const std::string& contract) {
    const Token& kw = toks_[i];
    UnitKind kind = UnitKind::Function;
    std::string name;
    std::size_t after_name = i + 1;
    if (kw.text == "function") {
      if (after_name < toks_.size() && toks_[after_name].kind == TokKind::Ident) {
        name = std::string(toks_[after_name].text);
        ++after_name;
      } else {
        kind = UnitKind::Fallback;
        name = "fallback";
      }
    } else if (kw.text == "modifier") {
      if (after_name >= toks_.size() || toks_[after_name].kind != TokKind::Ident) return i + 1;
      kind = UnitKind::Modifier;
      name = std::string(toks_[after_name].text);
      ++after_name;
    } else if (kw.text == "constructor") {
      kind = UnitKind::Constructor;
      name = "constructor";
    } else if (kw.text == "fallback") {
      kind = UnitKind::Fallback;
      name = "fallback";
    } else {
      kind = UnitKind::Receive;
      name = "receive";
    }

    // Find the body: first '{' or ';' outside parentheses.
    std::size_t j = after_name;
    int depth = 0;
    for (; j < toks_.size(); ++j) {
      const Token& t = toks_[j];
      if (is_punct(t, '(')) {
        ++depth;
      } else if (is_punct(t, ')')) {
        if (--depth < 0) return i + 1;  // `function` inside an enclosing group
      } else if (depth == 0 && (is_punct(t, ';') || is_punct(t, '{') || is_punct(t, '}'))) {
        break;
      }
    }
    if (j >= toks_.size() || !is_punct(toks_[j], '{')) return j + 1;
    const std::size_t body_open = j;
    const std::size_t body_close = match_[j];

    FunctionUnit unit;
    unit.kind = kind;
    unit.name = name;
    unit.contract = contract;
    unit.file_path = std::string(file_);
    unit.source_span = {kw.begin, toks_[body_close].end};
    unit.raw_source = std::string(src_.substr(kw.begin, unit.source_span.end - kw.begin));
    unit.normalized_source = normalize(unit.raw_source);
    unit.content_hash = content_hash(unit.normalized_source);
    const int ordinal = ordinals_[{contract, name}]++;
    unit.unit_id = std::string(file_) + "::" + contract + "::" + name + "#" +
                   std::to_string(ordinal);

    std::vector<std::string> calls;
    auto add_call = [&calls](std::string_view n) {
      if (std::find(calls.begin(), calls.end(), n) == calls.end()) calls.emplace_back(n);
    };
    collect_header_modifiers(after_name, body_open, add_call);
    collect_body_calls(body_open + 1, body_close, add_call);
    unit.declared_calls = std::move(calls);

    units_.push_back(std::move(unit));
    return body_close + 1;
  }

  template <typename Add>
  void collect_header_modifiers(std::size_t from, std::size_t to, Add&& add) {
    static const std::unordered_set<std::string_view> header_words{
        "public", "private", "internal", "external", "pure", "view", "payable",
        "virtual", "constant", "immutable", "nonpayable"};
    std::size_t k = from;
    // The parameter list comes first.
    if (k < to && is_punct(toks_[k], '(')) k = match_[k] + 1;
    while (k < to) {
      const Token& t = toks_[k];
      const bool group_follows = k + 1 < to && is_punct(toks_[k + 1], '(');
      if (t.kind == TokKind::Ident) {
        if (t.text == "returns" || t.text == "override") {
          k = group_follows ? match_[k + 1] + 1 : k + 1;
          continue;
        }
        if (!header_words.count(t.text)) add(t.text);
        k = group_follows ? match_[k + 1] + 1 : k + 1;
      } else {
        ++k;
      }
    }
  }

  template <typename Add>
  void collect_body_calls(std::size_t from, std::size_t to, Add&& add) {
    std::size_t k = from;
    while (k < to) {
      const Token& t = toks_[k];
      if (t.kind != TokKind::Ident) {
        ++k;
        continue;
      }
      if (t.text == "assembly") {
        std::size_t b = k + 1;
        while (b < to && !is_punct(toks_[b], '{')) ++b;
        k = b < to ? match_[b] + 1 : b;
        continue;
      }
      if (t.text == "emit" || t.text == "new" ||
          (t.text == "revert" && k + 1 < to && toks_[k + 1].kind == TokKind::Ident)) {
        // Skip the event / error / contract name up to its argument list.
        std::size_t b = k + 1;
        while (b < to && !is_punct(toks_[b], '(') && !is_punct(toks_[b], ';')) ++b;
        k = b;
        continue;
      }
      if (k + 1 < to) {
        const Token& next = toks_[k + 1];
        bool is_call = is_punct(next, '(');
        // expr.f{value: v}(args)
        if (!is_call && is_punct(next, '{') && k > from && is_punct(toks_[k - 1], '.')) {
          const std::size_t opts_close = match_[k + 1];
          is_call = opts_close + 1 < to && is_punct(toks_[opts_close + 1], '(');
        }
        if (is_call && !is_builtin_call(t.text)) add(t.text);
      }
      ++k;
    }
  }

  std::string_view src_;
  std::string_view file_;
  std::vector<Token> toks_;
  std::vector<std::size_t> match_;
  std::map<std::pair<std::string, std::string>, int> ordinals_;
  std::vector<FunctionUnit> units_;
};

}  // namespace

std::span<const std::string_view> call_denylist() { return kDenylist; }

bool is_builtin_call(std::string_view name) {
  return std::find(std::begin(kDenylist), std::end(kDenylist), name) != std::end(kDenylist) ||
         is_elementary_type(name);
}

std::vector<FunctionUnit> extract_units(std::string_view source, std::string_view file_path) {
  return Extractor(source, file_path).run();
}

std::string normalize(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  auto emit = [&](char c) {
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  };
  std::size_t i = 0;
  const std::size_t n = raw.size();
  while (i < n) {
    const char c = raw[i];
    if (c == '/' && i + 1 < n && raw[i + 1] == '/') {
      auto eol = raw.find('\n', i);
      i = eol == std::string_view::npos ? n : eol;
      pending_space = true;
    } else if (c == '/' && i + 1 < n && raw[i + 1] == '*') {
      i = skip_block_comment(raw, i, "<unit>");
      pending_space = true;
    } else if (c == '"' || c == '\'') {
      const auto end = skip_string(raw, i, "<unit>");
      // Whitespace runs inside literals collapse too, so the output never
      // holds two consecutive whitespace characters.
      emit(c);
      bool in_space = false;
      for (std::size_t k = i + 1; k < end; ++k) {
        if (is_space(raw[k])) {
          if (!in_space) out.push_back(' ');
          in_space = true;
        } else {
          out.push_back(raw[k]);
          in_space = false;
        }
      }
      i = end;
    } else if (is_space(c)) {
      pending_space = true;
      ++i;
    } else {
      emit(c);
      ++i;
    }
  }
  return out;
}

std::string content_hash(std::string_view normalized) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_Digest(normalized.data(), normalized.size(), digest.data(), &len, EVP_sha256(), nullptr);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace simaudit
