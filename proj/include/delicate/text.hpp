#pragma once

// Small UTF-8 / normalization toolkit. Covers the Latin repertoire the
// historical-Italian corpora actually use: canonical composition of
// ASCII base letters with combining diacritics (U+0300..U+0328) into
// Latin-1 Supplement / Latin Extended-A, and simple case mapping for
// the same ranges. Not a full Unicode implementation.

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace delicate::text {

inline constexpr char32_t kReplacementChar = 0xFFFD;

// Decodes the code point starting at byte offset `pos` and advances `pos`.
// Invalid sequences decode to U+FFFD and advance one byte.
inline char32_t next_codepoint(std::string_view s, std::size_t& pos) {
  const auto byte = [&](std::size_t i) -> std::uint8_t {
    return static_cast<std::uint8_t>(s[i]);
  };
  const std::uint8_t b0 = byte(pos);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++pos;
    return kReplacementChar;
  }
  if (pos + static_cast<std::size_t>(len) > s.size()) {
    ++pos;
    return kReplacementChar;
  }
  for (int i = 1; i < len; ++i) {
    const std::uint8_t bi = byte(pos + static_cast<std::size_t>(i));
    if ((bi & 0xC0) != 0x80) {
      ++pos;
      return kReplacementChar;
    }
    cp = (cp << 6) | (bi & 0x3F);
  }
  pos += static_cast<std::size_t>(len);
  return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::vector<char32_t> decode(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t pos = 0;
  while (pos < s.size()) out.push_back(next_codepoint(s, pos));
  return out;
}

inline bool is_space(char32_t cp) {
  switch (cp) {
    case U' ':
    case U'\t':
    case U'\n':
    case U'\r':
    case 0x0B:
    case 0x0C:
    case 0x00A0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

inline char32_t to_lower(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
  // Latin-1 Supplement, excluding the multiplication sign.
  if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 0x20;
  if (cp == 0x0130) return U'i';  // dotted capital I, simple mapping
  if (cp == 0x0178) return 0x00FF;
  // Latin Extended-A pairs alternate between even/odd case partners.
  if (cp >= 0x0100 && cp <= 0x0137) return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp >= 0x0139 && cp <= 0x0148) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp >= 0x014A && cp <= 0x0177) return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp >= 0x0179 && cp <= 0x017E) return (cp % 2 == 1) ? cp + 1 : cp;
  return cp;
}

namespace detail {

struct Composition {
  std::uint32_t key;  // (combining mark << 16) | base letter
  std::uint16_t composed;
};

// Canonical (base, combining mark) -> precomposed pairs for ASCII letters,
// generated from the UCD for targets within Latin-1 / Latin Extended-A.
inline constexpr std::array<Composition, 161> kCompositions = {{
    {0x3000041, 0x00C0}, {0x3000045, 0x00C8}, {0x3000049, 0x00CC}, {0x300004F, 0x00D2}, {0x3000055, 0x00D9}, {0x3000061, 0x00E0},
    {0x3000065, 0x00E8}, {0x3000069, 0x00EC}, {0x300006F, 0x00F2}, {0x3000075, 0x00F9}, {0x3010041, 0x00C1}, {0x3010043, 0x0106},
    {0x3010045, 0x00C9}, {0x3010049, 0x00CD}, {0x301004C, 0x0139}, {0x301004E, 0x0143}, {0x301004F, 0x00D3}, {0x3010052, 0x0154},
    {0x3010053, 0x015A}, {0x3010055, 0x00DA}, {0x3010059, 0x00DD}, {0x301005A, 0x0179}, {0x3010061, 0x00E1}, {0x3010063, 0x0107},
    {0x3010065, 0x00E9}, {0x3010069, 0x00ED}, {0x301006C, 0x013A}, {0x301006E, 0x0144}, {0x301006F, 0x00F3}, {0x3010072, 0x0155},
    {0x3010073, 0x015B}, {0x3010075, 0x00FA}, {0x3010079, 0x00FD}, {0x301007A, 0x017A}, {0x3020041, 0x00C2}, {0x3020043, 0x0108},
    {0x3020045, 0x00CA}, {0x3020047, 0x011C}, {0x3020048, 0x0124}, {0x3020049, 0x00CE}, {0x302004A, 0x0134}, {0x302004F, 0x00D4},
    {0x3020053, 0x015C}, {0x3020055, 0x00DB}, {0x3020057, 0x0174}, {0x3020059, 0x0176}, {0x3020061, 0x00E2}, {0x3020063, 0x0109},
    {0x3020065, 0x00EA}, {0x3020067, 0x011D}, {0x3020068, 0x0125}, {0x3020069, 0x00EE}, {0x302006A, 0x0135}, {0x302006F, 0x00F4},
    {0x3020073, 0x015D}, {0x3020075, 0x00FB}, {0x3020077, 0x0175}, {0x3020079, 0x0177}, {0x3030041, 0x00C3}, {0x3030049, 0x0128},
    {0x303004E, 0x00D1}, {0x303004F, 0x00D5}, {0x3030055, 0x0168}, {0x3030061, 0x00E3}, {0x3030069, 0x0129}, {0x303006E, 0x00F1},
    {0x303006F, 0x00F5}, {0x3030075, 0x0169}, {0x3040041, 0x0100}, {0x3040045, 0x0112}, {0x3040049, 0x012A}, {0x304004F, 0x014C},
    {0x3040055, 0x016A}, {0x3040061, 0x0101}, {0x3040065, 0x0113}, {0x3040069, 0x012B}, {0x304006F, 0x014D}, {0x3040075, 0x016B},
    {0x3060041, 0x0102}, {0x3060045, 0x0114}, {0x3060047, 0x011E}, {0x3060049, 0x012C}, {0x306004F, 0x014E}, {0x3060055, 0x016C},
    {0x3060061, 0x0103}, {0x3060065, 0x0115}, {0x3060067, 0x011F}, {0x3060069, 0x012D}, {0x306006F, 0x014F}, {0x3060075, 0x016D},
    {0x3070043, 0x010A}, {0x3070045, 0x0116}, {0x3070047, 0x0120}, {0x3070049, 0x0130}, {0x307005A, 0x017B}, {0x3070063, 0x010B},
    {0x3070065, 0x0117}, {0x3070067, 0x0121}, {0x307007A, 0x017C}, {0x3080041, 0x00C4}, {0x3080045, 0x00CB}, {0x3080049, 0x00CF},
    {0x308004F, 0x00D6}, {0x3080055, 0x00DC}, {0x3080059, 0x0178}, {0x3080061, 0x00E4}, {0x3080065, 0x00EB}, {0x3080069, 0x00EF},
    {0x308006F, 0x00F6}, {0x3080075, 0x00FC}, {0x3080079, 0x00FF}, {0x30A0041, 0x00C5}, {0x30A0055, 0x016E}, {0x30A0061, 0x00E5},
    {0x30A0075, 0x016F}, {0x30B004F, 0x0150}, {0x30B0055, 0x0170}, {0x30B006F, 0x0151}, {0x30B0075, 0x0171}, {0x30C0043, 0x010C},
    {0x30C0044, 0x010E}, {0x30C0045, 0x011A}, {0x30C004C, 0x013D}, {0x30C004E, 0x0147}, {0x30C0052, 0x0158}, {0x30C0053, 0x0160},
    {0x30C0054, 0x0164}, {0x30C005A, 0x017D}, {0x30C0063, 0x010D}, {0x30C0064, 0x010F}, {0x30C0065, 0x011B}, {0x30C006C, 0x013E},
    {0x30C006E, 0x0148}, {0x30C0072, 0x0159}, {0x30C0073, 0x0161}, {0x30C0074, 0x0165}, {0x30C007A, 0x017E}, {0x3270043, 0x00C7},
    {0x3270047, 0x0122}, {0x327004B, 0x0136}, {0x327004C, 0x013B}, {0x327004E, 0x0145}, {0x3270052, 0x0156}, {0x3270053, 0x015E},
    {0x3270054, 0x0162}, {0x3270063, 0x00E7}, {0x3270067, 0x0123}, {0x327006B, 0x0137}, {0x327006C, 0x013C}, {0x327006E, 0x0146},
    {0x3270072, 0x0157}, {0x3270073, 0x015F}, {0x3270074, 0x0163}, {0x3280041, 0x0104}, {0x3280045, 0x0118}, {0x3280049, 0x012E},
    {0x3280055, 0x0172}, {0x3280061, 0x0105}, {0x3280065, 0x0119}, {0x3280069, 0x012F}, {0x3280075, 0x0173},
}};

inline char32_t compose(char32_t base, char32_t mark) {
  const std::uint32_t key =
      (static_cast<std::uint32_t>(mark) << 16) | static_cast<std::uint32_t>(base);
  const auto it = std::lower_bound(
      kCompositions.begin(), kCompositions.end(), key,
      [](const Composition& c, std::uint32_t k) { return c.key < k; });
  if (it != kCompositions.end() && it->key == key) return it->composed;
  return 0;
}

inline bool is_combining_mark(char32_t cp) { return cp >= 0x0300 && cp <= 0x036F; }

}  // namespace detail

// Canonically composes combining-mark sequences (where a precomposed Latin
// character exists), then lowercases. The string-feature normal form.
inline std::vector<char32_t> normalize_codepoints(std::string_view s) {
  std::vector<char32_t> raw = decode(s);
  std::vector<char32_t> out;
  out.reserve(raw.size());
  for (char32_t cp : raw) {
    if (!out.empty() && detail::is_combining_mark(cp)) {
      if (const char32_t composed = detail::compose(out.back(), cp)) {
        out.back() = composed;
        continue;
      }
    }
    out.push_back(cp);
  }
  for (char32_t& cp : out) cp = to_lower(cp);
  return out;
}

inline std::string normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : normalize_codepoints(s)) append_utf8(out, cp);
  return out;
}

// Byte range of one whitespace-delimited token.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
};

inline std::vector<TokenSpan> token_spans(std::string_view s) {
  std::vector<TokenSpan> out;
  std::size_t pos = 0;
  bool in_token = false;
  std::size_t token_begin = 0;
  while (pos < s.size()) {
    const std::size_t cp_begin = pos;
    const char32_t cp = next_codepoint(s, pos);
    if (is_space(cp)) {
      if (in_token) {
        out.push_back({token_begin, cp_begin});
        in_token = false;
      }
    } else if (!in_token) {
      token_begin = cp_begin;
      in_token = true;
    }
  }
  if (in_token) out.push_back({token_begin, s.size()});
  return out;
}

inline std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  for (const TokenSpan& t : token_spans(s)) {
    out.emplace_back(s.substr(t.begin, t.end - t.begin));
  }
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t begin = 0;
  std::size_t pos = 0;
  std::size_t end = 0;
  bool seen_token = false;
  while (pos < s.size()) {
    const std::size_t cp_begin = pos;
    const char32_t cp = next_codepoint(s, pos);
    if (!is_space(cp)) {
      if (!seen_token) begin = cp_begin;
      seen_token = true;
      end = pos;
    }
  }
  if (!seen_token) return {};
  return std::string(s.substr(begin, end - begin));
}

}  // namespace delicate::text
