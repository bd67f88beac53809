#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gvps {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

struct SpecialTokens {
  TokenId bos = 0;
  TokenId eos = 1;
  TokenId answer_delim = 2;

  bool operator==(const SpecialTokens&) const = default;
};

// Ordered token alphabet. Symbols are arbitrary strings; the arithmetic
// alphabet uses single characters so sequences print compactly.
class Vocab {
 public:
  Vocab(std::vector<std::string> tokens, SpecialTokens special);

  // 19 symbols: ^ (bos) $ (eos) # (answer delimiter) ; (step separator),
  // digits, + = ? % >.
  static const Vocab& arithmetic();

  // Anonymous alphabet of the given size with bos=0, eos=1, answer_delim=2.
  static Vocab synthetic(int size);

  int size() const noexcept { return static_cast<int>(tokens_.size()); }
  const SpecialTokens& special() const noexcept { return special_; }
  TokenId bos() const noexcept { return special_.bos; }
  TokenId eos() const noexcept { return special_.eos; }
  TokenId answer_delim() const noexcept { return special_.answer_delim; }

  const std::string& symbol(TokenId id) const;
  TokenId id(std::string_view symbol) const;
  bool contains(TokenId id) const noexcept { return id >= 0 && id < size(); }

  // Greedy longest-match encoding over the symbol table.
  TokenSeq encode(std::string_view text) const;
  std::string decode(std::span<const TokenId> ids) const;

 private:
  std::vector<std::string> tokens_;
  SpecialTokens special_;
};

}  // namespace gvps
