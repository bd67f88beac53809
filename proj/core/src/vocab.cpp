#include "gvps/vocab.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "gvps/error.hpp"

namespace gvps {

Vocab::Vocab(std::vector<std::string> tokens, SpecialTokens special)
    : tokens_(std::move(tokens)), special_(special) {
  if (tokens_.size() < 4) {
    throw InputError("policy", "vocabulary needs at least 4 symbols");
  }
  std::set<std::string> seen(tokens_.begin(), tokens_.end());
  if (seen.size() != tokens_.size()) {
    throw InputError("policy", "vocabulary symbols must be distinct");
  }
  const TokenId ids[] = {special_.bos, special_.eos, special_.answer_delim};
  for (TokenId id : ids) {
    if (!contains(id)) {
      throw InputError("policy", "special token index out of range");
    }
  }
  if (special_.bos == special_.eos || special_.bos == special_.answer_delim ||
      special_.eos == special_.answer_delim) {
    throw InputError("policy", "special token indices must be distinct");
  }
}

const Vocab& Vocab::arithmetic() {
  static const Vocab vocab(
      {"^", "$", "#", ";", "0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "+", "=", "?", "%", ">"},
      SpecialTokens{0, 1, 2});
  return vocab;
}

Vocab Vocab::synthetic(int size) {
  std::vector<std::string> tokens;
  tokens.reserve(static_cast<std::size_t>(std::max(size, 0)));
  for (int i = 0; i < size; ++i) tokens.push_back("t" + std::to_string(i));
  return Vocab(std::move(tokens), SpecialTokens{0, 1, 2});
}

const std::string& Vocab::symbol(TokenId id) const {
  if (!contains(id)) throw InputError("policy", "token index " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

TokenId Vocab::id(std::string_view symbol) const {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i] == symbol) return static_cast<TokenId>(i);
  }
  throw InputError("policy", "unknown symbol '" + std::string(symbol) + "'");
}

TokenSeq Vocab::encode(std::string_view text) const {
  TokenSeq out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t best_len = 0;
    TokenId best = -1;
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      const auto& sym = tokens_[i];
      if (sym.size() > best_len && text.compare(pos, sym.size(), sym) == 0) {
        best_len = sym.size();
        best = static_cast<TokenId>(i);
      }
    }
    if (best < 0) {
      throw InputError("tasks", "cannot encode '" + std::string(text.substr(pos, 1)) + "'");
    }
    out.push_back(best);
    pos += best_len;
  }
  return out;
}

std::string Vocab::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) out += symbol(id);
  return out;
}

}  // namespace gvps
