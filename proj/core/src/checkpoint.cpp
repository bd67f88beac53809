#include "gvps/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "gvps/error.hpp"

namespace gvps {

namespace {

constexpr const char* kModule = "policy";
constexpr char kMagic[8] = {'G', 'V', 'P', 'S', 'C', 'K', 'P', '1'};

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xffu));
  }
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }

  std::string get_string(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw InputError(kModule, "truncated checkpoint");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const PolicyParams& params, const std::string& embedded_config) {
  const PolicyShape& s = params.shape();
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.vocab_size));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.embed_dim));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.hidden_dim));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.window));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.special.bos));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.special.eos));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.special.answer_delim));
  put_le<std::uint64_t>(out, params.seed());
  const auto layout = params.layout();
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(layout.size()));
  for (const auto& slice : layout) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(slice.name.size()));
    out += slice.name;
    put_le<std::uint64_t>(out, slice.offset);
    put_le<std::uint64_t>(out, slice.size);
  }
  put_le<std::uint64_t>(out, embedded_config.size());
  out += embedded_config;
  put_le<std::uint64_t>(out, params.size());
  for (double v : params.theta()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.get_string(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw InputError(kModule, "not a policy checkpoint (bad magic)");
  }
  PolicyShape s;
  s.vocab_size = static_cast<int>(r.get<std::uint32_t>());
  s.embed_dim = static_cast<int>(r.get<std::uint32_t>());
  s.hidden_dim = static_cast<int>(r.get<std::uint32_t>());
  s.window = static_cast<int>(r.get<std::uint32_t>());
  s.special.bos = static_cast<TokenId>(r.get<std::uint32_t>());
  s.special.eos = static_cast<TokenId>(r.get<std::uint32_t>());
  s.special.answer_delim = static_cast<TokenId>(r.get<std::uint32_t>());
  const auto seed = r.get<std::uint64_t>();
  PolicyParams params(s, seed);

  const auto expected = params.layout();
  const auto n_slices = r.get<std::uint32_t>();
  if (n_slices != expected.size()) throw InputError(kModule, "checkpoint layout does not match shape");
  for (const auto& slice : expected) {
    const auto name = r.get_string(r.get<std::uint32_t>());
    const auto offset = r.get<std::uint64_t>();
    const auto size = r.get<std::uint64_t>();
    if (name != slice.name || offset != slice.offset || size != slice.size) {
      throw InputError(kModule, "checkpoint layout slice '" + name + "' does not match shape");
    }
  }
  Checkpoint ck;
  ck.embedded_config = r.get_string(r.get<std::uint64_t>());
  const auto n = r.get<std::uint64_t>();
  if (n != params.size()) throw InputError(kModule, "checkpoint parameter count does not match shape");
  for (double& v : params.theta()) v = std::bit_cast<double>(r.get<std::uint64_t>());
  if (!r.at_end()) throw InputError(kModule, "trailing bytes after checkpoint");
  ck.params = std::move(params);
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params,
                     const std::string& embedded_config) {
  const std::string bytes = encode_checkpoint(params, embedded_config);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError(kModule, "cannot write checkpoint " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError(kModule, "failed writing checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(kModule, "cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace gvps
