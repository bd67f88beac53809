#pragma once

#include <filesystem>
#include <string>

#include "gvps/policy.hpp"

namespace gvps {

// Binary policy checkpoint:
//
//   "GVPSCKP1"                        8-byte magic
//   u32 vocab_size, embed_dim, hidden_dim, window
//   i32 bos, eos, answer_delim
//   u64 seed
//   u32 slice count, then per slice: u32 name length, name bytes, u64 offset, u64 size
//   u64 embedded text length, text bytes   (trainer stores its config here)
//   u64 parameter count, then little-endian IEEE-754 doubles
//
// All integers are little-endian.
struct Checkpoint {
  PolicyParams params;
  std::string embedded_config;
};

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params,
                     const std::string& embedded_config = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const PolicyParams& params, const std::string& embedded_config = {});
Checkpoint decode_checkpoint(const std::string& bytes);

}  // namespace gvps
