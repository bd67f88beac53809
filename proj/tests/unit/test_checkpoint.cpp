#include <gtest/gtest.h>

#include <filesystem>

#include "gvps/checkpoint.hpp"
#include "gvps/error.hpp"

using namespace gvps;

namespace {

PolicyParams sample_params() {
  PolicyShape s;
  s.vocab_size = 19;
  s.embed_dim = 3;
  s.hidden_dim = 5;
  s.window = 4;
  return PolicyParams::random(s, 77, 0.3);
}

}  // namespace

TEST(Checkpoint, EncodeDecodeRoundTrip) {
  const auto p = sample_params();
  const auto ck = decode_checkpoint(encode_checkpoint(p, "alpha=0.5\n"));
  EXPECT_EQ(ck.params, p);
  EXPECT_EQ(ck.embedded_config, "alpha=0.5\n");
}

TEST(Checkpoint, FileRoundTrip) {
  const auto p = sample_params();
  const auto path = std::filesystem::temp_directory_path() / "gvps_checkpoint_test.ckpt";
  save_checkpoint(path, p);
  EXPECT_EQ(load_checkpoint(path).params, p);
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsCorruptInput) {
  const auto bytes = encode_checkpoint(sample_params());
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 1)), InputError);
  EXPECT_THROW(decode_checkpoint(bytes + "x"), InputError);
  EXPECT_THROW(decode_checkpoint("GVPSCKP0" + bytes.substr(8)), InputError);
  EXPECT_THROW(load_checkpoint("/nonexistent/policy.ckpt"), InputError);
}
