#pragma once

#include <filesystem>
#include <istream>
#include <ostream>

namespace gvps {

// Metrics JSONL -> CSV with one row per metrics line:
//   step,train_accuracy,mean_reward,mean_response_len,grad_norm,mean_entropy,mean_abs_delta_c,probe_forwards
// Doubles carry 17 significant digits. Blank lines are skipped. Returns the
// number of data rows written.
std::size_t export_curves(std::istream& metrics_jsonl, std::ostream& csv);
std::size_t export_curves(const std::filesystem::path& metrics_jsonl, const std::filesystem::path& csv);

}  // namespace gvps
