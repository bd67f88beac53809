#pragma once

#include <ostream>

namespace gvps {

// Entry point of the gvps tool. Returns the process exit code; diagnostics go
// to `err` as "error [module]: message".
//
//   train          run one config, write manifest, metrics, checkpoint
//   compare        paired multi-seed A/B of two configs
//   sweep          alpha or n grid
//   segment        dump entropies, cutpoints and boundaries of sampled rollouts
//   probe          dump C values and deltas of sampled rollouts
//   corpus         write a labeled step corpus and its problems
//   score-steps    precision/recall/F1 of dC signs against corpus labels
//   export-curves  metrics JSONL -> CSV
//
// The default output directory is $GVPS_OUT_DIR, else ./runs.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gvps
