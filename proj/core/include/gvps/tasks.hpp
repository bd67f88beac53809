#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gvps/vocab.hpp"

namespace gvps {

// Every task is a chain of binary reductions over a list of operands. Each
// rationale step rewrites the remaining expression with its first two operands
// replaced by their combination:
//
//   chain_add       ^3+5+2+4=?      8+2+4;  10+4;  14;      #14$
//   modular_chain   ^3+5+2+4%7=?    1+2+4%7;  3+4%7;  0%7;  #0$
//   compare_chain   ^3>5>2>4=?      5>2>4;  5>4;  5;        #5$
//
// `difficulty` is the number of reductions, so there are difficulty+1 operands.
enum class TaskKind { chain_add, modular_chain, compare_chain };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view name);

inline constexpr int kMinDifficulty = 2;
inline constexpr int kMaxDifficulty = 8;

struct Problem {
  std::uint64_t id = 0;
  TaskKind kind = TaskKind::chain_add;
  int difficulty = 0;
  TokenSeq prompt_ids;             // begins with bos
  TokenSeq gold_answer_ids;        // digits then eos
  std::vector<TokenSeq> gold_steps;

  TokenSeq gold_rationale() const;
  // rationale + answer delimiter + gold answer
  TokenSeq gold_response() const;
};

Problem generate_problem(TaskKind kind, int difficulty, std::uint64_t rng_seed);

// Index of the last answer delimiter in `response`, if any.
std::optional<std::size_t> last_answer_delim(std::span<const TokenId> response);

// 1 iff the tokens after the last answer delimiter are exactly the gold answer
// (including its eos). Malformed responses score 0.
int verify(const Problem& problem, std::span<const TokenId> response);

struct LabeledStep {
  std::size_t problem_index = 0;  // into LabeledCorpus::problems
  std::uint64_t problem_id = 0;
  TokenSeq prefix_ids;            // gold rationale steps before this one
  TokenSeq step_ids;
  int label = 1;                  // +1 gold step, -1 corrupted
};

struct LabeledCorpus {
  std::vector<Problem> problems;
  std::vector<LabeledStep> steps;
};

struct CorpusOptions {
  TaskKind kind = TaskKind::chain_add;
  int difficulty = 3;
};

LabeledCorpus generate_labeled_corpus(int n_problems, double corruption_rate, std::uint64_t rng_seed,
                                      const CorpusOptions& options = {});

// Corrupted variant of gold step `index` of `problem`: either the reduced value
// is perturbed or the reduction uses the wrong operand. The first operand of
// the returned step always differs from the gold one.
TokenSeq corrupt_step(const Problem& problem, std::size_t index, std::uint64_t rng_seed);

// JSONL dumps. Corpus lines: {problem_id, prefix, step, label}; problem lines:
// {problem_id, kind, difficulty, prompt, answer, steps}. Token sequences are
// written as decoded strings of the arithmetic alphabet.
void write_problems_jsonl(std::ostream& out, std::span<const Problem> problems);
void write_corpus_jsonl(std::ostream& out, const LabeledCorpus& corpus);
std::vector<Problem> read_problems_jsonl(std::istream& in);
LabeledCorpus read_corpus_jsonl(std::istream& corpus_in, std::istream& problems_in);

}  // namespace gvps
