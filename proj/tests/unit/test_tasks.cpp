#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "gvps/error.hpp"
#include "gvps/random.hpp"
#include "gvps/tasks.hpp"
#include "oracle.hpp"

using namespace gvps;

namespace {

const Vocab& V() { return Vocab::arithmetic(); }

std::string text(const TokenSeq& ids) { return V().decode(ids); }

}  // namespace

TEST(Vocab, ArithmeticAlphabet) {
  EXPECT_EQ(V().size(), 19);
  EXPECT_EQ(V().symbol(V().bos()), "^");
  EXPECT_EQ(V().symbol(V().eos()), "$");
  EXPECT_EQ(V().symbol(V().answer_delim()), "#");
  const std::string s = "^12+7;19;#19$";
  EXPECT_EQ(V().decode(V().encode(s)), s);
  EXPECT_THROW(V().encode("12*3"), InputError);
}

TEST(Vocab, RejectsInvalidSpecials) {
  EXPECT_THROW(Vocab({"a", "b", "c"}, SpecialTokens{}), InputError);
  EXPECT_THROW(Vocab({"a", "b", "c", "d"}, SpecialTokens{0, 0, 2}), InputError);
  EXPECT_THROW(Vocab({"a", "b", "c", "d"}, SpecialTokens{0, 1, 7}), InputError);
}

TEST(Tasks, ChainAddExample) {
  // Build the worked example by hand and check the generator's step format on it.
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Problem p = generate_problem(TaskKind::chain_add, 3, seed);
    ASSERT_EQ(p.gold_steps.size(), 3u);
    const std::string prompt = text(p.prompt_ids);
    ASSERT_EQ(prompt.front(), '^');
    ASSERT_EQ(prompt.substr(prompt.size() - 2), "=?");
    const long long answer = oracle::evaluate_prompt(prompt);
    EXPECT_EQ(text(p.gold_answer_ids), std::to_string(answer) + "$");
    // Every step is itself an expression with the same value, one operand shorter.
    std::size_t operands = std::count(prompt.begin(), prompt.end(), '+') + 1;
    for (const auto& step : p.gold_steps) {
      std::string s = text(step);
      ASSERT_EQ(s.back(), ';');
      s.pop_back();
      --operands;
      EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '+') + 1), operands);
      EXPECT_EQ(oracle::evaluate_prompt("^" + s + "=?"), answer);
    }
    EXPECT_EQ(operands, 1u);
  }
}

TEST(Tasks, AllKindsAgreeWithArithmeticOracle) {
  for (auto kind : {TaskKind::chain_add, TaskKind::modular_chain, TaskKind::compare_chain}) {
    for (int difficulty = kMinDifficulty; difficulty <= kMaxDifficulty; ++difficulty) {
      for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Problem p = generate_problem(kind, difficulty, derive_seed({seed, std::uint64_t(difficulty)}));
        EXPECT_EQ(p.difficulty, difficulty);
        EXPECT_EQ(p.gold_steps.size(), static_cast<std::size_t>(difficulty));
        const long long answer = oracle::evaluate_prompt(text(p.prompt_ids));
        EXPECT_EQ(text(p.gold_answer_ids), std::to_string(answer) + "$") << text(p.prompt_ids);
        EXPECT_EQ(verify(p, p.gold_response()), 1);
      }
    }
  }
}

TEST(Tasks, GenerationIsDeterministic) {
  const auto a = generate_problem(TaskKind::modular_chain, 5, 42);
  const auto b = generate_problem(TaskKind::modular_chain, 5, 42);
  EXPECT_EQ(a.prompt_ids, b.prompt_ids);
  EXPECT_EQ(a.gold_steps, b.gold_steps);
  EXPECT_EQ(a.id, 42u);
}

TEST(Tasks, RejectsOutOfRangeDifficulty) {
  EXPECT_THROW(generate_problem(TaskKind::chain_add, 1, 0), InputError);
  EXPECT_THROW(generate_problem(TaskKind::chain_add, 9, 0), InputError);
  EXPECT_THROW(parse_task_kind("chain_mul"), InputError);
}

TEST(Tasks, VerifyUsesTheTailAfterTheLastDelimiter) {
  const Problem p = generate_problem(TaskKind::chain_add, 2, 3);
  const std::string ans = text(p.gold_answer_ids);  // e.g. "14$"
  const std::string wrong = std::to_string(std::stoi(ans) + 1) + "$";
  auto resp = [&](const std::string& s) { return V().encode(s); };
  EXPECT_EQ(verify(p, resp("#" + ans)), 1);
  EXPECT_EQ(verify(p, resp("1+2;#" + wrong + "#" + ans)), 1);
  EXPECT_EQ(verify(p, resp("#" + ans + "#" + wrong)), 0);
  EXPECT_EQ(verify(p, resp(ans)), 0);                                 // no delimiter
  EXPECT_EQ(verify(p, resp("#" + ans.substr(0, ans.size() - 1))), 0);  // missing eos
  EXPECT_EQ(verify(p, resp("#" + ans + "3")), 0);                     // trailing token
  EXPECT_EQ(verify(p, TokenSeq{}), 0);
}

TEST(Tasks, CorpusLabelsAreExact) {
  const LabeledCorpus c = generate_labeled_corpus(300, 0.5, 17);
  ASSERT_EQ(c.problems.size(), 300u);
  // every gold step, plus a corrupted alternative with probability 0.5
  int negatives = 0;
  for (const auto& s : c.steps) {
    const Problem& p = c.problems[s.problem_index];
    EXPECT_EQ(p.id, s.problem_id);
    // The prefix is the gold rationale up to this step.
    std::size_t k = 0;
    TokenSeq prefix;
    while (prefix.size() < s.prefix_ids.size()) {
      prefix.insert(prefix.end(), p.gold_steps[k].begin(), p.gold_steps[k].end());
      ++k;
    }
    ASSERT_EQ(prefix, s.prefix_ids);
    ASSERT_LT(k, p.gold_steps.size());
    // Label +1 exactly when the step equals the gold step; corrupted steps
    // change the value of the remaining expression.
    std::string step = text(s.step_ids);
    ASSERT_EQ(step.back(), ';');
    step.pop_back();
    const long long value = oracle::evaluate_prompt("^" + step + "=?");
    const long long answer = std::stoll(text(p.gold_answer_ids));
    if (s.label == 1) {
      EXPECT_EQ(s.step_ids, p.gold_steps[k]);
    } else {
      ++negatives;
      EXPECT_EQ(s.label, -1);
      EXPECT_NE(s.step_ids, p.gold_steps[k]);
      EXPECT_NE(value, answer) << step;
    }
  }
  EXPECT_EQ(c.steps.size(), 900u + static_cast<std::size_t>(negatives));
  EXPECT_GT(negatives, 380);
  EXPECT_LT(negatives, 520);
}

TEST(Tasks, ZeroCorruptionGivesOnlyGoldSteps) {
  const auto c = generate_labeled_corpus(20, 0.0, 3);
  for (const auto& s : c.steps) EXPECT_EQ(s.label, 1);
  EXPECT_THROW(generate_labeled_corpus(20, 1.0, 3), InputError);
  EXPECT_THROW(generate_labeled_corpus(0, 0.5, 3), InputError);
}

TEST(Tasks, CorruptedFirstOperandDiffers) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto p = generate_problem(TaskKind::chain_add, 4, seed);
    for (std::size_t i = 0; i < p.gold_steps.size(); ++i) {
      const std::string gold = text(p.gold_steps[i]);
      const std::string bad = text(corrupt_step(p, i, seed * 7 + i));
      EXPECT_NE(gold.substr(0, gold.find_first_of("+;")), bad.substr(0, bad.find_first_of("+;")));
    }
  }
}

TEST(Tasks, JsonlRoundTrip) {
  const auto c = generate_labeled_corpus(25, 0.4, 5, CorpusOptions{TaskKind::modular_chain, 4});
  std::stringstream corpus_out, problems_out;
  write_corpus_jsonl(corpus_out, c);
  write_problems_jsonl(problems_out, c.problems);
  const auto back = read_corpus_jsonl(corpus_out, problems_out);
  ASSERT_EQ(back.problems.size(), c.problems.size());
  ASSERT_EQ(back.steps.size(), c.steps.size());
  for (std::size_t i = 0; i < c.problems.size(); ++i) {
    EXPECT_EQ(back.problems[i].prompt_ids, c.problems[i].prompt_ids);
    EXPECT_EQ(back.problems[i].gold_answer_ids, c.problems[i].gold_answer_ids);
    EXPECT_EQ(back.problems[i].gold_steps, c.problems[i].gold_steps);
  }
  for (std::size_t i = 0; i < c.steps.size(); ++i) {
    EXPECT_EQ(back.steps[i].problem_index, c.steps[i].problem_index);
    EXPECT_EQ(back.steps[i].prefix_ids, c.steps[i].prefix_ids);
    EXPECT_EQ(back.steps[i].step_ids, c.steps[i].step_ids);
    EXPECT_EQ(back.steps[i].label, c.steps[i].label);
  }
}

TEST(Tasks, MalformedJsonlIsAnInputError) {
  std::stringstream corpus("{\"problem_id\": 1, \"prefix\": \"\", \"step\": \"3;\", \"label\": 1}\n");
  std::stringstream problems("not json\n");
  EXPECT_THROW(read_corpus_jsonl(corpus, problems), InputError);
}
