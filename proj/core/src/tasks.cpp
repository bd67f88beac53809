#include "gvps/tasks.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include <json.hpp>

#include "gvps/error.hpp"
#include "gvps/random.hpp"

namespace gvps {

namespace {

constexpr const char* kModule = "tasks";

struct Chain {
  TaskKind kind;
  int modulus = 0;
  std::vector<int> values;
};

char op_symbol(TaskKind kind) { return kind == TaskKind::compare_chain ? '>' : '+'; }

int combine(const Chain& c, int a, int b) {
  switch (c.kind) {
    case TaskKind::chain_add: return a + b;
    case TaskKind::modular_chain: return (a + b) % c.modulus;
    case TaskKind::compare_chain: return std::max(a, b);
  }
  return 0;
}

std::string expression(const Chain& c, std::span<const int> values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += op_symbol(c.kind);
    s += std::to_string(values[i]);
  }
  if (c.kind == TaskKind::modular_chain) s += "%" + std::to_string(c.modulus);
  return s;
}

// Operand lists after each reduction; states[0] is the prompt's list.
std::vector<std::vector<int>> reduction_states(const Chain& c) {
  std::vector<std::vector<int>> states{c.values};
  while (states.back().size() > 1) {
    const auto& cur = states.back();
    std::vector<int> next{combine(c, cur[0], cur[1])};
    next.insert(next.end(), cur.begin() + 2, cur.end());
    states.push_back(std::move(next));
  }
  return states;
}

Chain chain_for(const Problem& p) {
  // Recover operands from the prompt text: ^a<op>b<op>...[%m]=?
  const Vocab& vocab = Vocab::arithmetic();
  std::string text = vocab.decode(p.prompt_ids);
  Chain c{p.kind, 0, {}};
  text = text.substr(1, text.size() - 3);
  if (p.kind == TaskKind::modular_chain) {
    const auto pct = text.find('%');
    c.modulus = std::stoi(text.substr(pct + 1));
    text = text.substr(0, pct);
  }
  const char op = op_symbol(p.kind);
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find(op, start);
    c.values.push_back(std::stoi(text.substr(start, end - start)));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return c;
}

std::string tokens_to_text(std::span<const TokenId> ids) { return Vocab::arithmetic().decode(ids); }
TokenSeq text_to_tokens(const std::string& s) { return Vocab::arithmetic().encode(s); }

}  // namespace

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::chain_add: return "chain_add";
    case TaskKind::modular_chain: return "modular_chain";
    case TaskKind::compare_chain: return "compare_chain";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "chain_add") return TaskKind::chain_add;
  if (name == "modular_chain") return TaskKind::modular_chain;
  if (name == "compare_chain") return TaskKind::compare_chain;
  throw InputError(kModule, "unknown task kind '" + std::string(name) + "'");
}

TokenSeq Problem::gold_rationale() const {
  TokenSeq out;
  for (const auto& s : gold_steps) out.insert(out.end(), s.begin(), s.end());
  return out;
}

TokenSeq Problem::gold_response() const {
  TokenSeq out = gold_rationale();
  out.push_back(Vocab::arithmetic().answer_delim());
  out.insert(out.end(), gold_answer_ids.begin(), gold_answer_ids.end());
  return out;
}

Problem generate_problem(TaskKind kind, int difficulty, std::uint64_t rng_seed) {
  if (difficulty < kMinDifficulty || difficulty > kMaxDifficulty) {
    throw InputError(kModule, "difficulty must be in [2, 8], got " + std::to_string(difficulty));
  }
  Rng rng(derive_seed({rng_seed, static_cast<std::uint64_t>(kind), static_cast<std::uint64_t>(difficulty)}));
  Chain c{kind, 0, {}};
  if (kind == TaskKind::modular_chain) c.modulus = uniform_int(rng, 3, 9);
  const int lo = kind == TaskKind::compare_chain ? 0 : 1;
  for (int i = 0; i <= difficulty; ++i) c.values.push_back(uniform_int(rng, lo, 9));

  const auto states = reduction_states(c);
  Problem p;
  p.id = rng_seed;
  p.kind = kind;
  p.difficulty = difficulty;
  p.prompt_ids = text_to_tokens("^" + expression(c, c.values) + "=?");
  for (std::size_t k = 1; k < states.size(); ++k) {
    p.gold_steps.push_back(text_to_tokens(expression(c, states[k]) + ";"));
  }
  p.gold_answer_ids = text_to_tokens(std::to_string(states.back()[0]) + "$");
  return p;
}

std::optional<std::size_t> last_answer_delim(std::span<const TokenId> response) {
  const TokenId delim = Vocab::arithmetic().answer_delim();
  for (std::size_t i = response.size(); i-- > 0;) {
    if (response[i] == delim) return i;
  }
  return std::nullopt;
}

int verify(const Problem& problem, std::span<const TokenId> response) {
  const auto pos = last_answer_delim(response);
  if (!pos) return 0;
  const auto answer = response.subspan(*pos + 1);
  return std::equal(answer.begin(), answer.end(), problem.gold_answer_ids.begin(), problem.gold_answer_ids.end())
             ? 1
             : 0;
}

TokenSeq corrupt_step(const Problem& problem, std::size_t index, std::uint64_t rng_seed) {
  if (index >= problem.gold_steps.size()) throw InputError(kModule, "step index out of range");
  const Chain c = chain_for(problem);
  const auto states = reduction_states(c);
  const auto& before = states[index];
  std::vector<int> after = states[index + 1];
  const int gold = after[0];
  Rng rng(derive_seed({rng_seed, index, 0xc0}));

  int wrong = gold;
  if (before.size() > 2 && uniform01(rng) < 0.5) {
    // reduce with the operand after next; the tail is left as if the right one was consumed
    wrong = combine(c, before[0], before[2]);
  }
  while (wrong == gold) {
    if (c.kind == TaskKind::chain_add) {
      wrong = gold + uniform_int(rng, -3, 3);
      if (wrong < 0) wrong = gold;
    } else if (c.kind == TaskKind::modular_chain) {
      wrong = uniform_int(rng, 0, c.modulus - 1);
    } else {
      wrong = uniform_int(rng, 0, 9);
    }
  }
  after[0] = wrong;
  return text_to_tokens(expression(c, after) + ";");
}

LabeledCorpus generate_labeled_corpus(int n_problems, double corruption_rate, std::uint64_t rng_seed,
                                      const CorpusOptions& options) {
  if (n_problems < 1) throw InputError(kModule, "n_problems must be at least 1");
  if (!(corruption_rate >= 0.0 && corruption_rate < 1.0)) {
    throw InputError(kModule, "corruption_rate must be in [0, 1)");
  }
  LabeledCorpus corpus;
  Rng rng(derive_seed({rng_seed, 0xc0b0}));
  for (int i = 0; i < n_problems; ++i) {
    Problem p = generate_problem(options.kind, options.difficulty, derive_seed({rng_seed, static_cast<std::uint64_t>(i)}));
    const std::size_t pi = corpus.problems.size();
    TokenSeq prefix;
    for (std::size_t k = 0; k < p.gold_steps.size(); ++k) {
      corpus.steps.push_back(LabeledStep{pi, p.id, prefix, p.gold_steps[k], +1});
      if (uniform01(rng) < corruption_rate) {
        corpus.steps.push_back(LabeledStep{pi, p.id, prefix, corrupt_step(p, k, rng()), -1});
      }
      prefix.insert(prefix.end(), p.gold_steps[k].begin(), p.gold_steps[k].end());
    }
    corpus.problems.push_back(std::move(p));
  }
  return corpus;
}

void write_problems_jsonl(std::ostream& out, std::span<const Problem> problems) {
  for (const auto& p : problems) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : p.gold_steps) steps.push_back(tokens_to_text(s));
    nlohmann::json j = {{"problem_id", p.id},
                        {"kind", std::string(to_string(p.kind))},
                        {"difficulty", p.difficulty},
                        {"prompt", tokens_to_text(p.prompt_ids)},
                        {"answer", tokens_to_text(p.gold_answer_ids)},
                        {"steps", steps}};
    out << j.dump() << '\n';
  }
}

void write_corpus_jsonl(std::ostream& out, const LabeledCorpus& corpus) {
  for (const auto& s : corpus.steps) {
    nlohmann::json j = {{"problem_id", s.problem_id},
                        {"prefix", tokens_to_text(s.prefix_ids)},
                        {"step", tokens_to_text(s.step_ids)},
                        {"label", s.label}};
    out << j.dump() << '\n';
  }
}

std::vector<Problem> read_problems_jsonl(std::istream& in) {
  std::vector<Problem> problems;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Problem p;
      p.id = j.at("problem_id").get<std::uint64_t>();
      p.kind = parse_task_kind(j.at("kind").get<std::string>());
      p.difficulty = j.at("difficulty").get<int>();
      p.prompt_ids = text_to_tokens(j.at("prompt").get<std::string>());
      p.gold_answer_ids = text_to_tokens(j.at("answer").get<std::string>());
      for (const auto& s : j.at("steps")) p.gold_steps.push_back(text_to_tokens(s.get<std::string>()));
      problems.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(kModule, "problems line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return problems;
}

LabeledCorpus read_corpus_jsonl(std::istream& corpus_in, std::istream& problems_in) {
  LabeledCorpus corpus;
  corpus.problems = read_problems_jsonl(problems_in);
  std::map<std::uint64_t, std::size_t> index;
  for (std::size_t i = 0; i < corpus.problems.size(); ++i) index[corpus.problems[i].id] = i;
  std::string line;
  int lineno = 0;
  while (std::getline(corpus_in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LabeledStep s;
      s.problem_id = j.at("problem_id").get<std::uint64_t>();
      const auto it = index.find(s.problem_id);
      if (it == index.end()) {
        throw InputError(kModule, "corpus line " + std::to_string(lineno) + " references unknown problem");
      }
      s.problem_index = it->second;
      s.prefix_ids = text_to_tokens(j.at("prefix").get<std::string>());
      s.step_ids = text_to_tokens(j.at("step").get<std::string>());
      s.label = j.at("label").get<int>();
      if (s.label != 1 && s.label != -1) throw InputError(kModule, "labels must be +1 or -1");
      corpus.steps.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(kModule, "corpus line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return corpus;
}

}  // namespace gvps
