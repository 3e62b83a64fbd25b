#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "klrl/sequence.hpp"
#include "klrl/vocab.hpp"

namespace klrl::tasks {

enum class Family { modadd, reverse, parity };
enum class Split { train, val, test };

// A synthetic verifiable task. The vocabulary is shared with the policies
// trained on it and reserves an answer delimiter and a neutral filler token
// besides eos/pad.
struct TaskSpec {
  Family family = Family::parity;
  int modulus = 0;  // modadd
  int len_min = 0;  // reverse / parity: prompt length range
  int len_max = 0;
  Vocab vocab;
  int ans_id = -1;
  int filler_id = -1;
  int plus_id = -1;  // modadd only
};

TaskSpec make_modadd(int modulus);
TaskSpec make_reverse(int len_min, int len_max);
TaskSpec make_parity(int len_min, int len_max);

struct Instance {
  TokenSeq prompt;
  std::vector<int> gold;
};

struct Corpus {
  std::vector<std::pair<TokenSeq, TokenSeq>> pairs;  // (prompt, demonstration)
  double noise_rate = 0.0;
  std::map<int, double> verbosity_profile;  // filler length -> weight
};

// Deterministic instance stream for one split. Prompts are assigned to
// splits by key hashing, so different splits never share a prompt;
// instances within a split may repeat when the underlying space is small.
std::vector<Instance> generate_instances(const TaskSpec& spec, int n, Split split, std::uint64_t seed);

// Binary task reward: truncates at eos, extracts the span after the first
// answer delimiter, exact-matches against gold. Total; malformed -> 0.
double verify(const TokenSeq& response, const Instance& instance, const TaskSpec& spec);

// Shortest well-formed response for an answer: [filler*f, <ans>, answer..., <eos>].
TokenSeq render_demonstration(const TaskSpec& spec, const std::vector<int>& answer, int filler_len);

// Noisy demonstration corpus over train-split prompts. Wrong pairs carry a
// uniformly wrong answer, except a fraction empty_weight of them that are a
// bare [eos] (null demonstrations; these give the base model immediate-eos
// mass, the collapse-prone shape).
Corpus generate_pretrain_corpus(const TaskSpec& spec, int n, double noise_rate,
                                const std::map<int, double>& verbosity_profile,
                                double empty_weight, const LengthMode& length, std::uint64_t seed);

// JSON-lines IO: {"prompt":[ids],"response":[ids]} / {"prompt":[ids],"gold":[ids]}
void write_corpus_jsonl(const Corpus& corpus, const std::string& path);
std::vector<std::pair<TokenSeq, TokenSeq>> read_corpus_jsonl(const std::string& path);
void write_instances_jsonl(const std::vector<Instance>& instances, const std::string& path);
std::vector<Instance> read_instances_jsonl(const std::string& path);

const char* family_name(Family f);
Family family_from_name(const std::string& name);
const char* split_name(Split s);
Split split_from_name(const std::string& name);

}  // namespace klrl::tasks
