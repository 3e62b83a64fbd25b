#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "klrl/sequence.hpp"
#include "klrl/vocab.hpp"

namespace klrl {

enum class Backend { tabular, neural };

// Backend shape descriptor. Both backends condition on a fixed-width window
// of the last context_k tokens of prompt-plus-prefix, left-padded with pad.
struct Arch {
  Backend backend = Backend::tabular;
  int context_k = 1;
  int vocab_size = 0;
  int eos_id = -1;
  int pad_id = -1;
  int emb_dim = 0;     // neural only
  int hidden_dim = 0;  // neural only
};

Arch tabular_arch(int context_k, const Vocab& vocab);
Arch neural_arch(int context_k, int emb_dim, int hidden_dim, const Vocab& vocab);

std::size_t param_count(const Arch& arch);

// Autoregressive next-token model over a fixed context window. Immutable
// once constructed except through the trainer; all evaluation is pure.
struct Policy {
  Arch arch;
  std::vector<double> params;

  int vocab_size() const { return arch.vocab_size; }
  int eos_id() const { return arch.eos_id; }
  int pad_id() const { return arch.pad_id; }
};

using GradVector = std::vector<double>;

// Deterministic initialization. Tabular logits start at zero (uniform over
// non-pad tokens); neural weights are centered uniform with half-width
// 1/sqrt(fan-in).
Policy init_policy(const Arch& arch, std::uint64_t seed);

// Last context_k tokens of prompt followed by the first t response tokens,
// left-padded with pad_id.
std::vector<int> context_window(const Arch& arch, const TokenSeq& prompt,
                                const std::vector<int>& response_prefix, int t);

// Raw next-token logits for a window; the pad entry is -inf so padding is
// never sampleable.
void next_token_logits(const Policy& policy, const std::vector<int>& window, std::vector<double>& out);

// Softmax of the backend logits over the full vocabulary. Strictly positive
// on every non-pad token, exactly zero on pad, sums to 1 within 1e-12.
// `context` is the prompt followed by a response prefix.
std::vector<double> next_token_dist(const Policy& policy, const TokenSeq& context);
std::vector<double> next_token_dist(const Policy& policy, const TokenSeq& prompt,
                                    const std::vector<int>& response_prefix, int t);

// Log-probability of a response. Variable mode sums per-token terms up to
// and including the first eos (or all tokens when none); fixed mode sums
// over exactly l_max tokens with eos treated as ordinary.
double sequence_logprob(const Policy& policy, const TokenSeq& prompt, const TokenSeq& response,
                        const LengthMode& length);

// Analytic gradient of sequence_logprob in the flat parameter layout.
GradVector sequence_logprob_grad(const Policy& policy, const TokenSeq& prompt,
                                 const TokenSeq& response, const LengthMode& length);
void accumulate_sequence_logprob_grad(const Policy& policy, const TokenSeq& prompt,
                                      const TokenSeq& response, const LengthMode& length,
                                      double scale, GradVector& acc);

// JSON serialization; doubles round-trip bit-exactly via shortest decimal.
std::string policy_to_json(const Policy& policy);
Policy policy_from_json(const std::string& text);
void save_policy(const Policy& policy, const std::string& path);
Policy load_policy(const std::string& path);

}  // namespace klrl
