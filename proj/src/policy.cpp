#include "klrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "klrl/errors.hpp"
#include "klrl/rng.hpp"

namespace klrl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_arch(const Arch& arch) {
  if (arch.context_k < 1) throw ConfigError("arch: context window k must be >= 1");
  if (arch.vocab_size < 3) throw ConfigError("arch: vocab size must be >= 3");
  if (arch.eos_id < 0 || arch.eos_id >= arch.vocab_size || arch.pad_id < 0 ||
      arch.pad_id >= arch.vocab_size || arch.eos_id == arch.pad_id)
    throw ConfigError("arch: invalid eos/pad ids");
  if (arch.backend == Backend::neural && (arch.emb_dim < 1 || arch.hidden_dim < 1))
    throw ConfigError("arch: neural dims must be positive");
}

// Flat layout of the neural n-gram net:
//   [ embedding V*E | W1 (k*E)*H | b1 H | W2 H*V | b2 V ]
// embedding row-major by token, W1 row-major by input, W2 row-major by
// hidden unit.
struct NeuralLayout {
  int V, E, H, kE;
  std::size_t emb, w1, b1, w2, b2, total;
  explicit NeuralLayout(const Arch& a)
      : V(a.vocab_size), E(a.emb_dim), H(a.hidden_dim), kE(a.context_k * a.emb_dim) {
    emb = 0;
    w1 = emb + static_cast<std::size_t>(V) * E;
    b1 = w1 + static_cast<std::size_t>(kE) * H;
    w2 = b1 + H;
    b2 = w2 + static_cast<std::size_t>(H) * V;
    total = b2 + V;
  }
};

std::size_t tabular_context_count(const Arch& arch) {
  std::size_t n = 1;
  for (int i = 0; i < arch.context_k; ++i) n *= static_cast<std::size_t>(arch.vocab_size);
  return n;
}

std::size_t tabular_context_code(const Arch& arch, const std::vector<int>& window) {
  std::size_t code = 0;
  for (int id : window) code = code * static_cast<std::size_t>(arch.vocab_size) + static_cast<std::size_t>(id);
  return code;
}

// Forward pass of the neural backend; keeps intermediates for backprop.
struct NeuralForward {
  std::vector<double> x;       // concatenated embeddings, size kE
  std::vector<double> hidden;  // tanh activations, size H
  std::vector<double> logits;  // size V, pad = -inf
};

void neural_forward(const Policy& policy, const std::vector<int>& window, NeuralForward& f) {
  const NeuralLayout L(policy.arch);
  const auto& p = policy.params;
  f.x.resize(L.kE);
  for (int i = 0; i < policy.arch.context_k; ++i) {
    const double* row = p.data() + L.emb + static_cast<std::size_t>(window[i]) * L.E;
    for (int e = 0; e < L.E; ++e) f.x[i * L.E + e] = row[e];
  }
  f.hidden.assign(L.H, 0.0);
  for (int i = 0; i < L.kE; ++i) {
    const double xi = f.x[i];
    const double* w = p.data() + L.w1 + static_cast<std::size_t>(i) * L.H;
    for (int h = 0; h < L.H; ++h) f.hidden[h] += xi * w[h];
  }
  for (int h = 0; h < L.H; ++h) f.hidden[h] = std::tanh(f.hidden[h] + p[L.b1 + h]);
  f.logits.assign(L.V, 0.0);
  for (int h = 0; h < L.H; ++h) {
    const double hh = f.hidden[h];
    const double* w = p.data() + L.w2 + static_cast<std::size_t>(h) * L.V;
    for (int v = 0; v < L.V; ++v) f.logits[v] += hh * w[v];
  }
  for (int v = 0; v < L.V; ++v) f.logits[v] += p[L.b2 + v];
  f.logits[policy.arch.pad_id] = kNegInf;
}

void raw_logits(const Policy& policy, const std::vector<int>& window, std::vector<double>& out) {
  const Arch& arch = policy.arch;
  if (static_cast<int>(window.size()) != arch.context_k)
    throw InternalError("policy: window size mismatch");
  for (int id : window) {
    if (id < 0 || id >= arch.vocab_size) throw InputError("policy: context token out of range");
  }
  if (arch.backend == Backend::tabular) {
    out.assign(arch.vocab_size, 0.0);
    const std::size_t base = tabular_context_code(arch, window) * arch.vocab_size;
    for (int v = 0; v < arch.vocab_size; ++v) out[v] = policy.params[base + v];
    out[arch.pad_id] = kNegInf;
  } else {
    NeuralForward f;
    neural_forward(policy, window, f);
    out = std::move(f.logits);
  }
}

// softmax over finite entries; -inf entries get exactly zero mass
void softmax_inplace(std::vector<double>& z) {
  double m = kNegInf;
  for (double v : z) m = std::max(m, v);
  double s = 0.0;
  for (double& v : z) {
    v = std::isinf(v) ? 0.0 : std::exp(v - m);
    s += v;
  }
  for (double& v : z) v /= s;
}

double log_softmax_at(const std::vector<double>& z, int y) {
  double m = kNegInf;
  for (double v : z) m = std::max(m, v);
  double s = 0.0;
  for (double v : z) {
    if (!std::isinf(v)) s += std::exp(v - m);
  }
  return z[y] - m - std::log(s);
}

// Number of response steps the log-likelihood covers under a mode.
int scored_steps(const TokenSeq& response, const LengthMode& length, int eos_id) {
  if (length.is_fixed()) return response.length();
  for (int t = 0; t < response.length(); ++t) {
    if (response.ids[t] == eos_id) return t + 1;
  }
  return response.length();
}

void check_pair(const Policy& policy, const TokenSeq& prompt, const TokenSeq& response,
                const LengthMode& length) {
  const Arch& a = policy.arch;
  if (prompt.kind != SeqKind::prompt) throw InputError("sequence_logprob: first argument must be a prompt");
  if (response.kind != SeqKind::response) throw InputError("sequence_logprob: second argument must be a response");
  for (int id : prompt.ids) {
    if (id < 0 || id >= a.vocab_size) throw InputError("sequence_logprob: prompt token out of range");
    if (id == a.pad_id) throw InputError("sequence_logprob: pad token in prompt");
  }
  if (response.length() > length.l_max) throw InputError("sequence_logprob: response longer than l_max");
  if (length.is_fixed() && response.length() != length.l_max)
    throw InputError("sequence_logprob: fixed mode requires exactly l_max tokens");
  for (int t = 0; t < response.length(); ++t) {
    const int id = response.ids[t];
    if (id < 0 || id >= a.vocab_size) throw InputError("sequence_logprob: response token out of range");
    if (id == a.pad_id) throw InputError("sequence_logprob: pad token in response");
    if (!length.is_fixed() && id == a.eos_id && t + 1 != response.length())
      throw InputError("sequence_logprob: eos must be final in variable mode");
  }
}

}  // namespace

Arch tabular_arch(int context_k, const Vocab& vocab) {
  Arch a;
  a.backend = Backend::tabular;
  a.context_k = context_k;
  a.vocab_size = vocab.size();
  a.eos_id = vocab.eos_id;
  a.pad_id = vocab.pad_id;
  check_arch(a);
  return a;
}

Arch neural_arch(int context_k, int emb_dim, int hidden_dim, const Vocab& vocab) {
  Arch a;
  a.backend = Backend::neural;
  a.context_k = context_k;
  a.vocab_size = vocab.size();
  a.eos_id = vocab.eos_id;
  a.pad_id = vocab.pad_id;
  a.emb_dim = emb_dim;
  a.hidden_dim = hidden_dim;
  check_arch(a);
  return a;
}

std::size_t param_count(const Arch& arch) {
  check_arch(arch);
  if (arch.backend == Backend::tabular)
    return tabular_context_count(arch) * static_cast<std::size_t>(arch.vocab_size);
  return NeuralLayout(arch).total;
}

Policy init_policy(const Arch& arch, std::uint64_t seed) {
  check_arch(arch);
  Policy p;
  p.arch = arch;
  p.params.assign(param_count(arch), 0.0);
  if (arch.backend == Backend::neural) {
    const NeuralLayout L(arch);
    Rng rng(mix64(seed ^ 0x5eedf00dull));
    const double emb_hw = 1.0 / std::sqrt(static_cast<double>(L.E));
    const double w1_hw = 1.0 / std::sqrt(static_cast<double>(L.kE));
    const double w2_hw = 1.0 / std::sqrt(static_cast<double>(L.H));
    for (std::size_t i = L.emb; i < L.w1; ++i) p.params[i] = rng.centered_uniform(emb_hw);
    for (std::size_t i = L.w1; i < L.w2; ++i) p.params[i] = rng.centered_uniform(w1_hw);
    for (std::size_t i = L.w2; i < L.total; ++i) p.params[i] = rng.centered_uniform(w2_hw);
  }
  return p;
}

std::vector<int> context_window(const Arch& arch, const TokenSeq& prompt,
                                const std::vector<int>& response_prefix, int t) {
  const int k = arch.context_k;
  std::vector<int> window(k, arch.pad_id);
  // last k tokens of prompt + response_prefix[0:t]
  int pos = k;
  for (int i = t - 1; i >= 0 && pos > 0; --i) window[--pos] = response_prefix[i];
  for (int i = prompt.length() - 1; i >= 0 && pos > 0; --i) window[--pos] = prompt.ids[i];
  return window;
}

void next_token_logits(const Policy& policy, const std::vector<int>& window, std::vector<double>& out) {
  raw_logits(policy, window, out);
}

std::vector<double> next_token_dist(const Policy& policy, const TokenSeq& prompt,
                                    const std::vector<int>& response_prefix, int t) {
  std::vector<double> z;
  raw_logits(policy, context_window(policy.arch, prompt, response_prefix, t), z);
  softmax_inplace(z);
  return z;
}

std::vector<double> next_token_dist(const Policy& policy, const TokenSeq& context) {
  // context = prompt followed by a response prefix, already concatenated
  TokenSeq prompt{context.ids, SeqKind::prompt};
  return next_token_dist(policy, prompt, {}, 0);
}

double sequence_logprob(const Policy& policy, const TokenSeq& prompt, const TokenSeq& response,
                        const LengthMode& length) {
  check_pair(policy, prompt, response, length);
  const int steps = scored_steps(response, length, policy.arch.eos_id);
  double lp = 0.0;
  std::vector<double> z;
  for (int t = 0; t < steps; ++t) {
    raw_logits(policy, context_window(policy.arch, prompt, response.ids, t), z);
    lp += log_softmax_at(z, response.ids[t]);
  }
  return lp;
}

void accumulate_sequence_logprob_grad(const Policy& policy, const TokenSeq& prompt,
                                      const TokenSeq& response, const LengthMode& length,
                                      double scale, GradVector& acc) {
  check_pair(policy, prompt, response, length);
  if (acc.size() != policy.params.size()) throw InternalError("grad accumulator size mismatch");
  const Arch& arch = policy.arch;
  const int steps = scored_steps(response, length, arch.eos_id);

  if (arch.backend == Backend::tabular) {
    std::vector<double> z;
    for (int t = 0; t < steps; ++t) {
      const auto window = context_window(arch, prompt, response.ids, t);
      raw_logits(policy, window, z);
      softmax_inplace(z);
      const std::size_t base = tabular_context_code(arch, window) * arch.vocab_size;
      const int y = response.ids[t];
      // d log softmax(y) / d logit(v) = 1[v=y] - p(v); pad entry stays 0
      for (int v = 0; v < arch.vocab_size; ++v) acc[base + v] -= scale * z[v];
      acc[base + y] += scale;
    }
    return;
  }

  const NeuralLayout L(arch);
  NeuralForward f;
  std::vector<double> probs, dz(L.V), dh(L.H), da(L.H), dx(L.kE);
  for (int t = 0; t < steps; ++t) {
    const auto window = context_window(arch, prompt, response.ids, t);
    neural_forward(policy, window, f);
    probs = f.logits;
    softmax_inplace(probs);
    const int y = response.ids[t];
    for (int v = 0; v < L.V; ++v) dz[v] = ((v == y) ? 1.0 : 0.0) - probs[v];
    dz[arch.pad_id] = 0.0;
    // output layer
    for (int h = 0; h < L.H; ++h) {
      const double hh = f.hidden[h];
      double* w2g = acc.data() + L.w2 + static_cast<std::size_t>(h) * L.V;
      const double* w2 = policy.params.data() + L.w2 + static_cast<std::size_t>(h) * L.V;
      double s = 0.0;
      for (int v = 0; v < L.V; ++v) {
        w2g[v] += scale * hh * dz[v];
        s += w2[v] * dz[v];
      }
      dh[h] = s;
    }
    for (int v = 0; v < L.V; ++v) acc[L.b2 + v] += scale * dz[v];
    // tanh hidden
    for (int h = 0; h < L.H; ++h) da[h] = dh[h] * (1.0 - f.hidden[h] * f.hidden[h]);
    for (int h = 0; h < L.H; ++h) acc[L.b1 + h] += scale * da[h];
    std::fill(dx.begin(), dx.end(), 0.0);
    for (int i = 0; i < L.kE; ++i) {
      const double xi = f.x[i];
      double* w1g = acc.data() + L.w1 + static_cast<std::size_t>(i) * L.H;
      const double* w1 = policy.params.data() + L.w1 + static_cast<std::size_t>(i) * L.H;
      double s = 0.0;
      for (int h = 0; h < L.H; ++h) {
        w1g[h] += scale * xi * da[h];
        s += w1[h] * da[h];
      }
      dx[i] = s;
    }
    // embeddings
    for (int i = 0; i < arch.context_k; ++i) {
      double* eg = acc.data() + L.emb + static_cast<std::size_t>(window[i]) * L.E;
      for (int e = 0; e < L.E; ++e) eg[e] += scale * dx[i * L.E + e];
    }
  }
}

GradVector sequence_logprob_grad(const Policy& policy, const TokenSeq& prompt,
                                 const TokenSeq& response, const LengthMode& length) {
  GradVector g(policy.params.size(), 0.0);
  accumulate_sequence_logprob_grad(policy, prompt, response, length, 1.0, g);
  return g;
}

std::string policy_to_json(const Policy& policy) {
  nlohmann::json arch;
  arch["k"] = policy.arch.context_k;
  arch["vocab_size"] = policy.arch.vocab_size;
  arch["eos_id"] = policy.arch.eos_id;
  arch["pad_id"] = policy.arch.pad_id;
  if (policy.arch.backend == Backend::neural) {
    arch["emb_dim"] = policy.arch.emb_dim;
    arch["hidden_dim"] = policy.arch.hidden_dim;
  }
  nlohmann::json j;
  j["backend"] = policy.arch.backend == Backend::tabular ? "tabular" : "neural";
  j["arch"] = arch;
  j["params"] = policy.params;
  return j.dump();
}

Policy policy_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Arch a;
  const std::string backend = j.at("backend").get<std::string>();
  if (backend == "tabular")
    a.backend = Backend::tabular;
  else if (backend == "neural")
    a.backend = Backend::neural;
  else
    throw InputError("policy json: unknown backend '" + backend + "'");
  const auto& arch = j.at("arch");
  a.context_k = arch.at("k").get<int>();
  a.vocab_size = arch.at("vocab_size").get<int>();
  a.eos_id = arch.at("eos_id").get<int>();
  a.pad_id = arch.at("pad_id").get<int>();
  if (a.backend == Backend::neural) {
    a.emb_dim = arch.at("emb_dim").get<int>();
    a.hidden_dim = arch.at("hidden_dim").get<int>();
  }
  check_arch(a);
  Policy p;
  p.arch = a;
  p.params = j.at("params").get<std::vector<double>>();
  if (p.params.size() != param_count(a)) throw InputError("policy json: params length does not match arch");
  return p;
}

void save_policy(const Policy& policy, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open for write: " + path);
  out << policy_to_json(policy) << "\n";
}

Policy load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return policy_from_json(ss.str());
}

}  // namespace klrl
