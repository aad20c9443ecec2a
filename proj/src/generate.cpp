/* Copyright 2026 The Styledverse Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "styledverse/generate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "styledverse/error.hpp"
#include "styledverse/rng.hpp"

namespace styledverse {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Vec log_softmax(const Vec& logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double x : logits) total += std::exp(x - peak);
  const double shift = peak + std::log(total);
  Vec out(logits.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = logits[i] - shift;
  return out;
}

/// Renormalizes masked log-probabilities in place. Returns false if every
/// entry is masked.
bool renormalize(Vec& logp) {
  double peak = kNegInf;
  for (double x : logp) peak = std::max(peak, x);
  if (peak == kNegInf) return false;
  double total = 0.0;
  for (double x : logp) {
    if (x != kNegInf) total += std::exp(x - peak);
  }
  const double shift = peak + std::log(total);
  for (double& x : logp) {
    if (x != kNegInf) x -= shift;
  }
  return true;
}

Id argmax(const Vec& logp) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logp.size(); ++i) {
    if (logp[i] > logp[best]) best = i;
  }
  return static_cast<Id>(best);
}

/// Decoding constraints shared by every strategy.
struct Policy {
  std::size_t max_steps = 0;
  std::function<void(std::size_t step, Vec& logp)> mask;
  std::function<bool(std::size_t step, Id token)> stops;
};

struct SearchResult {
  IdSeq ids;  // every emitted token, including a final stop token
  bool finished = false;
  double log_prob = 0.0;
};

Vec scored_step(const DecodeSession& session, const DecoderState& state, Id prev, std::size_t t,
                const Policy& policy, DecodeSession::Step& step) {
  step = session.advance(state, prev);
  Vec logp = step.log_probs;
  if (policy.mask) policy.mask(t, logp);
  if (!renormalize(logp)) throw InvalidArgument("decoding constraints exclude every token");
  return logp;
}

SearchResult run_greedy_or_sample(const DecodeSession& session, const Policy& policy, const Strategy& strategy,
                                  Rng* rng) {
  SearchResult out;
  DecoderState state = session.start();
  Id prev = special::kBos;
  for (std::size_t t = 0; t < policy.max_steps; ++t) {
    DecodeSession::Step step;
    const Vec logp = scored_step(session, state, prev, t, policy, step);
    Id token;
    if (strategy.kind == StrategyKind::Sample) {
      Vec weights(logp.size(), 0.0);
      double peak = kNegInf;
      for (double x : logp) peak = std::max(peak, x);
      for (std::size_t i = 0; i < logp.size(); ++i) {
        if (logp[i] != kNegInf) weights[i] = std::exp((logp[i] - peak) / strategy.temperature);
      }
      token = static_cast<Id>(rng->categorical(weights));
    } else {
      token = argmax(logp);
    }
    out.ids.push_back(token);
    out.log_prob += logp[static_cast<std::size_t>(token)];
    if (policy.stops(t, token)) {
      out.finished = true;
      break;
    }
    state = std::move(step.state);
    prev = token;
  }
  return out;
}

SearchResult run_beam(const DecodeSession& session, const Policy& policy, std::size_t width) {
  struct Hyp {
    IdSeq ids;
    DecoderState state;
    double log_prob = 0.0;
  };
  struct Candidate {
    double score;
    std::size_t hyp;
    Id token;
  };

  std::vector<Hyp> active{Hyp{{}, session.start(), 0.0}};
  std::vector<Hyp> finished;
  for (std::size_t t = 0; t < policy.max_steps && !active.empty(); ++t) {
    std::vector<Candidate> candidates;
    std::vector<DecoderState> next_states(active.size());
    for (std::size_t h = 0; h < active.size(); ++h) {
      const Id prev = active[h].ids.empty() ? special::kBos : active[h].ids.back();
      DecodeSession::Step step;
      const Vec logp = scored_step(session, active[h].state, prev, t, policy, step);
      next_states[h] = std::move(step.state);
      for (std::size_t c = 0; c < logp.size(); ++c) {
        if (logp[c] != kNegInf) candidates.push_back({active[h].log_prob + logp[c], h, static_cast<Id>(c)});
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
    if (candidates.size() > width) candidates.resize(width);

    std::vector<Hyp> next;
    for (const auto& c : candidates) {
      Hyp hyp{active[c.hyp].ids, next_states[c.hyp], c.score};
      hyp.ids.push_back(c.token);
      (policy.stops(t, c.token) ? finished : next).push_back(std::move(hyp));
    }
    active = std::move(next);

    // Scores only fall, so no live hypothesis can overtake the best finished one.
    double best_finished = kNegInf;
    for (const auto& f : finished) best_finished = std::max(best_finished, f.log_prob);
    double best_active = kNegInf;
    for (const auto& a : active) best_active = std::max(best_active, a.log_prob);
    if (!finished.empty() && best_finished >= best_active) break;
  }

  SearchResult out;
  out.log_prob = kNegInf;
  for (const auto& f : finished) {
    if (f.log_prob > out.log_prob) out = SearchResult{f.ids, true, f.log_prob};
  }
  if (finished.empty()) {
    for (const auto& a : active) {
      if (a.log_prob > out.log_prob) out = SearchResult{a.ids, false, a.log_prob};
    }
  }
  return out;
}

SearchResult search(const DecodeSession& session, const Policy& policy, const Strategy& strategy, Rng& rng) {
  if (strategy.kind != StrategyKind::Beam) return run_greedy_or_sample(session, policy, strategy, &rng);
  SearchResult beam = run_beam(session, policy, strategy.beam_width);
  // Plain beam search can prune the greedy path; keeping the better of the
  // two makes the result never score below greedy.
  SearchResult greedy = run_greedy_or_sample(session, policy, Strategy{}, nullptr);
  if (greedy.finished == beam.finished ? greedy.log_prob > beam.log_prob : greedy.finished) return greedy;
  return beam;
}

std::vector<StepTrace> replay(const DecodeSession& session, const Policy& policy, const IdSeq& ids) {
  std::vector<StepTrace> trace;
  DecoderState state = session.start();
  Id prev = special::kBos;
  for (std::size_t t = 0; t < ids.size(); ++t) {
    DecodeSession::Step step;
    const Vec logp = scored_step(session, state, prev, t, policy, step);
    StepTrace entry{ids[t], step.attention, {}};
    std::vector<std::size_t> order(logp.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t k = std::min<std::size_t>(5, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) { return logp[a] > logp[b] || (logp[a] == logp[b] && a < b); });
    for (std::size_t i = 0; i < k; ++i) entry.top.emplace_back(static_cast<Id>(order[i]), std::exp(logp[order[i]]));
    trace.push_back(std::move(entry));
    state = std::move(step.state);
    prev = ids[t];
  }
  return trace;
}

void mask_specials(Vec& logp) {
  for (Id s = 0; s < kFirstCharId; ++s) logp[static_cast<std::size_t>(s)] = kNegInf;
}

void force_token(Vec& logp, Id token) {
  for (std::size_t i = 0; i < logp.size(); ++i) {
    if (static_cast<Id>(i) != token) logp[i] = kNegInf;
  }
}

/// Masks characters whose known tone breaks the template, unless that would
/// leave no character at all.
void mask_tones(Vec& logp, const Vocabulary& vocab, const ToneConstraint& tones, std::size_t line, std::size_t pos) {
  Vec masked = logp;
  bool any = false;
  for (std::size_t i = kFirstCharId; i < masked.size(); ++i) {
    if (masked[i] == kNegInf) continue;
    const Tone tone = tones.phonology->tone(vocab.character(static_cast<Id>(i)));
    if (!tones.tone_template->allows(line, pos, tone)) {
      masked[i] = kNegInf;
    } else {
      any = true;
    }
  }
  if (any) logp = std::move(masked);
}

}  // namespace

Strategy Strategy::parse(const std::string& text) {
  Strategy s;
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? std::string{} : text.substr(colon + 1);
  try {
    if (kind == "greedy" && arg.empty()) {
      s.kind = StrategyKind::Greedy;
    } else if (kind == "beam") {
      s.kind = StrategyKind::Beam;
      if (!arg.empty()) s.beam_width = std::stoul(arg);
    } else if (kind == "sample") {
      s.kind = StrategyKind::Sample;
      if (!arg.empty()) s.temperature = std::stod(arg);
    } else {
      throw InvalidArgument("");
    }
  } catch (const std::exception&) {
    throw InvalidArgument("unknown strategy '" + text + "' (expected greedy, beam:<width> or sample:<temperature>)");
  }
  if (s.kind == StrategyKind::Beam && s.beam_width == 0) throw InvalidArgument("beam width must be at least 1");
  if (s.kind == StrategyKind::Sample && !(s.temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  return s;
}

std::string Strategy::to_string() const {
  switch (kind) {
    case StrategyKind::Greedy: return "greedy";
    case StrategyKind::Beam: return "beam:" + std::to_string(beam_width);
    case StrategyKind::Sample: {
      std::string t = std::to_string(temperature);
      return "sample:" + t;
    }
  }
  return "greedy";
}

void GenerationConfig::validate() const {
  if (!(beta >= 0.0)) throw InvalidArgument("beta must be non-negative");
  if (top_n == 0) throw InvalidArgument("top_n must be at least 1");
  if (line_len != 5 && line_len != 7) throw InvalidArgument("line_len must be 5 or 7");
  if (strategy.kind == StrategyKind::Beam && strategy.beam_width == 0) throw InvalidArgument("beam width must be >= 1");
  if (strategy.kind == StrategyKind::Sample && !(strategy.temperature > 0.0)) {
    throw InvalidArgument("temperature must be positive");
  }
  if (max_line_len == 0) throw InvalidArgument("max_line_len must be at least 1");
}

std::string to_string(FinishReason r) {
  switch (r) {
    case FinishReason::Eos: return "eos";
    case FinishReason::Sep: return "sep";
    case FinishReason::Truncated: return "truncated";
  }
  return "?";
}

DecodeSession::DecodeSession(const Seq2Seq& model, const IdSeq& keywords, const LocalMemory* memory, double beta,
                             ReadWeighting weighting)
    : model_(&model), encoded_(model.encode(keywords)), memory_(memory), beta_(beta), weighting_(weighting) {
  if (beta < 0.0) throw InvalidArgument("beta must be non-negative");
  if (memory_ != nullptr && (memory_->source_dim != model.dims().dec_hidden || memory_->target_dim != model.dims().embed)) {
    throw DimensionMismatch("local memory dimensions do not match the model");
  }
}

DecoderState DecodeSession::start() const { return model_->initial_state(encoded_); }

DecodeSession::Step DecodeSession::advance(const DecoderState& prev, Id y_prev) const {
  Step step;
  step.attention = model_->attention_weights(prev.s, encoded_);
  step.state = model_->decoder_step(y_prev, prev, model_->context(step.attention, encoded_));
  Vec logits;
  if (memory_ != nullptr) {
    const Vec read = memory_read(step.state.s, *memory_, weighting_);
    logits = combined_logits(step.state.s, read, beta_, model_->projection(), model_->embedding());
  } else {
    logits = model_->logits(step.state.s);
  }
  step.log_probs = log_softmax(logits);
  return step;
}

DecodeResult decode_sequence(const Seq2Seq& model, const LocalMemory* memory, const IdSeq& keywords,
                             const GenerationConfig& cfg, const StopRule& stop) {
  cfg.validate();
  if (stop.max_len == 0) throw InvalidArgument("decode_sequence: max_len must be at least 1");
  const DecodeSession session(model, keywords, memory, cfg.beta, cfg.read_weighting);
  Policy policy;
  policy.max_steps = stop.max_len;
  policy.stops = [&](std::size_t, Id token) {
    return std::find(stop.stop_tokens.begin(), stop.stop_tokens.end(), token) != stop.stop_tokens.end();
  };
  Rng rng(cfg.seed);
  const SearchResult found = search(session, policy, cfg.strategy, rng);

  DecodeResult result;
  result.log_prob = found.log_prob;
  result.trace = replay(session, policy, found.ids);
  result.ids = found.ids;
  if (found.finished) {
    result.finish = result.ids.back() == special::kSep ? FinishReason::Sep : FinishReason::Eos;
    result.ids.pop_back();
  } else {
    result.finish = FinishReason::Truncated;
  }
  return result;
}

GenerationResult generate_quatrain(const Seq2Seq& model, const GlobalMemory* memory, const IdSeq& keywords,
                                   const GenerationConfig& cfg, const ToneConstraint& tones) {
  cfg.validate();
  if (keywords.empty()) throw InvalidArgument("generate_quatrain: empty keywords");
  if (model.vocab().chars().empty()) throw InvalidArgument("generate_quatrain: vocabulary has no characters");
  const bool use_tones = cfg.enforce_constraints && tones.phonology != nullptr && tones.tone_template != nullptr;
  if (use_tones && (tones.tone_template->lines.size() != 4 || tones.tone_template->line_len() != cfg.line_len)) {
    throw InvalidTemplate("tone template must have 4 lines of line_len symbols");
  }

  GenerationResult result;
  std::optional<LocalMemory> local;
  if (memory != nullptr) {
    memory->check_compatible(model);
    local = select_local_memory(*memory, keywords, model.embedding(), cfg.top_n);
    result.memory_poems = local->poem_ids;
  }
  const LocalMemory* local_ptr = local ? &*local : nullptr;
  const std::size_t len = cfg.line_len;
  Rng rng(cfg.seed);

  const auto char_mask = [&](Vec& logp, std::size_t line, std::size_t pos) {
    mask_specials(logp);
    if (use_tones) mask_tones(logp, model.vocab(), tones, line, pos);
  };

  std::vector<IdSeq> lines(4);
  if (!cfg.feed_previous_lines) {
    // One continuous sequence: line SEP line SEP line SEP line EOS.
    const DecodeSession session(model, keywords, local_ptr, cfg.beta, cfg.read_weighting);
    Policy policy;
    policy.max_steps = 4 * (len + 1);
    policy.mask = [&](std::size_t t, Vec& logp) {
      const std::size_t line = t / (len + 1), pos = t % (len + 1);
      if (pos < len) {
        char_mask(logp, line, pos);
      } else {
        force_token(logp, line < 3 ? special::kSep : special::kEos);
      }
    };
    policy.stops = [&](std::size_t t, Id) { return t + 1 == policy.max_steps; };
    const SearchResult found = search(session, policy, cfg.strategy, rng);
    result.log_prob = found.log_prob;
    result.trace = replay(session, policy, found.ids);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto begin = found.ids.begin() + static_cast<std::ptrdiff_t>(i * (len + 1));
      lines[i].assign(begin, begin + static_cast<std::ptrdiff_t>(len));
      result.line_finish.push_back(i < 3 ? FinishReason::Sep : FinishReason::Eos);
    }
  } else {
    // Each line restarts from BOS with the keywords plus all earlier lines as encoder input.
    IdSeq source = keywords;
    for (std::size_t i = 0; i < 4; ++i) {
      const DecodeSession session(model, source, local_ptr, cfg.beta, cfg.read_weighting);
      Policy policy;
      policy.max_steps = len + 1;
      policy.mask = [&](std::size_t t, Vec& logp) {
        if (t < len) {
          char_mask(logp, i, t);
        } else {
          force_token(logp, special::kEos);
        }
      };
      policy.stops = [&](std::size_t t, Id) { return t == len; };
      const SearchResult found = search(session, policy, cfg.strategy, rng);
      result.log_prob += found.log_prob;
      auto trace = replay(session, policy, found.ids);
      result.trace.insert(result.trace.end(), trace.begin(), trace.end());
      lines[i].assign(found.ids.begin(), found.ids.begin() + static_cast<std::ptrdiff_t>(len));
      result.line_finish.push_back(FinishReason::Eos);
      source.insert(source.end(), lines[i].begin(), lines[i].end());
    }
  }

  result.quatrain.line_len = len;
  for (const auto& ids : lines) result.quatrain.lines.push_back(model.vocab().decode(ids));
  return result;
}

}  // namespace styledverse
