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

#include "styledverse/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "styledverse/checkpoint.hpp"
#include "styledverse/corpus.hpp"
#include "styledverse/embeddings.hpp"
#include "styledverse/error.hpp"
#include "styledverse/evalkit.hpp"
#include "styledverse/generate.hpp"
#include "styledverse/phonology.hpp"
#include "styledverse/rng.hpp"
#include "styledverse/stylemem.hpp"
#include "styledverse/utf8.hpp"

namespace styledverse::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string config;
  std::optional<std::string> corpus, checkpoint, memory, phonology, out, embeddings, reference, strategy, betas,
      tone_template, format, precision;
  std::vector<std::string> keywords;
  std::optional<double> beta;
  std::optional<std::size_t> top_n, epochs;
  std::optional<std::uint64_t> seed;
};

struct RunConfig {
  std::uint64_t seed = 1;
  Precision precision = Precision::F64;
  CorpusFormat corpus_format = CorpusFormat::Jsonl;
  std::string corpus, checkpoint, memory, phonology, embeddings, reference, out;
  std::vector<std::string> keywords;
  std::vector<std::string> tone_template;
  ModelDims dims;
  TrainConfig train;
  PairConfig pairs;
  double val_fraction = 0.1;
  SkipGramConfig skipgram;
  GenerationConfig gen;
  std::vector<double> betas{0.0, 0.5, 1.0, 2.0};
  std::size_t ngram = 1;
  json echo;
};

template <typename T>
void read(const json& obj, const char* key, T& into) {
  if (obj.contains(key)) into = obj.at(key).get<T>();
}

std::vector<double> parse_betas(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("invalid beta list '" + text + "'");
    }
  }
  if (out.empty()) throw UsageError("empty beta list");
  return out;
}

/// Config file values first, then flags on top.
RunConfig resolve_config(const Flags& flags) {
  json doc = json::object();
  if (!flags.config.empty()) {
    std::ifstream in(flags.config);
    if (!in) throw UsageError("cannot open config file " + flags.config);
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError("config file " + flags.config + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw UsageError("config file must hold a JSON object");
  }

  const auto set_if = [&](const char* key, const auto& value) {
    if (value) doc[key] = *value;
  };
  set_if("corpus", flags.corpus);
  set_if("checkpoint", flags.checkpoint);
  set_if("memory", flags.memory);
  set_if("phonology", flags.phonology);
  set_if("out", flags.out);
  set_if("embeddings", flags.embeddings);
  set_if("reference", flags.reference);
  set_if("corpus_format", flags.format);
  set_if("precision", flags.precision);
  set_if("seed", flags.seed);
  if (!flags.keywords.empty()) doc["keywords"] = flags.keywords;
  if (flags.tone_template) doc["tone_template"] = *flags.tone_template;
  if (flags.beta) doc["generate"]["beta"] = *flags.beta;
  if (flags.top_n) doc["generate"]["top_n"] = *flags.top_n;
  if (flags.strategy) doc["generate"]["strategy"] = *flags.strategy;
  if (flags.epochs) doc["train"]["epochs"] = *flags.epochs;
  if (flags.betas) doc["eval"]["betas"] = parse_betas(*flags.betas);

  RunConfig cfg;
  try {
    read(doc, "seed", cfg.seed);
    read(doc, "corpus", cfg.corpus);
    read(doc, "checkpoint", cfg.checkpoint);
    read(doc, "memory", cfg.memory);
    read(doc, "phonology", cfg.phonology);
    read(doc, "embeddings", cfg.embeddings);
    read(doc, "reference", cfg.reference);
    read(doc, "out", cfg.out);
    read(doc, "keywords", cfg.keywords);
    if (doc.contains("precision")) cfg.precision = parse_precision(doc["precision"].get<std::string>());
    if (doc.contains("corpus_format")) {
      const auto f = doc["corpus_format"].get<std::string>();
      if (f == "jsonl") {
        cfg.corpus_format = CorpusFormat::Jsonl;
      } else if (f == "plain") {
        cfg.corpus_format = CorpusFormat::Plain;
      } else {
        throw UsageError("corpus_format must be jsonl or plain");
      }
    }
    if (doc.contains("tone_template")) {
      const auto& t = doc["tone_template"];
      if (t.is_string()) {
        std::stringstream ss(t.get<std::string>());
        std::string line;
        while (std::getline(ss, line, ',')) cfg.tone_template.push_back(line);
      } else {
        cfg.tone_template = t.get<std::vector<std::string>>();
      }
    }

    const json model = doc.value("model", json::object());
    read(model, "embed", cfg.dims.embed);
    read(model, "enc_hidden", cfg.dims.enc_hidden);
    read(model, "dec_hidden", cfg.dims.dec_hidden);
    read(model, "attention", cfg.dims.attention);

    const json train = doc.value("train", json::object());
    read(train, "epochs", cfg.train.epochs);
    read(train, "batch", cfg.train.batch);
    read(train, "freeze_embeddings", cfg.train.freeze_embeddings);
    read(train, "rho", cfg.train.adadelta.rho);
    read(train, "eps", cfg.train.adadelta.eps);
    read(train, "k_min", cfg.pairs.k_min);
    read(train, "k_max", cfg.pairs.k_max);
    read(train, "samples_per_unit", cfg.pairs.samples_per_unit);
    read(train, "val_fraction", cfg.val_fraction);
    if (train.contains("unit")) {
      const auto unit = train["unit"].get<std::string>();
      if (unit == "line") {
        cfg.pairs.unit = TrainingUnit::Line;
      } else if (unit == "poem") {
        cfg.pairs.unit = TrainingUnit::Poem;
      } else {
        throw UsageError("train.unit must be line or poem");
      }
    }
    cfg.train.seed = cfg.seed;

    const json sg = doc.value("skipgram", json::object());
    read(sg, "dim", cfg.skipgram.dim);
    read(sg, "window", cfg.skipgram.window);
    read(sg, "negatives", cfg.skipgram.negatives);
    read(sg, "epochs", cfg.skipgram.epochs);
    read(sg, "learning_rate", cfg.skipgram.learning_rate);

    const json gen = doc.value("generate", json::object());
    read(gen, "beta", cfg.gen.beta);
    read(gen, "top_n", cfg.gen.top_n);
    read(gen, "line_len", cfg.gen.line_len);
    read(gen, "enforce_constraints", cfg.gen.enforce_constraints);
    read(gen, "feed_previous_lines", cfg.gen.feed_previous_lines);
    if (gen.contains("strategy")) cfg.gen.strategy = Strategy::parse(gen["strategy"].get<std::string>());
    if (gen.contains("read_weighting")) {
      cfg.gen.read_weighting = parse_read_weighting(gen["read_weighting"].get<std::string>());
    }
    cfg.gen.seed = cfg.seed;

    const json ev = doc.value("eval", json::object());
    read(ev, "betas", cfg.betas);
    read(ev, "ngram", cfg.ngram);
  } catch (const json::exception& e) {
    throw UsageError(std::string("invalid config value: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  if (cfg.train.batch == 0) throw UsageError("train.batch must be at least 1");
  if (cfg.pairs.k_min == 0 || cfg.pairs.k_min > cfg.pairs.k_max) throw UsageError("need 1 <= k_min <= k_max");
  if (cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0) throw UsageError("val_fraction must be in [0, 1)");
  if (cfg.ngram == 0) throw UsageError("eval.ngram must be at least 1");
  try {
    cfg.gen.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  cfg.echo = doc;
  return cfg;
}

const std::string& require_path(const std::string& value, const char* what) {
  if (value.empty()) throw UsageError(std::string("missing --") + what);
  if (!fs::exists(value)) throw UsageError(std::string(what) + " path does not exist: " + value);
  return value;
}

const std::string& require_out(const std::string& value) {
  if (value.empty()) throw UsageError("missing --out");
  return value;
}

std::vector<Poem> read_corpus(const std::string& path, const RunConfig& cfg, const char* what) {
  auto poems = load_corpus(require_path(path, what), cfg.corpus_format);
  if (poems.empty()) throw UsageError(std::string(what) + " corpus is empty: " + path);
  return poems;
}

IdSeq keyword_ids(const std::string& text, const Vocabulary& vocab) {
  IdSeq ids;
  for (char32_t c : utf8::decode(text)) {
    if (c == U' ' || c == U',' || c == U'\t' || c == U'，') continue;
    ids.push_back(vocab.id(c));
  }
  if (ids.empty()) throw UsageError("empty keyword set");
  if (std::all_of(ids.begin(), ids.end(), [](Id id) { return id == special::kUnk; })) {
    spdlog::warn("no keyword of '{}' is in the vocabulary", text);
  }
  return ids;
}

std::vector<std::string> to_utf8(const std::vector<std::u32string>& lines) {
  std::vector<std::string> out;
  for (const auto& line : lines) out.push_back(utf8::encode(line));
  return out;
}

json report_json(const ConstraintReport& report) {
  json violations = json::array();
  for (const auto& v : report.violations) {
    violations.push_back({{"kind", to_string(v.kind)}, {"line", v.line}, {"position", v.position},
                          {"message", v.message}});
  }
  const auto opt = [](const std::optional<bool>& b) { return b ? json(*b) : json(nullptr); };
  return {{"passed", report.passed()},
          {"line_count_ok", report.line_count_ok},
          {"line_length_ok", report.line_length_ok},
          {"rhyme_ok", opt(report.rhyme_ok)},
          {"tone_ok", opt(report.tone_ok)},
          {"violations", violations}};
}

/// Writes to --out when given, else to `out`.
void emit(const RunConfig& cfg, std::ostream& out, const std::string& text) {
  if (cfg.out.empty()) {
    out << text;
    return;
  }
  std::ofstream file(cfg.out, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + cfg.out);
  file << text;
}

std::optional<ToneTemplate> tone_template(const RunConfig& cfg) {
  if (cfg.tone_template.empty()) return std::nullopt;
  try {
    return ToneTemplate::parse(cfg.tone_template);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

int cmd_train_embeddings(const RunConfig& cfg) {
  const auto poems = read_corpus(cfg.corpus, cfg, "corpus");
  const fs::path out = require_out(cfg.out);
  const Vocabulary vocab = build_vocabulary(poems);
  spdlog::info("training {}-dim embeddings for {} characters", cfg.skipgram.dim, vocab.chars().size());
  const auto table = pretrain_embeddings(poems, vocab, cfg.skipgram, cfg.seed);
  save_embeddings(out, vocab, table, cfg.precision);
  return kExitOk;
}

int cmd_train(const RunConfig& cfg) {
  const auto poems = read_corpus(cfg.corpus, cfg, "corpus");
  const fs::path out = require_out(cfg.out);
  std::optional<StoredEmbeddings> pretrained;
  if (!cfg.embeddings.empty()) pretrained = load_embeddings(require_path(cfg.embeddings, "embeddings"));

  const Vocabulary vocab = build_vocabulary(poems);
  const auto split = split_corpus(poems, cfg.val_fraction, cfg.seed);
  Seq2Seq model = Seq2Seq::initialize(vocab, cfg.dims, cfg.seed, cfg.precision);
  if (pretrained) {
    Tensor table = model.embedding();
    transfer_embeddings(*pretrained, vocab, table);
    model.set_embedding(table);
  }
  const auto pairs = make_training_pairs(split.train, vocab, cfg.pairs, cfg.seed);
  spdlog::info("{} training pairs from {} poems, {} held out", pairs.size(), split.train.size(),
               split.validation.size());

  const fs::path csv_path = out.string() + ".loss.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
  csv << "epoch,loss\n";
  train(model, pairs, cfg.train, [&](std::size_t epoch, double loss) {
    csv << epoch + 1 << ',' << fmt::format("{:.17g}", loss) << '\n';
    spdlog::info("epoch {} loss {:.6f}", epoch + 1, loss);
  });

  json echo = cfg.echo;
  if (!split.validation.empty()) {
    const auto val_pairs = make_training_pairs(split.validation, vocab, cfg.pairs, cfg.seed + 1);
    const double ppl = perplexity(model, val_pairs);
    spdlog::info("validation perplexity {:.4f}", ppl);
    echo["validation_perplexity"] = ppl;
  }
  save_checkpoint(out, model, echo);
  return kExitOk;
}

int cmd_build_memory(const RunConfig& cfg) {
  const Seq2Seq model = load_checkpoint(require_path(cfg.checkpoint, "checkpoint"));
  const auto poems = read_corpus(cfg.corpus, cfg, "style");
  const fs::path out = require_out(cfg.out);
  const GlobalMemory memory = build_global_memory(model, poems);
  spdlog::info("memory of {} elements from {} poems", memory.elements.size(), memory.poems.size());
  save_memory(memory, out);
  return kExitOk;
}

int cmd_generate(const RunConfig& cfg, std::ostream& out) {
  const Seq2Seq model = load_checkpoint(require_path(cfg.checkpoint, "checkpoint"));
  std::optional<GlobalMemory> memory;
  if (!cfg.memory.empty()) {
    memory = load_memory(require_path(cfg.memory, "memory"));
    memory->check_compatible(model);
  }
  if (cfg.keywords.empty()) throw UsageError("missing --keywords");
  std::optional<PhonologyTable> phonology;
  if (!cfg.phonology.empty()) phonology = load_phonology(require_path(cfg.phonology, "phonology"));
  const auto tmpl = tone_template(cfg);

  std::vector<IdSeq> keyword_sets;
  for (const auto& text : cfg.keywords) keyword_sets.push_back(keyword_ids(text, model.vocab()));

  std::string text;
  for (std::size_t k = 0; k < keyword_sets.size(); ++k) {
    GenerationConfig gen = cfg.gen;
    gen.seed = derive_seed(cfg.seed, k);
    const ToneConstraint tones{phonology ? &*phonology : nullptr, tmpl ? &*tmpl : nullptr};
    const auto result = generate_quatrain(model, memory ? &*memory : nullptr, keyword_sets[k], gen, tones);
    json finish = json::array();
    for (auto r : result.line_finish) finish.push_back(to_string(r));
    json record = {{"keywords", cfg.keywords[k]},
                   {"lines", to_utf8(result.quatrain.lines)},
                   {"finish_reasons", finish},
                   {"log_prob", result.log_prob},
                   {"memory_poems", result.memory_poems}};
    if (phonology) {
      const auto report = check_constraints(result.quatrain.to_poem(), &*phonology, tmpl ? &*tmpl : nullptr);
      record["constraint_report"] = report_json(report);
    }
    text += record.dump() + "\n";
  }
  emit(cfg, out, text);
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const Seq2Seq model = load_checkpoint(require_path(cfg.checkpoint, "checkpoint"));
  const auto style = read_corpus(cfg.corpus, cfg, "corpus");
  const auto reference = read_corpus(cfg.reference, cfg, "reference");
  if (cfg.keywords.empty()) throw UsageError("missing --keywords");
  if (cfg.betas.empty() || cfg.betas.front() != 0.0 || !std::is_sorted(cfg.betas.begin(), cfg.betas.end())) {
    throw UsageError("beta list must be ascending and start at 0");
  }
  std::vector<IdSeq> keyword_sets;
  for (const auto& text : cfg.keywords) keyword_sets.push_back(keyword_ids(text, model.vocab()));

  const auto report = style_shift_experiment(model, style, reference, keyword_sets, cfg.betas, cfg.gen, cfg.ngram);
  const json doc = {{"ngram", cfg.ngram},
                    {"seed", cfg.seed},
                    {"strategy", cfg.gen.strategy.to_string()},
                    {"top_n", cfg.gen.top_n},
                    {"rows", report.to_json()}};
  emit(cfg, out, doc.dump(2) + "\n");
  return kExitOk;
}

int cmd_check(const RunConfig& cfg, std::ostream& out) {
  const auto poems = read_corpus(cfg.corpus, cfg, "corpus");
  std::optional<PhonologyTable> phonology;
  if (!cfg.phonology.empty()) phonology = load_phonology(require_path(cfg.phonology, "phonology"));
  const auto tmpl = tone_template(cfg);
  std::string text;
  for (const auto& poem : poems) {
    json record = report_json(check_constraints(poem, phonology ? &*phonology : nullptr, tmpl ? &*tmpl : nullptr));
    record["title"] = poem.title;
    text += record.dump() + "\n";
  }
  emit(cfg, out, text);
  return kExitOk;
}

/// Routes the default logger to `err` for the duration of one run.
class ScopedLogging {
 public:
  explicit ScopedLogging(std::ostream& err) : previous_(spdlog::default_logger()) { configure(err); }
  ~ScopedLogging() { spdlog::set_default_logger(previous_); }
  ScopedLogging(const ScopedLogging&) = delete;
  ScopedLogging& operator=(const ScopedLogging&) = delete;

 private:
  static void configure(std::ostream& err);
  std::shared_ptr<spdlog::logger> previous_;
};

void ScopedLogging::configure(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("styledverse", sink);
  logger->set_pattern("[%l] %v");
  auto level = spdlog::level::warn;
  if (const char* env = std::getenv("STYLEDVERSE_LOG")) {
    const std::string name = env;
    if (name == "error") level = spdlog::level::err;
    if (name == "info") level = spdlog::level::info;
    if (name == "debug") level = spdlog::level::debug;
  }
  logger->set_level(level);
  spdlog::set_default_logger(logger);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const ScopedLogging logging(err);

  CLI::App app{"Memory-augmented quatrain generation"};
  app.require_subcommand(1);
  Flags flags;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "Random seed");
    sub->add_option("--out", flags.out, "Output path");
  };

  auto* train_emb = app.add_subcommand("train-embeddings", "Pretrain character embeddings");
  common(train_emb);
  train_emb->add_option("--corpus", flags.corpus, "Training corpus");
  train_emb->add_option("--format", flags.format, "jsonl or plain");
  train_emb->add_option("--precision", flags.precision, "f32 or f64");

  auto* train_cmd = app.add_subcommand("train", "Train the seq2seq model");
  common(train_cmd);
  train_cmd->add_option("--corpus", flags.corpus, "Training corpus");
  train_cmd->add_option("--format", flags.format, "jsonl or plain");
  train_cmd->add_option("--embeddings", flags.embeddings, "Pretrained embedding container");
  train_cmd->add_option("--epochs", flags.epochs, "Training epochs");
  train_cmd->add_option("--precision", flags.precision, "f32 or f64");

  auto* mem_cmd = app.add_subcommand("build-memory", "Build a style memory");
  common(mem_cmd);
  mem_cmd->add_option("--checkpoint", flags.checkpoint, "Model checkpoint");
  mem_cmd->add_option("--corpus", flags.corpus, "Style corpus");
  mem_cmd->add_option("--format", flags.format, "jsonl or plain");

  const auto gen_flags = [&](CLI::App* sub) {
    sub->add_option("--checkpoint", flags.checkpoint, "Model checkpoint");
    sub->add_option("--keywords", flags.keywords, "Keyword set (repeatable)");
    sub->add_option("--top-n", flags.top_n, "Poems in the local memory");
    sub->add_option("--strategy", flags.strategy, "greedy, beam:<width> or sample:<temperature>");
  };
  auto* gen_cmd = app.add_subcommand("generate", "Generate quatrains");
  common(gen_cmd);
  gen_flags(gen_cmd);
  gen_cmd->add_option("--memory", flags.memory, "Style memory");
  gen_cmd->add_option("--beta", flags.beta, "Memory weight");
  gen_cmd->add_option("--phonology", flags.phonology, "Tone and rhyme table (TSV)");
  gen_cmd->add_option("--template", flags.tone_template, "Tone template, lines separated by commas");

  auto* eval_cmd = app.add_subcommand("eval", "Style-shift experiment");
  common(eval_cmd);
  gen_flags(eval_cmd);
  eval_cmd->add_option("--corpus", flags.corpus, "Style corpus");
  eval_cmd->add_option("--reference", flags.reference, "Reference corpus");
  eval_cmd->add_option("--format", flags.format, "jsonl or plain");
  eval_cmd->add_option("--betas", flags.betas, "Comma-separated ascending beta values");

  auto* check_cmd = app.add_subcommand("check", "Check poems against tone and rhyme rules");
  common(check_cmd);
  check_cmd->add_option("--corpus", flags.corpus, "Poems to check");
  check_cmd->add_option("--format", flags.format, "jsonl or plain");
  check_cmd->add_option("--phonology", flags.phonology, "Tone and rhyme table (TSV)");
  check_cmd->add_option("--template", flags.tone_template, "Tone template, lines separated by commas");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    const RunConfig cfg = resolve_config(flags);
    if (*train_emb) return cmd_train_embeddings(cfg);
    if (*train_cmd) return cmd_train(cfg);
    if (*mem_cmd) return cmd_build_memory(cfg);
    if (*gen_cmd) return cmd_generate(cfg, out);
    if (*eval_cmd) return cmd_eval(cfg, out);
    if (*check_cmd) return cmd_check(cfg, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CorpusError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace styledverse::cli
