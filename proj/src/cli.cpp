#include "ospar/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "ospar/grammar.hpp"
#include "ospar/oracle_check.hpp"
#include "ospar/parallel.hpp"
#include "ospar/parser.hpp"
#include "ospar/trainer.hpp"

namespace ospar {

namespace {

class RuntimeFailure : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::vector<Tree> load_trees(const std::string& path) { return read_tree_file(path); }

std::unique_ptr<std::ofstream> open_output(const std::string& path) {
  auto f = std::make_unique<std::ofstream>(path);
  if (!*f) throw RuntimeFailure("cannot write " + path);
  return f;
}

// --- stats / extract-grammar ---------------------------------------------

int run_stats(const std::string& path, std::ostream& out) {
  const auto trees = load_trees(path);
  std::vector<BinaryTree> binarized;
  binarized.reserve(trees.size());
  for (const auto& t : trees) binarized.push_back(binarize(t));
  write_stats_tsv(out, order_statistics(binarized));
  return kExitOk;
}

int run_extract(const std::string& path, std::ostream& out) {
  const auto trees = load_trees(path);
  if (trees.empty()) {
    write_grammar_tsv(out, Grammar{});
    return kExitOk;
  }
  write_grammar_tsv(out, extract_grammar(Treebank::from_trees(trees)));
  return kExitOk;
}

// --- train ---------------------------------------------------------------

struct TrainArgs {
  std::string train_path;
  std::string dev_path;
  std::string model_path;
  std::string log_path;
  std::string objective = "ordered";
};

int run_train(const TrainArgs& args, TrainConfig config, std::ostream& out, std::ostream& err) {
  config.objective = parse_objective(args.objective);
  config.validate();
  const auto train = Treebank::from_trees(load_trees(args.train_path));
  if (train.size() == 0) throw RuntimeFailure("training treebank " + args.train_path + " is empty");
  const auto dev = args.dev_path.empty() ? train : Treebank::from_trees(load_trees(args.dev_path));

  std::unique_ptr<std::ofstream> log_file;
  if (!args.log_path.empty()) log_file = open_output(args.log_path);
  std::ostream& log = log_file ? *log_file : out;
  log << "epoch\tloss\tP\tR\tF1\tlr\n";

  FitHooks hooks;
  hooks.on_epoch = [&](const EpochLog& e) {
    write_epoch_tsv(log, e);
    log.flush();
  };
  hooks.on_improvement = [&](const TrainState& s) { save_parser(args.model_path, s.best); };
  const auto state = fit(train, dev, config, hooks);
  save_parser(args.model_path, state.best);
  for (const auto& s : state.skipped) err << "skipped: " << s << '\n';
  err << "epochs=" << state.epoch << " best dev F1=" << format("%.2f", state.best_f1) << " decays=" << state.decays_used
      << '\n';
  return kExitOk;
}

// --- parse ---------------------------------------------------------------

struct ParseArgs {
  std::string model_path;
  std::string input_path;
  std::string input_format = "tokens";
  std::string mode;
  bool print_score = false;
  bool fallback = false;
};

constexpr std::size_t kParseChunk = 256;

int run_parse(const ParseArgs& args, int threads, std::istream& in, std::ostream& out, std::ostream& err) {
  const Parser parser = load_parser(args.model_path);
  const Objective objective = args.mode.empty() ? parser.objective : parse_objective(args.mode);

  std::ifstream file;
  if (!args.input_path.empty()) {
    file.open(args.input_path);
    if (!file) throw RuntimeFailure("cannot read " + args.input_path);
  }
  std::istream& src = args.input_path.empty() ? in : file;

  // Sentences are parsed in chunks so output streams while order is kept.
  std::vector<Sentence> sentences;
  std::vector<long> origins;  // input line (tokens) or tree index (trees), 1-based
  if (args.input_format == "trees") {
    for (const auto& t : read_trees(src)) {
      sentences.push_back(sentence_of(t));
      origins.push_back(static_cast<long>(origins.size()) + 1);
    }
  }

  auto flush_chunk = [&](std::vector<Sentence>& chunk, std::vector<long>& where) {
    std::vector<std::string> lines(chunk.size()), errors(chunk.size());
    parallel_for(threads, chunk.size(), [&](std::size_t s) {
      try {
        double score = 0.0;
        lines[s] = to_bracketed(parser.parse(chunk[s], objective, args.fallback, &score));
        if (args.print_score) lines[s] += "\t" + format("%.10g", score);
      } catch (const std::exception& e) {
        errors[s] = e.what();
      }
    });
    for (std::size_t s = 0; s < chunk.size(); ++s) {
      if (!errors[s].empty()) {
        out.flush();
        err << (args.input_format == "trees" ? "tree " : "line ") << where[s] << ": " << errors[s] << '\n';
        return false;
      }
      out << lines[s] << '\n';
    }
    chunk.clear();
    where.clear();
    return true;
  };

  if (args.input_format == "trees") {
    for (std::size_t start = 0; start < sentences.size(); start += kParseChunk) {
      const std::size_t end = std::min(sentences.size(), start + kParseChunk);
      std::vector<Sentence> chunk(sentences.begin() + static_cast<long>(start), sentences.begin() + static_cast<long>(end));
      std::vector<long> where(origins.begin() + static_cast<long>(start), origins.begin() + static_cast<long>(end));
      if (!flush_chunk(chunk, where)) return kExitRuntime;
    }
    return kExitOk;
  }

  std::string line;
  long lineno = 0;
  std::vector<Sentence> chunk;
  std::vector<long> where;
  while (std::getline(src, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;  // blank lines are skipped
    chunk.push_back(parse_tagged_line(line));
    where.push_back(lineno);
    if (chunk.size() == kParseChunk && !flush_chunk(chunk, where)) return kExitRuntime;
  }
  if (!chunk.empty() && !flush_chunk(chunk, where)) return kExitRuntime;
  return kExitOk;
}

// --- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string gold_path;
  std::string pred_path;
  std::string per_sentence_path;
  bool plain = false;
};

int run_eval(const EvalArgs& args, std::ostream& out) {
  const auto gold = load_trees(args.gold_path);
  const auto pred = load_trees(args.pred_path);
  std::vector<EvalReport> per;
  const auto params = args.plain ? EvalParams::plain() : EvalParams::evalb_default();
  const auto report = score_trees(pred, gold, params, args.per_sentence_path.empty() ? nullptr : &per);
  if (!args.per_sentence_path.empty()) write_per_sentence_tsv(*open_output(args.per_sentence_path), per);
  out << report.summary() << '\n';
  return kExitOk;
}

// --- oracle-check --------------------------------------------------------

int run_oracle(const OracleCheckConfig& config, const std::string& replay, std::ostream& out, std::ostream& err) {
  if (!replay.empty()) {
    std::ifstream f(replay);
    if (!f) throw RuntimeFailure("cannot read " + replay);
    OracleMode mode = OracleMode::Ordered;
    const auto inst = read_instance(f, &mode);
    const double gap = compare_with_oracle(inst, mode, OracleDecoders::standard());
    const bool ok = gap <= config.tolerance;
    out << "replay mode=" << oracle_mode_name(mode) << " n=" << inst.chart.length()
        << " labels=" << inst.chart.num_labels() << " gap=" << format("%.3g", gap) << (ok ? " PASS" : " FAIL") << '\n';
    return ok ? kExitOk : kExitRuntime;
  }
  if (config.trials == 0) err << "warning: 0 trials; the check passes vacuously\n";
  const auto report = run_oracle_check(config);
  out << "trials=" << report.trials << " comparisons=" << report.comparisons
      << " max_gap=" << format("%.3g", report.max_gap) << (report.passed ? " PASS" : " FAIL") << '\n';
  if (!report.passed) {
    err << report.failure << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

// --- bench ---------------------------------------------------------------

struct BenchArgs {
  std::string model_path;
  std::string treebank_path;
  std::vector<std::string> modes{"baseline", "ablation", "ordered"};
  int repetitions = 20;
};

int run_bench(const BenchArgs& args, int threads, std::ostream& out, std::ostream& err) {
  const Parser parser = load_parser(args.model_path);
  std::vector<Sentence> sentences;
  for (const auto& t : load_trees(args.treebank_path)) sentences.push_back(sentence_of(t));
  std::vector<Objective> objectives;
  for (const auto& m : args.modes) objectives.push_back(parse_objective(m));

  if (args.repetitions == 1) err << "note: a single repetition is a noisy measurement\n";
  const auto results = bench_modes(parser, sentences, objectives, args.repetitions, threads);
  out << "mode\tsentences\trepetitions\tsents_per_sec\tmedian_sents_per_sec\n";
  for (std::size_t m = 0; m < results.size(); ++m) {
    out << args.modes[m] << '\t' << sentences.size() << '\t' << args.repetitions << '\t';
    if (sentences.empty())
      out << "n/a\tn/a\n";
    else
      out << format("%.1f", results[m].mean_rate) << '\t' << format("%.1f", results[m].median_rate) << '\n';
  }
  return kExitOk;
}

bool is_help(const CLI::ParseError& e) {
  return dynamic_cast<const CLI::CallForHelp*>(&e) || dynamic_cast<const CLI::CallForAllHelp*>(&e) ||
         dynamic_cast<const CLI::CallForVersion*>(&e);
}

}  // namespace

Sentence parse_tagged_line(const std::string& line) {
  Sentence s;
  std::istringstream tokens(line);
  std::string tok;
  while (tokens >> tok) {
    const auto cut = tok.rfind('_');
    if (cut == std::string::npos || cut == 0 || cut + 1 == tok.size()) {
      s.words.push_back(tok);
      s.tags.push_back("XX");
    } else {
      s.words.push_back(tok.substr(0, cut));
      s.tags.push_back(tok.substr(cut + 1));
    }
  }
  return s;
}

std::vector<BenchResult> bench_modes(const Parser& parser, const std::vector<Sentence>& sentences,
                                     const std::vector<Objective>& objectives, int repetitions, int threads) {
  std::vector<BenchResult> results(objectives.size());
  for (std::size_t m = 0; m < objectives.size(); ++m) results[m].objective = objectives[m];
  if (sentences.empty()) return results;

  auto pass = [&](Objective o) {
    const auto start = std::chrono::steady_clock::now();
    parallel_for(threads, sentences.size(), [&](std::size_t s) { (void)parser.parse(sentences[s], o, true); });
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  for (Objective o : objectives) pass(o);
  for (int r = 0; r < repetitions; ++r)
    for (std::size_t step = 0; step < objectives.size(); ++step) {
      const std::size_t m = (step + static_cast<std::size_t>(r)) % objectives.size();
      results[m].seconds.push_back(pass(objectives[m]));
    }

  const double count = static_cast<double>(sentences.size());
  for (auto& res : results) {
    if (res.seconds.empty()) continue;
    auto sorted = res.seconds;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t h = sorted.size() / 2;
    const double median = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
    double total = 0.0;
    for (double t : res.seconds) total += t;
    const double mean = total / static_cast<double>(res.seconds.size());
    res.mean_rate = mean > 0.0 ? count / mean : 0.0;
    res.median_rate = median > 0.0 ? count / median : 0.0;
  }
  return results;
}

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Order-sensitive CKY constituency parser", "ospar"};
  app.set_config("--config", "", "Read options from an INI/TOML file; command-line flags take precedence");
  app.require_subcommand(1, 1);

  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("--seed", seed, "Seed for every random generator")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  std::function<int()> action;

  std::string stats_path;
  auto* stats = app.add_subcommand("stats", "Left/right child counts per label");
  stats->add_option("treebank", stats_path, "Bracketed treebank")->required();
  stats->callback([&] { action = [&] { return run_stats(stats_path, out); }; });

  std::string grammar_path;
  auto* extract = app.add_subcommand("extract-grammar", "Binary rules of the binarized treebank");
  extract->add_option("treebank", grammar_path, "Bracketed treebank")->required();
  extract->callback([&] { action = [&] { return run_extract(grammar_path, out); }; });

  TrainArgs targs;
  TrainConfig tconf;
  auto* train = app.add_subcommand("train", "Train a parser with the structured hinge loss");
  train->add_option("--train", targs.train_path, "Training treebank")->required();
  train->add_option("--dev", targs.dev_path, "Development treebank (default: the training set)");
  train->add_option("--model", targs.model_path, "Where the best checkpoint is written")->required();
  train->add_option("--log", targs.log_path, "Per-epoch TSV log (default: stdout)");
  train->add_option("--objective", targs.objective, "ordered | baseline | ablation")
      ->check(CLI::IsMember({"ordered", "baseline", "ablation"}))
      ->capture_default_str();
  train->add_option("--epochs", tconf.epochs)->check(CLI::NonNegativeNumber)->capture_default_str();
  train->add_option("--batch-size", tconf.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--learning-rate", tconf.learning_rate)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--decay-factor", tconf.decay_factor)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  train->add_option("--max-decay", tconf.max_decay)->check(CLI::NonNegativeNumber)->capture_default_str();
  train->add_option("--decay-patience", tconf.decay_patience)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--embed-dim", tconf.scorer.embed_dim)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--hidden-dim", tconf.scorer.hidden_dim, "MLP hidden size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--max-len", tconf.scorer.max_len)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--rule-floor", tconf.rule_floor, "Score of rules outside the grammar")->capture_default_str();
  train->callback([&] {
    tconf.seed = seed;
    tconf.threads = threads;
    if (tconf.decay_factor <= 0.0 || tconf.decay_factor >= 1.0)
      throw CLI::ValidationError("--decay-factor", "must lie strictly between 0 and 1");
    if (tconf.scorer.embed_dim % 2 != 0) throw CLI::ValidationError("--embed-dim", "must be even");
    action = [&] { return run_train(targs, tconf, out, err); };
  });

  ParseArgs pargs;
  auto* parse = app.add_subcommand("parse", "Parse word_TAG lines (or trees) into bracketed trees");
  parse->add_option("--model", pargs.model_path, "Checkpoint written by train")->required();
  parse->add_option("--input", pargs.input_path, "Input file (default: stdin)");
  parse->add_option("--input-format", pargs.input_format, "tokens | trees")
      ->check(CLI::IsMember({"tokens", "trees"}))
      ->capture_default_str();
  parse->add_option("--mode", pargs.mode, "ordered | baseline | ablation (default: the model's objective)")
      ->check(CLI::IsMember({"ordered", "baseline", "ablation"}));
  parse->add_flag("--print-score", pargs.print_score, "Append the tree score after a tab");
  parse->add_flag("--fallback-right-branching", pargs.fallback,
                  "Emit a right-branching tree when no derivation exists");
  parse->callback([&] { action = [&] { return run_parse(pargs, threads, in, out, err); }; });

  EvalArgs eargs;
  auto* eval = app.add_subcommand("eval", "Labeled bracket precision, recall and F1");
  eval->add_option("--gold", eargs.gold_path)->required();
  eval->add_option("--pred", eargs.pred_path)->required();
  eval->add_option("--per-sentence", eargs.per_sentence_path, "Per-sentence TSV output");
  eval->add_flag("--plain", eargs.plain, "Compare all labeled spans without EVALB deletions");
  eval->callback([&] { action = [&] { return run_eval(eargs, out); }; });

  OracleCheckConfig oconf;
  std::string replay_in;
  auto* oracle = app.add_subcommand("oracle-check", "Compare every decoder with brute force on random instances");
  oracle->add_option("--trials", oconf.trials)->check(CLI::NonNegativeNumber)->capture_default_str();
  oracle->add_option("--min-n", oconf.min_n)->check(CLI::Range(1, kOracleMaxLength))->capture_default_str();
  oracle->add_option("--max-n", oconf.max_n)->check(CLI::Range(1, kOracleMaxLength))->capture_default_str();
  oracle->add_option("--max-labels", oconf.max_labels)->check(CLI::Range(1, kOracleMaxLabels))->capture_default_str();
  oracle->add_option("--tolerance", oconf.tolerance)->check(CLI::NonNegativeNumber)->capture_default_str();
  oracle->add_option("--replay-out", oconf.replay_path, "Where the first failing instance is written");
  oracle->add_option("--replay", replay_in, "Re-run a single saved instance");
  oracle->callback([&] {
    if (oconf.min_n > oconf.max_n) throw CLI::ValidationError("--min-n", "must not exceed --max-n");
    oconf.seed = seed;
    action = [&] { return run_oracle(oconf, replay_in, out, err); };
  });

  BenchArgs bargs;
  auto* bench = app.add_subcommand("bench", "Parsing throughput per decoding mode");
  bench->add_option("--model", bargs.model_path)->required();
  bench->add_option("--treebank", bargs.treebank_path, "Sentences to parse, as bracketed trees")->required();
  bench->add_option("--modes", bargs.modes)
      ->check(CLI::IsMember({"ordered", "baseline", "ablation"}))
      ->capture_default_str();
  bench->add_option("--repetitions", bargs.repetitions)->check(CLI::PositiveNumber)->capture_default_str();
  bench->callback([&] { action = [&] { return run_bench(bargs, threads, out, err); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (is_help(e)) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    const CLI::App* active = &app;
    for (auto* sub : app.get_subcommands()) active = sub;
    err << active->help();
    return kExitUsage;
  }

  try {
    return action();
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace ospar
