#include "ospar/parser.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace ospar {

using nlohmann::json;

ScoreHeads heads_for(Objective objective) {
  return objective == Objective::Baseline ? ScoreHeads::LeftOnly : ScoreHeads::Both;
}

SpanScoreChart Parser::score(const Sentence& sentence) const {
  return score_spans(model, model.token_ids(sentence.words), nullptr, heads_for(objective));
}

DecodeResult Parser::decode(const Sentence& sentence, Objective obj, bool fallback) const {
  const auto chart = score_spans(model, model.token_ids(sentence.words), nullptr, heads_for(obj));
  try {
    return ospar::decode(obj, chart, &grammar, &rules);
  } catch (const NoDerivation&) {
    if (!fallback) throw;
    DecodeResult r;
    r.tree = right_branching(static_cast<int>(sentence.size()), labels().id(kDummyLabel));
    r.score = tree_objective(r.tree, chart, obj, &grammar, &rules);
    return r;
  }
}

Tree Parser::parse(const Sentence& sentence, Objective obj, bool fallback, double* score) const {
  const auto result = decode(sentence, obj, fallback);
  if (score) *score = result.score;
  return debinarize(to_symbols(result.tree, labels()), sentence, true);
}

namespace {

json tensor_to_json(const Tensor& t) { return json{{"name", t.name}, {"shape", t.shape}, {"data", t.data}}; }

Tensor tensor_from_json(const json& j) {
  Tensor t(j.at("name").get<std::string>(), j.at("shape").get<std::vector<int>>());
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != t.size()) throw std::runtime_error("tensor " + t.name + " has the wrong number of values");
  t.data = std::move(data);
  return t;
}

}  // namespace

void save_parser(std::ostream& out, const Parser& parser) {
  const auto& m = parser.model;
  const auto& cfg = m.config();
  const auto& labels = parser.grammar.labels();
  json rules = json::array();
  for (const auto& r : parser.grammar.rules())
    rules.push_back({labels.symbol(r.parent), labels.symbol(r.left), labels.symbol(r.right)});
  json tensors = json::array();
  for (const auto& t : m.parameters().tensors) tensors.push_back(tensor_to_json(t));
  Tensor rule_scores("rules.score", {static_cast<int>(parser.rules.num_rules()), kNumOrders});
  rule_scores.data.assign(parser.rules.values().begin(), parser.rules.values().end());
  tensors.push_back(tensor_to_json(rule_scores));

  json j{{"format", kCheckpointFormat},
         {"version", kCheckpointVersion},
         {"objective", objective_name(parser.objective)},
         {"hyperparameters",
          {{"embed_dim", cfg.embed_dim},
           {"hidden_dim", cfg.hidden_dim},
           {"max_len", cfg.max_len},
           {"ln_eps", cfg.ln_eps},
           {"rule_floor", parser.rules.floor()}}},
         {"vocabulary", {{"tokens", m.tokens().symbols()}, {"labels", m.labels().symbols()}}},
         {"grammar", rules},
         {"tensors", tensors}};
  out << j.dump() << '\n';
}

void save_parser(const std::string& path, const Parser& parser) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  save_parser(out, parser);
  if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

Parser load_parser(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed checkpoint: ") + e.what());
  }
  if (j.value("format", "") != kCheckpointFormat) throw std::runtime_error("not an ospar checkpoint");
  if (j.value("version", 0) != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(j.value("version", 0)));
  try {
    const auto& hp = j.at("hyperparameters");
    ScorerConfig cfg;
    cfg.embed_dim = hp.at("embed_dim").get<int>();
    cfg.hidden_dim = hp.at("hidden_dim").get<int>();
    cfg.max_len = hp.at("max_len").get<int>();
    cfg.ln_eps = hp.at("ln_eps").get<double>();
    Vocabulary tokens(j.at("vocabulary").at("tokens").get<std::vector<std::string>>());
    Vocabulary labels(j.at("vocabulary").at("labels").get<std::vector<std::string>>());

    std::vector<Rule> rules;
    for (const auto& r : j.at("grammar")) {
      const auto parts = r.get<std::vector<std::string>>();
      if (parts.size() != 3) throw std::runtime_error("grammar rule must have three labels");
      Rule rule{labels.id(parts[0]), labels.id(parts[1]), labels.id(parts[2])};
      if (rule.parent < 0 || rule.left < 0 || rule.right < 0)
        throw std::runtime_error("grammar rule uses a label outside the vocabulary");
      rules.push_back(rule);
    }

    Parser p;
    p.objective = parse_objective(j.at("objective").get<std::string>());
    p.model = ScorerModel(cfg, tokens, labels);
    p.grammar = Grammar(labels, std::move(rules));
    p.rules = RuleScoreChart(p.grammar.size(), hp.at("rule_floor").get<double>());

    std::size_t slot = 0;
    bool have_rules = false;
    for (const auto& tj : j.at("tensors")) {
      Tensor t = tensor_from_json(tj);
      if (t.name == "rules.score") {
        if (t.size() != p.rules.values().size()) throw std::runtime_error("rule score tensor does not match grammar");
        std::copy(t.data.begin(), t.data.end(), p.rules.values().begin());
        have_rules = true;
        continue;
      }
      auto& params = p.model.parameters().tensors;
      if (slot >= params.size() || params[slot].name != t.name || params[slot].shape != t.shape)
        throw std::runtime_error("unexpected tensor " + t.name);
      params[slot++] = std::move(t);
    }
    if (slot != p.model.parameters().tensors.size() || !have_rules)
      throw std::runtime_error("checkpoint is missing tensors");
    return p;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed checkpoint: ") + e.what());
  }
}

Parser load_parser(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  return load_parser(in);
}

}  // namespace ospar
