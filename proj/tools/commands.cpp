#include "commands.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "CLI11.hpp"
#include "json.hpp"

#include "cfcdc/cfcc/predictor.hpp"
#include "cfcdc/cfcd/io.hpp"
#include "cfcdc/data/cache.hpp"
#include "cfcdc/data/synth.hpp"
#include "cfcdc/data/wikisql_io.hpp"
#include "cfcdc/error.hpp"
#include "cfcdc/eval/metrics.hpp"
#include "cfcdc/nn/checkpoint.hpp"
#include "cfcdc/sql/engine.hpp"

namespace cfcdc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class InvariantError : public Error {
 public:
  using Error::Error;
};

class ExecutionError : public Error {
 public:
  using Error::Error;
};

template <typename T>
T parse_as(const std::string& key, const std::string& v) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      std::string s = v;
      std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
      if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
      if (s == "0" || s == "false" || s == "no" || s == "off") return false;
      throw boost::bad_lexical_cast();
    } else {
      return boost::lexical_cast<T>(v);
    }
  } catch (const boost::bad_lexical_cast&) {
    throw UsageError("bad value for " + key + ": '" + v + "'");
  }
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

template <typename T, typename F>
std::pair<const std::string, Setter> field(std::string key, F get) {
  return {key, [key, get](RunConfig& c, const std::string& v) { get(c) = parse_as<T>(key, v); }};
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> kSetters = {
      field<std::uint64_t>("run.seed", [](RunConfig& c) -> auto& { return c.seed; }),
      field<std::string>("run.device", [](RunConfig& c) -> auto& { return c.device; }),
      {"paths.cache", [](RunConfig& c, const std::string& v) { c.cache = v; }},
      {"paths.checkpoints", [](RunConfig& c, const std::string& v) { c.checkpoints = v; }},
      {"paths.bundle", [](RunConfig& c, const std::string& v) { c.bundle = v; }},
      {"paths.reports", [](RunConfig& c, const std::string& v) { c.reports = v; }},
      field<int>("data.synthetic_dev", [](RunConfig& c) -> auto& { return c.synthetic_dev; }),
      field<int>("data.schema_pool", [](RunConfig& c) -> auto& { return c.schema_pool; }),
      field<int>("encoder.n_layers", [](RunConfig& c) -> auto& { return c.encoder.n_layers; }),
      field<int>("encoder.hidden_dim", [](RunConfig& c) -> auto& { return c.encoder.hidden_dim; }),
      field<int>("encoder.n_heads", [](RunConfig& c) -> auto& { return c.encoder.n_heads; }),
      field<int>("encoder.ffn_dim", [](RunConfig& c) -> auto& { return c.encoder.ffn_dim; }),
      field<double>("encoder.dropout_rate", [](RunConfig& c) -> auto& { return c.encoder.dropout_rate; }),
      field<int>("encoder.max_seq_len", [](RunConfig& c) -> auto& { return c.encoder.max_seq_len; }),
      field<int>("ifcd.lstm_dim", [](RunConfig& c) -> auto& { return c.lstm_dim; }),
      field<double>("ifcd.mask_c", [](RunConfig& c) -> auto& { return c.mask_c; }),
      field<double>("rdrop.lambda", [](RunConfig& c) -> auto& { return c.rdrop.lambda; }),
      field<double>("rdrop.mu", [](RunConfig& c) -> auto& { return c.rdrop.mu; }),
      field<double>("rdrop.prob_floor", [](RunConfig& c) -> auto& { return c.rdrop.prob_floor; }),
      field<bool>("rdrop.symmetric", [](RunConfig& c) -> auto& { return c.rdrop.symmetric; }),
      field<double>("fgm.epsilon", [](RunConfig& c) -> auto& { return c.fgm.epsilon; }),
      field<bool>("fgm.enabled", [](RunConfig& c) -> auto& { return c.fgm.enabled; }),
      field<int>("train.epochs", [](RunConfig& c) -> auto& { return c.train.epochs; }),
      field<int>("train.batch_size", [](RunConfig& c) -> auto& { return c.train.batch_size; }),
      field<double>("train.learning_rate", [](RunConfig& c) -> auto& { return c.train.adam.learning_rate; }),
      field<double>("train.clip_norm", [](RunConfig& c) -> auto& { return c.train.adam.clip_norm; }),
      field<double>("train.target_accuracy", [](RunConfig& c) -> auto& { return c.train.target_accuracy; }),
      field<int>("couple.epochs", [](RunConfig& c) -> auto& { return c.couple.epochs; }),
      field<int>("couple.batch_size", [](RunConfig& c) -> auto& { return c.couple.batch_size; }),
      field<double>("couple.learning_rate", [](RunConfig& c) -> auto& { return c.couple.adam.learning_rate; }),
      field<double>("couple.target_accuracy", [](RunConfig& c) -> auto& { return c.couple.target_accuracy; }),
      field<int>("couple.lstm_dim", [](RunConfig& c) -> auto& { return c.couple_lstm_dim; }),
      field<double>("voting.alpha", [](RunConfig& c) -> auto& { return c.voting.alpha; }),
      field<int>("eval.k", [](RunConfig& c) -> auto& { return c.k; }),
  };
  return kSetters;
}

void apply(RunConfig& c, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw UsageError("unknown config key: " + key);
  it->second(c, value);
}

std::string env_name(const std::string& key) {
  std::string out = "CFCDC_";
  for (char ch : key) out.push_back(ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ReferenceError("cannot write " + path.string());
  out << text;
}

std::string role_list() { return "select|where|sw"; }

cfcd::ClauseRole parse_role(const std::string& name) {
  try {
    return cfcd::role_from_name(name);
  } catch (const Error&) {
    throw UsageError("unknown role '" + name + "' (expected " + role_list() + ")");
  }
}

fs::path role_checkpoint(const fs::path& dir, cfcd::ClauseRole role) {
  return dir / (std::string(cfcd::role_name(role)) + ".ckpt");
}

const std::vector<cfcd::ClauseRole>& all_roles() {
  static const std::vector<cfcd::ClauseRole> kRoles = {cfcd::ClauseRole::kSelect, cfcd::ClauseRole::kWhere,
                                                       cfcd::ClauseRole::kSw};
  return kRoles;
}

std::string cache_digest(const fs::path& dir) { return nn::file_digest(dir / "cache.json"); }

// ---- prepare -----------------------------------------------------------------

struct PrepareArgs {
  int synthetic = 0;
  std::optional<std::uint64_t> seed;
  fs::path tables, train, dev, out;
};

int cmd_prepare(const PrepareArgs& a, const RunConfig& cfg, std::ostream& out) {
  data::DatasetCache cache;
  cache.max_seq_len = cfg.encoder.max_seq_len;
  cache.seed = a.seed.value_or(cfg.seed);
  std::vector<data::NLExample> train, dev;
  if (a.synthetic > 0) {
    if (!a.tables.empty() || !a.train.empty()) throw UsageError("--synthetic excludes --tables/--train/--dev");
    data::SynthOptions opts;
    opts.n_train = a.synthetic;
    opts.n_dev = cfg.synthetic_dev;
    opts.schema_pool_size = cfg.schema_pool;
    auto ds = data::synth_dataset(cache.seed, opts);
    cache.source = "synthetic";
    cache.tables = std::move(ds.tables);
    train = std::move(ds.train);
    dev = std::move(ds.dev);
  } else {
    if (a.tables.empty() || a.train.empty() || a.dev.empty()) {
      throw UsageError("prepare needs --synthetic N or all of --tables, --train, --dev");
    }
    cache.source = a.tables.parent_path().string();
    cache.tables = data::load_tables(a.tables);
    train = data::load_examples(a.train, cache.tables);
    dev = data::load_examples(a.dev, cache.tables);
  }
  cache.vocab = data::build_vocabulary(train, cache.tables);
  cache.train = data::prepare_split(train, cache.tables, cache.vocab, cache.max_seq_len);
  cache.dev = data::prepare_split(dev, cache.tables, cache.vocab, cache.max_seq_len);
  data::write_cache(a.out, cache);
  out << "prepared " << cache.train.size() << " train / " << cache.dev.size() << " dev examples over "
      << cache.tables.size() << " tables, vocab " << cache.vocab.size() << ", digest " << cache_digest(a.out)
      << " -> " << a.out.string() << '\n';
  return kOk;
}

// ---- train -------------------------------------------------------------------

struct TrainArgs {
  std::string role;
  bool no_ifcd = false;
  fs::path cache, out;
};

cfcd::ModuleConfig module_config(const RunConfig& cfg, const data::DatasetCache& cache, cfcd::ClauseRole role,
                                 bool use_ifcd) {
  cfcd::ModuleConfig m;
  m.role = role;
  m.encoder = cfg.encoder;
  m.encoder.vocab_size = cache.vocab.size();
  m.encoder.max_seq_len = cache.max_seq_len;
  m.use_ifcd = use_ifcd;
  m.lstm_dim = cfg.lstm_dim;
  m.mask_c = cfg.mask_c;
  m.init_seed = nn::derive_seed(cfg.seed, 0x1417, static_cast<std::uint64_t>(role));
  return m;
}

int cmd_train(const TrainArgs& a, const RunConfig& cfg, std::ostream& out) {
  const auto role = parse_role(a.role);
  const auto cache = data::read_cache(a.cache);
  const std::string digest = cache_digest(a.cache);
  cfcd::CFCDModule module(module_config(cfg, cache, role, !a.no_ifcd));
  fs::create_directories(a.out);
  const std::string name(cfcd::role_name(role));
  std::ofstream log(a.out / (name + ".log"), std::ios::trunc);

  cfcd::TrainConfig tc = cfg.train;
  tc.seed = nn::derive_seed(cfg.seed, 0x7a17, static_cast<std::uint64_t>(role));
  cfcd::TrainHooks hooks;
  hooks.log = &log;
  hooks.on_epoch = [&](const cfcd::EpochLog& e) {
    const auto& acc = e.accuracy;
    out << name << " epoch " << e.epoch << " loss " << e.loss.total << " acc_min " << acc.min() << " ("
        << e.seconds << " s)" << std::endl;
    cfcd::save_module(a.out / (name + ".epoch" + std::to_string(e.epoch) + ".ckpt"), module,
                      {{"epoch", e.epoch}, {"cache_digest", digest}});
  };
  const auto result = cfcd::train_cfcd(module, cache.train, cfg.rdrop, cfg.fgm, tc, hooks);
  const auto& last = result.epochs.back();
  const fs::path ckpt = role_checkpoint(a.out, role);
  cfcd::save_module(ckpt, module,
                    {{"epoch", last.epoch},
                     {"cache_digest", digest},
                     {"final_loss", result.final_loss},
                     {"train_accuracy",
                      {{"relevance", last.accuracy.relevance},
                       {"ranking", last.accuracy.ranking},
                       {"num", last.accuracy.num},
                       {"cls", last.accuracy.cls},
                       {"span", last.accuracy.span}}}});
  out << "wrote " << ckpt.string() << " digest " << nn::file_digest(ckpt) << '\n';
  return kOk;
}

// ---- couple ------------------------------------------------------------------

struct CoupleArgs {
  fs::path cache, checkpoints, out;
  bool finetune_all = false;
};

int cmd_couple(const CoupleArgs& a, const RunConfig& cfg, std::ostream& out) {
  std::map<cfcd::ClauseRole, std::unique_ptr<cfcd::CFCDModule>> mods;
  json provenance = {{"roles", json::object()}};
  for (auto role : all_roles()) {
    const fs::path p = role_checkpoint(a.checkpoints, role);
    const std::string name(cfcd::role_name(role));
    if (!fs::exists(p)) throw ReferenceError("missing role checkpoint for role '" + name + "': " + p.string());
    mods[role] = cfcd::load_module(p);
    if (mods[role]->role() != role) throw FormatError(p.string() + " does not hold the " + name + " module");
    provenance["roles"][name] = {{"path", p.string()}, {"sha256", nn::file_digest(p)}};
  }
  const auto cache = data::read_cache(a.cache);
  provenance["cache_digest"] = cache_digest(a.cache);
  provenance["finetune_all"] = a.finetune_all;

  const int h = mods[cfcd::ClauseRole::kSelect]->config().encoder.hidden_dim;
  for (auto& [r, m] : mods) {
    if (m->config().encoder.hidden_dim != h) throw FormatError("role checkpoints disagree on hidden_dim");
    if (m->config().encoder.vocab_size != cache.vocab.size()) {
      throw FormatError("role checkpoint vocabulary does not match the cache");
    }
  }
  cfcc::CFCCConfig cc;
  cc.hidden_dim = h;
  cc.lstm_dim = cfg.couple_lstm_dim;
  cc.mask_c = cfg.mask_c;
  cc.init_seed = nn::derive_seed(cfg.seed, 0xCC);
  auto model = std::make_unique<cfcc::CFCCModel>(cc);

  fs::path bundle = a.out;
  if (bundle.has_parent_path()) fs::create_directories(bundle.parent_path());
  std::ofstream log(fs::path(bundle).replace_extension(".log"), std::ios::trunc);
  cfcc::CoupleConfig ccfg = cfg.couple;
  ccfg.seed = nn::derive_seed(cfg.seed, 0xC0);
  ccfg.finetune_all = a.finetune_all;
  cfcc::CoupleHooks hooks;
  hooks.log = &log;
  hooks.on_epoch = [&](const cfcc::CoupleEpochLog& e) {
    out << "couple epoch " << e.epoch << " loss " << e.loss << " acc_min " << cfcc::min_accuracy(e.accuracy) << " ("
        << e.seconds << " s)" << std::endl;
  };
  cfcc::CoupleModules cm{mods[cfcd::ClauseRole::kSelect].get(), mods[cfcd::ClauseRole::kWhere].get(),
                         mods[cfcd::ClauseRole::kSw].get()};
  const auto logs = cfcc::train_cfcc(*model, cm, cache.train, ccfg, hooks);
  provenance["couple_epochs"] = logs.back().epoch;

  cfcc::Predictor predictor(cache.vocab, cache.max_seq_len, std::move(mods[cfcd::ClauseRole::kSelect]),
                            std::move(mods[cfcd::ClauseRole::kWhere]), std::move(mods[cfcd::ClauseRole::kSw]),
                            std::move(model), cfg.voting);
  predictor.save(bundle, provenance);
  out << "wrote " << bundle.string() << " digest " << nn::file_digest(bundle) << '\n';
  return kOk;
}

// ---- evaluate ----------------------------------------------------------------

struct EvaluateArgs {
  fs::path bundle, cache, out;
  std::string split = "dev";
  std::string name;
  bool eg = false;
  std::optional<int> k;
  std::optional<double> alpha;
};

int cmd_evaluate(const EvaluateArgs& a, const RunConfig& cfg, std::ostream& out) {
  auto predictor = cfcc::Predictor::load(a.bundle);
  if (a.alpha) {
    predictor.voting().alpha = *a.alpha;
    predictor.voting().per_task.clear();
    predictor.voting().validate();
  }
  const auto cache = data::read_cache(a.cache);
  if (a.split != "dev" && a.split != "train") throw UsageError("--split must be dev or train");
  const auto& examples = a.split == "dev" ? cache.dev : cache.train;
  if (examples.empty()) throw InputError("split " + a.split + " is empty");
  const int k = a.k.value_or(cfg.k);
  const auto run = eval::evaluate_split(predictor, examples, cache.tables, a.eg, k);

  const std::string name = a.name.empty() ? a.split + (a.eg ? "-eg" : "") : a.name;
  json report = eval::to_json(run.report);
  report["split"] = a.split;
  report["alpha"] = predictor.voting().alpha;
  report["bundle_digest"] = nn::file_digest(a.bundle);
  write_text(a.out / (name + ".json"), report.dump(2) + "\n");
  write_text(a.out / (name + ".txt"), eval::to_key_value(run.report));
  std::ostringstream jsonl;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& t = cache.tables.at(examples[i].example.table_id);
    jsonl << eval::prediction_record(examples[i], t, run.predictions[i], run.outcomes[i]).dump() << '\n';
  }
  write_text(a.out / (name + ".predictions.jsonl"), jsonl.str());

  out << eval::to_key_value(run.report);
  if (!run.report.invariants_ok()) {
    throw InvariantError("LF => EX violated on " + std::to_string(run.report.lf_implies_ex_violations) +
                         " examples");
  }
  return kOk;
}

// ---- query -------------------------------------------------------------------

struct QueryArgs {
  fs::path bundle, table;
  std::string table_id, question;
  bool eg = false;
};

int cmd_query(const QueryArgs& a, const RunConfig& cfg, std::ostream& out) {
  const auto trimmed = a.question.find_first_not_of(" \t\r\n");
  if (trimmed == std::string::npos) throw UsageError("question must not be empty");
  const auto tables = data::load_tables(a.table);
  const data::TableSchema* table = nullptr;
  if (!a.table_id.empty()) {
    const auto it = tables.find(a.table_id);
    if (it == tables.end()) throw ReferenceError("unknown table id: " + a.table_id);
    table = &it->second;
  } else if (tables.size() == 1) {
    table = &tables.begin()->second;
  } else {
    throw UsageError("table file holds " + std::to_string(tables.size()) + " tables; pass --table-id");
  }
  const auto predictor = cfcc::Predictor::load(a.bundle);
  cfcc::PredictOptions opts;
  opts.eg = a.eg;
  opts.k = cfg.k;
  const auto p = predictor.predict(a.question, *table, opts);
  const std::string sql_text = sql::serialize(p.query, *table);
  out << sql_text << '\n';
  if (p.assembled.clamped) out << "warning: " << p.assembled.warning << '\n';
  sql::ResultSet rs;
  try {
    rs = sql::execute(p.query, *table, opts.exec);
  } catch (const Error& e) {
    throw ExecutionError(sql_text + ": " + e.what());
  }
  json values = json::array();
  for (const auto& v : rs.values) {
    if (const auto* d = std::get_if<double>(&v)) {
      values.push_back(*d);
    } else {
      values.push_back(std::get<std::string>(v));
    }
  }
  out << values.dump() << '\n';
  return kOk;
}

fs::path resolve(const fs::path& workdir, const fs::path& p) {
  return p.is_absolute() || workdir.empty() ? p : workdir / p;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [k, s] : setters()) out.push_back(k);
  return out;
}

RunConfig load_config(const fs::path& file, const std::vector<std::string>& overrides) {
  RunConfig cfg;
  if (!file.empty()) {
    if (!fs::exists(file)) throw ReferenceError("config file not found: " + file.string());
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::read_ini(file.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ParseError(e.message() + " in " + file.string(), e.line());
    }
    for (const auto& [section, body] : tree) {
      if (body.empty()) throw UsageError("config key outside a section: " + section);
      for (const auto& [key, value] : body) apply(cfg, section + "." + key, value.data());
    }
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects section.key=value, got '" + o + "'");
    apply(cfg, o.substr(0, eq), o.substr(eq + 1));
  }
  for (const auto& key : config_keys()) {
    if (const char* v = std::getenv(env_name(key).c_str())) apply(cfg, key, v);
  }
  encoder::EncoderConfig probe = cfg.encoder;
  probe.vocab_size = 8;  // the real size comes from the cache
  probe.validate();
  cfg.rdrop.validate();
  cfg.voting.validate();
  if (cfg.fgm.epsilon < 0) throw UsageError("fgm.epsilon must be >= 0");
  if (cfg.k < 1) throw UsageError("eval.k must be >= 1");
  return cfg;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Column-wise text-to-SQL: staged training, coupling, evaluation and querying"};
  app.require_subcommand(1);
  fs::path config_file, workdir;
  std::vector<std::string> overrides;
  app.add_option("--config", config_file, "INI config file");
  app.add_option("--set", overrides, "Override a config key: section.key=value");
  app.add_option("--workdir", workdir, "Base directory for relative paths");

  PrepareArgs pa;
  auto* prep = app.add_subcommand("prepare", "Tokenize and cache a dataset");
  prep->add_option("--synthetic", pa.synthetic, "Generate N synthetic training examples")->check(CLI::PositiveNumber);
  prep->add_option("--seed", pa.seed, "Data seed (defaults to run.seed)");
  prep->add_option("--tables", pa.tables, "WikiSQL tables JSONL");
  prep->add_option("--train", pa.train, "WikiSQL train JSONL");
  prep->add_option("--dev", pa.dev, "WikiSQL dev JSONL");
  prep->add_option("--out", pa.out, "Cache directory");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train one clause module");
  train->add_option("--role", ta.role, "select|where|sw")->required();
  train->add_flag("--no-ifcd", ta.no_ifcd, "Train without the IFCD block");
  train->add_option("--cache", ta.cache, "Cache directory");
  train->add_option("--out", ta.out, "Checkpoint directory");

  CoupleArgs ca;
  auto* couple = app.add_subcommand("couple", "Train the coupling model and write a bundle");
  couple->add_option("--cache", ca.cache, "Cache directory");
  couple->add_option("--checkpoints", ca.checkpoints, "Directory with select/where/sw checkpoints");
  couple->add_option("--out", ca.out, "Bundle path");
  couple->add_flag("--finetune-all", ca.finetune_all, "Also update the clause modules");

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Score a bundle on a cached split");
  evaluate->add_option("--bundle", ea.bundle, "Bundle path");
  evaluate->add_option("--cache", ea.cache, "Cache directory");
  evaluate->add_option("--split", ea.split, "dev or train");
  evaluate->add_option("--out", ea.out, "Report directory");
  evaluate->add_option("--name", ea.name, "Report file stem");
  evaluate->add_flag("--eg", ea.eg, "Execution-guided decoding");
  evaluate->add_option("--k", ea.k, "EG beam size")->check(CLI::PositiveNumber);
  evaluate->add_option("--alpha", ea.alpha, "Voting weight on the coupled expert")->check(CLI::Range(0.0, 1.0));

  QueryArgs qa;
  auto* query = app.add_subcommand("query", "Translate one question against one table");
  query->add_option("--bundle", qa.bundle, "Bundle path");
  query->add_option("--table", qa.table, "Tables JSONL")->required();
  query->add_option("--table-id", qa.table_id, "Table id when the file holds several");
  query->add_option("--question", qa.question, "Natural-language question")->required();
  query->add_flag("--eg", qa.eg, "Execution-guided decoding");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << "run with --help for usage\n";
    return kUsage;
  }

  try {
    const RunConfig cfg = load_config(config_file, overrides);
    auto path = [&](const fs::path& flag, const fs::path& fallback) { return resolve(workdir, flag.empty() ? fallback : flag); };
    if (prep->parsed()) {
      pa.out = path(pa.out, cfg.cache);
      for (fs::path* p : {&pa.tables, &pa.train, &pa.dev}) {
        if (!p->empty()) *p = resolve(workdir, *p);
      }
      return cmd_prepare(pa, cfg, out);
    }
    if (train->parsed()) {
      ta.cache = path(ta.cache, cfg.cache);
      ta.out = path(ta.out, cfg.checkpoints);
      return cmd_train(ta, cfg, out);
    }
    if (couple->parsed()) {
      ca.cache = path(ca.cache, cfg.cache);
      ca.checkpoints = path(ca.checkpoints, cfg.checkpoints);
      ca.out = path(ca.out, cfg.bundle);
      return cmd_couple(ca, cfg, out);
    }
    if (evaluate->parsed()) {
      ea.bundle = path(ea.bundle, cfg.bundle);
      ea.cache = path(ea.cache, cfg.cache);
      ea.out = path(ea.out, cfg.reports);
      return cmd_evaluate(ea, cfg, out);
    }
    qa.bundle = path(qa.bundle, cfg.bundle);
    qa.table = resolve(workdir, qa.table);
    return cmd_query(qa, cfg, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kDiverged;
  } catch (const InvariantError& e) {
    err << "invariant check failed: " << e.what() << '\n';
    return kInvariantFailed;
  } catch (const ExecutionError& e) {
    err << "execution failed: " << e.what() << '\n';
    return kExecutionFailed;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace cfcdc::cli
