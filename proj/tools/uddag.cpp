// uddag: convert, train, parse, evaluate and inspect the oracle.
//
// Exit codes: 0 success, 1 data error, 2 usage error. Paths may be "-" for
// stdin/stdout.

#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "uddag/convert.hpp"
#include "uddag/dag_text.hpp"
#include "uddag/evaluation.hpp"
#include "uddag/fixtures.hpp"
#include "uddag/manifest.hpp"
#include "uddag/oracle.hpp"
#include "uddag/parallel.hpp"
#include "uddag/train.hpp"

using namespace uddag;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_input(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), {}};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_output(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::vector<Sentence> read_corpus(const std::string& path) {
  try {
    return parse_conllu(read_input(path));
  } catch (const ConlluError& e) {
    throw std::runtime_error((path == "-" ? std::string("<stdin>") : path) + ": " + e.what());
  }
}

/// Training flags shared by train and cross-validate.
struct ConfigFlags {
  std::string kind = "neural";
  std::uint64_t seed = 1;
  bool delexicalized = false;
  bool paper_dims = false;
  std::optional<int> epochs_sgd, epochs_amsgrad, epochs_perceptron;
  std::string vectors;
  std::size_t limit_vectors = 250000;

  void add(CLI::App* app) {
    app->add_option("--model", kind, "classifier: neural or perceptron")
        ->check(CLI::IsMember({"neural", "perceptron"}));
    app->add_option("--seed", seed, "random seed");
    app->add_flag("--delexicalized", delexicalized, "drop word, lemma, fine POS, prefix and suffix features");
    app->add_flag("--paper-dims", paper_dims, "full-size network dimensions instead of the small defaults");
    app->add_option("--epochs-sgd", epochs_sgd, "SGD epochs (neural)");
    app->add_option("--epochs-amsgrad", epochs_amsgrad,
                    "AMSGrad epochs (neural; default 250, or 750 below 100 training sentences)");
    app->add_option("--epochs-perceptron", epochs_perceptron, "perceptron epochs");
    app->add_option("--vectors", vectors, "pre-trained word vectors in text format");
    app->add_option("--limit-vectors", limit_vectors, "read at most this many pre-trained vectors");
  }

  TrainConfig config() const {
    TrainConfig c;
    c.kind = parse_kind(kind);
    c.seed = seed;
    c.delexicalized = delexicalized;
    if (paper_dims) c.dims = NeuralDims::paper();
    if (epochs_sgd) c.epochs_sgd = *epochs_sgd;
    if (epochs_amsgrad) c.epochs_amsgrad = *epochs_amsgrad;
    if (epochs_perceptron) c.epochs_perceptron = *epochs_perceptron;
    try {
      c.check();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

int cmd_convert(const std::string& direction, const std::string& in, const std::string& out) {
  std::string text = read_input(in);
  if (direction == "ud2dag") {
    std::vector<DagDocument> docs;
    for (const auto& s : parse_conllu(text)) {
      DagDocument d;
      d.graph = ud_to_dag(s);
      d.sentence.comments = s.comments;
      for (const auto& t : s.tokens)
        if (!t.id.is_null()) d.sentence.tokens.push_back(t);
      docs.push_back(std::move(d));
    }
    write_output(out, write_dag_documents(docs));
  } else {
    std::vector<Sentence> sents;
    for (const auto& d : read_dag_documents(text)) sents.push_back(dag_to_ud(d.graph, d.sentence));
    write_output(out, write_conllu(sents));
  }
  return 0;
}

int cmd_train(const std::string& train_path, const std::string& dev_path, const std::string& out, int folds,
              const ConfigFlags& flags) {
  TrainConfig c = flags.config();
  auto corpus = read_corpus(train_path);
  if (corpus.empty()) throw TrainingError("empty training corpus");
  if (!dev_path.empty()) {
    auto dev = read_corpus(dev_path);
    TrainOptions opt;
    opt.dev = &dev;
    opt.log = &std::cerr;
    opt.vectors_path = flags.vectors;
    opt.limit_vectors = flags.limit_vectors;
    train(corpus, c, opt).save_file(out);
    return 0;
  }
  if (!flags.vectors.empty()) std::cerr << "warning: --vectors is ignored during cross-validation\n";
  auto r = cross_validate(corpus, c, folds, &std::cerr);
  std::cerr << "best fold " << r.best_fold + 1 << " las=" << r.fold_las[r.best_fold] << '\n';
  r.model.save_file(out);
  return 0;
}

int cmd_cross_validate(const std::string& train_path, const std::string& out, int folds, bool json,
                       const ConfigFlags& flags) {
  TrainConfig c = flags.config();
  auto corpus = read_corpus(train_path);
  auto r = cross_validate(corpus, c, folds, &std::cerr);
  if (json) {
    nlohmann::json j;
    j["fold_las"] = r.fold_las;
    j["best_fold"] = r.best_fold + 1;
    std::cout << j.dump(2) << '\n';
  } else {
    for (std::size_t k = 0; k < r.fold_las.size(); ++k) std::cout << "fold " << k + 1 << '\t' << r.fold_las[k] << '\n';
    std::cout << "best\t" << r.best_fold + 1 << '\n';
  }
  if (!out.empty()) r.model.save_file(out);
  return 0;
}

/// Reconstructs each sentence's gold graph through the oracle and the
/// transition system, then converts it back.
Sentence oracle_parse_sentence(const Sentence& s, std::ostream* trace) {
  DagGraph gold = ud_to_dag(s);
  auto ts = oracle_parse(gold);
  if (trace) {
    ParserState st = initial_state(terminal_infos(gold));
    for (const auto& t : ts) {
      *trace << trace_line(st, t, 0) << '\n';
      apply_in_place(st, t);
    }
  }
  return dag_to_ud(replay(terminal_infos(gold), ts).graph, s);
}

int cmd_parse(const std::string& model_path, bool use_oracle, const std::string& in, const std::string& out,
              const std::string& trace_path, unsigned threads) {
  if (!use_oracle && model_path.empty()) throw UsageError("parse needs --model or --oracle");
  Model model;
  if (!use_oracle) model = Model::load_file(model_path);
  auto corpus = read_corpus(in);
  const bool tracing = !trace_path.empty();
  struct Out {
    Sentence s;
    std::string trace;
  };
  auto results = parallel_map<Out>(
      corpus.size(),
      [&](std::size_t i) {
        std::ostringstream tr;
        std::ostream* t = tracing ? &tr : nullptr;
        Out o;
        try {
          o.s = use_oracle ? oracle_parse_sentence(corpus[i], t) : model.parse(corpus[i], t);
        } catch (const std::exception& e) {
          throw std::runtime_error("sentence " + sentence_id(corpus[i], i) + ": " + e.what());
        }
        if (tracing) o.trace = "# " + sentence_id(corpus[i], i) + '\n' + tr.str() + '\n';
        return o;
      },
      threads);
  std::vector<Sentence> sys;
  std::string trace;
  for (auto& r : results) {
    sys.push_back(std::move(r.s));
    trace += r.trace;
  }
  write_output(out, write_conllu(sys));
  if (tracing) {
    if (trace_path == "-") std::cerr << trace;
    else write_output(trace_path, trace);
  }
  return 0;
}

nlohmann::json result_json(const EvalResult& r) {
  return {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1},
          {"correct", r.correct},     {"system", r.system}, {"gold", r.gold}};
}

int cmd_evaluate(const std::string& gold_path, const std::string& sys_path, bool json) {
  auto r = evaluate(read_corpus(gold_path), read_corpus(sys_path));
  if (json) {
    nlohmann::json j{{"las", result_json(r.las)},
                     {"enhanced_las", result_json(r.enhanced)},
                     {"enhanced_percentage", r.enhanced_percentage},
                     {"sentences", r.sentences},
                     {"words", r.words}};
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  auto line = [](const char* name, const EvalResult& e) {
    std::cout << name << "\tP=" << e.precision << "\tR=" << e.recall << "\tF1=" << e.f1 << "\t(" << e.correct << '/'
              << e.system << '/' << e.gold << ")\n";
  };
  line("LAS", r.las);
  line("ELAS", r.enhanced);
  std::cout << "enhanced%\t" << r.enhanced_percentage << "\nsentences\t" << r.sentences << "\nwords\t" << r.words
            << '\n';
  return 0;
}

/// For every sentence: does the oracle's trajectory rebuild the gold graph?
/// Exit 1 if any does not.
int cmd_oracle_check(const std::string& in, bool features, bool delexicalized) {
  auto corpus = read_corpus(in);
  FeatureExtractor fx(delexicalized);
  std::size_t failures = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto id = sentence_id(corpus[i], i);
    try {
      DagGraph gold = ud_to_dag(corpus[i]);
      auto ts = oracle_parse(gold);
      ParserState st = initial_state(terminal_infos(gold));
      for (const auto& t : ts) {
        if (features) std::cout << "# " << id << " step " << st.steps << ' ' << t.str() << '\n' << fx.dump(fx.extract(st));
        apply_in_place(st, t);
      }
      bool ok = st.finished && matches_gold(st.graph, gold);
      std::cout << id << '\t' << (ok ? "PASS" : "FAIL") << '\t' << ts.size() << " transitions\n";
      failures += !ok;
    } catch (const std::exception& e) {
      std::cout << id << "\tFAIL\t" << e.what() << '\n';
      ++failures;
    }
  }
  std::cout << "total " << corpus.size() << " pass " << corpus.size() - failures << " fail " << failures << '\n';
  return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dependency graph parser over a unified DAG representation"};
  app.require_subcommand(1);
  app.footer("Default data directory: $UDDAG_DATA_DIR, currently " + default_data_dir().string());

  std::string in = "-", out = "-";

  auto* conv = app.add_subcommand("convert", "convert between CoNLL-U and the debug DAG format");
  std::string direction;
  conv->add_option("direction", direction, "ud2dag or dag2ud")->required()->check(CLI::IsMember({"ud2dag", "dag2ud"}));
  conv->add_option("input", in, "input path or -");
  conv->add_option("output", out, "output path or -");

  auto* tr = app.add_subcommand("train", "train a model");
  std::string train_path, dev_path, model_out;
  int folds = 10;
  ConfigFlags flags;
  tr->add_option("train", train_path, "training treebank (CoNLL-U)")->required();
  tr->add_option("--dev", dev_path, "development treebank; without it, cross-validation picks the model");
  tr->add_option("-o,--out", model_out, "model file to write")->required();
  tr->add_option("--folds", folds, "cross-validation folds")->check(CLI::Range(3, 1000));
  flags.add(tr);

  auto* cv = app.add_subcommand("cross-validate", "report per-fold validation LAS");
  bool json = false;
  cv->add_option("train", train_path, "treebank (CoNLL-U)")->required();
  cv->add_option("-o,--out", model_out, "write the best fold's model here");
  cv->add_option("--folds", folds, "folds")->check(CLI::Range(3, 1000));
  cv->add_flag("--json", json, "machine-readable output");
  flags.add(cv);

  auto* pa = app.add_subcommand("parse", "parse CoNLL-U input (gold tokens; existing heads are ignored)");
  std::string model_path, trace_path;
  bool use_oracle = false;
  unsigned threads = 0;
  pa->add_option("--model", model_path, "model file");
  pa->add_flag("--oracle", use_oracle, "follow the oracle on the input's own gold graph instead of a model");
  pa->add_option("--trace", trace_path, "write per-step transition traces here (- for stderr)");
  pa->add_option("--threads", threads, "worker threads (0 = hardware concurrency)");
  pa->add_option("input", in, "input path or -");
  pa->add_option("output", out, "output path or -");

  auto* ev = app.add_subcommand("evaluate", "LAS and enhanced LAS of a system file against gold");
  std::string gold_path, sys_path;
  ev->add_option("gold", gold_path, "gold CoNLL-U")->required();
  ev->add_option("system", sys_path, "system CoNLL-U")->required();
  ev->add_flag("--json", json, "machine-readable report");

  auto* oc = app.add_subcommand("oracle-check", "check that the oracle rebuilds every gold graph");
  bool dump_features = false, delex = false;
  oc->add_option("input", in, "input path or -");
  oc->add_flag("--features", dump_features, "print the feature vector at every step");
  oc->add_flag("--delexicalized", delex, "delexicalized feature set for --features");

  auto* rm = app.add_subcommand("resolve-model", "pick a model from a treebank manifest");
  std::string manifest, language, treebank;
  rm->add_option("manifest", manifest, "manifest file")->required();
  rm->add_option("language", language, "language code")->required();
  rm->add_option("treebank", treebank, "treebank name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*conv) return cmd_convert(direction, in, out);
    if (*tr) return cmd_train(train_path, dev_path, model_out, folds, flags);
    if (*cv) return cmd_cross_validate(train_path, model_out, folds, json, flags);
    if (*pa) return cmd_parse(model_path, use_oracle, in, out, trace_path, threads);
    if (*ev) return cmd_evaluate(gold_path, sys_path, json);
    if (*oc) return cmd_oracle_check(in, dump_features, delex);
    if (*rm) {
      std::cout << resolve_model(read_manifest_file(manifest), language, treebank) << '\n';
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
