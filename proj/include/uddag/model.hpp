// Trained parser model: configuration, vocabulary, action inventory and
// either perceptron weights or neural parameters, plus the binary model
// file format.
//
// File layout (all integers little-endian):
//   8 bytes   magic "UDDAGMDL"
//   u32       format version
//   u64       header length L
//   L bytes   JSON header (kind, config, labels, vocabulary, parameter shapes)
//   payload   neural: per parameter, value then AMSGrad m, v, vhat when
//             "optimizer_state" is set, each rows*cols f64 column-major;
//             perceptron: u64 feature count, then per feature (ascending
//             id) u64 id followed by one f64 per action.

#ifndef UDDAG_MODEL_HPP
#define UDDAG_MODEL_HPP

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "uddag/conllu.hpp"
#include "uddag/convert.hpp"
#include "uddag/features.hpp"
#include "uddag/neural.hpp"
#include "uddag/optimizer.hpp"
#include "uddag/perceptron.hpp"
#include "uddag/transition.hpp"
#include "uddag/vocabulary.hpp"

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

namespace uddag {

enum class ModelKind { perceptron, neural };

inline const char* kind_name(ModelKind k) { return k == ModelKind::neural ? "neural" : "perceptron"; }

inline ModelKind parse_kind(const std::string& s) {
  if (s == "neural") return ModelKind::neural;
  if (s == "perceptron") return ModelKind::perceptron;
  throw std::invalid_argument("unknown model kind: " + s);
}

struct TrainConfig {
  ModelKind kind = ModelKind::neural;
  int epochs_sgd = 50;
  double lr_sgd = 0.1;
  std::optional<int> epochs_amsgrad;  // unset: 250, or 750 below 100 training sentences
  AmsgradHyper amsgrad;
  int minibatch = 100;  // transitions, rounded up to a sentence boundary
  double weight_decay = 1e-5;
  NeuralRegularization reg;
  NeuralDims dims;
  int epochs_perceptron = 10;
  std::uint64_t seed = 1;
  bool delexicalized = false;
  std::size_t oracle_budget = 5000;  // states per reachability check while training

  int amsgrad_epochs(std::size_t train_sentences) const {
    if (epochs_amsgrad) return *epochs_amsgrad;
    return train_sentences < 100 ? 750 : 250;
  }

  void check() const {
    auto prob = [](double p, const char* what) {
      if (!(p >= 0 && p <= 1)) throw std::invalid_argument(std::string(what) + " must be in [0,1]");
    };
    prob(reg.dropout_mlp, "dropout_mlp");
    prob(reg.dropout_recurrent, "dropout_recurrent");
    prob(reg.node_dropout, "node_dropout");
    if (reg.word_dropout_alpha < 0) throw std::invalid_argument("word_dropout_alpha must be >= 0");
    if (reg.dropout_mlp >= 1 || reg.dropout_recurrent >= 1) throw std::invalid_argument("dropout must be < 1");
    for (int d : {dims.word, dims.lemma, dims.upos, dims.xpos, dims.shape, dims.prefix, dims.suffix, dims.punct,
                  dims.ner, dims.action, dims.edge, dims.mlp_dim})
      if (d <= 0) throw std::invalid_argument("dimensions must be positive");
    if (dims.lstm_layers < 0 || dims.mlp_layers < 0) throw std::invalid_argument("layer counts must be >= 0");
    if (dims.lstm_layers > 0 && (dims.lstm_dim < 2 || dims.lstm_dim % 2))
      throw std::invalid_argument("lstm_dim must be even and positive");
    if (minibatch <= 0) throw std::invalid_argument("minibatch must be positive");
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j;
  j["kind"] = kind_name(c.kind);
  j["epochs_sgd"] = c.epochs_sgd;
  j["lr_sgd"] = c.lr_sgd;
  j["epochs_amsgrad"] = c.epochs_amsgrad ? nlohmann::json(*c.epochs_amsgrad) : nlohmann::json(nullptr);
  j["amsgrad"] = {{"alpha", c.amsgrad.alpha}, {"beta1", c.amsgrad.beta1}, {"beta2", c.amsgrad.beta2},
                  {"eps", c.amsgrad.eps}};
  j["minibatch"] = c.minibatch;
  j["weight_decay"] = c.weight_decay;
  j["dropout_mlp"] = c.reg.dropout_mlp;
  j["dropout_recurrent"] = c.reg.dropout_recurrent;
  j["word_dropout_alpha"] = c.reg.word_dropout_alpha;
  j["node_dropout"] = c.reg.node_dropout;
  const auto& d = c.dims;
  j["dims"] = {{"word", d.word},           {"lemma", d.lemma},       {"upos", d.upos},
               {"xpos", d.xpos},           {"shape", d.shape},       {"prefix", d.prefix},
               {"suffix", d.suffix},       {"punct", d.punct},       {"ner", d.ner},
               {"action", d.action},       {"edge", d.edge},         {"lstm_layers", d.lstm_layers},
               {"lstm_dim", d.lstm_dim},   {"mlp_layers", d.mlp_layers}, {"mlp_dim", d.mlp_dim}};
  j["epochs_perceptron"] = c.epochs_perceptron;
  j["seed"] = c.seed;
  j["delexicalized"] = c.delexicalized;
  j["oracle_budget"] = c.oracle_budget;
  return j;
}

inline TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.kind = parse_kind(j.at("kind").get<std::string>());
  c.epochs_sgd = j.at("epochs_sgd");
  c.lr_sgd = j.at("lr_sgd");
  if (!j.at("epochs_amsgrad").is_null()) c.epochs_amsgrad = j.at("epochs_amsgrad").get<int>();
  const auto& a = j.at("amsgrad");
  c.amsgrad = {a.at("alpha"), a.at("beta1"), a.at("beta2"), a.at("eps")};
  c.minibatch = j.at("minibatch");
  c.weight_decay = j.at("weight_decay");
  c.reg.dropout_mlp = j.at("dropout_mlp");
  c.reg.dropout_recurrent = j.at("dropout_recurrent");
  c.reg.word_dropout_alpha = j.at("word_dropout_alpha");
  c.reg.node_dropout = j.at("node_dropout");
  const auto& d = j.at("dims");
  auto& o = c.dims;
  o.word = d.at("word");
  o.lemma = d.at("lemma");
  o.upos = d.at("upos");
  o.xpos = d.at("xpos");
  o.shape = d.at("shape");
  o.prefix = d.at("prefix");
  o.suffix = d.at("suffix");
  o.punct = d.at("punct");
  o.ner = d.at("ner");
  o.action = d.at("action");
  o.edge = d.at("edge");
  o.lstm_layers = d.at("lstm_layers");
  o.lstm_dim = d.at("lstm_dim");
  o.mlp_layers = d.at("mlp_layers");
  o.mlp_dim = d.at("mlp_dim");
  c.epochs_perceptron = j.at("epochs_perceptron");
  c.seed = j.at("seed");
  c.delexicalized = j.at("delexicalized");
  c.oracle_budget = j.at("oracle_budget");
  return c;
}

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kModelMagic[8] = {'U', 'D', 'D', 'A', 'G', 'M', 'D', 'L'};
inline constexpr std::uint32_t kModelVersion = 1;

/// Channel values of one token, in kTokenChannels order.
inline std::array<std::string, 7> token_channel_values(const TerminalInfo& t) {
  return {t.text, t.lemma, t.upos, t.xpos, word_shape(t.text), prefix_chars(t.text, 1), suffix_chars(t.text, 3)};
}

class Model {
 public:
  ModelKind kind = ModelKind::perceptron;
  TrainConfig config;
  ActionSet actions;
  Vocabulary vocab;
  FeatureExtractor fx;
  NeuralNet net;
  Perceptron perceptron;

  Model() = default;

  /// Fresh model over `labels` and `vocabulary`; neural parameters are
  /// randomly initialized from `rng`.
  Model(const TrainConfig& cfg, const std::set<std::string>& labels, Vocabulary vocabulary, std::mt19937_64& rng)
      : kind(cfg.kind), config(cfg), actions(labels), vocab(std::move(vocabulary)), fx(cfg.delexicalized) {
    config.check();
    vocab.freeze();
    if (kind == ModelKind::neural) {
      net = NeuralNet(config.dims, fx, vocab, actions.size());
      net.init(rng);
    } else {
      perceptron = Perceptron(actions.size());
    }
  }

  TokenIds token_ids(const std::vector<TerminalInfo>& terms) const {
    TokenIds ids;
    const auto& channels = net.token_channels();
    ids.ids.assign(channels.size(), std::vector<int>(terms.size() + 1, SymbolTable::kAbsent));
    for (const auto& t : terms) {
      auto values = token_channel_values(t);
      for (std::size_t c = 0; c < channels.size(); ++c) {
        auto k = std::find(kTokenChannels.begin(), kTokenChannels.end(), channels[c]) - kTokenChannels.begin();
        ids.ids[c][t.position] = vocab.at(channels[c]).lookup(values[k]);
      }
    }
    return ids;
  }

  StepInput step_input(const FeatureVector& fv) const {
    StepInput in;
    in.anchors = fv.anchors;
    const auto& idx = net.cat_templates();
    const auto& ch = net.cat_channels();
    in.cat_ids.resize(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) in.cat_ids[j] = vocab.at(ch[j]).lookup(fv.categorical[idx[j]]);
    in.numeric = fv.numeric;
    return in;
  }

  NeuralNet::Encoding encode(const std::vector<TerminalInfo>& terms) const {
    return net.encode(token_ids(terms), config.reg, vocab, nullptr);
  }

  /// One score per action index: log-probabilities for the neural kind,
  /// raw linear scores for the perceptron.
  std::vector<double> score(const FeatureVector& fv, const NeuralNet::Encoding* enc) const {
    if (kind == ModelKind::perceptron) return perceptron.score(perceptron_features(fx, fv));
    if (!enc) throw std::logic_error("neural scoring needs a sentence encoding");
    auto sc = net.forward_step(*enc, step_input(fv), config.reg, nullptr);
    Eigen::VectorXd lp = log_softmax(sc.logits);
    return {lp.data(), lp.data() + lp.size()};
  }

  GreedyResult parse_terminals(const std::vector<TerminalInfo>& terms, std::ostream* trace = nullptr) const {
    std::optional<NeuralNet::Encoding> enc;
    if (kind == ModelKind::neural) enc = encode(terms);
    auto scorer = [&](const ParserState& st) { return score(fx.extract(st), enc ? &*enc : nullptr); };
    return run_greedy(initial_state(terms), actions, scorer, default_step_limit(static_cast<int>(terms.size())),
                      trace);
  }

  /// Predicted CoNLL-U for `input` (its gold columns are ignored).
  Sentence parse(const Sentence& input, std::ostream* trace = nullptr) const {
    auto r = parse_terminals(terminal_infos(input), trace);
    return dag_to_ud(r.graph, input);
  }

  // -------------------------------------------------------------- file I/O

  void save(std::ostream& os, bool optimizer_state = true) const {
    nlohmann::json h;
    h["kind"] = kind_name(kind);
    h["config"] = to_json(config);
    h["labels"] = actions.labels();
    nlohmann::json v = nlohmann::json::object();
    for (const auto& [c, table] : vocab.channels) {
      nlohmann::json entries = nlohmann::json::array();
      for (std::size_t i = 2; i < table.size(); ++i)
        entries.push_back({table.symbol(static_cast<int>(i)), table.count(static_cast<int>(i))});
      v[c] = entries;
    }
    h["vocabulary"] = v;
    if (kind == ModelKind::neural) {
      nlohmann::json shapes = nlohmann::json::array();
      for (const auto& p : net.params()) shapes.push_back({p.name, p.value.rows(), p.value.cols()});
      h["params"] = shapes;
      h["optimizer_state"] = optimizer_state;
    } else {
      h["instances"] = perceptron.instances();
    }
    const std::string header = h.dump();
    os.write(kModelMagic, 8);
    put<std::uint32_t>(os, kModelVersion);
    put<std::uint64_t>(os, header.size());
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    if (kind == ModelKind::neural) {
      for (const auto& p : net.params()) {
        put_matrix(os, p.value);
        if (!optimizer_state) continue;
        bool has = p.m.size() == p.value.size();
        Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols());
        put_matrix(os, has ? p.m : zero);
        put_matrix(os, has ? p.v : zero);
        put_matrix(os, has ? p.vhat : zero);
      }
    } else {
      std::vector<std::uint64_t> keys;
      keys.reserve(perceptron.table().size());
      for (const auto& [k, e] : perceptron.table()) keys.push_back(k);
      std::sort(keys.begin(), keys.end());
      put<std::uint64_t>(os, keys.size());
      for (auto k : keys) {
        put<std::uint64_t>(os, k);
        for (double w : perceptron.table().at(k).w) put<double>(os, w);
      }
    }
    if (!os) throw ModelFormatError("failed writing model");
  }

  static Model load(std::istream& is) {
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kModelMagic, 8) != 0) throw ModelFormatError("not a model file");
    auto version = get<std::uint32_t>(is);
    if (version != kModelVersion)
      throw ModelFormatError("model format version " + std::to_string(version) + " is not supported (expected " +
                             std::to_string(kModelVersion) + ")");
    auto len = get<std::uint64_t>(is);
    if (len > (1ULL << 32)) throw ModelFormatError("corrupt model header");
    std::string header(len, '\0');
    if (!is.read(header.data(), static_cast<std::streamsize>(len))) throw ModelFormatError("truncated model header");
    nlohmann::json h;
    try {
      h = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception& e) {
      throw ModelFormatError(std::string("corrupt model header: ") + e.what());
    }
    Model m;
    try {
      m.kind = parse_kind(h.at("kind").get<std::string>());
      m.config = config_from_json(h.at("config"));
      m.actions = ActionSet(h.at("labels").get<std::set<std::string>>());
      for (const auto& [c, entries] : h.at("vocabulary").items()) {
        auto& table = m.vocab[c];
        for (const auto& e : entries) table.add(e.at(0).get<std::string>(), e.at(1).get<std::uint64_t>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw ModelFormatError(std::string("corrupt model header: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw ModelFormatError(std::string("corrupt model header: ") + e.what());
    }
    m.vocab.freeze();
    m.fx = FeatureExtractor(m.config.delexicalized);
    if (m.kind == ModelKind::neural) {
      m.net = NeuralNet(m.config.dims, m.fx, m.vocab, m.actions.size());
      const auto& shapes = h.at("params");
      if (shapes.size() != m.net.params().size()) throw ModelFormatError("parameter count mismatch");
      const bool opt = h.value("optimizer_state", false);
      for (std::size_t i = 0; i < shapes.size(); ++i) {
        auto& p = m.net.params()[i];
        if (shapes[i].at(0).get<std::string>() != p.name || shapes[i].at(1).get<Eigen::Index>() != p.value.rows() ||
            shapes[i].at(2).get<Eigen::Index>() != p.value.cols())
          throw ModelFormatError("parameter shape mismatch for " + p.name);
        get_matrix(is, p.value);
        if (opt) {
          p.m = p.v = p.vhat = Eigen::MatrixXd(p.value.rows(), p.value.cols());
          get_matrix(is, p.m);
          get_matrix(is, p.v);
          get_matrix(is, p.vhat);
        }
      }
    } else {
      m.perceptron = Perceptron(m.actions.size());
      auto count = get<std::uint64_t>(is);
      for (std::uint64_t i = 0; i < count; ++i) {
        auto k = get<std::uint64_t>(is);
        std::vector<double> w(m.actions.size());
        for (auto& x : w) x = get<double>(is);
        m.perceptron.set_weights(k, std::move(w));
      }
      m.perceptron.mark_averaged(h.value("instances", std::uint64_t{0}));
    }
    if (is.peek() != std::char_traits<char>::eof()) throw ModelFormatError("trailing bytes after model payload");
    return m;
  }

  void save_file(const std::string& path, bool optimizer_state = true) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ModelFormatError("cannot write " + path);
    save(os, optimizer_state);
  }

  static Model load_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ModelFormatError("cannot read " + path);
    return load(is);
  }

 private:
  template <class T>
  static void put(std::ostream& os, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    os.write(buf, sizeof(T));
  }

  template <class T>
  static T get(std::istream& is) {
    char buf[sizeof(T)];
    if (!is.read(buf, sizeof(T))) throw ModelFormatError("truncated model file");
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }

  static void put_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
    os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  }

  static void get_matrix(std::istream& is, Eigen::MatrixXd& m) {
    if (!is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double))))
      throw ModelFormatError("truncated model file");
  }
};

class VectorFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a text vector file ("count dim" header, then "token v1 .. vdim"
/// lines) and copies vectors of symbols in `table` into the matching
/// columns of `emb`. At most `limit` vectors are read. Returns the number
/// of columns initialized.
inline std::size_t load_pretrained_vectors(std::istream& in, const SymbolTable& table, Eigen::MatrixXd& emb,
                                           std::size_t limit = 250000) {
  std::string line;
  if (!std::getline(in, line)) throw VectorFileError("empty vector file");
  std::istringstream head(line);
  long long count = 0, dim = 0;
  if (!(head >> count >> dim) || dim <= 0) throw VectorFileError("bad vector file header: " + line);
  if (dim != emb.rows())
    throw VectorFileError("vector dimension " + std::to_string(dim) + " does not match word embedding dimension " +
                          std::to_string(emb.rows()));
  std::vector<char> done(emb.cols(), 0);
  std::size_t read = 0, filled = 0;
  while (read < limit && std::getline(in, line)) {
    if (line.empty()) continue;
    ++read;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(dim));
    double x;
    while (ls >> x) v.push_back(x);
    if (static_cast<long long>(v.size()) != dim)
      throw VectorFileError("vector for '" + token + "' has " + std::to_string(v.size()) + " values, expected " +
                            std::to_string(dim));
    int id = table.lookup(token);
    if (id < 2 || id >= emb.cols() || done[id]) continue;
    for (long long k = 0; k < dim; ++k) emb(k, id) = v[static_cast<std::size_t>(k)];
    done[id] = 1;
    ++filled;
  }
  return filled;
}

inline std::size_t load_pretrained_vectors(const std::string& path, const SymbolTable& table, Eigen::MatrixXd& emb,
                                           std::size_t limit = 250000) {
  std::ifstream in(path);
  if (!in) throw VectorFileError("cannot read " + path);
  return load_pretrained_vectors(in, table, emb, limit);
}

}  // namespace uddag

#endif  // UDDAG_MODEL_HPP
