#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "common.hpp"
#include "uddag/train.hpp"

using namespace uddag;

namespace {

TrainConfig small_config(ModelKind kind, int lstm_layers = 1) {
  TrainConfig c;
  c.kind = kind;
  c.dims.word = 8;
  c.dims.lemma = 6;
  c.dims.upos = 5;
  c.dims.xpos = 5;
  c.dims.edge = 5;
  c.dims.lstm_layers = lstm_layers;
  c.dims.lstm_dim = 10;
  c.dims.mlp_dim = 12;
  return c;
}

Model fresh(const TrainConfig& c, const std::vector<Sentence>& corpus, std::uint64_t seed = 3) {
  auto items = prepare_items(corpus);
  auto labels = collect_labels(items);
  std::mt19937_64 rng(seed);
  return Model(c, labels, build_vocabulary(items, labels, c.delexicalized), rng);
}

std::string bytes(const Model& m) {
  std::ostringstream os;
  m.save(os);
  return os.str();
}

// "x x x x": four tokens with the same form, lemma and tags.
const Sentence& four_x() {
  static const Sentence s = test::parse_one(
      "1\tx\tx\tX\tX\t_\t0\troot\t0:root\t_\n"
      "2\tx\tx\tX\tX\t_\t1\tdep\t1:dep\t_\n"
      "3\tx\tx\tX\tX\t_\t1\tdep\t1:dep\t_\n"
      "4\tx\tx\tX\tX\t_\t1\tdep\t1:dep\t_\n\n");
  return s;
}

}  // namespace

TEST(Perceptron, FreshModelScoresZero) {
  auto m = fresh(small_config(ModelKind::perceptron), {test::sentence("control")});
  auto st = initial_state(test::sentence("control"));
  for (double s : m.score(m.fx.extract(st), nullptr)) EXPECT_EQ(s, 0.0);
}

// Averaged weights equal the mean of weight snapshots taken directly after
// each of 10 updates.
TEST(Perceptron, AveragingMatchesSnapshotMean) {
  const std::size_t actions = 4;
  Perceptron p(actions);
  std::mt19937_64 rng(1);
  const std::vector<std::uint64_t> universe{11, 22, 33, 44, 55};
  std::map<std::uint64_t, std::vector<double>> sum;
  for (int i = 0; i < 10; ++i) {
    std::vector<std::uint64_t> f;
    for (auto u : universe)
      if (rng() % 2) f.push_back(u);
    p.update(f, rng() % actions, rng() % actions);
    for (auto u : universe) {
      auto w = p.score({u});
      auto& s = sum[u];
      s.resize(actions, 0.0);
      for (std::size_t a = 0; a < actions; ++a) s[a] += w[a];
    }
  }
  EXPECT_EQ(p.instances(), 10u);
  p.average();
  for (auto u : universe) {
    auto w = p.score({u});
    for (std::size_t a = 0; a < actions; ++a) EXPECT_NEAR(w[a], sum[u][a] / 10, 1e-12) << u << ' ' << a;
  }
}

TEST(Neural, ScoresAreLogProbabilities) {
  auto m = fresh(small_config(ModelKind::neural), {test::sentence("control")});
  const auto terms = terminal_infos(ud_to_dag(test::sentence("control")));
  auto enc = m.encode(terms);
  auto st = initial_state(terms);
  auto a = m.score(m.fx.extract(st), &enc);
  double total = 0;
  for (double s : a) total += std::exp(s);
  EXPECT_NEAR(total, 1.0, 1e-9);
  EXPECT_EQ(a, m.score(m.fx.extract(st), &enc));
}

TEST(Neural, LogSoftmaxMask) {
  Eigen::VectorXd x(3);
  x << 1000, 1001, -5;
  std::vector<char> mask{1, 1, 0};
  auto lp = log_softmax(x, &mask);
  EXPECT_TRUE(std::isinf(lp[2]));
  EXPECT_NEAR(std::exp(lp[0]) + std::exp(lp[1]), 1.0, 1e-12);
}

TEST(Neural, DelexicalizedHasNoLexicalEmbeddings) {
  auto c = small_config(ModelKind::neural);
  c.delexicalized = true;
  auto m = fresh(c, {test::sentence("control")});
  for (const char* ch : {"w", "m", "t", "^", "$"}) EXPECT_FALSE(m.net.has_embedding(ch)) << ch;
  EXPECT_TRUE(m.net.has_embedding("u"));
  auto full = fresh(small_config(ModelKind::neural), {test::sentence("control")});
  EXPECT_TRUE(full.net.has_embedding("w"));
}

TEST(Neural, LossIsZeroWhenEveryValidActionIsOptimal) {
  Eigen::VectorXd x(4);
  x << 0.3, -2, 5, 1;
  std::vector<char> valid{1, 0, 1, 1};
  Eigen::VectorXd d;
  EXPECT_NEAR(optimal_set_loss(x, valid, valid, d), 0.0, 1e-12);
  EXPECT_NEAR(d.norm(), 0.0, 1e-12);
  // One optimal action: the usual cross-entropy.
  std::vector<char> one{0, 0, 1, 0};
  auto lp = log_softmax(x, &valid);
  EXPECT_NEAR(optimal_set_loss(x, valid, one, d), -lp[2], 1e-12);
  EXPECT_NEAR(d[2], std::exp(lp[2]) - 1, 1e-12);
  EXPECT_EQ(d[1], 0);
}

TEST(Neural, GradientCheckMlpOnly) {
  auto m = fresh(small_config(ModelKind::neural, 0), {test::sentence("control")});
  auto batch = gradient_batch(m, {test::sentence("control")});
  auto r = gradient_check(m.net, m.vocab, batch, 300);
  EXPECT_TRUE(r.finite);
  EXPECT_EQ(r.checked, 300u);
  EXPECT_LT(r.max_relative_error, 1e-4) << r.worst;
}

TEST(Neural, GradientCheckWithBiLstm) {
  auto m = fresh(small_config(ModelKind::neural, 1), {test::sentence("dogs-bark")});
  auto batch = gradient_batch(m, {test::sentence("dogs-bark")});
  auto r = gradient_check(m.net, m.vocab, batch, 300);
  EXPECT_TRUE(r.finite);
  EXPECT_LT(r.max_relative_error, 1e-4) << r.worst;
}

TEST(Neural, AllAbsentInputsStayFinite) {
  auto m = fresh(small_config(ModelKind::neural), {test::sentence("control")});
  auto batch = gradient_batch(m, {test::sentence("control")});
  for (auto& g : batch) {
    for (auto& ch : g.ids.ids) std::fill(ch.begin(), ch.end(), SymbolTable::kAbsent);
    for (auto& s : g.steps) {
      std::fill(s.cat_ids.begin(), s.cat_ids.end(), SymbolTable::kAbsent);
      std::fill(s.numeric.begin(), s.numeric.end(), 0.0);
    }
  }
  zero_grads(m.net.params());
  double loss = batch_loss(m.net, m.vocab, batch, true);
  EXPECT_TRUE(std::isfinite(loss));
  for (const auto& p : m.net.params()) EXPECT_TRUE(p.grad.allFinite()) << p.name;
  EXPECT_EQ(batch_loss(m.net, m.vocab, {}, false), 0.0);
}

TEST(WordDropout, Probability) {
  EXPECT_NEAR(word_dropout_probability(4, 0.2), 0.2 / 4.2, 1e-15);
  EXPECT_NEAR(word_dropout_probability(4, 0.2), 0.047619, 1e-6);
  EXPECT_EQ(word_dropout_probability(4, 0), 0.0);
  EXPECT_NEAR(word_dropout_probability(1, 0.2), 1.0 / 6, 1e-15);
}

// The encoder's own dropout draws on a word seen 4 times.
TEST(WordDropout, EncoderRateWithinThreeSigma) {
  auto c = small_config(ModelKind::neural, 0);
  auto m = fresh(c, {four_x()});
  const auto& channels = m.net.token_channels();
  const auto w = std::find(channels.begin(), channels.end(), "w") - channels.begin();
  ASSERT_LT(static_cast<std::size_t>(w), channels.size());
  const auto ids = m.token_ids(terminal_infos(ud_to_dag(four_x())));
  ASSERT_EQ(m.vocab.at("w").count(ids.ids[w][1]), 4u);
  NeuralRegularization reg{0, 0, 0.2, 0};
  std::mt19937_64 rng(1);
  const int draws = 20000;
  int dropped = 0;
  for (int i = 0; i < draws / 4; ++i) {
    auto enc = m.net.encode(ids, reg, m.vocab, &rng);
    for (int t = 1; t <= 4; ++t) dropped += enc.ids.ids[w][t] == SymbolTable::kAbsent;
  }
  const double p = 0.2 / 4.2;
  const double sigma = std::sqrt(draws * p * (1 - p));
  EXPECT_NEAR(dropped, draws * p, 3 * sigma);
}

TEST(Amsgrad, HandExample) {
  // One step from zero moments: m = 0.1, v = v^ = 0.001, so the update is
  // 0.001 * 0.1 / sqrt(0.001).
  double w = 0, m = 0, v = 0, vhat = 0;
  amsgrad_step(w, 1.0, m, v, vhat, {});
  const double want = -0.001 * 0.1 / (std::sqrt(0.001) + 1e-8);
  EXPECT_NEAR(w, want, 1e-9 * std::abs(want));
  EXPECT_NEAR(w, -3.1623e-3, 1e-7);
  const double before = w;
  double m0 = 0, v0 = 0, vh0 = 0;
  amsgrad_step(w, 0.0, m0, v0, vh0, {});
  EXPECT_EQ(w, before);
}

TEST(Amsgrad, MaxSecondMomentNeverDecreases) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0, 1);
  double w = 0, m = 0, v = 0, vhat = 0, last = 0;
  for (int i = 0; i < 500; ++i) {
    amsgrad_step(w, g(rng) * (i < 100 ? 10 : 0.1), m, v, vhat, {});
    EXPECT_GE(vhat, last);
    EXPECT_GE(vhat, v);
    last = vhat;
  }
}

TEST(Model, SaveLoadKeepsScores) {
  const auto& s = test::sentence("control");
  for (auto kind : {ModelKind::neural, ModelKind::perceptron}) {
    auto c = small_config(kind);
    c.epochs_sgd = 1;
    c.epochs_amsgrad = 1;
    c.epochs_perceptron = 1;
    auto m = train({s}, c);
    std::stringstream ss;
    m.save(ss);
    auto back = Model::load(ss);
    EXPECT_EQ(back.vocab, m.vocab);
    EXPECT_EQ(bytes(back), bytes(m));
    const auto terms = terminal_infos(ud_to_dag(s));
    std::optional<NeuralNet::Encoding> e1, e2;
    if (kind == ModelKind::neural) {
      e1 = m.encode(terms);
      e2 = back.encode(terms);
    }
    auto st = initial_state(terms);
    EXPECT_EQ(m.score(m.fx.extract(st), e1 ? &*e1 : nullptr), back.score(back.fx.extract(st), e2 ? &*e2 : nullptr));
    EXPECT_EQ(write_conllu({m.parse(s)}), write_conllu({back.parse(s)}));
  }
}

TEST(Model, RejectsOtherVersionsAndGarbage) {
  auto m = fresh(small_config(ModelKind::perceptron), {test::sentence("hi")});
  std::string b = bytes(m);
  b[8] = static_cast<char>(b[8] + 1);  // version field follows the 8-byte magic
  std::istringstream bumped(b);
  EXPECT_THROW(Model::load(bumped), ModelFormatError);
  std::istringstream junk("not a model");
  EXPECT_THROW(Model::load(junk), ModelFormatError);
  std::string ok = bytes(m) + "x";
  std::istringstream trailing(ok);
  EXPECT_THROW(Model::load(trailing), ModelFormatError);
}

TEST(Model, VocabularyCountsSurviveSaving) {
  auto m = fresh(small_config(ModelKind::neural, 0), {four_x()});
  std::stringstream ss;
  m.save(ss, false);
  auto back = Model::load(ss);
  EXPECT_EQ(back.vocab.at("w").count(back.vocab.at("w").lookup("x")), 4u);
  EXPECT_TRUE(back.vocab.at("w").frozen());
}

TEST(PretrainedVectors, CoveredSymbolsAreCopied) {
  SymbolTable t;
  t.add("cat");
  t.add("dog");
  Eigen::MatrixXd emb = Eigen::MatrixXd::Zero(3, t.size());
  std::istringstream in("2 3\ncat 1 2 3\nzebra 4 5 6\n");
  EXPECT_EQ(load_pretrained_vectors(in, t, emb), 1u);
  EXPECT_EQ(emb(1, t.lookup("cat")), 2.0);
  EXPECT_EQ(emb.col(t.lookup("dog")).norm(), 0.0);
  std::istringstream wrong("1 4\ncat 1 2 3 4\n");
  EXPECT_THROW(load_pretrained_vectors(wrong, t, emb), VectorFileError);
  std::istringstream ragged("1 3\ncat 1 2\n");
  EXPECT_THROW(load_pretrained_vectors(ragged, t, emb), VectorFileError);
  std::istringstream limited("2 3\ncat 1 2 3\ndog 4 5 6\n");
  EXPECT_EQ(load_pretrained_vectors(limited, t, emb, 1), 1u);
}

TEST(TrainConfig, Defaults) {
  TrainConfig c;
  EXPECT_EQ(c.epochs_sgd, 50);
  EXPECT_EQ(c.epochs_perceptron, 10);
  EXPECT_EQ(c.seed, 1u);
  EXPECT_EQ(c.amsgrad_epochs(99), 750);
  EXPECT_EQ(c.amsgrad_epochs(100), 250);
  c.epochs_amsgrad = 7;
  EXPECT_EQ(c.amsgrad_epochs(10), 7);
  EXPECT_EQ(c.dims, NeuralDims::desk());
  EXPECT_EQ(NeuralDims::paper().lstm_layers, 2);
  EXPECT_NO_THROW(c.check());
  c.reg.dropout_mlp = 1.5;
  EXPECT_THROW(c.check(), std::invalid_argument);
  TrainConfig d;
  d.dims.lstm_dim = 7;
  EXPECT_THROW(d.check(), std::invalid_argument);
}

TEST(Training, DeterministicForFixedSeed) {
  auto corpus = load_memorization_corpus();
  corpus.resize(8);
  for (auto kind : {ModelKind::perceptron, ModelKind::neural}) {
    auto c = small_config(kind);
    c.epochs_perceptron = 2;
    c.epochs_sgd = 1;
    c.epochs_amsgrad = 1;
    EXPECT_EQ(bytes(train(corpus, c)), bytes(train(corpus, c))) << kind_name(kind);
  }
}

TEST(Training, LossFallsDuringSgd) {
  auto corpus = load_memorization_corpus();
  corpus.resize(10);
  auto c = small_config(ModelKind::neural);
  c.epochs_sgd = 4;
  c.epochs_amsgrad = 0;
  std::vector<EpochLog> history;
  TrainOptions opt;
  opt.history = &history;
  train(corpus, c, opt);
  ASSERT_EQ(history.size(), 4u);
  EXPECT_LT(history.back().loss, history.front().loss);
  for (const auto& e : history) EXPECT_GT(e.transitions, 0u);
}

TEST(Training, EmptyCorpusIsAnError) {
  EXPECT_THROW(train({}, small_config(ModelKind::perceptron)), TrainingError);
}
