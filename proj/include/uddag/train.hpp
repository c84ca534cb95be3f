// Training: vocabulary construction, oracle-driven epochs for both model
// kinds, dev-based checkpoint selection, cross-validation and the
// finite-difference gradient check.

#ifndef UDDAG_TRAIN_HPP
#define UDDAG_TRAIN_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "uddag/conllu.hpp"
#include "uddag/convert.hpp"
#include "uddag/evaluation.hpp"
#include "uddag/model.hpp"
#include "uddag/oracle.hpp"

namespace uddag {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainItem {
  std::string id;
  Sentence sentence;
  DagGraph gold;
  std::vector<TerminalInfo> terms;
};

inline std::string sentence_id(const Sentence& s, std::size_t index) {
  auto id = s.comment_value("sent_id");
  return id ? *id : "#" + std::to_string(index + 1);
}

inline std::vector<TrainItem> prepare_items(const std::vector<Sentence>& corpus) {
  std::vector<TrainItem> items;
  items.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    TrainItem it;
    it.id = sentence_id(corpus[i], i);
    it.sentence = corpus[i];
    try {
      it.gold = ud_to_dag(corpus[i]);
    } catch (const std::exception& e) {
      throw TrainingError("sentence " + it.id + ": " + e.what());
    }
    it.terms = terminal_infos(corpus[i]);
    items.push_back(std::move(it));
  }
  return items;
}

inline std::set<std::string> collect_labels(const std::vector<TrainItem>& items) {
  std::set<std::string> labels;
  for (const auto& it : items)
    for (const auto& e : it.gold.edges()) labels.insert(e.label);
  return labels;
}

/// Symbol counts for every embedded channel. Token channels count training
/// tokens; edge labels count gold edges.
inline Vocabulary build_vocabulary(const std::vector<TrainItem>& items, const std::set<std::string>& labels,
                                   bool delexicalized) {
  Vocabulary v;
  for (auto c : kTokenChannels)
    if (!(delexicalized && is_lexical_channel(c))) v[c];
  for (const auto& it : items)
    for (const auto& t : it.terms) {
      auto values = token_channel_values(t);
      for (std::size_t k = 0; k < kTokenChannels.size(); ++k)
        if (v.has(kTokenChannels[k])) v[kTokenChannels[k]].add(values[k]);
    }
  for (const auto& it : items)
    for (const auto& e : it.gold.edges()) v["e"].add(e.label);
  for (const auto& l : labels) v["e"].add(l);
  v["e"].add(kHeadLabel);
  for (int i = 0; i <= static_cast<int>(TransitionType::finish); ++i)
    v["A"].add(type_name(static_cast<TransitionType>(i)));
  v["p"].add("+");
  v["T"];
  v["N"];
  return v;
}

/// LAS F1 of `m` parsing `corpus` against it.
inline double corpus_las(const Model& m, const std::vector<Sentence>& corpus) {
  std::vector<Sentence> sys;
  sys.reserve(corpus.size());
  for (const auto& s : corpus) sys.push_back(m.parse(s));
  return las(corpus, sys).f1;
}

struct EpochLog {
  std::string phase;
  int epoch = 0;
  double loss = 0;  // mean per transition; perceptron: error rate
  std::size_t transitions = 0;
  std::optional<double> dev_las;
};

inline std::ostream& operator<<(std::ostream& os, const EpochLog& e) {
  os << "epoch=" << e.epoch << " phase=" << e.phase << " loss=" << e.loss << " transitions=" << e.transitions;
  if (e.dev_las) os << " dev_las=" << *e.dev_las;
  return os;
}

struct TrainOptions {
  const std::vector<Sentence>* dev = nullptr;
  std::ostream* log = nullptr;
  std::vector<EpochLog>* history = nullptr;
  std::string vectors_path;  // pre-trained word vectors, empty for none
  std::size_t limit_vectors = 250000;
};

namespace detail {

/// Index of the highest value among `allowed`; exact ties are broken
/// uniformly at random.
inline std::size_t argmax_random_tie(const std::vector<double>& scores, const std::vector<std::size_t>& allowed,
                                     std::mt19937_64& rng) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> ties;
  for (auto i : allowed) {
    if (scores[i] > best) {
      best = scores[i];
      ties.assign(1, i);
    } else if (scores[i] == best) {
      ties.push_back(i);
    }
  }
  if (ties.size() == 1) return ties[0];
  return ties[std::uniform_int_distribution<std::size_t>(0, ties.size() - 1)(rng)];
}

struct OracleStep {
  std::vector<std::size_t> optimal;
  std::vector<char> optimal_mask, valid_mask;
};

inline OracleStep oracle_step(const ParserState& st, Oracle& oracle, const ActionSet& actions, const std::string& id) {
  OracleStep s;
  s.optimal_mask.assign(actions.size(), 0);
  s.valid_mask.assign(actions.size(), 0);
  std::vector<Transition> best;
  try {
    best = oracle.preferred(st);
  } catch (const std::exception& e) {
    throw TrainingError("oracle failed on sentence " + id + ": " + e.what());
  }
  for (const auto& t : best) {
    auto i = actions.index(t);
    if (!i) throw TrainingError("sentence " + id + ": transition " + t.str() + " outside the action set");
    s.optimal.push_back(*i);
    s.optimal_mask[*i] = 1;
  }
  std::sort(s.optimal.begin(), s.optimal.end());
  for (std::size_t i = 0; i < actions.size(); ++i) s.valid_mask[i] = is_valid(st, actions.at(i)) ? 1 : 0;
  return s;
}

struct Choice {
  std::size_t predicted = 0;  // best valid transition
  std::size_t applied = 0;    // best optimal one; equals predicted when that is optimal
};

/// Transition applied while training: the classifier's choice within the
/// optimal set, except that a trajectory running past the step limit falls
/// back to the fixed oracle priority (which always terminates).
inline Choice training_choice(const ParserState& st, const ActionSet& actions, const OracleStep& os,
                              const std::vector<double>& scores, std::mt19937_64& rng) {
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < os.valid_mask.size(); ++i)
    if (os.valid_mask[i]) valid.push_back(i);
  Choice c;
  c.predicted = argmax_random_tie(scores, valid, rng);
  if (st.steps >= default_step_limit(st.n)) {
    std::vector<Transition> ts;
    for (auto i : os.optimal) ts.push_back(actions.at(i));
    c.applied = *actions.index(pick_by_priority(ts));
  } else {
    c.applied = os.optimal_mask[c.predicted] ? c.predicted : argmax_random_tie(scores, os.optimal, rng);
  }
  return c;
}

/// Per-sentence oracles kept across epochs so that their memo tables are
/// reused; all are dropped once the tables hold more than `cap` states.
class OracleCache {
 public:
  OracleCache(const std::vector<TrainItem>& items, std::size_t budget, std::size_t cap = 1000000)
      : items_(items), budget_(budget), cap_(cap), oracles_(items.size()) {}

  Oracle& get(std::size_t i) {
    if (!oracles_[i]) oracles_[i] = std::make_unique<Oracle>(items_[i].gold, budget_);
    return *oracles_[i];
  }

  void trim() {
    std::size_t total = 0;
    for (const auto& o : oracles_)
      if (o) total += o->memo_size();
    if (total > cap_)
      for (auto& o : oracles_) o.reset();
  }

 private:
  const std::vector<TrainItem>& items_;
  std::size_t budget_, cap_;
  std::vector<std::unique_ptr<Oracle>> oracles_;
};

inline void check_progress(const ParserState& st, const std::string& id) {
  if (st.steps > 20 * default_step_limit(st.n)) throw TrainingError("training trajectory of " + id + " does not end");
}

struct SentenceStats {
  double loss = 0;
  std::size_t transitions = 0;
  std::size_t errors = 0;
};

inline SentenceStats perceptron_sentence(Model& m, const TrainItem& item, Oracle& oracle, std::mt19937_64& rng) {
  ParserState st = initial_state(item.terms);
  SentenceStats stats;
  while (!st.finished) {
    check_progress(st, item.id);
    auto os = oracle_step(st, oracle, m.actions, item.id);
    auto feats = perceptron_features(m.fx, m.fx.extract(st));
    auto c = training_choice(st, m.actions, os, m.perceptron.score(feats), rng);
    if (!os.optimal_mask[c.predicted]) ++stats.errors;
    m.perceptron.update(feats, c.applied, c.predicted);
    apply_in_place(st, m.actions.at(c.applied));
    ++stats.transitions;
  }
  stats.loss = static_cast<double>(stats.errors);
  return stats;
}

inline SentenceStats neural_sentence(Model& m, const TrainItem& item, Oracle& oracle, std::mt19937_64& rng) {
  auto enc = m.net.encode(m.token_ids(item.terms), m.config.reg, m.vocab, &rng);
  ParserState st = initial_state(item.terms);
  SentenceStats stats;
  Eigen::VectorXd d_logits;
  while (!st.finished) {
    check_progress(st, item.id);
    auto os = oracle_step(st, oracle, m.actions, item.id);
    auto sc = m.net.forward_step(enc, m.step_input(m.fx.extract(st)), m.config.reg, &rng);
    stats.loss += optimal_set_loss(sc.logits, os.valid_mask, os.optimal_mask, d_logits);
    m.net.backward_step(enc, sc, d_logits);
    std::vector<double> scores(sc.logits.data(), sc.logits.data() + sc.logits.size());
    auto c = training_choice(st, m.actions, os, scores, rng);
    if (!os.optimal_mask[c.predicted]) ++stats.errors;
    apply_in_place(st, m.actions.at(c.applied));
    ++stats.transitions;
  }
  m.net.backward_encoding(enc);
  return stats;
}

}  // namespace detail

inline void report(const TrainOptions& opt, const EpochLog& e) {
  if (opt.log) *opt.log << e << '\n';
  if (opt.history) opt.history->push_back(e);
}

/// Trains a model on `corpus`. With a dev set, the epoch with the best dev
/// LAS F1 is kept (earliest on ties); otherwise the last epoch.
inline Model train(const std::vector<Sentence>& corpus, const TrainConfig& config, const TrainOptions& opt = {}) {
  if (corpus.empty()) throw TrainingError("empty training corpus");
  config.check();
  auto items = prepare_items(corpus);
  auto labels = collect_labels(items);
  std::mt19937_64 rng(config.seed);
  Model m(config, labels, build_vocabulary(items, labels, config.delexicalized), rng);
  if (!opt.vectors_path.empty() && m.kind == ModelKind::neural && m.net.has_embedding("w"))
    load_pretrained_vectors(opt.vectors_path, m.vocab.at("w"), m.net.embedding("w").value, opt.limit_vectors);

  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  detail::OracleCache oracles(items, config.oracle_budget);
  std::optional<Model> best;
  double best_las = -1;
  auto end_epoch = [&](EpochLog e, const Model& candidate) {
    if (opt.dev) {
      e.dev_las = corpus_las(candidate, *opt.dev);
      if (*e.dev_las > best_las) {
        best_las = *e.dev_las;
        best = candidate;
      }
    }
    report(opt, e);
  };

  if (m.kind == ModelKind::perceptron) {
    for (int epoch = 1; epoch <= config.epochs_perceptron; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      EpochLog e{"perceptron", epoch, 0, 0, {}};
      std::size_t errors = 0;
      for (auto i : order) {
        auto s = detail::perceptron_sentence(m, items[i], oracles.get(i), rng);
        oracles.trim();
        errors += s.errors;
        e.transitions += s.transitions;
      }
      e.loss = e.transitions ? static_cast<double>(errors) / static_cast<double>(e.transitions) : 0.0;
      Model snapshot = m;
      snapshot.perceptron.average();
      end_epoch(e, snapshot);
      if (epoch == config.epochs_perceptron && !opt.dev) best = std::move(snapshot);
    }
    if (!best) {
      best = m;
      best->perceptron.average();
    }
    return std::move(*best);
  }

  const int sgd = config.epochs_sgd;
  const int total = sgd + config.amsgrad_epochs(items.size());
  auto& params = m.net.params();
  zero_grads(params);
  for (int epoch = 1; epoch <= total; ++epoch) {
    const bool use_sgd = epoch <= sgd;
    std::shuffle(order.begin(), order.end(), rng);
    EpochLog e{use_sgd ? "sgd" : "amsgrad", epoch, 0, 0, {}};
    double loss = 0;
    std::size_t pending = 0;
    auto flush = [&] {
      if (pending == 0) return;
      const double scale = 1.0 / static_cast<double>(pending);
      if (use_sgd)
        sgd_update(params, config.lr_sgd, scale);
      else
        amsgrad_update(params, config.amsgrad, scale);
      decay_weights(params, config.weight_decay);
      zero_grads(params);
      pending = 0;
    };
    for (auto i : order) {
      auto s = detail::neural_sentence(m, items[i], oracles.get(i), rng);
      oracles.trim();
      loss += s.loss;
      e.transitions += s.transitions;
      pending += s.transitions;
      if (pending >= static_cast<std::size_t>(config.minibatch)) flush();
    }
    flush();
    e.loss = e.transitions ? loss / static_cast<double>(e.transitions) : 0.0;
    end_epoch(e, m);
  }
  if (best) return std::move(*best);
  return m;
}

// ------------------------------------------------------------ cross-validation

struct CrossValidationResult {
  std::vector<double> fold_las;  // LAS F1 on each fold's validation block
  std::size_t best_fold = 0;
  Model model;
};

/// Seeded shuffle, then `folds` contiguous blocks. Fold k validates on
/// block k, selects epochs on block k+1 and trains on the rest.
inline CrossValidationResult cross_validate(const std::vector<Sentence>& corpus, const TrainConfig& config,
                                            int folds = 10, std::ostream* log = nullptr) {
  if (corpus.empty()) throw TrainingError("empty training corpus");
  if (folds < 3) throw std::invalid_argument("cross-validation needs at least 3 folds");
  if (corpus.size() < static_cast<std::size_t>(folds))
    throw TrainingError("corpus has fewer sentences than folds");
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto block_of = [&](std::size_t pos) { return static_cast<int>(pos * folds / corpus.size()); };

  CrossValidationResult result;
  double best = -1;
  for (int k = 0; k < folds; ++k) {
    std::vector<Sentence> tr, dv, va;
    for (std::size_t p = 0; p < order.size(); ++p) {
      int b = block_of(p);
      const auto& s = corpus[order[p]];
      if (b == k)
        va.push_back(s);
      else if (b == (k + 1) % folds)
        dv.push_back(s);
      else
        tr.push_back(s);
    }
    TrainOptions opt;
    opt.dev = &dv;
    Model m = train(tr, config, opt);
    double v = corpus_las(m, va);
    result.fold_las.push_back(v);
    if (log) *log << "fold=" << k + 1 << " train=" << tr.size() << " dev=" << dv.size() << " validation=" << va.size()
                  << " las=" << v << '\n';
    if (v > best) {
      best = v;
      result.best_fold = static_cast<std::size_t>(k);
      result.model = std::move(m);
    }
  }
  return result;
}

// ------------------------------------------------------------ gradient check

/// One sentence with its oracle trajectory turned into network inputs.
struct GradientItem {
  TokenIds ids;
  std::vector<StepInput> steps;
  std::vector<std::vector<char>> valid, optimal;
};

inline std::vector<GradientItem> gradient_batch(const Model& m, const std::vector<Sentence>& sentences) {
  std::vector<GradientItem> out;
  for (const auto& item : prepare_items(sentences)) {
    GradientItem g;
    g.ids = m.token_ids(item.terms);
    Oracle oracle(item.gold, 0);
    ParserState st = initial_state(item.terms);
    while (!st.finished) {
      auto os = detail::oracle_step(st, oracle, m.actions, item.id);
      g.steps.push_back(m.step_input(m.fx.extract(st)));
      g.valid.push_back(os.valid_mask);
      g.optimal.push_back(os.optimal_mask);
      std::vector<Transition> ts;
      for (auto i : os.optimal) ts.push_back(m.actions.at(i));
      apply_in_place(st, pick_by_priority(ts));
    }
    out.push_back(std::move(g));
  }
  return out;
}

/// Mean loss over all steps of `batch`, without dropout. With `backprop`,
/// gradients of that mean are accumulated into the parameters.
inline double batch_loss(NeuralNet& net, const Vocabulary& vocab, const std::vector<GradientItem>& batch,
                         bool backprop) {
  std::size_t steps = 0;
  for (const auto& g : batch) steps += g.steps.size();
  if (steps == 0) return 0.0;
  const double scale = 1.0 / static_cast<double>(steps);
  NeuralRegularization none{0, 0, 0, 0};
  double loss = 0;
  Eigen::VectorXd d;
  for (const auto& g : batch) {
    auto enc = net.encode(g.ids, none, vocab, nullptr);
    for (std::size_t i = 0; i < g.steps.size(); ++i) {
      auto sc = net.forward_step(enc, g.steps[i], none, nullptr);
      loss += optimal_set_loss(sc.logits, g.valid[i], g.optimal[i], d) * scale;
      if (backprop) net.backward_step(enc, sc, d * scale);
    }
    if (backprop) net.backward_encoding(enc);
  }
  return loss;
}

struct GradientCheckResult {
  double max_relative_error = 0;
  std::size_t checked = 0;
  bool finite = true;
  std::string worst;  // "param[index] analytic numeric"
};

/// Relative error |a-n| / max(|a|, |n|, floor).
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central differences with step `h` on `samples` parameter entries drawn
/// uniformly (frozen padding columns excluded).
inline GradientCheckResult gradient_check(NeuralNet& net, const Vocabulary& vocab,
                                          const std::vector<GradientItem>& batch, std::size_t samples = 2000,
                                          std::uint64_t seed = 7, double h = 1e-5, double floor = 1e-6) {
  auto& params = net.params();
  zero_grads(params);
  batch_loss(net, vocab, batch, true);
  std::vector<std::pair<std::size_t, Eigen::Index>> pool;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto& P = params[p];
    Eigen::Index start = P.frozen_first_column ? P.value.rows() : 0;
    for (Eigen::Index i = start; i < P.value.size(); ++i) pool.emplace_back(p, i);
  }
  std::vector<std::pair<std::size_t, Eigen::Index>> pick;
  std::mt19937_64 rng(seed);
  std::sample(pool.begin(), pool.end(), std::back_inserter(pick), samples, rng);

  GradientCheckResult r;
  for (auto [p, i] : pick) {
    double& w = params[p].value.data()[i];
    const double analytic = params[p].grad.data()[i];
    const double keep = w;
    w = keep + h;
    double up = batch_loss(net, vocab, batch, false);
    w = keep - h;
    double down = batch_loss(net, vocab, batch, false);
    w = keep;
    const double numeric = (up - down) / (2 * h);
    if (!std::isfinite(analytic) || !std::isfinite(numeric)) r.finite = false;
    double e = relative_error(analytic, numeric, floor);
    if (e > r.max_relative_error || r.checked == 0) {
      if (e >= r.max_relative_error)
        r.worst = params[p].name + "[" + std::to_string(i) + "] " + std::to_string(analytic) + " " +
                  std::to_string(numeric);
      r.max_relative_error = std::max(r.max_relative_error, e);
    }
    ++r.checked;
  }
  return r;
}

}  // namespace uddag

#endif  // UDDAG_TRAIN_HPP
