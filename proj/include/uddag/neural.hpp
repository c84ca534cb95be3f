// Neural transition scorer: token embeddings -> BiLSTM -> node-slot vectors,
// concatenated with label/action embeddings and numeric features -> MLP ->
// softmax over actions. Forward and backward passes are written out by hand
// over Eigen dense blocks (double precision).

#ifndef UDDAG_NEURAL_HPP
#define UDDAG_NEURAL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uddag/features.hpp"
#include "uddag/optimizer.hpp"
#include "uddag/vocabulary.hpp"

namespace uddag {

struct NeuralDims {
  int word = 32, lemma = 16, upos = 20, xpos = 20, shape = 3, prefix = 2, suffix = 3;
  int punct = 1, ner = 3, action = 3, edge = 20;
  int lstm_layers = 1, lstm_dim = 64;  // lstm_dim = output size of one BiLSTM layer (both directions)
  int mlp_layers = 2, mlp_dim = 32;

  static NeuralDims desk() { return {}; }
  static NeuralDims paper() {
    NeuralDims d;
    d.word = 300;
    d.lemma = 200;
    d.lstm_layers = 2;
    d.lstm_dim = 500;
    d.mlp_dim = 50;
    return d;
  }

  int channel_dim(const std::string& c) const {
    if (c == "w") return word;
    if (c == "m") return lemma;
    if (c == "u") return upos;
    if (c == "t") return xpos;
    if (c == "#") return shape;
    if (c == "^") return prefix;
    if (c == "$") return suffix;
    if (c == "e") return edge;
    if (c == "p") return punct;
    if (c == "A") return action;
    if (c == "T" || c == "N") return ner;
    throw std::invalid_argument("no embedding for channel " + c);
  }

  friend bool operator==(const NeuralDims&, const NeuralDims&) = default;
};

struct NeuralRegularization {
  double dropout_mlp = 0.4;
  double dropout_recurrent = 0.4;
  double word_dropout_alpha = 0.2;
  double node_dropout = 0.1;
};

inline double word_dropout_probability(double count, double alpha) {
  if (alpha <= 0) return 0.0;
  return alpha / (count + alpha);
}

inline constexpr std::array<const char*, 7> kTokenChannels = {"w", "m", "u", "t", "#", "^", "$"};

/// Token-level inputs of one sentence (ids per token channel, 1-based tokens).
struct TokenIds {
  std::vector<std::vector<int>> ids;  // [channel][position], position 0 unused
};

/// Inputs of one scoring step, with ids already looked up.
struct StepInput {
  std::array<int, kNodeSlots> anchors{};
  std::vector<int> cat_ids;     // per non-token categorical template
  std::vector<double> numeric;  // per numeric template
};

class NeuralNet {
 public:
  NeuralNet() = default;

  /// Parameters start at zero; call init() for a random start.
  NeuralNet(const NeuralDims& dims, const FeatureExtractor& fx, const Vocabulary& vocab, std::size_t actions)
      : dims_(dims), actions_(actions) {
    setup(fx, vocab);
  }

  const NeuralDims& dims() const { return dims_; }
  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  std::size_t actions() const { return actions_; }
  const std::vector<std::string>& token_channels() const { return token_channels_; }
  const std::vector<std::size_t>& cat_templates() const { return cat_templates_; }
  const std::vector<std::string>& cat_channels() const { return cat_channels_; }

  void setup(const FeatureExtractor& fx, const Vocabulary& vocab) {
    token_channels_.clear();
    cat_templates_.clear();
    cat_channels_.clear();
    cat_sources_.clear();
    numeric_sources_.clear();
    for (auto c : kTokenChannels)
      if (!(fx.delexicalized() && is_lexical_channel(c))) token_channels_.push_back(c);
    const auto& cats = fx.categorical_templates();
    for (std::size_t i = 0; i < cats.size(); ++i) {
      if (is_token_channel(cats[i].channel)) continue;
      cat_templates_.push_back(i);
      cat_channels_.push_back(cats[i].channel);
      cat_sources_.push_back(static_cast<int>(cats[i].source));
    }
    for (const auto& t : fx.numeric_templates()) numeric_sources_.push_back(static_cast<int>(t.source));

    std::vector<std::string> emb_channels = token_channels_;
    for (const auto& c : cat_channels_)
      if (std::find(emb_channels.begin(), emb_channels.end(), c) == emb_channels.end()) emb_channels.push_back(c);
    params_.clear();
    emb_index_.clear();
    for (const auto& c : emb_channels) {
      std::size_t v = vocab.has(c) ? vocab.at(c).size() : 2;
      emb_index_[c] = params_.size();
      params_.emplace_back("emb_" + c, Eigen::MatrixXd::Zero(dims_.channel_dim(c), static_cast<Eigen::Index>(v)),
                           true);
    }
    token_dim_ = 0;
    for (const auto& c : token_channels_) token_dim_ += dims_.channel_dim(c);
    lstm_.clear();
    int in = token_dim_;
    const int hd = dims_.lstm_dim / 2;
    for (int l = 0; l < dims_.lstm_layers; ++l) {
      for (int d = 0; d < 2; ++d) {
        std::string p = "lstm" + std::to_string(l) + (d ? "b" : "f");
        LstmIdx li;
        li.W = params_.size();
        params_.emplace_back(p + "_W", Eigen::MatrixXd::Zero(4 * hd, in));
        li.U = params_.size();
        params_.emplace_back(p + "_U", Eigen::MatrixXd::Zero(4 * hd, hd));
        li.b = params_.size();
        params_.emplace_back(p + "_b", Eigen::MatrixXd::Zero(4 * hd, 1));
        lstm_.push_back(li);
      }
      in = 2 * hd;
    }
    slot_dim_ = dims_.lstm_layers > 0 ? 2 * hd : token_dim_;
    input_dim_ = kNodeSlots * slot_dim_ + static_cast<int>(numeric_sources_.size());
    for (const auto& c : cat_channels_) input_dim_ += dims_.channel_dim(c);
    mlp_.clear();
    in = input_dim_;
    for (int l = 0; l < dims_.mlp_layers; ++l) {
      std::size_t w = params_.size();
      params_.emplace_back("mlp" + std::to_string(l) + "_W", Eigen::MatrixXd::Zero(dims_.mlp_dim, in));
      params_.emplace_back("mlp" + std::to_string(l) + "_b", Eigen::MatrixXd::Zero(dims_.mlp_dim, 1));
      mlp_.push_back(w);
      in = dims_.mlp_dim;
    }
    out_ = params_.size();
    params_.emplace_back("out_W", Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(actions_), in));
    params_.emplace_back("out_b", Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(actions_), 1));
  }

  void init(std::mt19937_64& rng) {
    for (auto& p : params_) {
      const bool emb = p.name.rfind("emb_", 0) == 0;
      const bool bias = p.value.cols() == 1 && !emb;
      if (bias) {
        p.value.setZero();
        // forget-gate rows (gate order i, f, o, g) start open
        if (p.name.size() > 2 && p.name.compare(p.name.size() - 2, 2, "_b") == 0 && p.name.rfind("lstm", 0) == 0) {
          const Eigen::Index hd = p.value.rows() / 4;
          p.value.middleRows(hd, hd).setOnes();
        }
        continue;
      }
      double r = emb ? std::sqrt(3.0 / static_cast<double>(p.value.rows()))
                     : std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
      std::uniform_real_distribution<double> u(-r, r);
      for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = u(rng);
      if (emb) p.value.col(0).setZero();
    }
  }

  bool has_embedding(const std::string& c) const { return emb_index_.count(c) > 0; }
  Param& embedding(const std::string& c) { return params_.at(emb_index_.at(c)); }

  // ---------------------------------------------------------------- encoding

  struct DirCache {
    std::vector<Eigen::VectorXd> i, f, o, g, c, h, hin;
    Eigen::VectorXd mask;  // recurrent dropout mask (scaled), ones when off
  };

  struct Encoding {
    int n = 0;
    TokenIds ids;                         // after word dropout
    std::vector<Eigen::MatrixXd> inputs;  // per layer: (in_dim x n+1)
    std::vector<DirCache> dirs;           // per layer x direction
    Eigen::MatrixXd out;                  // slot_dim x (n+1), column 0 zero
    Eigen::MatrixXd d_out;                // gradient w.r.t. out (training)
  };

  /// Runs the token encoder. With `rng` non-null, word and recurrent dropout
  /// are applied.
  Encoding encode(const TokenIds& tokens, const NeuralRegularization& reg, const Vocabulary& vocab,
                  std::mt19937_64* rng) const {
    Encoding enc;
    enc.ids = tokens;
    enc.n = tokens.ids.empty() ? 0 : static_cast<int>(tokens.ids[0].size()) - 1;
    const int n = enc.n;
    if (rng && reg.word_dropout_alpha > 0) {
      for (std::size_t c = 0; c < token_channels_.size(); ++c) {
        const auto& ch = token_channels_[c];
        if (ch != "w" && ch != "m" && ch != "u" && ch != "t") continue;
        const auto& table = vocab.at(ch);
        for (int t = 1; t <= n; ++t) {
          int id = enc.ids.ids[c][t];
          if (id < 2) continue;
          std::bernoulli_distribution drop(
              word_dropout_probability(static_cast<double>(table.count(id)), reg.word_dropout_alpha));
          if (drop(*rng)) enc.ids.ids[c][t] = SymbolTable::kAbsent;
        }
      }
    }
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(token_dim_, n + 1);
    for (int t = 1; t <= n; ++t) {
      int off = 0;
      for (std::size_t c = 0; c < token_channels_.size(); ++c) {
        const auto& E = params_[emb_index_.at(token_channels_[c])].value;
        x.block(off, t, E.rows(), 1) = E.col(clamp_id(enc.ids.ids[c][t], E.cols()));
        off += static_cast<int>(E.rows());
      }
    }
    enc.inputs.push_back(x);
    const int hd = dims_.lstm_dim / 2;
    for (int l = 0; l < dims_.lstm_layers; ++l) {
      Eigen::MatrixXd y = Eigen::MatrixXd::Zero(2 * hd, n + 1);
      for (int d = 0; d < 2; ++d) {
        const auto& li = lstm_[2 * l + d];
        DirCache dc;
        dc.mask = Eigen::VectorXd::Ones(hd);
        if (rng && reg.dropout_recurrent > 0) {
          std::bernoulli_distribution keep(1 - reg.dropout_recurrent);
          for (int k = 0; k < hd; ++k) dc.mask[k] = keep(*rng) ? 1.0 / (1 - reg.dropout_recurrent) : 0.0;
        }
        run_lstm(li, enc.inputs.back(), n, d == 1, dc);
        for (int t = 1; t <= n; ++t) y.block(d * hd, t, hd, 1) = dc.h[t];
        enc.dirs.push_back(std::move(dc));
      }
      enc.inputs.push_back(y);
    }
    enc.out = enc.inputs.back();
    enc.d_out = Eigen::MatrixXd::Zero(enc.out.rows(), enc.out.cols());
    return enc;
  }

  /// Backpropagates enc.d_out through the encoder into parameter gradients.
  void backward_encoding(Encoding& enc) {
    const int n = enc.n;
    const int hd = dims_.lstm_dim / 2;
    Eigen::MatrixXd d_y = enc.d_out;
    for (int l = dims_.lstm_layers - 1; l >= 0; --l) {
      const Eigen::MatrixXd& x = enc.inputs[l];
      Eigen::MatrixXd d_x = Eigen::MatrixXd::Zero(x.rows(), x.cols());
      for (int d = 0; d < 2; ++d) {
        Eigen::MatrixXd d_h = d_y.block(d * hd, 0, hd, n + 1);
        backward_lstm(lstm_[2 * l + d], x, n, d == 1, enc.dirs[2 * l + d], d_h, d_x);
      }
      d_y = std::move(d_x);
    }
    for (int t = 1; t <= n; ++t) {
      int off = 0;
      for (std::size_t c = 0; c < token_channels_.size(); ++c) {
        auto& E = params_[emb_index_.at(token_channels_[c])];
        int id = clamp_id(enc.ids.ids[c][t], E.value.cols());
        if (id != 0) E.grad.col(id) += d_y.block(off, t, E.value.rows(), 1);
        off += static_cast<int>(E.value.rows());
      }
    }
  }

  // ------------------------------------------------------------------ steps

  struct StepCache {
    Eigen::VectorXd x;
    std::vector<Eigen::VectorXd> h;     // post-activation (before dropout) per layer
    std::vector<Eigen::VectorXd> mask;  // dropout masks per layer
    Eigen::VectorXd logits;
    std::array<int, kNodeSlots> anchors{};
    std::vector<int> cat_ids;
    int dropped_slot = -1;
  };

  /// Builds the MLP input. `dropped_slot` >= 0 zeroes every feature of that
  /// node slot.
  Eigen::VectorXd assemble(const Encoding& enc, const StepInput& in, int dropped_slot) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(input_dim_);
    int off = 0;
    for (int k = 0; k < kNodeSlots; ++k) {
      int a = in.anchors[k];
      if (a > 0 && a <= enc.n && k != dropped_slot) x.segment(off, slot_dim_) = enc.out.col(a);
      off += slot_dim_;
    }
    for (std::size_t j = 0; j < cat_templates_.size(); ++j) {
      const auto& E = params_[emb_index_.at(cat_channels_[j])].value;
      int id = clamp_id(in.cat_ids[j], E.cols());
      if (cat_sources_[j] != dropped_slot) x.segment(off, E.rows()) = E.col(id);
      off += static_cast<int>(E.rows());
    }
    for (std::size_t j = 0; j < numeric_sources_.size(); ++j)
      x[off + static_cast<int>(j)] = numeric_sources_[j] == dropped_slot ? 0.0 : in.numeric[j];
    return x;
  }

  /// Forward pass of one step; logits over all actions.
  StepCache forward_step(const Encoding& enc, const StepInput& in, const NeuralRegularization& reg,
                         std::mt19937_64* rng) const {
    StepCache sc;
    sc.anchors = in.anchors;
    sc.cat_ids = in.cat_ids;
    if (rng && reg.node_dropout > 0) {
      std::bernoulli_distribution drop(reg.node_dropout);
      if (drop(*rng)) sc.dropped_slot = std::uniform_int_distribution<int>(0, kNodeSlots - 1)(*rng);
    }
    sc.x = assemble(enc, in, sc.dropped_slot);
    Eigen::VectorXd a = sc.x;
    for (std::size_t l = 0; l < mlp_.size(); ++l) {
      const auto& W = params_[mlp_[l]].value;
      const auto& b = params_[mlp_[l] + 1].value;
      Eigen::VectorXd h = (W * a + b.col(0)).array().tanh();
      Eigen::VectorXd mask = Eigen::VectorXd::Ones(h.size());
      // only between hidden layers; the last one feeds the output unmasked
      if (rng && reg.dropout_mlp > 0 && l + 1 < mlp_.size()) {
        std::bernoulli_distribution keep(1 - reg.dropout_mlp);
        for (Eigen::Index k = 0; k < mask.size(); ++k) mask[k] = keep(*rng) ? 1.0 / (1 - reg.dropout_mlp) : 0.0;
      }
      sc.h.push_back(h);
      sc.mask.push_back(mask);
      a = h.cwiseProduct(mask);
    }
    sc.logits = params_[out_].value * a + params_[out_ + 1].value.col(0);
    return sc;
  }

  /// Backward pass of one step given d(loss)/d(logits); accumulates
  /// parameter gradients and enc.d_out.
  void backward_step(Encoding& enc, const StepCache& sc, const Eigen::VectorXd& d_logits) {
    Eigen::VectorXd a = sc.h.empty() ? sc.x : Eigen::VectorXd(sc.h.back().cwiseProduct(sc.mask.back()));
    auto& Wo = params_[out_];
    Wo.grad.noalias() += d_logits * a.transpose();
    params_[out_ + 1].grad.col(0) += d_logits;
    Eigen::VectorXd d_a = Wo.value.transpose() * d_logits;
    for (int l = static_cast<int>(mlp_.size()) - 1; l >= 0; --l) {
      Eigen::VectorXd d_h = d_a.cwiseProduct(sc.mask[l]);
      Eigen::VectorXd d_z = d_h.array() * (1 - sc.h[l].array().square());
      const Eigen::VectorXd& prev = l == 0 ? sc.x : Eigen::VectorXd(sc.h[l - 1].cwiseProduct(sc.mask[l - 1]));
      auto& W = params_[mlp_[l]];
      W.grad.noalias() += d_z * prev.transpose();
      params_[mlp_[l] + 1].grad.col(0) += d_z;
      d_a = W.value.transpose() * d_z;
    }
    int off = 0;
    for (int k = 0; k < kNodeSlots; ++k) {
      int an = sc.anchors[k];
      if (an > 0 && an <= enc.n && k != sc.dropped_slot) enc.d_out.col(an) += d_a.segment(off, slot_dim_);
      off += slot_dim_;
    }
    for (std::size_t j = 0; j < cat_templates_.size(); ++j) {
      auto& E = params_[emb_index_.at(cat_channels_[j])];
      int id = clamp_id(sc.cat_ids[j], E.value.cols());
      if (cat_sources_[j] != sc.dropped_slot && id != 0) E.grad.col(id) += d_a.segment(off, E.value.rows());
      off += static_cast<int>(E.value.rows());
    }
  }

  int input_dim() const { return input_dim_; }
  int slot_dim() const { return slot_dim_; }

 private:
  struct LstmIdx {
    std::size_t W = 0, U = 0, b = 0;
  };

  static int clamp_id(int id, Eigen::Index cols) { return id >= 0 && id < cols ? id : SymbolTable::kUnknown; }

  static double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

  void run_lstm(const LstmIdx& li, const Eigen::MatrixXd& x, int n, bool reverse, DirCache& dc) const {
    const auto& W = params_[li.W].value;
    const auto& U = params_[li.U].value;
    const auto& b = params_[li.b].value;
    const int hd = static_cast<int>(U.cols());
    for (auto* v : {&dc.i, &dc.f, &dc.o, &dc.g, &dc.c, &dc.h, &dc.hin}) v->assign(n + 2, Eigen::VectorXd::Zero(hd));
    Eigen::VectorXd hprev = Eigen::VectorXd::Zero(hd), cprev = Eigen::VectorXd::Zero(hd);
    for (int k = 0; k < n; ++k) {
      int t = reverse ? n - k : k + 1;
      dc.hin[t] = hprev.cwiseProduct(dc.mask);
      Eigen::VectorXd z = W * x.col(t) + U * dc.hin[t] + b.col(0);
      dc.i[t] = z.segment(0, hd).unaryExpr(&sigmoid);
      dc.f[t] = z.segment(hd, hd).unaryExpr(&sigmoid);
      dc.o[t] = z.segment(2 * hd, hd).unaryExpr(&sigmoid);
      dc.g[t] = z.segment(3 * hd, hd).array().tanh();
      dc.c[t] = dc.f[t].cwiseProduct(cprev) + dc.i[t].cwiseProduct(dc.g[t]);
      dc.h[t] = dc.o[t].cwiseProduct(Eigen::VectorXd(dc.c[t].array().tanh()));
      hprev = dc.h[t];
      cprev = dc.c[t];
    }
  }

  void backward_lstm(const LstmIdx& li, const Eigen::MatrixXd& x, int n, bool reverse, const DirCache& dc,
                     const Eigen::MatrixXd& d_h_out, Eigen::MatrixXd& d_x) {
    auto& W = params_[li.W];
    auto& U = params_[li.U];
    auto& b = params_[li.b];
    const int hd = static_cast<int>(U.value.cols());
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(hd), dc_next = Eigen::VectorXd::Zero(hd);
    Eigen::VectorXd dz(4 * hd);
    for (int k = n - 1; k >= 0; --k) {
      int t = reverse ? n - k : k + 1;
      int tp = k == 0 ? -1 : (reverse ? n - k + 1 : k);
      Eigen::VectorXd dh = d_h_out.col(t) + dh_next;
      Eigen::ArrayXd tc = dc.c[t].array().tanh();
      Eigen::ArrayXd d_o = dh.array() * tc;
      Eigen::ArrayXd d_c = dh.array() * dc.o[t].array() * (1 - tc.square()) + dc_next.array();
      Eigen::ArrayXd cprev = tp < 0 ? Eigen::ArrayXd(Eigen::ArrayXd::Zero(hd)) : Eigen::ArrayXd(dc.c[tp].array());
      Eigen::ArrayXd i = dc.i[t].array(), f = dc.f[t].array(), o = dc.o[t].array(), g = dc.g[t].array();
      dz.segment(0, hd) = (d_c * g * i * (1 - i)).matrix();
      dz.segment(hd, hd) = (d_c * cprev * f * (1 - f)).matrix();
      dz.segment(2 * hd, hd) = (d_o * o * (1 - o)).matrix();
      dz.segment(3 * hd, hd) = (d_c * i * (1 - g.square())).matrix();
      W.grad.noalias() += dz * x.col(t).transpose();
      U.grad.noalias() += dz * dc.hin[t].transpose();
      b.grad.col(0) += dz;
      d_x.col(t).noalias() += W.value.transpose() * dz;
      dh_next = (U.value.transpose() * dz).cwiseProduct(dc.mask);
      dc_next = (d_c * f).matrix();
    }
  }

  NeuralDims dims_;
  std::size_t actions_ = 0;
  std::vector<Param> params_;
  std::map<std::string, std::size_t> emb_index_;
  std::vector<std::string> token_channels_;
  std::vector<std::size_t> cat_templates_;  // indices into the extractor's categorical templates
  std::vector<std::string> cat_channels_;
  std::vector<int> cat_sources_;
  std::vector<int> numeric_sources_;
  std::vector<LstmIdx> lstm_;
  std::vector<std::size_t> mlp_;  // index of each layer's W (b follows)
  std::size_t out_ = 0;
  int token_dim_ = 0, slot_dim_ = 0, input_dim_ = 0;
};

/// Log-softmax of `logits`; entries with mask 0 are excluded when a mask is
/// given and come out as -infinity.
inline Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits, const std::vector<char>* mask = nullptr) {
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    if (!mask || (*mask)[i]) mx = std::max(mx, logits[i]);
  double sum = 0;
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    if (!mask || (*mask)[i]) sum += std::exp(logits[i] - mx);
  const double lse = mx + std::log(sum);
  Eigen::VectorXd out(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    out[i] = (!mask || (*mask)[i]) ? logits[i] - lse : -std::numeric_limits<double>::infinity();
  return out;
}

/// -log of the probability mass on `optimal`, with the softmax restricted
/// to `valid`; writes d(loss)/d(logits).
inline double optimal_set_loss(const Eigen::VectorXd& logits, const std::vector<char>& valid,
                               const std::vector<char>& optimal, Eigen::VectorXd& d_logits) {
  Eigen::VectorXd lp = log_softmax(logits, &valid);
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < lp.size(); ++i)
    if (optimal[i]) mx = std::max(mx, lp[i]);
  double s = 0;
  for (Eigen::Index i = 0; i < lp.size(); ++i)
    if (optimal[i]) s += std::exp(lp[i] - mx);
  const double log_mass = mx + std::log(s);
  d_logits = Eigen::VectorXd::Zero(logits.size());
  for (Eigen::Index i = 0; i < lp.size(); ++i) {
    if (!valid[i]) continue;
    double p = std::exp(lp[i]);
    double q = optimal[i] ? std::exp(lp[i] - log_mass) : 0.0;
    d_logits[i] = p - q;
  }
  return std::max(0.0, -log_mass);
}

}  // namespace uddag

#endif  // UDDAG_NEURAL_HPP
