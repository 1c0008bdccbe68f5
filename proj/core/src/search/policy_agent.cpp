#include "patchattack/search/policy_agent.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "patchattack/error.hpp"

namespace patchattack::search {

namespace {

using Matrix = Eigen::MatrixXd;
using MapM = Eigen::Map<Matrix>;
using CMapM = Eigen::Map<const Matrix>;

Matrix sigmoid(const Matrix& m) { return (1.0 + (-m.array()).exp()).inverse().matrix(); }

// Column-wise softmax.
Matrix softmax_cols(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double mx = logits.col(j).maxCoeff();
    out.col(j) = (logits.col(j).array() - mx).exp().matrix();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

}  // namespace

double Episode::total_logprob() const { return std::accumulate(step_logprobs.begin(), step_logprobs.end(), 0.0); }

nlohmann::json to_json(const Episode& e) {
  return {{"actions", e.actions.steps}, {"step_logprobs", e.step_logprobs}, {"reward", e.reward}};
}

std::vector<double> advantages(std::span<const Episode> batch) {
  if (batch.empty()) return {};
  double mean = 0.0;
  for (const auto& e : batch) mean += e.reward;
  mean /= static_cast<double>(batch.size());
  std::vector<double> adv;
  adv.reserve(batch.size());
  for (const auto& e : batch) adv.push_back(e.reward - mean);
  return adv;
}

struct PolicyAgent::Trace {
  int batch = 0;
  std::vector<Matrix> x;       // E x B input per step
  std::vector<Matrix> h_prev;  // H x B
  std::vector<Matrix> c_prev;
  std::vector<Matrix> i, f, g, o;
  std::vector<Matrix> tanh_c;
  std::vector<Matrix> h;
  std::vector<Matrix> probs;  // D_t x B
  std::vector<std::vector<int>> actions;  // [t][k]
};

PolicyAgent::PolicyAgent(std::vector<int> cardinalities, const PolicyConfig& cfg)
    : cardinalities_(std::move(cardinalities)),
      hidden_(cfg.hidden_size),
      embed_(cfg.embedding_size),
      adam_cfg_{cfg.learning_rate} {
  if (cardinalities_.empty()) throw InvalidArgument("PolicyAgent: no action steps");
  for (const int d : cardinalities_) {
    if (d <= 0) throw InvalidArgument("PolicyAgent: every step needs a non-empty domain");
  }
  const std::size_t H = static_cast<std::size_t>(hidden_);
  const std::size_t E = static_cast<std::size_t>(embed_);
  std::size_t off = 0;
  layout_.lstm_w = off;
  off += 4 * H * (E + H);
  layout_.lstm_b = off;
  off += 4 * H;
  layout_.start = off;
  off += E;
  for (std::size_t t = 0; t + 1 < cardinalities_.size(); ++t) {
    layout_.embed.push_back(off);
    off += static_cast<std::size_t>(cardinalities_[t]) * E;
  }
  for (const int d : cardinalities_) {
    layout_.head_w.push_back(off);
    off += static_cast<std::size_t>(d) * H;
    layout_.head_b.push_back(off);
    off += static_cast<std::size_t>(d);
  }
  layout_.total = off;
  params_.assign(off, 0.0);
  adam_ = nn::AdamState<double>(off);

  std::mt19937_64 rng(cfg.init_seed);
  const double lstm_scale = 1.0 / std::sqrt(static_cast<double>(hidden_));
  std::uniform_real_distribution<double> lstm_dist(-lstm_scale, lstm_scale);
  for (std::size_t k = layout_.lstm_w; k < layout_.lstm_b; ++k) params_[k] = lstm_dist(rng);
  std::normal_distribution<double> embed_dist(0.0, 0.1);
  for (std::size_t k = layout_.start; k < (layout_.head_w.front()); ++k) params_[k] = embed_dist(rng);
  // LSTM bias and heads stay zero: uniform initial distributions.
}

void PolicyAgent::run(std::span<const patch::ActionVector> forced, Trace& tr, std::mt19937_64* rng,
                      std::vector<patch::ActionVector>* sampled) const {
  const int B = tr.batch;
  const int H = hidden_;
  const int E = embed_;
  const int T = step_count();
  CMapM W(params_.data() + layout_.lstm_w, 4 * H, E + H);
  Eigen::Map<const Eigen::VectorXd> bias(params_.data() + layout_.lstm_b, 4 * H);
  Eigen::Map<const Eigen::VectorXd> start(params_.data() + layout_.start, E);

  Matrix h = Matrix::Zero(H, B);
  Matrix c = Matrix::Zero(H, B);
  Matrix x(E, B);
  for (int k = 0; k < B; ++k) x.col(k) = start;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  tr.actions.assign(static_cast<std::size_t>(T), std::vector<int>(static_cast<std::size_t>(B)));
  for (int t = 0; t < T; ++t) {
    Matrix xh(E + H, B);
    xh.topRows(E) = x;
    xh.bottomRows(H) = h;
    Matrix gates = W * xh;
    gates.colwise() += bias;
    Matrix gi = sigmoid(gates.topRows(H));
    Matrix gf = sigmoid(gates.middleRows(H, H));
    Matrix gg = gates.middleRows(2 * H, H).array().tanh().matrix();
    Matrix go = sigmoid(gates.bottomRows(H));
    Matrix c_new = (gf.array() * c.array() + gi.array() * gg.array()).matrix();
    Matrix tc = c_new.array().tanh().matrix();
    Matrix h_new = (go.array() * tc.array()).matrix();

    const int D = cardinalities_[static_cast<std::size_t>(t)];
    CMapM HW(params_.data() + layout_.head_w[static_cast<std::size_t>(t)], D, H);
    Eigen::Map<const Eigen::VectorXd> hb(params_.data() + layout_.head_b[static_cast<std::size_t>(t)], D);
    Matrix logits = HW * h_new;
    logits.colwise() += hb;
    Matrix probs = softmax_cols(logits);

    auto& acts = tr.actions[static_cast<std::size_t>(t)];
    for (int k = 0; k < B; ++k) {
      if (rng != nullptr) {
        const double u = unit(*rng);
        double cum = 0.0;
        int pick = D - 1;
        for (int d = 0; d < D; ++d) {
          cum += probs(d, k);
          if (u < cum) {
            pick = d;
            break;
          }
        }
        acts[static_cast<std::size_t>(k)] = pick;
      } else {
        acts[static_cast<std::size_t>(k)] = forced[static_cast<std::size_t>(k)].steps[static_cast<std::size_t>(t)];
      }
    }

    tr.x.push_back(x);
    tr.h_prev.push_back(h);
    tr.c_prev.push_back(c);
    tr.i.push_back(std::move(gi));
    tr.f.push_back(std::move(gf));
    tr.g.push_back(std::move(gg));
    tr.o.push_back(std::move(go));
    tr.tanh_c.push_back(std::move(tc));
    tr.h.push_back(h_new);
    tr.probs.push_back(std::move(probs));

    h = std::move(h_new);
    c = std::move(c_new);
    if (t + 1 < T) {
      CMapM emb(params_.data() + layout_.embed[static_cast<std::size_t>(t)], D, E);
      for (int k = 0; k < B; ++k) x.col(k) = emb.row(acts[static_cast<std::size_t>(k)]).transpose();
    }
  }

  if (sampled != nullptr) {
    sampled->assign(static_cast<std::size_t>(B), patch::ActionVector{});
    for (int k = 0; k < B; ++k) {
      auto& steps = (*sampled)[static_cast<std::size_t>(k)].steps;
      steps.resize(static_cast<std::size_t>(T));
      for (int t = 0; t < T; ++t) steps[static_cast<std::size_t>(t)] = tr.actions[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
    }
  }
}

std::vector<Episode> PolicyAgent::sample(int count, std::mt19937_64& rng) const {
  Trace tr;
  tr.batch = count;
  std::vector<patch::ActionVector> actions;
  run({}, tr, &rng, &actions);
  std::vector<Episode> out(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    Episode& e = out[static_cast<std::size_t>(k)];
    e.actions = std::move(actions[static_cast<std::size_t>(k)]);
    for (int t = 0; t < step_count(); ++t) {
      e.step_logprobs.push_back(std::log(tr.probs[static_cast<std::size_t>(t)](e.actions.steps[static_cast<std::size_t>(t)], k)));
    }
  }
  return out;
}

Episode PolicyAgent::sample_episode(std::mt19937_64& rng) const { return std::move(sample(1, rng).front()); }

std::vector<std::vector<double>> PolicyAgent::step_distributions(const patch::ActionVector& actions) const {
  if (actions.steps.size() != cardinalities_.size()) throw InvalidArgument("step_distributions: wrong action length");
  Trace tr;
  tr.batch = 1;
  run(std::span<const patch::ActionVector>(&actions, 1), tr, nullptr, nullptr);
  std::vector<std::vector<double>> out;
  for (const auto& p : tr.probs) out.emplace_back(p.data(), p.data() + p.rows());
  return out;
}

double PolicyAgent::log_probability(const patch::ActionVector& actions) const {
  const auto dists = step_distributions(actions);
  double lp = 0.0;
  for (std::size_t t = 0; t < dists.size(); ++t) lp += std::log(dists[t][static_cast<std::size_t>(actions.steps[t])]);
  return lp;
}

double PolicyAgent::policy_loss(std::span<const Episode> batch) const {
  if (batch.empty()) return 0.0;
  std::vector<patch::ActionVector> forced;
  for (const auto& e : batch) forced.push_back(e.actions);
  Trace tr;
  tr.batch = static_cast<int>(batch.size());
  run(forced, tr, nullptr, nullptr);
  const auto adv = advantages(batch);
  double loss = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    double lp = 0.0;
    for (int t = 0; t < step_count(); ++t) {
      lp += std::log(tr.probs[static_cast<std::size_t>(t)](forced[k].steps[static_cast<std::size_t>(t)], static_cast<Eigen::Index>(k)));
    }
    loss -= adv[k] * lp;
  }
  return loss / static_cast<double>(batch.size());
}

std::vector<double> PolicyAgent::policy_gradient(std::span<const Episode> batch, double* loss) const {
  std::vector<double> grad(layout_.total, 0.0);
  if (batch.empty()) return grad;
  const int B = static_cast<int>(batch.size());
  const int H = hidden_;
  const int E = embed_;
  const int T = step_count();
  std::vector<patch::ActionVector> forced;
  for (const auto& e : batch) {
    if (e.actions.steps.size() != cardinalities_.size()) throw InvalidArgument("policy_gradient: wrong action length");
    forced.push_back(e.actions);
  }
  Trace tr;
  tr.batch = B;
  run(forced, tr, nullptr, nullptr);
  const auto adv = advantages(batch);
  if (loss != nullptr) {
    double total = 0.0;
    for (int k = 0; k < B; ++k) {
      double lp = 0.0;
      for (int t = 0; t < T; ++t) {
        lp += std::log(tr.probs[static_cast<std::size_t>(t)](tr.actions[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)], k));
      }
      total -= adv[static_cast<std::size_t>(k)] * lp;
    }
    *loss = total / static_cast<double>(B);
  }

  CMapM W(params_.data() + layout_.lstm_w, 4 * H, E + H);
  MapM dW(grad.data() + layout_.lstm_w, 4 * H, E + H);
  Eigen::Map<Eigen::VectorXd> db(grad.data() + layout_.lstm_b, 4 * H);
  Eigen::Map<Eigen::VectorXd> dstart(grad.data() + layout_.start, E);

  Matrix dh_next = Matrix::Zero(H, B);
  Matrix dc_next = Matrix::Zero(H, B);
  for (int t = T - 1; t >= 0; --t) {
    const auto ts = static_cast<std::size_t>(t);
    const int D = cardinalities_[ts];
    // d loss / d logits = (A_k / B) * (p - onehot)
    Matrix dlogits = tr.probs[ts];
    for (int k = 0; k < B; ++k) {
      dlogits(tr.actions[ts][static_cast<std::size_t>(k)], k) -= 1.0;
      dlogits.col(k) *= adv[static_cast<std::size_t>(k)] / static_cast<double>(B);
    }
    CMapM HW(params_.data() + layout_.head_w[ts], D, H);
    MapM dHW(grad.data() + layout_.head_w[ts], D, H);
    Eigen::Map<Eigen::VectorXd> dhb(grad.data() + layout_.head_b[ts], D);
    dHW.noalias() += dlogits * tr.h[ts].transpose();
    dhb += dlogits.rowwise().sum();

    Matrix dh = HW.transpose() * dlogits + dh_next;
    const Matrix& o = tr.o[ts];
    const Matrix& tc = tr.tanh_c[ts];
    Matrix d_o = (dh.array() * tc.array()).matrix();
    Matrix dc = (dc_next.array() + dh.array() * o.array() * (1.0 - tc.array().square())).matrix();
    const Matrix& gi = tr.i[ts];
    const Matrix& gf = tr.f[ts];
    const Matrix& gg = tr.g[ts];
    Matrix dgates(4 * H, B);
    dgates.topRows(H) = (dc.array() * gg.array() * gi.array() * (1.0 - gi.array())).matrix();
    dgates.middleRows(H, H) = (dc.array() * tr.c_prev[ts].array() * gf.array() * (1.0 - gf.array())).matrix();
    dgates.middleRows(2 * H, H) = (dc.array() * gi.array() * (1.0 - gg.array().square())).matrix();
    dgates.bottomRows(H) = (d_o.array() * o.array() * (1.0 - o.array())).matrix();
    dc_next = (dc.array() * gf.array()).matrix();

    Matrix xh(E + H, B);
    xh.topRows(E) = tr.x[ts];
    xh.bottomRows(H) = tr.h_prev[ts];
    dW.noalias() += dgates * xh.transpose();
    db += dgates.rowwise().sum();
    Matrix dxh = W.transpose() * dgates;
    dh_next = dxh.bottomRows(H);
    if (t == 0) {
      dstart += dxh.topRows(E).rowwise().sum();
    } else {
      const auto prev = static_cast<std::size_t>(t - 1);
      MapM demb(grad.data() + layout_.embed[prev], cardinalities_[prev], E);
      for (int k = 0; k < B; ++k) demb.row(tr.actions[prev][static_cast<std::size_t>(k)]) += dxh.topRows(E).col(k).transpose();
    }
  }
  return grad;
}

double PolicyAgent::reinforce_update(std::span<const Episode> batch) {
  const auto adv = advantages(batch);
  if (std::all_of(adv.begin(), adv.end(), [](double a) { return a == 0.0; })) return 0.0;
  double loss = 0.0;
  const auto grad = policy_gradient(batch, &loss);
  adam_.step(std::span<double>(params_), std::span<const double>(grad), adam_cfg_);
  return loss;
}

}  // namespace patchattack::search
