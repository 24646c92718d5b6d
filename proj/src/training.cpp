#include "srvfnet/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "srvfnet/errors.hpp"
#include "srvfnet/parallel.hpp"

namespace srvfnet {

namespace {

constexpr double kUnitNormTol = 1e-6;
constexpr double kMeanNormFloor = 1e-12;

Eigen::VectorXd trapz_weights(int t) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(t, grid_spacing(t));
  w(0) *= 0.5;
  w(t - 1) *= 0.5;
  return w;
}

// Discrete second derivative: interior second differences scaled by
// (T-1)^2, with the end values copied from their neighbours.
Eigen::VectorXd second_derivative(const Eigen::VectorXd& g) {
  const int t = static_cast<int>(g.size());
  const double s2 = static_cast<double>(t - 1) * (t - 1);
  Eigen::VectorXd dd(t);
  for (int k = 1; k + 1 < t; ++k) {
    dd(k) = (g(k + 1) - 2.0 * g(k) + g(k - 1)) * s2;
  }
  dd(0) = dd(1);
  dd(t - 1) = dd(t - 2);
  return dd;
}

void require_finite(const Eigen::MatrixXd& m, const char* node) {
  if (!m.allFinite()) {
    throw NumericError(std::string("backward: non-finite value at ") + node);
  }
}

// Everything the backward pass needs from one train-mode batch forward.
struct ForwardState {
  EncoderCache enc;
  Eigen::MatrixXd z;  // B x l
  Eigen::MatrixXd v;  // B x T
  std::vector<graph::PiCache> pi;
  std::vector<graph::WarpCache> warp;
  Eigen::MatrixXd warped;  // B x T
  Eigen::VectorXd fr_i, kl_i, grad_i, grad2_i;
  Eigen::VectorXd qhat;       // prediction regime: unit template estimate
  Eigen::VectorXd qhat_mean;  // its pre-normalization mean
  double qhat_norm = 0.0;
};

LossBreakdown summarize(const ForwardState& st, const LossWeights& w) {
  LossBreakdown b;
  b.fr = w.lambda_fr * st.fr_i.mean();
  b.kl = w.lambda_kl * st.kl_i.mean();
  b.grad = w.lambda_grad * st.grad_i.mean();
  b.grad2 = w.lambda_grad2 * st.grad2_i.mean();
  b.total = b.fr + b.kl + b.grad + b.grad2;
  return b;
}

void forward_pass(const Eigen::MatrixXd& batch, const ModelParams& p,
                  const TrainConfig& cfg, const BatchNoise& noise,
                  const graph::ResampleMap& down, const graph::ResampleMap& up,
                  ForwardState& st) {
  const int b = static_cast<int>(batch.rows());
  const int t = p.grid_size;
  const Eigen::VectorXd w = trapz_weights(t);

  encode_batch(batch, p, noise, st.enc);
  st.z = ((st.enc.logvar.array() / 2.0).exp() * noise.eps.array() +
          st.enc.mu.array())
             .matrix();
  st.v = st.z * p.decoder.weights;
  st.v.rowwise() += p.decoder.bias.transpose();
  require_finite(st.v, "decoder output");

  st.pi.resize(b);
  st.warp.resize(b);
  st.warped.resize(b, t);
  st.fr_i.resize(b);
  st.kl_i.resize(b);
  st.grad_i.resize(b);
  st.grad2_i.resize(b);

  parallel_for(b, cfg.workers, [&](int i) {
    graph::pi_forward(st.v.row(i).transpose(), cfg.pi, down, up, st.pi[i]);
    graph::warp_forward(batch.row(i).transpose(),
                        st.pi[i].final_stage.gamma, st.warp[i]);
    st.warped.row(i) = st.warp[i].warped.transpose();

    st.kl_i(i) =
        0.5 * (st.enc.logvar.row(i).array().exp().sum() - p.latent_dim +
               st.enc.mu.row(i).squaredNorm() - st.enc.logvar.row(i).sum());
    st.grad_i(i) = st.warp[i].gdot.array().square().matrix().dot(w);
    st.grad2_i(i) = second_derivative(st.pi[i].final_stage.gamma)
                        .array()
                        .square()
                        .matrix()
                        .dot(w);
  });

  if (cfg.regime == Regime::kFixedTemplate) {
    const Eigen::VectorXd& target = cfg.target->values;
    for (int i = 0; i < b; ++i) {
      st.fr_i(i) =
          (st.warped.row(i).transpose() - target).array().square().matrix().dot(
              w);
    }
  } else {
    st.qhat_mean = st.warped.colwise().mean().transpose();
    st.qhat_norm =
        std::sqrt(st.qhat_mean.array().square().matrix().dot(w));
    if (st.qhat_norm < kMeanNormFloor) {
      throw DegenerateInputError(
          "template estimate: warped batch mean is numerically zero");
    }
    st.qhat = st.qhat_mean / st.qhat_norm;
    for (int i = 0; i < b; ++i) {
      st.fr_i(i) =
          (st.warped.row(i).transpose() - st.qhat).array().square().matrix().dot(
              w);
    }
  }
}

}  // namespace

void validate(const LossWeights& w) {
  if (w.lambda_fr < 0 || w.lambda_kl < 0 || w.lambda_grad < 0 ||
      w.lambda_grad2 < 0) {
    throw PreconditionError("LossWeights: weights must be nonnegative");
  }
}

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 2) throw PreconditionError("TrainConfig: batch_size < 2");
  if (!(cfg.learning_rate > 0)) {
    throw PreconditionError("TrainConfig: learning_rate must be > 0");
  }
  if (cfg.epochs < 0) throw PreconditionError("TrainConfig: epochs < 0");
  if (cfg.latent_dim < 1) throw PreconditionError("TrainConfig: latent_dim < 1");
  if (cfg.checkpoint_interval < 0 || cfg.workers < 1) {
    throw PreconditionError("TrainConfig: bad checkpoint_interval or workers");
  }
  validate(cfg.pi);
  validate(cfg.weights);
  if (!(cfg.weights.lambda_fr > 0)) {
    throw PreconditionError("TrainConfig: training needs lambda_fr > 0");
  }
  if (cfg.regime == Regime::kFixedTemplate) {
    if (!cfg.target) {
      throw PreconditionError("TrainConfig: fixed regime needs a template");
    }
    if (cfg.target->size() != cfg.pi.grid_size) {
      throw DimensionError("TrainConfig: template grid size mismatch");
    }
    if (std::abs(trapz_norm_sq(cfg.target->values) - 1.0) > kUnitNormTol) {
      throw PreconditionError("TrainConfig: template must be unit norm");
    }
  }
}

double kl_loss(const Eigen::VectorXd& mu, const Eigen::VectorXd& logvar) {
  if (mu.size() != logvar.size()) {
    throw DimensionError("kl_loss: mu/logvar length mismatch");
  }
  return 0.5 * (logvar.array().exp().sum() - mu.size() + mu.squaredNorm() -
                logvar.sum());
}

double fr_loss(const Srvf& q, const Diffeo& g, const Srvf& target) {
  if (target.size() != q.size()) {
    throw DimensionError("fr_loss: template grid size mismatch");
  }
  const Srvf warped = warp_srvf(q, g);
  const Eigen::VectorXd diff = target.values - warped.values;
  return trapz_norm_sq(diff);
}

double grad_penalty(const Diffeo& g) {
  validate(g);
  const Eigen::VectorXd gd = gamma_dot(g);
  return trapz_norm_sq(gd);
}

double grad2_penalty(const Diffeo& g) {
  validate(g);
  return trapz_norm_sq(second_derivative(g.values));
}

Srvf estimate_template(const std::vector<Srvf>& warped) {
  if (warped.empty()) throw PreconditionError("estimate_template: empty input");
  const int t = warped.front().size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(t);
  for (const Srvf& q : warped) {
    if (q.size() != t) {
      throw DimensionError("estimate_template: mixed grid sizes");
    }
    sum += q.values;
  }
  Eigen::VectorXd mean = sum / static_cast<double>(warped.size());
  const double nrm = trapz_norm(mean);
  if (nrm < kMeanNormFloor) {
    throw DegenerateInputError(
        "estimate_template: mean of warped inputs is numerically zero");
  }
  return Srvf{mean / nrm, true};
}

Eigen::MatrixXd stack_rows(const std::vector<Srvf>& data) {
  if (data.empty()) throw PreconditionError("stack_rows: empty input");
  const int t = data.front().size();
  Eigen::MatrixXd m(static_cast<int>(data.size()), t);
  for (int i = 0; i < m.rows(); ++i) {
    if (data[i].size() != t) throw DimensionError("stack_rows: mixed sizes");
    m.row(i) = data[i].values.transpose();
  }
  return m;
}

LossBreakdown loss_value(const Eigen::MatrixXd& batch, const ModelParams& p,
                         const TrainConfig& cfg, const BatchNoise& noise) {
  const auto down = graph::make_resample_map(cfg.pi.grid_size,
                                             cfg.pi.smooth_size);
  const auto up = graph::make_resample_map(cfg.pi.smooth_size,
                                           cfg.pi.grid_size);
  ForwardState st;
  forward_pass(batch, p, cfg, noise, down, up, st);
  return summarize(st, cfg.weights);
}

ModelGrads zero_grads(const ModelParams& p) {
  ModelGrads g;
  for (int s = 0; s < 3; ++s) {
    g.encoder[s].weights = Eigen::MatrixXd::Zero(p.encoder[s].weights.rows(),
                                                 p.encoder[s].weights.cols());
    g.encoder[s].bias = Eigen::VectorXd::Zero(p.encoder[s].bias.size());
    g.batch_norm[s].scale = Eigen::VectorXd::Zero(kEncoderWidths[s]);
    g.batch_norm[s].shift = Eigen::VectorXd::Zero(kEncoderWidths[s]);
  }
  auto zero_like = [](const DenseLayer& d) {
    return DenseLayer{
        Eigen::MatrixXd::Zero(d.weights.rows(), d.weights.cols()),
        Eigen::VectorXd::Zero(d.bias.size())};
  };
  g.mu_head = zero_like(p.mu_head);
  g.logvar_head = zero_like(p.logvar_head);
  g.decoder = zero_like(p.decoder);
  return g;
}

LossGradients loss_forward_backward(const Eigen::MatrixXd& batch,
                                    const ModelParams& p,
                                    const TrainConfig& cfg,
                                    const BatchNoise& noise) {
  const int b = static_cast<int>(batch.rows());
  const int t = p.grid_size;
  const double scale = static_cast<double>(t - 1);
  const Eigen::VectorXd w = trapz_weights(t);
  const auto down = graph::make_resample_map(cfg.pi.grid_size,
                                             cfg.pi.smooth_size);
  const auto up = graph::make_resample_map(cfg.pi.smooth_size,
                                           cfg.pi.grid_size);

  ForwardState st;
  forward_pass(batch, p, cfg, noise, down, up, st);

  LossGradients out;
  out.breakdown = summarize(st, cfg.weights);
  out.grads = zero_grads(p);
  for (int s = 0; s < 3; ++s) {
    out.bn_mean[s] = st.enc.batch_mean[s];
    out.bn_var[s] = st.enc.batch_var[s];
  }

  const LossWeights& lw = cfg.weights;
  const double fr_coef = lw.lambda_fr / b;

  // d(loss)/d(warped rows).
  Eigen::MatrixXd dwarped(b, t);
  if (cfg.regime == Regime::kFixedTemplate) {
    const Eigen::VectorXd& target = cfg.target->values;
    for (int i = 0; i < b; ++i) {
      dwarped.row(i) =
          (2.0 * fr_coef) *
          (w.array() * (st.warped.row(i).transpose() - target).array())
              .matrix()
              .transpose();
    }
  } else {
    for (int i = 0; i < b; ++i) {
      dwarped.row(i) =
          (2.0 * fr_coef) *
          (w.array() * (st.warped.row(i).transpose() - st.qhat).array())
              .matrix()
              .transpose();
    }
    if (!cfg.stop_template_gradient) {
      // The template estimate depends on every warp: push the gradient
      // through the normalized mean as well.
      Eigen::VectorXd dqhat = Eigen::VectorXd::Zero(t);
      for (int i = 0; i < b; ++i) {
        dqhat += (2.0 * fr_coef) *
                 (w.array() * (st.qhat - st.warped.row(i).transpose()).array())
                     .matrix();
      }
      const double mix = dqhat.dot(st.qhat);
      const Eigen::VectorXd dmean =
          (dqhat - (w.array() * st.qhat.array()).matrix() * mix) /
          st.qhat_norm;
      for (int i = 0; i < b; ++i) {
        dwarped.row(i) += dmean.transpose() / b;
      }
    }
  }

  // Per-row path: warped -> warp -> gamma -> pi -> v.
  Eigen::MatrixXd dv(b, t);
  const double g1_coef = lw.lambda_grad / b;
  const double g2_coef = lw.lambda_grad2 / b;
  parallel_for(b, cfg.workers, [&](int i) {
    Eigen::VectorXd dgamma = Eigen::VectorXd::Zero(t);
    graph::warp_backward(batch.row(i).transpose(), st.warp[i],
                         dwarped.row(i).transpose(), dgamma);

    // First-derivative penalty through the replicated forward differences.
    {
      Eigen::VectorXd dgd =
          (2.0 * g1_coef) * (w.array() * st.warp[i].gdot.array()).matrix();
      dgd(t - 2) += dgd(t - 1);
      for (int k = 0; k + 1 < t; ++k) {
        dgamma(k + 1) += dgd(k) * scale;
        dgamma(k) -= dgd(k) * scale;
      }
    }

    // Second-derivative penalty; the end entries mirror their neighbours.
    {
      const Eigen::VectorXd& g = st.pi[i].final_stage.gamma;
      const Eigen::VectorXd dd = second_derivative(g);
      Eigen::VectorXd ddd = (2.0 * g2_coef) * (w.array() * dd.array()).matrix();
      ddd(1) += ddd(0);
      ddd(t - 2) += ddd(t - 1);
      const double s2 = scale * scale;
      for (int k = 1; k + 1 < t; ++k) {
        dgamma(k + 1) += ddd(k) * s2;
        dgamma(k) -= 2.0 * ddd(k) * s2;
        dgamma(k - 1) += ddd(k) * s2;
      }
    }

    Eigen::VectorXd dvi;
    graph::pi_backward(st.pi[i], cfg.pi, down, up, dgamma, dvi);
    dv.row(i) = dvi.transpose();
  });
  require_finite(dv, "constraint layer input");

  // Decoder.
  out.grads.decoder.weights = st.z.transpose() * dv;
  out.grads.decoder.bias = dv.colwise().sum().transpose();
  Eigen::MatrixXd dz = dv * p.decoder.weights.transpose();

  // Reparameterization and the KL term.
  const double kl_coef = lw.lambda_kl / b;
  Eigen::MatrixXd dmu = dz;
  dmu += kl_coef * st.enc.mu;
  Eigen::MatrixXd dlogvar =
      (dz.array() * noise.eps.array() * (st.enc.logvar.array() / 2.0).exp() *
           0.5 +
       kl_coef * 0.5 * (st.enc.logvar.array().exp() - 1.0))
          .matrix();
  // Clamp on the logvar head: blocked where it saturated.
  dlogvar = (dlogvar.array() * st.enc.logvar_pass).matrix();

  // Heads.
  const Eigen::MatrixXd& h = st.enc.act[2];
  out.grads.mu_head.weights = h.transpose() * dmu;
  out.grads.mu_head.bias = dmu.colwise().sum().transpose();
  out.grads.logvar_head.weights = h.transpose() * dlogvar;
  out.grads.logvar_head.bias = dlogvar.colwise().sum().transpose();
  Eigen::MatrixXd dact = dmu * p.mu_head.weights.transpose() +
                         dlogvar * p.logvar_head.weights.transpose();

  // Encoder stages, last to first.
  for (int s = 2; s >= 0; --s) {
    const Eigen::MatrixXd dy = (dact.array() * st.enc.mult[s]).matrix();
    out.grads.batch_norm[s].scale =
        (dy.array() * st.enc.xhat[s].array()).colwise().sum().transpose();
    out.grads.batch_norm[s].shift = dy.colwise().sum().transpose();

    const Eigen::MatrixXd dxhat =
        (dy.array().rowwise() * p.batch_norm[s].scale.transpose().array())
            .matrix();
    const Eigen::RowVectorXd sum_d = dxhat.colwise().sum();
    const Eigen::RowVectorXd sum_dx =
        (dxhat.array() * st.enc.xhat[s].array()).colwise().sum().matrix();
    Eigen::MatrixXd dpre = static_cast<double>(b) * dxhat;
    dpre.rowwise() -= sum_d;
    dpre -= (st.enc.xhat[s].array().rowwise() * sum_dx.array()).matrix();
    dpre = (dpre.array().rowwise() *
            (st.enc.inv_std[s].array() / static_cast<double>(b)))
               .matrix();

    const Eigen::MatrixXd& input = (s == 0) ? st.enc.input : st.enc.act[s - 1];
    out.grads.encoder[s].weights = input.transpose() * dpre;
    out.grads.encoder[s].bias = dpre.colwise().sum().transpose();
    if (s > 0) dact = dpre * p.encoder[s].weights.transpose();
  }

  require_finite(out.grads.encoder[0].weights, "first encoder layer");
  return out;
}

BatchEval batch_loss_fixed(const Eigen::MatrixXd& batch, const Srvf& target,
                           const ModelParams& p, const LossWeights& w,
                           const PiConfig& cfg, Rng& rng) {
  validate(w);
  TrainConfig tc;
  tc.pi = cfg;
  tc.weights = w;
  tc.regime = Regime::kFixedTemplate;
  tc.target = target;
  tc.latent_dim = p.latent_dim;
  if (target.size() != p.grid_size) {
    throw DimensionError("batch_loss_fixed: template grid size mismatch");
  }
  const BatchNoise noise =
      draw_noise(static_cast<int>(batch.rows()), p, rng);
  const auto down = graph::make_resample_map(cfg.grid_size, cfg.smooth_size);
  const auto up = graph::make_resample_map(cfg.smooth_size, cfg.grid_size);
  ForwardState st;
  forward_pass(batch, p, tc, noise, down, up, st);
  BatchEval eval;
  eval.breakdown = summarize(st, w);
  eval.warps.reserve(batch.rows());
  for (int i = 0; i < batch.rows(); ++i) {
    eval.warps.push_back(Diffeo{st.pi[i].final_stage.gamma});
  }
  return eval;
}

BatchEval batch_loss_template_pred(const Eigen::MatrixXd& batch,
                                   const ModelParams& p, const LossWeights& w,
                                   const PiConfig& cfg, Rng& rng) {
  validate(w);
  TrainConfig tc;
  tc.pi = cfg;
  tc.weights = w;
  tc.regime = Regime::kTemplatePrediction;
  tc.latent_dim = p.latent_dim;
  const BatchNoise noise =
      draw_noise(static_cast<int>(batch.rows()), p, rng);
  const auto down = graph::make_resample_map(cfg.grid_size, cfg.smooth_size);
  const auto up = graph::make_resample_map(cfg.smooth_size, cfg.grid_size);
  ForwardState st;
  forward_pass(batch, p, tc, noise, down, up, st);
  BatchEval eval;
  eval.breakdown = summarize(st, w);
  eval.warps.reserve(batch.rows());
  for (int i = 0; i < batch.rows(); ++i) {
    eval.warps.push_back(Diffeo{st.pi[i].final_stage.gamma});
  }
  eval.predicted_template = Srvf{st.qhat, true};
  return eval;
}

LossBreakdown eval_loss(const std::vector<Srvf>& data, const ModelParams& p,
                        const TrainConfig& cfg, Srvf* predicted,
                        std::vector<Diffeo>* warps) {
  if (data.empty()) throw PreconditionError("eval_loss: empty input");
  const int n = static_cast<int>(data.size());
  const int t = p.grid_size;
  const Eigen::VectorXd w = trapz_weights(t);

  std::vector<Diffeo> gammas(n);
  std::vector<Srvf> warped(n);
  Eigen::VectorXd kl_i(n), grad_i(n), grad2_i(n);
  parallel_for(n, cfg.workers, [&](int i) {
    const auto [mu, logvar] = encode(data[i], p);
    gammas[i] = decode(mu, p, cfg.pi);  // z = mu at evaluation time
    warped[i] = warp_srvf(data[i], gammas[i]);
    kl_i(i) = kl_loss(mu, logvar);
    grad_i(i) = trapz_norm_sq(gamma_dot(gammas[i]));
    grad2_i(i) = trapz_norm_sq(second_derivative(gammas[i].values));
  });

  Eigen::VectorXd target;
  if (cfg.regime == Regime::kFixedTemplate) {
    target = cfg.target->values;
  } else {
    const Srvf qhat = estimate_template(warped);
    if (predicted) *predicted = qhat;
    target = qhat.values;
  }
  Eigen::VectorXd fr_i(n);
  for (int i = 0; i < n; ++i) {
    fr_i(i) = (warped[i].values - target).array().square().matrix().dot(w);
  }

  LossBreakdown b;
  b.fr = cfg.weights.lambda_fr * fr_i.mean();
  b.kl = cfg.weights.lambda_kl * kl_i.mean();
  b.grad = cfg.weights.lambda_grad * grad_i.mean();
  b.grad2 = cfg.weights.lambda_grad2 * grad2_i.mean();
  b.total = b.fr + b.kl + b.grad + b.grad2;
  if (warps) *warps = std::move(gammas);
  return b;
}

namespace {

// Applies fn(param, grad, m, v) to every trainable tensor, fixed order.
template <typename F>
void zip_tensors(ModelParams& p, const ModelGrads& g, ModelGrads& m,
                 ModelGrads& v, F&& fn) {
  for (int s = 0; s < 3; ++s) {
    fn(p.encoder[s].weights, g.encoder[s].weights, m.encoder[s].weights,
       v.encoder[s].weights);
    fn(p.encoder[s].bias, g.encoder[s].bias, m.encoder[s].bias,
       v.encoder[s].bias);
    fn(p.batch_norm[s].scale, g.batch_norm[s].scale, m.batch_norm[s].scale,
       v.batch_norm[s].scale);
    fn(p.batch_norm[s].shift, g.batch_norm[s].shift, m.batch_norm[s].shift,
       v.batch_norm[s].shift);
  }
  fn(p.mu_head.weights, g.mu_head.weights, m.mu_head.weights,
     v.mu_head.weights);
  fn(p.mu_head.bias, g.mu_head.bias, m.mu_head.bias, v.mu_head.bias);
  fn(p.logvar_head.weights, g.logvar_head.weights, m.logvar_head.weights,
     v.logvar_head.weights);
  fn(p.logvar_head.bias, g.logvar_head.bias, m.logvar_head.bias,
     v.logvar_head.bias);
  fn(p.decoder.weights, g.decoder.weights, m.decoder.weights,
     v.decoder.weights);
  fn(p.decoder.bias, g.decoder.bias, m.decoder.bias, v.decoder.bias);
}

}  // namespace

AdamState init_adam(const ModelParams& p) {
  return AdamState{zero_grads(p), zero_grads(p), 0};
}

void adam_step(ModelParams& p, const ModelGrads& g, AdamState& s, double lr) {
  s.step += 1;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(s.step));
  zip_tensors(p, g, s.m, s.v, [&](auto& param, const auto& grad, auto& m,
                                  auto& v) {
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
    v.array() = kAdamBeta2 * v.array() +
                (1.0 - kAdamBeta2) * grad.array().square();
    param.array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kAdamEps);
  });
}

TrainReport train(const std::vector<Srvf>& data, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
  validate(cfg);
  if (data.empty()) throw PreconditionError("train: empty data");
  const int t = cfg.pi.grid_size;
  for (const Srvf& q : data) {
    if (q.size() != t) throw DimensionError("train: data grid size mismatch");
  }
  const int n = static_cast<int>(data.size());

  Rng rng_init(derive_seed(cfg.seed, 0));
  Rng rng_noise(derive_seed(cfg.seed, 1));
  Rng rng_shuffle(derive_seed(cfg.seed, 2));

  ModelParams params = init_params(t, cfg.latent_dim, rng_init);
  AdamState adam = init_adam(params);
  const Eigen::MatrixXd x = stack_rows(data);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  ModelParams last_good = params;
  try {
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      // Seeded Fisher-Yates pass, high index down.
      for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng_shuffle.integer(i + 1));
        std::swap(order[i], order[j]);
      }
      for (int start = 0; start < n; start += cfg.batch_size) {
        const int rows = std::min(cfg.batch_size, n - start);
        if (rows < 2) continue;  // batch statistics undefined
        Eigen::MatrixXd batch(rows, t);
        for (int r = 0; r < rows; ++r) batch.row(r) = x.row(order[start + r]);

        const BatchNoise noise = draw_noise(rows, params, rng_noise);
        const LossGradients lg =
            loss_forward_backward(batch, params, cfg, noise);
        adam_step(params, lg.grads, adam, cfg.learning_rate);
        for (int s = 0; s < 3; ++s) {
          BatchNormLayer& bn = params.batch_norm[s];
          bn.run_mean = kBatchNormMomentum * bn.run_mean +
                        (1.0 - kBatchNormMomentum) * lg.bn_mean[s].transpose();
          bn.run_var = kBatchNormMomentum * bn.run_var +
                       (1.0 - kBatchNormMomentum) * lg.bn_var[s].transpose();
        }
      }

      const LossBreakdown logged = eval_loss(data, params, cfg);
      report.trace.push_back(logged);
      report.epochs_completed = epoch + 1;
      if (hooks.on_epoch) hooks.on_epoch(epoch, logged, elapsed());
      if (hooks.on_checkpoint && cfg.checkpoint_interval > 0 &&
          (epoch + 1) % cfg.checkpoint_interval == 0 &&
          epoch + 1 < cfg.epochs) {
        hooks.on_checkpoint(params, epoch + 1);
      }
      last_good = params;
    }
  } catch (const NumericError&) {
    if (hooks.on_checkpoint) {
      hooks.on_checkpoint(last_good, report.epochs_completed);
    }
    throw;
  }

  report.wall_seconds = elapsed();
  report.params = std::move(params);
  if (hooks.on_checkpoint) {
    hooks.on_checkpoint(report.params, cfg.epochs);
  }
  return report;
}

}  // namespace srvfnet
