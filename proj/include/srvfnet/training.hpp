#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "srvfnet/diffeo.hpp"
#include "srvfnet/function.hpp"
#include "srvfnet/model.hpp"
#include "srvfnet/rng.hpp"

namespace srvfnet {

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

struct LossWeights {
  double lambda_fr = 1.0;
  double lambda_kl = 1e-2;
  double lambda_grad = 1e-3;
  double lambda_grad2 = 1e-4;
};

/// Nonnegativity only; lambda_fr > 0 is a training-entry requirement so the
/// gradient engine stays testable with every term switched off.
void validate(const LossWeights& w);

enum class Regime { kFixedTemplate, kTemplatePrediction };

struct TrainConfig {
  int batch_size = 512;
  double learning_rate = 1e-3;
  int epochs = 0;
  int latent_dim = 0;
  PiConfig pi;
  LossWeights weights;
  std::uint64_t seed = 0;
  Regime regime = Regime::kFixedTemplate;
  std::optional<Srvf> target;          // fixed-template regime only
  bool stop_template_gradient = false;  // prediction regime: freeze q-hat
  int checkpoint_interval = 0;          // epochs between snapshots; 0 = final
  int workers = 1;
};

void validate(const TrainConfig& cfg);

// Loss terms.

/// 0.5 [ sum exp(logvar) - l + mu.mu - sum logvar ]; >= 0, zero only at the
/// standard normal.
double kl_loss(const Eigen::VectorXd& mu, const Eigen::VectorXd& logvar);

/// Squared trapezoidal distance between the template and the warped q.
double fr_loss(const Srvf& q, const Diffeo& g, const Srvf& target);

/// Trapezoidal norm of the discrete velocity; >= 1, equality at the identity.
double grad_penalty(const Diffeo& g);

/// Trapezoidal norm of the discrete second derivative; 0 at the identity.
double grad2_penalty(const Diffeo& g);

/// Unit-normalized Euclidean mean of the warped batch.
Srvf estimate_template(const std::vector<Srvf>& warped);

/// Weighted per-term batch means; the components sum to total.
struct LossBreakdown {
  double total = 0.0;
  double fr = 0.0;
  double kl = 0.0;
  double grad = 0.0;
  double grad2 = 0.0;
};

struct BatchEval {
  LossBreakdown breakdown;
  std::vector<Diffeo> warps;   // one per batch row
  Srvf predicted_template;     // prediction regime only
};

BatchEval batch_loss_fixed(const Eigen::MatrixXd& batch, const Srvf& target,
                           const ModelParams& p, const LossWeights& w,
                           const PiConfig& cfg, Rng& rng);

BatchEval batch_loss_template_pred(const Eigen::MatrixXd& batch,
                                   const ModelParams& p, const LossWeights& w,
                                   const PiConfig& cfg, Rng& rng);

// Gradient engine.

struct AffineGrad {
  Eigen::VectorXd scale;
  Eigen::VectorXd shift;
};

struct ModelGrads {
  std::array<DenseLayer, 3> encoder;
  std::array<AffineGrad, 3> batch_norm;
  DenseLayer mu_head;
  DenseLayer logvar_head;
  DenseLayer decoder;
};

ModelGrads zero_grads(const ModelParams& p);

struct LossGradients {
  LossBreakdown breakdown;
  ModelGrads grads;
  // Batch statistics of the forward pass, so the caller can fold them into
  // the running averages after the parameter update.
  std::array<Eigen::RowVectorXd, 3> bn_mean;
  std::array<Eigen::RowVectorXd, 3> bn_var;
};

/// Train-mode batch loss with frozen noise. Shared by both regimes; the
/// fixed-template target comes from cfg. Value only.
LossBreakdown loss_value(const Eigen::MatrixXd& batch, const ModelParams& p,
                         const TrainConfig& cfg, const BatchNoise& noise);

/// Reverse-mode gradients of the batch loss w.r.t. every trainable tensor.
/// Interpolation nodes use the left-segment subgradient at knots.
LossGradients loss_forward_backward(const Eigen::MatrixXd& batch,
                                    const ModelParams& p,
                                    const TrainConfig& cfg,
                                    const BatchNoise& noise);

/// Deterministic whole-set evaluation: running statistics, dropout off,
/// z = mu. The prediction regime measures FR against the template estimated
/// from the warped set itself (returned via *predicted if given).
LossBreakdown eval_loss(const std::vector<Srvf>& data, const ModelParams& p,
                        const TrainConfig& cfg, Srvf* predicted = nullptr,
                        std::vector<Diffeo>* warps = nullptr);

// Optimizer.

struct AdamState {
  ModelGrads m;
  ModelGrads v;
  long step = 0;
};

AdamState init_adam(const ModelParams& p);

/// Standard bias-corrected Adam update, in place.
void adam_step(ModelParams& p, const ModelGrads& g, AdamState& s, double lr);

// Training loop.

struct TrainHooks {
  std::function<void(const ModelParams&, int epoch)> on_checkpoint;
  std::function<void(int epoch, const LossBreakdown&, double wall_seconds)>
      on_epoch;
};

struct TrainReport {
  std::vector<LossBreakdown> trace;  // one whole-set evaluation per epoch
  double wall_seconds = 0.0;
  ModelParams params;
  int epochs_completed = 0;
};

/// Seeded mini-batch training. One epoch = one pass over a freshly shuffled
/// copy of the data; a tail batch smaller than 2 is skipped. A numeric error
/// mid-epoch checkpoints the last completed epoch's parameters, then
/// rethrows. Deterministic at workers = 1.
TrainReport train(const std::vector<Srvf>& data, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

/// Rows of the returned matrix are the SRVF value vectors.
Eigen::MatrixXd stack_rows(const std::vector<Srvf>& data);

}  // namespace srvfnet
