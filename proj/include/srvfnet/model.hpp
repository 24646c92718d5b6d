#pragma once

#include <array>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "srvfnet/diffeo.hpp"
#include "srvfnet/function.hpp"
#include "srvfnet/rng.hpp"

namespace srvfnet {

inline constexpr std::array<int, 3> kEncoderWidths{528, 256, 128};
inline constexpr double kDropoutRate = 0.65;
inline constexpr double kDropoutKeep = 1.0 - kDropoutRate;
inline constexpr double kBatchNormMomentum = 0.99;
inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kLogVarClamp = 15.0;

struct DenseLayer {
  Eigen::MatrixXd weights;  // fan_in x fan_out
  Eigen::VectorXd bias;
};

struct BatchNormLayer {
  Eigen::VectorXd scale;
  Eigen::VectorXd shift;
  Eigen::VectorXd run_mean;
  Eigen::VectorXd run_var;
};

struct ModelParams {
  std::array<DenseLayer, 3> encoder;
  std::array<BatchNormLayer, 3> batch_norm;
  DenseLayer mu_head;
  DenseLayer logvar_head;
  DenseLayer decoder;
  int grid_size = 0;
  int latent_dim = 0;
};

void validate(const ModelParams& p);

enum class Mode { kTrain, kInfer };

struct LatentDraw {
  Eigen::VectorXd z;
  Eigen::VectorXd eps;  // the standard-normal draw, kept for reproducibility
};

/// Glorot-uniform weights, zero biases, identity batch-norm with unit
/// running variance. Fill order is fixed so one seed gives one byte stream.
ModelParams init_params(int grid_size, int latent_dim, Rng& rng);

/// Inference-mode posterior parameters for a single input: running batch-norm
/// statistics, dropout as identity. Deterministic in (q, p).
std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const Srvf& q,
                                                   const ModelParams& p);

/// Mode dispatcher matching the batch-oriented training path: train mode on a
/// single function is rejected (batch statistics need >= 2 rows).
std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const Srvf& q,
                                                   const ModelParams& p,
                                                   Mode mode, Rng& rng);

LatentDraw reparameterize(const Eigen::VectorXd& mu,
                          const Eigen::VectorXd& logvar, Rng& rng);

/// dense(z) pushed through the diffeomorphic constraint layer.
Diffeo decode(const Eigen::VectorXd& z, const ModelParams& p,
              const PiConfig& cfg);

/// n prior draws z ~ N(0, I) decoded to warps. Deterministic given the rng.
std::vector<Diffeo> sample_warps(const ModelParams& p, int n,
                                 const PiConfig& cfg, Rng& rng);

// Batch train-mode machinery shared with the gradient engine. Rows of a
// batch matrix are functions.

/// Per-batch stochastic state, drawn up front so the same masks can be
/// replayed by the finite-difference oracle.
struct BatchNoise {
  Eigen::MatrixXd eps;                        // B x latent_dim
  std::array<Eigen::ArrayXXd, 3> keep_mask;   // B x width, entries in {0,1}
};

BatchNoise draw_noise(int batch_size, const ModelParams& p, Rng& rng);

/// Everything the backward pass needs from the encoder forward.
struct EncoderCache {
  Eigen::MatrixXd input;
  std::array<Eigen::MatrixXd, 3> xhat;      // normalized pre-activations
  std::array<Eigen::RowVectorXd, 3> inv_std;
  std::array<Eigen::RowVectorXd, 3> batch_mean;
  std::array<Eigen::RowVectorXd, 3> batch_var;  // biased
  std::array<Eigen::ArrayXXd, 3> mult;      // combined ReLU/dropout factor
  std::array<Eigen::MatrixXd, 3> act;       // stage outputs
  Eigen::MatrixXd mu;                       // B x latent_dim
  Eigen::MatrixXd logvar;
  Eigen::ArrayXXd logvar_pass;              // 1 where the clamp is inactive
};

/// Train-mode encoder over a batch: batch statistics, inverted dropout with
/// the given masks. Running statistics are untouched; the training loop
/// folds them in afterwards via update_running_stats, so the evaluation and
/// finite-difference paths can reuse this forward without side effects.
void encode_batch(const Eigen::MatrixXd& batch, const ModelParams& p,
                  const BatchNoise& noise, EncoderCache& cache);

/// run <- momentum * run + (1 - momentum) * batch, for mean and variance.
void update_running_stats(ModelParams& p, const EncoderCache& cache);

}  // namespace srvfnet
