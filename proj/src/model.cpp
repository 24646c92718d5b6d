#include "srvfnet/model.hpp"

#include <cmath>
#include <string>

#include "srvfnet/errors.hpp"

namespace srvfnet {

namespace {

DenseLayer glorot_dense(int fan_in, int fan_out, Rng& rng) {
  DenseLayer layer;
  layer.weights.resize(fan_in, fan_out);
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (int r = 0; r < fan_in; ++r) {
    for (int c = 0; c < fan_out; ++c) {
      layer.weights(r, c) = rng.uniform(-bound, bound);
    }
  }
  layer.bias = Eigen::VectorXd::Zero(fan_out);
  return layer;
}

BatchNormLayer identity_norm(int width) {
  BatchNormLayer bn;
  bn.scale = Eigen::VectorXd::Ones(width);
  bn.shift = Eigen::VectorXd::Zero(width);
  bn.run_mean = Eigen::VectorXd::Zero(width);
  bn.run_var = Eigen::VectorXd::Ones(width);
  return bn;
}

void check_dense(const DenseLayer& d, int fan_in, int fan_out,
                 const char* name) {
  if (d.weights.rows() != fan_in || d.weights.cols() != fan_out ||
      d.bias.size() != fan_out) {
    throw DimensionError(std::string("ModelParams: bad shape in ") + name);
  }
  if (!d.weights.allFinite() || !d.bias.allFinite()) {
    throw NumericError(std::string("ModelParams: non-finite tensor in ") +
                       name);
  }
}

void require_finite(const Eigen::MatrixXd& m, const std::string& where) {
  if (!m.allFinite()) {
    throw NumericError("encode: non-finite activation in " + where);
  }
}

}  // namespace

void validate(const ModelParams& p) {
  if (p.grid_size < 3 || p.latent_dim < 1) {
    throw PreconditionError("ModelParams: need grid_size >= 3, latent_dim >= 1");
  }
  int fan_in = p.grid_size;
  for (int s = 0; s < 3; ++s) {
    check_dense(p.encoder[s], fan_in, kEncoderWidths[s], "encoder");
    const BatchNormLayer& bn = p.batch_norm[s];
    const int w = kEncoderWidths[s];
    if (bn.scale.size() != w || bn.shift.size() != w ||
        bn.run_mean.size() != w || bn.run_var.size() != w) {
      throw DimensionError("ModelParams: bad batch-norm shape");
    }
    if (!bn.scale.allFinite() || !bn.shift.allFinite() ||
        !bn.run_mean.allFinite() || !bn.run_var.allFinite()) {
      throw NumericError("ModelParams: non-finite batch-norm tensor");
    }
    if (bn.run_var.minCoeff() <= 0.0) {
      throw PreconditionError("ModelParams: running variance must be > 0");
    }
    fan_in = w;
  }
  check_dense(p.mu_head, kEncoderWidths[2], p.latent_dim, "mu head");
  check_dense(p.logvar_head, kEncoderWidths[2], p.latent_dim, "logvar head");
  check_dense(p.decoder, p.latent_dim, p.grid_size, "decoder");
}

ModelParams init_params(int grid_size, int latent_dim, Rng& rng) {
  if (grid_size < 3 || latent_dim < 1) {
    throw PreconditionError("init_params: need grid_size >= 3, latent_dim >= 1");
  }
  ModelParams p;
  p.grid_size = grid_size;
  p.latent_dim = latent_dim;
  int fan_in = grid_size;
  for (int s = 0; s < 3; ++s) {
    p.encoder[s] = glorot_dense(fan_in, kEncoderWidths[s], rng);
    p.batch_norm[s] = identity_norm(kEncoderWidths[s]);
    fan_in = kEncoderWidths[s];
  }
  p.mu_head = glorot_dense(kEncoderWidths[2], latent_dim, rng);
  p.logvar_head = glorot_dense(kEncoderWidths[2], latent_dim, rng);
  p.decoder = glorot_dense(latent_dim, grid_size, rng);
  return p;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const Srvf& q,
                                                   const ModelParams& p) {
  if (q.size() != p.grid_size) throw DimensionError("encode: bad input length");
  Eigen::VectorXd x = q.values;
  for (int s = 0; s < 3; ++s) {
    const BatchNormLayer& bn = p.batch_norm[s];
    Eigen::VectorXd pre =
        p.encoder[s].weights.transpose() * x + p.encoder[s].bias;
    Eigen::VectorXd xhat =
        (pre - bn.run_mean).cwiseQuotient(
            (bn.run_var.array() + kBatchNormEps).sqrt().matrix());
    x = (bn.scale.cwiseProduct(xhat) + bn.shift).cwiseMax(0.0);
    require_finite(x, "encoder stage " + std::to_string(s));
  }
  Eigen::VectorXd mu = p.mu_head.weights.transpose() * x + p.mu_head.bias;
  Eigen::VectorXd logvar =
      (p.logvar_head.weights.transpose() * x + p.logvar_head.bias)
          .cwiseMax(-kLogVarClamp)
          .cwiseMin(kLogVarClamp);
  require_finite(mu, "mu head");
  require_finite(logvar, "logvar head");
  return {std::move(mu), std::move(logvar)};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const Srvf& q,
                                                   const ModelParams& p,
                                                   Mode mode, Rng& rng) {
  (void)rng;
  if (mode == Mode::kTrain) {
    throw PreconditionError(
        "encode: train mode needs a batch of size >= 2 for batch statistics");
  }
  return encode(q, p);
}

LatentDraw reparameterize(const Eigen::VectorXd& mu,
                          const Eigen::VectorXd& logvar, Rng& rng) {
  if (mu.size() != logvar.size()) {
    throw DimensionError("reparameterize: mu/logvar length mismatch");
  }
  if (!mu.allFinite() || !logvar.allFinite()) {
    throw PreconditionError("reparameterize: non-finite inputs");
  }
  LatentDraw d;
  d.eps.resize(mu.size());
  for (int i = 0; i < d.eps.size(); ++i) d.eps(i) = rng.gaussian();
  d.z = (logvar.array() / 2.0).exp().matrix().cwiseProduct(d.eps) + mu;
  return d;
}

Diffeo decode(const Eigen::VectorXd& z, const ModelParams& p,
              const PiConfig& cfg) {
  if (z.size() != p.latent_dim) throw DimensionError("decode: bad z length");
  if (!z.allFinite()) throw PreconditionError("decode: non-finite z");
  if (cfg.grid_size != p.grid_size) {
    throw DimensionError("decode: PiConfig grid does not match model");
  }
  const Eigen::VectorXd v =
      p.decoder.weights.transpose() * z + p.decoder.bias;
  return pi_layer(v, cfg);
}

std::vector<Diffeo> sample_warps(const ModelParams& p, int n,
                                 const PiConfig& cfg, Rng& rng) {
  if (n < 1) throw PreconditionError("sample_warps: n must be >= 1");
  std::vector<Diffeo> out;
  out.reserve(n);
  Eigen::VectorXd z(p.latent_dim);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p.latent_dim; ++j) z(j) = rng.gaussian();
    out.push_back(decode(z, p, cfg));
  }
  return out;
}

BatchNoise draw_noise(int batch_size, const ModelParams& p, Rng& rng) {
  BatchNoise noise;
  noise.eps.resize(batch_size, p.latent_dim);
  for (int i = 0; i < batch_size; ++i) {
    for (int j = 0; j < p.latent_dim; ++j) noise.eps(i, j) = rng.gaussian();
  }
  for (int s = 0; s < 3; ++s) {
    noise.keep_mask[s].resize(batch_size, kEncoderWidths[s]);
    for (int i = 0; i < batch_size; ++i) {
      for (int j = 0; j < kEncoderWidths[s]; ++j) {
        noise.keep_mask[s](i, j) = rng.uniform() < kDropoutKeep ? 1.0 : 0.0;
      }
    }
  }
  return noise;
}

void encode_batch(const Eigen::MatrixXd& batch, const ModelParams& p,
                  const BatchNoise& noise, EncoderCache& cache) {
  const int b = static_cast<int>(batch.rows());
  if (b < 2) {
    throw PreconditionError("encode: train mode needs batch size >= 2");
  }
  if (batch.cols() != p.grid_size) {
    throw DimensionError("encode: bad batch width");
  }
  cache.input = batch;
  const Eigen::MatrixXd* cur = &cache.input;
  for (int s = 0; s < 3; ++s) {
    const BatchNormLayer& bn = p.batch_norm[s];
    Eigen::MatrixXd pre = (*cur) * p.encoder[s].weights;
    pre.rowwise() += p.encoder[s].bias.transpose();
    require_finite(pre, "encoder stage " + std::to_string(s));

    cache.batch_mean[s] = pre.colwise().mean();
    Eigen::MatrixXd centered = pre.rowwise() - cache.batch_mean[s];
    cache.batch_var[s] =
        (centered.array().square().colwise().sum() / b).matrix();  // biased
    cache.inv_std[s] =
        (cache.batch_var[s].array() + kBatchNormEps).rsqrt().matrix();
    cache.xhat[s] =
        (centered.array().rowwise() * cache.inv_std[s].array()).matrix();

    Eigen::MatrixXd y =
        (cache.xhat[s].array().rowwise() * bn.scale.transpose().array())
            .matrix();
    y.rowwise() += bn.shift.transpose();
    cache.mult[s] = (y.array() > 0.0).cast<double>() * noise.keep_mask[s] /
                    kDropoutKeep;
    cache.act[s] = (y.array() * cache.mult[s]).matrix();
    require_finite(cache.act[s], "encoder stage " + std::to_string(s));
    cur = &cache.act[s];
  }

  cache.mu = (*cur) * p.mu_head.weights;
  cache.mu.rowwise() += p.mu_head.bias.transpose();
  Eigen::MatrixXd raw = (*cur) * p.logvar_head.weights;
  raw.rowwise() += p.logvar_head.bias.transpose();
  cache.logvar_pass = (raw.array().abs() < kLogVarClamp).cast<double>();
  cache.logvar =
      raw.array().max(-kLogVarClamp).min(kLogVarClamp).matrix();
  require_finite(cache.mu, "mu head");
  require_finite(cache.logvar, "logvar head");
}

void update_running_stats(ModelParams& p, const EncoderCache& cache) {
  for (int s = 0; s < 3; ++s) {
    BatchNormLayer& bn = p.batch_norm[s];
    bn.run_mean = kBatchNormMomentum * bn.run_mean +
                  (1.0 - kBatchNormMomentum) * cache.batch_mean[s].transpose();
    bn.run_var = kBatchNormMomentum * bn.run_var +
                 (1.0 - kBatchNormMomentum) * cache.batch_var[s].transpose();
  }
}

}  // namespace srvfnet
