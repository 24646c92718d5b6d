#include "srvfnet/checkpoint.hpp"

#include <fstream>

#include "json.hpp"

#include "srvfnet/errors.hpp"

namespace srvfnet {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* name) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw ParseError(std::string("checkpoint: bad matrix for ") + name);
  }
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) {
      throw ParseError(std::string("checkpoint: ragged matrix for ") + name);
    }
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j, const char* name) {
  if (!j.is_array()) {
    throw ParseError(std::string("checkpoint: bad vector for ") + name);
  }
  Eigen::VectorXd v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

json dense_to_json(const DenseLayer& d) {
  return json{{"weights", matrix_to_json(d.weights)},
              {"bias", vector_to_json(d.bias)}};
}

DenseLayer dense_from_json(const json& j, const char* name) {
  return DenseLayer{matrix_from_json(j.at("weights"), name),
                    vector_from_json(j.at("bias"), name)};
}

json config_to_json(const TrainConfig& cfg) {
  json j{{"batch_size", cfg.batch_size},
         {"learning_rate", cfg.learning_rate},
         {"epochs", cfg.epochs},
         {"latent_dim", cfg.latent_dim},
         {"seed", cfg.seed},
         {"regime", cfg.regime == Regime::kFixedTemplate
                        ? "fixed-template"
                        : "template-prediction"},
         {"stop_template_gradient", cfg.stop_template_gradient},
         {"checkpoint_interval", cfg.checkpoint_interval},
         {"workers", cfg.workers},
         {"pi",
          {{"grid_size", cfg.pi.grid_size},
           {"smooth_size", cfg.pi.smooth_size},
           {"smoothing", cfg.pi.smoothing},
           {"norm_guard", cfg.pi.norm_guard}}},
         {"weights",
          {{"lambda_fr", cfg.weights.lambda_fr},
           {"lambda_kl", cfg.weights.lambda_kl},
           {"lambda_grad", cfg.weights.lambda_grad},
           {"lambda_grad2", cfg.weights.lambda_grad2}}}};
  if (cfg.target) j["target"] = vector_to_json(cfg.target->values);
  return j;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.latent_dim = j.at("latent_dim").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  const std::string regime = j.at("regime").get<std::string>();
  if (regime == "fixed-template") {
    cfg.regime = Regime::kFixedTemplate;
  } else if (regime == "template-prediction") {
    cfg.regime = Regime::kTemplatePrediction;
  } else {
    throw ParseError("checkpoint: unknown regime " + regime);
  }
  cfg.stop_template_gradient = j.at("stop_template_gradient").get<bool>();
  cfg.checkpoint_interval = j.at("checkpoint_interval").get<int>();
  cfg.workers = j.at("workers").get<int>();
  const json& pi = j.at("pi");
  cfg.pi.grid_size = pi.at("grid_size").get<int>();
  cfg.pi.smooth_size = pi.at("smooth_size").get<int>();
  cfg.pi.smoothing = pi.at("smoothing").get<bool>();
  cfg.pi.norm_guard = pi.at("norm_guard").get<double>();
  const json& w = j.at("weights");
  cfg.weights.lambda_fr = w.at("lambda_fr").get<double>();
  cfg.weights.lambda_kl = w.at("lambda_kl").get<double>();
  cfg.weights.lambda_grad = w.at("lambda_grad").get<double>();
  cfg.weights.lambda_grad2 = w.at("lambda_grad2").get<double>();
  if (j.contains("target")) {
    cfg.target = Srvf{vector_from_json(j.at("target"), "target"), true};
  }
  return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const TrainConfig& config) {
  validate(params);
  json j;
  j["format"] = kCheckpointFormat;
  j["dims"] = {{"grid_size", params.grid_size},
               {"latent_dim", params.latent_dim},
               {"smooth_size", config.pi.smooth_size}};
  j["config"] = config_to_json(config);

  json tensors;
  for (int s = 0; s < 3; ++s) {
    const std::string key = "encoder" + std::to_string(s);
    tensors[key] = dense_to_json(params.encoder[s]);
    const BatchNormLayer& bn = params.batch_norm[s];
    tensors["batch_norm" + std::to_string(s)] = {
        {"scale", vector_to_json(bn.scale)},
        {"shift", vector_to_json(bn.shift)},
        {"run_mean", vector_to_json(bn.run_mean)},
        {"run_var", vector_to_json(bn.run_var)}};
  }
  tensors["mu_head"] = dense_to_json(params.mu_head);
  tensors["logvar_head"] = dense_to_json(params.logvar_head);
  tensors["decoder"] = dense_to_json(params.decoder);
  j["tensors"] = std::move(tensors);

  std::ofstream out(path);
  if (!out) throw ParseError("checkpoint: cannot open " + path);
  out << j.dump(1) << '\n';
  if (!out) throw ParseError("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("checkpoint: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: invalid JSON: ") + e.what());
  }

  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw ParseError("checkpoint: unsupported format tag");
    }
    Checkpoint ckpt;
    ckpt.config = config_from_json(j.at("config"));
    ckpt.params.grid_size = j.at("dims").at("grid_size").get<int>();
    ckpt.params.latent_dim = j.at("dims").at("latent_dim").get<int>();
    const json& tensors = j.at("tensors");
    for (int s = 0; s < 3; ++s) {
      ckpt.params.encoder[s] =
          dense_from_json(tensors.at("encoder" + std::to_string(s)),
                          "encoder");
      const json& bn = tensors.at("batch_norm" + std::to_string(s));
      ckpt.params.batch_norm[s] = BatchNormLayer{
          vector_from_json(bn.at("scale"), "scale"),
          vector_from_json(bn.at("shift"), "shift"),
          vector_from_json(bn.at("run_mean"), "run_mean"),
          vector_from_json(bn.at("run_var"), "run_var")};
    }
    ckpt.params.mu_head = dense_from_json(tensors.at("mu_head"), "mu_head");
    ckpt.params.logvar_head =
        dense_from_json(tensors.at("logvar_head"), "logvar_head");
    ckpt.params.decoder = dense_from_json(tensors.at("decoder"), "decoder");
    validate(ckpt.params);
    return ckpt;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: missing or mistyped field: ") +
                     e.what());
  }
}

}  // namespace srvfnet
