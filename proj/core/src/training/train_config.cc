#include "codeil/training/train_config.h"

#include <cmath>

#include "codeil/error.h"

namespace codeil::training {

std::string MethodName(Method method) {
  switch (method) {
    case Method::kBc:
      return "bc";
    case Method::kBcNoise:
      return "bc_noise";
    case Method::kCode:
      return "code";
  }
  return "?";
}

Method ParseMethod(const std::string& name) {
  if (name == "bc") return Method::kBc;
  if (name == "bc_noise") return Method::kBcNoise;
  if (name == "code") return Method::kCode;
  throw InvalidArgument("unknown method '" + name +
                        "' (valid: bc, bc_noise, code)");
}

void TrainConfig::Validate() const {
  if (method == Method::kCode && !(nu > 0.0)) {
    throw InvalidArgument("nu must be > 0 for code");
  }
  if (!(lr_min > 0.0) || !(lr_min <= lr)) {
    throw InvalidArgument("need 0 < lr_min <= lr");
  }
  if (!(weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be >= 0");
  if (!(lr_decay > 0.0 && lr_decay < 1.0)) {
    throw InvalidArgument("lr_decay must lie in (0, 1)");
  }
  if (plateau_patience < 1) throw InvalidArgument("plateau_patience must be >= 1");
  if (max_epochs < 1) throw InvalidArgument("max_epochs must be >= 1");
  if (batch_size < 0) throw InvalidArgument("batch_size must be >= 0");
  if (!(noise.fraction > 0.0 && noise.fraction <= 1.0)) {
    throw InvalidArgument("noise fraction must lie in (0, 1]");
  }
  if (!(noise.sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
}

int TrainConfig::ResolvedBatchSize(int num_trajectories) const {
  if (batch_size > 0) return batch_size;
  return num_trajectories < 50 ? 500 : 2000;
}

double NuFromLambda(double lambda, double ts) { return lambda * ts * ts; }

TrainConfig TrainConfigFromJson(const Json& json) {
  const std::string where = "train";
  RequireKeys(json,
              {"method", "nu", "lr", "weight_decay", "lr_decay",
               "plateau_patience", "lr_min", "max_epochs", "batch_size",
               "noise", "seed", "alternating"},
              where);
  TrainConfig c;
  std::string method = MethodName(c.method);
  ReadOptional(json, "method", method, where);
  c.method = ParseMethod(method);
  ReadOptional(json, "nu", c.nu, where);
  ReadOptional(json, "lr", c.lr, where);
  ReadOptional(json, "weight_decay", c.weight_decay, where);
  ReadOptional(json, "lr_decay", c.lr_decay, where);
  ReadOptional(json, "plateau_patience", c.plateau_patience, where);
  ReadOptional(json, "lr_min", c.lr_min, where);
  ReadOptional(json, "max_epochs", c.max_epochs, where);
  ReadOptional(json, "batch_size", c.batch_size, where);
  ReadOptional(json, "seed", c.seed, where);
  ReadOptional(json, "alternating", c.alternating, where);
  if (json.contains("noise")) {
    const Json& noise = json.at("noise");
    RequireKeys(noise, {"sigma", "fraction"}, "train.noise");
    ReadOptional(noise, "sigma", c.noise.sigma, "train.noise");
    ReadOptional(noise, "fraction", c.noise.fraction, "train.noise");
  }
  c.Validate();
  return c;
}

Json ToJson(const TrainConfig& c) {
  Json j;
  j["method"] = MethodName(c.method);
  j["nu"] = c.nu;
  j["lr"] = c.lr;
  j["weight_decay"] = c.weight_decay;
  j["lr_decay"] = c.lr_decay;
  j["plateau_patience"] = c.plateau_patience;
  j["lr_min"] = c.lr_min;
  j["max_epochs"] = c.max_epochs;
  j["batch_size"] = c.batch_size;
  j["noise"] = {{"sigma", c.noise.sigma}, {"fraction", c.noise.fraction}};
  j["seed"] = c.seed;
  j["alternating"] = c.alternating;
  return j;
}

}  // namespace codeil::training
