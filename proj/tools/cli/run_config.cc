#include "run_config.h"

#include "codeil/binary_io.h"
#include "codeil/error.h"

namespace codeil::cli {

RunConfig RunConfigFromJson(const Json& json) {
  RequireKeys(json,
              {"arm", "sampler", "expert", "train", "model", "eval", "sweep"},
              "config");
  RunConfig c;
  Json gen = Json::object();
  for (const char* key : {"arm", "sampler", "expert"}) {
    if (json.contains(key)) gen[key] = json.at(key);
  }
  c.gen = demos::GeneratorConfigFromJson(gen);
  if (json.contains("train")) c.train = training::TrainConfigFromJson(json.at("train"));
  if (json.contains("model")) c.model = training::ModelConfigFromJson(json.at("model"));
  if (json.contains("eval")) {
    const Json& e = json.at("eval");
    RequireKeys(e, {"success_radius", "validation", "audit"}, "eval");
    ReadOptional(e, "success_radius", c.eval.success_radius, "eval");
    ReadOptional(e, "validation", c.eval.validation, "eval");
    ReadOptional(e, "audit", c.eval.audit, "eval");
    if (!(c.eval.success_radius > 0.0)) {
      throw InvalidArgument("eval.success_radius must be > 0");
    }
    if (c.eval.validation < 0) throw InvalidArgument("eval.validation must be >= 0");
  }
  if (json.contains("sweep")) {
    c.sweep = evaluation::SweepConfigFromJson(json.at("sweep"));
  }
  c.sweep.validation = c.eval.validation;
  c.sweep.success_radius = c.eval.success_radius;
  c.sweep.audit = c.eval.audit;
  for (const char* key :
       {"arm", "sampler", "expert", "train", "model", "eval", "sweep"}) {
    if (!json.contains(key)) c.defaulted.push_back(key);
  }
  return c;
}

RunConfig LoadRunConfig(const std::string& path) {
  if (path.empty()) return RunConfigFromJson(Json::object());
  return RunConfigFromJson(ParseJson(ReadFile(path), path));
}

Json ToJson(const RunConfig& c) {
  Json j = demos::ToJson(c.gen);
  j["train"] = training::ToJson(c.train);
  j["model"] = training::ToJson(c.model);
  j["eval"] = {{"success_radius", c.eval.success_radius},
               {"validation", c.eval.validation},
               {"audit", c.eval.audit}};
  j["sweep"] = evaluation::ToJson(c.sweep);
  return j;
}

}  // namespace codeil::cli
