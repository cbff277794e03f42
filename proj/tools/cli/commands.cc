#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli.h"
#include "codeil/binary_io.h"
#include "codeil/demos/dataset.h"
#include "codeil/demos/expert.h"
#include "codeil/error.h"
#include "codeil/evaluation/plot.h"
#include "codeil/evaluation/report.h"
#include "codeil/evaluation/sweep.h"
#include "codeil/format.h"
#include "codeil/policies/rmp.h"
#include "codeil/training/trainer.h"
#include "run_config.h"

namespace codeil::cli {
namespace {

namespace fs = std::filesystem;

// Relative output paths are placed under CODEIL_OUT_ROOT when it is set.
fs::path OutputDir(const std::string& out) {
  fs::path p(out);
  if (const char* root = std::getenv("CODEIL_OUT_ROOT");
      root != nullptr && *root != '\0' && p.is_relative()) {
    p = fs::path(root) / p;
  }
  fs::create_directories(p);
  return p;
}

void WriteText(const fs::path& dir, const std::string& name,
               std::string_view text) {
  WriteFile((dir / name).string(), text);
}

struct Input {
  std::string role;
  std::string path;
};

// Resolved config plus FNV-1a digests of every input file.
void WriteProvenance(const fs::path& dir, const std::string& command,
                     const RunConfig& config, const std::string& config_path,
                     const std::vector<Input>& inputs, const Json& extra) {
  const std::string resolved = ToJson(config).dump(2) + "\n";
  WriteText(dir, "config.json", resolved);
  Json p;
  p["command"] = command;
  p["config_fnv1a"] = HexDigest(Fnv1a(resolved));
  p["config_source"] = config_path.empty()
                           ? Json("defaults")
                           : Json(fs::path(config_path).filename().string());
  p["defaulted_sections"] = config.defaulted;
  Json in = Json::object();
  for (const Input& i : inputs) {
    in[i.role] = {{"file", fs::path(i.path).filename().string()},
                  {"fnv1a", HexDigest(Fnv1a(ReadFile(i.path)))}};
  }
  p["inputs"] = in;
  for (const auto& [k, v] : extra.items()) p[k] = v;
  WriteText(dir, "provenance.json", p.dump(2) + "\n");
}

std::vector<arm::Trajectory> Slice(const demos::Dataset& data, int first,
                                   int count) {
  return {data.trajectories.begin() + first,
          data.trajectories.begin() + first + count};
}

// Trajectories outside the held-out tail.
int TrainingPool(const demos::Dataset& data, const RunConfig& config) {
  const int n = static_cast<int>(data.trajectories.size());
  const int pool = n - config.eval.validation;
  if (pool < 1) {
    throw InvalidArgument("dataset has " + std::to_string(n) +
                          " trajectories, eval.validation holds out " +
                          std::to_string(config.eval.validation));
  }
  return pool;
}

diffkit::Checkpoint ExpertCheckpoint(const demos::GeneratorConfig& gen) {
  Json m;
  m["class"] = "expert";
  m["generator"] = demos::ToJson(gen);
  return {m.dump(), {}};
}

std::string CheckpointClass(const diffkit::Checkpoint& ck) {
  Json m;
  try {
    m = Json::parse(ck.manifest);
  } catch (const Json::exception&) {
    throw DataError("checkpoint manifest is not JSON");
  }
  if (!m.is_object() || !m.contains("class") || !m["class"].is_string()) {
    throw DataError("checkpoint manifest has no class");
  }
  return m["class"].get<std::string>();
}

void CheckArm(const arm::ArmSpec& expected, const arm::ArmSpec& got,
              const std::string& what) {
  if (expected.link_lengths != got.link_lengths) {
    throw DataError(what + " was built for a different arm than the dataset");
  }
}

int EnvJobs() {
  const char* v = std::getenv("CODEIL_JOBS");
  if (v == nullptr || *v == '\0') return 1;
  try {
    const int jobs = std::stoi(v);
    if (jobs >= 1) return jobs;
  } catch (const std::exception&) {
  }
  throw InvalidArgument(std::string("CODEIL_JOBS must be a positive integer, got '") +
                        v + "'");
}

template <typename T, typename Parse>
std::vector<T> ParseList(const std::string& text, Parse parse) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw InvalidArgument("empty entry in list '" + text + "'");
    out.push_back(parse(item));
  }
  if (out.empty()) throw InvalidArgument("empty list");
  return out;
}

long long ParseInteger(const std::string& s) {
  size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) {
    throw InvalidArgument("'" + s + "' is not an integer");
  }
  return v;
}

// ---- gen ----

struct GenArgs {
  std::string config, out;
  int n = 0;
  std::uint64_t seed = 0;
};

void Gen(const GenArgs& a, std::ostream& out) {
  if (a.n < 1) throw InvalidArgument("--n must be >= 1");
  RunConfig config = LoadRunConfig(a.config);
  demos::GenerationStats stats;
  const demos::Dataset data = demos::GenerateDataset(a.n, config.gen, a.seed, &stats);
  const fs::path dir = OutputDir(a.out);
  demos::SaveDataset((dir / "dataset.bin").string(), data);
  diffkit::SaveCheckpoint((dir / "expert.ckpt").string(),
                          ExpertCheckpoint(config.gen));
  std::vector<Input> inputs;
  if (!a.config.empty()) inputs.push_back({"config", a.config});
  WriteProvenance(dir, "gen", config, a.config, inputs,
                  {{"seed", a.seed},
                   {"n", a.n},
                   {"dataset_fnv1a",
                    HexDigest(Fnv1a(ReadFile((dir / "dataset.bin").string())))}});
  int lo = data.trajectories.front().horizon(), hi = lo;
  double sum = 0.0;
  for (const auto& t : data.trajectories) {
    lo = std::min(lo, t.horizon());
    hi = std::max(hi, t.horizon());
    sum += t.horizon();
  }
  out << "generated " << a.n << " trajectories, ts " << FormatDouble(data.ts)
      << " s, horizon min " << lo << " mean " << FormatDouble(sum / a.n)
      << " max " << hi << " steps, reach rate "
      << FormatDouble(static_cast<double>(stats.attempts - stats.rejected) /
                      stats.attempts)
      << " (" << stats.attempts - stats.rejected << "/" << stats.attempts
      << " rollouts)\n"
      << "wrote " << (dir / "dataset.bin").string() << "\n";
}

// ---- train ----

struct TrainArgs {
  std::string config, data, out, method, policy = "nn";
  std::optional<std::uint64_t> seed;
  int size = 0;
};

void Train(const TrainArgs& a, std::ostream& out) {
  RunConfig config = LoadRunConfig(a.config);
  if (!a.method.empty()) config.train.method = training::ParseMethod(a.method);
  if (a.seed) config.train.seed = *a.seed;
  const policies::PolicyClass cls = policies::ParsePolicyClass(a.policy);
  const demos::Dataset data = demos::LoadDataset(a.data);
  const int pool = TrainingPool(data, config);
  if (a.size < 0 || a.size > pool) {
    throw InvalidArgument("--size must lie in [1, " + std::to_string(pool) + "]");
  }
  const int size = a.size == 0 ? pool : a.size;
  const std::vector<arm::Trajectory> demos = Slice(data, 0, size);
  if (config.model.aux_delta == 0.0) config.model.aux_delta = data.ts / 10.0;

  const auto init =
      training::MakePolicy(cls, config.model, data.arm, demos, config.train.seed);
  std::optional<auxtraj::AuxTrajectory> aux;
  if (config.train.method == training::Method::kCode) {
    aux = training::MakeAux(config.model, data.arm, demos, config.train.seed);
  }
  const fs::path dir = OutputDir(a.out);
  std::vector<Input> inputs{{"data", a.data}};
  if (!a.config.empty()) inputs.push_back({"config", a.config});
  const Json extra{{"policy", policies::PolicyClassName(cls)},
                   {"training_trajectories", size}};
  WriteProvenance(dir, "train", config, a.config, inputs, extra);
  training::TrainResult result;
  try {
    result = training::Train(config.train, demos, *init, aux ? &*aux : nullptr);
  } catch (const training::TrainingDiverged& e) {
    const training::TrainResult& last = e.last_finite();
    diffkit::SaveCheckpoint((dir / "policy.last_finite.ckpt").string(),
                            policies::ToCheckpoint(*last.policy));
    WriteText(dir, "history.csv", last.history.Csv());
    throw;
  }
  diffkit::SaveCheckpoint((dir / "policy.ckpt").string(),
                          policies::ToCheckpoint(*result.policy));
  if (result.aux) {
    diffkit::SaveCheckpoint((dir / "aux.ckpt").string(), result.aux->ToCheckpoint());
  }
  WriteText(dir, "history.csv", result.history.Csv());
  const auto& last = result.history.epochs.back();
  out << "trained " << training::MethodName(config.train.method) << "/"
      << policies::PolicyClassName(cls) << " on " << size << " trajectories: "
      << result.history.epochs.size() << " epochs ("
      << result.history.stop_reason << "), final loss "
      << FormatDouble(last.total) << "\n"
      << "wrote " << (dir / "policy.ckpt").string() << "\n";
}

// ---- eval ----

struct EvalArgs {
  std::string config, checkpoint, aux, data, out;
  bool audit = false;
};

void Eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig config = LoadRunConfig(a.config);
  const bool audit = a.audit || config.eval.audit;
  const demos::Dataset data = demos::LoadDataset(a.data);
  const int n = static_cast<int>(data.trajectories.size());
  const int count = config.eval.validation == 0 ? n : config.eval.validation;
  if (count > n) {
    throw InvalidArgument("eval.validation is " + std::to_string(count) +
                          " but the dataset has " + std::to_string(n) +
                          " trajectories");
  }
  const std::vector<arm::Trajectory> demos = Slice(data, n - count, count);
  const diffkit::Checkpoint ck = diffkit::LoadCheckpoint(a.checkpoint);
  std::vector<Input> inputs{{"data", a.data}, {"checkpoint", a.checkpoint}};
  if (!a.config.empty()) inputs.push_back({"config", a.config});

  evaluation::EvalReport report;
  if (CheckpointClass(ck) == "expert") {
    if (audit) throw InvalidArgument("--audit needs a learned policy checkpoint");
    const demos::GeneratorConfig gen =
        demos::GeneratorConfigFromJson(Json::parse(ck.manifest).at("generator"));
    CheckArm(data.arm, gen.arm, "expert checkpoint");
    report = evaluation::Evaluate(
        [&](const arm::Trajectory& demo) {
          return demos::ExpertController(gen.arm, demos::TaskOf(demo), gen.expert);
        },
        "expert", data.arm, demos, config.eval.success_radius);
  } else {
    const auto policy = policies::FromCheckpoint(ck);
    if (policy->dof() != data.arm.dof()) {
      throw DataError("checkpoint has " + std::to_string(policy->dof()) +
                      " joints, dataset arm has " +
                      std::to_string(data.arm.dof()));
    }
    const int features = static_cast<int>(
        arm::PolicyFeatures(demos.front().meta).size());
    if (policy->feature_dim() != features) {
      throw DataError("checkpoint expects " +
                      std::to_string(policy->feature_dim()) +
                      " task features, dataset provides " +
                      std::to_string(features));
    }
    if (const auto* rmp = dynamic_cast<const policies::RmpPolicy*>(policy.get())) {
      CheckArm(data.arm, rmp->arm(), "rmp checkpoint");
    }
    evaluation::EvalOptions options;
    options.success_radius = config.eval.success_radius;
    options.audit = audit;
    options.seed = config.train.seed;
    std::vector<arm::Trajectory> refs;
    if (audit && !a.aux.empty()) {
      inputs.push_back({"aux", a.aux});
      const auto aux =
          auxtraj::AuxTrajectory::FromCheckpoint(diffkit::LoadCheckpoint(a.aux));
      CheckArm(data.arm, aux.arm(), "aux checkpoint");
      if (aux.mode() == auxtraj::AuxMode::kJoint) {
        for (const auto& d : demos) refs.push_back(aux.Export(d, 0));
        options.audit_references = refs;
      } else {
        err << "note: independent aux has no trajectory for unseen tasks; "
               "auditing against the demonstrations\n";
      }
    }
    report = evaluation::EvaluatePolicy(*policy, data.arm, demos, options);
  }

  const fs::path dir = OutputDir(a.out);
  WriteProvenance(dir, "eval", config, a.config, inputs,
                  {{"evaluated_trajectories", count}});
  WriteText(dir, "report.json", evaluation::ReportJson(report).dump(2) + "\n");
  WriteText(dir, "trajectories.csv", evaluation::TrajectoriesCsv(report));
  WriteText(dir, "deviation.csv", evaluation::DeviationCsv(report));
  if (report.audit) WriteText(dir, "audit.csv", evaluation::AuditCsv(report));
  out << "evaluated " << report.controller << " on " << count
      << " trajectories: median rmse " << FormatDouble(report.rmse.median)
      << " rad, success rate " << FormatDouble(report.success_rate) << "\n";
  if (report.audit) {
    const auto& au = *report.audit;
    out << "audit: L " << FormatDouble(au.lipschitz.value) << " ("
        << evaluation::LipschitzSourceName(au.lipschitz.source)
        << "), recursion " << (au.RecursionHolds() ? "holds" : "violated")
        << ", split " << (au.SplitHolds() ? "holds" : "violated") << "\n";
  }
}

// ---- sweep ----

struct SweepArgs {
  std::string config, data, out, sizes, seeds, methods, classes;
  std::optional<int> jobs;
};

void Sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig config = LoadRunConfig(a.config);
  evaluation::SweepConfig& sc = config.sweep;
  if (!a.sizes.empty()) {
    sc.sizes = ParseList<int>(a.sizes, [](const std::string& s) {
      return static_cast<int>(ParseInteger(s));
    });
  }
  if (!a.seeds.empty()) {
    sc.seeds = ParseList<std::uint64_t>(a.seeds, [](const std::string& s) {
      const long long v = ParseInteger(s);
      if (v < 0) throw InvalidArgument("seeds must be >= 0");
      return static_cast<std::uint64_t>(v);
    });
  }
  if (!a.methods.empty()) {
    sc.methods = ParseList<training::Method>(a.methods, training::ParseMethod);
  }
  if (!a.classes.empty()) {
    sc.classes = ParseList<policies::PolicyClass>(a.classes,
                                                  policies::ParsePolicyClass);
  }
  const int jobs = a.jobs ? *a.jobs : EnvJobs();
  if (jobs < 1) throw InvalidArgument("--jobs must be >= 1");
  const demos::Dataset data = demos::LoadDataset(a.data);
  sc.Validate(static_cast<int>(data.trajectories.size()));
  if (config.model.aux_delta == 0.0) config.model.aux_delta = data.ts / 10.0;

  const fs::path dir = OutputDir(a.out);
  std::vector<Input> inputs{{"data", a.data}};
  if (!a.config.empty()) inputs.push_back({"config", a.config});
  WriteProvenance(dir, "sweep", config, a.config, inputs, Json::object());
  evaluation::SweepSetup setup{config.train, config.model, sc};
  const auto rows = evaluation::RunSweep(
      data, setup, dir.string(), jobs, [&](const evaluation::SweepRow& r) {
        err << r.run_id << ": "
            << (r.ok ? "median rmse " + FormatDouble(r.rmse.median)
                     : "failed: " + r.error)
            << "\n";
      });
  WriteText(dir, "sweep.csv", evaluation::SweepCsv(setup, rows));
  WriteText(dir, "sweep_rmse.csv", evaluation::SweepRmseCsv(rows));
  const auto failed = std::count_if(rows.begin(), rows.end(),
                                    [](const auto& r) { return !r.ok; });
  out << "sweep finished: " << rows.size() << " runs, " << failed
      << " failed\nwrote " << (dir / "sweep.csv").string() << "\n";
}

// ---- plot ----

struct PlotArgs {
  std::vector<std::string> inputs;
  std::string out;
};

std::string SeriesLabel(const std::string& path) {
  const fs::path p(path);
  const std::string parent = p.parent_path().filename().string();
  return parent.empty() ? p.stem().string() : parent;
}

void Plot(const PlotArgs& a, std::ostream& out) {
  std::vector<std::string> missing;
  for (const auto& in : a.inputs) {
    if (!fs::is_regular_file(in)) missing.push_back(in);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += "\n  " + m;
    throw DataError("missing input CSV files:" + list);
  }
  std::vector<evaluation::CurveSeries> curves;
  std::map<std::pair<std::string, int>, std::vector<double>> boxes;
  for (const auto& in : a.inputs) {
    const evaluation::CsvTable t = evaluation::ParseCsv(ReadFile(in), in);
    const auto& h = t.header;
    auto has = [&](const char* c) {
      return std::find(h.begin(), h.end(), c) != h.end();
    };
    if (has("t") && has("q50")) {
      evaluation::CurveSeries s{SeriesLabel(in), {}, {}, {}};
      for (size_t r = 0; r < t.rows.size(); ++r) {
        s.q25.push_back(t.Number(r, "q25"));
        s.q50.push_back(t.Number(r, "q50"));
        s.q75.push_back(t.Number(r, "q75"));
      }
      curves.push_back(std::move(s));
    } else if (has("rmse_position") && has("method")) {
      const int m = t.Column("method"), p = t.Column("policy");
      for (size_t r = 0; r < t.rows.size(); ++r) {
        boxes[{t.rows[r][m] + "/" + t.rows[r][p],
               static_cast<int>(t.Number(r, "size"))}]
            .push_back(t.Number(r, "rmse_position"));
      }
    } else {
      throw DataError(in + ": not a deviation.csv or sweep_rmse.csv table");
    }
  }
  const fs::path dir = OutputDir(a.out);
  if (!curves.empty()) {
    WriteText(dir, "deviation.svg",
              evaluation::DeviationPlotSvg(curves, "State deviation per step"));
    out << "wrote " << (dir / "deviation.svg").string() << "\n";
  }
  if (!boxes.empty()) {
    std::vector<evaluation::BoxGroup> groups;
    for (auto& [key, values] : boxes) {
      groups.push_back({key.first, key.second, std::move(values)});
    }
    WriteText(dir, "rmse_boxes.svg",
              evaluation::RmseBoxSvg(groups, "Validation rollout RMSE"));
    out << "wrote " << (dir / "rmse_boxes.svg").string() << "\n";
  }
}

int ExitCode(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return kExitUsage;
    case ErrorKind::kData: return kExitData;
    case ErrorKind::kNumeric: return kExitNumeric;
  }
  return kExitData;
}

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Imitation learning on a planar arm: data, training, evaluation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate expert demonstrations");
  g->add_option("--config", gen.config, "JSON config file");
  g->add_option("--n", gen.n, "Number of trajectories")->required();
  g->add_option("--seed", gen.seed, "Generator seed");
  g->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a policy on a dataset");
  t->add_option("--config", train.config, "JSON config file");
  t->add_option("--method", train.method, "bc, bc_noise or code");
  t->add_option("--policy", train.policy, "nn or rmp");
  t->add_option("--data", train.data, "Dataset file")->required();
  t->add_option("--out", train.out, "Output directory")->required();
  t->add_option("--seed", train.seed, "Overrides train.seed");
  t->add_option("--size", train.size,
                "Train on the first N trajectories (default: all not held out)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint by rollouts");
  e->add_option("--config", ev.config, "JSON config file");
  e->add_option("--checkpoint", ev.checkpoint, "Policy or expert checkpoint")
      ->required();
  e->add_option("--aux", ev.aux, "Auxiliary trajectory checkpoint for --audit");
  e->add_option("--data", ev.data, "Dataset file")->required();
  e->add_option("--out", ev.out, "Output directory")->required();
  e->add_flag("--audit", ev.audit, "Run the error-bound audit");

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "Data-efficiency sweep");
  s->add_option("--config", sw.config, "JSON config file");
  s->add_option("--data", sw.data, "Dataset file")->required();
  s->add_option("--out", sw.out, "Output directory")->required();
  s->add_option("--sizes", sw.sizes, "Comma-separated training set sizes");
  s->add_option("--seeds", sw.seeds, "Comma-separated seeds");
  s->add_option("--methods", sw.methods, "Comma-separated methods");
  s->add_option("--classes", sw.classes, "Comma-separated policy classes");
  s->add_option("--jobs", sw.jobs, "Parallel runs (default CODEIL_JOBS or 1)");

  PlotArgs pl;
  auto* p = app.add_subcommand("plot", "Render SVG figures from CSV outputs");
  p->add_option("inputs", pl.inputs, "deviation.csv / sweep_rmse.csv files")
      ->required();
  p->add_option("--out", pl.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  }

  try {
    if (g->parsed()) Gen(gen, out);
    if (t->parsed()) Train(train, out);
    if (e->parsed()) Eval(ev, out, err);
    if (s->parsed()) Sweep(sw, out, err);
    if (p->parsed()) Plot(pl, out);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return ExitCode(ex.kind());
  } catch (const fs::filesystem_error& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace codeil::cli
