#include "codeil/evaluation/sweep.h"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "codeil/binary_io.h"
#include "codeil/error.h"
#include "codeil/format.h"
#include "codeil/training/trainer.h"

namespace codeil::evaluation {
namespace {

using training::Method;

struct Cell {
  Method method;
  policies::PolicyClass cls;
  int size;
  std::uint64_t seed;
};

std::vector<Cell> Cells(const SweepConfig& c) {
  std::vector<Cell> cells;
  for (Method m : c.methods) {
    for (policies::PolicyClass cls : c.classes) {
      for (int n : c.sizes) {
        for (std::uint64_t s : c.seeds) cells.push_back({m, cls, n, s});
      }
    }
  }
  return cells;
}

void Save(const std::string& dir, const char* name, std::string_view text) {
  WriteFile((std::filesystem::path(dir) / name).string(), text);
}

void Persist(const std::string& dir, const training::TrainResult& result,
             const EvalReport& report) {
  std::filesystem::create_directories(dir);
  diffkit::SaveCheckpoint((std::filesystem::path(dir) / "policy.ckpt").string(),
                          policies::ToCheckpoint(*result.policy));
  if (result.aux) {
    diffkit::SaveCheckpoint((std::filesystem::path(dir) / "aux.ckpt").string(),
                            result.aux->ToCheckpoint());
  }
  Save(dir, "history.csv", result.history.Csv());
  Save(dir, "report.json", ReportJson(report).dump(2) + "\n");
  Save(dir, "trajectories.csv", TrajectoriesCsv(report));
  Save(dir, "deviation.csv", DeviationCsv(report));
  if (report.audit) Save(dir, "audit.csv", AuditCsv(report));
}

}  // namespace

void SweepConfig::Validate(int dataset_size) const {
  if (methods.empty() || classes.empty() || sizes.empty() || seeds.empty()) {
    throw InvalidArgument("sweep needs at least one method, class, size, seed");
  }
  if (validation < 1) throw InvalidArgument("sweep validation must be >= 1");
  if (!(success_radius > 0.0)) throw InvalidArgument("success_radius must be > 0");
  if (dataset_size < 0) return;
  const int pool = dataset_size - validation;
  for (int n : sizes) {
    if (n < 1 || n > pool) {
      throw InvalidArgument("sweep size " + std::to_string(n) +
                            " outside [1, " + std::to_string(pool) +
                            "] (dataset minus validation)");
    }
  }
}

SweepConfig SweepConfigFromJson(const Json& json) {
  const std::string where = "sweep";
  RequireKeys(json,
              {"methods", "classes", "sizes", "seeds"}, where);
  SweepConfig c;
  std::vector<std::string> names;
  if (json.contains("methods")) {
    ReadOptional(json, "methods", names, where);
    c.methods.clear();
    for (const auto& n : names) c.methods.push_back(training::ParseMethod(n));
  }
  if (json.contains("classes")) {
    names.clear();
    ReadOptional(json, "classes", names, where);
    c.classes.clear();
    for (const auto& n : names) c.classes.push_back(policies::ParsePolicyClass(n));
  }
  ReadOptional(json, "sizes", c.sizes, where);
  ReadOptional(json, "seeds", c.seeds, where);
  c.Validate(-1);
  return c;
}

Json ToJson(const SweepConfig& c) {
  Json j;
  j["methods"] = Json::array();
  for (Method m : c.methods) j["methods"].push_back(training::MethodName(m));
  j["classes"] = Json::array();
  for (auto cls : c.classes) j["classes"].push_back(policies::PolicyClassName(cls));
  j["sizes"] = c.sizes;
  j["seeds"] = c.seeds;
  return j;
}

std::string RunId(Method method, policies::PolicyClass cls, int size,
                  std::uint64_t seed) {
  return training::MethodName(method) + "-" + policies::PolicyClassName(cls) +
         "-n" + std::to_string(size) + "-s" + std::to_string(seed);
}

SweepRow RunCell(const demos::Dataset& data, const SweepSetup& setup,
                 Method method, policies::PolicyClass cls, int size,
                 std::uint64_t seed, const std::string& run_dir) {
  const SweepConfig& sc = setup.sweep;
  sc.Validate(static_cast<int>(data.trajectories.size()));
  SweepRow row;
  row.method = method;
  row.cls = cls;
  row.size = size;
  row.seed = seed;
  row.run_id = RunId(method, cls, size, seed);
  const std::span<const arm::Trajectory> all(data.trajectories);
  const auto validation = all.last(sc.validation);
  const auto train = all.first(size);
  std::set<int> train_ids;
  for (const auto& t : train) train_ids.insert(t.id);
  for (const auto& t : validation) {
    if (train_ids.count(t.id)) {
      throw DataError("validation trajectory " + std::to_string(t.id) +
                      " also appears in the training subset");
    }
    row.validation_ids.push_back(t.id);
  }
  try {
    training::TrainConfig tc = setup.train;
    tc.method = method;
    tc.seed = seed;
    const auto init = training::MakePolicy(cls, setup.model, data.arm, train, seed);
    std::optional<auxtraj::AuxTrajectory> aux;
    if (method == Method::kCode) {
      aux = training::MakeAux(setup.model, data.arm, train, seed);
    }
    training::TrainResult result =
        training::Train(tc, train, *init, aux ? &*aux : nullptr);
    row.epochs = static_cast<int>(result.history.epochs.size());
    row.stop_reason = result.history.stop_reason;
    if (!result.history.epochs.empty()) {
      row.final_loss = result.history.epochs.back().total;
      row.min_loss = row.final_loss;
      for (const auto& e : result.history.epochs) {
        row.min_loss = std::min(row.min_loss, e.total);
      }
    }
    EvalOptions options;
    options.success_radius = sc.success_radius;
    options.audit = sc.audit;
    options.seed = seed;
    std::vector<arm::Trajectory> refs;
    if (sc.audit && result.aux && result.aux->mode() == auxtraj::AuxMode::kJoint) {
      for (const auto& demo : validation) refs.push_back(result.aux->Export(demo, 0));
      options.audit_references = refs;
    }
    const EvalReport report =
        EvaluatePolicy(*result.policy, data.arm, validation, options);
    row.rmse = report.rmse;
    row.success_rate = report.success_rate;
    row.dev_quarter = MedianDeviationAt(report, 0.25);
    row.dev_final = MedianDeviationAt(report, 1.0);
    for (const auto& e : report.trajectories) row.rmse_values.push_back(e.rmse_position);
    if (report.audit) {
      row.lipschitz_source = LipschitzSourceName(report.audit->lipschitz.source);
      row.recursion_margin = report.audit->worst_recursion_margin;
      row.split_margin = report.audit->worst_split_margin;
    }
    if (!run_dir.empty()) Persist(run_dir, result, report);
    row.ok = true;
  } catch (const training::TrainingDiverged& e) {
    row.error = e.what();
    row.epochs = e.epoch();
  } catch (const Error& e) {
    row.error = e.what();
  }
  return row;
}

std::vector<SweepRow> RunSweep(
    const demos::Dataset& data, const SweepSetup& setup,
    const std::string& out_dir, int jobs,
    const std::function<void(const SweepRow&)>& on_row) {
  setup.sweep.Validate(static_cast<int>(data.trajectories.size()));
  if (jobs < 1) throw InvalidArgument("jobs must be >= 1");
  const std::vector<Cell> cells = Cells(setup.sweep);
  std::vector<SweepRow> rows(cells.size());
  std::atomic<size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (size_t i = next++; i < cells.size(); i = next++) {
      const Cell& c = cells[i];
      const std::string dir =
          out_dir.empty()
              ? ""
              : (std::filesystem::path(out_dir) / "runs" /
                 RunId(c.method, c.cls, c.size, c.seed))
                    .string();
      try {
        rows[i] = RunCell(data, setup, c.method, c.cls, c.size, c.seed, dir);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = cells.size();
        return;
      }
      if (on_row) {
        std::lock_guard lock(mu);
        on_row(rows[i]);
      }
    }
  };
  const int n = std::min<int>(jobs, static_cast<int>(cells.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int k = 0; k < n; ++k) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::string SweepCsv(const SweepSetup& setup, const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "method,policy,aux_mode,size,seed,run_id,status,epochs,stop_reason,"
        "final_loss,min_loss,rmse_q25,rmse_median,rmse_q75,rmse_mean,success_rate,"
        "dev_quarter,dev_final,lipschitz_source,recursion_margin,split_margin,"
        "error\n";
  auto clean = [](std::string s) {
    for (char& ch : s) {
      if (ch == ',' || ch == '\n' || ch == '"') ch = ';';
    }
    return s;
  };
  for (const SweepRow& r : rows) {
    os << training::MethodName(r.method) << ','
       << policies::PolicyClassName(r.cls) << ','
       << (r.method == Method::kCode ? auxtraj::AuxModeName(setup.model.aux_mode)
                                     : "")
       << ',' << r.size << ',' << r.seed << ',' << r.run_id << ','
       << (r.ok ? "ok" : "failed") << ',' << r.epochs << ','
       << clean(r.stop_reason) << ',' << FormatDouble(r.final_loss) << ','
       << FormatDouble(r.min_loss) << ','
       << FormatDouble(r.rmse.q25) << ',' << FormatDouble(r.rmse.median) << ','
       << FormatDouble(r.rmse.q75) << ',' << FormatDouble(r.rmse.mean) << ','
       << FormatDouble(r.success_rate) << ',' << FormatDouble(r.dev_quarter)
       << ',' << FormatDouble(r.dev_final) << ',' << r.lipschitz_source << ','
       << FormatDouble(r.recursion_margin) << ','
       << FormatDouble(r.split_margin) << ',' << clean(r.error) << '\n';
  }
  return os.str();
}

std::string SweepRmseCsv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "method,policy,size,seed,id,rmse_position\n";
  for (const SweepRow& r : rows) {
    if (!r.ok) continue;
    for (size_t k = 0; k < r.rmse_values.size(); ++k) {
      os << training::MethodName(r.method) << ','
         << policies::PolicyClassName(r.cls) << ',' << r.size << ',' << r.seed
         << ',' << r.validation_ids[k] << ',' << FormatDouble(r.rmse_values[k])
         << '\n';
    }
  }
  return os.str();
}

}  // namespace codeil::evaluation
