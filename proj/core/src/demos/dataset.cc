#include "codeil/demos/dataset.h"

#include "codeil/binary_io.h"
#include "codeil/error.h"

namespace codeil::demos {
namespace {

constexpr std::string_view kMagic = "CODEILDS";
constexpr double kMaxRejectedFraction = 0.2;
constexpr int kMaxAttemptsPerSample = 50;

void WriteVector(ByteWriter& w, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) w.F64(v(i));
}

Vector ReadVector(ByteReader& r, int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = r.F64();
  return v;
}

void WritePose(ByteWriter& w, const arm::Pose2& p) {
  w.F64(p.x);
  w.F64(p.y);
  w.F64(p.theta);
}

arm::Pose2 ReadPose(ByteReader& r) {
  arm::Pose2 p;
  p.x = r.F64();
  p.y = r.F64();
  p.theta = r.F64();
  return p;
}

Json PoseJson(const arm::Pose2& p) { return Json::array({p.x, p.y, p.theta}); }

Json VectorJson(const Vector& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

std::mt19937_64 SampleRng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

Dataset GenerateDataset(int n, const GeneratorConfig& config,
                        std::uint64_t seed, GenerationStats* stats) {
  if (n < 1) throw InvalidArgument("dataset size must be >= 1");
  config.arm.Validate();
  config.expert.Validate();
  config.sampler.Validate();
  Dataset out;
  out.arm = config.arm;
  out.ts = config.expert.ts;
  out.provenance.seed = seed;
  out.provenance.config_json = ToJson(config).dump();
  out.provenance.config_digest = HexDigest(Fnv1a(out.provenance.config_json));
  GenerationStats local;
  for (int i = 0; i < n; ++i) {
    std::mt19937_64 rng = SampleRng(seed, i);
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxAttemptsPerSample) {
        throw DataError("sample " + std::to_string(i) + " failed " +
                        std::to_string(attempt) +
                        " times; task sampler or expert misconfigured");
      }
      const ReachTask task =
          SampleTask(config.arm, config.sampler, config.expert, rng);
      ExpertOutcome result = RunExpert(config.arm, task, config.expert);
      ++local.attempts;
      if (result.reached && result.lifted) {
        result.trajectory.id = i;
        result.trajectory.Validate();
        out.trajectories.push_back(std::move(result.trajectory));
        break;
      }
      ++local.rejected;
    }
  }
  if (stats) *stats = local;
  if (local.rejected > kMaxRejectedFraction * local.attempts) {
    throw DataError(std::to_string(local.rejected) + " of " +
                    std::to_string(local.attempts) +
                    " expert rollouts failed (more than 20%); task sampler "
                    "misconfigured");
  }
  return out;
}

std::string EncodeDataset(const Dataset& dataset) {
  ByteWriter w;
  w.Bytes(kMagic);
  w.U32(kDatasetVersion);
  w.F64(dataset.ts);
  const int d = dataset.arm.dof();
  w.U32(static_cast<std::uint32_t>(d));
  for (double l : dataset.arm.link_lengths) w.F64(l);
  w.U64(dataset.provenance.seed);
  w.String(dataset.provenance.config_digest);
  w.String(dataset.provenance.config_json);
  w.U32(static_cast<std::uint32_t>(dataset.trajectories.size()));
  for (const arm::Trajectory& traj : dataset.trajectories) {
    if (traj.states.empty() || traj.states.front().dof() != d) {
      throw InvalidArgument("trajectory dof does not match the dataset arm");
    }
    w.U64(static_cast<std::uint64_t>(static_cast<std::int64_t>(traj.id)));
    w.F64(traj.ts);
    w.U32(static_cast<std::uint32_t>(traj.horizon()));
    w.U32(traj.has_actions() ? 1 : 0);
    w.U32(traj.expert_generated ? 1 : 0);
    for (const arm::State& s : traj.states) {
      WriteVector(w, s.q);
      WriteVector(w, s.qd);
    }
    for (const Vector& a : traj.actions) WriteVector(w, a);
    WritePose(w, traj.meta.start_ee);
    WritePose(w, traj.meta.goal_ee);
    w.U32(static_cast<std::uint32_t>(traj.meta.features.size()));
    WriteVector(w, traj.meta.features);
  }
  return w.Finish();
}

Dataset DecodeDataset(std::string_view bytes) {
  ByteReader r = ByteReader::Open(bytes, "dataset");
  if (r.Bytes(kMagic.size()) != kMagic) throw DataError("dataset: bad magic");
  const std::uint32_t version = r.U32();
  if (version != kDatasetVersion) {
    throw DataError("dataset: unsupported version " + std::to_string(version) +
                    " (expected " + std::to_string(kDatasetVersion) + ")");
  }
  Dataset out;
  out.ts = r.F64();
  const std::uint32_t d = r.U32();
  if (d < 2 || d * 8ull > r.remaining()) throw DataError("dataset: bad dof");
  out.arm.link_lengths.resize(d);
  for (double& l : out.arm.link_lengths) l = r.F64();
  out.provenance.seed = r.U64();
  out.provenance.config_digest = r.String();
  out.provenance.config_json = r.String();
  const std::uint32_t count = r.U32();
  for (std::uint32_t k = 0; k < count; ++k) {
    arm::Trajectory traj;
    traj.id = static_cast<int>(static_cast<std::int64_t>(r.U64()));
    traj.ts = r.F64();
    const std::uint32_t horizon = r.U32();
    const std::uint32_t has_actions = r.U32();
    const std::uint32_t expert = r.U32();
    if (has_actions > 1 || expert > 1) throw DataError("dataset: bad flags");
    const std::uint64_t doubles =
        (2ull * (horizon + 1ull) + (has_actions ? horizon : 0ull)) * d;
    if (horizon == 0 || doubles * 8 > r.remaining()) {
      throw DataError("dataset: trajectory " + std::to_string(k) +
                      " length exceeds file size");
    }
    for (std::uint32_t t = 0; t <= horizon; ++t) {
      arm::State s;
      s.q = ReadVector(r, d);
      s.qd = ReadVector(r, d);
      traj.states.push_back(std::move(s));
    }
    if (has_actions) {
      for (std::uint32_t t = 0; t < horizon; ++t) {
        traj.actions.push_back(ReadVector(r, d));
      }
    }
    traj.expert_generated = expert == 1;
    traj.meta.start_ee = ReadPose(r);
    traj.meta.goal_ee = ReadPose(r);
    const std::uint32_t nf = r.U32();
    if (nf * 8ull > r.remaining()) throw DataError("dataset: bad feature count");
    traj.meta.features = ReadVector(r, nf);
    out.trajectories.push_back(std::move(traj));
  }
  r.ExpectEnd();
  try {
    out.arm.Validate();
    for (const arm::Trajectory& traj : out.trajectories) traj.Validate();
  } catch (const Error& e) {
    throw DataError(std::string("dataset: ") + e.what());
  }
  return out;
}

void SaveDataset(const std::string& path, const Dataset& dataset) {
  WriteFile(path, EncodeDataset(dataset));
}

Dataset LoadDataset(const std::string& path) {
  return DecodeDataset(ReadFile(path));
}

Json DatasetToJson(const Dataset& dataset) {
  Json j;
  j["version"] = kDatasetVersion;
  j["ts"] = dataset.ts;
  j["link_lengths"] = dataset.arm.link_lengths;
  j["provenance"] = {{"seed", dataset.provenance.seed},
                     {"config_digest", dataset.provenance.config_digest},
                     {"config", dataset.provenance.config_json.empty()
                                    ? Json()
                                    : Json::parse(dataset.provenance.config_json)}};
  Json trajs = Json::array();
  for (const arm::Trajectory& traj : dataset.trajectories) {
    Json t;
    t["id"] = traj.id;
    t["ts"] = traj.ts;
    t["expert_generated"] = traj.expert_generated;
    t["start_ee"] = PoseJson(traj.meta.start_ee);
    t["goal_ee"] = PoseJson(traj.meta.goal_ee);
    t["features"] = VectorJson(traj.meta.features);
    Json q = Json::array(), qd = Json::array(), a = Json::array();
    for (const arm::State& s : traj.states) {
      q.push_back(VectorJson(s.q));
      qd.push_back(VectorJson(s.qd));
    }
    for (const Vector& act : traj.actions) a.push_back(VectorJson(act));
    t["q"] = std::move(q);
    t["qd"] = std::move(qd);
    t["actions"] = std::move(a);
    trajs.push_back(std::move(t));
  }
  j["trajectories"] = std::move(trajs);
  return j;
}

}  // namespace codeil::demos
