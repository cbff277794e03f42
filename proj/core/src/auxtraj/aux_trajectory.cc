#include "codeil/auxtraj/aux_trajectory.h"

#include <cmath>

#include <nlohmann/json.hpp>

#include "codeil/error.h"

namespace codeil::auxtraj {

using diffkit::Matrix;

std::string AuxModeName(AuxMode mode) {
  return mode == AuxMode::kJoint ? "joint" : "independent";
}

AuxMode ParseAuxMode(const std::string& name) {
  if (name == "joint") return AuxMode::kJoint;
  if (name == "independent") return AuxMode::kIndependent;
  throw InvalidArgument("unknown aux mode '" + name +
                        "' (valid: joint, independent)");
}

Anchors AnchorsOf(const arm::Trajectory& demo) {
  if (demo.horizon() < 1) throw InvalidArgument("demonstration too short");
  return Anchors{demo.states.front().q, demo.states.front().qd,
                 demo.states.back().q, demo.states.back().qd, demo.duration()};
}

SplineBasis Basis(double tau, double duration) {
  const double d = duration;
  const double r = d - tau;
  const double cubic = tau * r * (d - 2.0 * tau) / (d * d * d);
  return SplineBasis{r / d + cubic, tau / d - cubic, tau * r * r / (d * d),
                     -tau * tau * r / (d * d), tau * tau * r * r};
}

Vector AnchoredPosition(const Anchors& anchors, const Vector& psi,
                        double tau) {
  const SplineBasis b = Basis(tau, anchors.duration);
  return b.start_pos * anchors.q0 + b.end_pos * anchors.qT +
         b.start_vel * anchors.qd0 + b.end_vel * anchors.qdT +
         b.envelope * psi;
}

AuxTrajectory::AuxTrajectory(AuxMode mode, arm::ArmSpec arm, double delta,
                             std::vector<MlpParams> nets)
    : mode_(mode), arm_(std::move(arm)), delta_(delta), nets_(std::move(nets)) {
  arm_.Validate();
  if (!(delta_ > 0.0)) throw InvalidArgument("aux delta must be > 0");
  if (nets_.empty() || nets_.size() % arm_.dof() != 0) {
    throw InvalidArgument("aux network count must be a multiple of the dof");
  }
  if (mode_ == AuxMode::kJoint && nets_.size() != static_cast<size_t>(dof())) {
    throw InvalidArgument("joint aux mode needs exactly one net per joint");
  }
  for (const MlpParams& net : nets_) {
    net.Validate();
    if (net.OutputDim() != 1) throw InvalidArgument("psi nets are scalar");
  }
}

AuxTrajectory AuxTrajectory::Joint(const arm::ArmSpec& arm, int extra_features,
                                   double delta, std::mt19937_64& rng,
                                   const std::vector<int>& hidden) {
  std::vector<int> widths{1 + 3 + 3 + extra_features};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  std::vector<MlpParams> nets;
  for (int j = 0; j < arm.dof(); ++j) {
    nets.push_back(diffkit::MakeMlp(widths, diffkit::Activation::kTanh, rng));
  }
  return AuxTrajectory(AuxMode::kJoint, arm, delta, std::move(nets));
}

AuxTrajectory AuxTrajectory::Independent(const arm::ArmSpec& arm,
                                         int num_demos, double delta,
                                         std::mt19937_64& rng,
                                         const std::vector<int>& hidden) {
  if (num_demos < 1) throw InvalidArgument("need at least one demonstration");
  std::vector<int> widths{1};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  std::vector<MlpParams> nets;
  for (int i = 0; i < num_demos * arm.dof(); ++i) {
    nets.push_back(diffkit::MakeMlp(widths, diffkit::Activation::kTanh, rng));
  }
  return AuxTrajectory(AuxMode::kIndependent, arm, delta, std::move(nets));
}

int AuxTrajectory::NetBase(int index) const {
  return mode_ == AuxMode::kJoint ? 0 : index * dof();
}

void AuxTrajectory::CheckIndex(int index) const {
  if (mode_ == AuxMode::kIndependent &&
      (index < 0 || (index + 1) * dof() > static_cast<int>(nets_.size()))) {
    throw InvalidArgument("no auxiliary trajectory for demonstration " +
                          std::to_string(index));
  }
}

Vector AuxTrajectory::Context(const arm::Trajectory& demo) const {
  if (mode_ == AuxMode::kIndependent) return Vector(0);
  const arm::Pose2 start = arm::ForwardKinematics(arm_, demo.states.front().q);
  const arm::Pose2& goal = demo.meta.goal_ee;
  Vector c(6 + demo.meta.features.size());
  c << start.x, start.y, start.theta, goal.x, goal.y, goal.theta,
      demo.meta.features;
  return c;
}

Vector AuxTrajectory::Psi(const arm::Trajectory& demo, int index,
                          double tau) const {
  CheckIndex(index);
  const Vector context = Context(demo);
  Vector input(1 + context.size());
  input << tau / demo.duration(), context;
  Vector psi(dof());
  for (int j = 0; j < dof(); ++j) {
    psi(j) = diffkit::MlpForward(nets_[NetBase(index) + j], input)(0);
  }
  return psi;
}

Vector AuxTrajectory::Position(const arm::Trajectory& demo, int index,
                               double tau) const {
  return AnchoredPosition(AnchorsOf(demo), Psi(demo, index, tau), tau);
}

AuxState AuxTrajectory::SampleState(const arm::Trajectory& demo, int index,
                                    int t) const {
  const double tau = t * demo.ts;
  return AuxState{Position(demo, index, tau),
                  (Position(demo, index, tau + delta_) -
                   Position(demo, index, tau - delta_)) /
                      (2.0 * delta_)};
}

Vector AuxTrajectory::SampleAction(const arm::Trajectory& demo, int index,
                                   int t) const {
  return (SampleState(demo, index, t + 1).qd -
          SampleState(demo, index, t).qd) /
         demo.ts;
}

arm::Trajectory AuxTrajectory::Export(const arm::Trajectory& demo,
                                      int index) const {
  arm::Trajectory out;
  out.id = demo.id;
  out.ts = demo.ts;
  out.meta = demo.meta;
  std::vector<AuxState> samples;
  for (int t = 0; t <= demo.horizon(); ++t) {
    samples.push_back(SampleState(demo, index, t));
    out.states.push_back(arm::State{samples.back().q, samples.back().qd});
  }
  for (int t = 0; t < demo.horizon(); ++t) {
    out.actions.push_back((samples[t + 1].qd - samples[t].qd) / demo.ts);
  }
  return out;
}

double AuxTrajectory::PositionRowResidual(const arm::Trajectory& demo,
                                          int index) const {
  double worst = 0.0;
  AuxState prev = SampleState(demo, index, 0);
  for (int t = 0; t < demo.horizon(); ++t) {
    AuxState next = SampleState(demo, index, t + 1);
    worst = std::max(
        worst, (next.q - prev.q - prev.qd * demo.ts).cwiseAbs().maxCoeff());
    prev = std::move(next);
  }
  return worst;
}

RecordedSamples AuxTrajectory::Record(diffkit::Tape& tape, int offset,
                                      std::span<const arm::Trajectory> demos,
                                      std::span<const SampleRef> refs) const {
  if (refs.empty()) throw InvalidArgument("no samples to record");
  const int d = dof();
  const double ts = demos[refs.front().demo].ts;
  std::vector<int> net_offsets(nets_.size());
  for (size_t k = 0; k < nets_.size(); ++k) {
    net_offsets[k] = offset;
    offset += nets_[k].NumParameters();
  }
  std::vector<Var> qs, qds, actions;
  size_t begin = 0;
  while (begin < refs.size()) {
    size_t end = begin + 1;
    if (mode_ == AuxMode::kJoint) {
      end = refs.size();
    } else {
      while (end < refs.size() && refs[end].demo == refs[begin].demo) ++end;
    }
    const int n = static_cast<int>(end - begin);
    const int group_demo = refs[begin].demo;
    CheckIndex(group_demo);
    const int in_dim = nets_[NetBase(group_demo)].InputDim();
    Matrix inputs(in_dim, 5 * n);
    Matrix spline(d, 5 * n);
    Matrix envelope(1, 5 * n);
    for (int s = 0; s < n; ++s) {
      const SampleRef& ref = refs[begin + s];
      if (ref.demo < 0 || ref.demo >= static_cast<int>(demos.size())) {
        throw InvalidArgument("sample refers to a missing demonstration");
      }
      if (s > 0 && ref.demo < refs[begin + s - 1].demo) {
        throw InvalidArgument("aux samples must be sorted by demonstration");
      }
      const arm::Trajectory& demo = demos[ref.demo];
      if (demo.ts != ts) throw InvalidArgument("mixed sample times");
      const Anchors anchors = AnchorsOf(demo);
      const Vector context = Context(demo);
      const double base = ref.t * ts;
      const double taus[5] = {base, base + delta_, base - delta_,
                              base + ts + delta_, base + ts - delta_};
      for (int b = 0; b < 5; ++b) {
        const int col = b * n + s;
        inputs(0, col) = taus[b] / anchors.duration;
        inputs.col(col).tail(context.size()) = context;
        const SplineBasis basis = Basis(taus[b], anchors.duration);
        spline.col(col) = basis.start_pos * anchors.q0 +
                          basis.end_pos * anchors.qT +
                          basis.start_vel * anchors.qd0 +
                          basis.end_vel * anchors.qdT;
        envelope(0, col) = basis.envelope;
      }
    }
    Var input = tape.Constant(std::move(inputs));
    std::vector<Var> psi_rows;
    for (int j = 0; j < d; ++j) {
      const int k = NetBase(group_demo) + j;
      psi_rows.push_back(diffkit::TapeMlp(tape, nets_[k], net_offsets[k], input));
    }
    Var psi = diffkit::ConcatRows(psi_rows);
    Var rho = Add(tape.Constant(std::move(spline)),
                  MulRow(psi, tape.Constant(std::move(envelope))));
    const double inv_2delta = 1.0 / (2.0 * delta_);
    Var q = Cols(rho, 0, n);
    Var qd = Scale(Sub(Cols(rho, n, n), Cols(rho, 2 * n, n)), inv_2delta);
    Var qd_next =
        Scale(Sub(Cols(rho, 3 * n, n), Cols(rho, 4 * n, n)), inv_2delta);
    qs.push_back(q);
    qds.push_back(qd);
    actions.push_back(Scale(Sub(qd_next, qd), 1.0 / ts));
    begin = end;
  }
  if (qs.size() == 1) return RecordedSamples{qs[0], qds[0], actions[0]};
  return RecordedSamples{diffkit::ConcatCols(qs), diffkit::ConcatCols(qds),
                         diffkit::ConcatCols(actions)};
}

std::vector<const MlpParams*> AuxTrajectory::Networks() const {
  std::vector<const MlpParams*> out;
  for (const MlpParams& net : nets_) out.push_back(&net);
  return out;
}

std::vector<MlpParams*> AuxTrajectory::MutableNetworks() {
  std::vector<MlpParams*> out;
  for (MlpParams& net : nets_) out.push_back(&net);
  return out;
}

int AuxTrajectory::NumParameters() const {
  return diffkit::TotalParameters(Networks());
}

diffkit::Checkpoint AuxTrajectory::ToCheckpoint() const {
  nlohmann::ordered_json manifest;
  manifest["class"] = "aux";
  manifest["mode"] = AuxModeName(mode_);
  manifest["link_lengths"] = arm_.link_lengths;
  manifest["delta"] = delta_;
  return diffkit::Checkpoint{manifest.dump(), nets_};
}

AuxTrajectory AuxTrajectory::FromCheckpoint(
    const diffkit::Checkpoint& checkpoint) {
  try {
    const auto manifest = nlohmann::json::parse(checkpoint.manifest);
    if (manifest.at("class") != "aux") {
      throw DataError("checkpoint does not hold an auxiliary trajectory");
    }
    return AuxTrajectory(
        ParseAuxMode(manifest.at("mode")),
        arm::ArmSpec{manifest.at("link_lengths").get<std::vector<double>>()},
        manifest.at("delta"), checkpoint.nets);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("aux manifest: ") + e.what());
  }
}

}  // namespace codeil::auxtraj
