#include "dbc/envs.hpp"

#include <cmath>
#include <numbers>

namespace dbc::envs {

GoalBand goal_band_from_string(const std::string& s) {
  if (s == "train") return GoalBand::kTrain;
  if (s == "eval") return GoalBand::kEval;
  throw ConfigError("unknown goal band: " + s);
}

std::string to_string(GoalBand band) { return band == GoalBand::kTrain ? "train" : "eval"; }

namespace {

constexpr double kExpertKp = 2.0;
constexpr double kExpertKd = 1.5;

Vec2 clamp_action(const Vec2& a, double max_accel) {
  return a.cwiseMax(-max_accel).cwiseMin(max_accel);
}

// Damped double integrator shared by both worlds.
template <class World>
void integrate(const World& w, EnvState& s, const Vec2& action) {
  const Vec2 a = clamp_action(action, w.max_accel);
  Vec2 v = w.damping * (s.velocity + w.dt * a);
  const double speed = v.norm();
  if (speed > w.max_speed) v *= w.max_speed / speed;
  s.velocity = v;
  s.position += w.dt * v;
  s.step_index += 1;
}

Vec2 sample_in_disk(const Vec2& center, double radius, Rng& rng) {
  const double r = radius * std::sqrt(rng.uniform());
  const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return center + r * Vec2{std::cos(theta), std::sin(theta)};
}

}  // namespace

SpiralWorld make_spiral_world() {
  SpiralWorld w;
  EnvState s;
  for (int t = 0; t < w.max_steps; ++t) {
    integrate(w, s, scripted_spiral_expert(t));
  }
  w.expert_end = s.position;
  return w;
}

EnvState reset(const PointMassWorld& world, Rng& rng, GoalBand band) {
  EnvState s;
  s.position = world.start;
  s.velocity = Vec2::Zero();
  if (band == GoalBand::kTrain) {
    const auto& c = world.train_centers[rng.next_below(world.train_centers.size())];
    s.goal = sample_in_disk(c, world.band_radius, rng);
  } else {
    const auto& c = world.eval_centers[rng.next_below(world.eval_centers.size())];
    s.goal = sample_in_disk(c, world.band_radius, rng);
  }
  return s;
}

EnvState reset(const SpiralWorld& world, Rng& /*rng*/, GoalBand /*band*/) {
  EnvState s;
  s.goal = world.expert_end;
  return s;
}

StepResult step(const PointMassWorld& world, const EnvState& state, const Vec2& action) {
  StepResult r;
  r.state = state;
  integrate(world, r.state, action);
  r.state.position = r.state.position.cwiseMax(world.lo).cwiseMin(world.hi);
  r.success = (r.state.position - r.state.goal).norm() <= world.goal_radius;
  r.done = r.success || r.state.step_index >= world.max_steps;
  return r;
}

StepResult step(const SpiralWorld& world, const EnvState& state, const Vec2& action) {
  StepResult r;
  r.state = state;
  integrate(world, r.state, action);
  r.done = r.state.step_index >= world.max_steps;
  r.success = r.done && (r.state.position - world.expert_end).norm() <= world.success_radius;
  return r;
}

Vector observation(const PointMassWorld& /*world*/, const EnvState& state) {
  Vector obs(PointMassWorld::kStateDim);
  obs << state.position, state.velocity, state.goal;
  return obs;
}

Vector observation(const SpiralWorld& /*world*/, const EnvState& state) {
  Vector obs(SpiralWorld::kStateDim);
  obs << state.position, state.velocity;
  return obs;
}

Vec2 scripted_maze_expert(const EnvState& state) {
  return clamp_action(kExpertKp * (state.goal - state.position) - kExpertKd * state.velocity, 1.0);
}

Vec2 scripted_spiral_expert(int step_index) {
  if (step_index < 0 || step_index >= 160) {
    throw ShapeError("spiral expert schedule covers steps 0..159");
  }
  switch (step_index / 40) {
    case 0: return {0.5, 0.0};
    case 1: return {0.0, 0.5};
    case 2: return {-0.7, 0.0};
    default: return {0.0, -0.7};
  }
}

Actor maze_expert_actor() {
  return [](const Vector& obs, int /*step_index*/, Rng& /*rng*/) -> Vector {
    EnvState s;
    s.position = obs.segment<2>(0);
    s.velocity = obs.segment<2>(2);
    s.goal = obs.segment<2>(4);
    return scripted_maze_expert(s);
  };
}

Actor spiral_expert_actor() {
  return [](const Vector& /*obs*/, int step_index, Rng& /*rng*/) -> Vector {
    return scripted_spiral_expert(step_index);
  };
}

namespace {

template <class World>
struct Rollout {
  bool success = false;
  int length = 0;
  double final_goal_distance = 0.0;
  Matrix states;   // one row per step taken
  Matrix actions;
};

template <class World>
Rollout<World> run_episode(const World& world, const Actor& actor, Rng& rng, GoalBand band,
                           bool keep_pairs) {
  Rollout<World> out;
  EnvState state = reset(world, rng, band);
  if (keep_pairs) {
    out.states.resize(world.max_steps, World::kStateDim);
    out.actions.resize(world.max_steps, World::kActionDim);
  }
  for (;;) {
    const Vector obs = observation(world, state);
    Vector a = actor(obs, state.step_index, rng);
    if (a.size() != World::kActionDim) {
      throw ShapeError("actor returned action of wrong dimension");
    }
    const Vec2 action = clamp_action(Vec2(a(0), a(1)), world.max_accel);
    StepResult r = step(world, state, action);
    // stored pairs must replay exactly; dynamics carry no hidden state
    const StepResult replay = step(world, state, action);
    if (replay.state.position != r.state.position || replay.state.velocity != r.state.velocity) {
      throw StateError("environment step is not pure");
    }
    if (keep_pairs) {
      out.states.row(state.step_index) = obs.transpose();
      out.actions.row(state.step_index) = action.transpose();
    }
    state = r.state;
    if (r.done) {
      out.success = r.success;
      out.length = state.step_index;
      out.final_goal_distance = (state.position - state.goal).norm();
      break;
    }
  }
  if (keep_pairs) {
    out.states.conservativeResize(out.length, Eigen::NoChange);
    out.actions.conservativeResize(out.length, Eigen::NoChange);
  }
  return out;
}

}  // namespace

template <class World>
DemoDataset collect_demos(const World& world, const Actor& actor, int episodes, Rng& rng) {
  if (episodes < 1) throw ConfigError("collect_demos: need at least one episode");
  DemoDataset ds;
  ds.state_dim = World::kStateDim;
  ds.action_dim = World::kActionDim;

  std::vector<Rollout<World>> kept;
  long total_rows = 0;
  int successes = 0;
  const bool filter = std::is_same_v<World, PointMassWorld>;  // keep maze successes only
  for (int ep = 0; ep < episodes; ++ep) {
    Rng ep_rng = rng.stream(static_cast<std::uint64_t>(ep));
    Rollout<World> r = run_episode(world, actor, ep_rng, GoalBand::kTrain, true);
    successes += r.success ? 1 : 0;
    if (!filter || r.success) {
      total_rows += r.length;
      kept.push_back(std::move(r));
    }
  }
  if (filter && 2 * successes < episodes) {
    throw DataQualityError("expert succeeded in " + std::to_string(successes) + "/" +
                           std::to_string(episodes) + " episodes; need at least half");
  }

  ds.states.resize(total_rows, ds.state_dim);
  ds.actions.resize(total_rows, ds.action_dim);
  ds.traj_ids.reserve(total_rows);
  ds.steps.reserve(total_rows);
  long row = 0;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const auto& r = kept[k];
    for (int t = 0; t < r.length; ++t, ++row) {
      ds.states.row(row) = r.states.row(t);
      ds.actions.row(row) = r.actions.row(t);
      ds.traj_ids.push_back(static_cast<int>(k));
      ds.steps.push_back(t);
    }
  }
  ds.stats = compute_norm_stats(ds);
  return ds;
}

template <class World>
EvalReport evaluate(const Actor& actor, const World& world, int episodes, std::uint64_t base_seed,
                    GoalBand band) {
  if (episodes < 1) throw ConfigError("evaluate: need at least one episode");
  EvalReport report;
  report.band = to_string(band);
  report.episodes = episodes;
  report.base_seed = base_seed;
  report.records.reserve(episodes);

  int successes = 0;
  double total_len = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    Rng ep_rng = Rng(base_seed).stream(static_cast<std::uint64_t>(ep));
    Rollout<World> r = run_episode(world, actor, ep_rng, band, false);
    successes += r.success ? 1 : 0;
    total_len += r.length;
    report.records.push_back({ep, r.success, r.length, r.final_goal_distance});
  }
  report.success_rate = static_cast<double>(successes) / episodes;
  report.mean_episode_length = total_len / episodes;
  return report;
}

template DemoDataset collect_demos<PointMassWorld>(const PointMassWorld&, const Actor&, int, Rng&);
template DemoDataset collect_demos<SpiralWorld>(const SpiralWorld&, const Actor&, int, Rng&);
template EvalReport evaluate<PointMassWorld>(const Actor&, const PointMassWorld&, int,
                                             std::uint64_t, GoalBand);
template EvalReport evaluate<SpiralWorld>(const Actor&, const SpiralWorld&, int, std::uint64_t,
                                          GoalBand);

}  // namespace dbc::envs
