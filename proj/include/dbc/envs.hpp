#pragma once

#include <array>
#include <functional>

#include "dbc/dataset.hpp"
#include "dbc/matrix.hpp"
#include "dbc/rng.hpp"

namespace dbc::envs {

using Vec2 = Eigen::Vector2d;

enum class GoalBand { kTrain, kEval };

GoalBand goal_band_from_string(const std::string& s);
std::string to_string(GoalBand band);

struct EnvState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  Vec2 goal = Vec2::Zero();
  int step_index = 0;
};

struct StepResult {
  EnvState state;
  bool done = false;
  bool success = false;
};

/// Open 5x5 point-mass world. Observations are (position, velocity, goal);
/// actions are accelerations clamped per axis.
struct PointMassWorld {
  double lo = 0.0, hi = 5.0;
  double dt = 0.1;
  double max_speed = 2.0;
  double max_accel = 1.0;
  double damping = 0.95;
  double goal_radius = 0.15;
  int max_steps = 400;

  Vec2 start{5.0, 3.0};
  std::array<Vec2, 2> train_centers{Vec2{1.0, 2.0}, Vec2{1.0, 4.0}};
  std::array<Vec2, 3> eval_centers{Vec2{1.0, 1.0}, Vec2{1.0, 3.0}, Vec2{1.0, 5.0}};
  double band_radius = 0.05;

  static constexpr int kStateDim = 6;
  static constexpr int kActionDim = 2;
};

/// Unbounded plane traced by the scripted spiral expert. Success is judged
/// by the final distance to the expert's end point after the full episode.
struct SpiralWorld {
  double dt = 0.1;
  double max_speed = 2.0;
  double max_accel = 1.0;
  double damping = 0.95;
  double success_radius = 0.1;
  int segment_steps = 40;
  int max_steps = 160;
  Vec2 expert_end = Vec2::Zero();  // filled by make_spiral_world

  static constexpr int kStateDim = 4;
  static constexpr int kActionDim = 2;
};

/// Rolls the scripted expert once to pin expert_end.
SpiralWorld make_spiral_world();

EnvState reset(const PointMassWorld& world, Rng& rng, GoalBand band);
EnvState reset(const SpiralWorld& world, Rng& rng, GoalBand band);

StepResult step(const PointMassWorld& world, const EnvState& state, const Vec2& action);
StepResult step(const SpiralWorld& world, const EnvState& state, const Vec2& action);

Vector observation(const PointMassWorld& world, const EnvState& state);  // (pos, vel, goal)
Vector observation(const SpiralWorld& world, const EnvState& state);     // (pos, vel)

/// PD controller toward the goal; stands in for a trained demonstrator.
Vec2 scripted_maze_expert(const EnvState& state);

/// Fixed acceleration schedule: (0.5,0), (0,0.5), (-0.7,0), (0,-0.7),
/// 40 steps each.
Vec2 scripted_spiral_expert(int step_index);

/// Any actor: trained policies, sampling-based baselines, scripted experts.
using Actor = std::function<Vector(const Vector& obs, int step_index, Rng& rng)>;

Actor maze_expert_actor();
Actor spiral_expert_actor();

/// Rolls out the actor and stores every (state, action) pair. Maze demos
/// keep successful episodes only; collection fails if fewer than half the
/// requested episodes succeed.
template <class World>
DemoDataset collect_demos(const World& world, const Actor& actor, int episodes, Rng& rng);

struct EpisodeRecord {
  int episode = 0;
  bool success = false;
  int length = 0;
  double final_goal_distance = 0.0;
};

struct EvalReport {
  std::string method;
  std::string band;
  int episodes = 0;
  double success_rate = 0.0;
  double mean_episode_length = 0.0;
  std::vector<EpisodeRecord> records;
  std::uint64_t base_seed = 0;
  std::string config_digest;
};

/// Per-episode deterministic seeding by (base_seed, episode index).
template <class World>
EvalReport evaluate(const Actor& actor, const World& world, int episodes, std::uint64_t base_seed,
                    GoalBand band);

}  // namespace dbc::envs
