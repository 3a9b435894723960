#pragma once

#include <functional>
#include <string>

#include "egosearch/env.hpp"

namespace egosearch {

// Maps an observation to a (physical-unit) action. Implementations may keep
// no episode memory beyond what the observation carries.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action act(const Observation& obs, Rng& rng) = 0;
  virtual std::string name() const = 0;
};

class ZeroPolicy final : public Policy {
 public:
  Action act(const Observation&, Rng&) override { return {}; }
  std::string name() const override { return "zero"; }
};

class FunctionPolicy final : public Policy {
 public:
  using Fn = std::function<Action(const Observation&, Rng&)>;
  FunctionPolicy(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
  Action act(const Observation& obs, Rng& rng) override { return fn_(obs, rng); }
  std::string name() const override { return name_; }

 private:
  std::string name_;
  Fn fn_;
};

// Hand-written searcher: wanders and scans while the target is hidden, then
// turns toward it, keeps it centred with the camera, and walks up to it.
struct SeekerParams {
  double scan_pitch = deg2rad(-25.0);
  double wander_turn = deg2rad(15.0);
  double clear_distance = 0.8;  // m of free space needed to keep walking
  double align_tolerance = deg2rad(25.0);
};

class ScriptedSeeker final : public Policy {
 public:
  ScriptedSeeker(EpisodeConfig cfg, SeekerParams p = {}) : cfg_(std::move(cfg)), p_(p) {}
  Action act(const Observation& obs, Rng& rng) override;
  std::string name() const override { return "scripted"; }

 private:
  EpisodeConfig cfg_;
  SeekerParams p_;
};

// Free space straight ahead (m), from the newest depth frame around the
// horizontal row of the central columns.
double forward_clearance(const Observation& obs, double max_depth = 5.0);

// Uniform random action within bounds while the target is hidden; defers to
// `inner` once the mask is visible.
class NoisySearchPolicy final : public Policy {
 public:
  NoisySearchPolicy(Policy& inner, EpisodeConfig cfg) : inner_(inner), cfg_(std::move(cfg)) {}
  Action act(const Observation& obs, Rng& rng) override;
  std::string name() const override { return "noisy-search"; }

 private:
  Policy& inner_;
  EpisodeConfig cfg_;
};

Action uniform_random_action(const EpisodeConfig& cfg, Rng& rng);

}  // namespace egosearch
