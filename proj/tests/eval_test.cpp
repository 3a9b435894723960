#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <sstream>

#include "egosearch/config.hpp"
#include "egosearch/eval.hpp"
#include "oracles.hpp"

using namespace egosearch;

namespace {

SceneParams empty_room() {
  SceneParams p;
  p.furniture_min = p.furniture_max = 0;
  p.cabinet_min = p.cabinet_max = 0;
  p.partition_min = p.partition_max = 0;
  return p;
}

EpisodeConfig small_cfg() {
  EpisodeConfig c;
  c.render_width = c.render_height = 32;
  c.crop_width = c.crop_height = 32;
  return c;
}

// Spins the body in place with the camera tilted down until the target shows
// up, then turns toward it and walks straight in. No translation happens
// before the target is seen, so the path is a straight segment.
Action straight_to_target(const Observation& o) {
  Action a;
  if (!o.mask.visible) {
    a.dtheta = deg2rad(30);
    a.dq_pitch = deg2rad(-30) - o.q_pitch;
    a.dq_yaw = -o.q_yaw;
    return a;
  }
  const double bearing = o.q_yaw - std::atan(o.mask.x_c);
  a.dtheta = bearing;
  a.dq_yaw = -o.q_yaw;
  a.dq_pitch = std::atan(o.mask.y_c);
  if (std::abs(bearing) < deg2rad(5)) a.dx = 0.25;
  return a;
}

}  // namespace

TEST(Spl, HandExamples) {
  EXPECT_DOUBLE_EQ(spl({{true, 3.0, 3.0}}), 1.0);
  EXPECT_DOUBLE_EQ(spl({{true, 2.0, 4.0}, {false, 1.0, 1.0}}), 0.25);
  EXPECT_DOUBLE_EQ(spl({{false, 2.0, 2.0}}), 0.0);
  // Taking a shorter path than the reference is capped at 1.
  EXPECT_DOUBLE_EQ(spl({{true, 2.0, 1.0}}), 1.0);
}

TEST(Spl, RejectsBadInput) {
  EXPECT_THROW(spl({}), std::invalid_argument);
  EXPECT_THROW(spl({{true, 0.0, 1.0}}), std::invalid_argument);
  EXPECT_THROW(spl({{true, 1.0, -1.0}}), std::invalid_argument);
}

TEST(Spl, MatchesBruteForceOnRandomLists) {
  Rng rng(17);
  for (int k = 0; k < 1000; ++k) {
    const int n = rng.uniform_int(1, 60);
    std::vector<SplItem> items;
    std::vector<oracle::SplCase> cases;
    for (int i = 0; i < n; ++i) {
      const bool s = rng.uniform01() < 0.6;
      const double ell = rng.uniform(0.1, 12.0), p = rng.uniform(0.0, 30.0);
      items.push_back({s, ell, p});
      cases.push_back({s, ell, p});
    }
    const double got = spl(items), want = oracle::spl(cases);
    ASSERT_NEAR(got, want, 1e-12) << "list " << k;
    ASSERT_LE(got, 1.0);
  }
}

TEST(Scenarios, DeterministicAndModeRespected) {
  SceneParams p;
  p.cabinet_min = p.cabinet_max = 2;
  const auto seeds = suite_seeds(1000, 3);
  EXPECT_EQ(seeds, (std::vector<std::uint64_t>{1000, 1001, 1002}));
  const ScenarioSet a = make_scenarios(seeds, 30, TargetMode::ExcludeCabinets, p, 5);
  const ScenarioSet b = make_scenarios(seeds, 30, TargetMode::ExcludeCabinets, p, 5);
  ASSERT_EQ(a.size(), 30u);
  SceneCache cache(p);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.items[i].target, b.items[i].target);
    EXPECT_EQ(a.items[i].agent.x, b.items[i].agent.x);
    EXPECT_EQ(a.items[i].scene_seed, seeds[i % 3]);
    const Scene& s = *cache.get(a.items[i].scene_seed);
    EXPECT_NE(classify_target(s, a.items[i].target, 0.1), Surface::CabinetInterior);
    EXPECT_FALSE(check_collision(s, Cylinder{Vec2(a.items[i].agent.x, a.items[i].agent.y), 0.3, 1.8}).collides);
  }
}

TEST(ReferencePath, EmptyRoomIsStraightLineLessDisc) {
  const Scene s = generate_scene(1, empty_room());
  const Vec3 t(3.05, 4.05, 0.1);  // a cell centre
  const double ell = reference_path_length(s, Vec2(0.05, 0.05), t, 0.5);
  EXPECT_NEAR(ell, 5.0 - 0.5, 1e-9);
  EXPECT_DOUBLE_EQ(reference_path_length(s, Vec2(3.0, 4.0), t, 0.5), s.nav_resolution());
}

TEST(Evaluate, StraightToTargetOracleInEmptyRooms) {
  const SceneParams p = empty_room();
  ScenarioSet set = make_scenarios(suite_seeds(1, 4), 120, TargetMode::Everywhere, p, 3);
  // Keep targets inside the 5 m sensing range (camera 1.55 m above a floor target).
  std::erase_if(set.items, [](const Scenario& sc) {
    return (sc.target.head<2>() - Vec2(sc.agent.x, sc.agent.y)).norm() > 4.0;
  });
  ASSERT_GE(set.size(), 30u);
  SceneCache cache(p);
  FunctionPolicy oracle_policy("straight", [](const Observation& o, Rng&) { return straight_to_target(o); });
  // At 32 px a 0.1 m sphere 3 m away spans about one pixel and can fall
  // between rays, so the oracle looks through a finer image.
  EpisodeConfig c;
  c.render_width = c.render_height = c.crop_width = c.crop_height = 128;
  const EvalReport r = evaluate_policy(oracle_policy, set, cache, c, 1.65);
  EXPECT_EQ(r.success_rate, 1.0);
  // Overshoot of the final 0.25 m step and grid snapping of the reference.
  EXPECT_GT(r.spl, 0.85);
  EXPECT_LE(r.spl, r.success_rate);
  // A target near a wall can put the straight line within a body radius of
  // it, where the agent slides instead of walking cleanly.
  EXPECT_LT(r.mean_collisions, 0.5);
}

TEST(Evaluate, ZeroPolicySucceedsOnlyWhereItStarts) {
  const SceneParams p;
  const ScenarioSet set = make_scenarios(suite_seeds(1000, 3), 200, TargetMode::Everywhere, p, 8);
  SceneCache cache(p);
  EpisodeConfig c = small_cfg();
  ZeroPolicy zero;
  const EvalReport r = evaluate_policy(zero, set, cache, c, 1.65);
  int expected = 0;
  c.height_noise = false;
  for (const Scenario& sc : set.items) {
    const Scene s = cache.get(sc.scene_seed)->with_target(TargetObject{sc.target, 0.1});
    AbstractState st;
    st.x = sc.agent.x;
    st.y = sc.agent.y;
    st.body_yaw = sc.agent.yaw;
    st.base_height = 1.65;
    const bool visible = mask_features(render_mask(s, camera_pose(st), c.render_width, c.render_height)).visible;
    expected += visible && (sc.target.head<2>() - st.position()).norm() <= 0.5 ? 1 : 0;
  }
  EXPECT_DOUBLE_EQ(r.success_rate, expected / 200.0);
  for (const auto& row : r.rows) EXPECT_EQ(row.path_length, 0.0);
}

TEST(Evaluate, WorkersDoNotChangeResults) {
  const SceneParams p;
  const ScenarioSet set = make_scenarios(suite_seeds(1000, 2), 12, TargetMode::ExcludeCabinets, p, 4);
  SceneCache cache(p);
  ScriptedSeeker seeker(small_cfg());
  const EvalReport a = evaluate_policy(seeker, set, cache, small_cfg(), 1.05, {1, 9});
  const EvalReport b = evaluate_policy(seeker, set, cache, small_cfg(), 1.05, {3, 9});
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].success, b.rows[i].success);
    EXPECT_EQ(a.rows[i].path_length, b.rows[i].path_length);
  }
  EXPECT_EQ(a.spl, b.spl);
}

TEST(Summarize, Averages) {
  std::vector<ScenarioResult> rows(4);
  rows[0] = {0, true, 10, 2.0, 2.0, 1, 0};
  rows[1] = {1, true, 10, 4.0, 2.0, 3, 2};
  rows[2] = {2, false, 100, 1.0, 2.0, 5, 0};
  rows[3] = {3, false, 100, 1.0, 2.0, 7, 2};
  const EvalReport r = summarize("x", rows);
  EXPECT_DOUBLE_EQ(r.success_rate, 0.5);
  EXPECT_DOUBLE_EQ(r.spl, (1.0 + 0.5) / 4);
  EXPECT_DOUBLE_EQ(r.mean_attempts, 4.0);
  EXPECT_DOUBLE_EQ(r.mean_collisions, 1.0);
}

TEST(HeightTable, CsvRoundTripAndShape) {
  HeightTable t;
  for (double h : table_heights()) {
    t.cells.push_back({h, TargetMode::ExcludeCabinets, h / 2, h / 3});
    t.cells.push_back({h, TargetMode::Everywhere, h / 4, h / 5});
  }
  std::stringstream ss;
  write_height_table_csv(ss, t);
  const HeightTable back = read_height_table_csv(ss);
  ASSERT_EQ(back.cells.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(back.cells[i].height, t.cells[i].height);
    EXPECT_EQ(back.cells[i].mode, t.cells[i].mode);
    EXPECT_EQ(back.cells[i].success_rate, t.cells[i].success_rate);
    EXPECT_EQ(back.cells[i].spl, t.cells[i].spl);
  }
  EXPECT_EQ(back.at(1.05, TargetMode::Everywhere).success_rate, 1.05 / 4);
  EXPECT_THROW(back.at(2.0, TargetMode::Everywhere), std::out_of_range);
  std::ostringstream text;
  write_height_table_text(text, t);
  int lines = 0;
  for (char ch : text.str()) lines += ch == '\n';
  EXPECT_EQ(lines, 4);  // header plus three heights
  std::istringstream bad("nope\n");
  EXPECT_THROW(read_height_table_csv(bad), std::runtime_error);
}

TEST(Baselines, DefaultSetAndReportShape) {
  const auto cfgs = default_baselines({2, 5, 10}, 20, 1, 5);
  ASSERT_EQ(cfgs.size(), 6u);
  EXPECT_EQ(cfgs[1].execute, 5);
  EXPECT_EQ(cfgs.back().kind, BaselineConfig::Kind::NoisySearch);
  const SceneParams p;
  const ScenarioSet set = make_scenarios(suite_seeds(1000, 2), 4, TargetMode::ExcludeCabinets, p, 4);
  SceneCache cache(p);
  ScriptedSeeker seeker(small_cfg());
  const BaselineReport r =
      compare_baselines(seeker, MockCharacterParams{}, set, cache, small_cfg(), FullBodyConfig{}, cfgs);
  ASSERT_EQ(r.configs.size(), cfgs.size());
  for (const EvalReport& e : r.configs) {
    EXPECT_EQ(e.rows.size(), 4u);
    EXPECT_LE(e.spl, e.success_rate + 1e-12);
  }
  std::ostringstream csv;
  write_report_csv(csv, r.configs);
  int lines = 0;
  for (char ch : csv.str()) lines += ch == '\n';
  EXPECT_EQ(lines, 1 + 6 * 4);
}

TEST(ParallelFor, VisitsEachIndexOnceAndPropagates) {
  std::vector<std::atomic<int>> hits(50);
  parallel_for(50, 4, [&](std::size_t i) { ++hits[i]; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                 if (i == 7) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

TEST(SeekLine, StepsRewardsAndTermination) {
  EpisodeConfig c = small_cfg();
  c.stack = 2;
  SeekLineEnv env(c, SeekLineParams{}, 1);
  const Observation& o = env.reset_to(0.0, 2.0);
  EXPECT_EQ(o.depth.size(), 2u);
  EXPECT_TRUE(o.mask.visible);
  EXPECT_NEAR(o.mask.x_c, 2.0 / 6.0, 1e-15);
  StepResult r = env.step(Action{5.0, 0, 0, 0, 0});  // clamped to 0.25
  EXPECT_EQ(env.position(), 0.25);
  EXPECT_NEAR(r.reward.total, -1.75 - 0.1, 1e-12);
  EXPECT_EQ(r.termination, Termination::None);

  env.reset_to(0.0, 0.7);
  r = env.step(Action{0.25, 0, 0, 0, 0});
  EXPECT_EQ(r.termination, Termination::Success);
  EXPECT_NEAR(r.reward.total, 10.0 - 0.45 - 0.1 + 10.0, 1e-12);
  EXPECT_TRUE(env.done());
  EXPECT_THROW(env.step(Action{}), std::logic_error);

  // The line ends at +-L, and standing still times out.
  env.reset_to(3.0, -2.0);
  env.step(Action{0.25, 0, 0, 0, 0});
  EXPECT_EQ(env.position(), 3.0);
  EXPECT_LT(env.observation().mask.x_c, 0.0);
  int steps = 1;
  while (!env.done()) {
    r = env.step(Action{});
    ++steps;
  }
  EXPECT_EQ(r.termination, Termination::Timeout);
  EXPECT_EQ(steps, SeekLineParams{}.t_max);
}

TEST(SeekLine, ResetKeepsTheMinimumGap) {
  SeekLineEnv env(small_cfg(), SeekLineParams{}, 4);
  for (int i = 0; i < 500; ++i) {
    env.reset();
    EXPECT_GE(std::abs(env.target() - env.position()), 1.0);
    EXPECT_LE(std::abs(env.position()), 3.0);
  }
  EXPECT_THROW(SeekLineEnv(small_cfg(), SeekLineParams{1.0, 2.0, 10}, 1), std::invalid_argument);
}

TEST(SeekLine, OracleAndZeroPolicies) {
  const EpisodeConfig c = small_cfg();
  FunctionPolicy toward("toward", [](const Observation& o, Rng&) {
    return Action{o.mask.x_c > 0 ? 0.25 : -0.25, 0, 0, 0, 0};
  });
  EXPECT_EQ(evaluate_seek_line(toward, c, SeekLineParams{}, 100, 3), 1.0);
  ZeroPolicy zero;
  EXPECT_EQ(evaluate_seek_line(zero, c, SeekLineParams{}, 100, 3), 0.0);
}

// The learner, at toy network sizes, solves the seek task from the mask
// features alone.
TEST(SeekLine, LearnerReachesNinetyFivePercent) {
  EpisodeConfig c;
  c.render_width = c.render_height = 20;
  c.crop_width = c.crop_height = 16;
  c.stack = 2;
  TrainConfig tc = TrainConfig::toy();
  tc.total_steps = 2000;
  tc.warmup = 500;
  tc.eval_every = 1000;
  const SeekLineParams p;
  TrainResult tr = train([&](Rng& rng) { return std::make_unique<SeekLineEnv>(c, p, rng.next_u64()); }, c, tc, 1,
                         [&](Policy& pol) { return evaluate_seek_line(pol, c, p, 20, 5); });
  ASSERT_EQ(tr.curve.size(), 2u);
  EXPECT_GE(evaluate_seek_line(*tr.agent, c, p, 100, 99), 0.95);
}

// Directional check with the hand-written seeker at the toy resolution; a
// higher camera clears more furniture tops. 200 scenarios at pinned seeds.
TEST(HeightSweep, TallerFindsMoreOnOpenSurfaces) {
  const RunConfig toy = RunConfig::toy();
  const SceneParams p;
  const ScenarioSet ex = make_scenarios(suite_seeds(1000, 10), 200, TargetMode::ExcludeCabinets, p, 40);
  const ScenarioSet ev = make_scenarios(suite_seeds(1000, 10), 2, TargetMode::Everywhere, p, 41);
  SceneCache cache(p);
  ScriptedSeeker seeker(toy.episode);
  const HeightTable t = height_sweep(seeker, ex, ev, cache, toy.episode);
  ASSERT_EQ(t.cells.size(), 6u);
  const double tall = t.at(1.65, TargetMode::ExcludeCabinets).success_rate;
  const double mid = t.at(1.05, TargetMode::ExcludeCabinets).success_rate;
  const double low = t.at(0.45, TargetMode::ExcludeCabinets).success_rate;
  EXPECT_GE(tall, mid);
  EXPECT_GE(mid, low);
  EXPECT_GT(tall, low);
}
