#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <memory>
#include <numbers>

#include "oracles.hpp"
#include "reactsim/errors.hpp"
#include "reactsim/kinematics.hpp"
#include "reactsim/policies.hpp"
#include "reactsim/scenarios.hpp"

using namespace reactsim;
using doctest::Approx;

namespace {

AgentState car(AgentId id, double x, double y, double yaw, double speed) {
  AgentState a;
  a.id = id;
  a.pose = {x, y, yaw};
  a.speed = speed;
  return a;
}

SimState scene(std::vector<AgentState> agents, AgentId ego = 0, std::int64_t step = 0) {
  SimState s;
  s.step_index = step;
  s.agents = std::move(agents);
  s.ego_id = ego;
  return s;
}

PolicyDecision act(const Policy& p, AgentId id, const SimState& s, const SemanticMap* map, double dt = 0.1) {
  StepContext ctx{map, dt, kDefaultPhiMax, 7};
  RngStream rng(7, id, s.step_index);
  return p.act(id, s, ctx, rng);
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// Independent forward pass over the flattened parameter layout.
Eigen::Vector2d reference_forward(const Mlp& m, const FeatureVector& f) {
  const std::vector<double> p = m.flatten();
  std::vector<double> x(f.begin(), f.end());
  std::size_t k = 0;
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const auto rows = static_cast<std::size_t>(m.layers[li].weights.rows());
    const auto cols = static_cast<std::size_t>(m.layers[li].weights.cols());
    std::vector<std::vector<double>> w(rows, std::vector<double>(cols));
    for (auto& row : w) {
      for (double& v : row) v = p[k++];
    }
    std::vector<double> b(p.begin() + static_cast<std::ptrdiff_t>(k), p.begin() + static_cast<std::ptrdiff_t>(k + rows));
    k += rows;
    x = oracle::affine(w, b, x);
    if (li + 1 < m.layers.size()) {
      for (double& v : x) v = std::tanh(v);
    }
  }
  return {x[0], x[1]};
}

FeatureVector random_features(RngStream& rng) {
  FeatureVector f{};
  for (std::size_t i = 0; i + 1 < f.size(); ++i) f[i] = 20.0 * rng.uniform() - 10.0;
  f[7] = 1.0;
  return f;
}

std::vector<TrainingSample> random_samples(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<TrainingSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    TrainingSample s;
    s.features = random_features(rng);
    s.target = {0.5 * std::tanh(s.features[3]), 5.0 + 0.3 * s.features[0]};
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("constant velocity keeps speed and heading") {
  const SimState s = scene({car(0, 0, 0, 0, 0), car(1, 10, 0, 0.3, 7.0)});
  const PolicyDecision d = act(ConstantVelocityPolicy{}, 1, s, nullptr);
  CHECK(d.control.phi == 0.0);
  CHECK(d.control.v == 7.0);
  CHECK_FALSE(d.pose_override);
}

TEST_CASE("policies reject unknown or inactive agents") {
  SimState s = scene({car(0, 0, 0, 0, 0), car(1, 10, 0, 0, 1)});
  s.agents[1].active = false;
  const SemanticMap map = straight_map();
  CHECK_THROWS_AS(act(ConstantVelocityPolicy{}, 42, s, &map), DomainError);
  CHECK_THROWS_AS(act(ConstantVelocityPolicy{}, 1, s, &map), DomainError);
  CHECK_THROWS_AS(act(ReactiveFollowPolicy{}, 42, s, &map), DomainError);
}

TEST_CASE("log replay overrides with the next recorded pose") {
  auto log = std::make_shared<Episode>();
  for (int k = 0; k < 5; ++k) log->states.push_back(scene({car(0, 0, 0, 0, 0), car(1, 2.0 * k, 0.1 * k, 0.05 * k, 1.0 + k)}, 0, k));
  const LogReplayPolicy p(log);
  for (int k = 0; k + 1 < 5; ++k) {
    const PolicyDecision d = act(p, 1, log->states[static_cast<std::size_t>(k)], nullptr);
    REQUIRE(d.pose_override);
    CHECK(*d.pose_override == log->states[static_cast<std::size_t>(k + 1)].agent(1).pose);
    CHECK(d.control.v == log->states[static_cast<std::size_t>(k + 1)].agent(1).speed);
  }
  // Past the end of the log, hold the last pose at rest.
  const PolicyDecision d = act(p, 1, log->states.back(), nullptr);
  REQUIRE(d.pose_override);
  CHECK(*d.pose_override == log->states.back().agent(1).pose);
  CHECK(d.control.v == 0.0);
  CHECK_THROWS_AS(LogReplayPolicy(std::make_shared<Episode>()), DomainError);
}

TEST_CASE("car-following formula") {
  const FollowParams p;
  SUBCASE("free road from rest") { CHECK(follow_acceleration(0.0, 10.0, 100.0, 0.0, p) == Approx(1.5 * (1 - 0.0004))); }
  SUBCASE("at the standstill gap") { CHECK(follow_acceleration(0.0, 10.0, p.s0, 0.0, p) <= 0.0); }
  SUBCASE("at desired speed on a free road") {
    const double a = follow_acceleration(10.0, 10.0, 100.0, 0.0, p);
    const double s_star = p.s0 + 10.0 * p.time_headway;
    CHECK(a == Approx(-p.a_max * (s_star / 100.0) * (s_star / 100.0)));
    CHECK(std::abs(a) < 0.05);
  }
  SUBCASE("closing in raises the desired gap") {
    CHECK(follow_acceleration(8.0, 10.0, 30.0, 4.0, p) < follow_acceleration(8.0, 10.0, 30.0, 0.0, p));
  }
  SUBCASE("a receding lead cannot push past a_max") {
    CHECK(follow_acceleration(0.5, 10.0, 5.0, -50.0, p) <= p.a_max);
  }
}

TEST_CASE("reactive follow") {
  const SemanticMap map = straight_map();
  const ReactiveFollowPolicy policy;

  SUBCASE("static lead 5 m ahead slows the follower") {
    const AgentState follower = car(1, 50.0, 0.0, 0.0, 8.0);
    const double lead_x = 50.0 + 4.5 + 5.0;
    const SimState s = scene({car(0, lead_x, 0.0, 0.0, 0.0), follower});
    const PolicyDecision d = act(policy, 1, s, &map);
    CHECK(d.control.v < follower.speed);
    const double a = follow_acceleration(8.0, 10.0, 5.0, 8.0, policy.params());
    CHECK(d.control.v == Approx(std::max(0.0, 8.0 + 0.1 * a)));
    CHECK(d.control.phi == Approx(0.0));
  }
  SUBCASE("from rest with a free road") {
    const SimState s = scene({car(0, 200, 3.5 * 4, 0, 0), car(1, 20.0, 0.0, 0.0, 0.0)});
    const PolicyDecision d = act(policy, 1, s, &map);
    CHECK(d.control.v == Approx(0.1 * 1.4994).epsilon(1e-9));
  }
  SUBCASE("standstill at the minimum gap stays at rest") {
    const SimState s = scene({car(0, 20.0 + 4.5 + 2.0, 0, 0, 0), car(1, 20.0, 0.0, 0.0, 0.0)});
    CHECK(act(policy, 1, s, &map).control.v == 0.0);
  }
  SUBCASE("an agent in the neighbouring lane is not a lead") {
    const SemanticMap two = straight_map(300.0, 2);
    const SimState s = scene({car(0, 25.0, 3.5, 0, 0), car(1, 20.0, 0.0, 0.0, 5.0)});
    const StepContext ctx{&two, 0.1, kDefaultPhiMax, 0};
    const auto route = build_route(s.agent(1), s, ctx, policy.params());
    REQUIRE(route);
    CHECK_FALSE(route->lead);
  }
  SUBCASE("lateral offset steers back toward the lane") {
    const SimState s = scene({car(0, 200, 20, 0, 0), car(1, 20.0, 1.0, 0.0, 5.0)});
    CHECK(act(policy, 1, s, &map).control.phi < 0.0);
  }
  SUBCASE("no lanes falls back to constant velocity") {
    const SemanticMap empty;
    const SimState s = scene({car(0, 0, 0, 0, 0), car(1, 10, 0, 0.4, 6.0)});
    const PolicyDecision d = act(policy, 1, s, &empty);
    CHECK(d.control.v == 6.0);
    CHECK(d.control.phi == 0.0);
  }
  SUBCASE("red light ahead acts as a stop line") {
    Lane a;
    a.id = 1;
    a.centerline = Polyline({{0, 0}, {50, 0}});
    a.successors = {2};
    Lane b;
    b.id = 2;
    b.centerline = Polyline({{50, 0}, {150, 0}});
    b.light_id = 1;
    TrafficLight light{1, {{0.0, 1e9, LightColor::red}}};
    const SemanticMap lit("lit", {a, b}, {}, {light});
    const SimState s = scene({car(0, 140, 10, 0, 0), car(1, 40.0, 0.0, 0.0, 8.0)});
    const PolicyDecision d = act(policy, 1, s, &lit);
    const double to_stop = 50.0 - 40.0 - 2.25;
    CHECK(d.control.v == Approx(8.0 + 0.1 * follow_acceleration(8.0, 10.0, to_stop, 8.0, policy.params())));
    const FeatureVector f = extract_features(1, s, StepContext{&lit, 0.1, kDefaultPhiMax, 0});
    CHECK(f[6] == Approx(to_stop));
  }
}

TEST_CASE("path override") {
  const SemanticMap map = straight_map();
  const auto cv = std::make_shared<ConstantVelocityPolicy>();

  SUBCASE("straight path") {
    const PolicyPtr p = path_override_wrap(cv, Polyline({{0, 0}, {100, 0}}));
    const SimState s = scene({car(0, 0, 20, 0, 0), car(1, 10, 0, 0, 5.0)});
    const PolicyDecision d = act(*p, 1, s, &map);
    CHECK(d.control.phi == Approx(0.0));
    CHECK(d.control.v == 5.0);
  }
  SUBCASE("left-curving path") {
    std::vector<Vec2> pts;
    for (int i = 0; i <= 50; ++i) {
      const double a = -std::numbers::pi / 2 + (std::numbers::pi / 2) * i / 50.0;
      pts.push_back({20.0 * std::cos(a), 20.0 + 20.0 * std::sin(a)});
    }
    const PolicyPtr p = path_override_wrap(cv, Polyline(pts));
    const SimState s = scene({car(0, -50, -50, 0, 0), car(1, 0, 0, 0, 5.0)});
    CHECK(act(*p, 1, s, &map).control.phi > 0.0);
  }
  SUBCASE("inner reactive follower still brakes") {
    const auto reactive = std::make_shared<ReactiveFollowPolicy>();
    const PolicyPtr p = path_override_wrap(reactive, Polyline({{0, 0.5}, {300, 0.5}}));
    const SimState s = scene({car(0, 55.0 + 4.5, 0, 0, 0), car(1, 50.0, 0.0, 0.0, 8.0)});
    const PolicyDecision d = act(*p, 1, s, &map);
    CHECK(d.control.v == act(*reactive, 1, s, &map).control.v);
    CHECK(d.control.v < 8.0);
    CHECK(d.control.phi > 0.0);  // toward the path at y = 0.5
  }
  SUBCASE("beyond the path end holds heading") {
    const PolicyPtr p = path_override_wrap(cv, Polyline({{0, 0}, {10, 0}}));
    const SimState s = scene({car(0, 0, 20, 0, 0), car(1, 15, 2, 0.2, 5.0)});
    const PolicyDecision d = act(*p, 1, s, &map);
    CHECK(d.control.phi == 0.0);
    CHECK(d.control.v == 5.0);
  }
  CHECK_THROWS_AS(PathOverridePolicy(cv, Polyline({{0, 0}})), DomainError);
}

TEST_CASE("feature vector") {
  const SemanticMap map = straight_map();
  const StepContext ctx{&map, 0.1, kDefaultPhiMax, 0};
  SUBCASE("free road uses the caps") {
    const SimState s = scene({car(0, 290, 30, 0, 0), car(1, 20, 0.5, 0.1, 4.0)});
    const FeatureVector f = extract_features(1, s, ctx);
    CHECK(f[0] == 4.0);
    CHECK(f[1] == 100.0);
    CHECK(f[2] == 0.0);
    CHECK(f[3] == Approx(0.5));
    CHECK(f[4] == Approx(0.1));
    CHECK(f[5] == Approx(0.0));
    CHECK(f[6] == 100.0);
    CHECK(f[7] == 1.0);
  }
  SUBCASE("lead gap and relative speed") {
    const SimState s = scene({car(0, 50, 0, 0, 3.0), car(1, 20, 0, 0, 7.0)});
    const FeatureVector f = extract_features(1, s, ctx);
    CHECK(f[1] == Approx(30.0 - 4.5));
    CHECK(f[2] == Approx(4.0));
  }
  SUBCASE("curvature proxy on a ring") {
    const SemanticMap ring = ring_map();
    const StepContext rctx{&ring, 0.1, kDefaultPhiMax, 0};
    const Lane& curved = ring.lanes().at(1);
    const Pose2 on = lane_pose_at(ring, curved.id, 0.0);
    const SimState s = scene({car(0, -500, -500, 0, 0), car(1, on.x, on.y, on.yaw, 5.0)});
    const FeatureVector f = extract_features(1, s, rctx);
    for (double v : f) CHECK(std::isfinite(v));
    CHECK(f[5] != 0.0);
  }
}

TEST_CASE("mlp forward") {
  const std::array<int, 4> sizes = kDefaultLayerSizes;
  SUBCASE("zero network") {
    const Mlp m = Mlp::zeros(sizes);
    const Control c = mlp_forward(m, FeatureVector{1, 2, 3, 4, 5, 6, 7, 1});
    CHECK(c.phi == 0.0);
    CHECK(c.v == Approx(m.v_max / 2));
  }
  SUBCASE("the bias input only acts through its own weights") {
    const std::array<int, 2> linear = {8, 2};
    Mlp m = Mlp::zeros(linear);
    m.layers[0].weights(1, 7) = 0.8;
    FeatureVector f{3, -1, 2, 0.5, 0.2, 0.1, 40, 1};
    const Eigen::Vector2d base = mlp_raw(m, f);
    CHECK(base(0) == 0.0);
    CHECK(base(1) == Approx(0.8));
    for (std::size_t i = 0; i < 7; ++i) f[i] *= 5.0;
    CHECK(mlp_raw(m, f)(1) == base(1));
    m.layers[0].weights(1, 7) = 1.6;
    CHECK(mlp_raw(m, f)(1) == Approx(1.6));
    CHECK(mlp_raw(m, f)(0) == 0.0);
  }
  SUBCASE("matches an independent forward pass") {
    RngStream rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      Mlp m = Mlp::random(sizes, static_cast<std::uint64_t>(trial));
      std::vector<double> p = m.flatten();
      for (double& v : p) v += 0.2 * (rng.uniform() - 0.5);  // non-zero biases
      m.assign(p);
      const FeatureVector f = random_features(rng);
      const Eigen::Vector2d got = mlp_raw(m, f);
      const Eigen::Vector2d want = reference_forward(m, f);
      CHECK(std::abs(got(0) - want(0)) < 1e-12);
      CHECK(std::abs(got(1) - want(1)) < 1e-12);
    }
  }
  SUBCASE("outputs stay in range") {
    RngStream rng(5);
    Mlp m = Mlp::random(sizes, 3);
    std::vector<double> p = m.flatten();
    for (double& v : p) v *= 50.0;
    m.assign(p);
    for (int i = 0; i < 500; ++i) {
      FeatureVector f = random_features(rng);
      for (double& v : f) v *= 100.0;
      const Control c = mlp_forward(m, f);
      CHECK(std::abs(c.phi) <= m.phi_max);
      CHECK(c.v >= 0.0);
      CHECK(c.v <= m.v_max);
    }
  }
  SUBCASE("invalid networks") {
    Mlp m = Mlp::zeros(sizes);
    m.layers[1].bias(3) = std::nan("");
    CHECK_THROWS_AS(mlp_forward(m, FeatureVector{}), DomainError);
    const std::array<int, 3> narrow = {7, 4, 2};
    CHECK_THROWS_AS(Mlp::zeros(narrow).validate(), DomainError);
    const std::array<int, 3> wide = {8, 4, 3};
    CHECK_THROWS_AS(Mlp::zeros(wide).validate(), DomainError);
    CHECK_THROWS_AS(LearnedPolicy(Mlp::zeros(wide)), DomainError);
  }
}

TEST_CASE("mlp gradient matches central differences") {
  const std::vector<TrainingSample> samples = random_samples(16, 21);
  const Mlp m = Mlp::random(kDefaultLayerSizes, 4);
  const LossAndGradient lg = mlp_loss_and_gradient(m, samples);
  CHECK(lg.loss == Approx(mlp_loss(m, samples)).epsilon(1e-14));
  const std::vector<double> base = m.flatten();
  REQUIRE(lg.gradient.size() == base.size());
  RngStream rng(99);
  constexpr double eps = 1e-5;
  for (int probe = 0; probe < 20; ++probe) {
    const auto k = static_cast<std::size_t>(rng() % base.size());
    std::vector<double> p = base;
    Mlp shifted = m;
    p[k] = base[k] + eps;
    shifted.assign(p);
    const double up = mlp_loss(shifted, samples);
    p[k] = base[k] - eps;
    shifted.assign(p);
    const double down = mlp_loss(shifted, samples);
    const double fd = (up - down) / (2 * eps);
    const double denom = std::max({std::abs(fd), std::abs(lg.gradient[k]), 1e-6});
    CHECK(std::abs(fd - lg.gradient[k]) / denom < 1e-4);
  }
}

TEST_CASE("mlp training") {
  SUBCASE("one repeated sample is fit") {
    TrainingSample s;
    s.features = {6.0, 30.0, 1.0, 0.3, -0.05, 0.01, 100.0, 1.0};
    s.target = {0.2, 6.5};
    const std::vector<TrainingSample> data(64, s);
    TrainConfig cfg;
    cfg.batch = 1;
    cfg.epochs = 10;
    const TrainResult r = mlp_train(data, cfg);
    REQUIRE(r.epoch_loss.size() == 10);
    CHECK(r.epoch_loss[0] < r.initial_loss);
    for (std::size_t e = 1; e < 10; ++e) CHECK(r.epoch_loss[e] < r.epoch_loss[e - 1]);
    CHECK(r.epoch_loss.back() < 1e-3);
    CHECK(mlp_loss(r.model, data) == Approx(r.epoch_loss.back()).epsilon(1e-9));
    const Control c = mlp_forward(r.model, s.features);
    CHECK(c.phi == Approx(0.2).epsilon(0.05));
    CHECK(c.v == Approx(6.5).epsilon(0.05));
  }
  SUBCASE("loss is non-increasing at small learning rates") {
    const std::vector<TrainingSample> data = random_samples(256, 8);
    for (Optimizer opt : {Optimizer::sgd, Optimizer::adam}) {
      TrainConfig cfg;
      cfg.optimizer = opt;
      cfg.epochs = 15;
      const TrainResult r = mlp_train(data, cfg);
      CHECK(r.epoch_loss[0] <= r.initial_loss);
      for (std::size_t e = 1; e < r.epoch_loss.size(); ++e) CHECK(r.epoch_loss[e] <= r.epoch_loss[e - 1]);
    }
  }
  SUBCASE("same seed gives bit-identical weights") {
    const std::vector<TrainingSample> data = random_samples(100, 3);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 17;
    const std::vector<double> a = mlp_train(data, cfg).model.flatten();
    const std::vector<double> b = mlp_train(data, cfg).model.flatten();
    REQUIRE(a.size() == b.size());
    bool identical = true;
    for (std::size_t i = 0; i < a.size(); ++i) identical = identical && same_bits(a[i], b[i]);
    CHECK(identical);
    cfg.seed = 18;
    CHECK(mlp_train(data, cfg).model.flatten() != a);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(mlp_train({}, TrainConfig{}), DomainError);
    TrainConfig bad;
    bad.batch = 0;
    CHECK_THROWS_AS(mlp_train(random_samples(4, 1), bad), DomainError);
  }
}

TEST_CASE("behavioural cloning dataset") {
  const SemanticMap map = straight_map();
  auto episode = [](std::size_t frames, double dt) {
    Episode e;
    e.dt = dt;
    for (std::size_t k = 0; k < frames; ++k) {
      const double x = 10.0 + 6.0 * dt * static_cast<double>(k);
      e.states.push_back(scene({car(0, 250, 20, 0, 0), car(1, x, 0, 0, 6.0)}, 0, static_cast<std::int64_t>(k)));
    }
    return e;
  };
  CHECK(build_bc_dataset(std::vector<Episode>{episode(1, 0.1)}, map).empty());
  CHECK(build_bc_dataset(std::vector<Episode>{}, map).empty());

  const std::vector<Episode> one{episode(21, 0.1)};
  const std::vector<TrainingSample> samples = build_bc_dataset(one, map);
  REQUIRE(samples.size() == 10);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(samples[i].target.phi == Approx(0.0));
    CHECK(samples[i].target.v == Approx(6.0));
    CHECK(samples[i].features == extract_features(1, one[0].states[10 + i], StepContext{&map, 0.1, kDefaultPhiMax, 0}));
  }

  SUBCASE("agents with a gap in their history are skipped") {
    std::vector<Episode> gappy{episode(21, 0.1)};
    gappy[0].states[5].agents[1].active = false;
    CHECK(build_bc_dataset(gappy, map).size() == 4);
  }
  SUBCASE("coarser dt needs fewer frames") {
    CHECK(build_bc_dataset(std::vector<Episode>{episode(7, 0.25)}, map).size() == 2);
  }
  SUBCASE("mixed dt is rejected") {
    CHECK_THROWS_AS(build_bc_dataset(std::vector<Episode>{episode(21, 0.1), episode(21, 0.2)}, map), DomainError);
  }
}

TEST_CASE("policy set lookup") {
  const auto cv = std::make_shared<ConstantVelocityPolicy>();
  const auto rf = std::make_shared<ReactiveFollowPolicy>();
  PolicySet set;
  AgentState a = car(3, 0, 0, 0, 0);
  CHECK(set.find(a) == nullptr);
  CHECK_THROWS_AS(set.for_agent(a), DomainError);
  set.set_default(AgentKind::vehicle, cv);
  CHECK(&set.for_agent(a) == cv.get());
  set.assign(3, rf);
  CHECK(&set.for_agent(a) == rf.get());
  a.kind = AgentKind::pedestrian;
  a.id = 4;
  CHECK(set.find(a) == nullptr);
  set.set_default(rf);
  CHECK(set.shared_for(a) == rf);
}

TEST_CASE("policies are Markov in the previous state") {
  const SemanticMap map = ring_map();
  Mlp model = Mlp::random(kDefaultLayerSizes, 9);
  std::vector<PolicyPtr> policies = {std::make_shared<ConstantVelocityPolicy>(),
                                     std::make_shared<ReactiveFollowPolicy>(),
                                     std::make_shared<LearnedPolicy>(model),
                                     path_override_wrap(std::make_shared<ReactiveFollowPolicy>(),
                                                        map.lanes().front().centerline)};
  const Pose2 p0 = lane_pose_at(map, map.lanes().front().id, 5.0);
  const Pose2 p1 = lane_pose_at(map, map.lanes().front().id, 25.0);
  const SimState s = scene({car(0, p1.x, p1.y, p1.yaw, 2.0), car(1, p0.x, p0.y, p0.yaw, 6.0)}, 0, 30);
  for (const PolicyPtr& p : policies) {
    // Two independent evaluations against equal copies of the state, as if reached by different histories.
    const SimState copy = s;
    const PolicyDecision a = act(*p, 1, s, &map);
    const PolicyDecision b = act(*p, 1, copy, &map);
    CHECK(same_bits(a.control.phi, b.control.phi));
    CHECK(same_bits(a.control.v, b.control.v));
  }
}
