#include "agentsim/error.hpp"
#include "agentsim/model/sim_model.hpp"
#include "agentsim/nn/grad_check.hpp"
#include "agentsim/scenario/generator.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace agentsim;

namespace
{
ModelConfig micro() { return ModelConfig::from_preset("micro"); }

std::vector<AgentState> line_history(double x0, double y0, double heading, double speed, std::size_t n,
  AgentCategory c = AgentCategory::vehicle)
{
  std::vector<AgentState> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = speed * kDt * static_cast<double>(i);
    out.push_back(make_state(x0 + s * std::cos(heading), y0 + s * std::sin(heading), 0.5, heading,
      speed * std::cos(heading), speed * std::sin(heading), 4.5, 1.9, c));
  }
  return out;
}

std::vector<std::span<const AgentState>> spans(const std::vector<std::vector<AgentState>> & h)
{
  return {h.begin(), h.end()};
}

std::vector<MapPolyline> small_map()
{
  return {MapPolyline::make({{-30, 0}, {-10, 0}, {10, 0}, {30, 0}}, PolylineType::lane_center),
    MapPolyline::make({{-30, 3.6}, {30, 3.6}}, PolylineType::road_edge),
    MapPolyline::make({{5, -5}, {5, 5}}, PolylineType::crosswalk)};
}

bool same(const nn::Tensor & a, const nn::Tensor & b, double tol = 0.0)
{
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a.data()[i] - b.data()[i]) > tol) {
      return false;
    }
  }
  return true;
}

std::vector<double> row(const nn::Tensor & t, std::size_t r)
{
  return {t.data().begin() + static_cast<std::ptrdiff_t>(r * t.cols()),
    t.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * t.cols())};
}

AgentState moved(const AgentState & s, const Frame & f) { return f.to_global(s); }
}  // namespace

TEST_CASE("agent history encoding: determinism and duplicate padding")
{
  SimModel m(micro(), 1);
  const Frame frame(Pose2{1, 2, 0.3});
  const auto h = line_history(0, 0, 0.2, 8, 11);
  const std::vector<std::vector<AgentState>> two{h, h};
  const nn::Tensor a = m.encoder().encode_agent_history(spans(two), frame);
  CHECK(a.rows() == 2);
  CHECK(a.cols() == m.config().d_model);
  CHECK(row(a, 0) == row(a, 1));

  std::vector<AgentState> doubled = h;
  doubled.insert(doubled.end(), h.begin(), h.end());
  const std::vector<std::vector<AgentState>> d{doubled};
  const std::vector<std::vector<AgentState>> one{h};
  CHECK(same(m.encoder().encode_agent_history(spans(d), frame), m.encoder().encode_agent_history(spans(one), frame)));

  const std::vector<std::vector<AgentState>> short_h{{h[0]}};
  CHECK_THROWS_AS(m.encoder().encode_agent_history(spans(short_h), frame), ValidationError);
}

TEST_CASE("map encoding: one row per chunk, direction sensitive, translation invariant in the agent frame")
{
  SimModel m(micro(), 2);
  const auto tokens = tokenize_map({MapPolyline::make({{0, 0}, {1, 0}}, PolylineType::lane_center)}, 20);
  REQUIRE(tokens.size() == 1);
  const Frame frame;
  const nn::Tensor one = m.encoder().encode_map({&tokens[0]}, frame);
  CHECK(one.rows() == 1);

  const auto fwd = tokenize_map({MapPolyline::make({{0, 0}, {2, 1}, {4, 1}}, PolylineType::lane_center)}, 20);
  const auto rev = tokenize_map({MapPolyline::make({{4, 1}, {2, 1}, {0, 0}}, PolylineType::lane_center)}, 20);
  CHECK(!same(m.encoder().encode_map({&fwd[0]}, frame), m.encoder().encode_map({&rev[0]}, frame), 1e-9));

  // Shift the map and the frame together.
  const Frame shifted(Pose2{37.5, -12.25, 0.0});
  const auto moved_map = tokenize_map({MapPolyline::make({{37.5, -12.25}, {39.5, -11.25}, {41.5, -11.25}},
    PolylineType::lane_center)}, 20);
  CHECK(same(m.encoder().encode_map({&fwd[0]}, frame), m.encoder().encode_map({&moved_map[0]}, shifted), 1e-9));

  CHECK_THROWS_AS(m.encoder().encode_map({}, frame), ValidationError);

  // Long polylines are cut into chunks of at most max_points.
  std::vector<Vec2> pts;
  for (int i = 0; i < 45; ++i) {
    pts.push_back({static_cast<double>(i), 0.0});
  }
  const auto chunks = tokenize_map({MapPolyline::make(pts, PolylineType::road_edge)}, 20);
  CHECK(chunks.size() >= 3);
  for (const auto & c : chunks) {
    CHECK(c.points.size() <= 20);
    CHECK(c.points.size() >= 2);
  }
}

TEST_CASE("local self-attention: single token, dense equivalence, locality")
{
  SimModel m(micro(), 3);
  Rng rng(6);
  const std::size_t d = m.config().d_model;
  const auto random = [&](std::size_t r) {
    std::vector<double> v(r * d);
    for (auto & x : v) {
      x = rng.uniform(-1, 1);
    }
    return nn::Tensor::from(r, d, v);
  };

  const nn::Tensor tok = random(1);
  const auto [s1, unused1] = m.encoder().local_self_attention(tok, {}, {{0.5, 0.5}});
  const auto [s2, unused2] = m.encoder().local_self_attention(tok, {}, {{0.5, 0.5}});
  CHECK(same(s1, s2));

  // Dense model: K exceeds the token count. Oracle rebuilt from the same parameters.
  ModelConfig dense_cfg = micro();
  dense_cfg.neighbors = 64;
  SimModel dense(dense_cfg, 3);
  const nn::Tensor a = random(3);
  const nn::Tensor mp = random(5);
  std::vector<Vec2> anchors;
  for (int i = 0; i < 8; ++i) {
    anchors.push_back({rng.uniform(-20, 20), rng.uniform(-20, 20)});
  }
  const auto [da, dm] = dense.encoder().local_self_attention(a, mp, anchors);

  const auto & P = dense.params();
  nn::Tensor x = nn::concat_rows({a, mp});
  std::vector<std::pair<double, double>> pos;
  for (const auto & p : anchors) {
    pos.emplace_back(p.x, p.y);
  }
  const nn::Tensor pe = nn::sinusoidal_encode_rows(pos, d);
  const nn::Mask all{8, 8, std::vector<std::uint8_t>(64, 1)};
  const nn::Mask knn_all = knn_mask(anchors, 8);
  CHECK(knn_all.allowed == all.allowed);
  for (std::size_t l = 0; l < dense_cfg.encoder_layers; ++l) {
    const std::string p = "encoder.layer" + std::to_string(l) + ".";
    const auto lin = [&](const std::string & n) {
      nn::Linear li;
      li.weight = P.get(p + n + ".weight");
      li.bias = P.get(p + n + ".bias");
      return li;
    };
    nn::MultiHeadAttention mha;
    mha.q_proj = lin("attn.q");
    mha.k_proj = lin("attn.k");
    mha.v_proj = lin("attn.v");
    mha.out_proj = lin("attn.out");
    mha.heads = dense_cfg.encoder_heads;
    nn::Mlp ffn;
    for (std::size_t i = 0; P.contains(p + "ffn." + std::to_string(i) + ".weight"); ++i) {
      ffn.layers.push_back(lin("ffn." + std::to_string(i)));
    }
    const nn::Tensor qk = nn::add(x, pe);
    x = nn::layer_norm(nn::add(x, mha.forward(qk, qk, x, &knn_all)), P.get(p + "norm1.gamma"), P.get(p + "norm1.beta"));
    x = nn::layer_norm(nn::add(x, ffn.forward(x)), P.get(p + "norm2.gamma"), P.get(p + "norm2.beta"));
  }
  CHECK(same(nn::concat_rows({da, dm}), x, 1e-12));

  // Locality: two far-apart clusters of 5 tokens each, K = 4 keeps attention inside a cluster.
  REQUIRE(m.config().neighbors <= 5);
  const nn::Tensor ten = random(10);
  std::vector<Vec2> cl;
  for (int i = 0; i < 5; ++i) {
    cl.push_back({static_cast<double>(i), 0.0});
  }
  for (int i = 0; i < 5; ++i) {
    cl.push_back({500.0 + i, 0.0});
  }
  const auto [base, unused3] = m.encoder().local_self_attention(ten, {}, cl);
  std::vector<Vec2> far = cl;
  far[9] = {1500.0, 0.0};
  const auto [pert, unused4] = m.encoder().local_self_attention(ten, {}, far);
  for (std::size_t r = 0; r < 5; ++r) {
    CHECK(row(base, r) == row(pert, r));
  }
  bool changed = false;
  for (std::size_t r = 5; r < 10; ++r) {
    changed = changed || row(base, r) != row(pert, r);
  }
  CHECK(changed);
}

TEST_CASE("update_agent_context: purity, shape, per-row sensitivity")
{
  SimModel m(micro(), 4);
  const std::vector<std::vector<AgentState>> h{line_history(0, 0, 0, 10, 11), line_history(-10, 3.6, 0, 8, 11),
    line_history(20, -3.6, 3.1, 9, 11)};
  const auto map = tokenize_map(small_map(), 20);
  const SceneContext ctx = m.encoder().encode(spans(h), map, 0);
  std::vector<AgentState> cur{h[0].back(), h[1].back(), h[2].back()};
  const nn::Tensor u1 = m.encoder().update_agent_context(ctx, cur);
  const nn::Tensor u2 = m.encoder().update_agent_context(ctx, cur);
  CHECK(same(u1, u2));
  CHECK(u1.rows() == 3);
  CHECK(u1.cols() == m.config().d_model);

  cur[1].x += 0.7;
  const nn::Tensor u3 = m.encoder().update_agent_context(ctx, cur);
  CHECK(row(u3, 0) == row(u1, 0));
  CHECK(row(u3, 1) != row(u1, 1));
  CHECK(row(u3, 2) == row(u1, 2));

  cur.pop_back();
  CHECK_THROWS_AS(m.encoder().update_agent_context(ctx, cur), ValidationError);
}

TEST_CASE("scene encoding is invariant under a global rigid transform")
{
  SimModel m(micro(), 5);
  const std::vector<std::vector<AgentState>> h{line_history(0, 0, 0.1, 10, 11), line_history(-10, 3.6, 0, 8, 11),
    line_history(20, -3.6, 3.1, 9, 11, AgentCategory::cyclist)};
  const auto map = tokenize_map(small_map(), 20);
  const Frame g(Pose2{250.0, -75.0, 2.2});
  std::vector<std::vector<AgentState>> hg;
  for (const auto & traj : h) {
    std::vector<AgentState> t;
    for (const auto & s : traj) {
      t.push_back(moved(s, g));
    }
    hg.push_back(std::move(t));
  }
  std::vector<MapPolyline> mg;
  for (const auto & pl : small_map()) {
    std::vector<Vec2> pts;
    for (const auto & p : pl.points) {
      pts.push_back(g.to_global(p));
    }
    mg.push_back(MapPolyline::make(pts, pl.type));
  }
  for (std::size_t target = 0; target < 3; ++target) {
    const SceneContext a = m.encoder().encode(spans(h), map, target);
    const SceneContext b = m.encoder().encode(spans(hg), tokenize_map(mg, 20), target);
    CHECK(same(a.A, b.A, 1e-9));
    CHECK(same(a.M, b.M, 1e-9));
  }
}

TEST_CASE("gradients flow through the full encoder")
{
  SimModel m(micro(), 6);
  const std::vector<std::vector<AgentState>> h{line_history(0, 0, 0.1, 10, 4), line_history(-10, 3.6, 0, 8, 4)};
  const auto map = tokenize_map(small_map(), 20);
  std::vector<nn::Tensor> params;
  for (const auto & [name, p] : m.params().parameters()) {
    if (name.rfind("encoder.", 0) == 0) {
      params.push_back(p);
    }
  }
  const std::vector<AgentState> cur{h[0].back(), h[1].back()};
  nn::GradCheckOptions opt;
  opt.max_coords_per_tensor = 4;
  opt.seed = 2;
  const auto res = nn::grad_check(
    [&] {
      const SceneContext ctx = m.encoder().encode(spans(h), map, 0);
      const nn::Tensor u = m.encoder().update_agent_context(ctx, cur);
      return nn::add(nn::sum(nn::tanh(u)), nn::sum(nn::tanh(ctx.M)));
    },
    params, opt);
  CHECK(res.coords_checked > 100);
  CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("nearest map tokens keep index order and knn mask keeps self")
{
  const auto map = tokenize_map(small_map(), 20);
  const auto idx = nearest_map_tokens(map, {0, 0}, 2);
  CHECK(idx.size() == 2);
  CHECK(std::is_sorted(idx.begin(), idx.end()));
  const nn::Mask mk = knn_mask({{0, 0}, {1, 0}, {5, 0}}, 2);
  CHECK(mk.at(0, 0));
  CHECK(mk.at(0, 1));
  CHECK(!mk.at(0, 2));
  CHECK(mk.at(2, 1));
}
