#include "agentsim/model/sim_model.hpp"

#include "agentsim/error.hpp"

namespace agentsim
{
namespace
{
constexpr const char * kModelKind = "agentsim-model";

std::string intention_array_name(AgentCategory c) { return "intention." + std::string(to_string(c)); }
}  // namespace

SimModel::SimModel(const ModelConfig & config, std::uint64_t init_seed) : config_(config)
{
  config_.validate();
  Rng rng = Rng::stream(init_seed, {hash_string("init")});
  encoder_ = SceneEncoder(store_, config_, rng);
  decoder_ = MotionDecoder(store_, config_, rng);
}

void SimModel::set_intention_points(const IntentionPointSet & set)
{
  require(!set.points.empty(), "intention point set is empty");
  IntentionPointSet s = set;
  if (s.points.size() > config_.modes) {
    s.points.resize(config_.modes);
  }
  intentions_[s.category] = std::move(s);
}

const std::vector<Vec2> & SimModel::intention_points(AgentCategory c) const
{
  auto it = intentions_.find(c);
  if (it == intentions_.end()) {
    throw ValidationError("model has no intention points for category " + std::string(to_string(c)));
  }
  return it->second.points;
}

std::vector<nn::NamedArray> SimModel::model_arrays() const
{
  std::vector<nn::NamedArray> out;
  for (const auto & [name, t] : store_.parameters()) {
    out.push_back({name, t.rows(), t.cols(), std::vector<double>(t.data().begin(), t.data().end())});
  }
  for (const auto & [cat, set] : intentions_) {
    nn::NamedArray a{intention_array_name(cat), set.points.size(), 2, {}};
    for (const auto & p : set.points) {
      a.values.push_back(p.x);
      a.values.push_back(p.y);
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::string SimModel::fingerprint() const
{
  const auto arrays = model_arrays();
  std::vector<const nn::NamedArray *> ptrs;
  for (const auto & a : arrays) {
    ptrs.push_back(&a);
  }
  return nn::fingerprint_hex(nn::content_fingerprint({{"kind", kModelKind}, {"model", config_.to_json()}}, ptrs));
}

nn::Checkpoint SimModel::to_checkpoint(bool include_optimizer, const nlohmann::json & training) const
{
  nn::Checkpoint c;
  c.meta["kind"] = kModelKind;
  c.meta["model"] = config_.to_json();
  c.meta["fingerprint"] = fingerprint();
  c.arrays = model_arrays();
  if (include_optimizer) {
    nlohmann::json steps = nlohmann::json::object();
    for (const auto & [name, st] : store_.adam_state()) {
      const auto & p = store_.get(name);
      c.arrays.push_back({"adam.m/" + name, p.rows(), p.cols(), st.m});
      c.arrays.push_back({"adam.v/" + name, p.rows(), p.cols(), st.v});
      steps[name] = st.step;
    }
    c.meta["adam_steps"] = steps;
  }
  if (!training.is_null()) {
    c.meta["training"] = training;
  }
  return c;
}

SimModel SimModel::from_checkpoint(const nn::Checkpoint & ckpt)
{
  if (ckpt.meta.value("kind", std::string()) != kModelKind || !ckpt.meta.contains("model")) {
    throw ValidationError("checkpoint does not hold a model");
  }
  SimModel m(ModelConfig::from_json(ckpt.meta.at("model")));
  for (const auto & [name, t] : m.store_.parameters()) {
    const nn::NamedArray * a = ckpt.find(name);
    if (a == nullptr || a->rows != t.rows() || a->cols != t.cols()) {
      throw ValidationError("checkpoint is missing parameter " + name + " or its shape differs");
    }
    m.store_.assign(name, a->values);
  }
  for (AgentCategory c : {AgentCategory::vehicle, AgentCategory::pedestrian, AgentCategory::cyclist}) {
    if (const nn::NamedArray * a = ckpt.find(intention_array_name(c))) {
      require(a->cols == 2, "intention table must have 2 columns");
      IntentionPointSet s{c, {}, a->rows};
      for (std::size_t i = 0; i < a->rows; ++i) {
        s.points.push_back({a->values[2 * i], a->values[2 * i + 1]});
      }
      m.set_intention_points(s);
    }
  }
  if (ckpt.meta.contains("adam_steps")) {
    for (const auto & [name, step] : ckpt.meta.at("adam_steps").items()) {
      const nn::NamedArray * mm = ckpt.find("adam.m/" + name);
      const nn::NamedArray * vv = ckpt.find("adam.v/" + name);
      require(mm != nullptr && vv != nullptr && m.store_.contains(name), "checkpoint optimizer state is incomplete");
      m.store_.adam_state()[name] = {mm->values, vv->values, step.get<std::int64_t>()};
    }
  }
  if (ckpt.meta.contains("fingerprint") && ckpt.meta.at("fingerprint") != m.fingerprint()) {
    throw ValidationError("checkpoint fingerprint does not match its contents");
  }
  return m;
}

void SimModel::save(const std::filesystem::path & path, bool include_optimizer, const nlohmann::json & training) const
{
  nn::save_checkpoint(path, to_checkpoint(include_optimizer, training));
}

SimModel SimModel::load(const std::filesystem::path & path) { return from_checkpoint(nn::load_checkpoint(path)); }
}  // namespace agentsim
