#include "p2s/objective/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "json.hpp"
#include "p2s/errors.hpp"
#include "p2s/model/init.hpp"

namespace p2s::objective {

using core::Tensor;

namespace {

double value(const Tensor& t) { return t.defined() ? t.item() : 0.0; }

void fill(StepMetrics& m, const FullLoss& loss) {
  m.sup_sketch = value(loss.supervised.sketch_term);
  m.sup_photo = value(loss.supervised.photo_term);
  m.short_sketch = value(loss.shortcut.sketch_term);
  m.short_photo = value(loss.shortcut.photo_term);
  m.l_supervised = value(loss.supervised.total);
  m.l_shortcut = value(loss.shortcut.total);
  m.l_kl = value(loss.kl);
  m.l_full = value(loss.total);
}

std::vector<const sketch::PhotoSketchPair*> pick(const std::vector<sketch::PhotoSketchPair>& data,
                                                 const std::vector<std::size_t>& idx) {
  std::vector<const sketch::PhotoSketchPair*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(&data[i]);
  return out;
}

std::string checkpoint_name(Stage s, long long step) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s-%08lld.ckpt", stage_name(s), step);
  return buf;
}

}  // namespace

std::string StepMetrics::to_json() const {
  nlohmann::json j{{"step", step},
                   {"stage", stage},
                   {"l_supervised", l_supervised},
                   {"l_shortcut", l_shortcut},
                   {"l_kl", l_kl},
                   {"l_full", l_full},
                   {"sup_sketch", sup_sketch},
                   {"sup_photo", sup_photo},
                   {"short_sketch", short_sketch},
                   {"short_photo", short_photo},
                   {"wall_time", wall_time}};
  return j.dump();
}

StepMetrics train_step(core::ParameterSet& params, const model::ModelConfig& cfg, core::AdamState& opt,
                       const Batch& batch, const LossWeights& w, Rng& rng) {
  const Noise noise = Noise::draw(rng, batch.size(), cfg.latent);
  params.zero_grad();
  core::Tape tape;
  StepMetrics m;
  {
    core::TapeScope scope(tape);
    const FullLoss loss = full_loss(params, cfg, batch, noise, w);
    fill(m, loss);
    tape.backward(loss.total);
  }
  for (const auto& [name, t] : params.entries()) {
    for (double g : t.grad_view()) {
      if (!std::isfinite(g)) throw NumericError(name, "non-finite gradient for parameter '" + name + "'");
    }
  }
  std::vector<Tensor> ts = params.tensors();
  core::adam_step(ts, opt);
  return m;
}

StepMetrics evaluate_losses(const core::ParameterSet& params, const model::ModelConfig& cfg,
                            const std::vector<sketch::PhotoSketchPair>& pairs, const LossWeights& w, int batch_size) {
  if (pairs.empty()) throw DataError("evaluate_losses: no pairs");
  if (batch_size <= 0) throw DataError("evaluate_losses: batch size must be positive");
  core::NoGradScope no_grad;
  StepMetrics total;
  total.stage = "eval";
  for (std::size_t begin = 0; begin < pairs.size(); begin += batch_size) {
    const std::size_t end = std::min(pairs.size(), begin + batch_size);
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const Batch batch = Batch::from(pick(pairs, idx));
    StepMetrics m;
    fill(m, full_loss(params, cfg, batch, Noise::zeros(batch.size(), cfg.latent), w));
    const double f = static_cast<double>(batch.size()) / static_cast<double>(pairs.size());
    total.sup_sketch += f * m.sup_sketch;
    total.sup_photo += f * m.sup_photo;
    total.short_sketch += f * m.short_sketch;
    total.short_photo += f * m.short_photo;
    total.l_supervised += f * m.l_supervised;
    total.l_shortcut += f * m.l_shortcut;
    total.l_kl += f * m.l_kl;
    total.l_full += f * m.l_full;
  }
  return total;
}

const char* stage_name(Stage s) { return s == Stage::Pretrain ? "pretrain" : "finetune"; }

TrainState initial_state(const TrainConfig& cfg) {
  cfg.validate();
  TrainState st;
  st.model = cfg.model;
  st.params = model::init_params(cfg.model, cfg.seed);
  st.adam = cfg.fresh_adam();
  return st;
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& st) {
  core::ParameterSet out;
  for (const auto& [name, t] : st.params.entries()) out.add(name, t);
  st.adam.export_to(out, st.params);
  st.model.write_to(out);
  out.add("train/stage", Tensor::scalar(static_cast<double>(st.stage)));
  out.add("train/step", Tensor::scalar(static_cast<double>(st.step)));
  out.add("data/offset_std", Tensor::scalar(st.offset_std));
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out.save(path);
}

namespace {

TrainState read_state(const std::filesystem::path& path, const core::AdamState& hyper) {
  const core::ParameterSet all = core::ParameterSet::load(path);
  TrainState st;
  st.model = model::ModelConfig::read_from(all);
  // the parameter list follows the layout of a fresh model so the optimizer
  // state lines up with it regardless of file order
  const core::ParameterSet layout = model::init_params(st.model, 0);
  for (const auto& [name, t] : layout.entries()) {
    if (!all.contains(name)) throw DataError("checkpoint " + path.string() + " is missing parameter " + name);
    const Tensor& saved = all.at(name);
    if (saved.shape() != t.shape()) throw DataError("checkpoint parameter " + name + " has the wrong shape");
    st.params.add(name, saved.detach());
  }
  st.adam = core::AdamState::import_from(all, st.params, hyper);
  if (all.contains("train/stage")) st.stage = static_cast<Stage>(std::lround(all.at("train/stage").item()));
  if (all.contains("train/step")) st.step = std::llround(all.at("train/step").item());
  if (all.contains("data/offset_std")) st.offset_std = all.at("data/offset_std").item();
  return st;
}

}  // namespace

TrainState load_checkpoint(const std::filesystem::path& path, const TrainConfig& cfg) {
  TrainState st = read_state(path, cfg.fresh_adam());
  if (!(st.model == cfg.model)) throw DataError("checkpoint " + path.string() + " was trained with a different model shape");
  return st;
}

TrainState load_model(const std::filesystem::path& path) { return read_state(path, core::AdamState{}); }

std::vector<std::size_t> batch_indices(std::size_t n, int batch, Rng& rng) {
  if (n == 0) throw DataError("no training pairs");
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const std::size_t k = std::min<std::size_t>(n, static_cast<std::size_t>(batch));
  for (std::size_t i = 0; i < k; ++i) std::swap(all[i], all[i + rng.below(n - i)]);
  all.resize(k);
  return all;
}

void run_stage(TrainState& st, const std::vector<sketch::PhotoSketchPair>& data, const TrainConfig& cfg,
               long long until, const TrainHooks& hooks) {
  if (data.empty()) throw DataError(std::string(stage_name(st.stage)) + ": empty dataset");
  const auto start = std::chrono::steady_clock::now();
  while (st.step < until) {
    Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(st.stage), static_cast<std::uint64_t>(st.step));
    const Batch batch = Batch::from(pick(data, batch_indices(data.size(), cfg.batch_size, rng)));
    StepMetrics m = train_step(st.params, st.model, st.adam, batch, cfg.weights, rng);
    ++st.step;
    m.step = st.step;
    m.stage = stage_name(st.stage);
    m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (hooks.on_step) hooks.on_step(m);
    if (cfg.checkpoint_every > 0 && st.step % cfg.checkpoint_every == 0 && !hooks.checkpoint_dir.empty()) {
      save_checkpoint(hooks.checkpoint_dir / checkpoint_name(st.stage, st.step), st);
    }
  }
}

void begin_finetune(TrainState& st, const TrainConfig& cfg) {
  st.stage = Stage::Finetune;
  st.step = 0;
  st.adam = cfg.fresh_adam();
}

TrainState pretrain_then_finetune(const std::vector<sketch::PhotoSketchPair>& pretrain_data,
                                  const std::vector<sketch::PhotoSketchPair>& finetune_data, const TrainConfig& cfg,
                                  const TrainHooks& hooks) {
  if (pretrain_data.empty()) throw DataError("pretrain: empty dataset");
  if (finetune_data.empty()) throw DataError("finetune: empty dataset");
  TrainState st = initial_state(cfg);
  run_stage(st, pretrain_data, cfg, cfg.pretrain_iterations, hooks);
  begin_finetune(st, cfg);
  run_stage(st, finetune_data, cfg, cfg.iterations, hooks);
  if (!hooks.final_checkpoint.empty()) save_checkpoint(hooks.final_checkpoint, st);
  return st;
}

MetricsLog::MetricsLog(const std::filesystem::path& path, const TrainConfig& cfg, bool append) {
  const bool fresh = !append || !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_ = std::make_unique<std::ofstream>(path, append ? std::ios::app : std::ios::trunc);
  if (!*out_) throw DataError("cannot write metrics log " + path.string());
  if (fresh) {
    nlohmann::json header = nlohmann::json::object();
    nlohmann::json conf = nlohmann::json::object();
    for (const auto& [k, v] : cfg.to_pairs()) conf[k] = v;
    header["config"] = conf;
    *out_ << header.dump() << '\n';
  }
}

MetricsLog::~MetricsLog() = default;

void MetricsLog::write(const StepMetrics& m) { *out_ << m.to_json() << '\n' << std::flush; }

TrainConfig MetricsLog::read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string line;
  if (!in || !std::getline(in, line)) throw DataError("cannot read metrics log " + path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw ParseError("metrics header is not JSON", 1);
  }
  if (!header.contains("config") || !header["config"].is_object()) throw ParseError("metrics header has no config", 1);
  std::vector<std::pair<std::string, std::string>> kv;
  for (const auto& [k, v] : header["config"].items()) kv.emplace_back(k, v.get<std::string>());
  return TrainConfig::from_pairs(kv);
}

}  // namespace p2s::objective
