#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "p2s/errors.hpp"
#include "p2s/objective/train.hpp"

namespace p2s::objective {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ParseError("config key '" + key + "': bad value '" + v + "'");
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
  if (out.empty()) throw ParseError("config key '" + key + "': empty list");
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size <= 0) throw DataError("batch_size must be positive");
  if (iterations < 0 || pretrain_iterations < 0) throw DataError("iteration counts must be nonnegative");
  if (checkpoint_every < 0) throw DataError("checkpoint_every must be nonnegative");
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) throw DataError("learning_rate must be finite and >= 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw DataError("Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0)) throw DataError("adam_eps must be positive");
  if (!(weights.lambda_shortcut >= 0) || !std::isfinite(weights.lambda_shortcut) || !(weights.lambda_kl >= 0) ||
      !std::isfinite(weights.lambda_kl)) {
    throw DataError("loss weights must be finite and >= 0");
  }
  model.validate();
}

core::AdamState TrainConfig::fresh_adam() const {
  core::AdamState a;
  a.lr = learning_rate;
  a.beta1 = beta1;
  a.beta2 = beta2;
  a.eps = adam_eps;
  return a;
}

std::vector<std::pair<std::string, std::string>> TrainConfig::to_pairs() const {
  std::string channels;
  for (std::size_t i = 0; i < model.conv_channels.size(); ++i) {
    channels += (i ? "," : "") + std::to_string(model.conv_channels[i]);
  }
  return {
      {"batch_size", std::to_string(batch_size)},
      {"pretrain_iterations", std::to_string(pretrain_iterations)},
      {"iterations", std::to_string(iterations)},
      {"learning_rate", fmt(learning_rate)},
      {"beta1", fmt(beta1)},
      {"beta2", fmt(beta2)},
      {"adam_eps", fmt(adam_eps)},
      {"seed", std::to_string(seed)},
      {"checkpoint_every", std::to_string(checkpoint_every)},
      {"lambda_shortcut", fmt(weights.lambda_shortcut)},
      {"lambda_kl", fmt(weights.lambda_kl)},
      {"kl_form", weights.kl_form == model::KlForm::Standard ? "standard" : "printed"},
      {"image_size", std::to_string(model.image_size)},
      {"image_channels", std::to_string(model.image_channels)},
      {"conv_channels", channels},
      {"photo_fc", std::to_string(model.photo_fc)},
      {"latent", std::to_string(model.latent)},
      {"encoder_hidden", std::to_string(model.encoder_hidden)},
      {"decoder_hidden", std::to_string(model.decoder_hidden)},
      {"mixtures", std::to_string(model.mixtures)},
      {"n_max", std::to_string(model.n_max)},
  };
}

TrainConfig TrainConfig::from_pairs(const std::vector<std::pair<std::string, std::string>>& kv) {
  TrainConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "batch_size") c.batch_size = parse_number<int>(k, v);
    else if (k == "pretrain_iterations") c.pretrain_iterations = parse_number<long long>(k, v);
    else if (k == "iterations") c.iterations = parse_number<long long>(k, v);
    else if (k == "learning_rate") c.learning_rate = parse_number<double>(k, v);
    else if (k == "beta1") c.beta1 = parse_number<double>(k, v);
    else if (k == "beta2") c.beta2 = parse_number<double>(k, v);
    else if (k == "adam_eps") c.adam_eps = parse_number<double>(k, v);
    else if (k == "seed") c.seed = parse_number<std::uint64_t>(k, v);
    else if (k == "checkpoint_every") c.checkpoint_every = parse_number<long long>(k, v);
    else if (k == "lambda_shortcut") c.weights.lambda_shortcut = parse_number<double>(k, v);
    else if (k == "lambda_kl") c.weights.lambda_kl = parse_number<double>(k, v);
    else if (k == "kl_form") {
      if (v == "standard") c.weights.kl_form = model::KlForm::Standard;
      else if (v == "printed") c.weights.kl_form = model::KlForm::Printed;
      else throw ParseError("config key 'kl_form': expected standard or printed, got '" + v + "'");
    }
    else if (k == "image_size") c.model.image_size = parse_number<int>(k, v);
    else if (k == "image_channels") c.model.image_channels = parse_number<int>(k, v);
    else if (k == "conv_channels") c.model.conv_channels = parse_int_list(k, v);
    else if (k == "photo_fc") c.model.photo_fc = parse_number<int>(k, v);
    else if (k == "latent") c.model.latent = parse_number<int>(k, v);
    else if (k == "encoder_hidden") c.model.encoder_hidden = parse_number<int>(k, v);
    else if (k == "decoder_hidden") c.model.decoder_hidden = parse_number<int>(k, v);
    else if (k == "mixtures") c.model.mixtures = parse_number<int>(k, v);
    else if (k == "n_max") c.model.n_max = parse_number<int>(k, v);
    else throw ParseError("unknown config key '" + k + "'");
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::parse(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
    kv.emplace_back(trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)));
    if (kv.back().first.empty()) throw ParseError("empty key", line_no);
  }
  return from_pairs(kv);
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string TrainConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : to_pairs()) out += k + " = " + v + "\n";
  return out;
}

}  // namespace p2s::objective
