#include "p2s/cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "p2s/cli/gradsuite.hpp"
#include "p2s/errors.hpp"
#include "p2s/eval/chamfer.hpp"
#include "p2s/eval/recognition.hpp"
#include "p2s/eval/retrieval.hpp"
#include "p2s/objective/train.hpp"
#include "p2s/sketch/dataset.hpp"
#include "p2s/sketch/image_io.hpp"
#include "p2s/sketch/quickdraw.hpp"
#include "p2s/sketch/raster.hpp"
#include "p2s/sketch/svg.hpp"
#include "p2s/sketch/toy.hpp"
#include "p2s/synth/sample.hpp"

namespace p2s::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
  if (!f) throw DataError("write failed: " + path.string());
}

// Sketches side by side, each rasterized into a `side` square.
sketch::RasterImage strip(const std::vector<sketch::StrokeSequence>& seqs, int side) {
  auto img = sketch::RasterImage::blank(side, side * static_cast<int>(seqs.size()), 1);
  std::fill(img.data.begin(), img.data.end(), 1.0);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const auto r = sketch::rasterize(seqs[i], side, 1);
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) img.at(y, static_cast<int>(i) * side + x) = 1.0 - r.at(y, x);
  }
  return img;
}

// ---- toydata ---------------------------------------------------------------

struct ToyOpts {
  std::string out, quickdraw;
  std::size_t n = 200;
  std::uint64_t seed = 0;
  int image_size = 48, max_len = 96, valid_every = 10;
};

int cmd_toydata(const ToyOpts& o, std::ostream& out) {
  if (!o.quickdraw.empty()) {
    std::string text;
    for (const auto& line : sketch::make_toy_quickdraw(o.n, o.seed)) text += line + "\n";
    write_text(o.quickdraw, text);
    out << "wrote " << o.n << " records to " << o.quickdraw << "\n";
  }
  if (!o.out.empty()) {
    sketch::PreprocessOptions po;
    po.image_size = o.image_size;
    po.max_len = o.max_len;
    po.valid_every = o.valid_every;
    po.rdp_epsilon = 0.5;
    po.min_stroke_length = 0.0;
    const auto data = sketch::prepare_dataset(sketch::make_toy_pairs(o.n, o.seed, o.image_size), po,
                                              sketch::toy_categories());
    sketch::save_dataset(o.out, data);
    out << "dataset " << o.out << ": " << data.train.pairs.size() << " train, " << data.valid.pairs.size()
        << " valid, n_max " << data.manifest.n_max << "\n";
  }
  return kExitOk;
}

// ---- preprocess ------------------------------------------------------------

struct PreprocessOpts {
  std::string input, out;
  sketch::PreprocessOptions opts;
};

int cmd_preprocess(const PreprocessOpts& o, std::ostream& out) {
  std::ifstream in(o.input);
  if (!in) throw DataError("cannot read " + o.input);
  const auto records = sketch::read_quickdraw(in);
  std::vector<std::string> labels;
  std::map<std::string, int> label_of;
  std::vector<sketch::PhotoSketchPair> raw;
  for (const auto& r : records) {
    sketch::PhotoSketchPair p;
    p.id = r.id;
    p.sketch = r.sketch;
    if (!r.word.empty()) {
      auto [it, fresh] = label_of.emplace(r.word, static_cast<int>(labels.size()));
      if (fresh) labels.push_back(r.word);
      p.label = it->second;
    }
    raw.push_back(std::move(p));
  }
  const auto data = sketch::prepare_dataset(std::move(raw), o.opts, labels);
  sketch::save_dataset(o.out, data);
  out << "read " << records.size() << " records; kept " << data.train.pairs.size() << " train, "
      << data.valid.pairs.size() << " valid; dropped " << data.dropped_empty << " empty, " << data.dropped_long
      << " too long; n_max " << data.manifest.n_max << ", offset_std " << data.manifest.offset_std << "\n";
  return kExitOk;
}

// ---- pretrain / train ------------------------------------------------------

struct TrainOpts {
  std::string data, config, out, init, metrics, checkpoint_dir, resume;
};

// Model input shape follows the dataset.
objective::TrainConfig config_for(const TrainOpts& o, const sketch::Manifest& m,
                                  const std::vector<sketch::PhotoSketchPair>& pairs) {
  auto cfg = objective::TrainConfig::load(o.config);
  cfg.model.n_max = m.n_max;
  cfg.model.image_size = m.image_size;
  if (!pairs.empty()) cfg.model.image_channels = pairs.front().photo.channels;
  cfg.validate();
  return cfg;
}

objective::TrainHooks hooks_for(const TrainOpts& o, objective::MetricsLog* log, std::ostream& out) {
  objective::TrainHooks h;
  h.checkpoint_dir = o.checkpoint_dir;
  h.on_step = [log, &out](const objective::StepMetrics& m) {
    if (log) log->write(m);
    if (m.step % 100 == 0) {
      out << m.stage << " step " << m.step << " L_full " << std::setprecision(6) << m.l_full << "\n";
    }
  };
  return h;
}

int cmd_pretrain(const TrainOpts& o, std::ostream& out) {
  const auto manifest = sketch::load_manifest(o.data);
  const auto split = sketch::load_split(o.data, "train");
  const auto cfg = config_for(o, manifest, split.pairs);
  objective::TrainState st = o.resume.empty() ? objective::initial_state(cfg)
                                              : objective::load_checkpoint(o.resume, cfg);
  if (st.stage != objective::Stage::Pretrain) throw DataError("resume checkpoint is not from pretraining");
  st.offset_std = split.offset_std;
  std::unique_ptr<objective::MetricsLog> log;
  if (!o.metrics.empty()) log = std::make_unique<objective::MetricsLog>(o.metrics, cfg, !o.resume.empty());
  objective::run_stage(st, split.pairs, cfg, cfg.pretrain_iterations, hooks_for(o, log.get(), out));
  objective::save_checkpoint(o.out, st);
  out << "pretrained " << st.step << " steps -> " << o.out << "\n";
  return kExitOk;
}

int cmd_train(const TrainOpts& o, std::ostream& out) {
  const auto manifest = sketch::load_manifest(o.data);
  const auto split = sketch::load_split(o.data, "train");
  auto cfg = config_for(o, manifest, split.pairs);
  // The checkpoint fixes the architecture.
  cfg.model = objective::load_model(o.init).model;
  cfg.validate();
  objective::TrainState st = objective::load_checkpoint(o.init, cfg);
  const bool resuming = st.stage == objective::Stage::Finetune;
  if (!resuming) objective::begin_finetune(st, cfg);
  st.offset_std = split.offset_std;
  std::unique_ptr<objective::MetricsLog> log;
  if (!o.metrics.empty()) log = std::make_unique<objective::MetricsLog>(o.metrics, cfg, resuming);
  objective::run_stage(st, split.pairs, cfg, cfg.iterations, hooks_for(o, log.get(), out));
  objective::save_checkpoint(o.out, st);
  out << "fine-tuned " << st.step << " steps -> " << o.out << "\n";
  return kExitOk;
}

// ---- sample ----------------------------------------------------------------

struct SampleOpts {
  std::string ckpt, photo, svg, png;
  int n = 1;
  double temperature = synth::kDefaultTemperature;
  std::uint64_t seed = 0;
  bool temporal_coloring = false;
};

int cmd_sample(const SampleOpts& o, std::ostream& out) {
  const auto st = objective::load_model(o.ckpt);
  const auto photo = sketch::read_image(o.photo);
  Rng rng(o.seed);
  std::vector<sketch::StrokeSequence> seqs;
  if (o.n == 1) {
    seqs.push_back(synth::sample_sketch(photo, st.params, st.model, o.temperature, rng));
  } else {
    seqs = synth::sample_variations(photo, st.params, st.model, o.n, o.temperature, rng);
  }
  for (auto& s : seqs) s = sketch::scale_offsets(s, st.offset_std);
  if (!o.svg.empty()) write_text(o.svg, sketch::export_svg_panels(seqs, o.temporal_coloring));
  if (!o.png.empty()) sketch::write_image(o.png, strip(seqs, 128));
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    out << "sample " << i << ": " << seqs[i].n_s << " points, " << sketch::segment_count(seqs[i]) << " strokes\n";
  }
  return kExitOk;
}

// ---- render ----------------------------------------------------------------

struct RenderOpts {
  std::string input, svg, png;
  std::size_t index = 0;
  int size = 256;
  bool temporal_coloring = false;
};

int cmd_render(const RenderOpts& o, std::ostream& out) {
  std::ifstream in(o.input);
  if (!in) throw DataError("cannot read " + o.input);
  const auto records = sketch::read_quickdraw(in);
  if (o.index >= records.size()) {
    throw DataError("index " + std::to_string(o.index) + " out of range (" + std::to_string(records.size()) +
                    " records)");
  }
  const auto& seq = records[o.index].sketch;
  if (!o.svg.empty()) write_text(o.svg, sketch::export_svg(seq, o.temporal_coloring));
  if (!o.png.empty()) sketch::write_image(o.png, strip({seq}, o.size));
  out << "record " << records[o.index].id << ": " << seq.n_s << " points\n";
  return kExitOk;
}

// ---- eval ------------------------------------------------------------------

struct EvalOpts {
  std::string ckpt, data, report;
  double temperature = synth::kDefaultTemperature;
  std::uint64_t seed = 0;
  int recognizer_steps = 500, embedder_steps = 300;
};

bool monotone(const std::map<int, double>& acc) {
  double prev = -1;
  for (const auto& [k, a] : acc) {
    if (a < prev) return false;
    prev = a;
  }
  return true;
}

int cmd_eval(const EvalOpts& o, std::ostream& out) {
  const auto st = objective::load_model(o.ckpt);
  const auto manifest = sketch::load_manifest(o.data);
  const auto train = sketch::load_split(o.data, "train");
  const auto valid = sketch::load_split(o.data, "valid");
  if (valid.pairs.empty()) throw DataError("validation split is empty");
  const int side = manifest.image_size;

  json report;
  const objective::LossWeights w;
  const auto losses = objective::evaluate_losses(st.params, st.model, valid.pairs, w);
  report["validation"] = {{"pairs", valid.pairs.size()},
                          {"sup_sketch", losses.sup_sketch},
                          {"sup_photo", losses.sup_photo},
                          {"short_sketch", losses.short_sketch},
                          {"short_photo", losses.short_photo},
                          {"l_supervised", losses.l_supervised},
                          {"l_shortcut", losses.l_shortcut},
                          {"l_kl", losses.l_kl},
                          {"l_full", losses.l_full}};

  Rng rng(o.seed);
  std::vector<sketch::StrokeSequence> generated;
  double chamfer = 0;
  for (const auto& p : valid.pairs) {
    generated.push_back(synth::sample_sketch(p.photo, st.params, st.model, o.temperature, rng));
    chamfer += eval::chamfer_distance(generated.back(), p.sketch);
  }
  report["chamfer"] = chamfer / static_cast<double>(valid.pairs.size());
  report["temperature"] = o.temperature;
  bool all_monotone = true;

  std::vector<int> labels;
  for (const auto& p : valid.pairs) labels.push_back(p.label);
  const bool labeled = std::all_of(labels.begin(), labels.end(), [](int l) { return l >= 0; }) &&
                       std::all_of(train.pairs.begin(), train.pairs.end(), [](const auto& p) { return p.label >= 0; });
  if (labeled && !train.pairs.empty()) {
    eval::RecognizerConfig rc;
    rc.image_size = side;
    rc.steps = o.recognizer_steps;
    rc.seed = o.seed;
    std::vector<sketch::RasterImage> images;
    std::vector<int> train_labels;
    for (const auto& p : train.pairs) {
      images.push_back(sketch::rasterize(p.sketch, side, 1));
      train_labels.push_back(p.label);
    }
    const auto recognizer = eval::train_recognizer(images, train_labels, rc);
    const auto r = eval::recognition_accuracy(generated, labels, recognizer);
    report["recognition"] = {{"classes", r.classes}, {"k", r.k}, {"acc_at_1", r.acc_at_1}, {"acc_at_k", r.acc_at_k}};
    all_monotone = all_monotone && r.acc_at_1 <= r.acc_at_k;
  } else {
    report["recognition"] = nullptr;
  }

  if (train.pairs.size() >= 2) {
    eval::EmbedderConfig ec;
    ec.image_size = side;
    ec.steps = o.embedder_steps;
    ec.seed = o.seed;
    const auto embedder = eval::train_triplet_embedder(train.pairs, ec);
    std::vector<sketch::RasterImage> gallery;
    std::vector<int> truth;
    for (std::size_t i = 0; i < valid.pairs.size(); ++i) {
      gallery.push_back(valid.pairs[i].photo);
      truth.push_back(static_cast<int>(i));
    }
    const auto r = eval::retrieval_accuracy(generated, gallery, truth, embedder);
    report["retrieval"] = {{"gallery", gallery.size()}, {"acc_at_1", r.at(1)}, {"acc_at_10", r.at(10)}};
    all_monotone = all_monotone && monotone(r.acc_at);
  } else {
    report["retrieval"] = nullptr;
  }
  report["acc_at_k_monotone"] = all_monotone;

  write_text(o.report, report.dump(2) + "\n");
  out << report.dump(2) << "\n";
  return kExitOk;
}

// ---- gradcheck -------------------------------------------------------------

struct GradOpts {
  std::string op;
  int seeds = 10;
};

constexpr double kGradTolerance = 1e-4;

int cmd_gradcheck(const GradOpts& o, std::ostream& out) {
  bool ok = true;
  for (const auto& r : run_grad_suite(o.op, o.seeds)) {
    const bool pass = r.max_error < kGradTolerance;
    ok = ok && pass;
    out << std::left << std::setw(24) << r.name << std::scientific << std::setprecision(3) << r.max_error << "  "
        << (pass ? "ok" : "FAIL") << "\n";
  }
  out << std::defaultfloat;
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Photo-to-sketch synthesis: data preparation, training, sampling and evaluation.", "p2s"};
  app.require_subcommand(1);

  ToyOpts toy;
  auto* c_toy = app.add_subcommand("toydata", "Write a procedural photo-sketch dataset and/or QuickDraw-style ndjson");
  c_toy->add_option("--out", toy.out, "Prepared dataset directory");
  c_toy->add_option("--quickdraw", toy.quickdraw, "Also write this many records as ndjson to this file");
  c_toy->add_option("--n", toy.n, "Number of pairs")->capture_default_str();
  c_toy->add_option("--seed", toy.seed)->capture_default_str();
  c_toy->add_option("--image-size", toy.image_size)->capture_default_str();
  c_toy->add_option("--max-len", toy.max_len)->capture_default_str();
  c_toy->add_option("--valid-every", toy.valid_every)->capture_default_str();

  PreprocessOpts pre;
  auto* c_pre = app.add_subcommand("preprocess", "Turn QuickDraw ndjson into a vector-raster dataset");
  c_pre->add_option("--input", pre.input, "QuickDraw ndjson file")->required();
  c_pre->add_option("--out", pre.out, "Output dataset directory")->required();
  c_pre->add_option("--rdp-epsilon", pre.opts.rdp_epsilon, "Simplification tolerance in input pixels")
      ->capture_default_str();
  c_pre->add_option("--max-len", pre.opts.max_len, "Cap on sequence length")->capture_default_str();
  c_pre->add_option("--min-stroke-length", pre.opts.min_stroke_length)->capture_default_str();
  c_pre->add_option("--image-size", pre.opts.image_size)->capture_default_str();
  c_pre->add_option("--valid-every", pre.opts.valid_every)->capture_default_str();

  TrainOpts pt;
  auto* c_pt = app.add_subcommand("pretrain", "Pretrain on vector-raster pairs");
  c_pt->add_option("--data", pt.data, "Dataset directory")->required();
  c_pt->add_option("--config", pt.config, "key=value training config")->required();
  c_pt->add_option("--out", pt.out, "Output checkpoint")->required();
  c_pt->add_option("--metrics", pt.metrics, "JSON-lines metrics log");
  c_pt->add_option("--checkpoint-dir", pt.checkpoint_dir, "Directory for periodic checkpoints");
  c_pt->add_option("--resume", pt.resume, "Continue from a pretraining checkpoint");

  TrainOpts ft;
  auto* c_ft = app.add_subcommand("train", "Fine-tune on photo-sketch pairs (or resume fine-tuning)");
  c_ft->add_option("--data", ft.data, "Dataset directory")->required();
  c_ft->add_option("--init", ft.init, "Pretrained or fine-tuning checkpoint")->required();
  c_ft->add_option("--config", ft.config, "key=value training config")->required();
  c_ft->add_option("--out", ft.out, "Output checkpoint")->required();
  c_ft->add_option("--metrics", ft.metrics, "JSON-lines metrics log");
  c_ft->add_option("--checkpoint-dir", ft.checkpoint_dir, "Directory for periodic checkpoints");

  SampleOpts so;
  auto* c_s = app.add_subcommand("sample", "Draw sketches of a photo");
  c_s->add_option("--ckpt", so.ckpt, "Checkpoint")->required();
  c_s->add_option("--photo", so.photo, "PGM or PNG photo")->required();
  c_s->add_option("--n", so.n, "Number of sketches")->capture_default_str()->check(CLI::PositiveNumber);
  c_s->add_option("--temperature", so.temperature)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  c_s->add_option("--seed", so.seed)->capture_default_str();
  c_s->add_option("--svg", so.svg, "SVG output, one panel per sketch");
  c_s->add_option("--png", so.png, "Raster strip output");
  c_s->add_flag("--temporal-coloring", so.temporal_coloring, "Color strokes by drawing order");

  RenderOpts ro;
  auto* c_r = app.add_subcommand("render", "Render one QuickDraw record");
  c_r->add_option("--input", ro.input, "QuickDraw ndjson file")->required();
  c_r->add_option("--index", ro.index, "0-based record index")->capture_default_str();
  c_r->add_option("--svg", ro.svg, "SVG output");
  c_r->add_option("--png", ro.png, "PNG or PGM output");
  c_r->add_option("--size", ro.size, "Raster side in pixels")->capture_default_str()->check(CLI::PositiveNumber);
  c_r->add_flag("--temporal-coloring", ro.temporal_coloring, "Color strokes by drawing order");

  EvalOpts eo;
  auto* c_e = app.add_subcommand("eval", "Validation losses, recognition, retrieval and Chamfer report");
  c_e->add_option("--ckpt", eo.ckpt, "Checkpoint")->required();
  c_e->add_option("--data", eo.data, "Dataset directory")->required();
  c_e->add_option("--report", eo.report, "JSON report output")->required();
  c_e->add_option("--temperature", eo.temperature)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  c_e->add_option("--seed", eo.seed)->capture_default_str();
  c_e->add_option("--recognizer-steps", eo.recognizer_steps)->capture_default_str();
  c_e->add_option("--embedder-steps", eo.embedder_steps)->capture_default_str();

  GradOpts go;
  auto* c_g = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable op and loss");
  c_g->add_option("--op", go.op, "Run only this check");
  c_g->add_option("--seeds", go.seeds)->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    auto subs = app.get_subcommands();
    err << "error: " << e.what() << "\n\n" << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    if (*c_toy) {
      if (toy.out.empty() && toy.quickdraw.empty()) {
        err << "error: toydata needs --out and/or --quickdraw\n\n" << c_toy->help();
        return kExitUsage;
      }
      return cmd_toydata(toy, out);
    }
    if (*c_pre) return cmd_preprocess(pre, out);
    if (*c_pt) return cmd_pretrain(pt, out);
    if (*c_ft) return cmd_train(ft, out);
    if (*c_s) return cmd_sample(so, out);
    if (*c_r) return cmd_render(ro, out);
    if (*c_e) return cmd_eval(eo, out);
    if (*c_g) return cmd_gradcheck(go, out);
  } catch (const NumericError& e) {
    err << "error: non-finite value in " << e.op() << ": " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace p2s::cli
