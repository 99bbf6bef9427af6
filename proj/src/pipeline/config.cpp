#include "dvgait/pipeline/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dvgait/evalproto/split.hpp"

namespace dvgait::pipeline {

using nlohmann::json;

namespace {

/// Reads typed fields from one JSON object and remembers which keys were used.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!node_.contains(key)) return;
    used_.insert(key);
    try {
      out = node_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
  }

  void read_number(const std::string& key, double& out, double lo, double hi) {
    read(key, out);
    if (!std::isfinite(out) || out < lo || out > hi) {
      std::ostringstream msg;
      msg << where(key) << " = " << out << " outside [" << lo << ", " << hi << "]";
      throw ConfigError(msg.str());
    }
  }

  void read_int(const std::string& key, int& out, int lo, int hi) {
    if (node_.contains(key) && !node_.at(key).is_number_integer()) throw ConfigError(where(key) + " must be an integer");
    read(key, out);
    if (out < lo || out > hi) {
      throw ConfigError(where(key) + " = " + std::to_string(out) + " outside [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
    }
  }

  Section child(const std::string& key) {
    used_.insert(key);
    return Section(node_.at(key), path_.empty() ? key : path_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, _] : node_.items()) {
      if (!used_.count(key)) throw ConfigError("unknown key '" + key + "' in " + where());
    }
  }

  std::string where(const std::string& key = {}) const {
    std::string p = path_.empty() ? key : (key.empty() ? path_ : path_ + "." + key);
    return p.empty() ? "config" : "'" + p + "'";
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

void read_adam(Section s, numgrad::AdamConfig& adam) {
  s.read_number("lr", adam.lr, 0.0, 1.0);
  s.read_number("beta1", adam.beta1, 0.0, 0.999999);
  s.read_number("beta2", adam.beta2, 0.0, 0.999999);
  s.read_number("eps", adam.eps, 0.0, 1.0);
  s.finish();
}

json adam_json(const numgrad::AdamConfig& a) {
  return {{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}};
}

void read_corpus(Section s, gaitgen::CorpusConfig& c) {
  s.read_int("subjects", c.subjects, 2, 100000);
  s.read("views", c.views);
  s.read_int("sequences", c.sequences, 1, 99);
  s.read_int("frames_per_cycle", c.frames_per_cycle, 1, 1000);
  s.read_int("cycles", c.cycles, 1, 100);
  s.finish();
}

void read_gan(Section s, dvgan::TrainConfig& g) {
  s.read_int("epochs", g.epochs, 0, 100000);
  s.read_int("batch_size", g.batch_size, 2, 100000);
  s.read_number("lambda_l1", g.lambda_l1, 0.0, 1e6);
  s.read_number("w_d", g.w_d, 0.0, 1e6);
  s.read_number("w_m", g.w_m, 0.0, 1e6);
  s.read_number("theta_prime", g.theta_prime, 1e-6, 180.0);
  if (s.has("generator_adam")) read_adam(s.child("generator_adam"), g.generator_adam);
  if (s.has("critic_adam")) read_adam(s.child("critic_adam"), g.critic_adam);
  s.read("encoder", g.generator.encoder);
  s.read("decoder", g.generator.decoder);
  s.read_number("leaky_slope", g.generator.leaky_slope, 0.0, 1.0);
  if (s.has("critic")) {
    Section c = s.child("critic");
    c.read_int("conv1", g.critic.conv1, 1, 4096);
    c.read_int("conv2", g.critic.conv2, 1, 4096);
    c.read_number("leaky_slope", g.critic.leaky_slope, 0.0, 1.0);
    c.finish();
  }
  s.finish();
}

void read_synth(Section s, dvgan::SynthesisConfig& synth) {
  s.read("pairs", synth.pairs);
  if (s.has("alphas") && s.has("divisions")) throw ConfigError("'synth' takes either alphas or divisions, not both");
  if (s.has("divisions")) {
    int n = 0;
    s.read_int("divisions", n, 2, 10000);
    synth.alphas = dvgan::alpha_set(n);
  }
  s.read("alphas", synth.alphas);
  s.finish();
}

void read_cnn(Section s, featnet::FeatTrainConfig& c) {
  s.read_int("epochs", c.epochs, 0, 100000);
  s.read_int("batch_size", c.batch_size, 2, 100000);
  if (s.has("adam")) read_adam(s.child("adam"), c.adam);
  s.read_number("gamma", c.gamma, 0.0, 1e6);
  s.read_number("center_rate", c.center_rate, 0.0, 1.0);
  s.read("conv", c.net.conv);
  s.read_int("embedding", c.net.embedding, 1, 100000);
  s.finish();
}

void read_eval(Section s, EvalConfig& e) {
  s.read_int("train_subjects", e.train_subjects, 1, 100000);
  s.read("gallery_sequences", e.gallery_sequences);
  s.read("probe_sequences", e.probe_sequences);
  if (s.has("metric")) {
    std::string name;
    s.read("metric", name);
    try {
      e.metric = evalproto::parse_metric(name);
    } catch (const std::exception& ex) {
      throw ConfigError(s.where("metric") + ": " + ex.what());
    }
  }
  s.finish();
}

void read_morph(Section s, MorphConfig& m) {
  s.read_number("from_view", m.from_view, 0.0, 180.0);
  s.read_number("to_view", m.to_view, 0.0, 180.0);
  s.read("alphas", m.alphas);
  s.read_int("subjects", m.subjects, 1, 100000);
  s.finish();
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  RunConfig config;
  Section s(root, "");
  if (s.has("seed") && !root.at("seed").is_number_unsigned())
    throw ConfigError("'seed' must be a non-negative integer");
  s.read("seed", config.seed);
  std::string output = config.output.string();
  s.read("output", output);
  if (output.empty()) throw ConfigError("'output' must not be empty");
  config.output = output;
  if (s.has("corpus")) read_corpus(s.child("corpus"), config.corpus);
  if (s.has("gan")) read_gan(s.child("gan"), config.gan);
  if (s.has("synth")) read_synth(s.child("synth"), config.synth);
  if (s.has("cnn")) read_cnn(s.child("cnn"), config.cnn);
  if (s.has("eval")) read_eval(s.child("eval"), config.eval);
  if (s.has("morph")) read_morph(s.child("morph"), config.morph);
  s.finish();

  config.corpus.seed = config.seed;
  config.gan.seed = config.seed;
  config.cnn.seed = config.seed;
  config.gan.views = config.corpus.views;
  if (config.synth.alphas.empty()) config.synth.alphas = dvgan::alpha_set(18);
  if (config.synth.pairs.empty()) config.synth.pairs = dvgan::adjacent_pairs(config.corpus.views);
  config.gan.pairs = config.synth.pairs;
  validate(config);
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_config(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string to_json(const RunConfig& c) {
  json root;
  root["seed"] = c.seed;
  root["output"] = c.output.string();
  root["corpus"] = {{"subjects", c.corpus.subjects},
                    {"views", c.corpus.views},
                    {"sequences", c.corpus.sequences},
                    {"frames_per_cycle", c.corpus.frames_per_cycle},
                    {"cycles", c.corpus.cycles}};
  const auto& g = c.gan;
  root["gan"] = {{"epochs", g.epochs},
                 {"batch_size", g.batch_size},
                 {"lambda_l1", g.lambda_l1},
                 {"w_d", g.w_d},
                 {"w_m", g.w_m},
                 {"theta_prime", g.theta_prime},
                 {"generator_adam", adam_json(g.generator_adam)},
                 {"critic_adam", adam_json(g.critic_adam)},
                 {"encoder", g.generator.encoder},
                 {"decoder", g.generator.decoder},
                 {"leaky_slope", g.generator.leaky_slope},
                 {"critic", {{"conv1", g.critic.conv1}, {"conv2", g.critic.conv2}, {"leaky_slope", g.critic.leaky_slope}}}};
  root["synth"] = {{"pairs", c.synth.pairs}, {"alphas", c.synth.alphas}};
  root["cnn"] = {{"epochs", c.cnn.epochs},
                 {"batch_size", c.cnn.batch_size},
                 {"adam", adam_json(c.cnn.adam)},
                 {"gamma", c.cnn.gamma},
                 {"center_rate", c.cnn.center_rate},
                 {"conv", c.cnn.net.conv},
                 {"embedding", c.cnn.net.embedding}};
  root["eval"] = {{"train_subjects", c.eval.train_subjects},
                  {"gallery_sequences", c.eval.gallery_sequences},
                  {"probe_sequences", c.eval.probe_sequences},
                  {"metric", std::string(evalproto::metric_name(c.eval.metric))}};
  root["morph"] = {{"from_view", c.morph.from_view},
                   {"to_view", c.morph.to_view},
                   {"alphas", c.morph.alphas},
                   {"subjects", c.morph.subjects}};
  return root.dump(2) + "\n";
}

void validate(const RunConfig& c) {
  const auto& views = c.corpus.views;
  if (views.size() < 2) throw ConfigError("'corpus.views' needs at least two views");
  for (double v : views) {
    if (!std::isfinite(v) || v < 0 || v > 180) {
      std::ostringstream msg;
      msg << "'corpus.views' entry " << v << " outside [0, 180]";
      throw ConfigError(msg.str());
    }
  }
  if (!std::is_sorted(views.begin(), views.end()) || std::adjacent_find(views.begin(), views.end()) != views.end())
    throw ConfigError("'corpus.views' must be strictly increasing");

  std::set<std::string> known;
  for (int i = 1; i <= c.corpus.sequences; ++i) known.insert(gaitgen::sequence_label(i));
  for (const auto* list : {&c.eval.gallery_sequences, &c.eval.probe_sequences}) {
    for (const auto& id : *list) {
      if (!known.count(id)) throw ConfigError("eval sequence '" + id + "' is not produced by the corpus");
    }
  }
  if (c.eval.train_subjects >= c.corpus.subjects)
    throw ConfigError("'eval.train_subjects' must leave at least one test subject");
  if (c.eval.train_subjects < 2) throw ConfigError("'eval.train_subjects' must be at least 2");

  for (double a : c.synth.alphas) {
    if (!(a > 0 && a < 1)) throw ConfigError("'synth.alphas' entries must lie strictly inside (0, 1)");
  }
  for (double a : c.morph.alphas) {
    if (!(a >= 0 && a <= 1)) throw ConfigError("'morph.alphas' entries must lie in [0, 1]");
  }
  for (double v : {c.morph.from_view, c.morph.to_view}) {
    if (std::find(views.begin(), views.end(), v) == views.end())
      throw ConfigError("morph view " + gaitgen::view_label(v) + " is not a corpus view");
  }

  try {
    dvgan::validate(c.gan);
    featnet::validate(c.cnn);
    evalproto::validate(evalproto::SplitSpec{{"a"}, {"b"}, c.eval.gallery_sequences, c.eval.probe_sequences});
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace dvgait::pipeline
