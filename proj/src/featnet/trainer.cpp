#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dvgait/featnet/training.hpp"
#include "dvgait/numgrad/checkpoint.hpp"

namespace dvgait::featnet {

using namespace numgrad;

namespace {

Tensor batch_tensor(const std::vector<const gei::Gei*>& items) {
  return Tensor::from_vector({static_cast<std::int64_t>(items.size()), 1, gei::kSize, gei::kSize},
                             gei::stack_pixels(items));
}

int label_of(const std::map<std::string, int>& labels, const std::string& subject) {
  const auto it = labels.find(subject);
  if (it == labels.end()) throw std::invalid_argument("subject " + subject + " is not a training class");
  return it->second;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  const auto v = logits.to_vector();
  const std::int64_t n = logits.dim(0), k = logits.dim(1);
  std::vector<int> out(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const auto row = v.begin() + i * k;
    out[i] = static_cast<int>(std::max_element(row, row + k) - row);
  }
  return out;
}

}  // namespace

void validate(const FeatTrainConfig& config) {
  if (config.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (config.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (config.gamma < 0) throw std::invalid_argument("gamma must be >= 0");
  if (!(config.center_rate > 0 && config.center_rate <= 1)) throw std::invalid_argument("center_rate must be in (0, 1]");
  validate(config.net);
}

std::map<std::string, int> label_map(const std::vector<gei::Gei>& originals) {
  std::vector<std::string> ids;
  for (const auto& g : originals) ids.push_back(g.subject);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out[ids[i]] = static_cast<int>(i);
  return out;
}

FeatureModel::FeatureModel(const FeatureNetConfig& config, int classes, std::uint64_t seed) {
  Rng net_rng(Rng::mix(seed, 21)), head_rng(Rng::mix(seed, 22));
  net = std::make_unique<FeatureNet>(config, net_rng);
  head = std::make_unique<ClassifierHead>(config.embedding, classes, head_rng);
  centers = Tensor::zeros({classes, config.embedding});
}

FeatTrainResult train_features(FeatureModel& model, const std::vector<gei::Gei>& originals,
                               const std::vector<gei::Gei>& synthesized, const FeatTrainConfig& config,
                               const std::filesystem::path& out_dir, const EpochCallback& on_epoch) {
  validate(config);
  if (originals.empty()) throw std::invalid_argument("no training GEIs");
  if (model.labels.empty()) model.labels = label_map(originals);
  if (static_cast<int>(model.labels.size()) != model.head->classes())
    throw std::invalid_argument("classifier size does not match the number of training subjects");
  for (const auto& g : synthesized) label_of(model.labels, g.subject);

  FeatureNet& net = *model.net;
  ClassifierHead& head = *model.head;
  net.train();
  head.train();
  auto params = net.parameters();
  for (auto& p : head.parameters()) params.push_back(p);
  Adam opt(params, config.adam);

  Rng rng(Rng::mix(config.seed, 0x6665));
  std::vector<std::size_t> order(originals.size()), extra(synthesized.size());
  std::size_t extra_pos = extra.size();
  const std::size_t batch = std::min<std::size_t>(config.batch_size, originals.size());
  const std::size_t iters = (originals.size() + batch - 1) / batch;
  FeatTrainResult result;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t seen = 0, correct = 0;
    for (std::size_t it = 0; it < iters; ++it) {
      std::vector<const gei::Gei*> items;
      for (std::size_t i = it * batch; i < std::min(originals.size(), (it + 1) * batch); ++i)
        items.push_back(&originals[order[i]]);
      const std::size_t n_orig = items.size();
      // Synthesized GEIs are drawn from their own shuffled stream, one per original.
      for (std::size_t i = 0; i < n_orig && !synthesized.empty(); ++i) {
        if (extra_pos == extra.size()) {
          std::iota(extra.begin(), extra.end(), std::size_t{0});
          rng.shuffle(extra);
          extra_pos = 0;
        }
        items.push_back(&synthesized[extra[extra_pos++]]);
      }
      std::vector<int> labels;
      for (const auto* g : items) labels.push_back(label_of(model.labels, g->subject));

      try {
        opt.zero_grad();
        const Tensor f = net.forward(batch_tensor(items));
        const Tensor logits = head.forward(f);
        const auto loss = multi_loss(f, logits, labels, model.centers, config.gamma);
        loss.total.backward();
        opt.step();
        update_centers(f.detach(), labels, model.centers, config.center_rate);
        rec.softmax += loss.softmax;
        rec.center += loss.center;
        rec.total += loss.total.item();
        const auto pred = argmax_rows(logits);
        for (std::size_t i = 0; i < labels.size(); ++i) correct += pred[i] == labels[i];
        seen += labels.size();
      } catch (const NumericError& e) {
        throw TrainingError("non-finite value at epoch " + std::to_string(epoch) + " batch " +
                            std::to_string(it) + ": " + e.what());
      }
      if (!std::isfinite(rec.total))
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + " batch " + std::to_string(it));
    }
    rec.softmax /= iters;
    rec.center /= iters;
    rec.total /= iters;
    rec.accuracy = static_cast<double>(correct) / static_cast<double>(seen);
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  net.eval();
  head.eval();
  result.train_accuracy = classification_accuracy(model, originals);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    save_checkpoint(out_dir / kFeatureFile, net);
    save_checkpoint(out_dir / kHeadFile, head);
    save_tensors(out_dir / kCentersFile, {{"centers", model.centers}});
    std::ofstream out(out_dir / kHistoryFile);
    out << "epoch,softmax,center,total,accuracy\n";
    char line[200];
    for (const auto& r : result.history) {
      std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%.9g,%.6f\n", r.epoch, r.softmax, r.center, r.total,
                    r.accuracy);
      out << line;
    }
  }
  return result;
}

double classification_accuracy(FeatureModel& model, const std::vector<gei::Gei>& geis) {
  if (geis.empty()) return 0.0;
  NoGradGuard guard;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < geis.size(); start += 64) {
    std::vector<const gei::Gei*> items;
    std::vector<int> labels;
    for (std::size_t i = start; i < std::min(geis.size(), start + 64); ++i) {
      items.push_back(&geis[i]);
      labels.push_back(label_of(model.labels, geis[i].subject));
    }
    const auto pred = argmax_rows(model.head->forward(model.net->forward(batch_tensor(items))));
    for (std::size_t i = 0; i < labels.size(); ++i) correct += pred[i] == labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(geis.size());
}

std::vector<Embedding> extract(FeatureNet& net, const std::vector<gei::Gei>& geis, int batch_size) {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  NoGradGuard guard;
  const bool was_training = net.is_training();
  net.eval();
  std::vector<Embedding> out;
  out.reserve(geis.size());
  for (std::size_t start = 0; start < geis.size(); start += batch_size) {
    std::vector<const gei::Gei*> items;
    for (std::size_t i = start; i < std::min(geis.size(), start + batch_size); ++i) items.push_back(&geis[i]);
    const Tensor f = net.forward(batch_tensor(items)).to(DType::f32);
    const auto values = f.data<float>();
    const std::int64_t d = f.dim(1);
    for (std::size_t i = 0; i < items.size(); ++i) {
      Embedding e;
      e.values.assign(values.begin() + i * d, values.begin() + (i + 1) * d);
      e.subject = items[i]->subject;
      e.sequence = items[i]->sequence;
      e.view_deg = items[i]->view_deg;
      e.origin = items[i]->origin;
      out.push_back(std::move(e));
    }
  }
  net.train(was_training);
  return out;
}

std::vector<Embedding> extract(const std::filesystem::path& checkpoint, const FeatureNetConfig& config,
                               const std::vector<gei::Gei>& geis) {
  Rng rng(0);
  FeatureNet net(config, rng);
  load_checkpoint(checkpoint, net);
  return extract(net, geis);
}

void write_embeddings_csv(const std::filesystem::path& path, const std::vector<Embedding>& embeddings) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::size_t d = embeddings.empty() ? kEmbeddingDim : embeddings.front().values.size();
  out << "subject,sequence,view,origin";
  for (std::size_t j = 0; j < d; ++j) out << ",f" << j;
  out << '\n';
  char buf[32];
  for (const auto& e : embeddings) {
    if (e.values.size() != d) throw std::invalid_argument("embeddings differ in length");
    std::snprintf(buf, sizeof buf, "%g", e.view_deg);
    out << e.subject << ',' << e.sequence << ',' << buf << ',' << gei::origin_name(e.origin);
    for (float v : e.values) {
      std::snprintf(buf, sizeof buf, ",%.9g", v);
      out << buf;
    }
    out << '\n';
  }
}

std::vector<Embedding> read_embeddings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("subject,sequence,view,origin", 0) != 0) throw std::runtime_error("unexpected embedding header");
  std::vector<Embedding> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    Embedding e;
    std::string view, origin, cell;
    std::getline(fields, e.subject, ',');
    std::getline(fields, e.sequence, ',');
    std::getline(fields, view, ',');
    std::getline(fields, origin, ',');
    e.view_deg = std::stod(view);
    e.origin = gei::parse_origin(origin);
    while (std::getline(fields, cell, ',')) e.values.push_back(std::stof(cell));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace dvgait::featnet
