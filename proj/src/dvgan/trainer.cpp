#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "dvgait/dvgan/training.hpp"
#include "dvgait/numgrad/checkpoint.hpp"

namespace dvgait::dvgan {

using namespace numgrad;

namespace {

constexpr double kViewTol = 1e-6;

bool same_view(double a, double b) { return std::abs(a - b) < kViewTol; }

bool has_view(const std::vector<double>& views, double v) {
  return std::any_of(views.begin(), views.end(), [&](double w) { return same_view(v, w); });
}

using GroupIndex = std::map<std::pair<std::string, std::string>, std::vector<const gei::Gei*>>;

GroupIndex group_by_sequence(const std::vector<gei::Gei>& geis) {
  GroupIndex groups;
  for (const auto& g : geis) groups[{g.subject, g.sequence}].push_back(&g);
  return groups;
}

const gei::Gei* find_view(const std::vector<const gei::Gei*>& group, double view) {
  for (const auto* g : group)
    if (same_view(g->view_deg, view)) return g;
  return nullptr;
}

Tensor stack(const std::vector<Triple>& triples, const gei::Gei* Triple::*member) {
  std::vector<const gei::Gei*> ptrs;
  for (const auto& t : triples) ptrs.push_back(t.*member);
  return to_tensor(ptrs);
}

}  // namespace

std::vector<double> monitor_views(const std::vector<double>& views, double theta_prime) {
  std::vector<double> out;
  for (double v : views)
    if (has_view(views, v - theta_prime) && has_view(views, v + theta_prime)) out.push_back(v);
  return out;
}

std::vector<std::pair<double, double>> adjacent_pairs(const std::vector<double>& views) {
  std::vector<double> sorted = views;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 1; i < sorted.size(); ++i) out.emplace_back(sorted[i - 1], sorted[i]);
  return out;
}

std::vector<std::pair<double, double>> synthesis_pairs(const TrainConfig& config) {
  return config.pairs.empty() ? adjacent_pairs(config.views) : config.pairs;
}

void validate(const TrainConfig& config) {
  if (config.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (config.batch_size < 2) throw std::invalid_argument("batch_size must be >= 2 (batch norm)");
  if (config.lambda_l1 < 0 || config.w_d < 0 || config.w_m < 0)
    throw std::invalid_argument("loss weights must be non-negative");
  if (!(config.theta_prime > 0)) throw std::invalid_argument("theta_prime must be positive");
  if (config.views.size() < 3) throw std::invalid_argument("at least three views are needed");
  std::vector<double> sorted = config.views;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (!same_view(sorted[i] - sorted[i - 1], config.theta_prime)) {
      std::ostringstream msg;
      msg << "theta_prime " << config.theta_prime << " does not match view spacing " << sorted[i] - sorted[i - 1]
          << " between " << sorted[i - 1] << " and " << sorted[i];
      throw std::invalid_argument(msg.str());
    }
  }
  if (monitor_views(config.views, config.theta_prime).empty())
    throw std::invalid_argument("no monitor triple fits the view list");
  for (const auto& [p, q] : config.pairs)
    if (!has_view(config.views, p) || !has_view(config.views, q))
      throw std::invalid_argument("synthesis pair uses a view outside the view list");
  validate(config.generator);
}

Triple make_triple(const std::vector<gei::Gei>& geis, const std::string& subject, const std::string& sequence,
                   double centre, double theta_prime) {
  Triple t{nullptr, nullptr, nullptr};
  for (const auto& g : geis) {
    if (g.subject != subject || g.sequence != sequence) continue;
    if (same_view(g.view_deg, centre - theta_prime)) t.lower = &g;
    if (same_view(g.view_deg, centre)) t.centre = &g;
    if (same_view(g.view_deg, centre + theta_prime)) t.upper = &g;
  }
  if (!t.lower || !t.centre || !t.upper) {
    std::ostringstream msg;
    msg << "monitor triple around " << centre << " deg is missing a view for " << subject << "/" << sequence;
    throw std::invalid_argument(msg.str());
  }
  return t;
}

std::vector<Triple> find_triples(const std::vector<gei::Gei>& geis, const std::vector<double>& views,
                                 double theta_prime) {
  std::vector<Triple> out;
  const auto centres = monitor_views(views, theta_prime);
  for (const auto& [key, group] : group_by_sequence(geis)) {
    for (double c : centres) {
      const auto* lo = find_view(group, c - theta_prime);
      const auto* mid = find_view(group, c);
      const auto* hi = find_view(group, c + theta_prime);
      if (lo && mid && hi) out.push_back({lo, mid, hi});
    }
  }
  return out;
}

TrainResult train(DvGan& gan, const std::vector<gei::Gei>& corpus, const TrainConfig& config,
                  const std::filesystem::path& out_dir, const IterationCallback& on_iteration) {
  validate(config);
  for (double v : config.views) {
    const bool present =
        std::any_of(corpus.begin(), corpus.end(), [&](const gei::Gei& g) { return same_view(g.view_deg, v); });
    if (!present) throw std::invalid_argument("corpus has no GEI at configured view " + std::to_string(v));
  }
  std::vector<const gei::Gei*> pool;
  for (const auto& g : corpus)
    if (has_view(config.views, g.view_deg)) pool.push_back(&g);
  const auto triples = find_triples(corpus, config.views, config.theta_prime);
  if (triples.empty()) throw std::invalid_argument("corpus holds no complete monitor triple");
  const std::size_t batch = std::min<std::size_t>(config.batch_size, pool.size());
  if (batch < 2) throw std::invalid_argument("corpus too small for a batch of 2");
  const std::size_t iters = pool.size() / batch;

  GeneratorNet& G = *gan.generator;
  PairCritic& D = *gan.discriminator;
  PairCritic& M = *gan.monitor;
  G.train();
  D.train();
  M.train();
  Adam opt_g(G.parameters(), config.generator_adam);
  Adam opt_d(D.parameters(), config.critic_adam);
  Adam opt_m(M.parameters(), config.critic_adam);

  Rng rng(Rng::mix(config.seed, 0x6761));
  std::vector<std::size_t> order(pool.size());
  TrainResult result;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    double l1_sum = 0.0;
    for (std::size_t it = 0; it < iters; ++it) {
      std::vector<const gei::Gei*> items;
      for (std::size_t b = 0; b < batch; ++b) items.push_back(pool[order[it * batch + b]]);
      std::vector<Triple> picked;
      for (std::size_t b = 0; b < batch; ++b) picked.push_back(triples[rng.below(triples.size())]);

      LossRecord rec;
      rec.epoch = epoch;
      rec.iter = static_cast<int>(it);
      try {
        const Tensor x = to_tensor(items);
        const Tensor lower = stack(picked, &Triple::lower);
        const Tensor centre = stack(picked, &Triple::centre);
        const Tensor upper = stack(picked, &Triple::upper);

        const Tensor x_hat = G.forward(x);
        const Tensor mid = synthesize_midpoint(G, lower, upper);
        rec.d_loss = discriminator_step(D, opt_d, x, x_hat);
        rec.m_loss = monitor_step(M, opt_m, centre, mid);

        D.set_requires_grad(false);
        M.set_requires_grad(false);
        G.zero_grad();
        const auto loss = generator_loss(x, x_hat, D.logits(x, x_hat), M.logits(centre, mid), config);
        loss.total.backward();
        opt_g.step();
        D.set_requires_grad(true);
        M.set_requires_grad(true);
        rec.l1 = loss.l1;
        rec.adv_d = loss.adv_d;
        rec.adv_m = loss.adv_m;
      } catch (const NumericError& e) {
        throw TrainingError("non-finite value at epoch " + std::to_string(epoch) + " iteration " +
                            std::to_string(it) + ": " + e.what());
      }
      for (double v : {rec.l1, rec.adv_d, rec.adv_m, rec.d_loss, rec.m_loss})
        if (!std::isfinite(v))
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + " iteration " +
                              std::to_string(it));
      l1_sum += rec.l1;
      result.history.push_back(rec);
      if (on_iteration) on_iteration(rec);
    }
    result.epoch_l1.push_back(l1_sum / static_cast<double>(iters));
  }

  G.eval();
  D.eval();
  M.eval();
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    save_checkpoint(out_dir / kGeneratorFile, G);
    save_checkpoint(out_dir / kDiscriminatorFile, D);
    save_checkpoint(out_dir / kMonitorFile, M);
    write_loss_csv(out_dir / kLossFile, result.history);
  }
  return result;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,iter,L1,adv_D,adv_M,D_loss,M_loss\n";
  char line[256];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.iter, r.l1, r.adv_d,
                  r.adv_m, r.d_loss, r.m_loss);
    out << line;
  }
}

std::vector<LossRecord> read_loss_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "epoch,iter,L1,adv_D,adv_M,D_loss,M_loss") throw std::runtime_error("unexpected loss CSV header");
  std::vector<LossRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    LossRecord r;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf,%lf,%lf", &r.epoch, &r.iter, &r.l1, &r.adv_d, &r.adv_m,
                    &r.d_loss, &r.m_loss) != 7)
      throw std::runtime_error("malformed loss CSV line: " + line);
    out.push_back(r);
  }
  return out;
}

}  // namespace dvgait::dvgan
