#include <cmath>
#include <stdexcept>

#include "dvgait/dvgan/training.hpp"

namespace dvgait::dvgan {

using namespace numgrad;

GeneratorLoss generator_loss(const Tensor& x, const Tensor& x_hat, const Tensor& d_logits,
                             const Tensor& m_logits, const TrainConfig& config) {
  GeneratorLoss out;
  Tensor l1 = l1_loss(x_hat, x);
  Tensor adv_d = bce_with_logits(d_logits, 1.0);
  Tensor adv_m = bce_with_logits(m_logits, 1.0);
  out.l1 = l1.item();
  out.adv_d = adv_d.item();
  out.adv_m = adv_m.item();
  out.total = add(add(scale(l1, config.lambda_l1), scale(adv_d, config.w_d)), scale(adv_m, config.w_m));
  return out;
}

Tensor critic_loss(const Tensor& real_logits, const Tensor& fake_logits) {
  return add(bce_with_logits(real_logits, 1.0), bce_with_logits(fake_logits, 0.0));
}

double discriminator_step(PairCritic& discriminator, Adam& optimizer, const Tensor& x, const Tensor& fake) {
  discriminator.zero_grad();
  const Tensor target = x.detach();
  Tensor loss = critic_loss(discriminator.logits(target, target), discriminator.logits(target, fake.detach()));
  loss.backward();
  optimizer.step();
  return loss.item();
}

Tensor synthesize_midpoint(GeneratorNet& generator, const Tensor& lower, const Tensor& upper) {
  return generator.decode(lerp(generator.encode(lower), generator.encode(upper), 0.5));
}

double monitor_step(PairCritic& monitor, Adam& optimizer, const Tensor& centre, const Tensor& midpoint) {
  // Same two-sided objective as the discriminator; the pair's reference is
  // the true centre view.
  return discriminator_step(monitor, optimizer, centre, midpoint);
}

}  // namespace dvgait::dvgan
