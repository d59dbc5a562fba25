#include "fungi/optim.hpp"

#include <algorithm>
#include <cmath>

#include "fungi/error.hpp"

namespace fungi {

void AdamWConfig::validate() const {
  if (!(lr > 0)) throw ConfigError("learning rate must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
    throw ConfigError("adamw betas must lie in [0, 1)");
  if (!(eps > 0)) throw ConfigError("adamw eps must be positive");
  if (weight_decay < 0) throw ConfigError("weight decay must be non-negative");
}

AdamW::AdamW(const EncoderPair& params, AdamWConfig config)
    : cfg_(config), m_(params.zeros_like()), v_(params.zeros_like()) {
  cfg_.validate();
  steps_.assign(tensor_refs(m_).size(), 0);
}

void AdamW::step(EncoderPair& params, const EncoderPair& grads) {
  auto param_refs = tensor_refs(params);
  auto grad_refs = tensor_refs(const_cast<EncoderPair&>(grads));
  auto m_refs = tensor_refs(m_);
  auto v_refs = tensor_refs(v_);
  if (param_refs.size() != grad_refs.size() || param_refs.size() != steps_.size())
    throw DataError("optimizer state does not match the parameter set");

  for (std::size_t i = 0; i < param_refs.size(); ++i) {
    const auto& p = param_refs[i];
    if (p.size != grad_refs[i].size || p.size != m_refs[i].size)
      throw DataError(std::string("optimizer shape mismatch at ") + p.name);
    if (!params.mask.is_trainable(p.group)) continue;

    const std::int64_t t = ++steps_[i];
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t));

    Eigen::Map<Eigen::ArrayXd> theta(p.data, p.size);
    Eigen::Map<const Eigen::ArrayXd> g(grad_refs[i].data, p.size);
    Eigen::Map<Eigen::ArrayXd> m(m_refs[i].data, p.size);
    Eigen::Map<Eigen::ArrayXd> v(v_refs[i].data, p.size);

    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.square();
    theta -= cfg_.lr * ((m / c1) / ((v / c2).sqrt() + cfg_.eps) + cfg_.weight_decay * theta);
  }
  params.log_temperature =
      std::clamp(params.log_temperature, std::log(kTauMin), std::log(kTauMax));
}

FreezeMask unfreeze_schedule(int epoch, int interval) {
  if (epoch < 0) throw ConfigError("epoch must be non-negative");
  if (interval < 1) throw ConfigError("unfreeze interval must be positive");
  FreezeMask mask;
  mask.trainable[static_cast<std::size_t>(ParamGroup::Heads)] = true;
  mask.trainable[static_cast<std::size_t>(ParamGroup::LogTau)] = true;
  const int stages = epoch / interval;
  if (stages >= 1) mask.trainable[static_cast<std::size_t>(ParamGroup::G3)] = true;
  if (stages >= 2) mask.trainable[static_cast<std::size_t>(ParamGroup::G2)] = true;
  if (stages >= 3) mask.trainable[static_cast<std::size_t>(ParamGroup::G1)] = true;
  return mask;
}

}  // namespace fungi
