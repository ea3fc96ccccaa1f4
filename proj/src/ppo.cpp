#include "symrl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "symrl/evaluate.hpp"

namespace symrl {

std::pair<double, double> sasa_aux_losses(
    const std::function<std::vector<double>(std::span<const double>)>& action_fn,
    const std::function<double(std::span<const double>)>& value_fn,
    std::span<const double> obs, const TransformSet& ts, int i) {
  const auto a = action_fn(obs);
  const auto t_obs = ts.obs[i].apply(obs);
  const auto a_t = action_fn(t_obs);
  const auto t_a = ts.act[i].apply(a);
  double sq = 0.0;
  for (size_t d = 0; d < a.size(); ++d)
    sq += (t_a[d] - a_t[d]) * (t_a[d] - a_t[d]);
  const double policy_loss = std::sqrt(sq);
  const double value_loss = std::abs(value_fn(obs) - value_fn(t_obs));
  return {policy_loss, value_loss};
}

PpoStats ppo_update(Agent& agent, const RolloutBatch& batch, const GaeOut& gae,
                    const PpoConfig& cfg, Rng& rng, AdamState& policy_state,
                    AdamState& critic_state) {
  PpoStats stats;
  const int total = batch.size();
  const int mb_size = std::min(cfg.minibatch_size, total);
  const int env_group = agent.env_ts->group_size();
  // Zero-weight penalties must leave the update stream identical to SA.
  const bool sasa = agent.variant == Variant::SASA && env_group > 1 &&
                    (cfg.sym_w_policy > 0.0 || cfg.sym_w_value > 0.0);

  // Normalize observations once with frozen statistics.
  std::vector<double> norm_obs(static_cast<size_t>(total) * batch.obs_dim);
  for (int idx = 0; idx < total; ++idx)
    agent.obs_norm.normalize(
        batch.obs_row(idx),
        std::span<double>(norm_obs.data() + static_cast<size_t>(idx) * batch.obs_dim,
                          batch.obs_dim));

  std::vector<int> indices(total);
  std::iota(indices.begin(), indices.end(), 0);

  auto pol_grads = agent.policy.zero_grads();
  auto cri_grads = agent.critic.zero_grads();

  double loss_pi_sum = 0.0, loss_v_sum = 0.0, clip_sum = 0.0;
  double psl_sum = 0.0, vsl_sum = 0.0;
  long sample_count = 0;
  int minibatches_done = 0;
  bool first_minibatch = true;

  PolicyTape tape, tape2;
  PooledCritic::TapeSet vtape, vtape2;

  for (int epoch = 0; epoch < cfg.mini_epochs; ++epoch) {
    // Fisher-Yates with the trainer stream.
    for (int k = total - 1; k > 0; --k) {
      const int j = static_cast<int>(rng.uniform_int(k + 1));
      std::swap(indices[k], indices[j]);
    }
    double epoch_kl = 0.0;
    long epoch_samples = 0;

    for (int start = 0; start < total; start += mb_size) {
      const int end = std::min(start + mb_size, total);
      const int count = end - start;
      pol_grads.zero();
      cri_grads.zero();
      const int sym_i =
          (sasa && env_group > 1)
              ? 1 + static_cast<int>(rng.uniform_int(env_group - 1))
              : 0;
      double mb_loss_pi = 0.0, mb_loss_v = 0.0;

      for (int s = start; s < end; ++s) {
        const int idx = indices[s];
        std::span<const double> o(
            norm_obs.data() + static_cast<size_t>(idx) * batch.obs_dim,
            static_cast<size_t>(batch.obs_dim));
        const auto act = batch.act_row(idx);
        const double adv = gae.advantages[idx];

        agent.policy.mean_action(o, &tape);
        const double lp_new = agent.policy.log_prob_from_mean(tape.mean, act);
        const double ratio = std::exp(lp_new - batch.log_prob[idx]);
        if (first_minibatch)
          stats.max_first_ratio_dev =
              std::max(stats.max_first_ratio_dev, std::abs(ratio - 1.0));
        const double u1 = -adv * ratio;
        const double u2 =
            -adv * std::clamp(ratio, 1.0 - cfg.e_clip, 1.0 + cfg.e_clip);
        mb_loss_pi += std::max(u1, u2);
        const double dlp = (u1 >= u2) ? -adv * ratio : 0.0;
        agent.policy.backward_log_prob(tape, act, dlp / count, pol_grads);
        if (std::abs(ratio - 1.0) > cfg.e_clip) clip_sum += 1.0;
        epoch_kl += batch.log_prob[idx] - lp_new;

        const double vhat = agent.critic.value(o, &vtape);
        const double target = agent.val_norm.normalize(gae.returns[idx]);
        mb_loss_v += 0.5 * (vhat - target) * (vhat - target);
        agent.critic.backward(vtape, cfg.critic_coef * (vhat - target) / count,
                              cri_grads);

        if (sasa && sym_i > 0) {
          const auto t_obs = agent.env_ts->obs[sym_i].apply(o);
          agent.policy.mean_action(t_obs, &tape2);
          const auto t_a = agent.env_ts->act[sym_i].apply(tape.mean);
          std::vector<double> diff(t_a.size());
          double sq = 0.0;
          for (size_t d = 0; d < t_a.size(); ++d) {
            diff[d] = t_a[d] - tape2.mean[d];
            sq += diff[d] * diff[d];
          }
          const double nrm = std::sqrt(sq);
          psl_sum += nrm;
          if (nrm > 1e-12) {
            const double w = cfg.sym_w_policy / (count * nrm);
            std::vector<double> up1(diff.size());
            for (auto& d : diff) d *= w;
            agent.env_ts->act[sym_i].apply_transpose(diff, up1);
            agent.policy.backward_mean(tape, up1, pol_grads);
            for (auto& d : diff) d = -d;
            agent.policy.backward_mean(tape2, diff, pol_grads);
          }
          const double v2 = agent.critic.value(t_obs, &vtape2);
          const double vdiff = vhat - v2;
          vsl_sum += std::abs(vdiff);
          if (vdiff != 0.0) {
            const double sgn =
                (vdiff > 0.0 ? 1.0 : -1.0) * cfg.sym_w_value / count;
            agent.critic.backward(vtape, sgn, cri_grads);
            agent.critic.backward(vtape2, -sgn, cri_grads);
          }
        }
      }
      if (cfg.entropy_coef > 0.0)
        agent.policy.add_entropy_grad(-cfg.entropy_coef, pol_grads);

      if (!std::isfinite(mb_loss_pi) || !std::isfinite(mb_loss_v))
        throw TrainingError("nan loss in update (epoch " +
                            std::to_string(epoch) + ", minibatch at " +
                            std::to_string(start) + ")");

      // Joint global-norm clipping, then separate Adam steps.
      auto gv = param_views(pol_grads.net);
      gv.emplace_back(pol_grads.log_std);
      auto gc = param_views(cri_grads.feature);
      auto gh = param_views(cri_grads.head);
      gv.insert(gv.end(), gc.begin(), gc.end());
      gv.insert(gv.end(), gh.begin(), gh.end());
      stats.grad_norm = clip_grad_norm(gv, cfg.grad_norm_clip);

      agent.policy.apply_adam(pol_grads, policy_state, cfg.learning_rate, 0.0);
      agent.critic.apply_adam(cri_grads, critic_state, cfg.learning_rate, 0.0);

      loss_pi_sum += mb_loss_pi;
      loss_v_sum += mb_loss_v;
      sample_count += count;
      epoch_samples += count;
      minibatches_done += 1;
      first_minibatch = false;
    }

    stats.epochs_used = epoch + 1;
    stats.approx_kl = epoch_kl / epoch_samples;
    if (!std::isfinite(stats.approx_kl))
      throw TrainingError("nan KL in update (epoch " + std::to_string(epoch) +
                          ")");
    if (stats.approx_kl > cfg.kl_threshold) break;
  }

  stats.policy_loss = loss_pi_sum / sample_count;
  stats.value_loss = loss_v_sum / sample_count;
  stats.clip_frac = clip_sum / sample_count;
  stats.entropy = agent.policy.entropy();
  if (sasa) {
    stats.policy_sym_loss = psl_sum / sample_count;
    stats.value_sym_loss = vsl_sum / sample_count;
  }
  return stats;
}

OnlineTrainer::OnlineTrainer(const RunConfig& rc, std::uint64_t seed)
    : rc_(rc), seed_(seed),
      shuffle_rng_(derive_seed(seed, 0x40), 3) {
  auto env = make_env(rc.env);
  agent_ = make_agent(rc.variant, *env, rc.net, derive_seed(seed, 0x10));
  actors_ = make_actors(rc.env, rc.ppo.num_actors, seed);
}

PpoStats OnlineTrainer::update_once() {
  RolloutBatch batch =
      collect_rollouts(agent_, actors_, rc_.ppo.horizon_length);
  GaeOut gae = compute_gae(batch, rc_.ppo.gamma, rc_.ppo.tau,
                           batch.bootstrap_value, rc_.ppo.value_bootstrap,
                           rc_.ppo.normalize_advantage);
  if (rc_.ppo.normalize_value) agent_.val_norm.update(gae.returns);
  PpoConfig cfg = rc_.ppo;
  if (cfg.linear_lr_decay) {
    const double frac = 1.0 - static_cast<double>(env_steps_) /
                                  static_cast<double>(rc_.total_env_steps);
    cfg.learning_rate *= std::max(frac, 0.05);
  }
  PpoStats stats = ppo_update(agent_, batch, gae, cfg, shuffle_rng_,
                              policy_adam_, critic_adam_);
  if (rc_.ppo.normalize_input)
    agent_.obs_norm.update(batch.obs, batch.size());
  env_steps_ += batch.size();
  for (size_t e = 0; e < batch.finished_returns.size(); ++e) {
    recent_returns_.push_back(batch.finished_returns[e]);
    recent_success_.push_back(batch.finished_success[e]);
    if (recent_returns_.size() > 100) {
      recent_returns_.pop_front();
      recent_success_.pop_front();
    }
  }
  return stats;
}

OnlineTrainer::Result OnlineTrainer::run() {
  const std::string out_dir = resolve_output_dir(rc_.output_dir);
  std::filesystem::create_directories(out_dir);
  const std::string stem =
      rc_.run_id + "_seed" + std::to_string(seed_);
  const std::string csv_path =
      (std::filesystem::path(out_dir) / (stem + ".csv")).string();
  const std::string ckpt_path =
      (std::filesystem::path(out_dir) / (stem + ".ckpt")).string();
  MetricsWriter writer(csv_path, rc_.run_id, seed_, variant_name(rc_.variant),
                       "ppo");

  while (env_steps_ < rc_.total_env_steps) {
    const PpoStats stats = update_once();
    MetricsRow row;
    row.phase = "train";
    row.env_steps = env_steps_;
    if (!recent_returns_.empty()) {
      double ret = 0.0, suc = 0.0;
      for (double r : recent_returns_) ret += r;
      for (auto s : recent_success_) suc += s;
      row.set("episodic_return_mean", ret / recent_returns_.size());
      row.set("success_rate", suc / recent_success_.size());
    }
    row.set("policy_loss", stats.policy_loss);
    row.set("value_loss", stats.value_loss);
    row.set("approx_kl", stats.approx_kl);
    row.set("clip_frac", stats.clip_frac);
    row.set("entropy", stats.entropy);
    row.set("epochs_used", stats.epochs_used);
    if (agent_.variant == Variant::SASA) {
      row.set("policy_sym_loss", stats.policy_sym_loss);
      row.set("value_sym_loss", stats.value_sym_loss);
    }
    writer.write(row);
  }

  save_agent(agent_, rc_.env, "ppo", ckpt_path);

  const EvalResult ev =
      evaluate_policy(agent_, rc_.env, rc_.eval_episodes, derive_seed(seed_, 0xE));
  MetricsRow row;
  row.phase = "eval";
  row.env_steps = env_steps_;
  row.set("success_rate", ev.success_rate);
  row.set("mean_return", ev.mean_return);
  writer.write(row);

  Result res;
  res.env_steps = env_steps_;
  res.final_return_mean = ev.mean_return;
  res.final_success_rate = ev.success_rate;
  res.csv_path = csv_path;
  res.checkpoint_path = ckpt_path;
  return res;
}

OnlineTrainer::Result train_online(const RunConfig& rc, std::uint64_t seed) {
  OnlineTrainer trainer(rc, seed);
  return trainer.run();
}

}  // namespace symrl
