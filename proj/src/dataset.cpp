#include "symrl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "symrl/errors.hpp"

namespace symrl {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

double wrap_angle(double x) {
  return x - kTwoPi * std::round(x / kTwoPi);
}

}  // namespace

std::string base64_encode(const std::vector<double>& values) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
  const size_t n = values.size() * sizeof(double);
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  for (size_t i = 0; i < n; i += 3) {
    unsigned int v = bytes[i] << 16;
    if (i + 1 < n) v |= bytes[i + 1] << 8;
    if (i + 2 < n) v |= bytes[i + 2];
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back(i + 1 < n ? kB64Alphabet[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < n ? kB64Alphabet[v & 63] : '=');
  }
  return out;
}

std::vector<double> base64_decode(const std::string& text) {
  static int lut[256];
  static bool init = false;
  if (!init) {
    std::fill(std::begin(lut), std::end(lut), -1);
    for (int i = 0; i < 64; ++i) lut[static_cast<unsigned char>(kB64Alphabet[i])] = i;
    init = true;
  }
  std::vector<unsigned char> bytes;
  bytes.reserve(text.size() / 4 * 3);
  unsigned int buf = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=') break;
    const int v = lut[static_cast<unsigned char>(c)];
    if (v < 0) throw ConfigError("invalid base64 payload");
    buf = (buf << 6) | static_cast<unsigned int>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      bytes.push_back(static_cast<unsigned char>((buf >> bits) & 0xFF));
    }
  }
  if (bytes.size() % sizeof(double) != 0)
    throw ConfigError("base64 payload is not a double array");
  std::vector<double> out(bytes.size() / sizeof(double));
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

void Dataset::validate() const {
  long last_ep = -1;
  for (size_t k = 0; k < transitions.size(); ++k) {
    const auto& t = transitions[k];
    if (static_cast<int>(t.obs.size()) != obs_dim() ||
        static_cast<int>(t.next_obs.size()) != obs_dim())
      throw DimensionError("dataset: observation width mismatch at record " +
                           std::to_string(k));
    if (static_cast<int>(t.act.size()) != act_dim())
      throw DimensionError("dataset: action width mismatch at record " +
                           std::to_string(k));
    if (k > 0 && t.episode_id != last_ep) {
      const auto& prev = transitions[k - 1];
      if (!prev.done && !prev.timeout)
        throw ConfigError("dataset: episode " + std::to_string(last_ep) +
                          " ends without done/timeout");
    }
    last_ep = t.episode_id;
  }
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write dataset file '" + path + "'");
  nlohmann::json header;
  header["format"] = "symrl-dataset";
  header["version"] = 1;
  header["spec"] = ds.spec.to_json();
  header["generator"] = ds.generator;
  header["mean_success"] = ds.mean_success;
  header["episodes"] = ds.episodes;
  header["transitions"] = ds.transitions.size();
  os << header.dump() << "\n";
  for (const auto& t : ds.transitions) {
    nlohmann::json j;
    j["o"] = base64_encode(t.obs);
    j["a"] = base64_encode(t.act);
    j["r"] = t.reward;
    j["no"] = base64_encode(t.next_obs);
    j["d"] = t.done ? 1 : 0;
    j["t"] = t.timeout ? 1 : 0;
    j["ep"] = t.episode_id;
    os << j.dump() << "\n";
  }
  if (!os) throw ConfigError("write failed for dataset '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open dataset file '" + path + "'");
  std::string line;
  if (!std::getline(is, line))
    throw ConfigError("dataset file '" + path + "' is empty");
  nlohmann::json header = nlohmann::json::parse(line);
  if (header.at("format").get<std::string>() != "symrl-dataset")
    throw ConfigError("'" + path + "' is not a dataset file");
  Dataset ds;
  ds.spec = SymmetrySpec::from_json(header.at("spec"));
  ds.generator = header.at("generator").get<std::string>();
  ds.mean_success = header.at("mean_success").get<double>();
  ds.episodes = header.at("episodes").get<long>();
  const size_t expected = header.at("transitions").get<size_t>();
  ds.transitions.reserve(expected);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    Transition t;
    t.obs = base64_decode(j.at("o").get<std::string>());
    t.act = base64_decode(j.at("a").get<std::string>());
    t.reward = j.at("r").get<double>();
    t.next_obs = base64_decode(j.at("no").get<std::string>());
    t.done = j.at("d").get<int>() != 0;
    t.timeout = j.at("t").get<int>() != 0;
    t.episode_id = j.at("ep").get<long>();
    ds.transitions.push_back(std::move(t));
  }
  if (ds.transitions.size() != expected)
    throw ConfigError("dataset '" + path + "' is truncated: header says " +
                      std::to_string(expected) + " records, found " +
                      std::to_string(ds.transitions.size()));
  ds.validate();
  return ds;
}

GeneratorKind generator_from_name(const std::string& s) {
  if (s == "expert") return GeneratorKind::Expert;
  if (s == "weak") return GeneratorKind::Weak;
  if (s == "mixed") return GeneratorKind::Mixed;
  if (s == "half-expert") return GeneratorKind::HalfExpert;
  if (s == "weak-expert") return GeneratorKind::WeakExpert;
  if (s == "asym-expert") return GeneratorKind::AsymExpert;
  throw ConfigError("unknown generator policy kind '" + s + "'");
}

std::string generator_name(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::Expert: return "expert";
    case GeneratorKind::Weak: return "weak";
    case GeneratorKind::Mixed: return "mixed";
    case GeneratorKind::HalfExpert: return "half-expert";
    case GeneratorKind::WeakExpert: return "weak-expert";
    case GeneratorKind::AsymExpert: return "asym-expert";
  }
  return "?";
}

std::vector<double> rotreach_expert_action(std::span<const double> obs,
                                           int n_arms, double link1,
                                           double link2, bool always_arm0) {
  const double tx = obs[4 * n_arms];
  const double ty = obs[4 * n_arms + 1];
  // Target in each arm frame and tip distances.
  int best = 0;
  double best_d = 1e300;
  std::vector<double> t_local(2 * n_arms);
  for (int k = 0; k < n_arms; ++k) {
    const double a = -kTwoPi * k / n_arms;
    const double lx = std::cos(a) * tx - std::sin(a) * ty;
    const double ly = std::sin(a) * tx + std::cos(a) * ty;
    t_local[2 * k] = lx;
    t_local[2 * k + 1] = ly;
    const double q1 = obs[4 * k], q2 = obs[4 * k + 1];
    const double tipx = link1 * std::cos(q1) + link2 * std::cos(q1 + q2);
    const double tipy = link1 * std::sin(q1) + link2 * std::sin(q1 + q2);
    const double d = std::hypot(tipx - lx, tipy - ly);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  const int arm = always_arm0 ? 0 : best;

  // Two-link inverse kinematics in the chosen arm's frame.
  const double lx = t_local[2 * arm], ly = t_local[2 * arm + 1];
  const double reach = link1 + link2;
  double rho = std::hypot(lx, ly);
  rho = std::clamp(rho, std::abs(link1 - link2) + 1e-6, reach - 1e-6);
  double c2 = (rho * rho - link1 * link1 - link2 * link2) /
              (2.0 * link1 * link2);
  c2 = std::clamp(c2, -1.0, 1.0);
  const double q2_star = std::acos(c2);
  const double q1_star = std::atan2(ly, lx) -
                         std::atan2(link2 * std::sin(q2_star),
                                    link1 + link2 * std::cos(q2_star));

  constexpr double kGain = 4.0;
  std::vector<double> act(2 * n_arms, 0.0);
  act[2 * arm] = std::clamp(kGain * wrap_angle(q1_star - obs[4 * arm]), -1.0, 1.0);
  act[2 * arm + 1] =
      std::clamp(kGain * wrap_angle(q2_star - obs[4 * arm + 1]), -1.0, 1.0);
  return act;
}

Dataset generate_dataset(const EnvConfig& env_cfg, GeneratorKind kind,
                         int episodes, std::uint64_t seed) {
  if (env_cfg.id != "rotreach")
    throw ConfigError("no scripted expert is defined for env '" + env_cfg.id +
                      "'");
  auto env = make_env(env_cfg);
  Dataset ds;
  ds.spec = env->symmetry_spec();
  ds.generator = generator_name(kind);
  ds.episodes = episodes;

  // Calibrated so the weak controller reaches roughly a quarter of targets.
  constexpr double kWeakNoise = 6.0;
  constexpr double kMixedNoise = 0.3;

  Rng env_rng(derive_seed(seed, 0xD0), 5);
  Rng noise_rng(derive_seed(seed, 0xD1), 6);
  int successes = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    double noise = 0.0;
    bool asym = false;
    switch (kind) {
      case GeneratorKind::Expert: break;
      case GeneratorKind::Weak: noise = kWeakNoise; break;
      case GeneratorKind::Mixed: noise = kMixedNoise; break;
      case GeneratorKind::HalfExpert:
        noise = (ep < episodes / 2) ? 0.0 : kWeakNoise;
        break;
      case GeneratorKind::WeakExpert:
        noise = (ep % 2 == 0) ? 0.0 : kWeakNoise;
        break;
      case GeneratorKind::AsymExpert: asym = true; break;
    }
    auto obs = env->reset(env_rng);
    while (true) {
      auto act = rotreach_expert_action(obs, env_cfg.n_agents, env_cfg.link1,
                                        env_cfg.link2, asym);
      if (noise > 0.0)
        for (auto& a : act)
          a = std::clamp(a + noise * noise_rng.normal(), -1.0, 1.0);
      StepOut out = env->step(act);
      Transition t;
      t.obs = obs;
      t.act = act;
      t.reward = out.reward;
      t.next_obs = out.obs;
      t.done = out.done && !out.timeout;
      t.timeout = out.timeout;
      t.episode_id = ep;
      ds.transitions.push_back(std::move(t));
      if (out.done) break;
      obs = out.obs;
    }
    if (env->success()) successes += 1;
  }
  ds.mean_success = static_cast<double>(successes) / episodes;
  ds.validate();
  return ds;
}

Dataset augment_symmetric(const Dataset& ds) {
  const TransformSet ts = build_transform_set(ds.spec);
  const int n = ts.group_size();
  Dataset out;
  out.spec = ds.spec;
  out.generator = ds.generator + "+augmented";
  out.mean_success = ds.mean_success;
  out.episodes = ds.episodes * n;
  out.transitions.reserve(ds.transitions.size() * n);
  long max_ep = 0;
  for (const auto& t : ds.transitions) max_ep = std::max(max_ep, t.episode_id);
  const long stride = max_ep + 1;
  out.transitions = ds.transitions;
  for (int i = 1; i < n; ++i) {
    for (const auto& t : ds.transitions) {
      Transition c;
      c.obs = ts.obs[i].apply(t.obs);
      c.act = ts.act[i].apply(t.act);
      c.reward = t.reward;
      c.next_obs = ts.obs[i].apply(t.next_obs);
      c.done = t.done;
      c.timeout = t.timeout;
      c.episode_id = t.episode_id + stride * i;
      out.transitions.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace symrl
