#include "cmaudit/interventions.hpp"

#include <algorithm>
#include <cmath>

#include "cmaudit/error.hpp"

namespace cmaudit {
namespace {

constexpr std::array<std::pair<InterventionKind, std::string_view>, 5> kKindNames = {{
    {InterventionKind::codec, "codec"},
    {InterventionKind::white_noise, "white_noise"},
    {InterventionKind::loudness_norm, "loudness_norm"},
    {InterventionKind::nonspeech_zero, "nonspeech_zero"},
    {InterventionKind::mu_law, "mu_law"},
}};

template <typename F>
void for_each_support_value(const ParamDist& dist, F&& f) {
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Uniform>) {
          f(d.lo);
          f(d.hi);
        } else if constexpr (std::is_same_v<T, Dirac>) {
          f(d.value);
        } else {
          for (double v : d.values) f(v);
        }
      },
      dist);
}

}  // namespace

std::string_view to_string(InterventionKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

InterventionKind parse_intervention_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  throw Error("unknown intervention kind '" + std::string(name) + "'");
}

double sample(const ParamDist& dist, Rng& rng) {
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Uniform>) {
          return rng.uniform(d.lo, d.hi);
        } else if constexpr (std::is_same_v<T, Dirac>) {
          return d.value;
        } else {
          return d.values[static_cast<std::size_t>(rng.uniform_index(d.values.size()))];
        }
      },
      dist);
}

bool in_support(const ParamDist& dist, double z) {
  return std::visit(
      [&](const auto& d) -> bool {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Uniform>) {
          return z >= d.lo && z <= d.hi;
        } else if constexpr (std::is_same_v<T, Dirac>) {
          return z == d.value;
        } else {
          return std::find(d.values.begin(), d.values.end(), z) != d.values.end();
        }
      },
      dist);
}

std::string InterventionSpec::label() const {
  return name.empty() ? std::string(to_string(kind)) : name;
}

void InterventionSpec::validate() const {
  const std::string who = "intervention '" + label() + "': ";
  if (const auto* u = std::get_if<Uniform>(&dist)) {
    if (!(u->lo < u->hi)) throw Error(who + "uniform distribution needs lo < hi");
  }
  if (const auto* c = std::get_if<Choice>(&dist)) {
    if (c->values.empty()) throw Error(who + "choice distribution is empty");
  }
  for_each_support_value(dist, [&](double v) {
    if (!std::isfinite(v)) throw Error(who + "non-finite parameter");
    switch (kind) {
      case InterventionKind::codec:
        if (std::holds_alternative<Uniform>(dist))
          throw Error(who + "codec bitrates must be a choice or a fixed value");
        if (std::find(kCodecBitrates.begin(), kCodecBitrates.end(), static_cast<int>(v)) ==
                kCodecBitrates.end() ||
            v != std::floor(v))
          throw Error(who + "unsupported bitrate " + std::to_string(v));
        break;
      case InterventionKind::loudness_norm:
        if (v > 0.0 || v < -70.0) throw Error(who + "loudness target outside [-70, 0] LUFS");
        break;
      case InterventionKind::nonspeech_zero:
        if (v < 0.0 || v > 1.0) throw Error(who + "proportion outside [0, 1]");
        break;
      case InterventionKind::mu_law:
        if (v < 1.0 || v != std::floor(v)) throw Error(who + "mu must be a positive integer");
        break;
      case InterventionKind::white_noise:
        break;
    }
  });
  if (!(vad_margin_db > 0.0)) throw Error(who + "VAD margin must be positive");
}

InterventionSpec InterventionSpec::codec() {
  Choice c;
  for (int b : kCodecBitrates) c.values.push_back(b);
  return {InterventionKind::codec, c, "codec", 40.0, std::nullopt};
}
InterventionSpec InterventionSpec::white_noise() {
  return {InterventionKind::white_noise, Uniform{0.0, 30.0}, "white_noise", 40.0, std::nullopt};
}
InterventionSpec InterventionSpec::loudness_norm() {
  return {InterventionKind::loudness_norm, Uniform{-31.0, -13.0}, "loudness_norm", 40.0,
          std::nullopt};
}
InterventionSpec InterventionSpec::nonspeech_zero() {
  return {InterventionKind::nonspeech_zero, Dirac{1.0}, "nonspeech_zero", 40.0, std::nullopt};
}
InterventionSpec InterventionSpec::mu_law() {
  return {InterventionKind::mu_law, Dirac{255.0}, "mu_law", 40.0, std::nullopt};
}

double sample_control(const InterventionSpec& spec, const SeedContext& ctx) {
  Rng rng(derive_seed(ctx));
  return sample(spec.dist, rng);
}

InterventionResult apply(const Waveform& w, const InterventionSpec& spec, const SeedContext& ctx) {
  spec.validate();
  Rng rng(derive_seed(ctx));
  const double z = sample(spec.dist, rng);
  InterventionResult r{Waveform{}, AppliedIntervention{w.id, spec.kind, z}};
  switch (spec.kind) {
    case InterventionKind::codec:
      r.waveform = spec.external_codec_command
                       ? codec_degrade_external(w, static_cast<int>(z), *spec.external_codec_command)
                       : codec_degrade(w, static_cast<int>(z));
      break;
    case InterventionKind::white_noise:
      r.waveform = add_white_noise(w, z, rng);
      break;
    case InterventionKind::loudness_norm:
      r.waveform = loudness_normalize(w, z);
      break;
    case InterventionKind::nonspeech_zero:
      r.waveform = zero_nonspeech(w, z, rng, spec.vad_margin_db);
      break;
    case InterventionKind::mu_law:
      r.waveform = mu_law(w, static_cast<int>(z));
      break;
  }
  return r;
}

}  // namespace cmaudit
