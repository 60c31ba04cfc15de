#include "auditbench/privacy.hpp"

#include <algorithm>

#include "auditbench/rng.hpp"

namespace auditbench {

void LaplaceParams::validate() const {
  if (!(epsilon > 0.0))
    fail(Errc::NonPositiveEpsilon, "privacy budget must be positive");
}

NoisyGroupedConfusion laplace_release(const GroupedConfusion& grouped,
                                      const LaplaceParams& params) {
  params.validate();
  double scale = params.sensitivity / params.epsilon;
  Rng rng(params.seed);

  NoisyGroupedConfusion out;
  out.params = params;
  // Fixed cell order: underprivileged tp,fp,fn,tn then privileged.
  auto noise = [&](const ConfusionMatrix& m) {
    ConfusionMatrix r;
    r.tp = m.tp + rng.laplace(scale);
    r.fp = m.fp + rng.laplace(scale);
    r.fn = m.fn + rng.laplace(scale);
    r.tn = m.tn + rng.laplace(scale);
    return r;
  };
  out.underprivileged = noise(grouped.underprivileged);
  out.privileged = noise(grouped.privileged);
  return out;
}

NoisyGroupedConfusion postprocess(const NoisyGroupedConfusion& noisy,
                                  PostprocessPolicy policy) {
  if (policy == PostprocessPolicy::None) return noisy;
  NoisyGroupedConfusion out = noisy;
  for (ConfusionMatrix* m : {&out.underprivileged, &out.privileged}) {
    m->tp = std::max(0.0, m->tp);
    m->fp = std::max(0.0, m->fp);
    m->fn = std::max(0.0, m->fn);
    m->tn = std::max(0.0, m->tn);
  }
  return out;
}

std::optional<double> try_metric_from_noisy(const NoisyGroupedConfusion& noisy,
                                            Metric metric) {
  const ConfusionMatrix& u = noisy.underprivileged;
  const ConfusionMatrix& p = noisy.privileged;
  // A denominator under 1 means fewer than one effective record; treat the
  // draw as uncomputable instead of fabricating a rate.
  auto ok = [](double denom) { return denom >= 1.0; };
  switch (metric) {
    case Metric::SPD:
      if (!ok(u.total()) || !ok(p.total())) return std::nullopt;
      break;
    case Metric::EOD:
      if (!ok(u.tp + u.fn) || !ok(p.tp + p.fn)) return std::nullopt;
      break;
    case Metric::AOD:
      if (!ok(u.tp + u.fn) || !ok(p.tp + p.fn) || !ok(u.fp + u.tn) ||
          !ok(p.fp + p.tn))
        return std::nullopt;
      break;
  }
  GroupedConfusion grouped{u, p};
  auto v = try_parity_metric(grouped, metric);
  if (!v) return std::nullopt;
  return std::clamp(*v, -1.0, 1.0);
}

MetricEstimate metric_from_noisy(const NoisyGroupedConfusion& noisy,
                                 Metric metric) {
  auto v = try_metric_from_noisy(noisy, metric);
  if (!v)
    fail(Errc::UndefinedRate,
         std::string(metric_name(metric)) +
             " uncomputable on this noisy release (denominator below 1)");
  return MetricEstimate{metric, *v, std::nullopt};
}

}  // namespace auditbench
