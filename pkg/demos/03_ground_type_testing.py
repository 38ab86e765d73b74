"""Distinguishing ground types with dummy-coded Wald tests.

Three labeled regions are stacked into one response vector; each
non-reference region gets a 0/1 indicator column.  A region is "detected"
as distinct from the reference when its coefficient rejects zero at the
configured false-alarm probability.  Bright anomalies inside the
reference region wreck the plain fit's baseline, so the plain test
misjudges both contrasts; the robust fit shrugs them off.
"""

import numpy as np

from rayreg import (
    ModelSpec,
    RobustConfig,
    distribution,
    dummy_design,
    fit_both,
    ground_type_detect,
)

rng = np.random.default_rng(3)

# Region A is the reference; B differs by a modest factor, C by a large one.
per_region = 600
means = {"A": 0.19, "B": 0.22, "C": 0.12}
labels, amplitudes = [], []
for name, mu in means.items():
    labels += [name] * per_region
    amplitudes.append(distribution.quantile(rng.random(per_region), mu))
y = np.concatenate(amplitudes)

# A few bright anomalies inside region A (think: hard scatterers).
y[rng.choice(per_region, size=30, replace=False)] = 4.0

design = dummy_design(labels, reference="A")
print("design columns:", design.column_names)

spec = ModelSpec(design=design, link="log", response=y)
mle, wmle = fit_both(spec, RobustConfig(delta=0.001))

truth = {"is_B": np.log(0.22 / 0.19), "is_C": np.log(0.12 / 0.19)}
print(f"\n{'':10s}{'truth':>9s}{'plain':>9s}{'robust':>9s}")
for i, name in enumerate(design.column_names[1:], start=1):
    print(f"{name:10s}{truth[name]:>9.4f}{mle.beta_hat[i]:>9.4f}{wmle.beta_hat[i]:>9.4f}")
print(f"robust fit downweighted {wmle.n_downweighted} of {3 * per_region} pixels")

print("\nWald decisions at false-alarm probability 0.05:")
for tag, fit in (("plain ", mle), ("robust", wmle)):
    for report in ground_type_detect(fit, pfa=0.05):
        verdict = "distinct from A" if report.reject_null else "NOT distinguishable"
        print(f"  {tag} {report.names[0]:5s} T_W={report.statistic:9.3f} "
              f"p={report.p_value:.4f} -> {verdict}")
