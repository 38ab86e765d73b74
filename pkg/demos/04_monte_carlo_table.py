"""Bias / mean-square-error comparison of both estimators by simulation.

Every cell simulates signals from the true model, optionally stamps a
fixed outlier value into a fraction of positions, fits the plain and
robust estimators on identical signals, and reports percentage relative
bias and MSE per coefficient.  Counts are kept small here so the demo
runs in seconds; scale replications up for table-quality numbers.
"""

from rayreg.simulation import ScenarioConfig, format_table, run_table

grid = [
    ScenarioConfig(
        beta_true=(0.5, 0.15),
        n_obs=n,
        epsilon=eps,
        outlier_value=10.0,
        replications=200,
        delta=0.001,
        master_seed=1234,
    )
    for n in (100, 500)
    for eps in (0.0, 0.05)
]

reports = run_table(grid)
print(format_table(reports))

print("Reading the table: with no contamination the two columns agree;")
print("at 5% contamination the plain estimator's intercept bias explodes")
print("while the robust column barely moves.")

worst = max(reports, key=lambda r: r.config.epsilon)
print(f"\nworst cell (N={worst.config.n_obs}, eps={worst.config.epsilon:.0%}):")
print(f"  plain  total |RB%| = {worst.mle.absolute_total_rb:8.2f}")
print(f"  robust total |RB%| = {worst.wmle.absolute_total_rb:8.2f}")
print(f"  convergence failures: {worst.mle.convergence_failures} / "
      f"{worst.wmle.convergence_failures}")
