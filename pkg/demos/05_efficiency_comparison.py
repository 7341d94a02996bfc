"""Reproduce the efficiency comparison at demo scale: all four families
on one seed, reporting parameters, test MSE and layer timing ratios.

Run:  python demos/05_efficiency_comparison.py
(The full 4 families x 5 seeds sweep lives in tests/test_acceptance.py
and in the `kanae bench` command.)
"""

from kanae import TaskConfig, run_reconstruction, timing_benchmark
from kanae.data import make_synthetic_split
from kanae.tasks import efficiency_table

split = make_synthetic_split(n_train=100, n_test=300, seed=0)

reports = []
for family in ("AE", "KAE", "CAE", "KCAE"):
    cfg = TaskConfig(task="reconstruction", family=family, seed=0,
                     epochs=40, batch_size=16, precision="float32")
    reports.append(run_reconstruction(family, split, cfg))
    r = reports[-1]
    print(f"{family:5s} params {r.param_count:>9,}  test MSE {r.test_mse:.4f}  "
          f"{r.seconds_per_epoch:.2f} s/epoch")

print("\nefficiency table (params descending):")
for row in efficiency_table(reports):
    print(f"  {row['family']:5s} {row['params']:>9,}  {row['test_mse']:.4f}")

print("\nforward-pass cost of learnable edges (median over 100 calls):")
table = timing_benchmark(width=256, batch=64, warmup=10, iters=100)
print(f"  spline-edge linear / plain linear: {table['ratio_kan_linear']:.1f}x")
print(f"  spline-edge conv   / plain conv:   {table['ratio_kan_conv']:.1f}x")
