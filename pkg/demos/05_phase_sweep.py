"""A seeded sweep: empirical success curve plus analytic threshold markers.

Two runs of the same experiment config are byte-identical, every trial
seed is a pure function of (master seed, cell, trial), and the phase
helper attaches the analytic crossing points of the recovery condition
to the empirical curve.  At desk scale the graphs are far below the
asymptotic regime, so the markers live at much larger n; we print both
pictures side by side.
"""

from deanon import ExperimentConfig, compare_costs, phase_curve

# empirical curve: exact matching on 8-node instances, swept over s
config = ExperimentConfig(
    sizes=((4, 4),),
    p_values=(0.4,),
    q_values=(0.1,),
    s_values=(0.3, 0.5, 0.7, 0.9),
    trials=40,
    master_seed=2024,
)
curve = phase_curve(config, axis="s")
print("empirical success rate, 40 trials per point (Wilson 95% bounds):")
for pt in curve.points:
    bar = "#" * round(40 * pt.rate)
    print(f"  s={pt.axis_value:.1f}  {pt.rate:5.2f}  [{pt.wilson_low:.2f}, "
          f"{pt.wilson_high:.2f}]  {bar}")
print("analytic markers at this size:", len(curve.markers),
      "(8 nodes is far below the asymptotic regime)")

# the same sweep geometry at n = 5000 per community, markers only
wide = ExperimentConfig(
    sizes=((5000, 5000),),
    p_values=(0.01,),
    q_values=(0.004,),
    s_values=tuple(i / 20 for i in range(1, 20)),
    trials=0,
    master_seed=2024,
)
markers = phase_curve(wide, axis="s").markers
print("\nwhere the recovery condition crosses at n = 5000 per community:")
for mk in markers:
    print(f"  community {mk.community}, cross-term factor {mk.factor}: "
          f"s = {mk.value:.3f}")

# weighted vs unweighted costs on the same paired instances
rows, _ = compare_costs(ExperimentConfig(
    sizes=((4, 4),),
    p_values=(0.4,),
    q_values=(0.1,),
    s_values=(0.7,),
    trials=60,
    master_seed=7,
))
r = rows[0]
print(f"\nweighted vs unit-weight cost on 60 paired trials at s=0.7: "
      f"{r.rate_weighted:.2f} vs {r.rate_unweighted:.2f} "
      f"(mean paired difference {r.mean_diff:+.3f} +/- {r.diff_half_width:.3f})")
print("at 8 nodes the refined weights rarely move the argmin; their effect "
      "is asymptotic, not a small-graph win")
