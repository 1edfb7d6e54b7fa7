#!/usr/bin/env python3
"""Numeric verification of the convergence analysis's matrix inequalities.

The hypocoercivity argument rests on two 2d x 2d matrix lower bounds (one for
the continuous flow, one for the discretized flow), a spectral-norm bound on
a frozen-gradient coupling matrix, and an upper bound on the target's
normalization constant.  Each reduces to finitely checkable numbers; this
script runs the full default grid and prints the table the `ulmc verify`
subcommand emits.
"""

from ulmc.harness import verify_all
from ulmc.verify import check_m_bound, check_mc_bound

print("endpoint expressions at rho/L_G = 0.5 (all must be <= 0):")
for label, reports in (("continuous", check_mc_bound(0.5, 1.0)),
                       ("discretized", check_m_bound(0.5, 1.0))):
    vals = ", ".join(f"{r.value:+.6f}" for r in reports[:3])
    print(f"  {label:<12} {vals}")

print("\nfull verification grid:")
rows = verify_all()
width = max(len(r.name) for r in rows)
for row in rows:
    status = "PASS" if row.passed else "FAIL"
    print(f"  {row.name:<{width}}  {status}  {row.detail}")
failed = sum(not r.passed for r in rows)
print(f"\n{len(rows) - failed}/{len(rows)} checks passed")
