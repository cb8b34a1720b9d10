"""The curvature tensors behind the equation, and their cone audits.

A conformal factor u turns a flat background metric into g = e^{2u} g0
(cases A and B) or g = e^{-2u} g0 (case C). The equation constrains the
eigenvalues of a tensor built from u's derivatives and the background
curvature: V = t U + (1-t) tr(U) I interpolates between a pure trace
equation at t=0 (solved by u = 0 in closed form) and the target equation at
t=1. This script builds the tensors at a few states and audits where they
sit relative to the admissibility cone.
"""

import numpy as np

from sigmak import Background, Grid, ProblemSpec, sample_text
from sigmak.curvature import build_u_tensor, build_v_tensor, build_w_tensor
from sigmak.symfunc import in_gamma

grid = Grid(n=3, N=16)
background = Background.isotropic(grid, ric0_scale=-1.0)
spec = ProblemSpec.build("A", 3, 3, grid, alpha="-0.1", f="0.7",
                         background=background)
report = spec.validate(strict=True)
print("problem:", *report.to_lines()[:6], sep="\n  ")

# At u = 0 and t = 0 the tensor V is a known multiple of the identity.
u0 = sample_text("0", grid)
v0 = build_v_tensor(build_u_tensor(u0, 0.0, spec), 0.0)
mats = v0.as_matrices()
print(f"\nV(u=0, t=0) at the origin:\n{mats[0, 0, 0]}")
print("eigenvalues everywhere equal, cone report:",
      in_gamma(np.linalg.eigvalsh(mats[0, 0, 0]), 3))

# A nonzero u bends the spectrum; t = 1 is the real equation.
u = sample_text("0.05*sin(x1)*cos(x2)", grid)
for t in (0.0, 0.5, 1.0):
    v = build_v_tensor(build_u_tensor(u, t, spec), t)
    eigs = np.linalg.eigvalsh(v.as_matrices())
    margins = np.array([in_gamma(e, 2).margin
                        for e in eigs.reshape(-1, 3)])
    print(f"t={t:3.1f}: eig range [{eigs.min():+.4f}, {eigs.max():+.4f}], "
          f"worst Gamma_2 margin {margins.min():+.4f}")

# Case C works with W and the inverted conformal factor.
specC = ProblemSpec.build("C", 3, 3, grid, alpha="-0.05", f="1",
                          background=Background.isotropic(grid, -1.0))
w = build_w_tensor(u, specC)
eigs = np.linalg.eigvalsh(w.as_matrices())
print(f"\ncase C tensor W: eig range [{eigs.min():+.4f}, {eigs.max():+.4f}]")
