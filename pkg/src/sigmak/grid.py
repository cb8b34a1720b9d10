"""Periodic uniform grids on the n-torus [0, 2pi)^n and fields on them.

The box is fixed to [0, 2pi) per axis with N identical points per axis
(h = 2pi/N) so that trigonometric manufactured solutions are exactly
periodic. Derivatives are plain partial derivatives (flat background
metric, identity g0): second-order central differences with periodic
wrap-around via np.roll. The Laplacian is computed by summing the same
per-axis second differences the Hessian diagonal uses, in the same axis
order, so laplacian(u) equals the Hessian trace bitwise.

Symmetric tensor fields store the upper triangle per node in the fixed
component order (1,1),(1,2),...,(1,n),(2,2),...,(n,n).

Fields can be serialized to a bit-exact text format: a header line
`field n=<n> N=<N> name=<name>` followed by N^n values, one per line,
row-major, 17 significant digits.

The spectral_grad/spectral_hess helpers differentiate via FFT instead of
stencils; they are exact for band-limited fields and exist so convergence
studies can build continuum right-hand sides that are not polluted by the
O(h^2) stencil error being measured.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass

import numpy as np

from . import fieldexpr
from .errors import DomainError, ExprEvalError

__all__ = [
    "Grid", "ScalarField", "SymmetricTensorField",
    "grad", "hess", "laplacian", "sample",
    "dump_field", "load_field",
    "spectral_grad", "spectral_hess",
    "random_smooth_field",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid: n axes (3 <= n <= 6), N points per axis."""

    n: int
    N: int

    def __post_init__(self):
        if not 3 <= self.n <= 6:
            raise DomainError(f"dimension n must lie in [3, 6], got {self.n}")
        if self.N < 8:
            raise DomainError(f"points per axis N must be >= 8, got {self.N}")

    @property
    def h(self) -> float:
        return 2.0 * np.pi / self.N

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.n

    @property
    def size(self) -> int:
        return self.N ** self.n

    @property
    def ncomp(self) -> int:
        """Number of stored components of a symmetric tensor."""
        return self.n * (self.n + 1) // 2

    def axis_coords(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.N) / self.N

    def coords(self) -> list:
        """Broadcast-ready coordinate arrays, one per axis."""
        x = self.axis_coords()
        out = []
        for a in range(self.n):
            shape = [1] * self.n
            shape[a] = self.N
            out.append(x.reshape(shape))
        return out


def _pairs(n: int) -> list:
    return [(i, j) for i in range(n) for j in range(i, n)]


@dataclass
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise DomainError(
                f"field shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("scalar field entries must be finite")
        self.values = vals

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def max_abs(self) -> float:
        return float(np.abs(self.values).max())


@dataclass
class SymmetricTensorField:
    """Per-node symmetric n x n matrices, upper triangle packed."""

    grid: Grid
    comps: np.ndarray  # shape grid.shape + (n(n+1)/2,)

    def __post_init__(self):
        comps = np.ascontiguousarray(self.comps, dtype=float)
        want = self.grid.shape + (self.grid.ncomp,)
        if comps.shape != want:
            raise DomainError(
                f"tensor component shape {comps.shape}, expected {want}")
        self.comps = comps

    @classmethod
    def zeros(cls, grid: Grid) -> "SymmetricTensorField":
        return cls(grid, np.zeros(grid.shape + (grid.ncomp,)))

    @classmethod
    def isotropic(cls, grid: Grid, scale: float) -> "SymmetricTensorField":
        """scale * identity at every node."""
        out = cls.zeros(grid)
        for i in range(grid.n):
            out.comps[..., comp_index(grid.n, i, i)] = scale
        return out

    def component(self, i: int, j: int) -> np.ndarray:
        """View of the (i, j) component array (0-based, order-insensitive)."""
        return self.comps[..., comp_index(self.grid.n, i, j)]

    def as_matrices(self) -> np.ndarray:
        """Unpack to full matrices, shape grid.shape + (n, n)."""
        n = self.grid.n
        mats = np.empty(self.grid.shape + (n, n))
        for c, (i, j) in enumerate(_pairs(n)):
            mats[..., i, j] = self.comps[..., c]
            mats[..., j, i] = self.comps[..., c]
        return mats

    @classmethod
    def from_matrices(cls, grid: Grid, mats: np.ndarray) -> "SymmetricTensorField":
        comps = np.empty(grid.shape + (grid.ncomp,))
        for c, (i, j) in enumerate(_pairs(grid.n)):
            comps[..., c] = mats[..., i, j]
        return cls(grid, comps)

    def copy(self) -> "SymmetricTensorField":
        return SymmetricTensorField(self.grid, self.comps.copy())

    def trace(self) -> np.ndarray:
        n = self.grid.n
        out = self.comps[..., comp_index(n, 0, 0)].copy()
        for i in range(1, n):
            out += self.comps[..., comp_index(n, i, i)]
        return out


def comp_index(n: int, i: int, j: int) -> int:
    """Packed index of component (i, j), 0-based, i and j interchangeable."""
    if not (0 <= i < n and 0 <= j < n):
        raise DomainError(f"component ({i},{j}) out of range for n={n}")
    if i > j:
        i, j = j, i
    # row i starts after rows 0..i-1 of lengths n, n-1, ...
    return i * n - i * (i - 1) // 2 + (j - i)


def _d1(vals: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(vals, -1, axis) - np.roll(vals, 1, axis)) / (2.0 * h)


def _d2(vals: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(vals, -1, axis) - 2.0 * vals + np.roll(vals, 1, axis)) / (h * h)


def _dcross(vals: np.ndarray, a: int, b: int, h: float) -> np.ndarray:
    pp = np.roll(np.roll(vals, -1, a), -1, b)
    pm = np.roll(np.roll(vals, -1, a), 1, b)
    mp = np.roll(np.roll(vals, 1, a), -1, b)
    mm = np.roll(np.roll(vals, 1, a), 1, b)
    return (pp - pm - mp + mm) / (4.0 * h * h)


def grad(u: ScalarField) -> tuple:
    """Central-difference gradient, one ScalarField per axis."""
    h = u.grid.h
    return tuple(ScalarField(u.grid, _d1(u.values, a, h)) for a in range(u.grid.n))


def grad_values(u: ScalarField) -> np.ndarray:
    """Gradient stacked on a trailing axis, shape grid.shape + (n,)."""
    h = u.grid.h
    return np.stack([_d1(u.values, a, h) for a in range(u.grid.n)], axis=-1)


def hess(u: ScalarField) -> SymmetricTensorField:
    """Central-difference Hessian: per-axis second differences on the
    diagonal, 4-point cross stencil off the diagonal."""
    g = u.grid
    h = g.h
    comps = np.empty(g.shape + (g.ncomp,))
    for c, (i, j) in enumerate(_pairs(g.n)):
        if i == j:
            comps[..., c] = _d2(u.values, i, h)
        else:
            comps[..., c] = _dcross(u.values, i, j, h)
    return SymmetricTensorField(g, comps)


def laplacian(u: ScalarField) -> ScalarField:
    """Sum of per-axis second differences, in axis order (bitwise equal to
    the trace of hess)."""
    g = u.grid
    out = _d2(u.values, 0, g.h)
    for a in range(1, g.n):
        out += _d2(u.values, a, g.h)
    return ScalarField(g, out)


def sample(ast, grid: Grid) -> ScalarField:
    """Evaluate an expression AST at every grid node x_i = 2 pi index / N."""
    vmax = fieldexpr.free_var_max(ast)
    if vmax > grid.n:
        raise DomainError(
            f"expression uses x{vmax} but the grid has n={grid.n}")
    values = fieldexpr.eval_array(ast, grid.coords(), shape=grid.shape)
    values = np.ascontiguousarray(np.broadcast_to(values, grid.shape))
    return ScalarField(grid, values)


def sample_text(src: str, grid: Grid) -> ScalarField:
    return sample(fieldexpr.parse(src, grid.n), grid)


def dump_field(field: ScalarField, name: str, target) -> None:
    """Write the bit-exact text dump (header plus one value per line)."""
    if any(ch.isspace() for ch in name) or not name:
        raise DomainError(f"field name must be nonempty without spaces, got {name!r}")
    own = isinstance(target, (str, bytes, os.PathLike))
    fp = open(target, "w") if own else target
    try:
        g = field.grid
        fp.write(f"field n={g.n} N={g.N} name={name}\n")
        for v in field.values.ravel():
            fp.write(f"{v:.17g}\n")
    finally:
        if own:
            fp.close()


def load_field(source) -> tuple:
    """Read a dump produced by dump_field; returns (name, ScalarField)."""
    own = isinstance(source, (str, bytes, os.PathLike))
    fp = open(source) if own else source
    try:
        header = fp.readline().strip()
        parts = header.split()
        if len(parts) != 4 or parts[0] != "field":
            raise DomainError(f"malformed field header: {header!r}")
        kv = dict(p.split("=", 1) for p in parts[1:])
        grid = Grid(n=int(kv["n"]), N=int(kv["N"]))
        name = kv["name"]
        values = np.array([float(line) for line in fp if line.strip()])
        if values.size != grid.size:
            raise DomainError(
                f"field dump has {values.size} values, expected {grid.size}")
        return name, ScalarField(grid, values.reshape(grid.shape))
    finally:
        if own:
            fp.close()


def dumps_field(field: ScalarField, name: str) -> str:
    buf = io.StringIO()
    dump_field(field, name, buf)
    return buf.getvalue()


def _wavenumbers(N: int) -> np.ndarray:
    return np.fft.fftfreq(N, d=1.0 / N)


def spectral_grad(u: ScalarField) -> np.ndarray:
    """FFT gradient, shape grid.shape + (n,). Exact for band-limited fields;
    the Nyquist mode of odd derivatives is zeroed as is standard."""
    g = u.grid
    uhat = np.fft.fftn(u.values)
    out = np.empty(g.shape + (g.n,))
    for a in range(g.n):
        k = _wavenumbers(g.N)
        if g.N % 2 == 0:
            k = k.copy()
            k[g.N // 2] = 0.0
        shape = [1] * g.n
        shape[a] = g.N
        out[..., a] = np.fft.ifftn(1j * k.reshape(shape) * uhat).real
    return out


def spectral_hess(u: ScalarField) -> SymmetricTensorField:
    """FFT Hessian (exact for band-limited fields)."""
    g = u.grid
    uhat = np.fft.fftn(u.values)
    comps = np.empty(g.shape + (g.ncomp,))
    kfull = _wavenumbers(g.N)
    kodd = kfull.copy()
    if g.N % 2 == 0:
        kodd[g.N // 2] = 0.0
    for c, (i, j) in enumerate(_pairs(g.n)):
        si = [1] * g.n
        si[i] = g.N
        sj = [1] * g.n
        sj[j] = g.N
        if i == j:
            sym = -(kfull.reshape(si) ** 2)
        else:
            sym = -(kodd.reshape(si) * kodd.reshape(sj))
        comps[..., c] = np.fft.ifftn(sym * uhat).real
    return SymmetricTensorField(g, comps)


def random_smooth_field(grid: Grid, rng: np.random.Generator,
                        amplitude: float, modes: int = 3,
                        max_wavenumber: int = 2) -> ScalarField:
    """A small random band-limited field: a few cosine waves with integer
    wavevectors, rescaled to the requested sup-norm. Used for perturbed
    solver starts, where smoothness keeps the start admissible."""
    vals = np.zeros(grid.shape)
    coords = grid.coords()
    for _ in range(modes):
        while True:
            wave = rng.integers(-max_wavenumber, max_wavenumber + 1, size=grid.n)
            if np.any(wave != 0):
                break
        phase = rng.uniform(0.0, 2.0 * np.pi)
        coeff = rng.normal()
        arg = np.zeros(grid.shape)
        for a in range(grid.n):
            arg = arg + wave[a] * coords[a]
        vals += coeff * np.cos(arg + phase)
    peak = np.abs(vals).max()
    if peak > 0:
        vals *= amplitude / peak
    return ScalarField(grid, vals)
