"""Discretisation of the periodic half-strip T x R+.

The normal direction uses Chebyshev-Gauss-Lobatto collocation under an
algebraic map that clusters nodes at the wall; the half-line is truncated at
``y_max = 10 * map_length``.  The horizontal direction is Fourier with
``n_x`` retained wavenumbers stored in FFT order, so ``Field.data[k]`` is the
coefficient of ``exp(i k alpha0 x)`` with ``alpha0 = 2 pi / period``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
import scipy.linalg as sla

from .errors import GridError, IllPosed

__all__ = [
    "Grid", "Field", "VelocityField", "BoundaryCondition", "DiffOperator",
    "build_halfline_grid", "diff_op", "poisson_solve", "discrete_norm",
    "interpolate_y", "regrid", "product", "advection", "sup_over_x",
    "stream_from_vorticity", "mean_velocity", "apply_y",
]

MIN_NY = 16


def chebyshev_lobatto(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Increasing Gauss-Lobatto nodes on [-1, 1] and the derivative matrix."""
    k = np.arange(n)
    s = np.sin(np.pi * (2 * k - (n - 1)) / (2 * (n - 1)))
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** k
    ds = s[:, None] - s[None, :]
    D = np.outer(c, 1.0 / c) / (ds + np.eye(n))
    D -= np.diag(D.sum(axis=1))
    return s, D


def clenshaw_curtis(n: int) -> np.ndarray:
    """Clenshaw-Curtis weights on the n Lobatto nodes of [-1, 1]."""
    N = n - 1
    theta = np.pi * np.arange(n) / N
    w = np.zeros(n)
    v = np.ones(N - 1)
    inner = theta[1:-1]
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N ** 2 - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * inner) / (4 * k ** 2 - 1)
        v -= np.cos(N * inner) / (N ** 2 - 1)
    else:
        w[0] = w[N] = 1.0 / N ** 2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * inner) / (4 * k ** 2 - 1)
    w[1:-1] = 2.0 * v / N
    return w[::-1].copy()


@dataclass(frozen=True, eq=False)
class Grid:
    n_y: int
    map_length: float
    y_nodes: np.ndarray
    n_x: int
    domain_period: float
    cluster: float

    @property
    def y_max(self) -> float:
        return 10.0 * self.map_length

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_x, self.n_y)

    @property
    def alpha0(self) -> float:
        return 2.0 * np.pi / self.domain_period

    @cached_property
    def _cache(self) -> dict:
        return {}

    @cached_property
    def _cheb(self):
        return chebyshev_lobatto(self.n_y)

    @property
    def s_nodes(self) -> np.ndarray:
        return self._cheb[0]

    @cached_property
    def _map_b(self) -> float:
        return 2.0 * self.cluster / self.y_max

    @cached_property
    def dy_ds(self) -> np.ndarray:
        a, b = self.cluster, self._map_b
        return a * (2.0 + b) / (1.0 - self.s_nodes + b) ** 2

    def to_s(self, y):
        a, b = self.cluster, self._map_b
        y = np.asarray(y, dtype=float)
        return (y * (1.0 + b) - a) / (y + a)

    @cached_property
    def D1(self) -> np.ndarray:
        return self._cheb[1] / self.dy_ds[:, None]

    @cached_property
    def D2(self) -> np.ndarray:
        return self.D1 @ self.D1

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weights for integrals over [0, y_max]."""
        return clenshaw_curtis(self.n_y) * self.dy_ds

    @cached_property
    def integration_matrix(self) -> np.ndarray:
        """Matrix of the map f -> int_0^y f (spectral antiderivative)."""
        A = self.D1.copy()
        A[0, :] = 0.0
        A[0, 0] = 1.0
        rhs = np.eye(self.n_y)
        rhs[0, :] = 0.0
        return np.linalg.solve(A, rhs)

    def filter_matrix(self, order: int = 36, strength: float = 36.0) -> np.ndarray:
        """Exponential Chebyshev filter exp(-strength (m/(n-1))^order) in s."""
        key = ("filter", order, strength)
        if key not in self._cache:
            n = self.n_y
            theta = np.arccos(np.clip(self.s_nodes, -1.0, 1.0))
            V = np.cos(np.outer(theta, np.arange(n)))
            sig = np.exp(-strength * (np.arange(n) / (n - 1)) ** order)
            self._cache[key] = np.linalg.solve(V.T, (V * sig).T).T
        return self._cache[key]

    @cached_property
    def k_int(self) -> np.ndarray:
        return np.rint(np.fft.fftfreq(self.n_x, 1.0 / self.n_x)).astype(int)

    @property
    def wavenumbers(self) -> np.ndarray:
        return self.alpha0 * self.k_int

    @cached_property
    def retained(self) -> np.ndarray:
        """Mask of wavenumbers kept after 2/3 dealiasing."""
        return np.abs(self.k_int) < self.n_x / 3.0 if self.n_x > 2 else np.ones(self.n_x, bool)

    @property
    def x_nodes(self) -> np.ndarray:
        return self.domain_period * np.arange(self.n_x) / self.n_x

    def mode_index(self, k: int) -> int:
        hits = np.flatnonzero(self.k_int == k)
        if hits.size == 0:
            raise GridError(f"wavenumber index {k} not representable with n_x={self.n_x}")
        return int(hits[0])

    def with_x(self, n_x: int | None = None, period: float | None = None) -> "Grid":
        return Grid(self.n_y, self.map_length, self.y_nodes, n_x or self.n_x,
                    period or self.domain_period, self.cluster)

    def refined(self, factor: int = 2) -> "Grid":
        return build_halfline_grid(factor * self.n_y, self.map_length, self.n_x,
                                   self.domain_period, cluster=self.cluster)

    def same_y(self, other: "Grid") -> bool:
        return other is self or (other.n_y == self.n_y
                                 and np.array_equal(other.y_nodes, self.y_nodes))

    def compatible(self, other: "Grid") -> bool:
        return self.same_y(other) and other.n_x == self.n_x and np.isclose(
            other.domain_period, self.domain_period, rtol=1e-14)

    def nodes_below(self, y: float) -> int:
        return int(np.count_nonzero(self.y_nodes[1:] < y))

    def __repr__(self) -> str:
        return (f"Grid(n_y={self.n_y}, y_max={self.y_max:g}, cluster={self.cluster:g}, "
                f"n_x={self.n_x}, period={self.domain_period:.6g})")


def build_halfline_grid(n_y: int, map_length: float, n_x: int, period: float,
                        cluster: float | None = None) -> Grid:
    """Mapped Chebyshev grid on [0, 10*map_length] times a periodic x-direction.

    ``cluster`` is the algebraic-map scale: half of the nodes lie below
    roughly ``cluster``.  Defaults to ``map_length / 4``.
    """
    if int(n_y) != n_y or n_y < MIN_NY:
        raise GridError(f"n_y={n_y} below the minimum of {MIN_NY}")
    if int(n_x) != n_x or n_x < 1:
        raise GridError(f"n_x={n_x} must be a positive integer")
    if not map_length > 0 or not period > 0:
        raise GridError("map_length and period must be positive")
    if cluster is None:
        cluster = map_length / 4.0
    if not cluster > 0:
        raise GridError("cluster must be positive")
    s, _ = chebyshev_lobatto(int(n_y))
    y_max = 10.0 * map_length
    b = 2.0 * cluster / y_max
    y = cluster * (1.0 + s) / (1.0 - s + b)
    y[0] = 0.0
    y[-1] = y_max
    return Grid(int(n_y), float(map_length), y, int(n_x), float(period), float(cluster))


# ---------------------------------------------------------------------------
# fields


class Field:
    """One scalar unknown in horizontal-Fourier representation."""

    __slots__ = ("grid", "data")

    def __init__(self, grid: Grid, data):
        data = np.asarray(data, dtype=complex)
        if data.shape != grid.shape:
            raise GridError(f"data shape {data.shape} does not match grid {grid.shape}")
        self.grid = grid
        self.data = data

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape, complex))

    @classmethod
    def from_profile(cls, grid: Grid, k: int, profile, real: bool = True) -> "Field":
        """Field ``profile(y) exp(i k alpha0 x)``; with ``real`` its real part."""
        data = np.zeros(grid.shape, complex)
        profile = np.asarray(profile, dtype=complex)
        if k == 0:
            data[0] = profile.real if real else profile
        elif real:
            data[grid.mode_index(k)] = 0.5 * profile
            data[grid.mode_index(-k)] = 0.5 * np.conj(profile)
        else:
            data[grid.mode_index(k)] = profile
        return cls(grid, data)

    @classmethod
    def from_physical(cls, grid: Grid, values) -> "Field":
        values = np.asarray(values)
        if values.shape != grid.shape:
            raise GridError("physical values must have shape (n_x, n_y)")
        return cls(grid, np.fft.fft(values, axis=0) / grid.n_x)

    def copy(self) -> "Field":
        return Field(self.grid, self.data.copy())

    def physical(self, n_points: int | None = None) -> np.ndarray:
        """Values on ``n_points`` equispaced x-nodes (default ``n_x``)."""
        return _to_physical(self.data, n_points or self.grid.n_x)

    def mode(self, k: int) -> np.ndarray:
        return self.data[self.grid.mode_index(k)]

    def dx(self) -> "Field":
        return Field(self.grid, 1j * self.grid.wavenumbers[:, None] * self.data)

    def dy(self) -> "Field":
        return Field(self.grid, apply_y(self.grid.D1, self.data))

    def dyy(self) -> "Field":
        return Field(self.grid, apply_y(self.grid.D2, self.data))

    def laplacian(self) -> "Field":
        return Field(self.grid, apply_y(self.grid.D2, self.data)
                     - self.grid.wavenumbers[:, None] ** 2 * self.data)

    def conjugate_symmetry_error(self) -> float:
        """Max |f_k - conj(f_-k)|; zero for real physical fields."""
        k = self.grid.k_int
        err = 0.0
        for i, ki in enumerate(k):
            if -ki in k:
                j = self.grid.mode_index(-ki)
                err = max(err, float(np.max(np.abs(self.data[i] - np.conj(self.data[j])))))
        return err

    def is_real(self, tol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.data))))
        return self.conjugate_symmetry_error() <= tol * scale

    def _check(self, other):
        if isinstance(other, Field):
            if not self.grid.compatible(other.grid):
                raise GridError("fields live on incompatible grids")
            return other.data
        return other

    def __add__(self, other):
        return Field(self.grid, self.data + self._check(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.grid, self.data - self._check(other))

    def __rsub__(self, other):
        return Field(self.grid, self._check(other) - self.data)

    def __mul__(self, other):
        if isinstance(other, Field):
            return product(self, other)
        return Field(self.grid, self.data * other)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Field(self.grid, self.data / scalar)

    def __neg__(self):
        return Field(self.grid, -self.data)

    def __repr__(self) -> str:
        return f"Field({self.grid!r}, max|f_k|={np.max(np.abs(self.data)):.3e})"


class VelocityField:
    """Two-component velocity (u, v) on a common grid."""

    __slots__ = ("u", "v")

    def __init__(self, u: Field, v: Field):
        if not u.grid.compatible(v.grid):
            raise GridError("velocity components on incompatible grids")
        self.u = u
        self.v = v

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @classmethod
    def zeros(cls, grid: Grid) -> "VelocityField":
        return cls(Field.zeros(grid), Field.zeros(grid))

    @classmethod
    def from_stream(cls, psi: Field) -> "VelocityField":
        """u = d_y psi, v = -d_x psi."""
        return cls(psi.dy(), -psi.dx())

    def divergence(self) -> Field:
        return self.u.dx() + self.v.dy()

    def curl(self) -> Field:
        """Scalar vorticity d_x v - d_y u."""
        return self.v.dx() - self.u.dy()

    def laplacian(self) -> "VelocityField":
        return VelocityField(self.u.laplacian(), self.v.laplacian())

    def physical_magnitude(self, n_points: int | None = None) -> np.ndarray:
        pu = self.u.physical(n_points)
        pv = self.v.physical(n_points)
        return np.sqrt(np.abs(pu) ** 2 + np.abs(pv) ** 2)

    def wall_values(self) -> tuple[np.ndarray, np.ndarray]:
        return self.u.data[:, 0].copy(), self.v.data[:, 0].copy()

    def copy(self) -> "VelocityField":
        return VelocityField(self.u.copy(), self.v.copy())

    def __add__(self, other):
        return VelocityField(self.u + other.u, self.v + other.v)

    def __sub__(self, other):
        return VelocityField(self.u - other.u, self.v - other.v)

    def __mul__(self, scalar):
        return VelocityField(self.u * scalar, self.v * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return VelocityField(-self.u, -self.v)


# ---------------------------------------------------------------------------
# transforms and products


def apply_y(op: np.ndarray, data: np.ndarray) -> np.ndarray:
    """Apply a real y-operator (one matrix, or one per x-mode) to complex data.

    Real and imaginary parts go through a single real matmul, which avoids
    promoting the operator to complex.
    """
    data = np.ascontiguousarray(data, dtype=complex)
    shape = data.shape
    x = data.reshape(-1, shape[-1]).view(np.float64).reshape(-1, shape[-1], 2)
    out = np.matmul(op, x)
    return np.ascontiguousarray(out).reshape(-1, 2 * shape[-1]).view(complex).reshape(shape)


def _to_physical(data: np.ndarray, n_points: int) -> np.ndarray:
    n_x = data.shape[0]
    if n_points < n_x:
        raise GridError("cannot evaluate on fewer x-points than retained modes")
    if n_points == n_x:
        return np.fft.ifft(data, axis=0) * n_x
    return np.fft.ifft(_pad(data, n_points), axis=0) * n_points


def _pad(data: np.ndarray, m: int) -> np.ndarray:
    n = data.shape[0]
    out = np.zeros((m,) + data.shape[1:], complex)
    half = (n + 1) // 2
    out[:half] = data[:half]
    neg = n - half
    if neg:
        out[m - neg:] = data[half:]
    if n % 2 == 0 and n > 1:
        # the Nyquist coefficient has no partner: drop it
        out[m - neg] = 0.0
    return out


def _truncate(data: np.ndarray, n: int) -> np.ndarray:
    m = data.shape[0]
    out = np.zeros((n,) + data.shape[1:], complex)
    half = (n + 1) // 2
    out[:half] = data[:half]
    neg = n - half
    if neg:
        out[half:] = data[m - neg:]
    if n % 2 == 0 and n > 1:
        out[half] = 0.0
    return out


def _padded_size(n: int) -> int:
    m = (3 * n + 1) // 2
    return m + (m % 2)


def product(a: Field, b: Field) -> Field:
    """Dealiased pointwise product (3/2 zero padding in x)."""
    if not a.grid.compatible(b.grid):
        raise GridError("fields live on incompatible grids")
    n = a.grid.n_x
    if n == 1:
        return Field(a.grid, a.data * b.data)
    m = _padded_size(n)
    pa = np.fft.ifft(_pad(a.data, m), axis=0) * m
    pb = np.fft.ifft(_pad(b.data, m), axis=0) * m
    prod = np.fft.fft(pa * pb, axis=0) / m
    return Field(a.grid, _truncate(prod, n))


def advection(a: VelocityField, b: VelocityField) -> VelocityField:
    """(a . grad) b, dealiased."""
    return VelocityField(product(a.u, b.u.dx()) + product(a.v, b.u.dy()),
                         product(a.u, b.v.dx()) + product(a.v, b.v.dy()))


def advect_scalar(a: VelocityField, f: Field) -> Field:
    return product(a.u, f.dx()) + product(a.v, f.dy())


def sup_over_x(f: Union[Field, VelocityField], oversample: int = 4) -> np.ndarray:
    """max over x of |f(x, y)| for every y-node."""
    n = max(oversample * f.grid.n_x, 32)
    if isinstance(f, VelocityField):
        vals = f.physical_magnitude(n)
    else:
        vals = np.abs(f.physical(n))
    return vals.max(axis=0)


# ---------------------------------------------------------------------------
# differentiation, interpolation


class DiffOperator:
    """y-differentiation of order 1 or 2 on a mapped grid."""

    def __init__(self, grid: Grid, order: int):
        self.grid = grid
        self.order = order
        self.matrix = grid.D1 if order == 1 else grid.D2

    def __call__(self, f):
        if isinstance(f, Field):
            if not f.grid.same_y(self.grid):
                raise GridError("field and operator use different y-grids")
            return Field(f.grid, f.data @ self.matrix.T)
        return np.asarray(f) @ self.matrix.T

    def __matmul__(self, other):
        return self.matrix @ other


def diff_op(grid: Grid, order: int) -> DiffOperator:
    if order not in (1, 2):
        raise ValueError(f"unsupported differentiation order {order}")
    return DiffOperator(grid, order)


def _bary_weights(n: int) -> np.ndarray:
    w = (-1.0) ** np.arange(n)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def interpolate_y(grid: Grid, values, y_new) -> np.ndarray:
    """Barycentric Chebyshev interpolation along the last axis."""
    values = np.asarray(values)
    y_new = np.atleast_1d(np.asarray(y_new, dtype=float))
    if np.any(y_new < -1e-12) or np.any(y_new > grid.y_max * (1 + 1e-12)):
        raise GridError("interpolation point outside [0, y_max]")
    s_new = grid.to_s(np.clip(y_new, 0.0, grid.y_max))
    s = grid.s_nodes
    w = _bary_weights(grid.n_y)
    diff = s_new[:, None] - s[None, :]
    exact = np.isclose(diff, 0.0, atol=1e-15, rtol=0)
    diff[exact] = 1.0
    C = w[None, :] / diff
    C /= C.sum(axis=1, keepdims=True)
    rows, cols = np.nonzero(exact)
    C[rows] = 0.0
    C[rows, cols] = 1.0
    return values @ C.T


def regrid(f: Field, target: Grid) -> Field:
    """Transfer a field to another y-grid (and x-resolution with equal period)."""
    if not np.isclose(f.grid.domain_period, target.domain_period, rtol=1e-14):
        raise GridError("regrid requires equal x-periods")
    data = f.data
    if target.n_x != f.grid.n_x:
        data = _truncate(data, target.n_x) if target.n_x < f.grid.n_x else _pad(data, target.n_x)
    if not f.grid.same_y(target):
        data = interpolate_y(f.grid, data, target.y_nodes)
    return Field(target, data)


# ---------------------------------------------------------------------------
# Helmholtz / Poisson


@dataclass(frozen=True)
class BoundaryCondition:
    """Dirichlet data for the stream function.

    ``kind="dirichlet"`` imposes ``wall`` and ``top`` on the truncated domain;
    ``kind="decay"`` imposes ``wall`` and decay at infinity (zero at y_max),
    which requires a positive wavenumber.
    """
    kind: str = "dirichlet"
    wall: complex = 0.0
    top: complex = 0.0

    def __post_init__(self):
        if self.kind not in ("dirichlet", "decay"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")


def _helmholtz_lu(grid: Grid, alpha: float):
    key = ("helm_lu", float(alpha))
    cache = grid._cache
    if key not in cache:
        A = grid.D2 - alpha ** 2 * np.eye(grid.n_y)
        A[0, :] = 0.0
        A[0, 0] = 1.0
        A[-1, :] = 0.0
        A[-1, -1] = 1.0
        cache[key] = sla.lu_factor(A)
    return cache[key]


def helmholtz_inverse(grid: Grid, alpha: float) -> np.ndarray:
    """Inverse of (D2 - alpha^2) with Dirichlet rows at both ends."""
    key = ("helm_inv", float(alpha))
    cache = grid._cache
    if key not in cache:
        cache[key] = sla.lu_solve(_helmholtz_lu(grid, alpha), np.eye(grid.n_y))
    return cache[key]


def poisson_solve(grid: Grid, alpha, rhs, bc: BoundaryCondition | None = None):
    """Solve (d_yy - alpha^2) psi = rhs with Dirichlet boundary data.

    ``rhs`` is an array whose last axis runs over the y-nodes, or a Field, in
    which case every x-mode uses its own wavenumber and ``alpha`` is ignored.
    """
    bc = bc or BoundaryCondition()
    if isinstance(rhs, Field):
        out = np.empty_like(rhs.data)
        for i, kk in enumerate(rhs.grid.wavenumbers):
            if kk == 0 and bc.kind == "decay" and not np.any(rhs.data[i]) and bc.wall == 0:
                out[i] = 0.0
                continue
            out[i] = poisson_solve(grid, abs(kk), rhs.data[i], bc)
        return Field(rhs.grid, out)
    alpha = float(alpha)
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if bc.kind == "decay" and alpha == 0.0:
        raise IllPosed("alpha = 0 has no decaying solution")
    top = 0.0 if bc.kind == "decay" else bc.top
    r = np.array(rhs, dtype=complex)
    if r.shape[-1] != grid.n_y:
        raise GridError("rhs length does not match n_y")
    r[..., 0] = bc.wall
    r[..., -1] = top
    lu = _helmholtz_lu(grid, alpha)
    flat = r.reshape(-1, grid.n_y).T
    sol = sla.lu_solve(lu, flat).T.reshape(r.shape)
    if np.isrealobj(rhs) and np.isreal(bc.wall) and np.isreal(top):
        sol = sol.real
    return sol


def stream_operators(grid: Grid) -> np.ndarray:
    """Stacked matrices mapping vorticity to stream function per x-mode.

    For k != 0: (D2 - k^2) psi = -omega with psi = 0 at both ends.
    For k = 0: psi'' = -omega with psi(0) = 0 and psi'(y_max) = 0, i.e. the
    mean velocity is recovered as the integral of omega from y to y_max.
    """
    key = "stream_ops"
    cache = grid._cache
    if key not in cache:
        ops = np.empty((grid.n_x, grid.n_y, grid.n_y))
        I = grid.integration_matrix
        for i, kk in enumerate(grid.wavenumbers):
            if kk == 0:
                ops[i] = I @ (np.outer(np.ones(grid.n_y), I[-1]) - I)
            else:
                inv = helmholtz_inverse(grid, abs(kk)).copy()
                inv[:, 0] = 0.0
                inv[:, -1] = 0.0
                ops[i] = -inv
        cache[key] = ops
    return cache[key]


def stream_from_vorticity(omega: Field, u_top: float = 0.0) -> Field:
    """Stream function with psi = 0 at the wall, tangential to the top for
    k != 0 and mean velocity ``u_top`` at y_max."""
    g = omega.grid
    data = apply_y(stream_operators(g), omega.data)
    if u_top:
        data[g.mode_index(0)] += u_top * g.y_nodes
    return Field(g, data)


def mean_velocity(omega: Field, u_top: float = 0.0) -> np.ndarray:
    """x-averaged horizontal velocity implied by the mean vorticity."""
    g = omega.grid
    w0 = omega.data[g.mode_index(0)]
    I = g.integration_matrix
    return (I[-1] @ w0) - I @ w0 + u_top


# ---------------------------------------------------------------------------
# norms


def _parse_kind(kind) -> tuple[str, float]:
    if isinstance(kind, tuple):
        name, val = kind
        name = name.upper()
        if name == "LP":
            return ("Linf", np.inf) if val == np.inf else ("L", float(val))
        if name == "HS":
            return "H", float(val)
        raise ValueError(f"unknown norm kind {kind!r}")
    k = str(kind)
    if k.lower() == "linf":
        return "Linf", np.inf
    if k[0] in "Ll":
        return "L", float(k[1:])
    if k[0] in "Hh":
        return "H", float(k[1:])
    raise ValueError(f"unknown norm kind {kind!r}")


def _l2_sq(f: Field) -> float:
    g = f.grid
    return float(g.domain_period * np.sum(np.abs(f.data) ** 2 @ g.weights))


def discrete_norm(f: Union[Field, VelocityField], kind="L2", oversample: int = 4) -> float:
    """Quadrature-weighted norm over the strip [0, period] x [0, y_max].

    ``kind`` is one of "L1", "L2", "Linf", "H0", "H1", "H2" (or ("Lp", p),
    ("Hs", s)).  Vector fields use the Euclidean magnitude.
    """
    name, val = _parse_kind(kind)
    comps = [f.u, f.v] if isinstance(f, VelocityField) else [f]
    g = comps[0].grid
    if name == "H":
        if val not in (0, 1, 2):
            raise ValueError("Sobolev index must be 0, 1 or 2")
        total = 0.0
        for c in comps:
            total += _l2_sq(c)
            if val >= 1:
                cx, cy = c.dx(), c.dy()
                total += _l2_sq(cx) + _l2_sq(cy)
            if val >= 2:
                total += _l2_sq(cx.dx()) + 2 * _l2_sq(cx.dy()) + _l2_sq(cy.dy())
        return float(np.sqrt(total))
    if name == "L" and val == 2:
        return float(np.sqrt(sum(_l2_sq(c) for c in comps)))
    if name == "L" and val not in (1.0,):
        raise ValueError("p must be 1, 2 or inf")
    n = max(oversample * g.n_x, 32) if g.n_x > 1 else 1
    mag = np.sqrt(sum(np.abs(c.physical(n)) ** 2 for c in comps))
    if name == "Linf":
        return float(mag.max())
    return float(g.domain_period / n * np.sum(mag @ g.weights))
