"""Implicit-explicit integrator for the viscous vorticity equation.

Solves ``d_t omega = kappa Laplacian(omega) + E(t, omega)`` mode by mode in x
with the L-stable, stiffly accurate ARS(4,4,3) Runge-Kutta pair.  Diffusion
is implicit with a single diagonal coefficient, so one matrix per |k| is
factorised once.  Wall conditions:

* ``navier``: omega = 0 at the wall.
* ``noslip``: the unknown wall vorticity is fixed by an influence-matrix
  (Green's function) step so that u(0) equals prescribed slip data.

At the top the vorticity vanishes; with the stream-function conventions of
``spectral.stream_from_vorticity`` this is free slip for k != 0 and a
stress-free mean flow with prescribed top velocity.
"""
from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .spectral import Grid, apply_y, stream_operators

__all__ = ["ARS443", "VorticityIMEX", "WALL_CONDITIONS"]

WALL_CONDITIONS = ("noslip", "navier")


class ARS443:
    """Butcher tableaux; stage 0 is the previous step value."""
    gamma = 0.5
    c = np.array([0.0, 0.5, 2.0 / 3.0, 0.5, 1.0])
    explicit = [
        [0.5],
        [11.0 / 18.0, 1.0 / 18.0],
        [5.0 / 6.0, -5.0 / 6.0, 0.5],
        [0.25, 7.0 / 4.0, 0.75, -7.0 / 4.0],
    ]
    implicit = [
        [],
        [1.0 / 6.0],
        [-0.5, 0.5],
        [1.5, -1.5, 0.5],
    ]


ExplicitTerm = Callable[[float, np.ndarray], np.ndarray]
SlipData = Callable[[float], np.ndarray]


class VorticityIMEX:
    """Fixed-step integrator for one grid, diffusivity and step size."""

    def __init__(self, grid: Grid, kappa: float, dt: float, wall: str = "noslip",
                 u_top: float = 0.0):
        if wall not in WALL_CONDITIONS:
            raise ValueError(f"wall condition must be one of {WALL_CONDITIONS}")
        if not dt > 0 or kappa < 0:
            raise ValueError("dt must be positive and kappa non-negative")
        self.grid = grid
        self.kappa = float(kappa)
        self.dt = float(dt)
        self.wall = wall
        self.u_top = float(u_top)
        n = grid.n_y
        h = ARS443.gamma * self.dt * self.kappa
        S = stream_operators(grid)
        d0 = grid.D1[0]
        self._inv = np.empty((grid.n_x, n, n))
        self._omega_h = np.empty((grid.n_x, n))
        self._dpsi0 = np.empty((grid.n_x, n))
        self._dpsi_h = np.empty(grid.n_x)
        cache = {}
        for i, kk in enumerate(grid.wavenumbers):
            key = abs(kk)
            if key not in cache:
                M = np.eye(n) - h * (grid.D2 - kk ** 2 * np.eye(n))
                M[0, :] = 0.0
                M[0, 0] = 1.0
                M[-1, :] = 0.0
                M[-1, -1] = 1.0
                cache[key] = np.linalg.inv(M)
            self._inv[i] = cache[key]
            self._omega_h[i] = self._inv[i][:, 0]
            self._dpsi0[i] = d0 @ S[i]
            self._dpsi_h[i] = self._dpsi0[i] @ self._omega_h[i]
        self._zero = grid.k_int == 0

    def wall_velocity(self, omega: np.ndarray) -> np.ndarray:
        """u(0) per x-mode implied by the vorticity."""
        out = np.einsum("kj,kj->k", self._dpsi0, omega)
        out[self._zero] += self.u_top
        return out

    def _solve(self, rhs: np.ndarray, slip: Optional[np.ndarray]) -> np.ndarray:
        r = rhs.copy()
        r[:, 0] = 0.0
        r[:, -1] = 0.0
        om = apply_y(self._inv, r)
        if self.wall == "noslip":
            g = np.zeros(self.grid.n_x, complex) if slip is None else slip
            a = (g - self.wall_velocity(om)) / self._dpsi_h
            om += a[:, None] * self._omega_h
        return om

    def step(self, omega: np.ndarray, t: float, explicit: Optional[ExplicitTerm] = None,
             slip: Optional[SlipData] = None) -> np.ndarray:
        """Advance the vorticity data by one step from time t."""
        dt, gdt = self.dt, ARS443.gamma * self.dt
        E = []
        G = [None]
        Y = omega
        for i in range(1, 5):
            if explicit is not None:
                E.append(explicit(t + ARS443.c[i - 1] * dt, Y))
            rhs = omega.copy()
            for j, a in enumerate(ARS443.explicit[i - 1]):
                if explicit is not None and a:
                    rhs = rhs + dt * a * E[j]
            for j, a in enumerate(ARS443.implicit[i - 1], start=1):
                if a:
                    rhs = rhs + dt * a * G[j]
            g = None if slip is None else np.asarray(slip(t + ARS443.c[i] * dt), complex)
            Y = self._solve(rhs, g)
            G.append((Y - rhs) / gdt)
        return Y
