"""Variational refinement of a dense flow field.

One-level minimization (no coarse-to-fine pyramid) of

    E(v) = sum phi(|f2(x+v) - f1(x)|^2)
         + alpha * sum phi(|grad f2(x+v) - grad f1(x)|^2)
         + gamma * sum phi(|grad v1|^2 + |grad v2|^2)

with the Charbonnier penalizer phi(s^2) = sqrt(s^2 + eps^2).  Each outer
iteration warps the second frame (and its derivatives) by the current flow,
linearizes the data terms around that warp with lagged robust weights,
assembles the sparse positive semi-definite system for the increment, and
runs a fixed number of SOR sweeps in deterministic row-major order.  A
backtracking step scale guarantees the energy never rises above its
initialization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .imaging import as_flow, gradient, warp_backward


@dataclass(frozen=True)
class RefineParams:
    alpha: float = 1.0
    gamma: float = 0.05
    penalizer_eps: float = 1e-3
    outer_iters: int = 40
    sor_iters: int = 30
    sor_omega: float = 1.98

    def __post_init__(self):
        if self.alpha < 0 or self.gamma < 0:
            raise ValueError("weights must be >= 0")
        if self.penalizer_eps <= 0:
            raise ValueError("penalizer_eps must be positive")
        if self.sor_iters < 1:
            raise ValueError("sor_iters must be >= 1")
        if not 0 < self.sor_omega < 2:
            raise ValueError("sor_omega must be in (0, 2)")


def _phi(s2, eps):
    return np.sqrt(s2 + eps * eps)


def energy(f1, f2, flow, params: RefineParams | None = None) -> float:
    """Total refinement energy of ``flow`` for the frame pair (f1, f2).

    Uses the module's warp and gradient stencils; gradient constancy compares
    the warped gradient grids of f2 against the gradients of f1.
    """
    params = params or RefineParams()
    if f1.shape != f2.shape or flow.shape[:2] != f1.shape:
        raise ValueError("frame and flow dimensions must match")
    eps = params.penalizer_eps
    f1x, f1y = gradient(f1)
    f2x, f2y = gradient(f2)
    data = _phi((warp_backward(f2, flow) - f1) ** 2, eps).sum()
    grad_term = _phi(
        (warp_backward(f2x, flow) - f1x) ** 2 + (warp_backward(f2y, flow) - f1y) ** 2,
        eps,
    ).sum()
    ux, uy = gradient(flow[..., 0])
    vx, vy = gradient(flow[..., 1])
    smooth = _phi(ux**2 + uy**2 + vx**2 + vy**2, eps).sum()
    return float(data + params.alpha * grad_term + params.gamma * smooth)


@numba.njit(cache=True)
def _sor_sweeps(a11, a12, a22, b1, b2, wn, ws, ww, we, gamma, du, dv, iters, omega):
    """Block SOR on the coupled increment system, fixed row-major sweeps."""
    h, w = a11.shape
    for _ in range(iters):
        for i in range(h):
            for j in range(w):
                s1 = b1[i, j]
                s2 = b2[i, j]
                if i > 0:
                    s1 += gamma * wn[i, j] * du[i - 1, j]
                    s2 += gamma * wn[i, j] * dv[i - 1, j]
                if i < h - 1:
                    s1 += gamma * ws[i, j] * du[i + 1, j]
                    s2 += gamma * ws[i, j] * dv[i + 1, j]
                if j > 0:
                    s1 += gamma * ww[i, j] * du[i, j - 1]
                    s2 += gamma * ww[i, j] * dv[i, j - 1]
                if j < w - 1:
                    s1 += gamma * we[i, j] * du[i, j + 1]
                    s2 += gamma * we[i, j] * dv[i, j + 1]
                det = a11[i, j] * a22[i, j] - a12[i, j] * a12[i, j]
                if det > 1e-30 or det < -1e-30:
                    nu = (a22[i, j] * s1 - a12[i, j] * s2) / det
                    nv = (a11[i, j] * s2 - a12[i, j] * s1) / det
                    du[i, j] += omega * (nu - du[i, j])
                    dv[i, j] += omega * (nv - dv[i, j])


def _system_coefficients(f1, f2, flow, params: RefineParams, derivs):
    """Per-pixel coefficients of the linearized increment system.

    Returns (a11, a12, a22, b1, b2, wn, ws, ww, we): the 2x2 diagonal blocks,
    right-hand sides (including the smoothness divergence of the current
    flow), and the four neighbor coupling weights of the smoothness term
    (homogeneous Neumann borders; couplings are scaled by gamma in the
    solver).  The assembled matrix is symmetric positive semi-definite.
    """
    eps = params.penalizer_eps
    f1x, f1y, f2x, f2y, f2xx, f2xy, f2yy = derivs
    it = warp_backward(f2, flow) - f1
    ix = warp_backward(f2x, flow)
    iy = warp_backward(f2y, flow)
    ixx = warp_backward(f2xx, flow)
    ixy = warp_backward(f2xy, flow)
    iyy = warp_backward(f2yy, flow)
    ixt = ix - f1x
    iyt = iy - f1y

    a_d = 1.0 / np.sqrt(it**2 + eps * eps)
    a_g = params.alpha / np.sqrt(ixt**2 + iyt**2 + eps * eps)
    ux, uy = gradient(flow[..., 0])
    vx, vy = gradient(flow[..., 1])
    a_s = 1.0 / np.sqrt(ux**2 + uy**2 + vx**2 + vy**2 + eps * eps)

    wn = np.zeros_like(a_s)
    ws = np.zeros_like(a_s)
    ww = np.zeros_like(a_s)
    we = np.zeros_like(a_s)
    wn[1:, :] = 0.5 * (a_s[1:, :] + a_s[:-1, :])
    ws[:-1, :] = wn[1:, :]
    ww[:, 1:] = 0.5 * (a_s[:, 1:] + a_s[:, :-1])
    we[:, :-1] = ww[:, 1:]
    coupling = params.gamma * (wn + ws + ww + we)

    a11 = a_d * ix * ix + a_g * (ixx * ixx + ixy * ixy) + coupling
    a12 = a_d * ix * iy + a_g * (ixx * ixy + ixy * iyy)
    a22 = a_d * iy * iy + a_g * (ixy * ixy + iyy * iyy) + coupling

    u = flow[..., 0]
    v = flow[..., 1]

    def weighted_laplacian(z):
        out = np.zeros_like(z)
        out[1:, :] += wn[1:, :] * (z[:-1, :] - z[1:, :])
        out[:-1, :] += ws[:-1, :] * (z[1:, :] - z[:-1, :])
        out[:, 1:] += ww[:, 1:] * (z[:, :-1] - z[:, 1:])
        out[:, :-1] += we[:, :-1] * (z[:, 1:] - z[:, :-1])
        return out

    b1 = -(a_d * ix * it + a_g * (ixx * ixt + ixy * iyt)) + params.gamma * weighted_laplacian(u)
    b2 = -(a_d * iy * it + a_g * (ixy * ixt + iyy * iyt)) + params.gamma * weighted_laplacian(v)
    return a11, a12, a22, b1, b2, wn, ws, ww, we


def _image_derivatives(f1, f2):
    f1x, f1y = gradient(f1)
    f2x, f2y = gradient(f2)
    f2xx, f2xy = gradient(f2x)
    _, f2yy = gradient(f2y)
    return f1x, f1y, f2x, f2y, f2xx, f2xy, f2yy


def refine(f1, f2, flow0, params: RefineParams | None = None) -> np.ndarray:
    """Refine ``flow0`` by fixed-point linearization with SOR solves.

    Runs ``outer_iters`` outer iterations; each assembles the increment
    system at the current warp and applies exactly ``sor_iters`` SOR sweeps.
    Steps that would raise the energy are halved (up to 12 times, else
    dropped), so the result never has higher energy than the initialization.
    """
    params = params or RefineParams()
    if f1.shape != f2.shape:
        raise ValueError("frame dimensions must match")
    flow = as_flow(flow0)
    if flow.shape[:2] != f1.shape:
        raise ValueError("flow dimensions must match the frames")
    derivs = _image_derivatives(f1, f2)
    current = energy(f1, f2, flow, params)
    for _ in range(params.outer_iters):
        a11, a12, a22, b1, b2, wn, ws, ww, we = _system_coefficients(
            f1, f2, flow, params, derivs
        )
        du = np.zeros_like(b1)
        dv = np.zeros_like(b2)
        _sor_sweeps(
            a11, a12, a22, b1, b2, wn, ws, ww, we,
            params.gamma, du, dv, params.sor_iters, params.sor_omega,
        )
        step = np.stack([du, dv], axis=-1)
        scale = 1.0
        for _ in range(12):
            candidate = energy(f1, f2, flow + scale * step, params)
            if candidate <= current + 1e-9:
                break
            scale *= 0.5
        else:
            scale = 0.0
            candidate = current
        if scale > 0.0:
            flow = flow + scale * step
            current = min(candidate, current)
    return flow
