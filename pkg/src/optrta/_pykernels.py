"""Pure-Python reference kernels.

Mirrors ``_ckernels.pyx`` operation for operation so the compiled and the
fallback paths agree bit for bit on RK4 rollouts and deterministic value
iteration.  Selected automatically by :mod:`optrta._backend` when the
extension is unavailable.
"""

from __future__ import annotations

import math

import numpy as np

from .interval import dn, icos, imul, isin, up

ACC, DUBINS, AIR = 0, 1, 2
STATE_DIM = (2, 4, 6)
INPUT_DIM = (1, 2, 3)
ANGLE_IDX = ((), (2,), (3, 4))

_PI = math.pi
_TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    if a > _PI or a <= -_PI:
        a = a - _TWO_PI * math.ceil((a - _PI) / _TWO_PI)
    return a


def _f(model: int, s: list, u: list) -> list:
    if model == ACC:
        return [s[1], u[0]]
    if model == DUBINS:
        v = s[3]
        return [v * math.cos(s[2]), v * math.sin(s[2]), u[0], u[1]]
    v = s[5]
    cg = math.cos(s[4])
    return [
        v * math.cos(s[3]) * cg,
        v * math.sin(s[3]) * cg,
        v * math.sin(s[4]),
        u[0],
        u[1],
        u[2],
    ]


def derivative(model: int, state, u) -> np.ndarray:
    return np.array(_f(model, [float(x) for x in state], [float(x) for x in u]))


def rk4(model: int, state, u, dt: float, steps: int):
    """Fixed-step RK4 under a zero-order-hold input.

    Returns ``(final_state, bad_step)``; ``bad_step`` is -1 on success or the
    1-based step at which a non-finite value first appeared.
    """
    s = [float(x) for x in state]
    uu = [float(x) for x in u]
    n = len(s)
    half = 0.5 * dt
    sixth = dt / 6.0
    angles = ANGLE_IDX[model]
    for step in range(steps):
        k1 = _f(model, s, uu)
        k2 = _f(model, [s[i] + half * k1[i] for i in range(n)], uu)
        k3 = _f(model, [s[i] + half * k2[i] for i in range(n)], uu)
        k4 = _f(model, [s[i] + dt * k3[i] for i in range(n)], uu)
        s = [s[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(n)]
        for i in angles:
            s[i] = wrap_angle(s[i])
        for x in s:
            if not math.isfinite(x):
                return np.array(s), step + 1
    return np.array(s), -1


def value_iteration_det(nxt: np.ndarray, rew: np.ndarray, gamma: float, thr: float, max_iter: int):
    """Bellman iteration on a deterministic transition table ``nxt[s, a]``.

    Returns ``(v, q, iterations, residual)`` with ``v == q.max(axis=1)``.
    """
    n, m = rew.shape
    v = np.zeros(n)
    q = np.empty((n, m))
    residual = math.inf
    it = 0
    while it < max_iter:
        q = rew + gamma * v[nxt]
        vn = q.max(axis=1)
        residual = float(np.max(np.abs(vn - v))) if n else 0.0
        v = vn
        it += 1
        if residual <= thr:
            break
    return v, q, it, residual


def value_iteration_prob(P: np.ndarray, rew: np.ndarray, gamma: float, thr: float, max_iter: int):
    """Bellman iteration on a dense transition tensor ``P[s, a, s']``."""
    n, m = rew.shape
    v = np.zeros(n)
    q = np.empty((n, m))
    residual = math.inf
    it = 0
    while it < max_iter:
        q = rew + gamma * (P @ v)
        vn = q.max(axis=1)
        residual = float(np.max(np.abs(vn - v))) if n else 0.0
        v = vn
        it += 1
        if residual <= thr:
            break
    return v, q, it, residual


def _F(model: int, X: list, U: list) -> list:
    if model == ACC:
        return [X[1], U[0]]
    if model == DUBINS:
        v = X[3]
        return [imul(v, icos(X[2])), imul(v, isin(X[2])), U[0], U[1]]
    v = X[5]
    cg = icos(X[4])
    return [
        imul(imul(v, icos(X[3])), cg),
        imul(imul(v, isin(X[3])), cg),
        imul(v, isin(X[4])),
        U[0],
        U[1],
        U[2],
    ]


def _sweep(X: list, F: list, h: float) -> list:
    # X + [0, h] * F
    out = []
    for (xl, xh), (fl, fh) in zip(X, F):
        out.append((dn(xl + min(0.0, dn(h * fl))), up(xh + max(0.0, up(h * fh)))))
    return out


def enclose_period(model: int, lo, hi, ulo, uhi, h: float, nsub: int, pad: float):
    """Propagate the box ``[lo, hi]`` through ``nsub`` interval Euler sub-steps.

    Each sub-step finds an a-priori enclosure ``B`` with ``X + [0,h] F(B) ⊆ B``
    and advances ``X <- X + h F(B)``, which encloses the exact flow over the
    sub-step for any input inside ``[ulo, uhi]``.  Returns ``(lo, hi, ok)``.
    """
    X = [(float(a), float(b)) for a, b in zip(lo, hi)]
    U = [(float(a), float(b)) for a, b in zip(ulo, uhi)]
    for _ in range(nsub):
        F0 = _F(model, X, U)
        B = _sweep(X, F0, h)
        B = [(b0 - 0.1 * (b1 - b0) - pad, b1 + 0.1 * (b1 - b0) + pad) for b0, b1 in B]
        FB = None
        for _attempt in range(12):
            FB = _F(model, B, U)
            C = _sweep(X, FB, h)
            if all(b[0] <= c[0] and c[1] <= b[1] for b, c in zip(B, C)):
                break
            # grow only the coordinates that escaped
            B = [
                b
                if b[0] <= c[0] and c[1] <= b[1]
                else (
                    min(b[0], c[0]) - 0.1 * (max(b[1], c[1]) - min(b[0], c[0])) - pad,
                    max(b[1], c[1]) + 0.1 * (max(b[1], c[1]) - min(b[0], c[0])) + pad,
                )
                for b, c in zip(B, C)
            ]
        else:
            return np.array([x[0] for x in X]), np.array([x[1] for x in X]), False
        X = [
            (dn(dn(xl + dn(h * fl)) - pad), up(up(xh + up(h * fh)) + pad))
            for (xl, xh), (fl, fh) in zip(X, FB)
        ]
        for a, b in X:
            if not (math.isfinite(a) and math.isfinite(b)):
                return np.array([x[0] for x in X]), np.array([x[1] for x in X]), False
    return np.array([x[0] for x in X]), np.array([x[1] for x in X]), True
