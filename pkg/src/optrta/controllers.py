"""Follower control laws: the untrusted (U) and safety (S) controller of each scenario.

Every law has a point version returning a clamped input vector and an
interval version (suffix ``_box``) returning one enclosing interval per input
component, used by the reachability baseline.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

from . import interval as iv
from .errors import ConfigError


@dataclass(frozen=True)
class Gains:
    k1: float = 0.05
    k2: float = 1.0
    k3: float = 0.5
    k4: float = 1.0
    kx: float = 0.1
    a_max: float = 2.0
    omega_max: float = 0.5
    Gamma_max: float = 0.3
    d: float = 10.0
    delta_z: float = 20.0
    c: float = 3.0

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise ConfigError(f"gains.{f.name} must be a positive finite number, got {val!r}")
        if not self.c < self.d:
            raise ConfigError(f"gains: collision radius c={self.c} must be smaller than d={self.d}")

    @classmethod
    def from_dict(cls, d: dict | None) -> Gains:
        d = dict(d or {})
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"gains: unknown keys {sorted(extra)}")
        return cls(**{k: float(v) for k, v in d.items()})

    def to_dict(self) -> dict:
        return asdict(self)


def _clamp(x: float, lim: float) -> float:
    return -lim if x < -lim else (lim if x > lim else x)


# ----------------------------------------------------------------------- Acc


def acc_untrusted(q, q_l, g: Gains) -> list[float]:
    """Bang-bang: full throttle while at or behind the spacing point, full brake past it."""
    return [-g.a_max if q[0] > q_l[0] - g.d else g.a_max]


def acc_safety(q, q_l, g: Gains) -> list[float]:
    """PD on spacing and speed error."""
    return [_clamp(g.k1 * ((q_l[0] - g.d) - q[0]) + g.k2 * (q_l[1] - q[1]), g.a_max)]


def acc_untrusted_box(X, q_l, g: Gains) -> list[iv.Interval]:
    target = q_l[0] - g.d
    if X[0][1] <= target:
        return [(g.a_max, g.a_max)]
    if X[0][0] > target:
        return [(-g.a_max, -g.a_max)]
    return [(-g.a_max, g.a_max)]


def acc_safety_box(X, q_l, g: Gains) -> list[iv.Interval]:
    e = iv.iadd(iv.iscale(g.k1, iv.isub(iv.point(q_l[0] - g.d), X[0])), iv.iscale(g.k2, iv.isub(iv.point(q_l[1]), X[1])))
    return [iv.iclamp(e, -g.a_max, g.a_max)]


# -------------------------------------------------------------------- Dubins


def tracking_errors(x: float, y: float, psi: float, ref) -> tuple[float, float, float]:
    """Reference position error in the follower's body frame, plus heading error."""
    dx, dy = ref[0] - x, ref[1] - y
    c, s = math.cos(psi), math.sin(psi)
    return c * dx + s * dy, -s * dx + c * dy, ref[2] - psi


def dubins_tracking(q, ref, omega_ref: float, g: Gains, allow_accel: bool = True) -> list[float]:
    """Kanayama-style tracking of ``ref = (x, y, psi, v)``; returns ``[omega, a]``.

    With ``allow_accel`` false the follower never speeds up to catch up,
    but still brakes when the law asks for it.
    """
    ex, ey, epsi = tracking_errors(q[0], q[1], q[2], ref)
    vref = ref[3]
    omega = omega_ref + vref * (g.k1 * ey + g.k2 * math.sin(epsi))
    a = g.k3 * (vref * math.cos(epsi) + g.kx * ex - q[3])
    if not allow_accel:
        a = min(0.0, a)
    return [_clamp(omega, g.omega_max), _clamp(a, g.a_max)]


def _box_errors(X, xi: int, yi: int, pi: int, ref):
    dx = iv.isub(iv.point(ref[0]), X[xi])
    dy = iv.isub(iv.point(ref[1]), X[yi])
    c, s = iv.icos(X[pi]), iv.isin(X[pi])
    ex = iv.iadd(iv.imul(c, dx), iv.imul(s, dy))
    ey = iv.isub(iv.imul(c, dy), iv.imul(s, dx))
    epsi = iv.isub(iv.point(ref[2]), X[pi])
    return ex, ey, epsi


def dubins_tracking_box(X, ref, omega_ref: float, g: Gains, allow_accel: bool = True) -> list[iv.Interval]:
    ex, ey, epsi = _box_errors(X, 0, 1, 2, ref)
    vref = ref[3]
    inner = iv.iadd(iv.iscale(g.k1, ey), iv.iscale(g.k2, iv.isin(epsi)))
    omega = iv.iadd(iv.point(omega_ref), iv.iscale(vref, inner))
    a = iv.iscale(
        g.k3, iv.isub(iv.iadd(iv.iscale(vref, iv.icos(epsi)), iv.iscale(g.kx, ex)), X[3])
    )
    if not allow_accel:
        a = (min(0.0, a[0]), min(0.0, a[1]))
    return [iv.iclamp(omega, -g.omega_max, g.omega_max), iv.iclamp(a, -g.a_max, g.a_max)]


# ----------------------------------------------------------------------- Air


def air_tracking(q, ref, omega_ref: float, v_lead: float, g: Gains, safety_mode: bool = False) -> list[float]:
    """Returns ``[omega, Gamma, a]`` tracking ``ref = (x, y, z, psi)``.

    Pitch is steered toward the line-of-sight angle to the reference point.
    In safety mode the acceleration is zero.
    """
    x, y, z, psi, pitch, v = q
    _, ey, epsi = tracking_errors(x, y, psi, (ref[0], ref[1], ref[3]))
    omega = omega_ref + v_lead * (g.k1 * ey + g.k2 * math.sin(epsi))
    gamma_ref = math.atan2(ref[2] - z, math.hypot(ref[0] - x, ref[1] - y))
    Gamma = g.k4 * (gamma_ref - pitch)
    a = 0.0 if safety_mode else g.k3 * (v_lead - v)
    return [_clamp(omega, g.omega_max), _clamp(Gamma, g.Gamma_max), _clamp(a, g.a_max)]


def air_tracking_box(X, ref, omega_ref: float, v_lead: float, g: Gains, safety_mode: bool = False) -> list[iv.Interval]:
    _, ey, epsi = _box_errors(X, 0, 1, 3, (ref[0], ref[1], ref[3]))
    omega = iv.iadd(iv.point(omega_ref), iv.iscale(v_lead, iv.iadd(iv.iscale(g.k1, ey), iv.iscale(g.k2, iv.isin(epsi)))))
    dx = iv.isub(iv.point(ref[0]), X[0])
    dy = iv.isub(iv.point(ref[1]), X[1])
    dz = iv.isub(iv.point(ref[2]), X[2])
    horiz = iv.isqrt(iv.iadd(iv.isq(dx), iv.isq(dy)))
    gamma_ref = iv.iatan2_halfplane(dz, horiz)
    Gamma = iv.iscale(g.k4, iv.isub(gamma_ref, X[4]))
    a = (0.0, 0.0) if safety_mode else iv.iscale(g.k3, iv.isub(iv.point(v_lead), X[5]))
    return [
        iv.iclamp(omega, -g.omega_max, g.omega_max),
        iv.iclamp(Gamma, -g.Gamma_max, g.Gamma_max),
        iv.iclamp(a, -g.a_max, g.a_max),
    ]
