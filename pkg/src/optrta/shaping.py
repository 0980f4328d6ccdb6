"""Reward shaping that turns safe-optimal synthesis into plain optimal synthesis.

Every reward at an unsafe state is replaced by a penalty large enough that
any run touching the unsafe set within ``n`` steps has negative value, while
safe runs keep their reward unchanged.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .plant import Mdp, Model, RewardStructure, UnsafeSet

PENALTY_FLOOR = -1e300


class ShapingOverflowWarning(RuntimeWarning):
    """The exact penalty is below the representable floor and was clamped."""


class SafetyVerdict(enum.Enum):
    SAFE_EXISTS = "SafeExists"
    NO_SAFE_POLICY = "NoSafePolicy"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, eq=False)
class ShapedReward:
    """``r'(q, a) = penalty`` if ``q`` is unsafe, else ``r(q, a)``."""

    base: RewardStructure
    penalty: float
    unsafe: UnsafeSet
    horizon_n: int
    min_path_prob: float | None = None
    clamped: bool = False

    def __post_init__(self):
        table = np.array(self.base.table, copy=True)
        for q in self.unsafe:
            table[q, :] = self.penalty
        table.setflags(write=False)
        object.__setattr__(self, "_table", table)

    @property
    def table(self) -> np.ndarray:
        return self._table

    @property
    def gamma(self) -> float:
        return self.base.gamma

    @property
    def r_max(self) -> float:
        return self.base.r_max

    def reward(self, q: int, a: int) -> float:
        return float(self._table[q, a])

    def as_structure(self) -> RewardStructure:
        return RewardStructure(self._table, self.gamma)


def _check_nonnegative(rs: RewardStructure) -> None:
    neg = np.argwhere(rs.table < 0.0)
    if len(neg):
        q, a = (int(x) for x in neg[0])
        raise PreconditionError(
            f"shaping needs non-negative rewards; r({q}, {a}) = {rs.table[q, a]!r}"
        )


def _penalty(r_max: float, gamma: float, n: int, path_prob: float) -> tuple[float, bool]:
    if r_max == 0.0:
        r_max = 1.0  # surrogate so an all-zero reward still penalizes unsafe states
    # evaluate in log space so huge magnitudes clamp instead of overflowing
    log_mag = math.log(r_max) - math.log(path_prob) - n * math.log(gamma) - math.log1p(-gamma)
    if log_mag >= math.log(-PENALTY_FLOOR):
        warnings.warn(
            f"shaping penalty exp({log_mag:.1f}) exceeds {(-PENALTY_FLOOR):g}; clamped",
            ShapingOverflowWarning,
            stacklevel=3,
        )
        return PENALTY_FLOOR, True
    return -r_max / (path_prob * gamma**n * (1.0 - gamma)), False


def shape(rs: RewardStructure, unsafe: UnsafeSet, n: int) -> ShapedReward:
    """Penalty ``-r_max / (gamma^n (1 - gamma))`` on every unsafe state."""
    _check_nonnegative(rs)
    if n < 1:
        raise PreconditionError(f"horizon n must be >= 1, got {n}")
    p, clamped = _penalty(rs.r_max, rs.gamma, n, 1.0)
    return ShapedReward(rs, p, unsafe, n, None, clamped)


def default_min_path_prob(mdp: Mdp, n: int) -> float:
    """Conservative lower bound ``b^n`` on the probability of any n-step path."""
    return mdp.min_nonzero_prob() ** n


def shape_mdp(rs: RewardStructure, unsafe: UnsafeSet, n: int, min_path_prob: float) -> ShapedReward:
    """Penalty ``-r_max / (min_path_prob * gamma^n (1 - gamma))``."""
    _check_nonnegative(rs)
    if n < 1:
        raise PreconditionError(f"horizon n must be >= 1, got {n}")
    if not 0.0 < min_path_prob <= 1.0:
        raise PreconditionError(f"min_path_prob must lie in (0, 1], got {min_path_prob}")
    p, clamped = _penalty(rs.r_max, rs.gamma, n, min_path_prob)
    return ShapedReward(rs, p, unsafe, n, min_path_prob, clamped)


def shape_for(model: Model, rs: RewardStructure, unsafe: UnsafeSet, n: int | None = None) -> ShapedReward:
    """Pick the deterministic or MDP shaping for ``model`` with ``n = |Q|`` by default."""
    n = model.n if n is None else n
    if model.deterministic:
        return shape(rs, unsafe, n)
    return shape_mdp(rs, unsafe, n, default_min_path_prob(model, n))


def certify(optimal_shaped_value: float, error_bound: float = 0.0) -> SafetyVerdict:
    """SafeExists iff the value is non-negative, up to a known numerical error bound."""
    if error_bound < 0.0:
        raise PreconditionError("error_bound must be >= 0")
    return SafetyVerdict.SAFE_EXISTS if optimal_shaped_value >= -error_bound else SafetyVerdict.NO_SAFE_POLICY
