"""Photon-counting statistics of the heralded source.

Mode ``b`` is the heralding arm and mode ``a`` carries the heralded photons.
All distributions are joint probabilities, *not* conditioned on the herald:
``p[n] = P(n, 1)`` for a perfect detector, ``p[n] = P_click(n)`` for the
click/no-click detector. g2 is formed from these unnormalized moments,

    g2 = (<n^2> - <n>) / <n>^2,   <n^l> = sum_n n^l p[n],

which reproduces the published g2 values. Dividing the moments by the
heralding probability does not cancel in this ratio; the renormalized value
is available as :attr:`Moments.g2_conditional`.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from heraldsim.errors import ConvergenceError, DegenerateError, HeraldSimError
from heraldsim.fock_core import FockCutoff, SqueezeSpec, prepare_final_state

# zeta = i r after the second beam splitter
SQUEEZE_PHASE = math.pi / 2


@dataclass(frozen=True)
class SourceParams:
    alpha: float
    r: float
    eta: float = 1.0
    cutoff: FockCutoff | None = None
    k_max: int = 200

    def __post_init__(self):
        if isinstance(self.alpha, complex):
            raise ValueError("alpha must be real")
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError(f"alpha must be >= 0, got {self.alpha!r}")
        if not (math.isfinite(self.r) and self.r >= 0):
            raise ValueError(f"r must be >= 0, got {self.r!r}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta!r}")
        if int(self.k_max) != self.k_max or self.k_max < 1:
            raise ValueError(f"k_max must be an integer >= 1, got {self.k_max!r}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "eta", float(self.eta))
        object.__setattr__(self, "k_max", int(self.k_max))

    @property
    def squeeze(self) -> SqueezeSpec:
        return SqueezeSpec(self.r, SQUEEZE_PHASE)

    def replace(self, **changes) -> SourceParams:
        values = dict(alpha=self.alpha, r=self.r, eta=self.eta, cutoff=self.cutoff, k_max=self.k_max)
        values.update(changes)
        return SourceParams(**values)


@dataclass(frozen=True)
class CountDistribution:
    """Probabilities over the heralded photon number; ``leakage = 1 - sum(p)``."""

    p: np.ndarray
    leakage: float

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        p.setflags(write=False)
        if np.any(p < 0):
            raise ValueError("negative probability")
        if p.sum() > 1 + 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r} > 1")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "leakage", float(self.leakage))

    @classmethod
    def from_probabilities(cls, p) -> CountDistribution:
        p = np.clip(np.asarray(p, dtype=float), 0.0, None)
        return cls(p, 1.0 - float(p.sum()))

    @property
    def total(self) -> float:
        return float(self.p.sum())


@dataclass(frozen=True)
class Moments:
    """Raw (unconditioned) and conditioned photon-number moments."""

    mean: float
    second: float
    herald_probability: float

    @property
    def g2(self) -> float:
        """g2 from raw moments, as the source's figures of merit are defined."""
        if self.mean <= 0:
            raise DegenerateError("<n> = 0: g2 undefined")
        return (self.second - self.mean) / self.mean**2

    @property
    def conditional_mean(self) -> float:
        return self.mean / self.herald_probability

    @property
    def conditional_second(self) -> float:
        return self.second / self.herald_probability

    @property
    def g2_conditional(self) -> float:
        """g2 of the post-selected state; equals ``g2 * herald_probability``."""
        if self.mean <= 0:
            raise DegenerateError("<n> = 0: g2 undefined")
        m1, m2 = self.conditional_mean, self.conditional_second
        return (m2 - m1) / m1**2


def moments(dist: CountDistribution) -> Moments:
    n = np.arange(dist.p.shape[0], dtype=float)
    return Moments(
        mean=float(np.dot(n, dist.p)),
        second=float(np.dot(n * n, dist.p)),
        herald_probability=dist.total,
    )


@lru_cache(maxsize=64)
def _joint_table(alpha: float, r: float, cutoff: FockCutoff | None) -> np.ndarray:
    state = prepare_final_state(alpha, SqueezeSpec(r, SQUEEZE_PHASE), cutoff)
    table = state.probabilities()
    table.setflags(write=False)
    return table


def joint_table(params: SourceParams) -> np.ndarray:
    """Read-only table ``P[n_a, n_b]`` for the final state."""
    return _joint_table(params.alpha, params.r, params.cutoff)


def joint_probability(n_a: int, n_b: int, params: SourceParams) -> float:
    """``P(n_a, n_b; r, alpha) = |mu(n_a, n_b)|^2``."""
    if n_a < 0 or n_b < 0:
        raise ValueError("photon numbers must be non-negative")
    table = joint_table(params)
    n_max = table.shape[0] - 1
    if n_a > n_max or n_b > n_max:
        raise ValueError(f"index ({n_a}, {n_b}) beyond cutoff n_max={n_max}")
    return float(table[n_a, n_b])


def herald_distribution(params: SourceParams) -> CountDistribution:
    """``p[n] = P(n, 1)``: n photons in mode a and exactly one in mode b."""
    return CountDistribution.from_probabilities(joint_table(params)[:, 1])


def povm_click_weights(eta: float, k_max: int) -> np.ndarray:
    """Diagonal of the click element ``M``, for photon numbers ``0..k_max``."""
    k = np.arange(k_max + 1)
    w = np.zeros(k_max + 1)
    if eta > 0:
        w[1:] = eta * (1.0 - eta) ** (k[1:] - 1)
    return w


def click_distribution(params: SourceParams, tail_tol: float = 1e-10) -> CountDistribution:
    """``p[n] = eta * sum_k (1-eta)^(k-1) P(n, k)``.

    The k-sum runs to ``min(k_max, n_max)``; the neglected weight is bounded
    by ``eta (1-eta)^k_eff`` times the probability not yet summed.
    """
    table = joint_table(params)
    k_eff = min(params.k_max, table.shape[1] - 1)
    w = povm_click_weights(params.eta, k_eff)
    residual = max(0.0, 1.0 - float(table[:, : k_eff + 1].sum()))
    if 0 < params.eta < 1:
        bound = params.eta * (1.0 - params.eta) ** k_eff * residual
        if bound >= tail_tol:
            raise ConvergenceError(
                f"click sum truncated at k={k_eff} leaves up to {bound:.2e} (eta={params.eta})"
            )
    return CountDistribution.from_probabilities(table[:, : k_eff + 1] @ w)


def noclick_distribution(params: SourceParams) -> CountDistribution:
    """Complementary POVM element ``I - M`` applied to the heralding mode."""
    table = joint_table(params)
    k_eff = min(params.k_max, table.shape[1] - 1)
    w = 1.0 - povm_click_weights(params.eta, k_eff)
    return CountDistribution.from_probabilities(table[:, : k_eff + 1] @ w)


def _coherent_g2(params: SourceParams) -> float:
    # r = 0: mode a is the coherent state |beta>, independent of the herald
    if params.alpha == 0:
        raise DegenerateError("r = 0 and alpha = 0: no photons, g2 undefined")
    if params.eta == 0:
        raise DegenerateError("eta = 0: detector never clicks, g2 undefined")
    return 1.0


def g2_perfect(params: SourceParams) -> float:
    """g2 of mode a heralded by exactly one photon in mode b."""
    if params.r == 0:
        return _coherent_g2(params)
    return moments(herald_distribution(params)).g2


def g2_click(params: SourceParams) -> float:
    """g2 of mode a heralded by a click of an efficiency-``eta`` detector."""
    if params.r == 0:
        return _coherent_g2(params)
    return moments(click_distribution(params)).g2


# ---------------------------------------------------------------------------
# grid sweeps

QUANTITIES = ("P11", "g2_perfect", "Pclick_n", "g2_click")


@dataclass(frozen=True)
class SweepRow:
    r: float
    second_axis: float
    value: float
    leakage: float
    error: str = ""

    def as_tuple(self):
        return (self.r, self.second_axis, self.value, self.leakage, self.error)


def _cell(quantity: str, r: float, second: float, params: SourceParams, photon_number: int) -> SweepRow:
    try:
        if quantity in ("P11", "g2_perfect"):
            p = params.replace(r=r, alpha=second)
        else:
            p = params.replace(r=r, eta=second)
        if quantity == "P11":
            value = joint_probability(1, 1, p)
            leakage = herald_distribution(p).leakage
        elif quantity == "g2_perfect":
            value = g2_perfect(p)
            leakage = herald_distribution(p).leakage
        elif quantity == "Pclick_n":
            dist = click_distribution(p)
            value = float(dist.p[photon_number])
            leakage = dist.leakage
        else:
            value = g2_click(p)
            leakage = click_distribution(p).leakage
        return SweepRow(r, second, value, leakage)
    except (HeraldSimError, ValueError, IndexError) as exc:
        return SweepRow(r, second, math.nan, math.nan, f"{type(exc).__name__}: {exc}")


def _thread_count() -> int:
    raw = os.environ.get("HERALD_SIM_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _check_grid(name, grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise ValueError(f"{name} grid is empty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError(f"{name} grid must be strictly increasing")
    return grid


def sweep_grid(quantity: str, r_grid, second_grid, params: SourceParams,
               photon_number: int = 1, threads: int | None = None) -> list[SweepRow]:
    """Evaluate ``quantity`` on the product grid, outer loop ``r``.

    The second axis is ``alpha`` for ``P11``/``g2_perfect`` and ``eta`` for
    ``Pclick_n``/``g2_click``. Cell failures are recorded in ``error``.
    """
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}; expected one of {QUANTITIES}")
    r_grid = _check_grid("r", r_grid)
    second_grid = _check_grid("second-axis", second_grid)
    cells = [(float(r), float(s)) for r in r_grid for s in second_grid]
    threads = _thread_count() if threads is None else max(1, threads)

    def run(cell):
        return _cell(quantity, cell[0], cell[1], params, photon_number)

    if threads == 1 or len(cells) == 1:
        return [run(c) for c in cells]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, cells))
