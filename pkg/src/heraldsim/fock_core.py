"""Truncated Fock-space states and operators for one and two bosonic modes.

Closed-form matrix elements of the displacement and two-mode squeezing
operators are evaluated in log space (factorials reach ~1e280 at the cutoffs
used here); phases are tracked separately. :func:`two_mode_oracle`
exponentiates the truncated generators directly and serves as the
independent reference for every closed form.

Conventions::

    D(delta)     = exp(delta a^+ - delta* a)
    S(zeta)      = exp(-zeta/2 a^+2 + zeta*/2 a^2)
    S_ab(zeta)   = exp(-zeta a^+ b^+ + zeta* a b)
    B(delta_bs)  = exp[(pi/4)(e^{i delta_bs} a^+ b - e^{-i delta_bs} a b^+)]

with ``zeta = r exp(i phi)``. Two-mode amplitude arrays are indexed
``amp[n_a, n_b]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from numbers import Complex, Real

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.special import gammaln

from heraldsim.errors import ConvergenceError, TruncationError
from heraldsim.expm import expm

TWO_PI = 2.0 * math.pi

# Cutoffs chosen so the geometric tail tanh(r)**(2n) is far below 1e-8.
_DEFAULT_NMAX = ((1.0, 64), (1.5, 160))


@dataclass(frozen=True)
class FockCutoff:
    """Photon-number cap per mode and the tolerated probability leakage."""

    n_max: int = 64
    tail_tol: float = 1e-8

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max!r}")
        if not self.tail_tol > 0:
            raise ValueError(f"tail_tol must be positive, got {self.tail_tol!r}")
        object.__setattr__(self, "n_max", int(self.n_max))

    def doubled(self) -> FockCutoff:
        return FockCutoff(2 * self.n_max, self.tail_tol)

    @classmethod
    def for_squeezing(cls, r: float, tail_tol: float = 1e-8) -> FockCutoff:
        """Default starting cutoff for squeezing magnitude ``r``."""
        for r_limit, n_max in _DEFAULT_NMAX:
            if r <= r_limit:
                return cls(n_max, tail_tol)
        # geometric tail tanh(r)^(2n) below tail_tol**2, with headroom
        t2 = math.tanh(r) ** 2
        n = int(math.ceil(2.0 * math.log(tail_tol) / math.log(t2))) + 16
        return cls(max(n, 160), tail_tol)


@dataclass(frozen=True)
class SqueezeSpec:
    """Squeezing parameter ``zeta = r exp(i phi)``; ``phi`` is kept in [0, 2pi)."""

    r: float
    phi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r >= 0):
            raise ValueError(f"squeezing magnitude must be finite and >= 0, got {self.r!r}")
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)

    @property
    def zeta(self) -> complex:
        return self.r * complex(math.cos(self.phi), math.sin(self.phi))

    @classmethod
    def from_zeta(cls, zeta: complex) -> SqueezeSpec:
        zeta = complex(zeta)
        return cls(abs(zeta), math.atan2(zeta.imag, zeta.real))


@dataclass(frozen=True)
class DisplaceSpec:
    """Complex displacement amplitude."""

    delta: complex

    def __post_init__(self):
        d = complex(self.delta)
        if not (math.isfinite(d.real) and math.isfinite(d.imag)):
            raise ValueError(f"displacement must be finite, got {self.delta!r}")
        object.__setattr__(self, "delta", d)


@dataclass(frozen=True)
class BeamSplitterSpec:
    """50-50 beam splitter; only the phase ``delta_bs`` is free."""

    delta_bs: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.delta_bs):
            raise ValueError(f"beam-splitter phase must be finite, got {self.delta_bs!r}")
        object.__setattr__(self, "delta_bs", float(self.delta_bs))

    @property
    def mixing_angle(self) -> float:
        return math.pi / 4


@dataclass(frozen=True)
class SingleModeAmplitudes:
    amp: np.ndarray

    def __post_init__(self):
        amp = np.array(self.amp, dtype=complex)
        amp.setflags(write=False)
        if amp.ndim != 1:
            raise ValueError("single-mode amplitudes must be one-dimensional")
        if np.sum(np.abs(amp) ** 2) > 1 + 1e-12:
            raise ValueError("amplitudes have norm greater than one")
        object.__setattr__(self, "amp", amp)

    @property
    def n_max(self) -> int:
        return self.amp.shape[0] - 1

    @property
    def deficit(self) -> float:
        return float(1.0 - np.sum(np.abs(self.amp) ** 2))


@dataclass(frozen=True)
class TwoModeAmplitudes:
    amp: np.ndarray
    cutoff: FockCutoff = field(default_factory=FockCutoff)

    def __post_init__(self):
        amp = np.array(self.amp, dtype=complex)
        amp.setflags(write=False)
        if amp.ndim != 2 or amp.shape[0] != amp.shape[1]:
            raise ValueError("two-mode amplitudes must be a square matrix")
        if np.sum(np.abs(amp) ** 2) > 1 + 1e-12:
            raise ValueError("amplitudes have norm greater than one")
        object.__setattr__(self, "amp", amp)

    @property
    def n_max(self) -> int:
        return self.amp.shape[0] - 1

    @property
    def deficit(self) -> float:
        """Probability missing from the truncated table, ``1 - sum |amp|^2``."""
        return float(1.0 - np.sum(np.abs(self.amp) ** 2))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amp) ** 2


def _as_cutoff(cutoff) -> FockCutoff:
    if isinstance(cutoff, FockCutoff):
        return cutoff
    return FockCutoff(int(cutoff))


def _xlogy(k, x):
    """``k * log(x)`` elementwise with the convention ``0 * log(0) = 0``."""
    k = np.asarray(k, dtype=float)
    if x > 0:
        return k * math.log(x)
    return np.where(k == 0, 0.0, -np.inf)


# ---------------------------------------------------------------------------
# closed forms


def displacement_column(delta, cutoff) -> SingleModeAmplitudes:
    """Amplitudes ``<m|D(delta)|0>`` for ``m = 0..n_max`` (a coherent state)."""
    if not isinstance(delta, DisplaceSpec):
        delta = DisplaceSpec(delta)
    cutoff = _as_cutoff(cutoff)
    d = delta.delta
    m = np.arange(cutoff.n_max + 1)
    log_mag = -0.5 * abs(d) ** 2 + _xlogy(m, abs(d)) - 0.5 * gammaln(m + 1)
    amp = np.exp(log_mag) * np.exp(1j * np.angle(d) * m)
    if abs(amp[-1]) ** 2 > cutoff.tail_tol:
        raise TruncationError(
            f"|<{cutoff.n_max}|D({d})|0>|^2 = {abs(amp[-1])**2:.3e} exceeds tail_tol"
        )
    return SingleModeAmplitudes(amp)


def two_mode_squeeze_element(n_a: int, n_b: int, m_a: int, m_b: int, sq: SqueezeSpec) -> complex:
    """Matrix element ``<n_a, n_b| S_ab(zeta) |m_a, m_b>`` as a finite double sum.

    The Kronecker constraints leave one free index ``n`` with
    ``m = m_a - n_a + n``; the element vanishes unless
    ``n_a - n_b == m_a - m_b``.
    """
    if min(n_a, n_b, m_a, m_b) < 0:
        raise ValueError("photon numbers must be non-negative")
    if n_a - n_b != m_a - m_b:
        return 0j
    if not isinstance(sq, SqueezeSpec):
        sq = SqueezeSpec.from_zeta(sq)
    r, phi = sq.r, sq.phi
    t = math.tanh(r)
    log_sech = -math.log(math.cosh(r))
    half_log_fact = 0.5 * (
        gammaln(n_a + 1) + gammaln(n_b + 1) + gammaln(m_a + 1) + gammaln(m_b + 1)
    )

    total = 0j
    for n in range(min(n_a, n_b) + 1):
        m = m_a - n_a + n
        if m < 0 or m > min(m_a, m_b):
            continue
        power = n + m
        if t == 0.0 and power > 0:
            continue
        log_mag = (
            (power * math.log(t) if power else 0.0)
            + (m_a + m_b - 2 * m + 1) * log_sech
            + half_log_fact
            - gammaln(n + 1)
            - gammaln(m + 1)
            - gammaln(n_a - n + 1)
            - gammaln(n_b - n + 1)
        )
        phase = (n - m) * phi + (math.pi if n % 2 else 0.0)
        total += math.exp(log_mag) * complex(math.cos(phase), math.sin(phase))
    return total


def _coherent_pair_series(beta: complex, sq: SqueezeSpec, tol: float = 1e-18) -> complex:
    """Sum over the contracted index ``m`` of the final-state double sum.

    With ``m_a = n_a - n + m`` and ``m_b = n_b - n + m`` the sech power and
    the ``sqrt(m_a! m_b!)`` factors cancel against the displacement columns,
    leaving a series in ``x = -beta^2 e^{-i phi} tanh r`` alone.
    """
    x = -(beta**2) * np.exp(-1j * sq.phi) * math.tanh(sq.r)
    total = 0j
    term = 1 + 0j
    m = 0
    while True:
        total += term
        m += 1
        term = term * x / m
        if abs(term) <= tol * max(abs(total), 1e-300) and m > abs(x):
            return total
        if m > 10_000:
            raise ConvergenceError("pair series did not converge")


def _final_state_block(alpha: float, sq: SqueezeSpec, n_a_max: int, n_b_max: int) -> np.ndarray:
    """Amplitudes ``mu(n_a, n_b)`` of ``S_ab(zeta) D_a(beta) D_b(-beta)|0,0>``."""
    beta = 0.5 * alpha * (1 - 1j)
    r = sq.r
    t = math.tanh(r)
    log_sech = -math.log(math.cosh(r))
    arg_beta = float(np.angle(beta))
    abs_beta = abs(beta)

    prefactor = math.exp(-(abs_beta**2) + log_sech) * _coherent_pair_series(beta, sq)

    na = np.arange(n_a_max + 1)[:, None]
    nb = np.arange(n_b_max + 1)[None, :]
    half_log_fact = 0.5 * (gammaln(na + 1) + gammaln(nb + 1))
    # phase of (-e^{i phi} t) per unit n, and of beta / -beta per unit power
    step_phase_n = math.pi + sq.phi
    out = np.zeros((n_a_max + 1, n_b_max + 1), dtype=complex)
    for n in range(min(n_a_max, n_b_max) + 1):
        if n > 0 and t == 0.0:
            break
        ka = na - n
        kb = nb - n
        valid = (ka >= 0) & (kb >= 0)
        ka_c = np.where(valid, ka, 0)
        kb_c = np.where(valid, kb, 0)
        k_tot = ka_c + kb_c
        log_mag = (
            (n * math.log(t) if n else 0.0)
            + k_tot * log_sech
            + _xlogy(k_tot, abs_beta)
            + half_log_fact
            - gammaln(n + 1)
            - gammaln(ka_c + 1)
            - gammaln(kb_c + 1)
        )
        phase = n * step_phase_n + k_tot * arg_beta + kb_c * math.pi
        term = np.exp(log_mag + 1j * phase)
        out += np.where(valid, term, 0)
    return prefactor * out


def _check_alpha(alpha) -> float:
    if isinstance(alpha, Complex) and not isinstance(alpha, Real):
        if alpha.imag != 0:
            raise ValueError(f"alpha must be real and non-negative, got {alpha!r}")
        alpha = alpha.real
    alpha = float(alpha)
    if not (math.isfinite(alpha) and alpha >= 0):
        raise ValueError(f"alpha must be real and non-negative, got {alpha!r}")
    return alpha


def prepare_final_state(alpha: float, sq: SqueezeSpec, cutoff=None) -> TwoModeAmplitudes:
    """Two-mode state ``S_ab(zeta) D_a(beta) D_b(-beta)|0,0>``, ``beta = alpha(1-i)/2``.

    With an explicit ``cutoff`` a :class:`TruncationError` is raised when the
    normalization deficit exceeds ``cutoff.tail_tol``. With ``cutoff=None``
    the default cutoff for ``sq.r`` is doubled until the deficit is met.
    """
    alpha = _check_alpha(alpha)
    if not isinstance(sq, SqueezeSpec):
        sq = SqueezeSpec.from_zeta(sq)
    adaptive = cutoff is None
    cutoff = FockCutoff.for_squeezing(sq.r) if adaptive else _as_cutoff(cutoff)
    while True:
        amp = _final_state_block(alpha, sq, cutoff.n_max, cutoff.n_max)
        deficit = 1.0 - float(np.sum(np.abs(amp) ** 2))
        if deficit <= cutoff.tail_tol:
            return TwoModeAmplitudes(amp, cutoff)
        if not adaptive or cutoff.n_max >= 4096:
            raise TruncationError(
                f"normalization deficit {deficit:.3e} exceeds tail_tol "
                f"{cutoff.tail_tol:.1e} at n_max={cutoff.n_max}"
            )
        cutoff = cutoff.doubled()


def final_state_amplitude(n_a: int, n_b: int, alpha: float, sq: SqueezeSpec) -> complex:
    """Single amplitude ``mu(n_a, n_b)`` without building the full table."""
    alpha = _check_alpha(alpha)
    if not isinstance(sq, SqueezeSpec):
        sq = SqueezeSpec.from_zeta(sq)
    block = _final_state_block(alpha, sq, n_a, n_b)
    return complex(block[n_a, n_b])


# ---------------------------------------------------------------------------
# brute-force oracle


def annihilation(n_max: int) -> sp.csr_matrix:
    """Truncated annihilation operator on ``|0>..|n_max>``."""
    return sp.diags(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1, format="csr")


GENERATORS = ("displace_a", "displace_b", "squeeze_a", "squeeze_b", "squeeze_ab", "beamsplitter")


def _param_value(generator_id, params):
    if isinstance(params, DisplaceSpec):
        return params.delta
    if isinstance(params, SqueezeSpec):
        return params.zeta
    if isinstance(params, BeamSplitterSpec):
        return params.delta_bs
    if generator_id == "beamsplitter":
        return float(params)
    return complex(params)


def two_mode_generator(generator_id: str, params, n_max: int) -> sp.csr_matrix:
    """Anti-Hermitian generator ``G`` (so that ``U = exp(G)``) on the product basis.

    Basis index of ``|n_a, n_b>`` is ``n_a * (n_max + 1) + n_b``.
    """
    if generator_id not in GENERATORS:
        raise ValueError(f"unknown generator {generator_id!r}; expected one of {GENERATORS}")
    p = _param_value(generator_id, params)
    a1 = annihilation(n_max)
    eye = sp.identity(n_max + 1, format="csr")
    a = sp.kron(a1, eye, format="csr")
    b = sp.kron(eye, a1, format="csr")
    ad, bd = a.conj().T.tocsr(), b.conj().T.tocsr()

    if generator_id == "displace_a":
        g = p * ad - np.conj(p) * a
    elif generator_id == "displace_b":
        g = p * bd - np.conj(p) * b
    elif generator_id == "squeeze_a":
        g = -0.5 * p * (ad @ ad) + 0.5 * np.conj(p) * (a @ a)
    elif generator_id == "squeeze_b":
        g = -0.5 * p * (bd @ bd) + 0.5 * np.conj(p) * (b @ b)
    elif generator_id == "squeeze_ab":
        g = -p * (ad @ bd) + np.conj(p) * (a @ b)
    else:
        g = (math.pi / 4) * (np.exp(1j * p) * (ad @ b) - np.exp(-1j * p) * (a @ bd))
    return sp.csr_matrix(g, dtype=complex)


class TruncatedUnitary:
    """``exp(G)`` for a sparse truncated generator, computed block by block.

    The generator decouples into sectors (connected components of its
    sparsity graph, e.g. fixed ``n_a - n_b`` for two-mode squeezing); each
    sector is exponentiated densely on first use.
    """

    def __init__(self, generator: sp.spmatrix, n_max: int):
        self.generator = sp.csr_matrix(generator)
        self.n_max = n_max
        self.dim = self.generator.shape[0]
        pattern = (abs(self.generator) + sp.identity(self.dim)).tocsr()
        _, self._labels = connected_components(pattern, directed=False)
        order = np.argsort(self._labels, kind="stable")
        sorted_labels = self._labels[order]
        bounds = np.flatnonzero(np.diff(sorted_labels)) + 1
        self._members = dict(
            zip(sorted_labels[np.r_[0, bounds]], np.split(order, bounds))
        )
        self._blocks = {}

    def _block(self, label):
        if label not in self._blocks:
            idx = self._members[label]
            g = self.generator[idx][:, idx].toarray()
            self._blocks[label] = (idx, expm(g))
        return self._blocks[label]

    def _index(self, n_a, n_b):
        if not (0 <= n_a <= self.n_max and 0 <= n_b <= self.n_max):
            raise IndexError(f"({n_a}, {n_b}) outside cutoff {self.n_max}")
        return n_a * (self.n_max + 1) + n_b

    def element(self, n_a, n_b, m_a, m_b) -> complex:
        i, j = self._index(n_a, n_b), self._index(m_a, m_b)
        if self._labels[i] != self._labels[j]:
            return 0j
        idx, u = self._block(self._labels[j])
        pos = np.searchsorted(idx, [i, j])
        return complex(u[pos[0], pos[1]])

    def apply(self, state) -> np.ndarray:
        """Apply to a two-mode amplitude array of shape ``(n_max+1, n_max+1)``."""
        vec = np.asarray(state, dtype=complex).reshape(-1)
        if vec.shape[0] != self.dim:
            raise ValueError(f"state has {vec.shape[0]} entries, expected {self.dim}")
        out = np.zeros_like(vec)
        for label in np.unique(self._labels[np.flatnonzero(vec)]):
            idx, u = self._block(label)
            out[idx] = u @ vec[idx]
        return out.reshape(self.n_max + 1, self.n_max + 1)

    def dense(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for label in self._members:
            idx, u = self._block(label)
            out[np.ix_(idx, idx)] = u
        return out

    def adjoint(self) -> TruncatedUnitary:
        return TruncatedUnitary(-self.generator, self.n_max)

    def __array__(self, dtype=None, copy=None):
        d = self.dense()
        return d if dtype is None else d.astype(dtype)


def two_mode_oracle(generator_id: str, params, cutoff) -> TruncatedUnitary:
    """Brute-force ``exp(G)`` of a truncated two-mode generator."""
    n_max = _as_cutoff(cutoff).n_max
    return TruncatedUnitary(two_mode_generator(generator_id, params, n_max), n_max)


def oracle_elements(generator_id: str, params, indices, cutoff, tol: float = 1e-8) -> np.ndarray:
    """Oracle matrix elements ``<n_a,n_b|U|m_a,m_b>`` with a doubled-cutoff check.

    ``indices`` is a sequence of ``(n_a, n_b, m_a, m_b)`` tuples. Values are
    returned from the doubled cutoff; :class:`ConvergenceError` is raised if
    any element moved by more than ``tol`` under doubling.
    """
    n_max = _as_cutoff(cutoff).n_max
    indices = [tuple(int(v) for v in ix) for ix in indices]
    largest = max(max(ix) for ix in indices)
    if n_max < 2 * largest:
        raise ValueError(f"oracle cutoff {n_max} must be at least twice the largest index {largest}")
    coarse = two_mode_oracle(generator_id, params, n_max)
    fine = two_mode_oracle(generator_id, params, 2 * n_max)
    a = np.array([coarse.element(*ix) for ix in indices])
    b = np.array([fine.element(*ix) for ix in indices])
    worst = float(np.max(np.abs(a - b)))
    if worst > tol:
        raise ConvergenceError(
            f"{generator_id}: doubling cutoff {n_max}->{2 * n_max} moved an element by {worst:.2e}"
        )
    return b


def oracle_final_state(alpha: float, sq: SqueezeSpec, n_max: int) -> np.ndarray:
    """Final state built by exponentiating each truncated generator in turn."""
    alpha = _check_alpha(alpha)
    beta = 0.5 * alpha * (1 - 1j)
    vac = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    vac[0, 0] = 1.0
    state = two_mode_oracle("displace_b", -beta, n_max).apply(vac)
    state = two_mode_oracle("displace_a", beta, n_max).apply(state)
    return two_mode_oracle("squeeze_ab", sq, n_max).apply(state)
