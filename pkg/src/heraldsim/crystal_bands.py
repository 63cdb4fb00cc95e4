"""Band structure of a 1D two-layer photonic crystal at normal incidence.

Layer A occupies ``[0, l_A)`` and layer B ``[l_A, l_A + l_B)`` of each
period ``L = l_A + l_B``. A Bloch mode of wavenumber ``k`` and angular
frequency ``omega`` exists when

    F(k, omega) = cos(L k) - cos(l_A K_A) cos(l_B K_B)
                  + (K_A^2 + K_B^2) / (2 K_A K_B) sin(l_A K_A) sin(l_B K_B) = 0,

with ``K_j = (omega / c) n_j``. Bands are numbered from 1 in ascending
``omega`` at fixed ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from heraldsim.constants import SPEED_OF_LIGHT, VACUUM_PERMITTIVITY
from heraldsim.errors import (
    BandEdgeError,
    ConvergenceError,
    DegenerateNullspaceError,
    EmptyWindowError,
    QuadratureError,
    RootCountError,
)

C = SPEED_OF_LIGHT

# scan defaults, in reduced frequency omega L / (2 pi c)
DEFAULT_CEILING = 3.0
DEFAULT_SCAN_POINTS = 2000
TANGENT_TOL = 1e-13
EDGE_TOL = 1e-9


@dataclass(frozen=True)
class CrystalSpec:
    l_A: float
    l_B: float
    eps_rel_A: float
    eps_rel_B: float
    total_length: float

    def __post_init__(self):
        for name in ("l_A", "l_B", "eps_rel_A", "eps_rel_B", "total_length"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and positive, got {value!r}")
            object.__setattr__(self, name, float(value))

    @property
    def period(self) -> float:
        return self.l_A + self.l_B

    @property
    def n_A(self) -> float:
        return math.sqrt(self.eps_rel_A)

    @property
    def n_B(self) -> float:
        return math.sqrt(self.eps_rel_B)

    @property
    def zone_edge(self) -> float:
        return math.pi / self.period

    def reduced_frequency(self, omega):
        """``omega L / (2 pi c)``."""
        return np.asarray(omega) * self.period / (2 * math.pi * C)

    def omega_from_reduced(self, x):
        return np.asarray(x) * 2 * math.pi * C / self.period


@dataclass(frozen=True)
class BandPoint:
    k: float
    omega: float
    band_index: int


@dataclass(frozen=True)
class BlochMode:
    K_A: float
    K_B: float
    c_Aplus: complex
    c_Aminus: complex
    c_Bplus: complex
    c_Bminus: complex

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([self.c_Aplus, self.c_Aminus, self.c_Bplus, self.c_Bminus])


@dataclass(frozen=True)
class EnergyRatio:
    """Share of the time-averaged field energy in layers A and B."""

    p_A: float
    p_B: float

    def __post_init__(self):
        if self.p_A < 0 or self.p_B < 0:
            raise ValueError("energy shares must be non-negative")
        total = self.p_A + self.p_B
        if total <= 0:
            raise ValueError("energy shares sum to zero")
        object.__setattr__(self, "p_A", float(self.p_A / total))
        object.__setattr__(self, "p_B", float(self.p_B / total))

    @property
    def ratio(self) -> float:
        """``p_B / p_A``, i.e. the ``x`` in ``P_A : P_B = 1 : x``."""
        return self.p_B / self.p_A


@dataclass(frozen=True)
class FrequencyWindow:
    k_range: tuple[float, float]
    delta_omega: float
    delta_nu: float
    omega_edge: float


# ---------------------------------------------------------------------------
# dispersion relation


def _impedance_factor(spec: CrystalSpec) -> float:
    # (K_A^2 + K_B^2) / (2 K_A K_B) does not depend on omega; writing it in
    # refractive indices also gives the omega -> 0 limit directly.
    return (spec.eps_rel_A + spec.eps_rel_B) / (2 * spec.n_A * spec.n_B)


def _residual_terms(k, omega, spec):
    k = np.asarray(k, dtype=float)
    omega = np.asarray(omega, dtype=float)
    da = spec.l_A * spec.n_A / C
    db = spec.l_B * spec.n_B / C
    return k, da, db, da * omega, db * omega, _impedance_factor(spec) - 1.0


def dispersion_residual(k, omega, spec: CrystalSpec):
    """``F(k, omega)``; zero on the band structure. Broadcasts over arrays.

    Evaluated in half-angle form, using ``cos a cos b - xi sin a sin b =
    cos(a + b) - (xi - 1) sin a sin b``, so that ``cos(L k)`` and the layer
    term are never subtracted near +-1 (large cancellation close to
    ``omega = 0`` and to degenerate band crossings).
    """
    k, _, _, a, b, xi_m1 = _residual_terms(k, omega, spec)
    half = 0.5 * spec.period * k
    coupling = xi_m1 * np.sin(a) * np.sin(b)
    near_center = np.cos(2 * half) >= 0
    # cos(Lk) - f = 2 sin^2((a+b)/2) - 2 sin^2(Lk/2) + coupling
    centre = 2 * np.sin(0.5 * (a + b)) ** 2 - 2 * np.sin(half) ** 2 + coupling
    # cos(Lk) - f = 2 cos^2(Lk/2) - 2 cos^2((a+b)/2) + coupling
    edge = 2 * np.cos(half) ** 2 - 2 * np.cos(0.5 * (a + b)) ** 2 + coupling
    out = np.where(near_center, centre, edge)
    return out if out.ndim else float(out)


def residual_partials(k, omega, spec: CrystalSpec):
    """Analytic ``(dF/dk, dF/domega)``."""
    k, da, db, a, b, xi_m1 = _residual_terms(k, omega, spec)
    f_k = -spec.period * np.sin(spec.period * k)
    f_w = (da + db) * np.sin(a + b) + xi_m1 * (da * np.cos(a) * np.sin(b) + db * np.sin(a) * np.cos(b))
    if f_k.ndim == 0 and f_w.ndim == 0:
        return float(f_k), float(f_w)
    return f_k, f_w


def _polish(k, w, spec, lo, hi):
    """Newton steps on a bracketed simple root, kept only if they help."""
    f = dispersion_residual(k, w, spec)
    for _ in range(3):
        _, f_w = residual_partials(k, w, spec)
        if f_w == 0:
            break
        w_new = w - f / f_w
        if not lo <= w_new <= hi:
            break
        f_new = dispersion_residual(k, w_new, spec)
        if abs(f_new) >= abs(f):
            break
        w, f = w_new, f_new
    return w


def dispersion_roots(k: float, spec: CrystalSpec, ceiling: float = DEFAULT_CEILING,
                     scan_points: int = DEFAULT_SCAN_POINTS) -> np.ndarray:
    """All roots ``omega`` of ``F(k, .)`` up to ``ceiling`` (reduced units), ascending.

    Sign changes on the scan grid are bisected and Newton-polished. Extrema
    of ``F`` between samples are located from the analytic ``dF/domega``; an
    extremum touching zero is a double root (two degenerate bands) and is
    returned twice, one dipping across zero yields two simple roots.
    """
    w_top = float(spec.omega_from_reduced(ceiling))
    ws = np.linspace(0.0, w_top, scan_points)
    f = dispersion_residual(k, ws, spec)
    _, fw = residual_partials(k, ws, spec)
    xtol = 1e-300  # rely on rtol: roots near omega = 0 need relative precision
    fun = lambda w: dispersion_residual(k, w, spec)  # noqa: E731
    dfun = lambda w: residual_partials(k, w, spec)[1]  # noqa: E731

    roots = []
    if f[0] == 0.0:
        roots.append(0.0)
    for i in range(scan_points - 1):
        lo, hi = ws[i], ws[i + 1]
        if i > 0 and f[i] == 0.0:
            roots.extend([lo] if f[i - 1] * f[i + 1] < 0 else [lo, lo])
            continue
        if f[i] * f[i + 1] < 0:
            w = brentq(fun, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
            roots.append(_polish(k, w, spec, lo, hi))
        elif fw[i] * fw[i + 1] < 0 and f[i] * f[i + 1] > 0:
            w_ext = brentq(dfun, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
            f_ext = fun(w_ext)
            if np.sign(f_ext) == -np.sign(f[i]):
                roots.append(brentq(fun, lo, w_ext, xtol=xtol, rtol=4 * np.finfo(float).eps))
                roots.append(brentq(fun, w_ext, hi, xtol=xtol, rtol=4 * np.finfo(float).eps))
            elif abs(f_ext) <= TANGENT_TOL:
                roots.extend([w_ext, w_ext])
    return np.sort(np.asarray(roots, dtype=float))


def band_frequency(spec: CrystalSpec, band_index: int, k: float, **scan) -> float:
    if band_index < 1:
        raise ValueError("band_index counts from 1")
    roots = dispersion_roots(k, spec, **scan)
    if roots.size < band_index:
        raise RootCountError(f"only {roots.size} roots below the scan ceiling at k={k:g}")
    return float(roots[band_index - 1])


def solve_bands(spec: CrystalSpec, k_samples: int, n_bands: int, **scan) -> list[list[BandPoint]]:
    """Lowest ``n_bands`` bands on a uniform grid over ``[0, pi/L]``.

    Returns one list of :class:`BandPoint` per band, ordered by ``k``.
    """
    if k_samples < 2:
        raise ValueError("k_samples must be at least 2")
    if n_bands < 1:
        raise ValueError("n_bands must be at least 1")
    ks = np.linspace(0.0, spec.zone_edge, k_samples)
    bands = [[] for _ in range(n_bands)]
    for k in ks:
        roots = dispersion_roots(float(k), spec, **scan)
        if roots.size < n_bands:
            raise RootCountError(
                f"found {roots.size} roots below the scan ceiling at k={k:g}, need {n_bands}"
            )
        for j in range(n_bands):
            bands[j].append(BandPoint(float(k), float(roots[j]), j + 1))
    return bands


def group_velocity(spec: CrystalSpec, point: BandPoint) -> float:
    """``|d omega / dk|`` from implicit differentiation of ``F``."""
    f_k, f_w = residual_partials(point.k, point.omega, spec)
    # dimensionless measure of dF/domega
    if abs(f_w * max(point.omega, spec.omega_from_reduced(1.0))) <= EDGE_TOL:
        raise BandEdgeError(
            f"dF/domega vanishes at k={point.k:g}, omega={point.omega:g} (degenerate band point)"
        )
    return abs(f_k / f_w)


# ---------------------------------------------------------------------------
# Bloch modes


def bloch_matrix(k: float, omega: float, spec: CrystalSpec) -> np.ndarray:
    """Interface-matching matrix ``M`` acting on ``(C_A+, C_A-, C_B+, C_B-)``.

    Wavenumbers enter in units of ``1/L`` so that all rows have comparable
    scale; this multiplies ``det M`` by a constant only.
    """
    ka = spec.n_A * omega / C
    kb = spec.n_B * omega / C
    p = np.exp(1j * ka * spec.l_A)
    q = np.exp(1j * k * spec.period)
    r = np.exp(1j * kb * spec.l_B)
    ta, tb = ka * spec.period, kb * spec.period
    return np.array(
        [
            [1, 1, -1, -1],
            [ta, -ta, -tb, tb],
            [p, 1 / p, -q / r, -q * r],
            [ta * p, -ta / p, -tb * q / r, tb * q * r],
        ],
        dtype=complex,
    )


def bloch_determinant(k: float, omega: float, spec: CrystalSpec) -> complex:
    return complex(np.linalg.det(bloch_matrix(k, omega, spec)))


def bloch_coefficients(spec: CrystalSpec, point: BandPoint, tol: float = 1e-8) -> BlochMode:
    """Unit-norm null vector of ``M``; global phase makes ``C_A+`` real positive.

    When ``C_A+`` vanishes (a pure backward wave) the first non-negligible
    coefficient is made real positive instead.
    """
    m = bloch_matrix(point.k, point.omega, spec)
    _, s, vh = np.linalg.svd(m)
    if s[-2] <= tol * s[0]:
        raise DegenerateNullspaceError(
            f"two near-zero singular values at k={point.k:g} ({s[-2]:.2e}, {s[-1]:.2e}); perturb k"
        )
    v = vh[-1].conj()
    pivot = next(i for i in range(4) if abs(v[i]) > 1e-12)
    v = v * np.exp(-1j * np.angle(v[pivot]))
    v /= np.linalg.norm(v)
    v[pivot] = abs(v[pivot])
    resid = float(np.linalg.norm(m @ v))
    if resid > tol:
        raise ConvergenceError(f"|M v| = {resid:.2e}: point is not on a band")
    ka = spec.n_A * point.omega / C
    kb = spec.n_B * point.omega / C
    return BlochMode(ka, kb, complex(v[0]), complex(v[1]), complex(v[2]), complex(v[3]))


def _layer_energy(mode_c: tuple[complex, complex], K: float, eps_rel: float, omega: float,
                  x0: float, x1: float, order: int) -> float:
    """Time-averaged ``(eps/(eps0 c^2)) E^2 + B^2`` integrated over ``[x0, x1]``."""
    nodes, weights = leggauss(order)
    x = 0.5 * (x1 - x0) * nodes + 0.5 * (x1 + x0)
    cp, cm = mode_c
    e_amp = cp * np.exp(1j * K * x) + cm * np.exp(-1j * K * x)
    b_amp = (K / omega) * (cp * np.exp(1j * K * x) - cm * np.exp(-1j * K * x))
    # <Re(u e^{-iwt})^2>_t = |u|^2 / 2
    eps = eps_rel * VACUUM_PERMITTIVITY
    density = eps / (VACUUM_PERMITTIVITY * C**2) * 0.5 * np.abs(e_amp) ** 2 + 0.5 * np.abs(b_amp) ** 2
    return float(0.5 * (x1 - x0) * np.dot(weights, density))


def energy_ratio(spec: CrystalSpec, mode: BlochMode, omega: float, order: int = 64,
                 rtol: float = 1e-9) -> EnergyRatio:
    """Share of field energy per layer for one period of a Bloch mode.

    Layer B is integrated over ``[-l_B, 0]``, where its coefficients are
    defined; by the Bloch condition this carries the same energy as
    ``[l_A, l_A + l_B]``.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")

    def shares(n):
        e_a = _layer_energy((mode.c_Aplus, mode.c_Aminus), mode.K_A, spec.eps_rel_A, omega, 0.0, spec.l_A, n)
        e_b = _layer_energy((mode.c_Bplus, mode.c_Bminus), mode.K_B, spec.eps_rel_B, omega, -spec.l_B, 0.0, n)
        return e_a, e_b

    a1, b1 = shares(order)
    a2, b2 = shares(2 * order)
    for coarse, fine in ((a1, a2), (b1, b2)):
        if abs(coarse - fine) > rtol * abs(fine):
            raise QuadratureError(f"Gauss-Legendre {order} vs {2 * order} points differ: {coarse!r} vs {fine!r}")
    return EnergyRatio(a2, b2)


def band_point_energy_ratio(spec: CrystalSpec, band_index: int, k: float = 0.0) -> tuple[BandPoint, EnergyRatio]:
    """Energy ratio on a band at ``k``; falls back to ``k = 1e-6 pi/L`` if degenerate."""
    for k_try in (k, k + 1e-6 * spec.zone_edge):
        point = BandPoint(k_try, band_frequency(spec, band_index, k_try), band_index)
        try:
            mode = bloch_coefficients(spec, point)
        except DegenerateNullspaceError:
            continue
        return point, energy_ratio(spec, mode, point.omega)
    raise DegenerateNullspaceError(f"band {band_index} degenerate near k={k:g}")


# ---------------------------------------------------------------------------
# tuning window


def frequency_window(spec: CrystalSpec, band_index: int, vg_ceiling: float,
                     k_samples: int = 200, **scan) -> FrequencyWindow:
    """Largest ``[0, k*]`` on a band with group velocity at most ``vg_ceiling``.

    Samples are geometric in ``k`` from ``1e-6 pi/L`` so the slow-light region
    near ``k = 0`` is resolved; the crossing is refined by bisection. The
    ``k = pi/L`` edge is never used as a window start.
    """
    if not vg_ceiling > 0:
        raise EmptyWindowError(f"group-velocity ceiling must be positive, got {vg_ceiling!r}")
    omega_0 = band_frequency(spec, band_index, 0.0, **scan)
    ks = np.geomspace(1e-6, 1.0, k_samples)[:-1] * spec.zone_edge

    def excess(k):
        point = BandPoint(float(k), band_frequency(spec, band_index, float(k), **scan), band_index)
        return group_velocity(spec, point) - vg_ceiling

    slack = 1e-9 * vg_ceiling
    prev = 0.0
    k_star = spec.zone_edge
    for i, k in enumerate(ks):
        if excess(k) > slack:
            if i == 0:
                raise EmptyWindowError(
                    f"group velocity exceeds {vg_ceiling:g} m/s already at k={k:g} on band {band_index}"
                )
            k_star = brentq(excess, prev, k, xtol=1e-14 * spec.zone_edge)
            break
        prev = k
    omega_star = band_frequency(spec, band_index, k_star, **scan)
    d_omega = abs(omega_star - omega_0)
    return FrequencyWindow((0.0, float(k_star)), d_omega, d_omega / (2 * math.pi), omega_0)
