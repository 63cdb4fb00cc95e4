import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as sla

ACCEPTANCE_LINES = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def _fd_operator(l_A, l_B, eps_A, eps_B, n, bloch_phase):
    period = l_A + l_B
    h = period / n
    x = (np.arange(n) + 0.5) * h
    eps = np.where(x < l_A, eps_A, eps_B)
    lap = sp.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1], format="lil", dtype=complex)
    lap[0, n - 1] = np.conj(bloch_phase)
    lap[n - 1, 0] = bloch_phase
    scale = sp.diags(1 / np.sqrt(eps))
    return scale @ (-lap.tocsr() / h**2) @ scale, scale, x, eps, h


def fd_reduced_frequencies(l_A, l_B, eps_A, eps_B, bloch_phase, n, count):
    """Lowest ``count`` values of omega L / (2 pi c) from a periodic finite-difference Helmholtz problem."""
    op, _, _, _, _ = _fd_operator(l_A, l_B, eps_A, eps_B, n, bloch_phase)
    vals = sla.eigsh(op, k=count, sigma=-1e12, which="LM", return_eigenvectors=False)
    q = np.sqrt(np.abs(np.sort(vals.real)))
    return q * (l_A + l_B) / (2 * np.pi)


def fd_reduced_frequencies_extrapolated(l_A, l_B, eps_A, eps_B, bloch_phase, count, n=4000):
    coarse = fd_reduced_frequencies(l_A, l_B, eps_A, eps_B, bloch_phase, n, count)
    fine = fd_reduced_frequencies(l_A, l_B, eps_A, eps_B, bloch_phase, 2 * n, count)
    return (4 * fine - coarse) / 3


def fd_energy_ratio(l_A, l_B, eps_A, eps_B, band, n=16000):
    """p_B / p_A at k = 0 from a finite-difference eigenvector E(x)."""
    op, scale, x, eps, h = _fd_operator(l_A, l_B, eps_A, eps_B, n, 1.0)
    vals, vecs = sla.eigsh(op.real, k=band, sigma=-1e12, which="LM")
    order = np.argsort(vals)
    q2 = vals[order][band - 1]
    e = scale.real @ vecs[:, order][:, band - 1]
    de = (np.roll(e, -1) - e) / h
    electric = eps * e**2
    magnetic = de**2 / q2
    in_a, in_a_mid = x < l_A, x + h / 2 < l_A
    total_a = electric[in_a].sum() + magnetic[in_a_mid].sum()
    total_b = electric[~in_a].sum() + magnetic[~in_a_mid].sum()
    return total_b / total_a


@pytest.fixture(scope="session")
def reference_crystal():
    from heraldsim.crystal_bands import CrystalSpec

    return CrystalSpec(5e-7, 5e-7, 1.0, 4.84, 5e-5)
