"""Named parameter sets."""

from __future__ import annotations

from heraldsim.errors import UnknownPresetError

_PRESETS = {
    # LiNbO3-like layers in vacuum spacing, pumped by a 30 mW diode
    "paper": {
        "l_A": 5.0e-7,
        "l_B": 5.0e-7,
        "eps_rel_A": 1.0,
        "eps_rel_B": 2.2**2,
        "total_length": 5.0e-5,
        "chi2_tilde": 25.2e-12,
        "radiant_flux": 0.03,
        "beam_radius": 5.0e-6,
        "refr_index_n": 1.0,
        "lambda_s": 8.45e-7,
        "alpha": 0.06,
    },
}

PRESET_NAMES = tuple(sorted(_PRESETS))


def preset(name: str) -> dict:
    """Return a fresh copy of the parameter set ``name``."""
    try:
        return dict(_PRESETS[name])
    except KeyError:
        raise UnknownPresetError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}") from None
