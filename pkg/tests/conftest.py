import numpy as np
import pytest

from ttnheom import bath, generator as G

# Thymine-in-water spectral density: one Drude-Lorentz solvent component and
# eight Brownian intramolecular modes (omega_eff, lambda) at gamma = 50.
DL = bath.SpectralComponent("drude_lorentz", 715.73, 54.45)
BROWNIAN_ROWS = [
    (1663.0, 330.0),
    (1416.0, 25.6),
    (1376.0, 186.0),
    (1243.0, 161.7),
    (1193.0, 77.3),
    (784.0, 26.5),
    (665.0, 32.0),
    (442.0, 14.9),
]


def full_bath_components():
    return [DL] + [
        bath.SpectralComponent("brownian", lam, 50.0, omega_eff=w) for w, lam in BROWNIAN_ROWS
    ]


def two_level_model(energy=0.0, coupling=1000.0):
    h = np.array([[-0.5 * energy, coupling], [coupling, 0.5 * energy]], dtype=complex)
    q = np.array([[-0.5, 0.0], [0.0, 0.5]], dtype=complex)
    return G.SystemModel(2, h, {"Q": q})


def plus_state():
    return np.full((2, 2), 0.5, dtype=complex)


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


def random_feature_pair(rng, coupling_id="Q"):
    """A conjugate pair of decaying features (a damped-oscillator shape)."""
    amp = complex(rng.uniform(50, 400), rng.uniform(-50, 50))
    g = complex(-rng.uniform(20, 80), rng.uniform(10, 60))
    return (
        bath.Feature(c=amp, c_bar=np.conj(amp), gamma_exp=g, coupling_id=coupling_id),
        bath.Feature(c=np.conj(amp), c_bar=amp, gamma_exp=np.conj(g), coupling_id=coupling_id),
    )
