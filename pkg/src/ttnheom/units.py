"""Unit conventions.

All energies, frequencies and bath parameters are handled internally in
wavenumbers (cm^-1); times on the public surface are femtoseconds.  The single
conversion constant below turns a wavenumber into an angular frequency in
rad/fs, i.e. 1 rad/fs corresponds to CM_PER_INVFS cm^-1 (this is 1/(2*pi*c)
with c in cm/fs).  Every dynamical generator is converted to rad/fs once, at
build time, so that all integrators work directly in fs.
"""

# 1 rad/fs expressed in cm^-1.
CM_PER_INVFS = 5308.837458877

# Boltzmann constant in cm^-1 per Kelvin (k_B / (h c)).
KB_CM_PER_K = 0.6950348004


def radfs(energy_cm: float) -> float:
    """Convert an energy in cm^-1 to an angular frequency in rad/fs."""
    return energy_cm / CM_PER_INVFS


def beta_cm(temperature_k: float) -> float:
    """Inverse temperature 1/(k_B T) in 1/cm^-1."""
    if temperature_k <= 0:
        raise ValueError(f"temperature must be positive, got {temperature_k}")
    return 1.0 / (KB_CM_PER_K * temperature_k)
