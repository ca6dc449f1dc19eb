"""Bath correlation functions and their complex-exponential decomposition.

A bath is described by a sum of model spectral density components (a
Drude-Lorentz solvent term and/or underdamped Brownian oscillators).  The
correlation function

    C(t) = int_0^inf J(w) (coth(w / 2 k_B T) cos(w t) - i sin(w t)) dw

is decomposed into features c_k exp(gamma_k t) by contour integration, with
the thermal coth factor replaced by its [N-1/N] Pade approximant.  Each pole
of J contributes a high-temperature feature; each Pade pole contributes one
shared low-temperature correction feature.  ``bcf_quadrature`` evaluates the
same integral by adaptive quadrature with the exact coth and serves as the
independent oracle for the decomposition.

Conventions: spectral parameters in cm^-1, times in fs, C(t) in cm^-2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.linalg import eigh_tridiagonal

from .units import CM_PER_INVFS, beta_cm

DRUDE_LORENTZ = "drude_lorentz"
BROWNIAN = "brownian"


class QuadratureError(RuntimeError):
    """Raised when the oracle quadrature cannot reach its target accuracy."""

    def __init__(self, message: str, estimate: float):
        super().__init__(f"{message} (achieved error estimate {estimate:.3e})")
        self.estimate = estimate


@dataclass(frozen=True)
class SpectralComponent:
    """One additive component of the spectral density.

    Parameters
    ----------
    kind : {"drude_lorentz", "brownian"}
    lam : float
        Reorganization energy (cm^-1), > 0.
    gamma : float
        Relaxation / damping rate (cm^-1), > 0.
    omega_eff : float, optional
        Effective damped frequency of a Brownian oscillator (cm^-1), > 0.
        The natural frequency is then sqrt(omega_eff^2 + gamma^2).
    """

    kind: str
    lam: float
    gamma: float
    omega_eff: float | None = None

    def __post_init__(self):
        if self.kind not in (DRUDE_LORENTZ, BROWNIAN):
            raise ValueError(f"unknown spectral component kind {self.kind!r}")
        if self.lam <= 0:
            raise ValueError("reorganization energy must be positive")
        if self.gamma <= 0:
            raise ValueError("damping rate must be positive")
        if self.kind == BROWNIAN:
            if self.omega_eff is None or self.omega_eff <= 0:
                raise ValueError(
                    "brownian oscillator needs a real positive effective "
                    "frequency: omega_b^2 - gamma_b^2 > 0"
                )
        elif self.omega_eff is not None:
            raise ValueError("omega_eff only applies to brownian components")

    @property
    def omega_nat(self) -> float:
        """Natural (undamped) frequency of a Brownian oscillator."""
        if self.kind != BROWNIAN:
            raise AttributeError("omega_nat only defined for brownian components")
        return float(np.hypot(self.omega_eff, self.gamma))

    def density(self, omega):
        """J(omega); accepts real arrays or complex scalars (continuation)."""
        omega = np.asarray(omega, dtype=complex) if np.iscomplexobj(omega) else omega
        if self.kind == DRUDE_LORENTZ:
            return (2.0 * self.lam / np.pi) * self.gamma * omega / (omega**2 + self.gamma**2)
        w2 = self.omega_nat**2
        return (
            (4.0 * self.lam / np.pi)
            * self.gamma
            * w2
            * omega
            / ((omega**2 - w2) ** 2 + 4.0 * self.gamma**2 * omega**2)
        )


@dataclass(frozen=True)
class Feature:
    """One complex-exponential term of the correlation function.

    C(t) picks up ``c * exp(gamma_exp * t)`` and C*(t) picks up
    ``c_bar * exp(gamma_exp * t)``; amplitudes in cm^-2, exponent in cm^-1
    with Re(gamma_exp) < 0.
    """

    c: complex
    c_bar: complex
    gamma_exp: complex
    coupling_id: str = "Q"

    def __post_init__(self):
        if self.gamma_exp.real >= 0:
            raise ValueError(f"feature exponent must decay, got {self.gamma_exp}")


@dataclass(frozen=True)
class FeatureSet:
    """Ordered, immutable collection of bath features.

    Ordering is deterministic: the Drude-Lorentz feature first, Brownian
    pairs in descending effective frequency (each pair adjacent), then the
    pooled low-temperature corrections.
    """

    features: tuple[Feature, ...]
    temperature: float
    n_pade: int

    def __len__(self) -> int:
        return len(self.features)

    def reconstruct(self, t_fs, conjugate: bool = False):
        """Evaluate the decomposed C(t) (or C*(t)) at times in fs."""
        t_cm = np.asarray(t_fs, dtype=float) / CM_PER_INVFS
        out = np.zeros_like(t_cm, dtype=complex)
        for f in self.features:
            amp = f.c_bar if conjugate else f.c
            out = out + amp * np.exp(f.gamma_exp * t_cm)
        return out if out.ndim else complex(out)

    def to_json(self) -> str:
        rows = [
            {
                "re_c": f.c.real,
                "im_c": f.c.imag,
                "re_cbar": f.c_bar.real,
                "im_cbar": f.c_bar.imag,
                "re_gamma": f.gamma_exp.real,
                "im_gamma": f.gamma_exp.imag,
                "coupling_id": f.coupling_id,
            }
            for f in self.features
        ]
        return json.dumps(
            {"temperature": self.temperature, "n_pade": self.n_pade, "features": rows},
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "FeatureSet":
        doc = json.loads(text)
        feats = tuple(
            Feature(
                c=complex(r["re_c"], r["im_c"]),
                c_bar=complex(r["re_cbar"], r["im_cbar"]),
                gamma_exp=complex(r["re_gamma"], r["im_gamma"]),
                coupling_id=str(r.get("coupling_id", "Q")),
            )
            for r in doc["features"]
        )
        return cls(feats, float(doc.get("temperature", 0.0)), int(doc.get("n_pade", 0)))


def pade_poles_residues(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Poles and residues of the [N-1/N] approximant of the Bose function.

    Returns (xi, eta) with 1/(e^x - 1) ~ 1/x - 1/2 + sum_j 2 eta_j x / (x^2 + xi_j^2).
    The poles come from the eigenvalues of a symmetric tridiagonal matrix with
    weights 2m+1, the residue zeros from the companion matrix with weights
    2m+3.
    """
    if n == 0:
        return np.empty(0), np.empty(0)
    b = 2.0 * np.arange(1, 2 * n + 1) + 1.0
    off = 1.0 / np.sqrt(b[:-1] * b[1:])
    lam = np.sort(eigh_tridiagonal(np.zeros(2 * n), off, eigvals_only=True))[::-1]
    # Spectra come in +/- pairs (odd sizes add an exact zero); keep the
    # positive halves only, guarding the zero against roundoff.
    xi = np.sort(2.0 / lam[:n])
    if n > 1:
        bt = 2.0 * np.arange(1, 2 * n) + 3.0
        offt = 1.0 / np.sqrt(bt[:-1] * bt[1:])
        mu = np.sort(eigh_tridiagonal(np.zeros(2 * n - 1), offt, eigvals_only=True))[::-1]
        zeta = np.sort(2.0 / mu[: n - 1])
    else:
        zeta = np.empty(0)
    eta = np.empty(n)
    pref = 0.5 * n * (2 * n + 3)
    for j in range(n):
        num = np.prod(zeta**2 - xi[j] ** 2) if len(zeta) else 1.0
        den = np.prod(np.delete(xi**2, j) - xi[j] ** 2) if n > 1 else 1.0
        eta[j] = pref * num / den
    return xi, eta


def coth_pade(y: complex, xi: np.ndarray, eta: np.ndarray) -> complex:
    """Pade approximant of coth(y) built from the Bose poles/residues."""
    out = 1.0 / y
    for x, e in zip(xi, eta):
        out = out + 2.0 * e * y / (y * y + 0.25 * x * x)
    return out


@dataclass
class _Pole:
    """A lower-half-plane pole of the continued integrand."""

    location: complex  # omega in the lower half plane
    residue: complex  # residue of J(omega) (resp. of the coth part) there


def _density_total(components, omega):
    return sum(c.density(omega) for c in components)


def _component_poles(comp: SpectralComponent) -> list[_Pole]:
    """Lower-half-plane poles of J(omega) with their residues."""
    if comp.kind == DRUDE_LORENTZ:
        # J = (2 lam / pi) gamma w / ((w - i gamma)(w + i gamma))
        return [_Pole(-1j * comp.gamma, comp.lam * comp.gamma / np.pi)]
    wp = comp.omega_eff
    g = comp.gamma
    w2 = comp.omega_nat**2
    scale = 4.0 * comp.lam * g * w2 / np.pi
    poles = []
    for loc in (wp - 1j * g, -wp - 1j * g):
        others = [p for p in (wp - 1j * g, -wp - 1j * g, wp + 1j * g, -wp + 1j * g) if p != loc]
        den = np.prod([loc - p for p in others])
        poles.append(_Pole(loc, scale * loc / den))
    return poles


def decompose(
    components: list[SpectralComponent],
    temperature: float,
    n_pade: int,
    coupling_id: str = "Q",
) -> FeatureSet:
    """Decompose the correlation function of a model bath into features.

    Parameters
    ----------
    components : list of SpectralComponent
    temperature : float
        Bath temperature in K, > 0.
    n_pade : int
        Number of pooled low-temperature correction features, >= 0.
    coupling_id : str
        Coupling operator every feature of this bath binds to.

    Returns
    -------
    FeatureSet
        One feature per Drude-Lorentz component, two per Brownian
        oscillator, plus ``n_pade`` shared corrections.

    Notes
    -----
    The coth factor is replaced by its Pade approximant throughout, so the
    reconstruction equals the contour integral of the approximated integrand
    exactly; the residual error against ``bcf_quadrature`` is the Pade
    truncation error itself and shrinks as ``n_pade`` grows.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if n_pade < 0:
        raise ValueError("n_pade must be non-negative")
    beta = beta_cm(temperature)
    xi, eta = pade_poles_residues(n_pade)

    def cothp(y):
        return coth_pade(y, xi, eta)

    dl = [c for c in components if c.kind == DRUDE_LORENTZ]
    bo = sorted(
        (c for c in components if c.kind == BROWNIAN),
        key=lambda c: -c.omega_eff,
    )

    feats: list[Feature] = []
    for comp in dl:
        pole = _component_poles(comp)[0]
        # exp(-i omega_pole t) with omega_pole = -i gamma gives gamma_exp = -gamma
        c = -2j * np.pi * 0.5 * pole.residue * (cothp(0.5 * beta * pole.location) + 1.0)
        feats.append(Feature(c=c, c_bar=np.conj(c), gamma_exp=-1j * pole.location, coupling_id=coupling_id))
    for comp in bo:
        p_plus, p_minus = _component_poles(comp)
        c_plus = -2j * np.pi * 0.5 * p_plus.residue * (cothp(0.5 * beta * p_plus.location) + 1.0)
        c_minus = -2j * np.pi * 0.5 * p_minus.residue * (cothp(0.5 * beta * p_minus.location) + 1.0)
        g_plus = -1j * p_plus.location  # equals -gamma - i omega_eff
        g_minus = -1j * p_minus.location  # equals -gamma + i omega_eff
        feats.append(Feature(c=c_plus, c_bar=np.conj(c_minus), gamma_exp=g_plus, coupling_id=coupling_id))
        feats.append(Feature(c=c_minus, c_bar=np.conj(c_plus), gamma_exp=g_minus, coupling_id=coupling_id))
    for j in range(n_pade):
        nu = xi[j] / beta
        amp = -2j * np.pi * (eta[j] / beta) * _density_total(components, -1j * nu)
        amp = complex(amp)
        feats.append(Feature(c=amp, c_bar=np.conj(amp), gamma_exp=complex(-nu), coupling_id=coupling_id))

    return FeatureSet(tuple(feats), temperature, n_pade)


def reconstruct(fs: FeatureSet, t_fs) -> complex:
    """Sum of features at time t (fs); see ``FeatureSet.reconstruct``."""
    return fs.reconstruct(t_fs)


def bcf_quadrature(
    components: list[SpectralComponent],
    temperature: float,
    t_fs: float,
    rtol: float = 1e-8,
) -> complex:
    """Oracle evaluation of C(t) by adaptive quadrature with exact coth.

    The real part integrates J(w) coth(beta w / 2) cos(w t), the imaginary
    part -J(w) sin(w t).  The integrand is finite at w -> 0 since J ~ w.  For
    a Drude-Lorentz component the real part diverges logarithmically at
    exactly t = 0; a QuadratureError reports the failure there.
    """
    if t_fs < 0:
        raise ValueError("t must be non-negative")
    beta = beta_cm(temperature)
    tau = t_fs / CM_PER_INVFS  # phase rate in 1/cm^-1

    def f_re(w):
        if w == 0.0:
            # J(w) coth(beta w/2) -> 2/(beta) * lim J/w
            return sum(_j_over_w0(c) for c in components) * 2.0 / beta
        return _density_total(components, w) / np.tanh(0.5 * beta * w)

    def f_im(w):
        return _density_total(components, w)

    peaks = sorted(
        {c.gamma for c in components}
        | {c.omega_eff for c in components if c.omega_eff is not None}
    )
    w_cut = 10.0 * max(peaks) + 20.0 / beta

    re_lo, re_err_lo = quad(
        lambda w: f_re(w) * np.cos(w * tau), 0.0, w_cut, points=peaks, limit=400
    )
    im_lo, im_err_lo = quad(
        lambda w: f_im(w) * np.sin(w * tau), 0.0, w_cut, points=peaks, limit=400
    )
    if tau > 0:
        re_hi, re_err_hi = quad(f_re, w_cut, np.inf, weight="cos", wvar=tau, limit=400)
        im_hi, im_err_hi = quad(f_im, w_cut, np.inf, weight="sin", wvar=tau, limit=400)
    else:
        # At t=0 the tail of J coth is ~1/w for Drude-Lorentz and the real
        # part has no finite value; Brownian-only baths decay fast enough.
        if any(c.kind == DRUDE_LORENTZ for c in components):
            raise QuadratureError(
                "C(0) diverges (logarithmic UV tail of Drude-Lorentz J coth)",
                float("inf"),
            )
        re_hi, re_err_hi = quad(f_re, w_cut, np.inf, limit=400)
        im_hi, im_err_hi = 0.0, 0.0

    value = complex(re_lo + re_hi, -(im_lo + im_hi))
    err = abs(re_err_lo) + abs(im_err_lo) + abs(re_err_hi) + abs(im_err_hi)
    scale = max(abs(value), 1e-300)
    if err / scale > max(rtol, 1e-12) * 100:
        raise QuadratureError("quadrature did not converge", err / scale)
    return value


def _j_over_w0(comp: SpectralComponent) -> float:
    """lim_{w->0} J(w)/w."""
    if comp.kind == DRUDE_LORENTZ:
        return 2.0 * comp.lam / (np.pi * comp.gamma)
    return 4.0 * comp.lam * comp.gamma / (np.pi * comp.omega_nat**2)
