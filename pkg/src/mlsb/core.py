"""Core types and exciton-basis machinery for the multi-level spin-boson model.

Conventions used throughout the package:

* hbar = 1, and every energy and frequency is stored in cm^-1 (wavenumber)
  units, so a quantity quoted as ``2*pi*c * X cm^-1`` is stored simply as X.
* Temperatures are in kelvin; ``KB_CM_PER_K`` converts k_B*T to cm^-1.
* All Hamiltonians are real symmetric matrices, so equilibrium coherence
  matrices are real and symmetric in the exciton basis.
* Exciton eigenvectors are the rows of a real orthogonal matrix ``u`` sorted
  by ascending eigenfrequency, with the sign of each row fixed so that its
  largest-magnitude entry is non-negative.  This pins down the otherwise
  arbitrary sign of every off-diagonal coherence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

KB_CM_PER_K = 0.6950348        # Boltzmann constant (cm^-1 per kelvin)
DEFAULT_OMEGA_BAR = 16000.0    # fallback mean electronic gap (cm^-1)

_SYM_TOL = 1e-12


class ModelError(ValueError):
    """Invalid model input (shape, symmetry or range violation)."""


class UnsupportedConfigError(ModelError):
    """Input is valid but outside the validity domain of the method."""


class ConvergenceError(RuntimeError):
    """Iterative refinement failed; carries the last two estimates."""

    def __init__(self, message, estimates=()):
        super().__init__(message)
        self.estimates = tuple(estimates)


class Method(Enum):
    CLASSICAL = "classical"
    SC_EXACT = "sc-exact"
    SC2 = "sc-2"
    Q2 = "q-2"
    HBAR3 = "hbar3"
    ORACLE = "oracle"


def _as_matrix(m, name):
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ModelError(f"{name} must be a square matrix, got shape {a.shape}")
    return a


def _check_symmetric(a, name, tol=_SYM_TOL):
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if asym > tol * scale:
        raise ModelError(f"{name} is not symmetric (max asymmetry {asym:.3e})")


@dataclass(frozen=True)
class SiteSystem:
    """Site frequencies and inter-site couplings of the excitonic system.

    omega      -- site excitation frequencies omega_n (cm^-1), length N >= 2
    coupling   -- symmetric N x N coupling matrix V_nm (cm^-1), zero diagonal
    """

    omega: np.ndarray
    coupling: np.ndarray
    omega_bar_defaulted: bool = False

    def __post_init__(self):
        omega = np.atleast_1d(np.array(self.omega, dtype=float))
        coupling = _as_matrix(self.coupling, "coupling")
        if omega.ndim != 1:
            raise ModelError("omega must be a 1-d sequence of frequencies")
        if omega.size < 2:
            raise ModelError("at least two sites are required")
        if coupling.shape != (omega.size, omega.size):
            raise ModelError(
                f"coupling shape {coupling.shape} does not match {omega.size} sites"
            )
        _check_symmetric(coupling, "coupling")
        if np.any(np.diagonal(coupling) != 0.0):
            raise ModelError("coupling diagonal must be exactly zero")
        omega.setflags(write=False)
        coupling.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "coupling", coupling)

    @property
    def n_sites(self):
        return self.omega.size

    @property
    def omega_bar(self):
        return float(np.mean(self.omega))

    @classmethod
    def dimer(cls, delta, v12, omega_bar=None):
        """Two-site system with site splitting ``delta`` = omega_2 - omega_1.

        When ``omega_bar`` is omitted the mean frequency defaults to
        ``DEFAULT_OMEGA_BAR`` (typical bio-chromophore scale); the default is
        flagged so downstream results can record it in their metadata.
        """
        defaulted = omega_bar is None
        ob = DEFAULT_OMEGA_BAR if defaulted else float(omega_bar)
        omega = np.array([ob - delta / 2.0, ob + delta / 2.0])
        coupling = np.array([[0.0, float(v12)], [float(v12), 0.0]])
        return cls(omega, coupling, omega_bar_defaulted=defaulted)


@dataclass(frozen=True)
class OhmicShape:
    """Ohmic spectral shape with exponential cutoff: j(w) = (w/wc) exp(-w/wc)."""

    cutoff: float

    def __post_init__(self):
        if not self.cutoff > 0:
            raise ModelError("Ohmic cutoff must be positive")


@dataclass(frozen=True)
class DiscreteShape:
    """Finite set of spectral-density lines (frequency, relative weight)."""

    omegas: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        om = np.atleast_1d(np.array(self.omegas, dtype=float))
        wt = np.atleast_1d(np.array(self.weights, dtype=float))
        if om.shape != wt.shape or om.ndim != 1 or om.size == 0:
            raise ModelError("discrete shape needs matching 1-d omegas/weights")
        if np.any(om <= 0):
            raise ModelError("discrete mode frequencies must be positive")
        if np.any(wt < 0) or not np.any(wt > 0):
            raise ModelError("discrete weights must be non-negative, not all zero")
        om.setflags(write=False)
        wt.setflags(write=False)
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "weights", wt)

    def normalized_weights(self):
        """Weights w_k rescaled so that sum_k w_k / Omega_k = 1.

        With this normalization, J_mn(w) = E^r_mn * sum_k w_k delta(w - W_k)
        satisfies the reorganization-energy sum rule int J/w dw = E^r.
        """
        w = self.weights / np.sum(self.weights / self.omegas)
        return w


@dataclass(frozen=True)
class BathSpec:
    """Spectral-density family: shape plus reorganization/ correlation data.

    reorg_diag  -- per-site reorganization energies E^r_nn (cm^-1)
    correlation -- symmetric matrix c_mn with unit diagonal, |c_mn| <= 1;
                   E^r_mn = c_mn * sqrt(E^r_mm E^r_nn) must be positive
                   semidefinite (it is a Gram matrix of coupling vectors).
    """

    shape: object
    reorg_diag: np.ndarray
    correlation: np.ndarray

    def __post_init__(self):
        if not isinstance(self.shape, (OhmicShape, DiscreteShape)):
            raise ModelError("shape must be OhmicShape or DiscreteShape")
        diag = np.atleast_1d(np.array(self.reorg_diag, dtype=float))
        corr = _as_matrix(self.correlation, "correlation")
        if np.any(diag < 0):
            raise ModelError("reorganization energies must be non-negative")
        if corr.shape != (diag.size, diag.size):
            raise ModelError("correlation shape does not match reorg_diag")
        _check_symmetric(corr, "correlation")
        if np.any(np.abs(np.diagonal(corr) - 1.0) > 1e-12):
            raise ModelError("correlation diagonal must be 1")
        if np.any(np.abs(corr) > 1.0 + 1e-12):
            raise ModelError("correlation entries must satisfy |c| <= 1")
        diag.setflags(write=False)
        corr.setflags(write=False)
        object.__setattr__(self, "reorg_diag", diag)
        object.__setattr__(self, "correlation", corr)
        e_r = corr * np.sqrt(np.outer(diag, diag))
        evals = np.linalg.eigvalsh(e_r)
        floor = -1e-10 * max(1.0, float(np.max(np.abs(e_r))))
        if evals[0] < floor:
            raise ModelError(
                "reorganization matrix is not positive semidefinite "
                f"(eigenvalue {evals[0]:.6e})"
            )

    @property
    def n_sites(self):
        return self.reorg_diag.size

    @classmethod
    def ohmic(cls, reorg_diag, cutoff, correlation=0.0):
        """Ohmic bath; scalar ``correlation`` fills every off-diagonal c_mn."""
        diag = np.atleast_1d(np.array(reorg_diag, dtype=float))
        if np.isscalar(correlation) or np.ndim(correlation) == 0:
            n = diag.size
            corr = np.full((n, n), float(correlation))
            np.fill_diagonal(corr, 1.0)
        else:
            corr = np.array(correlation, dtype=float)
        return cls(OhmicShape(float(cutoff)), diag, corr)

    @classmethod
    def discrete(cls, omegas, weights, reorg_diag, correlation=0.0):
        diag = np.atleast_1d(np.array(reorg_diag, dtype=float))
        if np.isscalar(correlation) or np.ndim(correlation) == 0:
            n = diag.size
            corr = np.full((n, n), float(correlation))
            np.fill_diagonal(corr, 1.0)
        else:
            corr = np.array(correlation, dtype=float)
        return cls(DiscreteShape(np.asarray(omegas), np.asarray(weights)), diag, corr)


@dataclass(frozen=True)
class ExcitonBasis:
    """Real orthogonal transform to the eigenbasis of the excited subspace.

    u              -- rows are exciton eigenvectors over sites (u[mu, m])
    omega_mu       -- eigenfrequencies (cm^-1), ascending
    delta_omega_mu -- omega_mu - omega_bar
    phi            -- dimer mixing angle (radians), None for N > 2
    """

    u: np.ndarray
    omega_mu: np.ndarray
    delta_omega_mu: np.ndarray
    phi: float | None = None

    @property
    def n_sites(self):
        return self.omega_mu.size

    @property
    def omega_bar(self):
        return float(self.omega_mu[0] - self.delta_omega_mu[0])


@dataclass(frozen=True)
class Thermo:
    """Temperature and the matching inverse energy beta = 1/(k_B T)."""

    temperature_K: float
    beta: float = None

    def __post_init__(self):
        if not self.temperature_K > 0:
            raise ModelError("temperature must be positive")
        if self.beta is None:
            object.__setattr__(
                self, "beta", 1.0 / (KB_CM_PER_K * self.temperature_K)
            )
        elif abs(self.beta * KB_CM_PER_K * self.temperature_K - 1.0) > 1e-12:
            raise ModelError("beta inconsistent with temperature")

    @property
    def kt(self):
        """Thermal energy k_B T in cm^-1."""
        return KB_CM_PER_K * self.temperature_K


@dataclass(frozen=True)
class CoherenceResult:
    """Coherence matrix produced by one of the calculators.

    c_matrix is real symmetric; off-diagonals are exciton-basis stationary
    coherences, diagonals populations where the method computes them.
    """

    method: Method
    c_matrix: np.ndarray
    err_est: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        c = _as_matrix(self.c_matrix, "c_matrix")
        _check_symmetric(c, "c_matrix")
        if not np.all(np.isfinite(c)):
            raise ModelError("c_matrix contains non-finite entries")
        if self.err_est < 0:
            raise ModelError("err_est must be non-negative")
        c.setflags(write=False)
        object.__setattr__(self, "c_matrix", c)

    @property
    def c12(self):
        return float(self.c_matrix[0, 1])

    @property
    def populations(self):
        return np.diagonal(self.c_matrix).copy()


def site_hamiltonian(sys: SiteSystem):
    """Excited-subspace system Hamiltonian relative to omega_bar (site basis)."""
    h = np.diag(sys.omega - sys.omega_bar) + sys.coupling
    return h


def diagonalize_excited(sys: SiteSystem) -> ExcitonBasis:
    """Diagonalize the excited-subspace Hamiltonian.

    Returns the exciton basis with ascending eigenfrequencies and the row-sign
    convention applied.  For a dimer the mixing angle phi is computed from the
    closed form tan(phi) = 2 V12 / (Delta + sqrt(Delta^2 + 4 V12^2)) via the
    equivalent half-angle expression phi = atan2(2 V12, Delta) / 2.
    """
    h = site_hamiltonian(sys)
    evals, vecs = np.linalg.eigh(h)
    u = vecs.T.copy()
    for row in u:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    norm = float(np.max(np.abs(h))) if h.size else 0.0
    rot = u @ h @ u.T
    off = rot - np.diag(np.diagonal(rot))
    if norm > 0 and float(np.max(np.abs(off))) > 1e-10 * norm:
        raise ModelError("eigen-decomposition failed to diagonalize H_e")
    phi = None
    if sys.n_sites == 2:
        delta = sys.omega[1] - sys.omega[0]
        phi = 0.5 * float(np.arctan2(2.0 * sys.coupling[0, 1], delta))
    return ExcitonBasis(
        u=u,
        omega_mu=evals + sys.omega_bar,
        delta_omega_mu=evals,
        phi=phi,
    )


def reorganization_matrix(bath):
    """Reorganization-energy matrix E^r_mn (cm^-1).

    Accepts a BathSpec (Gram form c_mn sqrt(E_mm E_nn)) or any discretized
    bath exposing explicit couplings, for which
    E^r_mn = hbar^2 sum_k alpha_mk alpha_nk / (2 Omega_k^2).
    """
    if hasattr(bath, "alphas") and hasattr(bath, "omegas"):
        alphas = np.asarray(bath.alphas, dtype=float)
        omegas = np.asarray(bath.omegas, dtype=float)
        return (alphas / omegas) @ (alphas / omegas).T / 2.0
    if isinstance(bath, BathSpec):
        diag = bath.reorg_diag
        return bath.correlation * np.sqrt(np.outer(diag, diag))
    raise ModelError(f"cannot compute reorganization matrix for {type(bath)!r}")


def sigma0_and_partition(basis: ExcitonBasis, th: Thermo):
    """Zeroth-order excited-subspace equilibrium state and its partition sum.

    Returns (sigma0, Z) with sigma0 = diag(exp(-beta dw_mu)) / Z.  Exponents
    are shifted by the minimum before exponentiation so the populations never
    overflow; Z itself may overflow to inf only at sub-kelvin temperatures.
    """
    dw = basis.delta_omega_mu
    shift = float(np.min(dw))
    weights = np.exp(-th.beta * (dw - shift))
    z_shift = float(np.sum(weights))
    pops = weights / z_shift
    with np.errstate(over="ignore"):
        z = z_shift * float(np.exp(-th.beta * shift))
    return np.diag(pops), z


def validate_regime(sys: SiteSystem, bath: BathSpec, th: Thermo):
    """Check the separation-of-scales assumptions; returns a list of warnings.

    The model remains mathematically defined outside the regime, so this
    never raises.
    """
    warnings = []
    omega_bar = sys.omega_bar
    scales = {
        "site frequency differences": float(
            np.max(np.abs(sys.omega[:, None] - sys.omega[None, :]))
        ),
        "couplings": float(np.max(np.abs(sys.coupling))),
        "reorganization energies": float(
            np.max(np.abs(reorganization_matrix(bath)))
        ),
    }
    if isinstance(bath.shape, OhmicShape):
        scales["bath cutoff"] = bath.shape.cutoff
    else:
        scales["bath frequencies"] = float(np.max(bath.shape.omegas))
    worst = max(scales, key=scales.get)
    if omega_bar < 10.0 * scales[worst]:
        warnings.append(
            f"adiabatic separation violated: omega_bar = {omega_bar:g} cm^-1 is "
            f"less than 10x the {worst} scale ({scales[worst]:g} cm^-1)"
        )
    if omega_bar < 10.0 * th.kt:
        warnings.append(
            f"thermal separation violated: omega_bar = {omega_bar:g} cm^-1 is "
            f"less than 10x k_B T = {th.kt:g} cm^-1"
        )
    return warnings
