"""Brute-force reference: exact thermal state on a Fock-truncated bath.

The continuous bath is replaced by a finite set of modes whose couplings
reproduce the target reorganization-energy matrix exactly; the full
Hamiltonian on (excited subspace) x (truncated Fock space) is then densely
diagonalized, the thermal state formed, and the bath traced out.  Because the
system-bath coupling is site-diagonal, the excited subspace closes and no
other sectors are needed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    BathSpec,
    CoherenceResult,
    DiscreteShape,
    Method,
    ModelError,
    OhmicShape,
    SiteSystem,
    Thermo,
    diagonalize_excited,
    reorganization_matrix,
    site_hamiltonian,
)


@dataclass(frozen=True)
class DiscretizedBath:
    """Finite mode set (Omega_k, per-site coupling rows alpha[n, k]).

    Units: hbar * alpha_nk * Q_k is an energy, so with hbar = 1 the couplings
    satisfy E^r_mn = sum_k alpha_mk alpha_nk / (2 Omega_k^2).
    """

    omegas: np.ndarray
    alphas: np.ndarray
    target_e_r: np.ndarray
    residual: float
    tail_weight: float = 0.0

    def __post_init__(self):
        om = np.atleast_1d(np.asarray(self.omegas, dtype=float))
        al = np.atleast_2d(np.asarray(self.alphas, dtype=float))
        if np.any(om <= 0):
            raise ModelError("discretized mode frequencies must be positive")
        if al.shape[1] != om.size:
            raise ModelError("alpha columns must match the mode count")
        om.setflags(write=False)
        al.setflags(write=False)
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "alphas", al)

    @property
    def n_modes(self):
        return self.omegas.size


@dataclass(frozen=True)
class OracleConfig:
    """Discretization and truncation controls.

    n_modes     -- number of frequency bins K (each bin may expand into
                   several modes, one per independent coupling direction)
    fock_levels -- Fock levels M per mode
    omega_max   -- discretization upper cutoff; default 6x the Ohmic cutoff
    dim_cap     -- refuse to build Hamiltonians larger than this
    """

    n_modes: int = 1
    fock_levels: int = 8
    omega_max: float = None
    dim_cap: int = 20000

    def __post_init__(self):
        if self.n_modes < 1 or self.fock_levels < 2:
            raise ModelError("need n_modes >= 1 and fock_levels >= 2")


def _psd_factor(matrix):
    """Columns g_j with sum_j g_j g_j^T = matrix; robust for singular PSD input."""
    evals, vecs = np.linalg.eigh(matrix)
    scale = max(float(evals[-1]), 0.0)
    cols = []
    for lam, v in zip(evals, vecs.T):
        if lam > 1e-14 * max(scale, 1.0):
            cols.append(np.sqrt(lam) * v)
    if not cols:
        return np.zeros((matrix.shape[0], 0))
    return np.column_stack(cols)


def discretize_bath(bath: BathSpec, cfg: OracleConfig) -> DiscretizedBath:
    """Replace the continuous bath by modes carrying exact shares of E^r.

    Ohmic shapes are partitioned into ``n_modes`` bins of equal
    reorganization weight int j(w)/w dw on [0, omega_max]; each bin's
    representative frequency is its reorganization-weighted mean.  Every bin
    carries exactly E^r / K, factored over independent coupling directions,
    so the recomputed reorganization matrix matches the target to rounding.
    The spectral weight beyond omega_max (folded back by the exact-share
    construction) is reported as ``tail_weight``.
    """
    target = reorganization_matrix(bath)
    if isinstance(bath.shape, OhmicShape):
        wc = bath.shape.cutoff
        omega_max = cfg.omega_max if cfg.omega_max is not None else 6.0 * wc
        k = cfg.n_modes
        t_max = omega_max / wc
        # equal bins of the weight (1/wc) exp(-w/wc): edges t_j solve
        # exp(-t_j) = (1 - j/k) + (j/k) exp(-t_max), stable far into the tail
        frac = np.arange(k + 1) / k
        edges_t = -np.log((1.0 - frac) + frac * np.exp(-t_max))
        ta, tb = edges_t[:-1], edges_t[1:]
        # reorganization-weighted bin mean, shifted to avoid underflow:
        # <t> = [(ta + 1) - (tb + 1) r] / (1 - r), r = exp(-(tb - ta))
        r = np.exp(-(tb - ta))
        bin_omegas = wc * ((ta + 1.0) - (tb + 1.0) * r) / (1.0 - r)
        shares = np.full(k, 1.0 / k)
        tail_weight = float(np.exp(-t_max))
    elif isinstance(bath.shape, DiscreteShape):
        bin_omegas = bath.shape.omegas
        w = bath.shape.normalized_weights()
        shares = w / bin_omegas  # sums to 1 by normalization
        tail_weight = 0.0
    else:
        raise ModelError("unsupported bath shape")

    mode_omegas = []
    mode_alphas = []
    factor = _psd_factor(target)
    for omega_k, share in zip(bin_omegas, shares):
        for g in factor.T:
            mode_omegas.append(omega_k)
            mode_alphas.append(g * np.sqrt(2.0 * share) * omega_k)
    omegas = np.array(mode_omegas)
    alphas = np.array(mode_alphas).T if mode_alphas else np.zeros((target.shape[0], 0))

    if omegas.size:
        recomputed = (alphas / omegas) @ (alphas / omegas).T / 2.0
    else:
        recomputed = np.zeros_like(target)
    scale = max(float(np.max(np.abs(target))), 1e-300)
    residual = float(np.max(np.abs(recomputed - target))) / scale
    return DiscretizedBath(
        omegas=omegas,
        alphas=alphas,
        target_e_r=target,
        residual=residual,
        tail_weight=tail_weight,
    )


def _embed_mode_operator(op, mode_index, fock_dims):
    full = np.ones((1, 1))
    for i, d in enumerate(fock_dims):
        block = op if i == mode_index else np.eye(d)
        full = np.kron(full, block)
    return full


class OracleSolver:
    """Dense-spectrum oracle; diagonalize once, evaluate many temperatures.

    The coupling operator multiplies Q_k = sqrt(1/(2 Omega_k)) (a + a^dag)
    directly (no zero-point offset), and the constant bath zero-point energy
    sum_k Omega_k / 2 is dropped from H_B since it cancels in the normalized
    thermal state.
    """

    def __init__(self, sys: SiteSystem, dbath: DiscretizedBath, cfg: OracleConfig):
        self.sys = sys
        self.dbath = dbath
        self.cfg = cfg
        self.basis = diagonalize_excited(sys)
        n = sys.n_sites
        m = cfg.fock_levels
        n_modes = dbath.n_modes
        bath_dim = m**n_modes
        dim = n * bath_dim
        if dim > cfg.dim_cap:
            raise ModelError(
                f"oracle dimension {dim} = {n} x {m}^{n_modes} exceeds cap "
                f"{cfg.dim_cap}"
            )
        fock_dims = [m] * n_modes
        ladder = np.diag(np.sqrt(np.arange(1, m)), 1)
        number = np.diag(np.arange(m, dtype=float))

        h_bath = np.zeros((bath_dim, bath_dim))
        for k, omega_k in enumerate(dbath.omegas):
            h_bath += omega_k * _embed_mode_operator(number, k, fock_dims)
        h = np.kron(site_hamiltonian(sys), np.eye(bath_dim))
        h += np.kron(np.eye(n), h_bath)
        for k, omega_k in enumerate(dbath.omegas):
            q_k = np.sqrt(0.5 / omega_k) * (ladder + ladder.T)
            q_full = _embed_mode_operator(q_k, k, fock_dims)
            h += np.kron(np.diag(dbath.alphas[:, k]), q_full)

        self.dim = dim
        self.bath_dim = bath_dim
        self.h_asymmetry = float(np.max(np.abs(h - h.T)))
        self.h_norm = float(np.max(np.abs(h)))
        try:
            self.energies, vecs = np.linalg.eigh(h)
        except np.linalg.LinAlgError as exc:
            raise ModelError(
                f"eigendecomposition failed at dimension {dim} "
                f"({n} sites x {m}^{n_modes} Fock states): {exc}"
            ) from exc
        self.vectors_by_site = vecs.reshape(n, bath_dim, dim)

    def coherences(self, th: Thermo) -> CoherenceResult:
        w = np.exp(-th.beta * (self.energies - self.energies[0]))
        z = float(np.sum(w))
        n = self.sys.n_sites
        rho_site = np.zeros((n, n))
        chunk = 4096
        for start in range(0, self.dim, chunk):
            sl = slice(start, start + chunk)
            rho_site += np.einsum(
                "mbi,nbi,i->mn",
                self.vectors_by_site[:, :, sl],
                self.vectors_by_site[:, :, sl],
                w[sl],
            )
        rho_site /= z
        c = self.basis.u @ rho_site @ self.basis.u.T
        asym = float(np.max(np.abs(c - c.T)))
        c = 0.5 * (c + c.T)
        return CoherenceResult(
            method=Method.ORACLE,
            c_matrix=c,
            err_est=0.0,
            meta={
                "dim": self.dim,
                "n_modes": self.dbath.n_modes,
                "fock_levels": self.cfg.fock_levels,
                "c_asymmetry": asym,
                "bath_residual": self.dbath.residual,
                "tail_weight": self.dbath.tail_weight,
                "omega_bar_defaulted": self.sys.omega_bar_defaulted,
            },
        )

    def dump_eigenvalues(self, path):
        """Binary spectrum dump: little-endian int64 count, then float64 values."""
        arr = np.asarray(self.energies, dtype="<f8")
        with open(path, "wb") as fh:
            fh.write(struct.pack("<q", arr.size))
            fh.write(arr.tobytes())


def read_eigenvalue_dump(path):
    with open(path, "rb") as fh:
        (count,) = struct.unpack("<q", fh.read(8))
        data = np.frombuffer(fh.read(8 * count), dtype="<f8")
    if data.size != count:
        raise ModelError("truncated eigenvalue dump")
    return data.copy()


def exact_coherences(
    sys: SiteSystem, dbath: DiscretizedBath, cfg: OracleConfig, th: Thermo
) -> CoherenceResult:
    """One-shot exact thermal coherences; see OracleSolver for reuse."""
    return OracleSolver(sys, dbath, cfg).coherences(th)


@dataclass(frozen=True)
class ConvergenceSweep:
    entries: tuple          # ((n_modes, fock_levels, C12), ...)
    diffs: tuple            # successive C12 differences
    extrapolated: float
    uncertainty: float


def convergence_sweep(sys, bath, th, grid, cfg=None) -> ConvergenceSweep:
    """Evaluate C12 over a grid of (n_modes, fock_levels) truncations.

    The extrapolated value applies a geometric tail estimate when the last
    two differences shrink consistently; the quoted uncertainty is the last
    difference.
    """
    if cfg is None:
        cfg = OracleConfig()
    entries = []
    for k, m in grid:
        point_cfg = replace(cfg, n_modes=int(k), fock_levels=int(m))
        dbath = discretize_bath(bath, point_cfg)
        res = OracleSolver(sys, dbath, point_cfg).coherences(th)
        entries.append((int(k), int(m), res.c12))
    values = [e[2] for e in entries]
    diffs = tuple(b - a for a, b in zip(values[:-1], values[1:]))
    extrapolated = values[-1]
    uncertainty = abs(diffs[-1]) if diffs else float("inf")
    if len(diffs) >= 2 and abs(diffs[-2]) > 0:
        ratio = diffs[-1] / diffs[-2]
        if 0.0 < ratio < 0.9:
            extrapolated = values[-1] + diffs[-1] * ratio / (1.0 - ratio)
    return ConvergenceSweep(
        entries=tuple(entries),
        diffs=diffs,
        extrapolated=float(extrapolated),
        uncertainty=float(uncertainty),
    )
