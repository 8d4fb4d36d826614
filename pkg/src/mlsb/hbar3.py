"""Third-order phase-space expansion of the stationary coherence matrix.

Expanding the Boltzmann operator in powers of hbar and averaging over the
classical bath ensemble leaves only second Gaussian moments of the bath
coordinates, <Q_k Q_l> = delta_kl / (beta Omega_k^2).  Every term therefore
collapses onto the reorganization-energy matrix and the expansion is exact in
closed form:

    C = (1/N) * u [ (beta^2/2) M2
                    - (beta^3/6) (M2 He + He M2 + Mehe) ] u^T

with site-basis matrices M2 = diag(2 E^r_nn / beta) and
Mehe[m, n] = (2 E^r_mn / beta) He[m, n].  A Monte-Carlo evaluation of the
bath averages is provided to validate the moment algebra.
"""

from __future__ import annotations

import numpy as np

from .core import (
    CoherenceResult,
    ExcitonBasis,
    Method,
    SiteSystem,
    Thermo,
    UnsupportedConfigError,
    diagonalize_excited,
    reorganization_matrix,
    site_hamiltonian,
)


def _hbar3_site_matrix(h_e, e_r, beta):
    m2 = np.diag(2.0 * np.diagonal(e_r) / beta)
    mehe = (2.0 * e_r / beta) * h_e
    return (beta**2 / 2.0) * m2 - (beta**3 / 6.0) * (m2 @ h_e + h_e @ m2 + mehe)


def _zeroth_populations(basis, th):
    w = np.exp(-th.beta * (basis.delta_omega_mu - basis.delta_omega_mu.min()))
    return w / w.sum()


def hbar3_general(sys: SiteSystem, bath, th: Thermo) -> CoherenceResult:
    """Order-hbar^3 coherences for any number of sites.

    ``bath`` may be a BathSpec or a discretized bath; only its
    reorganization-energy matrix enters.  Off-diagonals are the expansion
    values; diagonals carry the zeroth-order populations.
    """
    basis = diagonalize_excited(sys)
    e_r = reorganization_matrix(bath)
    h_e = site_hamiltonian(sys)
    site = _hbar3_site_matrix(h_e, e_r, th.beta)
    c = basis.u @ site @ basis.u.T / sys.n_sites
    c = 0.5 * (c + c.T)
    np.fill_diagonal(c, _zeroth_populations(basis, th))
    return CoherenceResult(
        method=Method.HBAR3,
        c_matrix=c,
        err_est=0.0,
        meta={
            "populations": "zeroth order",
            "omega_bar_defaulted": sys.omega_bar_defaulted,
        },
    )


def hbar3_dimer(basis: ExcitonBasis, e_r, th: Thermo) -> CoherenceResult:
    """Dimer closed form, an independent code path from hbar3_general.

    In terms of the mixing angle,

        C12 = (beta/2) cos(phi) sin(phi) (E11 - E22)
            + (beta^2/12) D_S cos(phi) sin(phi) (cos^2(phi) - sin^2(phi))
              * (E11 + E22 - 2 E12),

    with D_S the exciton splitting.  The angle factors are evaluated from
    products of u-matrix entries so the row-sign convention fixes the sign of
    C12 consistently with the general transform for every input ordering.
    """
    if basis.n_sites != 2:
        raise UnsupportedConfigError("dimer closed form requires two sites")
    e_r = np.asarray(e_r, dtype=float)
    u = basis.u
    beta = th.beta
    d_s = float(basis.omega_mu[1] - basis.omega_mu[0])
    g = float(u[0, 0] * u[1, 0])                     # cos(phi) sin(phi)
    h = float(u[0, 0] * u[1, 1] + u[0, 1] * u[1, 0])  # cos^2 - sin^2
    delta_site = d_s * float(u[0, 0] ** 2 - u[1, 0] ** 2)
    v_site = 0.5 * d_s * float(u[1, 0] * u[1, 1] - u[0, 0] * u[0, 1])
    c12 = (
        0.5 * beta * g * (e_r[0, 0] - e_r[1, 1])
        + beta**2 / 12.0
        * (g * delta_site * (e_r[0, 0] + e_r[1, 1]) - 2.0 * v_site * e_r[0, 1] * h)
    )
    pops = _zeroth_populations(basis, th)
    c = np.array([[pops[0], c12], [c12, pops[1]]])
    return CoherenceResult(
        method=Method.HBAR3,
        c_matrix=c,
        err_est=0.0,
        meta={"populations": "zeroth order", "form": "dimer closed form"},
    )


def b2_term(bath_modes, th: Thermo):
    """Bath average of the third-order Wigner correction term.

    With classical moments <Omega^2 Q^2> = <P^2> = 1/beta each mode
    contributes (hbar^2 Omega^2 / 4) (2/3 - 1) = -hbar^2 Omega^2 / 12.  The
    term is proportional to the system identity, so it shifts populations and
    normalization only and never contributes to off-diagonal coherences.
    """
    omegas = np.asarray(bath_modes.omegas, dtype=float)
    return float(-np.sum(omegas**2) / 12.0)


def hbar3_monte_carlo(sys, dbath, th, n_samples=200000, seed=0):
    """Monte-Carlo estimate of the hbar^3 coherence matrix.

    Samples classical bath coordinates Q_k ~ N(0, 1/(beta Omega_k^2)) and
    averages the operator expression directly; validates the closed-form
    Gaussian moment algebra of hbar3_general.  Returns the exciton-basis
    matrix (no population fill), to be compared off-diagonal.
    """
    rng = np.random.default_rng(seed)
    basis = diagonalize_excited(sys)
    h_e = site_hamiltonian(sys)
    omegas = np.asarray(dbath.omegas, dtype=float)
    alphas = np.asarray(dbath.alphas, dtype=float)
    sigma_q = 1.0 / (np.sqrt(th.beta) * omegas)
    q = rng.standard_normal((n_samples, omegas.size)) * sigma_q
    x = q @ alphas.T  # (samples, sites): diagonal of H_SB per sample
    cov = x.T @ x / n_samples
    m2 = np.diag(np.diagonal(cov))
    mehe = cov * h_e
    site = (th.beta**2 / 2.0) * m2 - (th.beta**3 / 6.0) * (
        m2 @ h_e + h_e @ m2 + mehe
    )
    c = basis.u @ site @ basis.u.T / sys.n_sites
    return 0.5 * (c + c.T)
