import numpy as np
import pytest

from mlsb import (
    BathSpec,
    DiscretizedBath,
    Method,
    ModelError,
    OracleConfig,
    OracleSolver,
    Thermo,
    convergence_sweep,
    diagonalize_excited,
    discretize_bath,
    exact_coherences,
    quantum_coherence_2nd_modes,
    read_eigenvalue_dump,
    reorganization_matrix,
    sigma0_and_partition,
)


def test_discretize_single_mode_single_site():
    bath = BathSpec.ohmic([100.0, 0.0], 50.0, 0.0)
    dbath = discretize_bath(bath, OracleConfig(n_modes=1, fock_levels=4))
    assert dbath.n_modes == 1
    recomputed = reorganization_matrix(dbath)
    assert recomputed[0, 0] == pytest.approx(100.0, rel=1e-12)
    assert abs(recomputed[1, 1]) < 1e-12
    assert dbath.residual < 1e-10


def test_discretize_perfect_correlation_identical_rows():
    bath = BathSpec.ohmic([80.0, 80.0], 50.0, 1.0)
    dbath = discretize_bath(bath, OracleConfig(n_modes=3, fock_levels=4))
    assert dbath.n_modes == 3  # rank-1 target: one mode per bin
    assert np.allclose(dbath.alphas[0], dbath.alphas[1], atol=1e-12)


def test_discretize_roundtrip_ohmic():
    bath = BathSpec.ohmic([100.0, 40.0], 50.0, -0.5)
    for k in (1, 2, 4):
        dbath = discretize_bath(bath, OracleConfig(n_modes=k, fock_levels=4))
        recomputed = reorganization_matrix(dbath)
        target = reorganization_matrix(bath)
        assert np.max(np.abs(recomputed - target)) < 1e-10 * np.max(np.abs(target))
        assert dbath.residual <= 1e-10
    assert dbath.tail_weight == pytest.approx(np.exp(-6.0), rel=1e-12)


def test_discretize_discrete_shape_passthrough():
    bath = BathSpec.discrete([30.0, 90.0], [1.0, 2.0], [60.0, 0.0], 0.0)
    dbath = discretize_bath(bath, OracleConfig(n_modes=1, fock_levels=4))
    assert set(np.round(dbath.omegas, 9)) == {30.0, 90.0}
    recomputed = reorganization_matrix(dbath)
    assert recomputed[0, 0] == pytest.approx(60.0, rel=1e-12)


def test_discretize_bin_frequencies_are_weighted_means():
    bath = BathSpec.ohmic([100.0, 0.0], 50.0, 0.0)
    dbath = discretize_bath(
        bath, OracleConfig(n_modes=1, fock_levels=4, omega_max=300.0)
    )
    wc = 50.0
    # reorganization-weighted mean of (1/wc) exp(-w/wc) over [0, 300]
    expected = wc * (1.0 - 7.0 * np.exp(-6.0)) / (1.0 - np.exp(-6.0))
    assert dbath.omegas[0] == pytest.approx(expected, rel=1e-12)


def test_dimension_cap_enforced(dimer, bath_fig1a):
    cfg = OracleConfig(n_modes=3, fock_levels=9, dim_cap=1000)
    dbath = discretize_bath(bath_fig1a, cfg)
    with pytest.raises(ModelError, match="exceeds cap"):
        OracleSolver(dimer, dbath, cfg)


def test_hamiltonian_hermiticity(dimer, bath_fig1a):
    cfg = OracleConfig(n_modes=2, fock_levels=3)
    dbath = discretize_bath(bath_fig1a, cfg)
    solver = OracleSolver(dimer, dbath, cfg)
    assert solver.h_asymmetry <= 1e-12 * max(solver.h_norm, 1.0)


def test_uncoupled_bath_reproduces_sigma0(dimer, th300):
    dbath = DiscretizedBath(
        omegas=np.array([50.0, 120.0]),
        alphas=np.zeros((2, 2)),
        target_e_r=np.zeros((2, 2)),
        residual=0.0,
    )
    cfg = OracleConfig(n_modes=2, fock_levels=5)
    res = exact_coherences(dimer, dbath, cfg, th300)
    assert res.method is Method.ORACLE
    basis = diagonalize_excited(dimer)
    sigma0, _ = sigma0_and_partition(basis, th300)
    assert abs(res.c12) < 1e-12
    assert np.allclose(res.populations, np.diagonal(sigma0), atol=1e-12)


def test_oracle_reality_symmetry_trace(dimer, bath_site1, th300):
    cfg = OracleConfig(n_modes=2, fock_levels=8)
    dbath = discretize_bath(bath_site1, cfg)
    res = OracleSolver(dimer, dbath, cfg).coherences(th300)
    assert np.isrealobj(res.c_matrix)
    assert res.meta["c_asymmetry"] < 1e-12
    assert np.sum(res.populations) == pytest.approx(1.0, abs=1e-10)
    assert np.all(res.populations >= 0.0)


def test_zero_temperature_limit_concentrates(dimer, bath_site1):
    # population flows into the lowest polaron-dressed state as beta grows;
    # in the exciton basis that state is dominated by (but not identical to)
    # the lowest exciton
    cfg = OracleConfig(n_modes=1, fock_levels=14)
    dbath = discretize_bath(bath_site1, cfg)
    solver = OracleSolver(dimer, dbath, cfg)
    pops = [solver.coherences(Thermo(t)).populations[0] for t in (300.0, 50.0, 5.0)]
    assert pops[0] < pops[1] < pops[2]
    assert pops[-1] > 0.95
    res = solver.coherences(Thermo(5.0))
    assert np.sum(res.populations) == pytest.approx(1.0, abs=1e-10)


def test_correlated_symmetric_coherence_collapses(dimer, th300):
    values = []
    for m in (3, 5, 7):
        bath = BathSpec.ohmic([20.0, 20.0], 50.0, 1.0)
        cfg = OracleConfig(n_modes=2, fock_levels=m)
        dbath = discretize_bath(bath, cfg)
        values.append(abs(OracleSolver(dimer, dbath, cfg).coherences(th300).c12))
    assert values[-1] < 1e-10


def test_weak_coupling_residual_scaling(dimer, th300):
    # |C_oracle - C_q2| / E^2 roughly constant across E in {1, 2, 4} when the
    # perturbative result is evaluated on the same discretized modes
    ratios = []
    for e_r in (1.0, 2.0, 4.0):
        bath = BathSpec.ohmic([e_r, 0.0], 50.0, 0.0)
        cfg = OracleConfig(n_modes=1, fock_levels=60)
        dbath = discretize_bath(bath, cfg)
        oracle = OracleSolver(dimer, dbath, cfg).coherences(th300)
        pert = quantum_coherence_2nd_modes(dimer, dbath, th300)
        ratios.append(abs(oracle.c12 - pert.c12) / e_r**2)
        if e_r == 1.0:
            # populations agree at the same perturbative order
            assert np.max(np.abs(oracle.populations - pert.populations)) < 1e-5
    for r in ratios[1:]:
        assert r == pytest.approx(ratios[0], rel=0.30)


def test_convergence_sweep_fock_levels(dimer, bath_site1, th300):
    sweep = convergence_sweep(
        dimer, bath_site1, th300,
        grid=[(1, 20), (1, 30), (1, 40), (1, 50)],
        cfg=OracleConfig(),
    )
    diffs = [abs(d) for d in sweep.diffs]
    assert diffs[0] > diffs[1] > diffs[2]
    assert sweep.uncertainty == diffs[-1]
    assert np.isfinite(sweep.extrapolated)


def test_convergence_sweep_modes(dimer):
    # cold bath with a high cutoff: a modest Fock level converges every bin,
    # so the frequency-binning error dominates and shrinks with K
    bath = BathSpec.ohmic([5.0, 0.0], 150.0, 0.0)
    sweep = convergence_sweep(
        dimer, bath, Thermo(30.0),
        grid=[(1, 10), (2, 10), (3, 10)],
        cfg=OracleConfig(),
    )
    diffs = [abs(d) for d in sweep.diffs]
    assert diffs[-1] < diffs[0]


def test_convergence_sweep_uncoupled_constant(dimer, th300):
    bath = BathSpec.ohmic([0.0, 0.0], 50.0, 0.0)
    sweep = convergence_sweep(
        dimer, bath, th300, grid=[(1, 3), (1, 5), (2, 4)], cfg=OracleConfig()
    )
    values = [e[2] for e in sweep.entries]
    assert np.ptp(values) < 1e-14


def _independent_thermal_reduced_matrix(sys2, dbath, fock, th):
    """Occupation-number-basis construction, independent of OracleSolver.

    Enumerates |site, n_1, ..., n_K> states explicitly and assembles matrix
    elements one by one; diagonalizes with scipy and traces out the bath by
    direct summation.
    """
    from itertools import product

    from scipy.linalg import eigh as scipy_eigh

    from mlsb.core import site_hamiltonian

    n_sites = sys2.n_sites
    h_site = site_hamiltonian(sys2)
    states = [
        (m,) + occ
        for m in range(n_sites)
        for occ in product(range(fock), repeat=dbath.n_modes)
    ]
    index = {s: i for i, s in enumerate(states)}
    dim = len(states)
    h = np.zeros((dim, dim))
    for i, s in enumerate(states):
        m, occ = s[0], s[1:]
        h[i, i] += h_site[m, m] + sum(
            dbath.omegas[k] * occ[k] for k in range(dbath.n_modes)
        )
        for mp in range(n_sites):
            if mp != m:
                h[index[(mp,) + occ], i] += h_site[mp, m]
        for k in range(dbath.n_modes):
            if occ[k] + 1 < fock:
                up = occ[:k] + (occ[k] + 1,) + occ[k + 1:]
                elem = dbath.alphas[m, k] * np.sqrt(
                    (occ[k] + 1) / (2.0 * dbath.omegas[k])
                )
                j = index[(m,) + up]
                h[j, i] += elem
                h[i, j] += elem
    evals, vecs = scipy_eigh(h)
    weights = np.exp(-th.beta * (evals - evals[0]))
    rho_site = np.zeros((n_sites, n_sites))
    for i, wi in enumerate(weights):
        for a, sa in enumerate(states):
            for b, sb in enumerate(states):
                if sa[1:] == sb[1:]:
                    rho_site[sa[0], sb[0]] += wi * vecs[a, i] * vecs[b, i]
    return rho_site / np.sum(weights)


def test_solver_against_independent_construction(dimer, th300):
    bath = BathSpec.ohmic([30.0, 10.0], 50.0, 0.5)
    cfg = OracleConfig(n_modes=1, fock_levels=4)
    dbath = discretize_bath(bath, cfg)
    rho_independent = _independent_thermal_reduced_matrix(
        dimer, dbath, cfg.fock_levels, th300
    )
    basis = diagonalize_excited(dimer)
    c_independent = basis.u @ rho_independent @ basis.u.T
    res = OracleSolver(dimer, dbath, cfg).coherences(th300)
    assert np.max(np.abs(res.c_matrix - c_independent)) < 1e-12


def test_eigenvalue_dump_roundtrip(tmp_path, dimer, bath_site1):
    cfg = OracleConfig(n_modes=1, fock_levels=6)
    dbath = discretize_bath(bath_site1, cfg)
    solver = OracleSolver(dimer, dbath, cfg)
    path = tmp_path / "spectrum.bin"
    solver.dump_eigenvalues(path)
    data = read_eigenvalue_dump(path)
    assert data.shape == solver.energies.shape
    assert np.allclose(data, solver.energies)
    raw = path.read_bytes()
    assert len(raw) == 8 + 8 * solver.energies.size
    assert int.from_bytes(raw[:8], "little") == solver.energies.size
