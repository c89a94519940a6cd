import math

import numpy as np
import pytest

from llgiter import (
    BlowupError,
    HeatSolveConfig,
    InitialDataConfig,
    IterateConfig,
    NormSpec,
    PerturbationMode,
    PhysicsParams,
    SpaceGrid,
    TimeGrid,
    build_L,
    generate_m0,
    geometric_fit,
    initialize,
    q_diagnostics,
    run,
    spacetime_norm,
    step,
)


@pytest.fixture(scope="module")
def params():
    return PhysicsParams(1.0, 1.0)


def small_setup(eps=0.02, n=16, m=16, k=(1, 0)):
    grid = SpaceGrid(2, n)
    tg = TimeGrid(0.5, m)
    m0 = generate_m0(
        InitialDataConfig(epsilon=eps, modes=(PerturbationMode(k=k, component=0),)), grid
    )
    return grid, tg, m0


def test_initialize_replicates_initial_data(params):
    grid, tg, m0 = small_setup()
    state = initialize(m0, grid, tg)
    for n in range(tg.m_steps + 1):
        assert np.array_equal(state.m_current[n], m0)
    assert state.ell == 0 and state.status == "running"
    assert state.r_norm_history == []


def test_constant_data_trivial_fixed_point(params):
    grid = SpaceGrid(2, 16)
    tg = TimeGrid(0.5, 16)
    m0 = generate_m0(InitialDataConfig(epsilon=0.0, modes=()), grid)
    m, state, summary = run(m0, grid, tg, params, IterateConfig(tol=1e-8, max_iter=10))
    assert state.status == "converged" and state.ell == 1
    assert state.r_norm_history == [0.0]
    assert state.R_norm_history == [0.0]
    assert state.Q_history == [0.0]
    assert state.q_history == []
    assert state.modulus_history == [0.0]
    assert np.array_equal(m[0], m0)
    assert summary.smoothness_ratio == pytest.approx(math.sqrt(tg.t_final), rel=1e-12)


def test_initial_residual_scales_linearly_in_eps(params):
    norms = []
    eps = (0.005, 0.01, 0.02)
    for e in eps:
        grid, tg, m0 = small_setup(eps=e)
        state = initialize(m0, grid, tg)
        L = build_L(params, m0, grid)
        step(state, grid, tg, L, params, IterateConfig(tol=1e-30, max_iter=5))
        norms.append(state.r_norm_history[0])
    slope = np.polyfit(np.log(eps), np.log(norms), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.1)


def test_small_eps_run_contracts(params):
    grid, tg, m0 = small_setup()
    m, state, summary = run(m0, grid, tg, params, IterateConfig(tol=1e-8, max_iter=30))
    assert state.status == "converged"
    assert summary.iterations <= 30
    assert all(q < 1.0 for q in state.q_history)
    assert summary.final_residual_norm < 1e-8
    # initial slice and walls never move
    assert np.array_equal(m[0], m0)


def test_initial_slice_coefficients_never_change(params):
    grid, tg, m0 = small_setup()
    state = initialize(m0, grid, tg)
    first = state.m_hat[0].copy()
    L = build_L(params, m0, grid)
    cfg = IterateConfig(tol=1e-12, max_iter=4)
    while state.status == "running":
        step(state, grid, tg, L, params, cfg)
        assert np.array_equal(state.m_hat[0], first)


def test_telescoping_and_cauchy_audit(params):
    # ||m_l - m_l'|| <= sum_{j in [l', l)} ||R_j|| on the stored iterates
    grid, tg, m0 = small_setup()
    iterates = []
    m, state, summary = run(
        m0, grid, tg, params, IterateConfig(tol=1e-10, max_iter=30),
        on_iteration=lambda s: iterates.append(s.m_current.copy()),
    )
    spec = NormSpec(k=3, band="resolved")
    ell = len(iterates)
    for lo in range(ell - 1):
        for hi in range(lo + 1, ell):
            gap = spacetime_norm(iterates[hi] - iterates[lo], grid, tg, spec).norm
            bound = sum(state.R_norm_history[lo + 1 : hi + 1])
            # relative slack covers the transform round trip between the
            # coefficient state and the stored reconstructions; the absolute
            # slack covers the k = 3 norm's measurement floor on ULP-level
            # differences of unit-size physical fields
            assert gap <= bound * (1 + 1e-6) + 1e-8


def test_divergence_detected(params):
    grid, tg, m0 = small_setup(eps=0.5, n=32, m=32, k=(3, 0))
    m, state, summary = run(m0, grid, tg, params, IterateConfig(tol=1e-8, max_iter=50))
    assert state.status == "diverged"
    assert state.ell <= 50
    w = 3
    assert all(q >= 1.0 for q in state.q_history[-w:])


def test_smoothness_ratio_stable_across_eps(params):
    ratios = []
    for e in (0.01, 0.02, 0.04):
        grid, tg, m0 = small_setup(eps=e, n=32, m=32)
        _, state, summary = run(m0, grid, tg, params, IterateConfig(tol=1e-8, max_iter=30))
        assert state.status == "converged"
        ratios.append(summary.smoothness_ratio)
    assert (max(ratios) - min(ratios)) / min(ratios) <= 0.25


def test_step_refuses_terminal_state(params):
    grid = SpaceGrid(2, 16)
    tg = TimeGrid(0.5, 16)
    m0 = generate_m0(InitialDataConfig(epsilon=0.0, modes=()), grid)
    _, state, _ = run(m0, grid, tg, params, IterateConfig(tol=1e-8, max_iter=5))
    L = build_L(params, m0, grid)
    with pytest.raises(RuntimeError):
        step(state, grid, tg, L, params, IterateConfig(tol=1e-8, max_iter=5))


def test_nan_raises_blowup_with_dump(params):
    grid, tg, m0 = small_setup()
    state = initialize(m0, grid, tg)
    state.m_hat[3, 1, 1, 0] = np.nan
    state.m_current[3, 1, 1, 0] = np.nan
    L = build_L(params, m0, grid)
    with pytest.raises(BlowupError) as excinfo:
        step(state, grid, tg, L, params, IterateConfig(tol=1e-8, max_iter=5))
    assert excinfo.value.dump is state


def test_q_diagnostics_structure(params):
    grid, tg, m0 = small_setup()
    _, state, _ = run(m0, grid, tg, params, IterateConfig(tol=1e-10, max_iter=30))
    diag = q_diagnostics(state)
    assert len(diag.Q) == state.ell
    assert len(diag.q_over_Q) == len(state.q_history)
    assert all(np.isfinite(x) for x in diag.q_over_Q)
    # Q_j plateaus once the correction tail becomes negligible: the bracket
    # is dominated by the accumulated first-correction norms, so it is not
    # monotonically nonincreasing, but its increments die out geometrically
    rel_steps = [
        abs(diag.Q[j + 1] - diag.Q[j]) / diag.Q[j] for j in range(1, len(diag.Q) - 1)
    ]
    assert rel_steps[-1] <= 1e-4
    assert diag.correlation is None or -1.0 <= diag.correlation <= 1.0


def test_geometric_fit():
    hist = [1.0, 0.5, 0.25, 0.125, 0.0625]
    assert geometric_fit(hist) == pytest.approx(0.5, rel=1e-12)
    assert geometric_fit([1.0]) is None
    assert geometric_fit([0.0, 0.0]) is None


def test_comparison_scheme_implicit_euler_converges_slowly(params):
    # the spec-shaped implicit-Euler inner solve still contracts, but its
    # scheme mismatch leaves a 1 - O(dt) tail; collocation reaches the same
    # tolerance in a handful of steps
    grid, tg, m0 = small_setup()
    cfg = IterateConfig(tol=1e-8, max_iter=12)
    _, st_coll, _ = run(m0, grid, tg, params, cfg, HeatSolveConfig(scheme="stencil-collocation"))
    _, st_ie, _ = run(m0, grid, tg, params, cfg, HeatSolveConfig(scheme="implicit-euler"))
    assert st_coll.status == "converged"
    assert st_ie.status in ("running", "max-iterations")
    assert st_ie.r_norm_history[-1] > st_coll.r_norm_history[-1]


def test_iterate_config_validation():
    with pytest.raises(Exception):
        IterateConfig(tol=0.0)
    with pytest.raises(Exception):
        IterateConfig(max_iter=0)
    with pytest.raises(Exception):
        IterateConfig(diverge_window=1)
    with pytest.raises(Exception):
        IterateConfig(k=1)
