import numpy as np
import pytest

from conftest import best_support_bruteforce
from ithresh.analysis import kkt_residual, restricted_gram_deviation
from ithresh.core import soft_threshold, spectral_norm_symmetric
from ithresh.dictionaries import (
    Dictionary,
    SparseSignal,
    gen_gaussian,
    gen_identity_plus_hadamard,
    gen_signal,
)
from ithresh.exceptions import ArgumentError, FormatError, NumericalError
from ithresh.solvers import (
    SolverConfig,
    geometric_schedule,
    iht_solve,
    ist_fixed,
    ist_solve,
    ita_schedule_solve,
    omp_solve,
    p1_objective,
    read_trace_csv,
    write_trace_csv,
)


@pytest.fixture(scope="module")
def idh64():
    return gen_identity_plus_hadamard(64)


@pytest.fixture(scope="module")
def idh256():
    return gen_identity_plus_hadamard(256)


def test_config_validation():
    with pytest.raises(ArgumentError):
        SolverConfig(max_iters=0)
    with pytest.raises(ArgumentError):
        SolverConfig(conv_tol=0)
    with pytest.raises(ArgumentError):
        SolverConfig(k=-1)


def test_iht_orthonormal_exact_at_first_step(orthonormal_dict):
    d = orthonormal_dict
    truth = SparseSignal(8, ((1, 3.0), (6, -1.5)))
    y = d.matrix @ truth.to_dense()
    r = iht_solve(d, y, SolverConfig(k=2), truth)
    np.testing.assert_allclose(r.trace[0].err_l2, 0.0, atol=1e-14)
    assert r.trace[0].active == (1, 6)
    assert r.converged
    np.testing.assert_allclose(r.x_hat, truth.to_dense(), atol=1e-14)


def test_iht_single_atom_first_step(idh64):
    y = 5 * idh64.matrix[:, 3]
    r = iht_solve(idh64, y, SolverConfig(k=1))
    assert r.trace[0].active == (3,)


@pytest.mark.parametrize("seed", range(3))
def test_iht_matches_bruteforce_support(idh64, seed):
    truth = gen_signal(128, 2, 1, seed)
    y = idh64.matrix @ truth.to_dense()
    r = iht_solve(idh64, y, SolverConfig(k=2), truth)
    oracle, res = best_support_bruteforce(idh64.matrix, y, 2)
    assert res < 1e-12
    assert tuple(np.flatnonzero(r.x_hat)) == oracle == truth.support


def test_iht_at_most_k_nonzeros_and_trace_shape(idh64):
    rng = np.random.default_rng(0)
    y = rng.standard_normal(64)
    r = iht_solve(idh64, y, SolverConfig(k=4, max_iters=40))
    assert r.iterations_run == len(r.trace) <= 40
    assert all(s.support_size <= 4 for s in r.trace)
    assert all(s.err_l2 is None and s.gamma is None for s in r.trace)
    assert [s.t for s in r.trace] == list(range(1, r.iterations_run + 1))


def test_iht_fixed_point(idh64):
    truth = gen_signal(128, 3, 1, 4)
    x_o = truth.to_dense()
    z = x_o + idh64.matrix.T @ (idh64.matrix @ x_o - idh64.matrix @ x_o)
    np.testing.assert_array_equal(z, x_o)
    # a solve that reaches x_o stays there
    r = iht_solve(idh64, idh64.matrix @ x_o, SolverConfig(k=3), truth)
    assert r.trace[-1].active == truth.support


def test_iht_records_threshold_value(idh64):
    truth = gen_signal(128, 2, 1, 1)
    y = idh64.matrix @ truth.to_dense()
    r = iht_solve(idh64, y, SolverConfig(k=2, max_iters=1))
    z1 = idh64.matrix.T @ y
    assert r.trace[0].lam == sorted(np.abs(z1), reverse=True)[2]
    assert r.status == "max_iters_reached"


def test_ist_orthonormal_support_and_bias(orthonormal_dict):
    d = orthonormal_dict
    truth = SparseSignal(8, ((0, 4.0), (5, -2.0), (7, 1.0)))
    y = d.matrix @ truth.to_dense()
    r = ist_solve(d, y, SolverConfig(k=3, max_iters=1), truth)
    step = r.trace[0]
    assert step.active == (0, 5, 7)
    # all other coordinates of z^1 vanish, so the threshold is ~0 and the bias tiny
    assert step.lam < 1e-14
    mags = np.abs(r.x_hat[[0, 5, 7]])
    assert np.all(mags <= np.array([4.0, 2.0, 1.0]) + 1e-14)


def test_ist_bias_is_threshold():
    # orthonormal dictionary but k below the true sparsity: survivors shrink by lambda_1
    d = Dictionary(np.eye(4))
    y = np.array([4.0, -2.0, 1.0, 0.0])
    r = ist_solve(d, y, SolverConfig(k=2, max_iters=1))
    assert r.trace[0].lam == 1.0
    np.testing.assert_array_equal(r.x_hat, [3.0, -1.0, 0.0, 0.0])


def test_ist_single_atom_first_step(idh64):
    # mu = 1/8 < 1/4.1
    r = ist_solve(idh64, 5 * idh64.matrix[:, 3], SolverConfig(k=1))
    assert r.trace[0].active == (3,)


@pytest.mark.parametrize("seed", range(3))
def test_ist_matches_bruteforce_at_64(idh64, seed):
    truth = gen_signal(128, 2, 1, seed)
    y = idh64.matrix @ truth.to_dense()
    r = ist_solve(idh64, y, SolverConfig(k=2), truth)
    oracle, _ = best_support_bruteforce(idh64.matrix, y, 2)
    assert tuple(np.flatnonzero(r.x_hat)) == oracle


def test_ist_256_within_bound(idh256):
    for seed in range(5):
        truth = gen_signal(512, 3, 1, seed)
        y = idh256.matrix @ truth.to_dense()
        r = ist_solve(idh256, y, SolverConfig(k=3), truth)
        assert tuple(np.flatnonzero(r.x_hat)) == truth.support
        detect = next(s.t for s in r.trace if s.detected == 3)
        assert detect <= 21


def test_ist_fixed_zero_solution(idh64):
    y = idh64.matrix @ gen_signal(128, 3, 1, 0).to_dense()
    lam = float(np.max(np.abs(idh64.matrix.T @ y)))
    r = ist_fixed(idh64, y, lam, SolverConfig())
    np.testing.assert_array_equal(r.x_hat, 0.0)
    assert kkt_residual(idh64, y, r.x_hat, lam) == 0.0


def test_ist_fixed_orthonormal_one_step(orthonormal_dict):
    d = orthonormal_dict
    y = np.random.default_rng(5).standard_normal(8)
    r = ist_fixed(d, y, 0.3, SolverConfig())
    expected = soft_threshold(d.matrix.T @ y, 0.3)
    np.testing.assert_allclose(r.x_hat, expected, atol=1e-14)
    assert r.iterations_run == 2 and r.converged
    assert kkt_residual(d, y, r.x_hat, 0.3) < 1e-12


def test_ist_fixed_scaled_step_reaches_kkt():
    # unit-norm Gaussian 64x128 has ||Phi||^2 > 2, so use step 1/||Phi||^2
    d = gen_gaussian(64, 128, 3)
    y = d.matrix @ gen_signal(128, 5, 1, 3).to_dense()
    lam = 0.1 * float(np.max(np.abs(d.matrix.T @ y)))
    step = 1.0 / np.linalg.norm(d.matrix, 2) ** 2
    r = ist_fixed(d, y, lam, SolverConfig(max_iters=100_000), step=step)
    assert r.converged
    assert kkt_residual(d, y, r.x_hat, lam) <= 1e-6
    obj = [s.objective for s in r.trace]
    assert all(b <= a + 1e-10 for a, b in zip(obj, obj[1:]))


def test_ist_fixed_monotone_when_contractive():
    # ||Phi^T Phi - I|| < 1 needs a square well-conditioned Phi
    rng = np.random.default_rng(8)
    m = np.eye(6) + 0.05 * rng.standard_normal((6, 6))
    d = Dictionary.normalized(m)
    gram_dev = spectral_norm_symmetric(d.matrix.T @ d.matrix - np.eye(6))
    assert gram_dev < 1
    y = rng.standard_normal(6)
    r = ist_fixed(d, y, 0.2, SolverConfig(max_iters=5000))
    obj = [p1_objective(d.matrix, y, np.zeros(6), 0.2)] + [s.objective for s in r.trace]
    assert all(b <= a + 1e-10 for a, b in zip(obj, obj[1:]))
    assert kkt_residual(d, y, r.x_hat, 0.2) < 1e-9


def test_ist_fixed_divergence_raises():
    d = gen_gaussian(64, 128, 0)
    y = d.matrix @ gen_signal(128, 5, 1, 0).to_dense()
    lam = 0.1 * float(np.max(np.abs(d.matrix.T @ y)))
    with pytest.raises(NumericalError, match="diverged"):
        ist_fixed(d, y, lam, SolverConfig(max_iters=100_000))


def test_ist_fixed_rejects_nonpositive_lambda(idh64):
    with pytest.raises(ArgumentError):
        ist_fixed(idh64, np.zeros(64), 0.0, SolverConfig())


def test_geometric_schedule():
    s = geometric_schedule(1.0, 0.5, 0.1)
    assert s == [1.0, 0.5, 0.25, 0.125, 0.1]
    with pytest.raises(ArgumentError):
        geometric_schedule(1.0, 1.5, 0.1)


def test_schedule_constant_matches_ist_fixed(idh64):
    y = idh64.matrix @ gen_signal(128, 4, 2, 1).to_dense()
    cfg = SolverConfig(max_iters=300)
    a = ita_schedule_solve(idh64, y, "soft", [0.05], cfg)
    b = ist_fixed(idh64, y, 0.05, cfg)
    assert a.iterations_run == b.iterations_run
    assert a.x_hat.tobytes() == b.x_hat.tobytes()


def test_schedule_above_correlation_gives_zero_first_iterate(idh64):
    y = idh64.matrix @ gen_signal(128, 2, 1, 0).to_dense()
    top = float(np.max(np.abs(idh64.matrix.T @ y)))
    r = ita_schedule_solve(idh64, y, "hard", [2 * top, top / 10, 1e-9], SolverConfig())
    assert r.trace[0].support_size == 0
    # the zero first iterate must not be mistaken for convergence
    assert r.iterations_run > 1


def test_schedule_validation(idh64):
    y = np.zeros(64)
    with pytest.raises(ArgumentError):
        ita_schedule_solve(idh64, y, "hard", [0.1, 0.2], SolverConfig())
    with pytest.raises(ArgumentError):
        ita_schedule_solve(idh64, y, "medium", [0.1], SolverConfig())
    with pytest.raises(ArgumentError):
        ita_schedule_solve(idh64, y, "hard", [], SolverConfig())


@pytest.mark.parametrize("mode", ["hard", "soft"])
def test_schedule_steady_state_bound(mode):
    d = gen_gaussian(128, 256, 2)
    truth = gen_signal(256, 4, 1, 2)
    y = d.matrix @ truth.to_dense()
    l0 = float(np.max(np.abs(d.matrix.T @ y)))
    sched = [l0 * 0.9 ** t for t in range(60)]
    r = ita_schedule_solve(d, y, mode, sched, SolverConfig(max_iters=2000, record_gamma=True),
                           truth)
    gammas = [s.gamma for s in r.trace]
    assert all(g is not None for g in gammas)
    gamma = max(gammas)
    assert gamma < 1
    bound = np.sqrt(d.n) * r.trace[-1].lam / (1 - gamma)
    assert r.trace[-1].err_l2 <= bound + 1e-9


def test_gamma_recorded_over_union_support():
    d = gen_gaussian(32, 64, 1)
    truth = gen_signal(64, 2, 1, 1)
    y = d.matrix @ truth.to_dense()
    r = ita_schedule_solve(d, y, "hard", [0.5, 0.2], SolverConfig(max_iters=3, record_gamma=True),
                           truth)
    prev = ()
    for s in r.trace:
        L = sorted(set(s.active) | set(prev) | set(truth.support))
        assert s.gamma == restricted_gram_deviation(d, L)
        prev = s.active


def test_omp_single_atom(idh64):
    r = omp_solve(idh64, 3 * idh64.matrix[:, 5], 1)
    assert r.iterations_run == 1
    assert tuple(np.flatnonzero(r.x_hat)) == (5,)
    np.testing.assert_allclose(r.x_hat[5], 3.0)
    np.testing.assert_allclose(idh64.matrix @ r.x_hat, 3 * idh64.matrix[:, 5], atol=1e-14)


def test_omp_early_stop_on_zero_residual(idh64):
    r = omp_solve(idh64, 3 * idh64.matrix[:, 5], 4)
    assert r.iterations_run == 1 and r.converged


def test_omp_exact_k_steps(idh256):
    for seed in range(5):
        truth = gen_signal(512, 8, 1, seed)
        r = omp_solve(idh256, idh256.matrix @ truth.to_dense(), 8, truth=truth)
        assert r.iterations_run == 8
        assert tuple(np.flatnonzero(r.x_hat)) == truth.support
        assert all(s.orthogonality <= 1e-8 for s in r.trace)


@pytest.mark.parametrize("seed", range(4))
def test_omp_small_instance_matches_bruteforce(seed):
    d = gen_gaussian(4, 8, seed)
    # 1 <= (1 + 1/mu)/2 for any mu <= 1, so k = 1 is always covered
    truth = gen_signal(8, 1, 1, seed)
    y = d.matrix @ truth.to_dense()
    r = omp_solve(d, y, 1)
    oracle, _ = best_support_bruteforce(d.matrix, y, 1)
    assert tuple(np.flatnonzero(r.x_hat)) == oracle


def test_omp_singular_gram_raises():
    # columns 0 and 1 are nearly parallel, so once both are selected the
    # Gram matrix is numerically singular
    m = np.zeros((3, 3))
    m[0, 0] = 1.0
    m[:, 1] = [1.0, 1e-9, 0.0]
    m[:, 1] /= np.linalg.norm(m[:, 1])
    m[2, 2] = 1.0
    d = Dictionary(m)
    y = np.array([0.0, 1.0, 0.1])
    with pytest.raises(NumericalError):
        omp_solve(d, y, 3)


def test_dimension_mismatch(idh64):
    with pytest.raises(ArgumentError):
        iht_solve(idh64, np.zeros(10), SolverConfig(k=1))
    with pytest.raises(ArgumentError):
        ist_solve(idh64, np.zeros(64), SolverConfig(k=1), truth=gen_signal(64, 1, 1, 0))
    with pytest.raises(ArgumentError):
        iht_solve(idh64, np.zeros(64), SolverConfig(k=0))


def test_trace_csv_round_trip(tmp_path, idh64):
    truth = gen_signal(128, 3, 2, 0)
    y = idh64.matrix @ truth.to_dense()
    r = ist_solve(idh64, y, SolverConfig(k=3, record_gamma=True), truth)
    path = tmp_path / "trace.csv"
    write_trace_csv(path, r)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("iter,lambda,support_size,detected,err_l2,err_zmax,"
                               "support_changed,gamma")
    back = read_trace_csv(path)
    assert len(back) == r.iterations_run
    for a, b in zip(r.trace, back):
        assert (a.t, a.lam, a.support_size, a.detected, a.err_l2, a.err_zmax,
                a.support_changed, a.gamma, a.err_active) == \
               (b.t, b.lam, b.support_size, b.detected, b.err_l2, b.err_zmax,
                b.support_changed, b.gamma, b.err_active)


def test_trace_csv_empty_gamma_column(tmp_path, idh64):
    r = iht_solve(idh64, idh64.matrix[:, 0], SolverConfig(k=1))
    write_trace_csv(tmp_path / "t.csv", r)
    row = (tmp_path / "t.csv").read_text().splitlines()[1].split(",")
    assert row[7] == "" and row[4] == ""


def test_trace_csv_errors(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("a,b\n")
    with pytest.raises(FormatError):
        read_trace_csv(p)
    p.write_text("iter,lambda,support_size,detected,err_l2,err_zmax,support_changed,gamma\n"
                 "1,x,1,1,,,0,\n")
    with pytest.raises(FormatError) as info:
        read_trace_csv(p)
    assert info.value.line == 2
