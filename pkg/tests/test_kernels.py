"""Both kernel backends must compute the same quantities."""

import numpy as np

from qcommit import _kernels as K


def _random_events(rng, n):
    return rng.integers(-1000, 1000, size=(n, 4)).astype(np.int64)


def test_interval_backends_agree(rng):
    a = _random_events(rng, 500)
    b = _random_events(rng, 500)
    jit = K._interval_squared_batch_jit(a, b)
    ref = K._interval_squared_batch_numpy(a, b)
    assert np.array_equal(jit, ref)


def test_causal_code_backends_agree(rng):
    a = _random_events(rng, 500)
    b = _random_events(rng, 500)
    # force some coincident and lightlike pairs into the batch
    b[:50] = a[:50]
    b[50:100, 0] = a[50:100, 0] + np.abs(a[50:100, 1]) + 7
    b[50:100, 1] = a[50:100, 1] + np.abs(a[50:100, 1]) + 7
    b[50:100, 2] = a[50:100, 2]
    b[50:100, 3] = a[50:100, 3]
    jit = K._causal_code_batch_jit(a, b)
    ref = K._causal_code_batch_numpy(a, b)
    assert np.array_equal(jit, ref)
    assert (jit[:50] == K.COINCIDENT).all()
    assert (jit[50:100] == K.LIGHTLIKE_FUTURE).all()


def test_clone_objective_backends_agree(rng):
    d, m, n_anc = 3, 2, 9
    big = d**m * n_anc
    g = rng.normal(size=(big, d)) + 1j * rng.normal(size=(big, d))
    v, _ = np.linalg.qr(g)
    v = np.ascontiguousarray(v)
    fe_j = K._branch_entanglement_fidelities_jit(v, d, m, n_anc)
    fe_n = K._branch_entanglement_fidelities_numpy(v, d, m, n_anc)
    assert np.allclose(fe_j, fe_n, atol=1e-12)
    oj, gj = K._clone_objective_and_grad_jit(v, d, m, n_anc)
    on, gn = K._clone_objective_and_grad_numpy(v, d, m, n_anc)
    assert abs(oj - on) < 1e-12
    assert np.allclose(gj, gn, atol=1e-12)
    assert abs(oj - K._avg_fidelity_sum_jit(v, d, m, n_anc)) < 1e-12


def test_gradient_is_ascent_direction(rng):
    d, m, n_anc = 2, 2, 2
    big = d**m * n_anc
    g = rng.normal(size=(big, d)) + 1j * rng.normal(size=(big, d))
    v, _ = np.linalg.qr(g)
    v = np.ascontiguousarray(v)
    obj, grad = K.clone_objective_and_grad(v, d, m, n_anc)
    stepped, _ = np.linalg.qr(v + 1e-4 * grad)
    obj2, _ = K.clone_objective_and_grad(np.ascontiguousarray(stepped), d, m, n_anc)
    assert obj2 >= obj - 1e-12


def test_backend_selected():
    assert K.BACKEND in ("numba", "numpy")
