"""Hot numeric kernels with two interchangeable backends.

The jitted backend (numba ``@njit``) is the default; setting the environment
variable ``QCOMMIT_PURE_NUMPY=1`` before import selects vectorized pure-numpy
implementations instead.  Both backends compute identical quantities (up to
floating-point summation order); ``benchmarks/bench_kernels.py`` compares
their throughput.

Kernels are pure functions: no RNG state lives here, so results are
reproducible on either backend.
"""

import os

import numpy as np

# Causal classification codes shared with spacetime.CausalRelation.
TIMELIKE_FUTURE = 2
LIGHTLIKE_FUTURE = 1
SPACELIKE = 0
LIGHTLIKE_PAST = -1
TIMELIKE_PAST = -2
COINCIDENT = 3

_PURE_NUMPY = os.environ.get("QCOMMIT_PURE_NUMPY", "").strip().lower() in (
    "1",
    "true",
    "yes",
)

if not _PURE_NUMPY:
    try:
        from numba import njit

        BACKEND = "numba"
    except ImportError:  # pragma: no cover - exercised via the env flag path
        BACKEND = "numpy"
else:
    BACKEND = "numpy"

if BACKEND == "numpy":

    def njit(*args, **kwargs):
        """No-op stand-in so the jitted definitions below stay importable."""
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


# ---------------------------------------------------------------------------
# Minkowski interval / causal order, batched over int64 event arrays
# ---------------------------------------------------------------------------


@njit(cache=True)
def _interval_squared_batch_jit(a, b):
    n = a.shape[0]
    out = np.empty(n, dtype=np.int64)
    for k in range(n):
        dt = b[k, 0] - a[k, 0]
        dx = b[k, 1] - a[k, 1]
        dy = b[k, 2] - a[k, 2]
        dz = b[k, 3] - a[k, 3]
        out[k] = dt * dt - dx * dx - dy * dy - dz * dz
    return out


def _interval_squared_batch_numpy(a, b):
    d = b.astype(np.int64) - a.astype(np.int64)
    return d[:, 0] ** 2 - d[:, 1] ** 2 - d[:, 2] ** 2 - d[:, 3] ** 2


@njit(cache=True)
def _causal_code_batch_jit(a, b):
    n = a.shape[0]
    out = np.empty(n, dtype=np.int8)
    for k in range(n):
        dt = b[k, 0] - a[k, 0]
        dx = b[k, 1] - a[k, 1]
        dy = b[k, 2] - a[k, 2]
        dz = b[k, 3] - a[k, 3]
        s2 = dt * dt - dx * dx - dy * dy - dz * dz
        if dt == 0 and dx == 0 and dy == 0 and dz == 0:
            out[k] = COINCIDENT
        elif s2 < 0:
            out[k] = SPACELIKE
        elif s2 > 0:
            out[k] = TIMELIKE_FUTURE if dt > 0 else TIMELIKE_PAST
        else:
            out[k] = LIGHTLIKE_FUTURE if dt > 0 else LIGHTLIKE_PAST
    return out


def _causal_code_batch_numpy(a, b):
    d = b.astype(np.int64) - a.astype(np.int64)
    s2 = d[:, 0] ** 2 - d[:, 1] ** 2 - d[:, 2] ** 2 - d[:, 3] ** 2
    dt = d[:, 0]
    out = np.full(a.shape[0], SPACELIKE, dtype=np.int8)
    out[(s2 > 0) & (dt > 0)] = TIMELIKE_FUTURE
    out[(s2 > 0) & (dt < 0)] = TIMELIKE_PAST
    out[(s2 == 0) & (dt > 0)] = LIGHTLIKE_FUTURE
    out[(s2 == 0) & (dt < 0)] = LIGHTLIKE_PAST
    out[np.all(d == 0, axis=1)] = COINCIDENT
    return out


# ---------------------------------------------------------------------------
# Cloning-attack objective: per-branch average fidelity of an isometry
# ---------------------------------------------------------------------------
#
# An attack is an isometry V : C^d -> (C^d)^{tensor m} x C^n_anc, stored as a
# (d^m * n_anc, d) complex matrix in row-major index order
# (slot_0, ..., slot_{m-1}, ancilla).  The average (over uniform random pure
# inputs) of the branch-i output fidelity with the input follows from the
# branch channel's entanglement fidelity
#
#     F_e(i) = (1/d^2) * sum_{rest,anc} | sum_j V[(slot_i=j, rest, anc), j] |^2
#     Fbar(i) = (1 + d * F_e(i)) / (d + 1)
#
# This is exact, so no finite test set of inputs is needed and the objective
# can never be overfit above the true optimum.


@njit(cache=True)
def _branch_entanglement_fidelities_jit(V, d, m, n_anc):
    out = np.empty(m, dtype=np.float64)
    for i in range(m):
        stride = n_anc
        for _ in range(m - 1 - i):
            stride *= d
        n_hi = 1
        for _ in range(i):
            n_hi *= d
        acc = 0.0
        for hi in range(n_hi):
            base = hi * d * stride
            for lo in range(stride):
                z = 0.0 + 0.0j
                for j in range(d):
                    z += V[base + j * stride + lo, j]
                acc += z.real * z.real + z.imag * z.imag
        out[i] = acc / (d * d)
    return out


def _branch_entanglement_fidelities_numpy(V, d, m, n_anc):
    T = V.reshape((d,) * m + (n_anc, d))
    out = np.empty(m, dtype=np.float64)
    for i in range(m):
        # contract slot i against the input (reference) index, then sum the
        # squared magnitudes over everything that is traced out
        diag = np.diagonal(T, axis1=i, axis2=m + 1)
        z = diag.sum(axis=-1)
        out[i] = float(np.sum(np.abs(z) ** 2)) / (d * d)
    return out


@njit(cache=True)
def _avg_fidelity_sum_jit(V, d, m, n_anc):
    fe = _branch_entanglement_fidelities_jit(V, d, m, n_anc)
    total = 0.0
    for i in range(m):
        total += (1.0 + d * fe[i]) / (d + 1.0)
    return total


def _avg_fidelity_sum_numpy(V, d, m, n_anc):
    fe = _branch_entanglement_fidelities_numpy(V, d, m, n_anc)
    return float(np.sum((1.0 + d * fe) / (d + 1.0)))


# The objective is quadratic in V, so its Wirtinger gradient is linear and the
# attack search can ascend it directly (QR retraction happens at the caller).


@njit(cache=True)
def _clone_objective_and_grad_jit(V, d, m, n_anc):
    grad = np.zeros_like(V)
    obj = 0.0
    c = 1.0 / (d * (d + 1.0))
    for i in range(m):
        stride = n_anc
        for _ in range(m - 1 - i):
            stride *= d
        n_hi = 1
        for _ in range(i):
            n_hi *= d
        acc = 0.0
        for hi in range(n_hi):
            base = hi * d * stride
            for lo in range(stride):
                z = 0.0 + 0.0j
                for j in range(d):
                    z += V[base + j * stride + lo, j]
                acc += z.real * z.real + z.imag * z.imag
                for j in range(d):
                    grad[base + j * stride + lo, j] += c * z
        fe = acc / (d * d)
        obj += (1.0 + d * fe) / (d + 1.0)
    return obj, grad


def _clone_objective_and_grad_numpy(V, d, m, n_anc):
    T = V.reshape((d,) * m + (n_anc, d))
    grad = np.zeros_like(T)
    obj = 0.0
    c = 1.0 / (d * (d + 1.0))
    for i in range(m):
        diag = np.diagonal(T, axis1=i, axis2=m + 1)
        z = diag.sum(axis=-1)
        fe = float(np.sum(np.abs(z) ** 2)) / (d * d)
        obj += (1.0 + d * fe) / (d + 1.0)
        g_view = np.moveaxis(grad, (i, m + 1), (0, 1))
        for j in range(d):
            g_view[j, j] += c * z
    return obj, grad.reshape(V.shape)


if BACKEND == "numba":
    interval_squared_batch = _interval_squared_batch_jit
    causal_code_batch = _causal_code_batch_jit
    branch_entanglement_fidelities = _branch_entanglement_fidelities_jit
    avg_fidelity_sum = _avg_fidelity_sum_jit
    clone_objective_and_grad = _clone_objective_and_grad_jit
else:
    interval_squared_batch = _interval_squared_batch_numpy
    causal_code_batch = _causal_code_batch_numpy
    branch_entanglement_fidelities = _branch_entanglement_fidelities_numpy
    avg_fidelity_sum = _avg_fidelity_sum_numpy
    clone_objective_and_grad = _clone_objective_and_grad_numpy
