"""Brute-force reference computations, deliberately independent of the package code."""

import itertools

import numpy as np


def taylor_expm(m, terms=80):
    """exp(m) by plain power-series summation (fine for ‖m‖ ≲ 10)."""
    out = np.eye(m.shape[0], dtype=complex)
    term = np.eye(m.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ m / k
        out = out + term
    return out


def kron_entries(a, b):
    """Kronecker product from its defining index formula."""
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for i, j, k, l in itertools.product(range(ra), range(ca), range(rb), range(cb)):
        out[i * rb + k, j * cb + l] = a[i, j] * b[k, l]
    return out


def partial_trace_loops(rho, dims, keep):
    """Reduced matrix of factor ``keep`` by explicit summation over multi-indices."""
    n = len(dims)
    d = dims[keep]
    out = np.zeros((d, d), dtype=complex)
    strides = [int(np.prod(dims[i + 1:])) for i in range(n)]
    others = [range(dims[i]) if i != keep else [None] for i in range(n)]
    for rest in itertools.product(*others):
        for a in range(d):
            for b in range(d):
                ia = sum((a if i == keep else rest[i]) * strides[i] for i in range(n))
                ib = sum((b if i == keep else rest[i]) * strides[i] for i in range(n))
                out[a, b] += rho[ia, ib]
    return out


def random_state(rng, dim=4):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_unitary(rng, dim):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


# Qubit Paulis in basis (g, e) with σz = |e><e| - |g><g| and σy = -i(|e><g| - |g><e|), written out by hand.
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, 1j], [-1j, 0]], dtype=complex)
SZ = np.array([[-1, 0], [0, 1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def bloch_of_target(chi):
    """Bloch vector of the first qubit of a two-qubit pure state, by expectation values."""
    chi = np.asarray(chi, dtype=complex)
    return np.array([np.vdot(chi, np.kron(s, I2) @ chi).real for s in (SX, SY, SZ)])
