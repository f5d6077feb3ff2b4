"""Exact unitary dynamics: state evolution and Heisenberg dressing.

Propagators are built by Hermitian eigendecomposition rather than by any
stepping scheme: at desk-scale dimensions exactness of the unitary matters
more than speed.  Number-conserving generators are diagonalized per
particle-number sector (the basis enumeration keeps sectors contiguous),
which is the only performance lever needed here.
"""

from __future__ import annotations

import numpy as np

from .fock import FieldOperator

UNITARITY_TOL = 1e-10
HERMITICITY_TOL = 1e-12


def hermitian_eig(op):
    """Eigenpairs of a Hermitian FieldOperator, ascending, deterministic.

    Uses per-sector dense diagonalization when the operator conserves
    particle number.
    """
    if not op.is_hermitian(tol=1e-10):
        raise ValueError("operator is not Hermitian")
    dim = op.basis.dim
    dense = op.to_dense()
    if not op.number_conserving:
        return np.linalg.eigh(dense)
    w = np.empty(dim)
    v = np.zeros((dim, dim), dtype=complex)
    for _, sl in op.basis.sector_slices():
        block = dense[sl, sl]
        wb, vb = np.linalg.eigh(block)
        w[sl] = wb
        v[sl, sl] = vb
    return w, v


def propagator(H, dt, hbar=1.0):
    """U = exp(-i H dt / hbar) for Hermitian H."""
    dev = (H - H.dag()).max_abs()
    if dev >= 1e-10:
        raise ValueError(f"propagator needs Hermitian H, ||H - H^dag||_max = {dev:.3e}")
    w, v = hermitian_eig(H.as_hermitian(tol=1e-10))
    phases = np.exp(-1j * w * dt / hbar)
    u = (v * phases) @ v.conj().T
    unit_dev = np.max(np.abs(u @ u.conj().T - np.eye(len(w))))
    if unit_dev >= UNITARITY_TOL:
        raise AssertionError(f"propagator lost unitarity: {unit_dev:.3e}")
    return FieldOperator(H.basis, u, hermitian=False,
                         number_conserving=H.number_conserving, check=False)


def _step_unitaries(H_of_t, t0, t1, n_steps, hbar):
    """Midpoint-sampled piecewise-constant propagators, first step first."""
    if n_steps < 1:
        raise ValueError("need n_steps >= 1")
    dt = (t1 - t0) / n_steps
    out = []
    for k in range(n_steps):
        tm = t0 + (k + 0.5) * dt
        out.append(propagator(H_of_t(tm), dt, hbar=hbar))
    return out


def evolve_state(rho, H_of_t, t0, t1, n_steps=1, hbar=1.0):
    """rho(t1) = U rho U^dag composed over midpoint-sampled steps.

    H_of_t may be a FieldOperator (time-independent) or a callable t -> H.
    Unitary conjugation preserves trace, Hermiticity and spectrum exactly.
    """
    if isinstance(H_of_t, FieldOperator):
        fixed = H_of_t
        H_of_t = lambda t: fixed
        n_steps = 1
    m = np.asarray(rho, dtype=complex)
    for u in _step_unitaries(H_of_t, t0, t1, n_steps, hbar):
        ud = u.to_dense()
        m = ud @ m @ ud.conj().T
    return m


def heisenberg(A, H_of_t, t0, t1, n_steps=1, hbar=1.0):
    """Heisenberg-evolved observable, the dual dressing of evolve_state.

    Satisfies Tr(A rho(t1)) = Tr(heisenberg(A) rho) for any initial rho.
    """
    if isinstance(H_of_t, FieldOperator):
        fixed = H_of_t
        H_of_t = lambda t: fixed
        n_steps = 1
    m = A.to_dense() if isinstance(A, FieldOperator) else np.asarray(A, dtype=complex)
    basis = A.basis if isinstance(A, FieldOperator) else None
    for u in _step_unitaries(H_of_t, t0, t1, n_steps, hbar):
        ud = u.to_dense()
        m = ud.conj().T @ m @ ud
    if basis is None:
        return m
    return FieldOperator(basis, m, hermitian=False, number_conserving=False,
                         check=False)


class Dresser:
    """Cached Heisenberg dressing A -> exp(+iHt/hbar) A exp(-iHt/hbar).

    Diagonalizes the (time-independent) Hamiltonian once; each dressing is
    then an elementwise phase mask in the eigenbasis.  Negative times give
    the retarded operators A(-s) used by the history integrals.
    """

    def __init__(self, H, hbar=1.0):
        self.hbar = hbar
        self.w, self.v = hermitian_eig(H.as_hermitian(tol=1e-10))
        self._phase_cache = {}

    def to_eigenbasis(self, A):
        m = A.to_dense() if isinstance(A, FieldOperator) else np.asarray(A)
        return self.v.conj().T @ m @ self.v

    def from_eigenbasis(self, m):
        return self.v @ m @ self.v.conj().T

    def _mask(self, t):
        key = float(t)
        mask = self._phase_cache.get(key)
        if mask is None:
            phase = np.exp(1j * self.w * t / self.hbar)
            mask = np.outer(phase, phase.conj())
            self._phase_cache[key] = mask
        return mask

    def dress_eig(self, A_eig, t):
        """Dress an operator already expressed in the eigenbasis."""
        return self._mask(t) * A_eig

    def dress(self, A, t):
        return self.from_eigenbasis(self.dress_eig(self.to_eigenbasis(A), t))
