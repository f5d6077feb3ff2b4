"""Truncated Fock spaces and the creation/annihilation operator algebra.

The state space is the span of occupation-number vectors over ``L * g``
modes (``g`` internal components per lattice site, site-major ordering),
truncated by *total* particle number ``n_max``.  Truncation by total number
keeps every fixed-particle sector intact, which is what the one- and
two-quanton constructions elsewhere in the package rely on.

Enumeration is deterministic: states are sorted by total occupation first,
then lexicographically with mode 0 as the least significant digit, so two
builds of the same basis are bit-identical.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

BOSE = "bose"
FERMI = "fermi"

DEFAULT_DIM_CAP = 20_000
DIM_CAP_ENV = "FOCKBOX_DIM_CAP"

HERMITICITY_TOL = 1e-12


class DimensionCapError(ValueError):
    """Basis construction refused: dimension exceeds the configured cap."""

    def __init__(self, dim, cap, statistics, modes, n_max):
        self.dim = dim
        self.cap = cap
        super().__init__(
            f"Fock dimension {dim} exceeds cap {cap} "
            f"({statistics}, {modes} modes, n_max={n_max}); "
            f"raise the cap explicitly or via {DIM_CAP_ENV} if intended"
        )


def dim_cap_from_env(default=DEFAULT_DIM_CAP):
    raw = os.environ.get(DIM_CAP_ENV)
    if raw is None:
        return default
    return int(raw)


def mode_index(site, component, g):
    """Canonical dense mode label for (site, component), site-major."""
    if component < 0 or component >= g:
        raise ValueError(f"component {component} outside [0, {g})")
    return site * g + component


def fock_dimension(statistics, modes, n_max):
    """Exact combinatorial dimension of the truncated space."""
    if statistics == FERMI:
        top = min(n_max, modes)
        return sum(math.comb(modes, n) for n in range(top + 1))
    if statistics == BOSE:
        return sum(math.comb(n + modes - 1, modes - 1) for n in range(n_max + 1))
    raise ValueError(f"unknown statistics {statistics!r}")


def _occupations_with_total(modes, total, per_mode_max):
    """All occupation tuples with the given total, most-significant mode last.

    Yields in ascending lexicographic order of the reversed tuple, i.e. the
    occupation vector read as a little-endian number.
    """
    if modes == 1:
        if total <= per_mode_max:
            yield (total,)
        return
    # ascending occupation of the last (most significant) mode keeps the
    # enumeration little-endian lexicographic
    for last in range(0, min(total, per_mode_max) + 1):
        for head in _occupations_with_total(modes - 1, total - last, per_mode_max):
            yield head + (last,)


@dataclass(frozen=True)
class FockBasis:
    """Enumerated truncated occupation-number basis.

    states[i] is the i-th occupation vector (length ``modes``); ``index``
    maps the tuple back to its ordinal.  ``sectors`` lists the contiguous
    (start, stop) index range of each total-particle-number block, in
    ascending particle number.
    """

    statistics: str
    modes: int
    n_max: int
    states: tuple = field(repr=False)
    index: dict = field(repr=False)
    sectors: tuple = field(repr=False)

    @property
    def dim(self):
        return len(self.states)

    def sector_slices(self):
        return [(n, slice(a, b)) for n, a, b in self.sectors]

    def state_ordinal(self, occupation):
        return self.index[tuple(int(n) for n in occupation)]

    def vacuum_ordinal(self):
        return self.index[(0,) * self.modes]

    def basis_vector(self, occupation):
        v = np.zeros(self.dim, dtype=complex)
        v[self.state_ordinal(occupation)] = 1.0
        return v

    def totals(self):
        return np.array([sum(s) for s in self.states], dtype=int)

    def to_json(self):
        """Documented dump: occupation vectors as integer arrays."""
        return json.dumps(
            {
                "statistics": self.statistics,
                "modes": self.modes,
                "n_max": self.n_max,
                "dim": self.dim,
                "states": [list(s) for s in self.states],
            },
            sort_keys=True,
        )


def build_basis(statistics, L, g=1, n_max=1, dim_cap=None):
    """Enumerate the truncated Fock basis for L sites with g components.

    Raises DimensionCapError before enumerating anything if the exact
    combinatorial dimension exceeds the cap (default 20000, overridable via
    the FOCKBOX_DIM_CAP environment variable).
    """
    if L < 1 or g < 1 or n_max < 0:
        raise ValueError("need L >= 1, g >= 1, n_max >= 0")
    if statistics not in (BOSE, FERMI):
        raise ValueError(f"unknown statistics {statistics!r}")
    modes = L * g
    cap = dim_cap_from_env() if dim_cap is None else dim_cap
    dim = fock_dimension(statistics, modes, n_max)
    if dim > cap:
        raise DimensionCapError(dim, cap, statistics, modes, n_max)

    per_mode = 1 if statistics == FERMI else n_max
    states = []
    sectors = []
    top = min(n_max, modes) if statistics == FERMI else n_max
    for total in range(top + 1):
        start = len(states)
        states.extend(_occupations_with_total(modes, total, per_mode))
        sectors.append((total, start, len(states)))
    assert len(states) == dim
    index = {s: i for i, s in enumerate(states)}
    return FockBasis(
        statistics=statistics,
        modes=modes,
        n_max=n_max,
        states=tuple(states),
        index=index,
        sectors=tuple(sectors),
    )


class FieldOperator:
    """Sparse complex operator on a FockBasis, with verified metadata flags.

    Immutable by convention; all algebra returns new instances.  The matrix
    is kept in canonical CSR form (sorted indices, duplicates summed,
    explicit zeros dropped) so that equality is testable on the raw arrays.
    """

    def __init__(self, basis, matrix, hermitian=False, number_conserving=False,
                 check=True):
        if matrix.shape != (basis.dim, basis.dim):
            raise ValueError(
                f"matrix shape {matrix.shape} does not match basis dim {basis.dim}"
            )
        m = sp.csr_matrix(matrix, dtype=complex, copy=True)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        self.basis = basis
        self.matrix = m
        self.hermitian = bool(hermitian)
        self.number_conserving = bool(number_conserving)
        if check and self.hermitian:
            dev = _max_abs(m - m.getH())
            if dev >= HERMITICITY_TOL:
                raise ValueError(f"hermitian flag set but ||A - A^dag||_max = {dev:.3e}")
        if check and self.number_conserving and basis.dim > 1:
            if not _is_number_conserving(m, basis):
                raise ValueError("number_conserving flag set but sectors are coupled")

    # ---- algebra ----------------------------------------------------------

    def dag(self):
        return FieldOperator(self.basis, self.matrix.getH(),
                             hermitian=self.hermitian,
                             number_conserving=self.number_conserving,
                             check=False)

    def __add__(self, other):
        self._compat(other)
        return FieldOperator(self.basis, self.matrix + other.matrix,
                             hermitian=self.hermitian and other.hermitian,
                             number_conserving=self.number_conserving
                             and other.number_conserving,
                             check=False)

    def __sub__(self, other):
        self._compat(other)
        return FieldOperator(self.basis, self.matrix - other.matrix,
                             hermitian=self.hermitian and other.hermitian,
                             number_conserving=self.number_conserving
                             and other.number_conserving,
                             check=False)

    def __mul__(self, scalar):
        herm = self.hermitian and np.isreal(scalar) and np.imag(scalar) == 0
        return FieldOperator(self.basis, self.matrix * scalar,
                             hermitian=bool(herm),
                             number_conserving=self.number_conserving,
                             check=False)

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def __matmul__(self, other):
        self._compat(other)
        return FieldOperator(self.basis, self.matrix @ other.matrix,
                             hermitian=False,
                             number_conserving=self.number_conserving
                             and other.number_conserving,
                             check=False)

    def _compat(self, other):
        if not isinstance(other, FieldOperator):
            raise TypeError(f"expected FieldOperator, got {type(other)!r}")
        if other.basis is not self.basis and other.basis != self.basis:
            raise ValueError("operators live on different bases")

    # ---- queries ----------------------------------------------------------

    def to_dense(self):
        return self.matrix.toarray()

    def max_abs(self):
        return _max_abs(self.matrix)

    def frobenius(self):
        return float(sp.linalg.norm(self.matrix)) if self.matrix.nnz else 0.0

    def trace(self):
        return complex(self.matrix.diagonal().sum())

    def is_hermitian(self, tol=HERMITICITY_TOL):
        return _max_abs(self.matrix - self.matrix.getH()) < tol

    def as_hermitian(self, tol=HERMITICITY_TOL):
        """Return self with the hermitian flag verified and set."""
        dev = _max_abs(self.matrix - self.matrix.getH())
        if dev >= tol:
            raise ValueError(f"not hermitian: ||A - A^dag||_max = {dev:.3e}")
        return FieldOperator(self.basis, self.matrix, hermitian=True,
                             number_conserving=self.number_conserving, check=False)

    def equal_bits(self, other):
        """Exact equality of the canonical sparse representation."""
        a, b = self.matrix, other.matrix
        return (a.shape == b.shape
                and np.array_equal(a.indptr, b.indptr)
                and np.array_equal(a.indices, b.indices)
                and np.array_equal(a.data, b.data))

    def to_json(self):
        """Sparse triplet dump (row, col, re, im), deterministic order."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        triplets = [
            [int(coo.row[k]), int(coo.col[k]),
             float(coo.data[k].real), float(coo.data[k].imag)]
            for k in order
        ]
        return json.dumps(
            {
                "dim": self.basis.dim,
                "hermitian": self.hermitian,
                "number_conserving": self.number_conserving,
                "triplets": triplets,
            },
            sort_keys=True,
        )


def _max_abs(matrix):
    return float(np.max(np.abs(matrix.data))) if matrix.nnz else 0.0


def _is_number_conserving(matrix, basis):
    totals = basis.totals()
    coo = matrix.tocoo()
    return bool(np.all(totals[coo.row] == totals[coo.col]))


def zero_operator(basis):
    return FieldOperator(basis, sp.csr_matrix((basis.dim, basis.dim), dtype=complex),
                         hermitian=True, number_conserving=True, check=False)


def identity(basis):
    return FieldOperator(basis, sp.identity(basis.dim, dtype=complex, format="csr"),
                         hermitian=True, number_conserving=True, check=False)


def annihilation(basis, mode):
    """Ladder-down operator for one mode.

    Bose amplitudes are sqrt(n); Fermi amplitudes carry the Jordan-Wigner
    sign (-1)**(number of occupied modes with smaller canonical index).
    """
    if mode < 0 or mode >= basis.modes:
        raise ValueError(f"mode {mode} outside [0, {basis.modes})")
    rows, cols, vals = [], [], []
    for j, occ in enumerate(basis.states):
        n = occ[mode]
        if n == 0:
            continue
        target = occ[:mode] + (n - 1,) + occ[mode + 1:]
        i = basis.index[target]
        if basis.statistics == FERMI:
            sign = -1.0 if (sum(occ[:mode]) % 2) else 1.0
            amp = sign
        else:
            amp = math.sqrt(n)
        rows.append(i)
        cols.append(j)
        vals.append(amp)
    m = sp.coo_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim),
                      dtype=complex).tocsr()
    return FieldOperator(basis, m, hermitian=False, number_conserving=False,
                         check=False)


def creation(basis, mode):
    """Adjoint of annihilation; creation out of the top sector maps to zero."""
    return annihilation(basis, mode).dag()


def number_operator(basis, mode=None):
    """n_m for one mode, or the total number operator when mode is None."""
    if mode is not None:
        a = annihilation(basis, mode)
        n = a.dag() @ a
        return FieldOperator(basis, n.matrix, hermitian=True,
                             number_conserving=True, check=False)
    diag = basis.totals().astype(complex)
    return FieldOperator(basis, sp.diags(diag, format="csr"),
                         hermitian=True, number_conserving=True, check=False)


def field_operator(basis, model, site, component=0):
    """Annihilation part of the field at a lattice point, psi(x, sigma).

    Carries the lattice delta normalization: [psi(x), psi^dag(x')]_± =
    delta_{xx'} / dx, so sums over sites weighted by dx mimic integrals.
    """
    if basis.modes != model.L * model.g:
        raise ValueError(
            f"basis has {basis.modes} modes but model asks for {model.L * model.g}"
        )
    if model.statistics != basis.statistics:
        raise ValueError("basis and model statistics differ")
    if site < 0 or site >= model.L:
        raise ValueError(f"site {site} outside [0, {model.L})")
    m = mode_index(site, component, model.g)
    return annihilation(basis, m) * (1.0 / math.sqrt(model.dx))


def commutator(a, b):
    return a @ b - b @ a


def anticommutator(a, b):
    return a @ b + b @ a
