"""Maximum-entropy inference over a declared set of relevant observables.

Implements the generalized Gibbs family w[zeta] = exp(-sum_j zeta_j w_j A_j)/Z
(w_j the lattice cell weight standing in for the integration measure), the
von Neumann entropy, the canonical two-point correlation function that both
drives the first-order cumulant expansion and serves as the Newton Jacobian,
and the damped-Newton solver matching Lagrange parameters to target
expectations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fock import FieldOperator

MATCH_TOL = 1e-9
MAX_NEWTON_ITERS = 60
EIG_FLOOR = 1e-14
GAUGE_TOL = 1e-10


class MatchFailure(RuntimeError):
    """Expectation matching failed; carries residual and null direction."""

    def __init__(self, message, residual=None, null_direction=None):
        self.residual = residual
        self.null_direction = null_direction
        super().__init__(message)


@dataclass(frozen=True)
class RelevantSet:
    """Labeled Hermitian observables defining the macroscopic description.

    weights are the lattice measures multiplying each member inside the
    exponent (dx for per-cell densities, 1 for global observables);
    div_currents optionally aligns the per-member current divergences used
    by the history-carrying dynamics (zero operator for conserved totals).
    """

    labels: tuple
    operators: tuple
    weights: np.ndarray
    div_currents: Optional[tuple] = None

    def __post_init__(self):
        if len(self.labels) != len(self.operators):
            raise ValueError("labels and operators differ in length")
        if len(self.weights) != len(self.operators):
            raise ValueError("weights and operators differ in length")
        for lab, op in zip(self.labels, self.operators):
            if not op.is_hermitian(tol=1e-10):
                raise ValueError(f"relevant observable {lab!r} is not Hermitian")
        if self.div_currents is not None and len(self.div_currents) != len(self.operators):
            raise ValueError("div_currents and operators differ in length")

    def __len__(self):
        return len(self.operators)

    @property
    def basis(self):
        return self.operators[0].basis

    def dense_stack(self):
        return np.array([op.to_dense() for op in self.operators])


def relevant_set(labels, operators, weights=None, div_currents=None):
    weights = np.ones(len(operators)) if weights is None else np.asarray(weights, float)
    return RelevantSet(labels=tuple(labels), operators=tuple(operators),
                       weights=weights,
                       div_currents=None if div_currents is None else tuple(div_currents))


@dataclass(frozen=True)
class ZetaField:
    """Lagrange parameters aligned with a RelevantSet, plus log Z."""

    labels: tuple
    values: np.ndarray
    zeta0: float
    gauge_projector: Optional[np.ndarray] = field(default=None, repr=False)

    def to_json(self):
        return json.dumps(
            {
                "labels": list(self.labels),
                "values": [float(v) for v in self.values],
                "zeta0": float(self.zeta0),
            },
            sort_keys=True,
        )


def exponent_matrix(relevant, zeta):
    """-sum_j zeta_j w_j A_j as a dense Hermitian matrix."""
    zeta = np.asarray(zeta, float)
    if not np.all(np.isfinite(zeta)):
        raise ValueError("zeta contains non-finite entries")
    acc = np.zeros((relevant.basis.dim, relevant.basis.dim), dtype=complex)
    for z, w, op in zip(zeta, relevant.weights, relevant.operators):
        if z != 0.0:
            acc -= z * w * op.to_dense()
    return acc


def state_from_exponent(x):
    """(rho, logZ) from a Hermitian exponent, overflow-safe via log-sum-exp."""
    w, v = np.linalg.eigh(x)
    shift = w.max()
    boltz = np.exp(w - shift)
    z = boltz.sum()
    rho = (v * (boltz / z)) @ v.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho, float(shift + np.log(z))


def gibbs_state(relevant, zeta):
    """Generalized Gibbs state and its ZetaField (zeta0 = log Z).

    Positive semidefinite with unit trace by construction (Hermitian
    eigendecomposition with a log-sum-exp shift, so the exponent cannot
    overflow for finite zeta).
    """
    x = exponent_matrix(relevant, zeta)
    rho, logz = state_from_exponent(x)
    zf = ZetaField(labels=relevant.labels, values=np.asarray(zeta, float).copy(),
                   zeta0=logz)
    return rho, zf


def entropy(rho, tol=1e-9):
    """von Neumann entropy -Tr rho log rho in units of k = 1.

    Eigenvalues in [-tol, 0] are clamped to zero; below -tol the input is
    rejected as not a state.
    """
    w = np.linalg.eigvalsh(np.asarray(rho))
    if w.min() < -tol:
        raise ValueError(f"matrix has eigenvalue {w.min():.3e} < -{tol:.0e}")
    w = np.clip(w, 0.0, None)
    nz = w[w > 0.0]
    # clamping can leave an eigenvalue marginally above 1; entropy stays >= 0
    return max(0.0, float(-(nz * np.log(nz)).sum()))


def _kubo_kernel(w):
    """kappa[a, b] = (w_a - w_b)/(log w_a - log w_b), w_a on the diagonal."""
    logw = np.log(w)
    d = logw[:, None] - logw[None, :]
    num = w[:, None] - w[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = num / d
    # near-degenerate pairs: symmetric expansion sqrt(wa wb) sinh(d/2)/(d/2)
    small = np.abs(d) < 1e-7
    geo = np.sqrt(w[:, None] * w[None, :])
    kappa = np.where(small, geo * (1.0 + d * d / 24.0), kappa)
    return kappa


def kubo(C, B, W, eig_floor=EIG_FLOOR):
    """Canonical two-point correlation of C and B in the state W.

    <C, B>_W = Tr C int_0^1 du exp(uA) B exp(-uA) W  -  Tr(C W) Tr(B W)
    with W = exp(A)/Tr exp(A); evaluated in W's eigenbasis through the
    closed-form kernel, so no quadrature enters.  W must be positive
    definite; eigenvalues below eig_floor are lifted to it (documented
    regularization), unless eig_floor is None, in which case a singular W
    raises.
    """
    w, v = np.linalg.eigh(np.asarray(W))
    if w.min() < -1e-12:
        raise ValueError(f"W has negative eigenvalue {w.min():.3e}")
    if eig_floor is None:
        if w.min() <= 0.0:
            raise ValueError(
                "W is singular; pass eig_floor (e.g. 1e-14) to regularize"
            )
    else:
        w = np.clip(w, eig_floor, None)
    cm = _to_basis(C, v)
    bm = _to_basis(B, v)
    kappa = _kubo_kernel(w)
    connected = np.sum(cm.T * bm * kappa)
    disconnected = np.sum(np.diag(cm) * w) * np.sum(np.diag(bm) * w)
    return complex(connected - disconnected)


def _to_basis(A, v):
    m = A.to_dense() if isinstance(A, FieldOperator) else np.asarray(A, dtype=complex)
    return v.conj().T @ m @ v


def cumulant_expect(C, A_exponent, B_perturbation, eig_floor=EIG_FLOOR):
    """First-order estimate of Tr C exp(A+B)/Tr exp(A+B).

    Tr(C W) + <C, B>_W with W = exp(A)/Tr exp(A); exact at B = 0 and with
    an O(|B|^2) error for small perturbations.
    """
    a = _dense(A_exponent)
    rho, _ = state_from_exponent(a)
    base = np.trace(_dense(C) @ rho)
    corr = kubo(C, B_perturbation, rho, eig_floor=eig_floor)
    return float((base + corr).real)


def _dense(A):
    return A.to_dense() if isinstance(A, FieldOperator) else np.asarray(A, dtype=complex)


def expectations(relevant, rho):
    rho = np.asarray(rho)
    return np.array([np.trace(op.to_dense() @ rho).real for op in relevant.operators])


def gauge_projector(relevant, tol=GAUGE_TOL):
    """Projector onto the non-gauge directions of the parameter space.

    A direction c is pure gauge when sum_j c_j w_j A_j is proportional to
    the identity (including the zero operator); along it the state
    w[zeta] does not change, only zeta0 does.  Detected from the
    Hilbert-Schmidt Gram matrix of the traceless parts.
    """
    dim = relevant.basis.dim
    traceless = []
    for w_j, op in zip(relevant.weights, relevant.operators):
        m = w_j * op.to_dense()
        traceless.append(m - (np.trace(m) / dim) * np.eye(dim))
    gram = np.array([[np.trace(a.conj().T @ b).real for b in traceless]
                     for a in traceless])
    evals, evecs = np.linalg.eigh(gram)
    scale = max(evals.max(), 1.0)
    keep = evals > tol * scale
    basis_vectors = evecs[:, keep]
    return basis_vectors @ basis_vectors.T


def kubo_gram(relevant, rho, eig_floor=EIG_FLOOR):
    """Symmetric matrix of pairwise correlations <A_j, A_l>_rho."""
    n = len(relevant)
    w, v = np.linalg.eigh(np.asarray(rho))
    if eig_floor is not None:
        w = np.clip(w, eig_floor, None)
    kappa = _kubo_kernel(w)
    mats = [_to_basis(op, v) for op in relevant.operators]
    diag_exp = np.array([np.sum(np.diag(m) * w) for m in mats])
    g = np.empty((n, n))
    for j in range(n):
        for l in range(j, n):
            val = np.sum(mats[j].T * mats[l] * kappa) - diag_exp[j] * diag_exp[l]
            g[j, l] = g[l, j] = float(val.real)
    return g


ZETA_MAX = 20.0


def match_expectations(relevant, targets, zeta_init=None, tol=MATCH_TOL,
                       max_iters=MAX_NEWTON_ITERS, zeta_max=ZETA_MAX):
    """Solve Tr(A_j w[zeta]) = targets_j by damped Newton iteration.

    The Jacobian is the negative weighted correlation Gram matrix; steps are
    projected off the gauge directions (the component of zeta along them
    stays at its initial value) and damped by halving until the residual
    norm decreases.  Raises MatchFailure with the residual and, for rank
    problems, the offending null direction.  Targets on the boundary of the
    attainable set (sharp eigenstate expectations) make the parameters
    diverge; that is reported as a failure once the iterate passes zeta_max
    while still unconverged.
    """
    targets = np.asarray(targets, float)
    n = len(relevant)
    zeta = np.zeros(n) if zeta_init is None else np.asarray(zeta_init, float).copy()
    if not np.all(np.isfinite(zeta)):
        raise ValueError("zeta_init contains non-finite entries")
    proj = gauge_projector(relevant)

    rho, zf = gibbs_state(relevant, zeta)
    resid = expectations(relevant, rho) - targets
    for _ in range(max_iters):
        if np.max(np.abs(resid)) < tol:
            return ZetaField(labels=relevant.labels, values=zeta,
                             zeta0=zf.zeta0, gauge_projector=proj)
        gram = kubo_gram(relevant, rho)
        # Newton system -G diag(w) step = -resid, solved in the symmetric
        # coordinates y = sqrt(w) step where S = sqrt(w) G sqrt(w); the
        # thresholded pseudo-inverse deflates the gauge null space
        d_sqrt = np.sqrt(relevant.weights)
        s = gram * d_sqrt[None, :] * d_sqrt[:, None]
        evals, evecs = np.linalg.eigh(s)
        good = evals > 1e-13 * max(evals.max(), 1.0)
        if not np.any(good):
            raise MatchFailure("correlation Gram matrix vanished",
                               residual=resid, null_direction=evecs[:, 0])
        inv = np.where(good, 1.0 / np.where(good, evals, 1.0), 0.0)
        # step = -jac^+ resid with jac = -G diag(w)
        step = ((evecs * inv) @ (evecs.T @ (d_sqrt * resid))) / d_sqrt
        step = proj @ step
        # backtracking: halve until the residual norm decreases
        norm0 = np.linalg.norm(resid)
        lam = 1.0
        for _ in range(40):
            trial = zeta + lam * step
            rho_t, zf_t = gibbs_state(relevant, trial)
            resid_t = expectations(relevant, rho_t) - targets
            if np.linalg.norm(resid_t) < norm0:
                break
            lam *= 0.5
        else:
            null = evecs[:, ~good][:, 0] if np.any(~good) else None
            raise MatchFailure(
                "line search stalled; targets may lie outside the attainable set "
                f"(residual inf-norm {np.max(np.abs(resid)):.3e})",
                residual=resid, null_direction=null)
        zeta, rho, zf, resid = trial, rho_t, zf_t, resid_t
        if np.max(np.abs(zeta)) > zeta_max and np.max(np.abs(resid)) >= tol:
            raise MatchFailure(
                "parameters diverged past "
                f"{zeta_max:g} before convergence; the targets lie on (or "
                "outside) the boundary of the attainable expectation set",
                residual=resid, null_direction=None)
    if np.max(np.abs(resid)) < tol:
        return ZetaField(labels=relevant.labels, values=zeta, zeta0=zf.zeta0,
                         gauge_projector=proj)
    raise MatchFailure(
        f"no convergence in {max_iters} iterations "
        f"(residual inf-norm {np.max(np.abs(resid)):.3e})",
        residual=resid, null_direction=None)
