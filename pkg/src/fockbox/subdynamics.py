"""Embedding of one- and two-quanton states into field statistical operators.

A region of the lattice in which the background state is locally a perfect
vacuum can carry an additional quanton: the embedded field state solves the
full Liouville-von Neumann equation exactly (up to an operator-valued
boundary term measured here, not assumed away) while the quanton amplitude
obeys the ordinary one-particle Schroedinger equation inside the region.
Field observables induce kernels and positive-operator-valued spectral
families on the one-particle space; their drift under the background
evolution quantifies whether the surroundings act as a stable measuring
device.

One-particle kernels carry the lattice measure: inner products are
sum_y dx conj(a) b, an operator kernel K(y, y') acts with one dx-weighted
sum, and the matrix in the orthonormalized site basis is dx * K.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fock import FieldOperator, field_operator, mode_index

VACUUM_TOL = 1e-10


class VacuumConditionError(ValueError):
    """Background state is not locally vacuum; carries the measured residual."""

    def __init__(self, residual, tol, what="background"):
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"{what} violates the vacuum condition in the region "
            f"(strong residual {residual:.3e} >= {tol:.0e})"
        )


@dataclass(frozen=True)
class Region:
    """Contiguous site set with its outermost layer as the boundary."""

    sites: tuple

    def __post_init__(self):
        s = tuple(sorted(int(x) for x in self.sites))
        if not s:
            raise ValueError("region is empty")
        if any(b - a != 1 for a, b in zip(s, s[1:])):
            raise ValueError("region sites must be contiguous")
        object.__setattr__(self, "sites", s)

    @property
    def boundary(self):
        if len(self.sites) == 1:
            return (self.sites[0],)
        return (self.sites[0], self.sites[-1])

    @property
    def interior(self):
        return tuple(s for s in self.sites if s not in self.boundary)

    def __len__(self):
        return len(self.sites)

    def check_inside(self, model):
        if self.sites[0] < 0 or self.sites[-1] >= model.L:
            raise ValueError(f"region {self.sites} leaves the lattice [0, {model.L})")


def region(sites):
    return Region(sites=tuple(sites))


@dataclass
class OneQuantonState:
    """Complex amplitude field on a region, unit norm in the lattice measure."""

    region: Region
    amplitudes: np.ndarray  # shape (len(region), g)
    dx: float

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.ndim == 1:
            a = a[:, None]
        if a.shape[0] != len(self.region):
            raise ValueError("amplitude grid does not match the region")
        self.amplitudes = a

    @property
    def g(self):
        return self.amplitudes.shape[1]

    def norm(self):
        return float(np.sqrt(self.dx * np.sum(np.abs(self.amplitudes) ** 2)))

    def normalized(self):
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero state")
        return OneQuantonState(self.region, self.amplitudes / n, self.dx)

    def to_json(self):
        import json

        return json.dumps(
            {
                "sites": list(self.region.sites),
                "dx": self.dx,
                "amplitudes": [[[float(z.real), float(z.imag)] for z in row]
                               for row in self.amplitudes],
            },
            sort_keys=True,
        )


def one_quanton(region_, amplitudes, dx=1.0, normalize=True):
    psi = OneQuantonState(region_, np.asarray(amplitudes, complex), dx)
    return psi.normalized() if normalize else psi


def gaussian_packet(region_, center, width, k=0.0, dx=1.0, g=1):
    """Normalized Gaussian amplitude exp(-(x-c)^2/(4 w^2) + i k x) on a region."""
    xs = np.array(region_.sites, dtype=float)
    amp = np.exp(-((xs - center) ** 2) / (4.0 * width**2) + 1j * k * xs)
    a = np.zeros((len(region_), g), dtype=complex)
    a[:, 0] = amp
    return one_quanton(region_, a, dx=dx)


@dataclass(frozen=True)
class VacuumResidual:
    """Norms measuring how far a state is from local vacuum in a region.

    strong: max over region sites of ||psi(y) rho||_F (perfect vacuum);
    pairwise: max over site pairs of ||psi(y) psi(y') rho||_F (the weaker
    interaction-free condition).
    """

    strong: float
    pairwise: float


def _region_fields(basis, model, region_):
    region_.check_inside(model)
    return [[field_operator(basis, model, y, s) for s in range(model.g)]
            for y in region_.sites]


def vacuum_residual(rho, basis, model, region_):
    rho = np.asarray(rho, dtype=complex)
    fields = _region_fields(basis, model, region_)
    flat = [f.to_dense() for row in fields for f in row]
    strong = 0.0
    for f in flat:
        strong = max(strong, float(np.linalg.norm(f @ rho)))
    pairwise = 0.0
    for f in flat:
        for f2 in flat:
            pairwise = max(pairwise, float(np.linalg.norm(f @ (f2 @ rho))))
    return VacuumResidual(strong=strong, pairwise=pairwise)


def _creator_for(psi, basis, model):
    """B = sum_{y,sigma} dx Psi(y,sigma) psi^dag(y,sigma)."""
    fields = _region_fields(basis, model, psi.region)
    acc = np.zeros((basis.dim, basis.dim), dtype=complex)
    for iy, row in enumerate(fields):
        for s, f in enumerate(row):
            c = psi.amplitudes[iy, s]
            if c != 0.0:
                acc += model.dx * c * f.dag().to_dense()
    return acc


def embed(state, rho_prime, basis, model, region_, vacuum_tol=VACUUM_TOL):
    """Dress a vacuum-in-region background with a one-quanton state.

    state is either a OneQuantonState (pure case) or a Hermitian PSD kernel
    matrix over the region grid, unit trace in the lattice measure
    (dx * sum of the diagonal = 1).  The result is Hermitian, positive
    semidefinite and of unit trace whenever the background satisfies the
    strong vacuum condition and has truncation headroom for one more
    particle.
    """
    rho_prime = np.asarray(rho_prime, dtype=complex)
    res = vacuum_residual(rho_prime, basis, model, region_)
    if res.strong >= vacuum_tol:
        raise VacuumConditionError(res.strong, vacuum_tol)
    if isinstance(state, OneQuantonState):
        b = _creator_for(state, basis, model)
        out = b @ rho_prime @ b.conj().T
    else:
        kernel = np.asarray(state, dtype=complex)
        n = len(region_) * model.g
        if kernel.shape != (n, n):
            raise ValueError(f"kernel shape {kernel.shape} != {(n, n)}")
        # orthonormal-basis matrix of the kernel; eigenvectors give the
        # pure components of the mixture
        mat = model.dx * kernel
        evals, evecs = np.linalg.eigh(0.5 * (mat + mat.conj().T))
        if evals.min() < -1e-10:
            raise ValueError(f"kernel is not positive (eigenvalue {evals.min():.3e})")
        out = np.zeros((basis.dim, basis.dim), dtype=complex)
        for p, vec in zip(evals, evecs.T):
            if p <= 1e-14:
                continue
            amps = vec.reshape(len(region_), model.g) / np.sqrt(model.dx)
            comp = OneQuantonState(region_, amps, model.dx)
            b = _creator_for(comp, basis, model)
            out += p * (b @ rho_prime @ b.conj().T)
    tr = np.trace(out).real
    if abs(tr - 1.0) > 1e-10:
        raise ValueError(
            f"embedded trace {tr:.12f} != 1; check normalization and that the "
            f"background leaves truncation headroom for one more particle"
        )
    return out


def extract_pure(rho_embedded, basis, model, region_, rho_ref_phase=0):
    """Recover the quanton amplitudes from a purely embedded vacuum state.

    Takes the dominant eigenvector of the one-particle block and fixes the
    global phase against the largest amplitude (or the given site ordinal).
    """
    rho = np.asarray(rho_embedded)
    w, v = np.linalg.eigh(rho)
    vec = v[:, -1]
    amps = np.zeros((len(region_), model.g), dtype=complex)
    for iy, y in enumerate(region_.sites):
        for s in range(model.g):
            occ = [0] * basis.modes
            occ[mode_index(y, s, model.g)] = 1
            amps[iy, s] = vec[basis.state_ordinal(occ)] / np.sqrt(model.dx)
    flat = amps.ravel()
    ref = flat[rho_ref_phase] if np.abs(flat[rho_ref_phase]) > 1e-12 \
        else flat[np.argmax(np.abs(flat))]
    amps = amps * (np.abs(ref) / ref)
    return OneQuantonState(region_, amps, model.dx)


def reduced_schrodinger_step(psi, model, t, dt):
    """One-particle unitary step on the region with hard walls at its edge.

    The generator is the Dirichlet Laplacian restricted to the region plus
    the external potential sampled at the step midpoint; the norm is
    preserved exactly by construction.
    """
    reg = psi.region
    n = len(reg)
    c = model.hopping
    tm = t + 0.5 * dt
    h1 = np.diag(np.full(n, 2.0 * c)
                 + np.array([float(model.U(y, tm)) for y in reg.sites]))
    for i in range(n - 1):
        h1[i, i + 1] = -c
        h1[i + 1, i] = -c
    w, v = np.linalg.eigh(h1)
    u = (v * np.exp(-1j * w * dt / model.hbar)) @ v.conj().T
    return OneQuantonState(reg, u @ psi.amplitudes, psi.dx)


def reduced_path(psi0, model, t0, dt, n_steps):
    """Sampled reduced-equation trajectory [psi(t0), ..., psi(t0 + n dt)]."""
    path = [psi0]
    t = t0
    for _ in range(n_steps):
        path.append(reduced_schrodinger_step(path[-1], model, t, dt))
        t += dt
    return path


@dataclass(frozen=True)
class ResidualReport:
    value: float
    coarse_value: float
    grid_too_coarse: bool


def embedding_residual(psi_path, rho_prime_path, basis, model, region_, dt,
                       H=None, index=None, vacuum_tol=VACUUM_TOL):
    """How far the embedded trajectory is from solving the full dynamics.

    Central-difference time derivative of the embedded state against
    -(i/hbar)[H, rho] at one grid point; also evaluated on the doubled
    stencil, and flagged when the two differ by more than 10% (grid too
    coarse to trust the derivative).
    """
    from .lattice import build_hamiltonian

    m = len(psi_path)
    if len(rho_prime_path) != m:
        raise ValueError("paths differ in length")
    if m < 5:
        raise ValueError("need at least 5 grid points")
    k = m // 2 if index is None else index
    if k < 2 or k > m - 3:
        raise ValueError("index must leave two points on each side")
    if H is None:
        H = build_hamiltonian(basis, model, 0.0)
    hd = H.to_dense()

    def embedded(i):
        return embed(psi_path[i], rho_prime_path[i], basis, model, region_,
                     vacuum_tol=vacuum_tol)

    rho_m = embedded(k)
    comm = hd @ rho_m - rho_m @ hd

    def resid(step):
        d = (embedded(k + step) - embedded(k - step)) / (2.0 * step * dt)
        return float(np.linalg.norm(d + 1j / model.hbar * comm))

    value = resid(1)
    coarse = resid(2)
    too_coarse = abs(coarse - value) > 0.1 * max(value, 1e-300)
    return ResidualReport(value=value, coarse_value=coarse,
                          grid_too_coarse=bool(too_coarse))


def surface_term(psi, rho_prime, basis, model, region_):
    """Discrete operator-valued boundary term and its Frobenius norm.

    One-sided outward differences of the quanton amplitude at the region's
    outermost sites, contracted with psi^dag rho' psi; its size controls the
    feasibility of treating the embedded quanton as autonomous.
    """
    rho_prime = np.asarray(rho_prime, dtype=complex)
    reg = psi.region
    fields = _region_fields(basis, model, reg)
    pos = {y: i for i, y in enumerate(reg.sites)}

    def outward_gradient(y, s):
        i = pos[y]
        if y == reg.sites[0]:
            inner = psi.amplitudes[i + 1, s] if len(reg) > 1 else 0.0
        else:
            inner = psi.amplitudes[i - 1, s] if len(reg) > 1 else 0.0
        return (psi.amplitudes[i, s] - inner) / model.dx

    pref = model.hbar**2 / (2.0 * model.mass)
    acc = np.zeros((basis.dim, basis.dim), dtype=complex)
    for yb in reg.boundary:
        for s in range(model.g):
            grad = outward_gradient(yb, s)
            fb = fields[pos[yb]][s].to_dense()
            for iy, y in enumerate(reg.sites):
                for s2 in range(model.g):
                    c = psi.amplitudes[iy, s2]
                    f2 = fields[iy][s2].to_dense()
                    if grad != 0.0 and c != 0.0:
                        acc += pref * model.dx * grad * np.conj(c) * (
                            fb.conj().T @ rho_prime @ f2)
                    if c != 0.0 and grad != 0.0:
                        acc -= pref * model.dx * c * np.conj(grad) * (
                            f2.conj().T @ rho_prime @ fb)
    return acc, float(np.linalg.norm(acc))


@dataclass
class ReducedObservable:
    """Kernel of a field observable induced on the one-particle space.

    kernel[(y', s'), (y, s)] = Tr(A psi^dag(y, s) rho' psi(y', s')); the
    matrix in the orthonormalized basis is dx * kernel.  pov maps spectral
    windows (lo, hi) to the induced positive kernels of the corresponding
    spectral projectors.
    """

    region: Region
    kernel: np.ndarray
    dx: float
    pov: Optional[dict] = field(default=None)

    @property
    def matrix(self):
        return self.dx * self.kernel

    def pov_matrix(self, window):
        return self.dx * self.pov[window]

    def expectation(self, state):
        if isinstance(state, OneQuantonState):
            v = np.sqrt(self.dx) * state.amplitudes.ravel()
            return complex(v.conj() @ self.matrix @ v)
        return complex(np.trace(self.matrix @ (self.dx * np.asarray(state))))


def induced_observable(A, rho_prime, basis, model, region_, windows=None):
    """Kernel (and optionally the spectral-window POV family) induced by A.

    Also verifies the exact splitting of the kernel into the lattice delta
    times Tr(A rho') plus the commutator remainder; the two constructions
    must agree elementwise, which is returned as split_deviation.
    """
    rho_prime = np.asarray(rho_prime, dtype=complex)
    a = A.to_dense() if isinstance(A, FieldOperator) else np.asarray(A, complex)
    fields = _region_fields(basis, model, region_)
    flat = [(y, s, fields[i][s]) for i, y in enumerate(region_.sites)
            for s in range(model.g)]
    n = len(flat)

    kernel = np.empty((n, n), dtype=complex)
    for col, (_, _, f_col) in enumerate(flat):        # (y, sigma)
        sandwich_base = f_col.dag().to_dense() @ rho_prime
        for row, (_, _, f_row) in enumerate(flat):    # (y', sigma')
            kernel[row, col] = np.trace(a @ sandwich_base @ f_row.to_dense())

    # splitting: lattice delta * Tr(A rho') + symmetrized commutator kernel
    tr_a = np.trace(a @ rho_prime)
    split = np.empty_like(kernel)
    for row, (_, _, f_row) in enumerate(flat):
        fr = f_row.to_dense()
        comm_row = fr @ a - a @ fr
        for col, (_, _, f_col) in enumerate(flat):
            fcd = f_col.dag().to_dense()
            term = 0.5 * (comm_row @ fcd + fr @ (a @ fcd - fcd @ a))
            split[row, col] = np.trace(term @ rho_prime)
            if row == col:
                split[row, col] += tr_a / model.dx
    split_dev = float(np.max(np.abs(kernel - split)))

    pov = None
    if windows is not None:
        w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
        pov = {}
        for lo, hi in windows:
            sel = (w >= lo) & (w < hi)
            proj = (v[:, sel] @ v[:, sel].conj().T) if np.any(sel) \
                else np.zeros_like(a)
            pk = np.empty((n, n), dtype=complex)
            for col, (_, _, f_col) in enumerate(flat):
                sand = f_col.dag().to_dense() @ rho_prime
                for row, (_, _, f_row) in enumerate(flat):
                    pk[row, col] = np.trace(proj @ sand @ f_row.to_dense())
            pov[(lo, hi)] = pk

    out = ReducedObservable(region=region_, kernel=kernel, dx=model.dx, pov=pov)
    out.split_deviation = split_dev
    return out


def observable_drift(A, rho_prime_path, basis, model, region_):
    """max_t ||A1_t - A1_{t0}|| / ||A1_{t0}|| along a background path."""
    kernels = [induced_observable(A, r, basis, model, region_).matrix
               for r in rho_prime_path]
    ref = kernels[0]
    ref_norm = float(np.linalg.norm(ref))
    if ref_norm == 0.0:
        raise ValueError("reference kernel vanishes")
    return max(float(np.linalg.norm(k - ref)) for k in kernels) / ref_norm


def embed_two_quanton(psi2, rho_prime, basis, model, region_,
                      vacuum_tol=VACUUM_TOL, symmetry_tol=1e-10):
    """Two-quanton embedding with the 1/2! collision of orderings.

    psi2 is the amplitude matrix over the flattened (site, component) grid
    of the region, (anti)symmetric to match the field statistics and
    normalized so that dx^2 * sum |psi2|^2 = 1; then the embedded state has
    unit trace over a vacuum-condition background with two particles of
    truncation headroom.
    """
    from .fock import BOSE

    rho_prime = np.asarray(rho_prime, dtype=complex)
    res = vacuum_residual(rho_prime, basis, model, region_)
    if res.strong >= vacuum_tol:
        raise VacuumConditionError(res.strong, vacuum_tol)
    n = len(region_) * model.g
    psi2 = np.asarray(psi2, dtype=complex)
    if psi2.shape != (n, n):
        raise ValueError(f"two-quanton amplitude must be {(n, n)}, got {psi2.shape}")
    sign = 1.0 if model.statistics == BOSE else -1.0
    sym_dev = float(np.max(np.abs(psi2 - sign * psi2.T)))
    if sym_dev > symmetry_tol:
        kind = "symmetric" if sign > 0 else "antisymmetric"
        raise ValueError(
            f"two-quanton amplitude is not {kind} for {model.statistics} "
            f"statistics (deviation {sym_dev:.3e})"
        )
    fields = _region_fields(basis, model, region_)
    flat = [fields[i][s].to_dense() for i in range(len(region_))
            for s in range(model.g)]
    b = np.zeros((basis.dim, basis.dim), dtype=complex)
    for i in range(n):
        for j in range(n):
            c = psi2[i, j]
            if c != 0.0:
                b += model.dx**2 * c * (flat[i].conj().T @ flat[j].conj().T)
    out = 0.5 * (b @ rho_prime @ b.conj().T)
    tr = np.trace(out).real
    if abs(tr - 1.0) > 1e-10:
        raise ValueError(
            f"two-quanton trace {tr:.12f} != 1; check the symmetrized "
            f"normalization dx^2 sum |psi2|^2 = 1 and truncation headroom"
        )
    return out
