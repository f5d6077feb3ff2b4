"""Seeded events: anomalous mixtures carrying source memory to a detector.

A normal background whose classical parameters leave one region an exact
local vacuum can be corrected by a history term that moves a quanton from a
source region into that channel region.  The corrected operator is a
mixture of the untouched background (weight lambda, the probability the
source stays quiet) and an anomalous component built from the bilinear part
of the correction; observables shielded from the source region then read
the anomalous component alone, and differences between source kernels
survive as a strictly positive witness at the detector.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .fock import FieldOperator, field_operator
from .propagate import evolve_state
from .subdynamics import Region, VacuumConditionError, vacuum_residual

EVENT_VACUUM_TOL = 1e-8


class InactiveSourceError(RuntimeError):
    """The source kernel annihilates the background: nothing can be emitted."""


class SupportViolationError(ValueError):
    """Detector observable couples occupations outside the channel region."""


@dataclass(frozen=True)
class EventSpec:
    """Mixture weight, source/channel regions and the emission kernel.

    kernel[y_index, x_index] couples channel site y (row, over omega_I) to
    source site x (column, over omega_S): the emission operator acts as
    A(y, sigma) = sum_x K(y, x) psi(x, sigma).  The window records the
    history interval [t_bar - tau, t_bar] the kernel stands for; the time
    integral of the underlying record is folded into K itself.
    """

    lam: float
    source: Region
    channel: Region
    kernel: np.ndarray
    window: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not (0.0 < self.lam < 1.0):
            raise ValueError("mixture weight must lie strictly inside (0, 1)")
        if set(self.source.sites) & set(self.channel.sites):
            raise ValueError("source and channel regions must be disjoint")
        k = np.asarray(self.kernel, dtype=complex)
        if k.shape != (len(self.channel), len(self.source)):
            raise ValueError(
                f"kernel shape {k.shape} != "
                f"({len(self.channel)}, {len(self.source)})"
            )
        object.__setattr__(self, "kernel", k)


@dataclass(frozen=True)
class EventMixture:
    """Mixture rho = lam rho_n + (1 - lam) rho_a with the induced kernel."""

    rho: np.ndarray
    rho_normal: np.ndarray
    rho_anomalous: np.ndarray
    lam: float
    quanton_kernel: np.ndarray


def _emission_operator(spec, basis, model):
    """S = sum_{y, sigma} dx psi^dag(y, sigma) A(y, sigma): moves one quanton
    from the source region into the channel."""
    acc = np.zeros((basis.dim, basis.dim), dtype=complex)
    for iy, y in enumerate(spec.channel.sites):
        for s in range(model.g):
            create = field_operator(basis, model, y, s).dag().to_dense()
            for ix, x in enumerate(spec.source.sites):
                k = spec.kernel[iy, ix]
                if k != 0.0:
                    destroy = field_operator(basis, model, x, s).to_dense()
                    acc += model.dx * k * (create @ destroy)
    return acc


def build_event_mixture(rho_normal, spec, basis, model,
                        vacuum_tol=EVENT_VACUUM_TOL):
    """Anomalous component and mixture seeded by the source kernel.

    The anomalous state is the normalized bilinear correction
    S rho_n S^dag / Tr(...) with S the emission operator; the induced
    one-quanton kernel Tr(A(y) rho_n A^dag(y')) is normalized to unit
    lattice trace and returned alongside.  The background must satisfy the
    vacuum condition in the channel; an emission operator that annihilates
    the background raises InactiveSourceError.
    """
    rho_n = np.asarray(rho_normal, dtype=complex)
    res = vacuum_residual(rho_n, basis, model, spec.channel)
    if res.strong >= vacuum_tol:
        raise VacuumConditionError(res.strong, vacuum_tol, what="normal component")
    s_op = _emission_operator(spec, basis, model)
    raw = s_op @ rho_n @ s_op.conj().T
    norm = np.trace(raw).real
    if norm <= 1e-14:
        raise InactiveSourceError(
            "inactive source: the emission kernel annihilates the background"
        )
    rho_a = raw / norm
    rho_a = 0.5 * (rho_a + rho_a.conj().T)

    kernel = _quanton_kernel(rho_n, spec, basis, model)
    mix = spec.lam * rho_n + (1.0 - spec.lam) * rho_a
    return EventMixture(rho=mix, rho_normal=rho_n, rho_anomalous=rho_a,
                        lam=spec.lam, quanton_kernel=kernel)


def _quanton_kernel(rho_n, spec, basis, model):
    """Normalized kernel Tr(A(y) rho_n A^dag(y')) over the channel grid."""
    n = len(spec.channel) * model.g
    ops = []
    for iy in range(len(spec.channel)):
        for s in range(model.g):
            acc = np.zeros((basis.dim, basis.dim), dtype=complex)
            for ix, x in enumerate(spec.source.sites):
                k = spec.kernel[iy, ix]
                if k != 0.0:
                    acc += k * field_operator(basis, model, x, s).to_dense()
            ops.append(acc)
    kernel = np.empty((n, n), dtype=complex)
    for i, a_i in enumerate(ops):
        left = a_i @ rho_n
        for j, a_j in enumerate(ops):
            kernel[i, j] = np.trace(left @ a_j.conj().T)
    trace = model.dx * np.trace(kernel).real
    if trace <= 1e-14:
        raise InactiveSourceError(
            "inactive source: the emission kernel annihilates the background"
        )
    return kernel / trace


def check_channel_support(B, basis, model, spec, tol=1e-12):
    """Raise unless B acts as identity outside the channel region.

    An operator built solely from fields at channel sites has vanishing
    matrix elements between occupation vectors that differ outside the
    channel, and inside a fixed outside configuration its elements do not
    depend on that configuration.  Both conditions are verified.
    """
    dense = B.to_dense() if isinstance(B, FieldOperator) else np.asarray(B)
    states = basis.states
    channel_modes = sorted(site * model.g + s for site in spec.channel.sites
                           for s in range(model.g))
    outside_modes = [k for k in range(basis.modes) if k not in channel_modes]

    def split(occ):
        return (tuple(occ[k] for k in channel_modes),
                tuple(occ[k] for k in outside_modes))

    inner, outer = zip(*(split(occ) for occ in states))
    reference = {}
    for r in range(basis.dim):
        for c in range(basis.dim):
            val = dense[r, c]
            if outer[r] != outer[c]:
                if abs(val) > tol:
                    raise SupportViolationError(
                        "observable couples occupations outside the channel "
                        f"(states {states[r]} and {states[c]})"
                    )
                continue
            key = (inner[r], inner[c])
            if key in reference:
                if abs(val - reference[key]) > tol:
                    raise SupportViolationError(
                        "observable matrix elements depend on the occupation "
                        f"outside the channel (inner pair {key})"
                    )
            else:
                reference[key] = val


@dataclass(frozen=True)
class ShieldedReport:
    lhs: float
    rhs: float
    shielding_residual: float


def shielded_expectation(B, mixture, H, t_bar, t, basis, model, spec, hbar=1.0):
    """Both sides of the shielded-detector identity, plus the leakage.

    lhs = Tr(B rho_t) for the evolved mixture; rhs = (1 - lam) times the
    evolved anomalous expectation; shielding_residual = the evolved normal
    expectation.  lhs - rhs equals lam times the residual identically, so
    the identity holds to the degree the detector is actually shielded.
    """
    check_channel_support(B, basis, model, spec)
    bd = B.to_dense() if isinstance(B, FieldOperator) else np.asarray(B)
    rho_n_t = evolve_state(mixture.rho_normal, H, t_bar, t, hbar=hbar)
    rho_a_t = evolve_state(mixture.rho_anomalous, H, t_bar, t, hbar=hbar)
    lam = mixture.lam
    lhs = float(np.trace(bd @ (lam * rho_n_t + (1.0 - lam) * rho_a_t)).real)
    rhs = float((1.0 - lam) * np.trace(bd @ rho_a_t).real)
    residual = float(np.trace(bd @ rho_n_t).real)
    return ShieldedReport(lhs=lhs, rhs=rhs, shielding_residual=residual)


def memory_witness(spec_one, spec_two, rho_normal, B, H, t_bar, t, basis,
                   model, hbar=1.0):
    """Detector-visible distinction between two source histories.

    Builds the two mixtures from the same background and mixture weight,
    evolves both to t and returns |Tr(B rho^(1)) - Tr(B rho^(2))|; zero for
    identical kernels, strictly positive when the channel transmits the
    distinction.
    """
    if spec_one.lam != spec_two.lam:
        raise ValueError("witness comparison needs equal mixture weights")
    check_channel_support(B, basis, model, spec_one)
    bd = B.to_dense() if isinstance(B, FieldOperator) else np.asarray(B)
    vals = []
    for spec in (spec_one, spec_two):
        mix = build_event_mixture(rho_normal, spec, basis, model)
        rho_t = evolve_state(mix.rho, H, t_bar, t, hbar=hbar)
        vals.append(float(np.trace(bd @ rho_t).real))
    return abs(vals[0] - vals[1])
