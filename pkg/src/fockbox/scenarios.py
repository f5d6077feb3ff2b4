"""Bundled scenarios: declarative experiments with invariant reports.

Every scenario maps a merged configuration to a set of CSV artifacts plus a
JSON summary listing each invariant with its tolerance, measured value and
outcome.  All numbers are written in scientific notation with 17 significant
digits and all randomness flows from the single config seed, so reruns of
the same configuration are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy
from scipy.stats import spearmanr

from . import __version__
from .config import build_model, default_model, deep_merge, feasibility_findings
from .events import EventSpec, build_event_mixture, memory_witness, shielded_expectation
from .fock import build_basis, number_operator, zero_operator
from .lattice import (
    MASS,
    LatticeModel,
    build_hamiltonian,
    current_ops,
    density_ops,
    divergence_ops,
    potential_preset,
)
from .maxent import entropy, gibbs_state, relevant_set
from .neqso import (
    HistorySpec,
    HistoryTerm,
    cosine_test_function,
    decay_time,
    entropy_monitor,
    macrostate_of,
    zeta_dynamics,
)
from .propagate import evolve_state
from .subdynamics import (
    embedding_residual,
    gaussian_packet,
    reduced_path,
    region,
    surface_term,
)


@dataclass(frozen=True)
class InvariantCheck:
    name: str
    tolerance: float
    value: float
    passed: bool
    comparison: str = "<="  # value vs tolerance


@dataclass
class ScenarioResult:
    name: str
    invariants: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.invariants)


def check_le(name, value, tolerance):
    return InvariantCheck(name=name, tolerance=float(tolerance),
                          value=float(value), passed=bool(value <= tolerance),
                          comparison="<=")


def check_ge(name, value, threshold):
    return InvariantCheck(name=name, tolerance=float(threshold),
                          value=float(value), passed=bool(value >= threshold),
                          comparison=">=")


# ---- deterministic writers ---------------------------------------------------


def fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    # 17 significant digits: enough to round-trip any float64 exactly
    return "%.16e" % float(x)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config):
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def write_summary(path, config, result, threads=1):
    doc = {
        "scenario": result.name,
        "passed": result.passed,
        "invariants": [
            {
                "name": c.name,
                "comparison": c.comparison,
                "tolerance": c.tolerance,
                "value": c.value,
                "passed": c.passed,
            }
            for c in result.invariants
        ],
        "artifacts": sorted(result.artifacts),
        "provenance": {
            "config_sha256": config_hash(config),
            "seed": config.get("seed", 0),
            "threads": threads,
            "versions": {
                "fockbox": __version__,
                "numpy": np.__version__,
                "python": "%d.%d.%d" % sys.version_info[:3],
                "scipy": scipy.__version__,
            },
        },
        "config": config,
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n",
                          encoding="utf-8")


# ---- shared builders -----------------------------------------------------------


def vacuum_state(basis):
    rho = np.zeros((basis.dim, basis.dim), dtype=complex)
    rho[basis.vacuum_ordinal(), basis.vacuum_ordinal()] = 1.0
    return rho


def one_particle_state(basis, site, L, g=1):
    occ = [0] * (L * g)
    occ[site * g] = 1
    v = basis.basis_vector(occ)
    return np.outer(v, v.conj())


def mass_energy_relevant(basis, model):
    """Per-cell mass densities plus total energy, with mass currents."""
    h = build_hamiltonian(basis, model)
    cells = density_ops(basis, model)
    div_mass = divergence_ops(current_ops(basis, model, MASS), model)
    return relevant_set(
        [f"rho[{x}]" for x in range(model.L)] + ["H"],
        list(cells) + [h],
        [model.dx] * model.L + [1.0],
        div_currents=list(div_mass) + [zero_operator(basis)],
    ), h


# ---- scenarios -------------------------------------------------------------------


FREE_PACKET_DEFAULTS = {
    "scenario": "free_packet",
    "seed": 0,
    "model": deep_merge(default_model(), {"L": 5, "n_max": 1}),
    "params": {"center": 2.0, "width": 0.8, "momentum": 0.9,
               "t_final": 2.0, "samples": 21},
}


def run_free_packet(config, out_dir):
    model, basis = build_model(config["model"])
    p = config["params"]
    h = build_hamiltonian(basis, model)
    reg = region(range(model.L))
    psi = gaussian_packet(reg, center=p["center"], width=p["width"],
                          k=p["momentum"], dx=model.dx, g=model.g)
    vec = np.zeros(basis.dim, dtype=complex)
    for iy, y in enumerate(reg.sites):
        occ = [0] * basis.modes
        occ[y * model.g] = 1
        vec[basis.state_ordinal(occ)] = np.sqrt(model.dx) * psi.amplitudes[iy, 0]
    rho0 = np.outer(vec, vec.conj())
    dens = density_ops(basis, model)
    hd = h.to_dense()
    ts = np.linspace(0.0, p["t_final"], p["samples"])
    rows = []
    trace_drift = 0.0
    energy_drift = 0.0
    e0 = float(np.trace(hd @ rho0).real)
    for t in ts:
        rho_t = evolve_state(rho0, h, 0.0, float(t))
        trace_drift = max(trace_drift, abs(np.trace(rho_t).real - 1.0))
        energy_drift = max(energy_drift, abs(np.trace(hd @ rho_t).real - e0))
        for x in range(model.L):
            rows.append((float(t), x, float(np.trace(dens[x].to_dense() @ rho_t).real)))
    write_csv(Path(out_dir) / "density.csv", ["t", "site", "density"], rows)
    result = ScenarioResult(name="free_packet", artifacts=["density.csv"])
    result.invariants.append(check_le("trace_drift", trace_drift, 1e-10))
    result.invariants.append(check_le("energy_drift", energy_drift, 1e-10))
    return result


EMBEDDING_CHECK_DEFAULTS = {
    "scenario": "embedding_check",
    "seed": 0,
    "model": deep_merge(default_model(), {"L": 11, "n_max": 1}),
    "params": {
        "region": [1, 2, 3, 4, 5, 6, 7, 8, 9],
        "interior_center": 5.0,
        "boundary_center": 1.0,
        "width": 0.5,
        "sweep_start": 5.0,
        "sweep_stop": 6.8,
        "sweep_points": 9,
        "sweep_width": 0.45,
        "dt": 1e-4,
    },
}


def _residual_and_surface(center, width, dt, basis, model, reg):
    vac = vacuum_state(basis)
    psi0 = gaussian_packet(reg, center=center, width=width, dx=model.dx,
                           g=model.g)
    psis = reduced_path(psi0, model, 0.0, dt, 4)
    rep = embedding_residual(psis, [vac] * 5, basis, model, reg, dt=dt)
    _, norm = surface_term(psis[2], vac, basis, model, reg)
    return rep.value, norm


def run_embedding_check(config, out_dir):
    model, basis = build_model(config["model"])
    p = config["params"]
    reg = region(p["region"])
    dt = float(p["dt"])

    r_int, _ = _residual_and_surface(p["interior_center"], p["width"], dt,
                                     basis, model, reg)
    r_bdy, _ = _residual_and_surface(p["boundary_center"], p["width"], dt,
                                     basis, model, reg)

    # truncation stability: one more particle of headroom must not move the
    # one-quanton diagnostics
    bigger = build_basis(model.statistics, model.L, g=model.g,
                         n_max=config["model"]["n_max"] + 1)
    r_int2, _ = _residual_and_surface(p["interior_center"], p["width"], dt,
                                      bigger, model, reg)

    centers = np.linspace(p["sweep_start"], p["sweep_stop"], p["sweep_points"])
    rows = []
    residuals, norms = [], []
    for c in centers:
        r, s = _residual_and_surface(float(c), p["sweep_width"], dt,
                                     basis, model, reg)
        residuals.append(r)
        norms.append(s)
        rows.append((float(c), r, s))
    rank_corr, _ = spearmanr(residuals, norms)
    write_csv(Path(out_dir) / "sweep.csv",
              ["center", "residual", "surface_norm"], rows)

    result = ScenarioResult(name="embedding_check", artifacts=["sweep.csv"])
    result.invariants.append(check_le("interior_residual", r_int, 1e-6))
    result.invariants.append(check_ge("boundary_ratio", r_bdy / r_int, 1e3))
    result.invariants.append(check_ge("surface_rank_correlation",
                                      float(rank_corr), 0.9))
    result.invariants.append(check_le("truncation_stability",
                                      abs(r_int2 - r_int), 1e-9))
    return result


RELAXATION_DEFAULTS = {
    "scenario": "relaxation",
    "seed": 0,
    "model": deep_merge(default_model(), {
        "L": 4, "n_max": 2,
        "pair_potential": {"preset": "contact", "v0": 0.6},
    }),
    "params": {
        "zeta0": [0.3, 0.1, -0.1, -0.3, 0.5],
        "decay_horizon": 2.5,
        "decay_samples": 26,
        "step": 0.025,
        "exact_samples": 6,
    },
}


def run_relaxation(config, out_dir):
    model, basis = build_model(config["model"])
    p = config["params"]
    rel, h = mass_energy_relevant(basis, model)
    zeta0 = np.asarray(p["zeta0"], float)
    if len(zeta0) != len(rel):
        raise ValueError(f"zeta0 needs {len(rel)} entries, got {len(zeta0)}")

    decay = decay_time(rel, zeta0, h, horizon=p["decay_horizon"],
                       n_samples=p["decay_samples"], hbar=model.hbar)
    tau = decay.tau
    write_csv(Path(out_dir) / "correlation.csv", ["t", "label", "value"],
              [(float(s), f"C[{rel.labels[j]},{rel.labels[l]}]",
                float(decay.table[k, j, l]))
               for k, s in enumerate(decay.times)
               for j in range(len(rel)) for l in range(len(rel))])

    hist = HistorySpec.empty(0.0)
    step = float(p["step"])
    traj = zeta_dynamics(rel, zeta0, hist, h, 0.0, tau, step=step,
                         hbar=model.hbar)
    fine = zeta_dynamics(rel, zeta0, hist, h, 0.0, tau, step=step / 2.0,
                         hbar=model.hbar)
    halving = float(np.max(np.abs(fine.zetas[::2] - traj.zetas)))
    write_csv(Path(out_dir) / "zeta.csv", ["t", "label", "value"],
              traj.as_rows())

    # exact-evolution oracle at sample times
    rho0, _ = gibbs_state(rel, zeta0)
    scale = float(np.max(np.abs(zeta0)))
    worst = 0.0
    guess = zeta0
    for t in np.linspace(0.0, tau, int(p["exact_samples"]))[1:]:
        rho_t = evolve_state(rho0, h, 0.0, float(t), hbar=model.hbar)
        zx = macrostate_of(rho_t, rel, zeta_guess=guess).values
        guess = zx
        i = int(round(t / step))
        worst = max(worst, float(np.max(np.abs(traj.zetas[i] - zx))))

    conserved = relevant_set(["H", "N"], [h, number_operator(basis)],
                             [1.0, 1.0])
    series = entropy_monitor(traj, rel, conserved=conserved, step_tol=1e-6)
    micro_drift = 0.0
    s_micro = entropy(rho0)
    for t in (0.5 * tau, tau):
        s_t = entropy(evolve_state(rho0, h, 0.0, float(t), hbar=model.hbar))
        micro_drift = max(micro_drift, abs(s_t - s_micro))
    entropy_rows = []
    for t, s, d in zip(series.times, series.entropy, series.dist_equilibrium):
        entropy_rows.append((float(t), "entropy_macro", float(s)))
        entropy_rows.append((float(t), "distance_equilibrium", float(d)))
    write_csv(Path(out_dir) / "entropy.csv", ["t", "label", "value"],
              entropy_rows)

    result = ScenarioResult(
        name="relaxation",
        artifacts=["correlation.csv", "entropy.csv", "zeta.csv"],
    )
    result.invariants.append(check_le("trajectory_vs_exact", worst,
                                      0.05 * scale))
    result.invariants.append(check_le("step_halving", halving, 1e-3))
    result.invariants.append(check_le("entropy_min_step", -series.min_step,
                                      1e-6))
    result.invariants.append(check_le("micro_entropy_drift", micro_drift,
                                      1e-10))
    result.invariants.append(check_le("gram_condition", traj.gram_cond_max,
                                      1e12))
    return result


ZUBAREV_DEFAULTS = {
    "scenario": "zubarev_limit",
    "seed": 0,
    "model": RELAXATION_DEFAULTS["model"],
    "params": {
        "zeta0": [0.3, 0.1, -0.1, -0.3, 0.5],
        "gamma_T": [0.3, -0.1, 0.2, 0.0, 0.1],
        "prep_weights": [0.2, -0.1, 0.1, -0.2],
        "prep_omega": 1.3,
        "decay_horizon": 1.0,
        "decay_samples": 11,
        "t_end": 1.0,
        "step": 0.025,
        "prep_quad": 64,
    },
}


def run_zubarev_limit(config, out_dir):
    model, basis = build_model(config["model"])
    p = config["params"]
    rel, h = mass_energy_relevant(basis, model)
    zeta0 = np.asarray(p["zeta0"], float)
    gamma_T = np.asarray(p["gamma_T"], float)

    decay = decay_time(rel, zeta0, h, horizon=p["decay_horizon"],
                       n_samples=p["decay_samples"], hbar=model.hbar)
    tau_cut = 3.0 * decay.tau
    t0 = 0.0
    T = t0 - 3.0 * tau_cut

    prep = HistoryTerm(
        label="prep",
        operators=rel.operators[:model.L],
        coeffs=np.asarray(p["prep_weights"], float) * rel.weights[:model.L],
        h=cosine_test_function(p["prep_omega"]),
    )

    def run(gam, cut):
        hist = HistorySpec(T=T, t0=t0, terms=(prep,), gamma_T=gam,
                           n_quad=int(p["prep_quad"]))
        return zeta_dynamics(rel, zeta0, hist, h, t0, p["t_end"],
                             step=float(p["step"]), tau_cut=cut,
                             hbar=model.hbar)

    base = run(gamma_T, tau_cut)
    doubled = run(2.0 * gamma_T, tau_cut)
    truncated_change = float(np.max(np.abs(base.zetas - doubled.zetas)))

    base_full = run(gamma_T, None)
    doubled_full = run(2.0 * gamma_T, None)
    full_change = float(np.max(np.abs(base_full.zetas - doubled_full.zetas)))

    rows = []
    for i, t in enumerate(base.times):
        for l, lab in enumerate(rel.labels):
            rows.append((float(t), str(lab), float(base.zetas[i, l]),
                         float(doubled.zetas[i, l]),
                         float(doubled.zetas[i, l] - base.zetas[i, l])))
    write_csv(Path(out_dir) / "zubarev.csv",
              ["t", "label", "zeta", "zeta_doubled_gamma", "difference"], rows)

    result = ScenarioResult(name="zubarev_limit", artifacts=["zubarev.csv"])
    result.invariants.append(check_le("truncated_insensitivity",
                                      truncated_change, 1e-3))
    result.invariants.append(check_ge("terminal_term_active_without_cutoff",
                                      full_change, 1e-6))
    return result


EVENT_CHANNEL_DEFAULTS = {
    "scenario": "event_channel",
    "seed": 0,
    "model": deep_merge(default_model(), {
        "L": 5, "n_max": 1,
        "potential": {"preset": "barrier", "height": 50.0, "sites": [2]},
    }),
    "params": {
        "lam": 0.4,
        "source": [0, 1],
        "channel": [3, 4],
        "source_site": 0,
        "target_index": 0,
        "times": [0.25, 0.5, 0.75, 1.0],
        "witness_channel": [2, 3, 4],
        "witness_momentum": 1.0471975511965976,
        "witness_times": [0.6, 1.0, 1.4],
    },
}


def _phase_specs(p, lam):
    ys = np.arange(len(p["witness_channel"]))
    k = float(p["witness_momentum"])
    k_plus = np.zeros((len(ys), len(p["source"])), dtype=complex)
    k_plus[:, 0] = np.exp(1j * k * ys)
    k_minus = k_plus.conj()
    spec_p = EventSpec(lam=lam, source=region(p["source"]),
                       channel=region(p["witness_channel"]), kernel=k_plus)
    spec_m = EventSpec(lam=lam, source=region(p["source"]),
                       channel=region(p["witness_channel"]), kernel=k_minus)
    return spec_p, spec_m


def run_event_channel(config, out_dir):
    model, basis = build_model(config["model"])
    p = config["params"]
    lam = float(p["lam"])
    h = build_hamiltonian(basis, model)
    rho_n = one_particle_state(basis, int(p["source_site"]), model.L, model.g)

    kernel = np.zeros((len(p["channel"]), len(p["source"])), dtype=complex)
    kernel[int(p["target_index"]), 0] = 1.0
    spec = EventSpec(lam=lam, source=region(p["source"]),
                     channel=region(p["channel"]), kernel=kernel)
    mix = build_event_mixture(rho_n, spec, basis, model)
    b = None
    for site in p["channel"]:
        n_site = number_operator(basis, site * model.g)
        b = n_site if b is None else b + n_site

    rows = []
    worst_resid = 0.0
    worst_identity = 0.0
    for t in p["times"]:
        rep = shielded_expectation(b, mix, h, 0.0, float(t), basis, model,
                                   spec, hbar=model.hbar)
        worst_resid = max(worst_resid, abs(rep.shielding_residual))
        worst_identity = max(worst_identity,
                             abs(rep.lhs - rep.rhs
                                 - lam * rep.shielding_residual))
        rows.append((float(t), rep.lhs, rep.rhs, rep.shielding_residual))
    write_csv(Path(out_dir) / "shielded.csv",
              ["t", "lhs", "rhs", "shielding_residual"], rows)

    # witness part: barrier-free channel carrying left- vs right-movers
    model_w = LatticeModel(L=model.L, dx=model.dx, g=model.g,
                           statistics=model.statistics, mass=model.mass,
                           hbar=model.hbar)
    basis_w = build_basis(model.statistics, model.L, g=model.g,
                          n_max=config["model"]["n_max"])
    h_w = build_hamiltonian(basis_w, model_w)
    rho_w = one_particle_state(basis_w, int(p["source_site"]), model.L, model.g)
    spec_p, spec_m = _phase_specs(p, lam)
    b_w = number_operator(basis_w, p["witness_channel"][-1] * model.g)
    wit_rows = []
    witness_peak = 0.0
    for t in p["witness_times"]:
        w = memory_witness(spec_p, spec_m, rho_w, b_w, h_w, 0.0, float(t),
                           basis_w, model_w, hbar=model.hbar)
        witness_peak = max(witness_peak, w)
        wit_rows.append((float(t), w))
    write_csv(Path(out_dir) / "witness.csv", ["t", "witness"], wit_rows)

    result = ScenarioResult(name="event_channel",
                            artifacts=["shielded.csv", "witness.csv"])
    result.invariants.append(check_le("shielding_residual", worst_resid, 1e-3))
    result.invariants.append(check_le("mixture_identity", worst_identity,
                                      1e-12 + lam * worst_resid))
    result.invariants.append(check_ge("memory_witness_transit", witness_peak,
                                      0.1))
    return result


DECOHERENCE_DEFAULTS = {
    "scenario": "decoherence_sweep",
    "seed": 0,
    "model": deep_merge(default_model(), {"L": 5, "n_max": 1}),
    "params": {
        "lam": 0.5,
        "source": [0, 1],
        "witness_channel": [2, 3, 4],
        "source_site": 0,
        "witness_momentum": 1.0471975511965976,
        "witness_times": [0.6, 1.0, 1.4],
        "strengths": [0.0, 5.0, 15.0, 40.0, 60.0],
    },
}


def run_decoherence_sweep(config, out_dir):
    model_cfg = config["model"]
    p = config["params"]
    lam = float(p["lam"])
    rng = np.random.default_rng(config.get("seed", 0))
    channel = [int(s) for s in p["witness_channel"]]
    noise = rng.uniform(-1.0, 1.0, size=len(channel))

    rows = []
    witnesses = []
    for strength in p["strengths"]:
        u = np.zeros(model_cfg["L"])
        for i, site in enumerate(channel):
            u[site] += float(strength) * noise[i]
        model = LatticeModel(
            L=model_cfg["L"], dx=float(model_cfg["dx"]), g=model_cfg["g"],
            statistics=model_cfg["statistics"], mass=float(model_cfg["mass"]),
            hbar=float(model_cfg["hbar"]),
            U=potential_preset("table", model_cfg["L"], values=list(u)),
        )
        basis = build_basis(model.statistics, model.L, g=model.g,
                            n_max=model_cfg["n_max"])
        h = build_hamiltonian(basis, model)
        rho_n = one_particle_state(basis, int(p["source_site"]), model.L,
                                   model.g)
        spec_p, spec_m = _phase_specs(p, lam)
        b = number_operator(basis, channel[-1] * model.g)
        w = max(memory_witness(spec_p, spec_m, rho_n, b, h, 0.0, float(t),
                               basis, model, hbar=model.hbar)
                for t in p["witness_times"])
        witnesses.append(w)
        rows.append((float(strength), w))
    write_csv(Path(out_dir) / "witness_sweep.csv", ["strength", "witness"],
              rows)

    result = ScenarioResult(name="decoherence_sweep",
                            artifacts=["witness_sweep.csv"])
    result.invariants.append(check_ge("clean_witness", witnesses[0], 0.1))
    result.invariants.append(check_le("disordered_witness", witnesses[-1],
                                      0.2 * witnesses[0]))
    return result


# ---- catalog ---------------------------------------------------------------------


CATALOG = {
    "free_packet": (
        "single packet in the empty box: density time series, exact-unitarity checks",
        FREE_PACKET_DEFAULTS, run_free_packet),
    "embedding_check": (
        "one-quanton embedding: interior vs boundary residuals, surface-term sweep",
        EMBEDDING_CHECK_DEFAULTS, run_embedding_check),
    "relaxation": (
        "interacting relaxation: parameter dynamics vs exact inversion, entropy monitor",
        RELAXATION_DEFAULTS, run_relaxation),
    "zubarev_limit": (
        "memory-cutoff universality: insensitivity to the terminal preparation term",
        ZUBAREV_DEFAULTS, run_zubarev_limit),
    "event_channel": (
        "seeded event: shielded-detector identity and memory witness",
        EVENT_CHANNEL_DEFAULTS, run_event_channel),
    "decoherence_sweep": (
        "memory witness under static channel disorder",
        DECOHERENCE_DEFAULTS, run_decoherence_sweep),
}


def list_scenarios():
    """Catalog of bundled scenarios: name -> one-line description."""
    return {name: desc for name, (desc, _, _) in CATALOG.items()}


def scenario_defaults(name):
    if name not in CATALOG:
        raise KeyError(f"unknown scenario {name!r}; pick from {sorted(CATALOG)}")
    return json.loads(json.dumps(CATALOG[name][1]))  # deep copy


def merged_config(config):
    name = config.get("scenario")
    if name not in CATALOG:
        raise KeyError(f"unknown scenario {name!r}; pick from {sorted(CATALOG)}")
    return deep_merge(scenario_defaults(name), config)


def validate_config(config):
    """Schema findings for a user config (before merging) plus feasibility."""
    from .config import Finding, validate_model

    findings = []
    if not isinstance(config, dict):
        return [Finding("$", "configuration must be a JSON object")]
    name = config.get("scenario")
    if name is None:
        findings.append(Finding("scenario", "missing required key"))
        return findings
    if name not in CATALOG:
        findings.append(Finding("scenario",
                                f"unknown scenario {name!r}; "
                                f"pick from {sorted(CATALOG)}"))
        return findings
    defaults = scenario_defaults(name)
    for key in config:
        if key not in ("scenario", "seed", "model", "params", "comment"):
            findings.append(Finding(key, "unknown key"))
    seed = config.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        findings.append(Finding("seed", "must be a non-negative integer"))
    if "model" in config:
        if not isinstance(config["model"], dict):
            findings.append(Finding("model", "must be an object"))
        else:
            findings.extend(validate_model(config["model"]))
    if "params" in config:
        if not isinstance(config["params"], dict):
            findings.append(Finding("params", "must be an object"))
        else:
            for key in config["params"]:
                if key not in defaults["params"]:
                    findings.append(Finding(f"params.{key}", "unknown key"))
    if not findings:
        merged = deep_merge(defaults, config)
        findings.extend(feasibility_findings(merged["model"]))
    return findings


def run_scenario(config, out_dir, threads=1):
    """Execute a merged configuration, write artifacts, return the result."""
    merged = merged_config(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runner = CATALOG[merged["scenario"]][2]
    result = runner(merged, out)
    write_summary(out / "summary.json", merged, result, threads=threads)
    result.artifacts.append("summary.json")
    return result
