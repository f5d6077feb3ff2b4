"""Scenario configuration: schema validation and model construction.

A configuration is a single JSON document (key-value tree, explicit units:
lengths in lattice spacings, energies in units of hbar^2/(m dx^2) family,
times in hbar/energy).  Unknown keys anywhere in the tree are reported with
their full path; feasibility findings flag truncations whose Fock dimension
exceeds the cap before anything is built.
"""

from __future__ import annotations

from dataclasses import dataclass

from .fock import BOSE, FERMI, build_basis, dim_cap_from_env, fock_dimension
from .lattice import LatticeModel, pair_preset, potential_preset


@dataclass(frozen=True)
class Finding:
    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"


MODEL_KEYS = {
    "L": (int, lambda v: v >= 1, "must be an integer >= 1"),
    "dx": ((int, float), lambda v: v > 0, "must be positive"),
    "g": (int, lambda v: v >= 1, "must be an integer >= 1"),
    "statistics": (str, lambda v: v in (BOSE, FERMI), "must be 'bose' or 'fermi'"),
    "mass": ((int, float), lambda v: v > 0, "must be positive"),
    "hbar": ((int, float), lambda v: v > 0, "must be positive"),
    "n_max": (int, lambda v: v >= 0, "must be an integer >= 0"),
    "potential": (dict, lambda v: True, ""),
    "pair_potential": (dict, lambda v: True, ""),
}

POTENTIAL_PRESETS = {
    "box": set(),
    "barrier": {"height", "sites"},
    "harmonic": {"k", "center"},
    "table": {"values"},
}

PAIR_PRESETS = {
    "none": set(),
    "contact": {"v0"},
    "table": {"values"},
}


def default_model():
    return {
        "L": 4,
        "dx": 1.0,
        "g": 1,
        "statistics": BOSE,
        "mass": 1.0,
        "hbar": 1.0,
        "n_max": 2,
        "potential": {"preset": "box"},
        "pair_potential": {"preset": "none"},
    }


def deep_merge(base, override):
    """New dict with override's entries replacing base's, recursing on dicts."""
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], val)
        else:
            out[key] = val
    return out


def _check_preset(block, presets, path, findings):
    preset = block.get("preset")
    if preset is None:
        findings.append(Finding(path, "missing required key 'preset'"))
        return
    if preset not in presets:
        findings.append(Finding(f"{path}.preset",
                                f"unknown preset {preset!r}; "
                                f"choose from {sorted(presets)}"))
        return
    allowed = presets[preset] | {"preset"}
    for key in block:
        if key not in allowed:
            findings.append(Finding(f"{path}.{key}",
                                    f"unknown key for preset {preset!r}"))


def validate_model(model, path="model"):
    findings = []
    for key, val in model.items():
        if key not in MODEL_KEYS:
            findings.append(Finding(f"{path}.{key}", "unknown key"))
            continue
        typ, ok, msg = MODEL_KEYS[key]
        if not isinstance(val, typ) or isinstance(val, bool):
            findings.append(Finding(f"{path}.{key}",
                                    f"expected {typ}, got {type(val).__name__}"))
        elif not ok(val):
            findings.append(Finding(f"{path}.{key}", msg))
    if "potential" in model and isinstance(model["potential"], dict):
        _check_preset(model["potential"], POTENTIAL_PRESETS,
                      f"{path}.potential", findings)
    if "pair_potential" in model and isinstance(model["pair_potential"], dict):
        _check_preset(model["pair_potential"], PAIR_PRESETS,
                      f"{path}.pair_potential", findings)
    return findings


def feasibility_findings(model, path="model"):
    """Dimension-cap precheck, run on a fully merged model block."""
    try:
        dim = fock_dimension(model["statistics"], model["L"] * model["g"],
                             model["n_max"])
    except (KeyError, ValueError):
        return []
    cap = dim_cap_from_env()
    if dim > cap:
        return [Finding(f"{path}.n_max",
                        f"Fock dimension {dim} exceeds the cap {cap} "
                        f"(override via FOCKBOX_DIM_CAP if intended)")]
    return []


def build_model(model_cfg):
    """(LatticeModel, FockBasis) from a merged, validated model block."""
    pot_cfg = dict(model_cfg.get("potential", {"preset": "box"}))
    preset = pot_cfg.pop("preset")
    u = potential_preset(preset, model_cfg["L"], dx=model_cfg["dx"], **pot_cfg)
    pair_cfg = dict(model_cfg.get("pair_potential", {"preset": "none"}))
    pair_name = pair_cfg.pop("preset")
    v, range_v = pair_preset(pair_name, dx=model_cfg["dx"], **pair_cfg)
    model = LatticeModel(
        L=model_cfg["L"],
        dx=float(model_cfg["dx"]),
        g=model_cfg["g"],
        statistics=model_cfg["statistics"],
        mass=float(model_cfg["mass"]),
        hbar=float(model_cfg["hbar"]),
        U=u,
        V=v,
        range_V=range_v,
    )
    basis = build_basis(model_cfg["statistics"], model_cfg["L"],
                        g=model_cfg["g"], n_max=model_cfg["n_max"])
    return model, basis
