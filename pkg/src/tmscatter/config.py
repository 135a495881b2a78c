"""Run configuration: a JSON document with sections grid, potential,
incidence, solver and output.

Unknown keys are rejected.  Angles are radians unless the key carries a
``_deg`` suffix, in which case the value is converted and stored under the
plain name.  :func:`resolve` fills every default so that the resolved
document alone reproduces a run.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError
from . import potentials as pot

__all__ = ["SECTIONS", "load_config", "resolve", "config_hash", "build_potential", "parse_complex", "read_table_csv"]

SECTIONS = ("grid", "potential", "incidence", "solver", "output")

ANGLE_KEYS = {"theta0", "phi0", "thetas", "phis", "theta0_samples", "margin"}

_GRID = {"k": None, "n_osc": 32, "p_max_factor": 4.0, "n_ev": 24, "n_radial": 16, "n_azimuthal": 32, "n_ev_radial": 8, "p_max_factor_3d": 3.0}
_INCIDENCE = {"theta0": 0.3, "phi0": 0.0, "side": None, "k_values": None, "theta0_samples": None}
_SOLVER = {
    "route": "auto", "scheme": "magnus4", "steps": None, "slices": None,
    "alpha": None, "tol_matrix": 1e-7, "tol_amplitude": 1e-7,
    "order": 8, "oracle_radius": None, "oracle_n": None,
    "slice_counts": [1, 2, 4, 8], "dyson_nx": 32,
}
_OUTPUT = {"path": None, "n_theta": 64, "margin": 1e-3, "thetas": None, "phis": None, "n_theta_3d": 16, "n_phi_3d": 8}

_POTENTIALS = {
    "zero": {"dimension": 2, "a_minus": 0.0, "a_plus": 1.0},
    "delta-line": {"z": None, "a": 0.0, "x0": 0.0},
    "multi-delta": {"zs": None, "positions": None, "x0": 0.0},
    "gaussian": {"z": None, "sigma_x": 1.0, "sigma_y": 1.0, "center": 0.0, "cut": None},
    "band-limited": {"amplitude": None, "beta_lo": None, "beta_hi": None, "x_lo": 0.0, "x_hi": 1.0},
    "rect-barrier": {"z": None, "lo": 0.0, "hi": 1.0},
    "point-delta-3d": {"z": None, "z0": 0.0},
    "gaussian-3d": {"z": None, "sigma_t": 1.0, "sigma_z": 1.0, "center": 0.0},
    "band-limited-3d": {"amplitude": None, "beta_lo": None, "beta_hi": None, "sigma_y": 1.0, "z_lo": 0.0, "z_hi": 1.0},
    "tabulated": {"path": None, "a_minus": None, "a_plus": None},
}


def parse_complex(value, where: str) -> complex:
    """Accept a number, a [re, im] pair or a string such as "1+0.5j"."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", "").replace("i", "j"))
        except ValueError:
            pass
    raise ConfigError(f"{where}: cannot read {value!r} as a complex number")


def _convert_deg(section: dict, name: str) -> dict:
    out = {}
    for key, val in section.items():
        if key.endswith("_deg"):
            base = key[: -len("_deg")]
            if base not in ANGLE_KEYS:
                raise ConfigError(f"{name}.{key}: '_deg' is only allowed on angle keys")
            if base in section:
                raise ConfigError(f"{name}: both {base} and {key} given")
            if val is None:
                out[base] = None
            elif isinstance(val, list):
                out[base] = [math.radians(float(v)) for v in val]
            else:
                out[base] = math.radians(float(val))
        else:
            out[key] = val
    return out


def _merge(name: str, given: dict, defaults: dict) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(f"section {name!r} must be a JSON object")
    given = _convert_deg(given, name)
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"{name}: unknown key(s) {', '.join(unknown)}; allowed: {', '.join(sorted(defaults))}")
    out = dict(defaults)
    out.update(given)
    return out


def load_config(path) -> dict:
    """Read and validate a configuration file, returning the resolved document."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return resolve(doc, base_dir=path.parent)


def resolve(doc: dict, base_dir=None) -> dict:
    """Validate a configuration document and fill every default."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = sorted(set(doc) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s) {', '.join(unknown)}; allowed: {', '.join(SECTIONS)}")
    if "potential" not in doc:
        raise ConfigError("missing section 'potential'")
    potential = doc["potential"]
    if not isinstance(potential, dict) or "kind" not in potential:
        raise ConfigError("potential.kind is required")
    kind = potential["kind"]
    if kind not in _POTENTIALS:
        raise ConfigError(f"potential.kind: unknown kind {kind!r}; allowed: {', '.join(sorted(_POTENTIALS))}")
    pdef = dict(_POTENTIALS[kind])
    pdef["kind"] = kind
    out = {
        "grid": _merge("grid", doc.get("grid", {}), _GRID),
        "potential": _merge("potential", potential, pdef),
        "incidence": _merge("incidence", doc.get("incidence", {}), _INCIDENCE),
        "solver": _merge("solver", doc.get("solver", {}), _SOLVER),
        "output": _merge("output", doc.get("output", {}), _OUTPUT),
    }
    for key, val in out["potential"].items():
        if val is None and key not in ("cut", "a_minus", "a_plus"):
            raise ConfigError(f"potential.{key} is required for kind {kind!r}")
    if kind == "tabulated" and base_dir is not None:
        p = Path(out["potential"]["path"])
        out["potential"]["path"] = str(p if p.is_absolute() else Path(base_dir) / p)
    _check_numbers(out)
    return out


def _check_numbers(cfg: dict):
    g = cfg["grid"]
    if g["k"] is not None and not (isinstance(g["k"], (int, float)) and g["k"] > 0):
        raise ConfigError("grid.k must be a positive number")
    for key in ("n_osc", "n_ev", "n_radial", "n_azimuthal", "n_ev_radial"):
        v = g[key]
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise ConfigError(f"grid.{key} must be a non-negative integer")
    if g["n_osc"] < 2:
        raise ConfigError("grid.n_osc must be at least 2")
    for key in ("p_max_factor", "p_max_factor_3d"):
        if not (isinstance(g[key], (int, float)) and g[key] > 1):
            raise ConfigError(f"grid.{key} must exceed 1")
    s = cfg["solver"]
    if s["route"] not in ("auto", "sandwich", "eliminate"):
        raise ConfigError("solver.route must be auto, sandwich or eliminate")
    if s["scheme"] not in ("magnus4", "midpoint-magnus", "rk4"):
        raise ConfigError("solver.scheme must be magnus4, midpoint-magnus or rk4")
    for key in ("steps", "slices"):
        v = s[key]
        if v is not None and (isinstance(v, bool) or not isinstance(v, int) or v < 1):
            raise ConfigError(f"solver.{key} must be a positive integer or null")
    o = cfg["output"]
    if isinstance(o["n_theta"], bool) or not isinstance(o["n_theta"], int) or o["n_theta"] < 1:
        raise ConfigError("output.n_theta must be a positive integer")
    side = cfg["incidence"]["side"]
    if side not in (None, "left", "right"):
        raise ConfigError("incidence.side must be 'left', 'right' or null")


def _canonical(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, dict):
        return {k: _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    return obj


def config_hash(cfg: dict) -> str:
    """SHA-1 of the canonical JSON, framed like a git blob."""
    body = json.dumps(_canonical(cfg), sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()


def read_table_csv(path):
    """Read a tabulated transverse transform.

    Rows are ``x, K, re, im`` on a full tensor grid; '#' lines are comments.
    Returns (x_axis, k_axis, values[x, K]).
    """
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read table {path}: {exc}") from exc
    if data.shape[1] != 4:
        raise ConfigError(f"table {path}: expected 4 columns (x, K, re, im), got {data.shape[1]}")
    xs = np.unique(data[:, 0])
    ks = np.unique(data[:, 1])
    if len(xs) * len(ks) != len(data):
        raise ConfigError(f"table {path}: rows do not form a full (x, K) grid")
    vals = np.full((len(xs), len(ks)), np.nan, dtype=complex)
    ix = np.searchsorted(xs, data[:, 0])
    ik = np.searchsorted(ks, data[:, 1])
    vals[ix, ik] = data[:, 2] + 1j * data[:, 3]
    if np.isnan(vals.real).any():
        raise ConfigError(f"table {path}: duplicate (x, K) rows")
    return xs, ks, vals


def build_potential(pcfg: dict):
    """Construct a PotentialSpec from the resolved ``potential`` section."""
    kind = pcfg["kind"]
    p = copy.deepcopy(pcfg)
    where = "potential"
    if kind == "zero":
        return pot.ZeroPotential(dimension=int(p["dimension"]), a_minus=float(p["a_minus"]), a_plus=float(p["a_plus"]))
    if kind == "delta-line":
        return pot.delta_line(parse_complex(p["z"], f"{where}.z"), float(p["a"]), float(p["x0"]))
    if kind == "multi-delta":
        zs = [parse_complex(z, f"{where}.zs[{i}]") for i, z in enumerate(p["zs"])]
        if len(zs) != len(p["positions"]):
            raise ConfigError("potential.zs and potential.positions differ in length")
        return pot.multi_delta(zs, [float(a) for a in p["positions"]], float(p["x0"]))
    if kind == "gaussian":
        return pot.gaussian_2d(parse_complex(p["z"], f"{where}.z"), float(p["sigma_x"]), float(p["sigma_y"]),
                               float(p["center"]), None if p["cut"] is None else float(p["cut"]))
    if kind == "band-limited":
        return pot.band_limited_2d(parse_complex(p["amplitude"], f"{where}.amplitude"), float(p["beta_lo"]),
                                   float(p["beta_hi"]), pot.RectProfile(float(p["x_lo"]), float(p["x_hi"])))
    if kind == "rect-barrier":
        return pot.rect_barrier(parse_complex(p["z"], f"{where}.z"), float(p["lo"]), float(p["hi"]))
    if kind == "point-delta-3d":
        return pot.point_delta_3d(parse_complex(p["z"], f"{where}.z"), float(p["z0"]))
    if kind == "gaussian-3d":
        return pot.gaussian_3d(parse_complex(p["z"], f"{where}.z"), float(p["sigma_t"]), float(p["sigma_z"]), float(p["center"]))
    if kind == "band-limited-3d":
        return pot.band_limited_3d(parse_complex(p["amplitude"], f"{where}.amplitude"), float(p["beta_lo"]),
                                   float(p["beta_hi"]), float(p["sigma_y"]), pot.RectProfile(float(p["z_lo"]), float(p["z_hi"])))
    if kind == "tabulated":
        xs, ks, vals = read_table_csv(p["path"])
        lo = float(xs[0]) if p["a_minus"] is None else float(p["a_minus"])
        hi = float(xs[-1]) if p["a_plus"] is None else float(p["a_plus"])
        return pot.TabulatedPotential(dimension=2, a_minus=lo, a_plus=hi, kind="tabulated",
                                      scale=float(np.max(np.abs(vals))), x_table=xs, k_table=ks, values=vals)
    raise ConfigError(f"unknown potential kind {kind!r}")  # pragma: no cover - guarded by resolve
