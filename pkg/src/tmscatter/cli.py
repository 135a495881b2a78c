"""Command line front-end.

    tmscatter <subcommand> --config run.json [--output out.csv]

Exit codes: 0 success, 2 configuration error, 3 numerical failure (also a
certificate whose residuals exceed tolerance), 4 certificate premise
failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import __version__
from .config import build_potential, config_hash, load_config
from .errors import ConfigError, PremiseError, TMScatterError
from .output import csv_text, emit, json_text

log = logging.getLogger("tmscatter")

SUBCOMMANDS = ("amplitude", "cross-section", "certify", "born-exact", "scan-ss", "compose-bench", "oracle-compare")


# ---------------------------------------------------------------------------
# helpers


def _k(cfg) -> float:
    k = cfg["grid"]["k"]
    if k is None:
        raise ConfigError("grid.k is required for this subcommand")
    return float(k)


def _tm_kwargs(cfg) -> dict:
    s = cfg["solver"]
    return {"route": s["route"], "scheme": s["scheme"], "steps": s["steps"], "slices": s["slices"]}


def _policy_2d(cfg):
    from .solve2d import GridPolicy

    g = cfg["grid"]
    return GridPolicy(n_osc=g["n_osc"], p_max_factor=float(g["p_max_factor"]), n_ev=g["n_ev"])


def _disk_opts(cfg, k: float) -> dict:
    g = cfg["grid"]
    return {"n_radial": g["n_radial"], "n_azimuthal": g["n_azimuthal"],
            "p_max": float(g["p_max_factor_3d"]) * k, "n_ev_radial": g["n_ev_radial"]}


def _make_grid(cfg, spec, k):
    from .threed import build_disk_grid

    if spec.dimension == 2:
        return _policy_2d(cfg).build(k)
    return build_disk_grid(k, **_disk_opts(cfg, k))


def _header(cfg, command: str, extra: dict | None = None) -> dict:
    head = {"tmscatter": __version__, "command": command, "config_hash": config_hash(cfg)}
    head["config"] = cfg
    if extra:
        head.update(extra)
    return head


def _thetas(cfg):
    from .solve2d import theta_mesh

    o = cfg["output"]
    if o["thetas"] is not None:
        return np.asarray(o["thetas"], dtype=float)
    return theta_mesh(o["n_theta"], o["margin"])


def _directions(cfg):
    from .threed import direction_mesh

    o = cfg["output"]
    if o["thetas"] is not None:
        th = np.asarray(o["thetas"], dtype=float)
        ph = np.broadcast_to(np.asarray(0.0 if o["phis"] is None else o["phis"], dtype=float), th.shape)
        return th, np.array(ph)
    return direction_mesh(o["n_theta_3d"], o["n_phi_3d"], o["margin"])


def _amplitude_table(cfg):
    from .solve2d import scatter_2d
    from .threed import scatter_3d

    spec = build_potential(cfg["potential"])
    k = _k(cfg)
    inc = cfg["incidence"]
    if spec.dimension == 2:
        th = _thetas(cfg)
        tab = scatter_2d(spec, k, inc["theta0"], th, _policy_2d(cfg), **_tm_kwargs(cfg))
        if inc["side"] is not None and inc["side"] != tab.side:
            raise ConfigError(f"incidence.side={inc['side']} contradicts theta0 (a {tab.side} incidence)")
        return spec, tab
    th, ph = _directions(cfg)
    tab = scatter_3d(spec, k, (inc["theta0"], inc["phi0"]), th, ph, _disk_opts(cfg, k), **_tm_kwargs(cfg))
    return spec, tab


# ---------------------------------------------------------------------------
# subcommands


def cmd_amplitude(cfg):
    spec, tab = _amplitude_table(cfg)
    extra = {"side": tab.side, "delta_cancelled": tab.delta_cancelled}
    if tab.phi is None:
        cols = ["theta_rad", "re_f", "im_f", "abs2_f"]
        rows = [(t, f.real, f.imag, abs(f) ** 2) for t, f in zip(tab.theta, tab.f)]
    else:
        cols = ["theta_rad", "phi_rad", "re_f", "im_f", "abs2_f"]
        rows = [(t, p, f.real, f.imag, abs(f) ** 2) for t, p, f in zip(tab.theta, tab.phi, tab.f)]
    return csv_text(cols, rows, _header(cfg, "amplitude", extra)), 0


def cmd_cross_section(cfg):
    spec, tab = _amplitude_table(cfg)
    extra = {"side": tab.side}
    if tab.phi is None:
        cols = ["theta_rad", "dsigma"]
        rows = [(t, abs(f) ** 2) for t, f in zip(tab.theta, tab.f)]
    else:
        cols = ["theta_rad", "phi_rad", "dsigma"]
        rows = [(t, p, abs(f) ** 2) for t, p, f in zip(tab.theta, tab.phi, tab.f)]
    return csv_text(cols, rows, _header(cfg, "cross-section", extra)), 0


def _alpha(cfg) -> float:
    a = cfg["solver"]["alpha"]
    if a is None:
        raise ConfigError("solver.alpha is required for this subcommand")
    return float(a)


def cmd_certify(cfg):
    from .invisibility import certify_invisibility

    spec = build_potential(cfg["potential"])
    alpha = _alpha(cfg)
    inc, s = cfg["incidence"], cfg["solver"]
    if spec.dimension == 2:
        policy = _policy_2d(cfg).build
        samples = inc["theta0_samples"]
    else:
        policy = lambda k: _make_grid(cfg, spec, k)  # noqa: E731
        samples = inc["theta0_samples"]
        if samples is not None:
            samples = [tuple(t) if isinstance(t, (list, tuple)) else (float(t), float(inc["phi0"])) for t in samples]
    cert = certify_invisibility(
        spec, alpha, inc["k_values"], samples, policy, tol_matrix=s["tol_matrix"],
        tol_amplitude=s["tol_amplitude"], n_theta=cfg["output"]["n_theta"], **_tm_kwargs(cfg),
    )
    doc = cert.to_dict()
    doc["header"] = _header(cfg, "certify")
    return json_text(doc), 0 if cert.passed else 3


def cmd_born_exact(cfg):
    from .invisibility import born_exactness_report
    from .threed import born_exactness_3d

    spec = build_potential(cfg["potential"])
    alpha = _alpha(cfg)
    k = _k(cfg)
    inc, s = cfg["incidence"], cfg["solver"]
    if spec.dimension == 2:
        rep = born_exactness_report(spec, alpha, k, inc["theta0"], cfg["output"]["n_theta"], _policy_2d(cfg),
                                    dyson_nx=s["dyson_nx"], **_tm_kwargs(cfg))
    else:
        rep = born_exactness_3d(spec, alpha, k, (inc["theta0"], inc["phi0"]), _disk_opts(cfg, k),
                                mesh=_directions(cfg), dyson_nx=min(s["dyson_nx"], 16), **_tm_kwargs(cfg))
    doc = rep.to_dict()
    doc["header"] = _header(cfg, "born-exact")
    return json_text(doc), 0 if rep.passed else 3


def cmd_scan_ss(cfg):
    from .solve2d import sigma_min_m22
    from .transfer import fundamental_tm

    spec = build_potential(cfg["potential"])
    ks = cfg["incidence"]["k_values"]
    if not ks:
        raise ConfigError("incidence.k_values must list the wavenumbers to scan")
    rows = []
    for k in ks:
        if not k > 0:
            raise ConfigError("scan wavenumbers must be positive")
        m = fundamental_tm(spec, _make_grid(cfg, spec, float(k)), **_tm_kwargs(cfg))
        smin, smax = sigma_min_m22(m)
        rows.append((float(k), smin, smax))
    return csv_text(["k", "sigma_min", "sigma_max"], rows, _header(cfg, "scan-ss")), 0


def cmd_compose_bench(cfg):
    from .transfer import auxiliary_tm

    spec = build_potential(cfg["potential"])
    k = _k(cfg)
    grid = _make_grid(cfg, spec, k)
    s = cfg["solver"]
    counts = [int(c) for c in s["slice_counts"]]
    if not counts or any(c < 1 for c in counts):
        raise ConfigError("solver.slice_counts must list positive integers")
    steps = s["steps"]
    if steps is None:
        from math import lcm

        steps = lcm(*counts) * max(1, int(np.ceil(32 * max(k, 1.0) * (spec.a_plus - spec.a_minus) / lcm(*counts))))
    ref = None
    rows = []
    for c in counts:
        m = auxiliary_tm(spec, grid, c, steps, s["scheme"]).osc_part().matrix
        if ref is None:
            ref = m
        scale = max(float(np.max(np.abs(ref))), np.finfo(float).tiny)
        rows.append((c, steps, float(np.max(np.abs(m - ref))) / scale))
    return csv_text(["slices", "steps", "osc_rel_diff_vs_first"], rows, _header(cfg, "compose-bench")), 0


def cmd_oracle_compare(cfg):
    from .oracles import born_series_greens_2d, rect_barrier_tm
    from .transfer import fundamental_tm

    spec = build_potential(cfg["potential"])
    k = _k(cfg)
    s = cfg["solver"]
    if spec.y_independent:
        grid = _make_grid(cfg, spec, k)
        m = fundamental_tm(spec, grid, **_tm_kwargs(cfg))
        p = cfg["potential"]
        from .config import parse_complex

        z = parse_complex(p["z"], "potential.z")
        rows = []
        for i in range(grid.n_quad):
            w = float(grid.varpi[i].real)
            blk = np.array([[m.b11[i, i], m.b12[i, i]], [m.b21[i, i], m.b22[i, i]]])
            ref = rect_barrier_tm(z, float(p["lo"]), float(p["hi"]), w)
            rows.append((float(grid.nodes[i]), float(np.max(np.abs(blk - ref)) / np.max(np.abs(ref))),
                         abs(np.linalg.det(blk) - 1)))
        return csv_text(["p", "rel_err_vs_1d", "det_minus_1"], rows, _header(cfg, "oracle-compare")), 0
    if spec.dimension != 2:
        raise ConfigError("oracle-compare supports 2D potentials")
    from .solve2d import scatter_2d

    th = _thetas(cfg)
    theta0 = cfg["incidence"]["theta0"]
    eng = scatter_2d(spec, k, theta0, th, _policy_2d(cfg), **_tm_kwargs(cfg)).f
    orc = born_series_greens_2d(spec, k, theta0, s["order"], th, s["oracle_radius"], s["oracle_n"])
    ref = max(float(np.max(np.abs(orc.f))), np.finfo(float).tiny)
    rows = [(t, e.real, e.imag, o.real, o.imag, abs(e - o) / ref) for t, e, o in zip(th, eng, orc.f)]
    extra = {"oracle_ratios": [float(r) for r in orc.ratios], "oracle_spacing": orc.spacing}
    cols = ["theta_rad", "re_engine", "im_engine", "re_oracle", "im_oracle", "rel_diff"]
    return csv_text(cols, rows, _header(cfg, "oracle-compare", extra)), 0


COMMANDS = {
    "amplitude": cmd_amplitude,
    "cross-section": cmd_cross_section,
    "certify": cmd_certify,
    "born-exact": cmd_born_exact,
    "scan-ss": cmd_scan_ss,
    "compose-bench": cmd_compose_bench,
    "oracle-compare": cmd_oracle_compare,
}


def run(command: str, config_path, output=None) -> int:
    """Run one subcommand; returns the exit status.  Errors propagate."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown subcommand {command!r}")
    cfg = load_config(config_path)
    text, status = COMMANDS[command](cfg)
    emit(text, output if output is not None else cfg["output"]["path"])
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tmscatter", description="Transfer-matrix scattering engine.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=COMMANDS[name].__name__.replace("cmd_", "").replace("_", " "))
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--output", "-o", default=None, help="output file ('-' for stdout); overrides output.path")
        p.add_argument("--verbose", "-v", action="count", default=0)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args.command, args.config, args.output)
    except PremiseError as exc:
        print(f"tmscatter: premise failure: {exc}", file=sys.stderr)
        return exc.exit_code
    except ConfigError as exc:
        print(f"tmscatter: config error: {exc}", file=sys.stderr)
        return exc.exit_code
    except TMScatterError as exc:
        print(f"tmscatter: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
