"""Command-line front end.

Every subcommand reads an optional flat ``key = value`` config file
(``--config``); explicit flags override it.  Artifacts go to ``--out`` or
``$MFFLOW_OUT`` (default: current directory).

Exit codes: 0 ok, 1 bound failure under ``--strict``, 2 usage error,
3 numeric error.
"""

from __future__ import annotations

import argparse
import math
import os
import random
import sys
from fractions import Fraction

import numpy as np

from . import _io
from .bounds import BOUND_IDS, BoundSpec, evaluate, margin_scan
from .errors import NumericError, UsageError
from .families import BetaFlow, ReversedFlow, ScaleInvariant, TrivialAnsatz
from .hierarchy import C_LOOP, build_table, fixed_point_sequence, uv_limit_scan

OUT_ENV = "MFFLOW_OUT"

EXIT_OK, EXIT_BOUND, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

# key -> (type tag, default) per command; type tags drive config parsing
_COMMON = {
    "out": ("str", None),
    "threads": ("int", 1),
    "strict": ("bool", False),
    "check": ("list", []),
    "quiet": ("bool", False),
}

SCHEMA = {
    "flow": {
        "family": ("str", "beta"),
        "delta": ("num", "1/4"),
        "beta": ("num", "1/4"),
        "mu_max": ("num", "10"),
        "f2": ("num", "1"),
        "n_max": ("int", 16),
        "l_max": ("int", 4),
        "grid": ("int", 16),
        "backend": ("str", "float"),
        "K": ("num", "4"),
    },
    "fixedpoint": {"f2": ("num", "1"), "n_max": ("int", 40)},
    "sine": {
        "eps_prime": ("num", "1/1000"),
        "eps": ("num", "1/100"),
        "n_max": ("int", 12),
        "l_max": ("int", 4),
        "seed": ("int", 0),
        "backend": ("str", "rational"),
        "variant": ("str", "consistent"),
    },
    "trivial": {
        "eps": ("num", "1/100"),
        "f20": ("num", None),
        "g40": ("num", None),
        "M": ("int", 40),
        "N": ("int", 30),
        "nullin_n_max": ("int", 12),
        "mu_max_list": ("list", []),
        "n_max": ("int", 10),
    },
    "onepi": {
        "delta": ("num", None),
        "beta": ("num", "1"),
        "mu_max": ("num", "10"),
        "n_max": ("int", 12),
        "l_max": ("int", 4),
        "grid": ("int", 8),
        "K": ("num", None),
        "tol": ("num", "1e-13"),
    },
    "bounds": {
        "lemma": ("str", "prodh"),
        "scan": ("str", None),
        "values": ("list", []),
        "K": ("num", "4"),
        "delta": ("num", "1/4"),
        "beta": ("num", "1/4"),
        "mu_max": ("num", "10"),
        "eps": ("num", "1/100"),
        "eps_prime": ("num", "1/10000"),
        "N": ("int", 30),
        "n_max": ("int", 16),
        "l_max": ("int", 4),
        "grid": ("int", 16),
        "v_max": ("int", 5),
    },
    "landau": {"g0": ("num", "1/10"), "beta": ("num", "2"), "lam": ("list", [])},
    "uv-scan": {
        "family": ("str", "beta"),
        "delta": ("num", "1/4"),
        "beta": ("num", "1/4"),
        "mu_max_list": ("list", ["10", "20", "40", "80"]),
        "n_max": ("int", 12),
        "backend": ("str", "float"),
    },
}


# ------------------------------------------------------------------ config


def parse_value(kind, text):
    text = text.strip()
    if kind == "int":
        return int(text)
    if kind == "bool":
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off", ""):
            return False
        raise UsageError(f"not a boolean: {text!r}")
    if kind == "list":
        return [t.strip() for t in text.split(",") if t.strip()]
    if kind == "num":
        to_number(text)  # validate only; keep the literal text
        return text
    return text


def to_number(text, exact=False):
    """``"1/4"`` or ``"0.25"``; exact mode returns a Fraction."""
    if isinstance(text, (int, float, Fraction)):
        return Fraction(text) if exact else text
    t = str(text).strip()
    try:
        if exact:
            return Fraction(t)
        if "/" in t:
            return float(Fraction(t))
        return float(t)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None


def _schema(command):
    return {**_COMMON, **SCHEMA[command]}


def emit_config(cfg: dict) -> str:
    """Flat text form; ``parse_config(emit_config(c)) == c``."""
    sch = _schema(cfg["command"])
    lines = [f"command = {cfg['command']}"]
    for key in sorted(k for k in cfg if k != "command"):
        v = cfg[key]
        if v is None:
            continue
        kind = sch[key][0]
        if kind == "list":
            v = ",".join(v)
        elif kind == "bool":
            v = "true" if v else "false"
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


def parse_config(text: str, command: str | None = None) -> dict:
    raw = {}
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {ln}: expected key = value")
        k, v = line.split("=", 1)
        raw[k.strip().replace("-", "_")] = v.strip()
    command = raw.pop("command", command)
    if command not in SCHEMA:
        raise UsageError(f"config names unknown command {command!r}")
    sch = _schema(command)
    cfg = {"command": command}
    for k, v in raw.items():
        if k not in sch:
            raise UsageError(f"unknown config key {k!r} for {command}")
        cfg[k] = parse_value(sch[k][0], v)
    return cfg


def resolve_config(command, file_cfg: dict, flags: dict) -> dict:
    """Defaults, then config file, then flags."""
    cfg = {"command": command}
    for k, (_, default) in _schema(command).items():
        cfg[k] = list(default) if isinstance(default, list) else default
    cfg.update({k: v for k, v in file_cfg.items() if k != "command"})
    cfg.update({k: v for k, v in flags.items() if v is not None})
    return cfg


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mfflow", description="Mean-field flow hierarchies and bound suites.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, sch in SCHEMA.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="flat key = value file")
        sp.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or .)")
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--strict", action="store_const", const=True, default=None)
        sp.add_argument("--check", default=None, help="comma-separated bound ids")
        sp.add_argument("--quiet", action="store_const", const=True, default=None)
        for key, (kind, _) in sch.items():
            flag = "--" + key.replace("_", "-")
            if kind == "int":
                sp.add_argument(flag, dest=key, type=int, default=None)
            else:
                sp.add_argument(flag, dest=key, default=None)
    return p


def _flags(ns) -> dict:
    sch = _schema(ns.command)
    out = {}
    for k, v in vars(ns).items():
        if k in ("command", "config") or v is None:
            continue
        kind = sch[k][0]
        out[k] = parse_value(kind, v) if isinstance(v, str) and kind in ("list", "num", "bool") else v
    return out


# ------------------------------------------------------------------ helpers


class _Run:
    def __init__(self, cfg):
        self.cfg = cfg
        out = cfg.get("out") or os.environ.get(OUT_ENV) or "."
        os.makedirs(out, exist_ok=True)
        self.out = out
        self.reports = []
        self.files = []

    def path(self, name):
        p = os.path.join(self.out, name)
        self.files.append(p)
        return p

    def report(self, rep, tag=None):
        tag = tag or rep.spec.id
        stem = f"{self.cfg['command']}_{tag}"
        rep.to_json(self.path(stem + ".json"))
        rep.to_csv(self.path(stem + ".csv"))
        self.reports.append(rep)
        return rep

    def finish(self, line):
        bad = [r for r in self.reports if not r.ok]
        if self.reports:
            line += " | " + "; ".join(r.summary_line() for r in self.reports)
        if not self.cfg.get("quiet"):
            print(line)
        if bad and self.cfg.get("strict"):
            return EXIT_BOUND
        return EXIT_OK


def _checks(cfg, allowed):
    ids = list(cfg.get("check") or [])
    for i in ids:
        if i not in BOUND_IDS:
            raise UsageError(f"unknown bound id {i!r}")
        if i not in allowed:
            raise UsageError(f"bound {i!r} does not apply to {cfg['command']}")
    return ids


def _grid(mu_max, points, exact):
    if points < 1:
        raise UsageError("grid needs at least one point")
    if points == 1:
        return [mu_max]
    if exact:
        return [Fraction(mu_max) * i / (points - 1) for i in range(points)]
    return [float(x) for x in np.linspace(0.0, float(mu_max), points)]


def _flow_family(cfg, exact, mu_max=None):
    num = lambda k: to_number(cfg[k], exact)  # noqa: E731
    mu_max = num("mu_max") if mu_max is None else mu_max
    fam = cfg["family"]
    if fam == "beta":
        return BetaFlow(num("delta"), num("beta"), mu_max)
    if fam == "positive":
        return BetaFlow(num("delta"), num("beta"), mu_max, sign=1, offset=1)
    if fam == "reversed":
        return ReversedFlow(num("delta"), num("beta"), mu_max)
    if fam == "const":
        return ScaleInvariant(num("f2"), mu_max)
    raise UsageError(f"unknown family {fam!r} (beta, positive, reversed, const)")


# ------------------------------------------------------------------ commands


def cmd_flow(cfg):
    run = _Run(cfg)
    exact = cfg["backend"] == "rational"
    if cfg["backend"] not in ("float", "rational"):
        raise UsageError("backend must be float or rational")
    checks = _checks(cfg, ("geom2", "geom", "dAbound", "Abound"))
    fam = _flow_family(cfg, exact)
    mu_max = to_number(cfg["mu_max"], exact)
    grid = _grid(mu_max, cfg["grid"], exact)
    tab = build_table(fam, cfg["n_max"], cfg["l_max"], grid, backend=cfg["backend"], threads=cfg["threads"])
    tab.to_csv(run.path("flow.csv"))
    tab.to_json(run.path("flow.json"))
    for cid in checks:
        params = {
            "K": to_number(cfg["K"]),
            "delta": to_number(cfg["delta"]),
            "beta": to_number(cfg["beta"]),
            "mu_max": float(mu_max),
            "l_max": cfg["l_max"],
        }
        run.report(evaluate(BoundSpec(cid, params), tab))
    return run.finish(f"flow: family={cfg['family']} n<={cfg['n_max']} l<={cfg['l_max']} points={len(grid)}")


def cmd_fixedpoint(cfg):
    run = _Run(cfg)
    txt = str(cfg["f2"])
    try:
        f2 = Fraction(txt)
    except ValueError:
        raise UsageError(f"not a number: {txt!r}") from None
    seq = fixed_point_sequence(f2, cfg["n_max"])
    rows = [("fixedpoint", 2 * i + 2, 0, 0, v) for i, v in enumerate(seq)]
    _io.write_csv(run.path("fixedpoint.csv"), ["system", "n", "l", "mu", "value"], rows)
    _io.write_json(
        run.path("fixedpoint.json"),
        {"system": "fixedpoint", "params": {"f2": f2}, "records": [{"n": r[1], "value": r[4]} for r in rows]},
    )
    nz = sum(1 for v in seq[1:] if v != 0)
    return run.finish(f"fixedpoint: f2={_io.fmt_number(f2)} n<={cfg['n_max']} nonzero(n>=4)={nz}")


def cmd_sine(cfg):
    from .sine_action import boundary_seeds, build_sine_table, lemma_bound_check, random_seeds

    run = _Run(cfg)
    _checks(cfg, ("boundedaction",))
    n_max, l_max = cfg["n_max"], cfg["l_max"]
    L = l_max + (n_max - 2) // 2
    if cfg["backend"] == "rational":
        seeds = random_seeds(to_number(cfg["eps_prime"], True), L, random.Random(cfg["seed"]))
        c = Fraction(C_LOOP)
    elif cfg["backend"] == "float":
        seeds = boundary_seeds(to_number(cfg["eps_prime"]), L)
        c = C_LOOP
    else:
        raise UsageError("backend must be float or rational")
    tab = build_sine_table(seeds, n_max, c, cfg["variant"]).restrict(n_max, l_max)
    rows = [("sine", n, l, 0, v) for (n, l), v in sorted(tab.items())]
    _io.write_csv(run.path("sine.csv"), ["system", "n", "l", "mu", "value"], rows)
    _io.write_json(
        run.path("sine.json"),
        {
            "system": "sine",
            "params": {"eps_prime": cfg["eps_prime"], "seed": cfg["seed"], "variant": cfg["variant"]},
            "records": [{"n": r[1], "l": r[2], "value": r[4]} for r in rows],
        },
    )
    if cfg["check"]:
        run.report(lemma_bound_check(to_number(cfg["eps_prime"]), to_number(cfg["eps"]), n_max, l_max, C_LOOP, seeds))
    return run.finish(f"sine: n<={n_max} l<={l_max} entries={len(rows)}")


def cmd_trivial(cfg):
    from . import trivial as tv

    run = _Run(cfg)
    checks = _checks(cfg, ("g0g1", "gnk", "trivex"))
    eps = to_number(cfg["eps"], True)
    f20, g40 = tv.default_seeds(eps)
    if cfg["f20"] is not None:
        f20 = to_number(cfg["f20"], True)
    if cfg["g40"] is not None:
        g40 = to_number(cfg["g40"], True)
    co = tv.build_coeffs(f20, g40, cfg["M"], eps)
    co.to_csv(run.path("trivial_coeffs.csv"))
    msg = [f"trivial: M={cfg['M']} alternating={tv.sign_alternates(co, cfg['M'])}"]
    count = min(len(co.f2k), cfg["N"])
    ans = tv.solve_ansatz_coeffs(co.f2k_list(count))
    for cid in checks:
        params = {"eps": float(eps), "N": cfg["N"]}
        run.report(evaluate(BoundSpec(cid, params), ans if cid == "trivex" else co))
    if cfg["nullin_n_max"]:
        nr = tv.check_nullin(tv.nullin_table(co, cfg["nullin_n_max"], "rational"))
        msg.append(f"nullin {nr.checked} checks ok={nr.ok}")
    if cfg["mu_max_list"]:
        a = tuple(float(x) for x in ans.a)
        mus = [to_number(m) for m in cfg["mu_max_list"]]
        scan = uv_limit_scan(lambda m: TrivialAnsatz(a, mu_max=m), mus, cfg["n_max"])
        scan.to_json(run.path("trivial_uv.json"))
        scan.to_csv(run.path("trivial_uv.csv"))
        dec = all(scan.end_decreasing(n) for n in range(4, cfg["n_max"] + 1, 2))
        msg.append(f"f_n(mu_max) decreasing={dec}")
    return run.finish("; ".join(msg))


def cmd_onepi(cfg):
    from .onepi import K_min, build_onepi_table

    run = _Run(cfg)
    checks = _checks(cfg, ("pi4", "jv", "jlv"))
    c = C_LOOP
    delta = to_number(cfg["delta"]) if cfg["delta"] is not None else c / 8
    K = to_number(cfg["K"]) if cfg["K"] is not None else K_min(c)
    beta, mu_max = to_number(cfg["beta"]), to_number(cfg["mu_max"])
    grid = _grid(mu_max, cfg["grid"], False)
    tab = build_onepi_table(delta, beta, mu_max, cfg["n_max"], cfg["l_max"], grid, to_number(cfg["tol"]), c, cfg["threads"])
    tab.to_csv(run.path("onepi.csv"))
    tab.to_json(run.path("onepi.json"))
    tab.jtable.to_csv(run.path("onepi_J.csv"))
    tab.jtable.to_json(run.path("onepi_J.json"))
    for cid in checks:
        params = {"K": K, "beta": beta, "delta": delta, "mu_max": mu_max, "c": c, "l_max": cfg["l_max"]}
        data = tab if cid == "pi4" else tab.jtable
        run.report(evaluate(BoundSpec(cid, params), data))
    h4pos = all(float(tab.value(4, 0, i)) > 0 for i in range(len(grid)))
    return run.finish(f"onepi: n<={cfg['n_max']} l<={cfg['l_max']} points={len(grid)} h4>0={h4pos}")


def _bounds_data(cfg, spec):
    """Build the data object a lemma evaluates, from ``spec.params`` and ``cfg``."""
    from . import onepi, trivial as tv
    from .sine_action import boundary_seeds, build_sine_table

    lid, p = spec.id, spec.params
    if lid in ("geom2", "dAbound"):
        fam = BetaFlow(p["delta"], p["beta"], p["mu_max"])
    elif lid in ("geom", "Abound"):
        fam = BetaFlow(p["delta"], p["beta"], p["mu_max"], sign=1, offset=1)
    else:
        fam = None
    if fam is not None:
        grid = _grid(p["mu_max"], cfg["grid"], False)
        return build_table(fam, cfg["n_max"], cfg["l_max"], grid, threads=cfg["threads"])
    if lid == "boundedaction":
        L = cfg["l_max"] + (cfg["n_max"] - 2) // 2
        return build_sine_table(boundary_seeds(p["eps_prime"], L), cfg["n_max"], C_LOOP).restrict(cfg["n_max"], cfg["l_max"])
    if lid in ("g0g1", "gnk", "trivex"):
        eps = Fraction(p["eps"]).limit_denominator(10**12)
        co = tv.build_coeffs(*tv.default_seeds(eps), M=max(4, 2 * ((p["N"] + 1) // 2)), eps=eps)
        return tv.solve_ansatz_coeffs(co.f2k_list(min(len(co.f2k), p["N"]))) if lid == "trivex" else co
    if lid in ("jv", "jlv", "pi4"):
        grid = _grid(p["mu_max"], cfg["grid"], False)
        tab = onepi.build_onepi_table(p["delta"], p["beta"], p["mu_max"], cfg["n_max"], cfg["l_max"], grid, threads=cfg["threads"])
        return tab if lid == "pi4" else tab.jtable
    if lid == "INga":
        return onepi.inga_data([0.05, 0.25, 0.5, 0.75, 0.95], 6, 4)
    return None  # prodh needs no data


def cmd_bounds(cfg):
    run = _Run(cfg)
    lid = cfg["lemma"]
    if lid not in BOUND_IDS:
        raise UsageError(f"unknown lemma {lid!r}; choose from {', '.join(BOUND_IDS)}")
    params = {
        "K": to_number(cfg["K"]),
        "delta": to_number(cfg["delta"]),
        "beta": to_number(cfg["beta"]),
        "mu_max": to_number(cfg["mu_max"]),
        "eps": to_number(cfg["eps"]),
        "eps_prime": to_number(cfg["eps_prime"]),
        "N": cfg["N"],
        "n_max": cfg["n_max"],
        "l_max": cfg["l_max"],
        "v_max": cfg["v_max"],
        "c": C_LOOP,
    }
    spec = BoundSpec(lid, params)
    if cfg["scan"]:
        if cfg["scan"] not in params:
            raise UsageError(f"cannot scan {cfg['scan']!r}")
        vals = [to_number(v) for v in cfg["values"]]
        if not vals:
            raise UsageError("--scan needs --values")
        curve = margin_scan(spec, cfg["scan"], vals, lambda s: _bounds_data(cfg, s))
        rows = [(lid, v, m, f) for v, m, f in curve]
        _io.write_csv(run.path(f"bounds_{lid}_scan.csv"), ["lemma", cfg["scan"], "min_margin", "failures"], rows)
        line = f"bounds: {lid} scan over {cfg['scan']} " + " ".join(
            f"{_io.fmt_number(v)}:{_io.fmt_number(m)}" for v, m, _ in curve
        )
        bad = any(f for _, _, f in curve)
        if not cfg["quiet"]:
            print(line)
        return EXIT_BOUND if bad and cfg["strict"] else EXIT_OK
    run.report(evaluate(spec, _bounds_data(cfg, spec)), lid)
    return run.finish(f"bounds: {lid}")


def cmd_landau(cfg):
    from .trivial import landau_coupling, landau_pole

    g0, beta = to_number(cfg["g0"]), to_number(cfg["beta"])
    lam_l = landau_pole(g0, beta)
    line = f"lambda_L = {_io.fmt_number(lam_l)}"
    for t in cfg["lam"]:
        lam = to_number(t)
        line += f"; g({_io.fmt_number(lam)}) = {_io.fmt_number(landau_coupling(lam, g0, beta))}"
    if not cfg["quiet"]:
        print(line)
    return EXIT_OK


def cmd_uv_scan(cfg):
    run = _Run(cfg)
    exact = cfg["backend"] == "rational"
    mus = [to_number(m, exact) for m in cfg["mu_max_list"]]
    if len(mus) < 2:
        raise UsageError("uv-scan needs at least two mu_max values")
    scan = uv_limit_scan(lambda m: _flow_family(cfg, exact, m), mus, cfg["n_max"], cfg["backend"])
    scan.to_json(run.path("uv_scan.json"))
    scan.to_csv(run.path("uv_scan.csv"))
    ns = range(4, cfg["n_max"] + 1, 2)
    z = all(scan.zero_decreasing(n) for n in ns)
    d = all(scan.end_diffs_shrinking(n) for n in ns)
    return run.finish(f"uv-scan: |f_n(0)| decreasing={z} end differences shrinking={d}")


COMMANDS = {
    "flow": cmd_flow,
    "fixedpoint": cmd_fixedpoint,
    "sine": cmd_sine,
    "trivial": cmd_trivial,
    "onepi": cmd_onepi,
    "bounds": cmd_bounds,
    "landau": cmd_landau,
    "uv-scan": cmd_uv_scan,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    try:
        file_cfg = {}
        if ns.config:
            try:
                with open(ns.config) as fh:
                    file_cfg = parse_config(fh.read(), ns.command)
            except OSError as e:
                raise UsageError(f"cannot read config: {e}") from None
            if file_cfg["command"] != ns.command:
                raise UsageError(f"config is for {file_cfg['command']!r}, not {ns.command!r}")
        cfg = resolve_config(ns.command, file_cfg, _flags(ns))
        return COMMANDS[ns.command](cfg)
    except UsageError as e:
        print(f"mfflow: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, ArithmeticError, OverflowError) as e:
        print(f"mfflow: numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
