"""Command-line interface.

Every subcommand accepts ``--config FILE`` with ``key=value`` lines (``#``
starts a comment).  Values are resolved as defaults < config file < flags and
the effective configuration is echoed at the top of the output.

Exit codes: 0 success, 1 a verification check failed, 2 configuration error,
3 membership could not be decided.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import re
import sys
from decimal import Decimal
from typing import Any, Callable

from . import experiments, model, singular_series
from .prime_engine import gap_histogram
from .ps_membership import PsExponent, UndecidableMembership

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_UNDECIDABLE = 3


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# value parsers (shared by flags and config files)


_INT_RE = re.compile(r"[+-]?\d+(?:[eE]\+?\d+)?")


def parse_int(text: str) -> int:
    """Integer, optionally with an exponent (``1e8``); the mantissa must be an integer."""
    t = str(text).strip()
    if not _INT_RE.fullmatch(t):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(Decimal(t))


def parse_limit(text: str) -> int:
    v = parse_int(text)
    if v < 2:
        raise argparse.ArgumentTypeError(f"limit must be at least 2, got {v}")
    return v


def parse_positive(text: str) -> int:
    v = parse_int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def parse_exponent(text: str) -> float:
    try:
        return PsExponent(float(text)).c
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return v


def parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def float_list(text: str) -> list[float]:
    parts = [p for p in str(text).split(",")]
    if not parts or any(not p.strip() for p in parts):
        raise argparse.ArgumentTypeError(f"malformed list: {text!r}")
    return [parse_float(p) for p in parts]


def offset_list(text: str) -> list[int]:
    parts = str(text).split(",")
    try:
        vals = [int(p.strip()) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed offset set: {text!r}") from None
    if any(v < 0 for v in vals) or len(set(vals)) != len(vals):
        raise argparse.ArgumentTypeError(f"offsets must be distinct and non-negative: {text!r}")
    return sorted(vals)


# ---------------------------------------------------------------------------
# option tables: name -> (parser, default); None default with required=True


class Opt:
    def __init__(self, parse: Callable[[str], Any], default: Any = None, required: bool = False,
                 help: str = "", flag: bool = False):
        self.parse = parse
        self.default = default
        self.required = required
        self.help = help
        self.flag = flag


def _fmt_choice(text: str) -> str:
    if text not in ("json", "csv"):
        raise argparse.ArgumentTypeError(f"format must be json or csv, got {text!r}")
    return text


def _path(text: str) -> str | None:
    return str(text) if str(text).strip() else None


COMMANDS: dict[str, dict[str, Opt]] = {
    "count": {
        "x": Opt(parse_limit, required=True, help="upper limit for p"),
        "c1": Opt(parse_exponent, required=True, help="exponent for p"),
        "c2": Opt(parse_exponent, required=True, help="exponent for the successor"),
        "per_gap": Opt(parse_bool, False, flag=True, help="also report counts split by gap"),
        "threads": Opt(parse_positive, 1, help="sieve worker threads"),
        "checkpoint": Opt(_path, None, help="checkpoint file (resumed if present)"),
        "out": Opt(_path, None, help="output file (default stdout)"),
        "format": Opt(_fmt_choice, "json", help="json or csv"),
        "timing": Opt(parse_bool, True, help="record runtime_seconds (false gives byte-stable output)"),
    },
    "singular_pair": {
        "h_max": Opt(parse_positive, required=True, help="largest gap h"),
        "cutoff": Opt(parse_positive, None, help="use the truncated Euler product at this prime cutoff"),
        "out": Opt(_path, None, help="output file"),
    },
    "singular_set": {
        "offsets": Opt(offset_list, required=True, help="comma-separated offsets, e.g. 0,2,6"),
        "cutoff": Opt(parse_positive, singular_series.DEFAULT_CUTOFF, help="prime cutoff"),
        "out": Opt(_path, None, help="output file"),
    },
    "verify_averages": {
        "h_max": Opt(parse_positive, required=True, help="largest h on the geometric grid"),
        "out": Opt(_path, None, help="output file"),
    },
    "verify_proposition": {
        "u_grid": Opt(float_list, required=True, help="u values for the asymptotic rows"),
        "k_grid": Opt(float_list, required=True, help="k values for the decay rows"),
        "theta_grid": Opt(float_list, [0.0, 0.5, 1.0], help="theta values for informational rows"),
        "decay_u": Opt(float_list, [math.exp(10.0)], help="u values for the decay rows"),
        "jk_values": Opt(float_list, [1.0, 2.0, 4.0], help="(j, k) range over this set squared"),
        "out": Opt(_path, None, help="output file"),
    },
    "predict": {
        "x": Opt(parse_limit, required=True, help="limit x (at least 3)"),
        "c1": Opt(parse_exponent, required=True),
        "c2": Opt(parse_exponent, required=True),
        "empirical": Opt(parse_bool, False, flag=True, help="also count pairs up to x"),
        "threads": Opt(parse_positive, 1),
        "out": Opt(_path, None, help="output file"),
    },
    "gapmodel": {
        "x": Opt(parse_limit, required=True, help="limit x (at least 10)"),
        "h_max": Opt(parse_positive, 50, help="largest even gap"),
        "min_count": Opt(parse_positive, 1000, help="rows with fewer empirical gaps are not checked"),
        "tolerance": Opt(parse_float, 0.10, help="allowed relative error"),
        "threads": Opt(parse_positive, 1),
        "out": Opt(_path, None, help="output file"),
    },
}


def _add_options(p: argparse.ArgumentParser, table: dict[str, Opt], positional: str | None = None):
    p.add_argument("--config", default=None, help="key=value configuration file")
    for name, opt in table.items():
        if name == positional:
            p.add_argument(name, type=opt.parse, nargs="?", default=None, help=opt.help)
            continue
        flag = "--" + name.replace("_", "-")
        if opt.flag:
            p.add_argument(flag, dest=name, action="store_const", const=True, default=None, help=opt.help)
        else:
            p.add_argument(flag, dest=name, type=opt.parse, default=None, help=opt.help)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psprimes",
        description="Consecutive primes in Piatetski-Shapiro sequences and singular-series checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="count consecutive prime pairs in two sequences")
    _add_options(p, COMMANDS["count"])
    p.set_defaults(key="count")

    p = sub.add_parser("singular", help="singular series values")
    ss = p.add_subparsers(dest="mode", required=True)
    q = ss.add_parser("pair", help="table h,s,s0 for even h")
    _add_options(q, COMMANDS["singular_pair"])
    q.set_defaults(key="singular_pair")
    q = ss.add_parser("set", help="S(H) and S0(H) for one offset set")
    _add_options(q, COMMANDS["singular_set"], positional="offsets")
    q.set_defaults(key="singular_set")

    p = sub.add_parser("verify", help="residual checks")
    vs = p.add_subparsers(dest="mode", required=True)
    q = vs.add_parser("averages", help="prefix and pair averages of S0")
    _add_options(q, COMMANDS["verify_averages"])
    q.set_defaults(key="verify_averages")
    q = vs.add_parser("proposition", help="asymptotics and decay of the R and S sums")
    _add_options(q, COMMANDS["verify_proposition"])
    q.set_defaults(key="verify_proposition")

    p = sub.add_parser("predict", help="conjectured main term")
    _add_options(p, COMMANDS["predict"])
    p.set_defaults(key="predict")

    p = sub.add_parser("gapmodel", help="predicted vs empirical prime gap counts")
    _add_options(p, COMMANDS["gapmodel"])
    p.set_defaults(key="gapmodel")
    return parser


def read_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve_config(key: str, ns: argparse.Namespace) -> dict[str, Any]:
    table = COMMANDS[key]
    cfg = {name: opt.default for name, opt in table.items()}
    if ns.config:
        for name, text in read_config_file(ns.config).items():
            if name not in table:
                raise ConfigError(f"unknown config key {name!r}")
            try:
                cfg[name] = table[name].parse(text)
            except argparse.ArgumentTypeError as exc:
                raise ConfigError(f"config key {name}: {exc}") from None
    for name in table:
        v = getattr(ns, name, None)
        if v is not None:
            cfg[name] = v
    missing = [n for n, o in table.items() if o.required and cfg[n] is None]
    if missing:
        raise ConfigError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))
    return cfg


# ---------------------------------------------------------------------------
# output helpers


def _echo_value(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, list):
        return ",".join(repr(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def csv_header(cfg: dict[str, Any]) -> str:
    return "".join(f"# {k}={_echo_value(v)}\n" for k, v in cfg.items())


def _emit(cfg: dict[str, Any], text: str):
    if cfg.get("out"):
        with open(cfg["out"], "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj: dict) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_count(cfg: dict[str, Any]) -> int:
    ecfg = experiments.PairExperimentConfig(
        x=cfg["x"], c1=cfg["c1"], c2=cfg["c2"], per_gap=cfg["per_gap"],
        threads=cfg["threads"], checkpoint_path=cfg["checkpoint"],
    )
    run = experiments.run_pair_experiment(ecfg, timing=cfg["timing"])
    rec = run.record.to_json_dict()
    if cfg["format"] == "json":
        obj = {"config": cfg, **rec}
        if cfg["per_gap"]:
            obj["per_gap"] = [{"h": r.h, "count_h": r.count_h} for r in run.gaps.records]
            obj["tail"] = run.gaps.tail
            obj["h_cap"] = run.gaps.h_cap
        _emit(cfg, _json(obj))
    else:
        buf = io.StringIO()
        buf.write(csv_header(cfg))
        buf.write(",".join(rec) + "\n")
        buf.write(",".join(_csv_field(v) for v in rec.values()) + "\n")
        if cfg["per_gap"]:
            buf.write("\n" + run.gaps.to_csv())
        _emit(cfg, buf.getvalue())
    return EXIT_OK


def _csv_field(v: Any) -> str:
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else str(v)


def cmd_singular_pair(cfg: dict[str, Any]) -> int:
    buf = io.StringIO()
    buf.write(csv_header(cfg))
    if cfg["cutoff"] is None:
        singular_series.write_pair_csv(buf, cfg["h_max"], even_only=True)
    else:
        buf.write("h,s,s0\n")
        for h in range(2, cfg["h_max"] + 1, 2):
            sv = singular_series.singular_series((0, h), cfg["cutoff"])
            buf.write(f"{h},{sv.value!r},{sv.value - 1.0!r}\n")
    _emit(cfg, buf.getvalue())
    return EXIT_OK


def cmd_singular_set(cfg: dict[str, Any]) -> int:
    H = singular_series.OffsetSet.of(cfg["offsets"])
    s = singular_series.singular_series(H, cfg["cutoff"])
    s0 = singular_series.modified_singular_series(H, cfg["cutoff"])
    buf = io.StringIO()
    buf.write(csv_header(cfg))
    buf.write("s,s_abs_error,s0,s0_abs_error\n")
    buf.write(f"{s.value!r},{s.abs_error!r},{s0.value!r},{s0.abs_error!r}\n")
    _emit(cfg, buf.getvalue())
    return EXIT_OK


def cmd_verify_averages(cfg: dict[str, Any]) -> int:
    rep = experiments.verify_lemma_averages(cfg["h_max"])
    buf = io.StringIO()
    buf.write(csv_header(cfg))
    buf.write(f"# A={rep.A!r}\n")
    buf.write("h,prefix,prefix_norm,pairs,pair_residual,pair_norm\n")
    for r in rep.rows:
        buf.write(f"{r.h},{r.prefix!r},{r.prefix_norm!r},{r.pairs!r},{r.pair_residual!r},{r.pair_norm!r}\n")
    buf.write(f"# prefix max/median={rep.prefix_ratio!r} {'PASS' if rep.prefix_ok else 'FAIL'}\n")
    buf.write(f"# pair max/median={rep.pair_ratio!r} {'PASS' if rep.pairs_ok else 'FAIL'}\n")
    _emit(cfg, buf.getvalue())
    if not rep.passed:
        print("verify averages: growth check failed (max/median > 3)", file=sys.stderr)
        for r in rep.rows:
            print(f"  h={r.h} prefix_norm={r.prefix_norm!r} pair_norm={r.pair_norm!r}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    return EXIT_OK


def cmd_verify_proposition(cfg: dict[str, Any]) -> int:
    if any(u < 3 for u in cfg["u_grid"] + cfg["decay_u"]):
        raise ConfigError("u values must be at least 3")
    if any(not 0 <= t <= 1 for t in cfg["theta_grid"]):
        raise ConfigError("theta values must lie in [0, 1]")
    vals = cfg["jk_values"]
    rep = experiments.verify_proposition(
        cfg["u_grid"], cfg["k_grid"], cfg["theta_grid"],
        decay_u=cfg["decay_u"], jk_grid=[(j, k) for j in vals for k in vals],
    )
    buf = io.StringIO()
    buf.write(csv_header(cfg))
    buf.write("section,u,r00,s00,r_residual,s_residual,closed_form_error,truncation_change\n")
    for a in rep.asymptotics:
        buf.write(f"asymptotic,{a.u!r},{a.r00!r},{a.s00!r},{a.r_residual!r},{a.s_residual!r},"
                  f"{a.closed_form_error!r},{a.truncation_change!r}\n")
    buf.write("section,u,theta,vartheta,value,predicted,residual\n")
    for t in rep.theta_rows:
        buf.write(f"theta,{t.u!r},{t.theta!r},{t.vartheta},{t.value!r},{t.predicted!r},{t.residual!r}\n")
    buf.write("section,family,u,j,k,re,im,magnitude,normalized\n")
    for name, rows in (("k_decay", rep.k_decay), ("jk_decay", rep.jk_decay)):
        for d in rows:
            buf.write(f"{name},{d.family},{d.u!r},{d.j!r},{d.k!r},{d.re!r},{d.im!r},{d.magnitude!r},{d.normalized!r}\n")
    for name, ok in rep.checks.items():
        span = rep.spans.get(name)
        extra = f" span={span!r}" if span is not None else ""
        buf.write(f"# check {name}: {'PASS' if ok else 'FAIL'}{extra}\n")
    _emit(cfg, buf.getvalue())
    if not rep.passed:
        print("verify proposition: failing checks:", file=sys.stderr)
        for name in rep.failing():
            print(f"  {name} span={rep.spans.get(name)!r}", file=sys.stderr)
            fam_u = name.split(":", 1)[1] if ":" in name else None
            rows = rep.k_decay if name.startswith("k_decay") else rep.jk_decay
            for d in rows:
                if fam_u and f"{d.family}@u={d.u!r}" == fam_u:
                    print(f"    j={d.j!r} k={d.k!r} |S|={d.magnitude!r} normalized={d.normalized!r}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    return EXIT_OK


def cmd_predict(cfg: dict[str, Any]) -> int:
    if cfg["x"] < 3:
        raise ConfigError("--x must be at least 3")
    main = model.conjecture_main_term(cfg["x"], cfg["c1"], cfg["c2"])
    obj: dict[str, Any] = {
        "config": cfg,
        "x": cfg["x"], "c1": cfg["c1"], "c2": cfg["c2"],
        "main_term": main,
        "band": main / math.sqrt(math.log(cfg["x"])),
    }
    if cfg["empirical"]:
        rec = experiments.count_ps_pairs(
            experiments.PairExperimentConfig(cfg["x"], cfg["c1"], cfg["c2"], threads=cfg["threads"]),
            timing=False,
        )
        obj["count"] = rec.count
        obj["ratio"] = rec.ratio
    _emit(cfg, _json(obj))
    return EXIT_OK


def cmd_gapmodel(cfg: dict[str, Any]) -> int:
    if cfg["x"] < 10:
        raise ConfigError("--x must be at least 10")
    hist = gap_histogram(cfg["x"], threads=cfg["threads"]).counts
    buf = io.StringIO()
    buf.write(csv_header(cfg))
    buf.write("h,empirical,predicted,rel_error,checked\n")
    failures = []
    for h in range(2, cfg["h_max"] + 1, 2):
        emp = hist.get(h, 0)
        pred = model.gap_count_prediction(h, cfg["x"])
        rel = pred / emp - 1 if emp else math.inf
        checked = emp >= cfg["min_count"]
        if checked and abs(rel) > cfg["tolerance"]:
            failures.append((h, emp, pred, rel))
        rel_s = repr(rel) if math.isfinite(rel) else ""
        buf.write(f"{h},{emp},{pred!r},{rel_s},{int(checked)}\n")
    _emit(cfg, buf.getvalue())
    if failures:
        print(f"gapmodel: {len(failures)} checked row(s) outside tolerance {cfg['tolerance']!r}", file=sys.stderr)
        for h, emp, pred, rel in failures:
            print(f"  h={h} empirical={emp} predicted={pred!r} rel_error={rel!r}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    return EXIT_OK


HANDLERS = {
    "count": cmd_count,
    "singular_pair": cmd_singular_pair,
    "singular_set": cmd_singular_set,
    "verify_averages": cmd_verify_averages,
    "verify_proposition": cmd_verify_proposition,
    "predict": cmd_predict,
    "gapmodel": cmd_gapmodel,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = resolve_config(ns.key, ns)
        return HANDLERS[ns.key](cfg)
    except ConfigError as exc:
        print(f"psprimes: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UndecidableMembership as exc:
        print(f"psprimes: undecidable membership: m={exc.m} c={exc.c!r}: {exc}", file=sys.stderr)
        return EXIT_UNDECIDABLE
    except (singular_series.CutoffTooSmall, singular_series.SubsetExplosion, ValueError) as exc:
        print(f"psprimes: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
