"""Command line front end.

Every subcommand prints one JSON report to stdout, serialized with
sorted keys and two-space indentation so identical inputs produce
byte-identical output.  Exact counts are emitted as decimal strings.
Wall-clock timing goes to stderr only, never into the report.

Exit codes: 0 when the run succeeds and every check holds, 1 when a
check fails, 2 for usage, input or resource errors.

Settings can come from a config file of ``key=value`` lines (# starts a
comment); explicit flags override the file, and the effective settings
are echoed in the report under "config".
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .field import ResourceLimitError, subspace_from_normals
from .increment import (
    increment_driver,
    planted_row_instance,
    planted_skew_instance,
    pseudorandomize_u2,
    search_extremal_L_free,
)
from .linforms import cs_complexity, lshape_slot_system, von_neumann_check
from .norms import box_norm, gcs_check, gowers_norm, slot_norm
from .patterns import corner_average, lshape_average, obstruction_example, ones_like, telescope_check
from .spectral import (
    dft,
    dft_reference,
    idft,
    inverse_u2,
    parseval_report,
    subspace_average_bound_check,
    u2_fourth,
)
from .structured import FiberFamily, StructuredProductSet, random_family
from .tables import FunctionTable, IndicatorSet, load_any

VERSION = "0.1.0"


# ---------------------------------------------------------------------------
# config plumbing


def _read_config(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line has no '=': {raw.strip()!r}")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _coerce(value: str, like) -> object:
    if isinstance(like, bool):
        low = value.lower()
        if low in _BOOL_TRUE:
            return True
        if low in _BOOL_FALSE:
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


def _effective_settings(args: argparse.Namespace, defaults: dict[str, object]) -> dict[str, object]:
    """defaults < config file < explicit flags, echoed back in the report."""
    merged = dict(defaults)
    config_path = getattr(args, "config", None)
    if config_path:
        raw = _read_config(config_path)
        for key, value in raw.items():
            if key not in defaults:
                raise ValueError(f"unknown config key {key!r}")
            merged[key] = _coerce(value, defaults[key])
    for key in defaults:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            merged[key] = flag_value
    return merged


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _emit(report: dict) -> None:
    print(json.dumps(_jsonable(report), sort_keys=True, indent=2))


def _random_table(p: int, m: int, seed: int) -> FunctionTable:
    rng = np.random.default_rng(seed)
    size = p**m
    vals = rng.uniform(-1.0, 1.0, size) + 1j * rng.uniform(-1.0, 1.0, size)
    scale = np.abs(vals).max()
    if scale > 0:
        vals = vals * (0.9 / scale)
    return FunctionTable(p, m, vals, kind="complex")


def _random_set(p: int, m: int, seed: int, density: float = 0.5) -> IndicatorSet:
    rng = np.random.default_rng(seed)
    mask = rng.random(p**m) < density
    if not mask.any():
        mask[int(rng.integers(p**m))] = True
    return IndicatorSet.from_mask(p, m, mask)


def _random_structured(p: int, n: int, d: int, seed: int):
    fam = random_family(p, n, d, seed, base_density=0.85)
    b = _random_set(p, n, seed + 101, 0.8)
    c = _random_set(p, n, seed + 202, 0.8)
    d_set = _random_set(p, n, seed + 303, 0.8)
    t = StructuredProductSet(b, c, d_set, fam)
    rng = np.random.default_rng(seed + 404)
    members = t.table.member_indices()
    keep = members[rng.random(len(members)) < 0.5]
    if len(keep) == 0 and len(members):
        keep = members[:1]
    s = IndicatorSet.from_indices(p, 2 * n, [int(i) for i in keep])
    return s, t


# ---------------------------------------------------------------------------
# subcommands


def _cmd_norm(args: argparse.Namespace) -> tuple[dict, int]:
    defaults = {"p": 3, "m": 2, "seed": 0, "order": 2, "kind": "gowers",
                "definition_only": False, "table": ""}
    settings = _effective_settings(args, defaults)
    if settings["table"]:
        obj = load_any(settings["table"])
        table = obj.table if isinstance(obj, IndicatorSet) else obj
    else:
        table = _random_table(settings["p"], settings["m"], settings["seed"])
    kind = settings["kind"]
    if kind == "gowers":
        res = gowers_norm(table, settings["order"], definition_only=settings["definition_only"])
        result = {"value": res.value, "power": res.power, "raw_average": _jsonable(complex(res.raw_average))}
    elif kind == "box":
        res = box_norm(table)
        result = {"value": res.value, "power": res.power}
    elif kind in ("slot0", "slot1", "slot2"):
        res = slot_norm(table, int(kind[-1]))
        result = {"value": res.value, "power": res.power}
    else:
        raise ValueError(f"unknown norm kind {kind!r}")
    result["p"] = table.p
    result["m"] = table.m
    return {"command": "norm", "config": settings, "result": result, "version": VERSION}, 0


def _cmd_count(args: argparse.Namespace) -> tuple[dict, int]:
    defaults = {"p": 3, "n": 1, "seed": 0, "pattern": "lshape", "set": "",
                "example": "", "density": 0.5}
    settings = _effective_settings(args, defaults)
    extras: dict = {}
    if settings["set"]:
        obj = load_any(settings["set"])
        ind = obj if isinstance(obj, IndicatorSet) else IndicatorSet.from_table(obj)
        if ind.m % 2:
            raise ValueError("counting needs a set on a pair space (even number of digits)")
        p, n = ind.p, ind.m // 2
    elif settings["example"]:
        p, n = settings["p"], settings["n"]
        kind = settings["example"].replace("-", "_")
        ex = obstruction_example(kind, p, n, settings["seed"])
        ind = ex.set
        extras = {
            "example": settings["example"],
            "predicted_density": ex.predicted_density,
            "predicted_count": str(ex.predicted_count),
        }
        extras.update({k: _jsonable(v) for k, v in ex.extras.items()})
    else:
        p, n = settings["p"], settings["n"]
        ind = _random_set(p, 2 * n, settings["seed"], settings["density"])
    f = ind.table
    if settings["pattern"] == "lshape":
        res = lshape_average(f, f, f, f)
    elif settings["pattern"] == "corner":
        res = corner_average(f, f, f)
    else:
        raise ValueError(f"unknown pattern {settings['pattern']!r}")
    result = {
        "p": p,
        "n": n,
        "pattern": settings["pattern"],
        "density": ind.density,
        "cardinality": str(ind.cardinality),
        "average": res.real_average,
        "exact_count": None if res.exact_count is None else str(res.exact_count),
        "nontrivial_count": None if res.nontrivial_count is None else str(res.nontrivial_count),
    }
    result.update(extras)
    return {"command": "count", "config": settings, "result": result, "version": VERSION}, 0


def _check(checks: list, check_id: str, holds: bool, **detail) -> None:
    entry = {"id": check_id, "holds": bool(holds)}
    entry.update(detail)
    checks.append(entry)


def _cmd_verify(args: argparse.Namespace) -> tuple[dict, int]:
    defaults = {"p": 3, "n": 2, "seed": 0, "suite": "all", "trials": 4}
    settings = _effective_settings(args, defaults)
    p, n, seed, trials = settings["p"], settings["n"], settings["seed"], settings["trials"]
    suite = settings["suite"]
    known = ("spectral", "control", "patterns", "norms", "trivial", "all")
    if suite not in known:
        raise ValueError(f"unknown suite {suite!r}; pick one of {known}")
    checks: list[dict] = []

    if suite in ("spectral", "all"):
        for i in range(trials):
            f = _random_table(p, n, seed + i)
            rep = parseval_report(f)
            _check(checks, "parseval-identity", abs(rep["relative_gap"]) <= 1e-9, trial=i)
            back = idft(dft(f))
            _check(checks, "fourier-inversion",
                   float(np.abs(back.values - f.values).max()) <= 1e-9, trial=i)
            ref = dft_reference(f).values
            _check(checks, "u2-fourth-power",
                   abs(u2_fourth(f) - float(np.sum(np.abs(ref) ** 4))) <= 1e-9, trial=i)
            freq, corr = inverse_u2(f)
            _check(checks, "inverse-u2-correlation",
                   corr + 1e-12 >= gowers_norm(f, 2).value ** 2,
                   trial=i, frequency=list(freq.digits))
        coset = subspace_from_normals(p, n, ((1,) + (0,) * (n - 1),), (0,))
        f = _random_table(p, n, seed + 71)
        rep = subspace_average_bound_check(f, coset)
        _check(checks, "subspace-average-bound", rep["holds"])

    if suite in ("control", "all"):
        for i in range(trials):
            fs = [_random_table(p, 2 * n, seed + 800 + 4 * i + j) for j in range(4)]
            ones = ones_like(fs[0])
            lam = lshape_average(fs[0], fs[1], fs[2], fs[3])
            _check(checks, "control-slot-1",
                   abs(lam.average) <= slot_norm(fs[0], 0).value + 1e-9, trial=i)
            lam = lshape_average(ones, fs[1], fs[2], fs[3])
            _check(checks, "control-slot-2",
                   abs(lam.average) <= slot_norm(fs[1], 1).value + 1e-9, trial=i)
            lam = lshape_average(ones, ones, fs[2], fs[3])
            _check(checks, "control-slot-3",
                   abs(lam.average) <= slot_norm(fs[2], 2).value + 1e-9, trial=i)

    if suite in ("patterns", "all"):
        ex = obstruction_example("dot", 3, 3, seed)
        _check(checks, "dot-obstruction-density",
               ex.set.cardinality == 261 and ex.set.density == 261 / 729)
        res = lshape_average(ex.set.table, ex.set.table, ex.set.table, ex.set.table)
        _check(checks, "dot-obstruction-count",
               res.exact_count == ex.predicted_count,
               count=str(res.exact_count))
        s = _random_set(p, 2 * n, seed + 5, 0.6)
        rep = telescope_check(s)
        _check(checks, "telescope-bound", rep["holds"])

    if suite in ("norms", "all"):
        f0 = _random_table(p, n, seed + 11)
        fam = [_random_table(p, n, seed + 20 + j) for j in range(4)]
        rep = gcs_check(fam, 2)
        _check(checks, "cube-product-bound", rep["holds"])
        sys_l = lshape_slot_system(p)
        cert = cs_complexity(sys_l)
        vn = von_neumann_check(sys_l, [f0, _random_table(p, n, seed + 31), _random_table(p, n, seed + 32)],
                               cert.s, n)
        _check(checks, "system-von-neumann", vn["holds"], complexity=cert.s)

    if suite in ("trivial", "all"):
        const = FunctionTable(p, 2 * n, np.full(p ** (2 * n), -0.4 + 0.3j), kind="complex")
        _check(checks, "constant-slot-norm",
               abs(slot_norm(const, 0).value - abs(-0.4 + 0.3j)) <= 1e-12)
        ind = _random_set(p, n, seed + 61, 0.5)
        _check(checks, "indicator-first-norm",
               abs(gowers_norm(ind.table, 1).value - ind.density) <= 1e-12)
        empty = IndicatorSet.empty(p, 2 * n)
        res = lshape_average(empty.table, empty.table, empty.table, empty.table)
        _check(checks, "empty-set-count",
               res.exact_count == 0 and res.nontrivial_count == 0)

    ok = all(c["holds"] for c in checks)
    report = {
        "command": "verify",
        "config": settings,
        "checks": checks,
        "all_hold": ok,
        "version": VERSION,
    }
    return report, 0 if ok else 1


def _cmd_extremal(args: argparse.Namespace) -> tuple[dict, int]:
    defaults = {"p": 3, "n": 1, "seed": 0, "method": "exhaustive", "iterations": 200}
    settings = _effective_settings(args, defaults)
    res = search_extremal_L_free(settings["p"], settings["n"], settings["method"],
                                 settings["seed"], settings["iterations"])
    return {"command": "extremal", "config": settings, "result": res, "version": VERSION}, 0


def _cmd_pseudorandomize(args: argparse.Namespace) -> tuple[dict, int]:
    defaults = {"p": 3, "n": 2, "d": 0, "seed": 0, "eps": 0.1, "tau": 0.1}
    settings = _effective_settings(args, defaults)
    s, t = _random_structured(settings["p"], settings["n"], settings["d"], settings["seed"])
    res = pseudorandomize_u2(s, t, settings["eps"], settings["tau"])
    return {"command": "pseudorandomize", "config": settings, "result": res.report,
            "version": VERSION}, 0


def _cmd_increment(args: argparse.Namespace) -> tuple[dict, int]:
    defaults = {"p": 3, "n": 2, "d": 0, "seed": 0, "eps": 0.1, "tau": 0.1,
                "max_steps": 12, "planted": "none", "require_l_free": False,
                "set": "", "trajectory_file": ""}
    settings = _effective_settings(args, defaults)
    p, n = settings["p"], settings["n"]
    if settings["set"]:
        obj = load_any(settings["set"])
        s = obj if isinstance(obj, IndicatorSet) else IndicatorSet.from_table(obj)
        if s.m % 2:
            raise ValueError("the candidate set must live on a pair space")
        p, n = s.p, s.m // 2
        full = IndicatorSet.full(p, n)
        t = StructuredProductSet(full, full, full, FiberFamily.full(full))
    elif settings["planted"] == "row-bias":
        s, t = planted_row_instance(p, n)
    elif settings["planted"] == "line-bias":
        s, t = planted_skew_instance(p, n)
    elif settings["planted"] == "none":
        s, t = _random_structured(p, n, settings["d"], settings["seed"])
    else:
        raise ValueError(f"unknown planted instance {settings['planted']!r}")
    res = increment_driver(s, t, settings["eps"], settings["tau"],
                           max_steps=settings["max_steps"],
                           require_l_free=settings["require_l_free"])
    if settings["trajectory_file"]:
        with open(settings["trajectory_file"], "w", encoding="utf-8") as fh:
            for record in res["trajectory"]:
                fh.write(json.dumps(_jsonable(record), sort_keys=True) + "\n")
    return {"command": "increment", "config": settings, "result": res, "version": VERSION}, 0


# ---------------------------------------------------------------------------
# wiring


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="key=value settings file")
    sp.add_argument("--p", type=int, help="prime modulus")
    sp.add_argument("--seed", type=int, help="random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lshape",
                                     description="configuration counting and density increments on pair spaces")
    parser.add_argument("--version", action="version", version=VERSION)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("norm", help="evaluate a uniformity norm on a table")
    _add_common(sp)
    sp.add_argument("--m", type=int, help="number of digits")
    sp.add_argument("--order", type=int, help="uniformity order s")
    sp.add_argument("--kind", choices=["gowers", "box", "slot0", "slot1", "slot2"])
    sp.add_argument("--definition-only", dest="definition_only", action="store_const", const=True,
                    help="force the literal nested-sum evaluation")
    sp.add_argument("--table", help="table or set file to load")
    sp.set_defaults(func=_cmd_norm)

    sp = sub.add_parser("count", help="count configurations in a pair-space set")
    _add_common(sp)
    sp.add_argument("--n", type=int, help="digits per coordinate")
    sp.add_argument("--pattern", choices=["lshape", "corner"])
    sp.add_argument("--set", help="set file to load")
    sp.add_argument("--example", choices=["dot", "random-phi", "coordinate"],
                    help="count a built-in obstruction set")
    sp.add_argument("--density", type=float, help="density of the random demo set")
    sp.set_defaults(func=_cmd_count)

    sp = sub.add_parser("verify", help="run identity and inequality checks")
    _add_common(sp)
    sp.add_argument("--n", type=int, help="digits per coordinate")
    sp.add_argument("--suite", choices=["spectral", "control", "patterns", "norms", "trivial", "all"])
    sp.add_argument("--trials", type=int)
    sp.set_defaults(func=_cmd_verify)

    sp = sub.add_parser("extremal", help="search for configuration-free sets")
    _add_common(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--method", choices=["exhaustive", "greedy", "local", "random"])
    sp.add_argument("--iterations", type=int)
    sp.set_defaults(func=_cmd_extremal)

    sp = sub.add_parser("pseudorandomize", help="refine a partition until cells look uniform")
    _add_common(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--d", type=int, help="fiber codimension")
    sp.add_argument("--eps", type=float)
    sp.add_argument("--tau", type=float)
    sp.set_defaults(func=_cmd_pseudorandomize)

    sp = sub.add_parser("increment", help="run the density increment driver")
    _add_common(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--d", type=int)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--tau", type=float)
    sp.add_argument("--max-steps", dest="max_steps", type=int)
    sp.add_argument("--planted", choices=["none", "row-bias", "line-bias"],
                    help="use a planted instance instead of a random one")
    sp.add_argument("--set", help="candidate set file (pairs inside the full ambient product)")
    sp.add_argument("--trajectory-file", dest="trajectory_file",
                    help="where to write the JSON-lines step trajectory")
    sp.add_argument("--require-l-free", dest="require_l_free", action="store_const", const=True)
    sp.set_defaults(func=_cmd_increment)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        report, code = args.func(args)
    except (ValueError, OSError, ResourceLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1
    _emit(report)
    elapsed = time.perf_counter() - start
    print(f"elapsed {elapsed:.3f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
