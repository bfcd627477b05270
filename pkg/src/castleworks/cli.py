"""Command line: configuration runs, per-module commands and the example gallery.

Exit codes: 0 all checks pass, 1 a checked condition failed, 2 usage or
configuration error, 3 resource cap exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import random
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import castles as C
from . import comparison as CMP
from . import recurrence as REC
from .cylinders import CylinderSet, ResolutionError, Subshift
from .groups import FiniteGroup, GroupError, ResourceCapError
from .words import CylinderPattern, WordError, amplify, period_doubling, product_word, word_from_json

SCHEMA_VERSION = 1
TASKS = ("word-eval", "recurrence", "syndetic", "balanced", "freeness", "kr", "lift",
         "certify", "compare", "upgrade", "gallery")


class ConfigError(ValueError):
    """Invalid configuration; ``path`` is a JSON pointer."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


_RATIONAL = re.compile(r"^\s*(\d+)\s*/\s*(\d+)\s*$")


def parse_rational(text, path: str = "/eps") -> Fraction:
    """Positive rational written ``p/q``; decimals are rejected."""
    if not isinstance(text, str):
        raise ConfigError(path, f"expected a rational string 'p/q', got {text!r}")
    m = _RATIONAL.match(text)
    if not m:
        raise ConfigError(path, f"expected a rational string 'p/q' (e.g. '1/4'), got {text!r}")
    p, q = int(m.group(1)), int(m.group(2))
    if q == 0 or p == 0:
        raise ConfigError(path, "must be a positive rational")
    return Fraction(p, q)


def to_jsonable(obj):
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted((to_jsonable(v) for v in obj), key=lambda v: json.dumps(v, sort_keys=True))
    if hasattr(obj, "item"):
        return obj.item()
    return obj


def dumps(report: dict) -> str:
    return json.dumps(to_jsonable(report), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# parameter helpers


def _get(params: dict, key: str, kind, default=None, required=False, base="/params"):
    if key not in params:
        if required:
            raise ConfigError(f"{base}/{key}", "missing required parameter")
        return default
    v = params[key]
    if kind is int:
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise ConfigError(f"{base}/{key}", f"expected a non-negative integer, got {v!r}")
    return v


def _word(cfg: dict):
    if "word" not in cfg:
        raise ConfigError("/word", "missing word specification")
    try:
        return word_from_json(cfg["word"])
    except (KeyError, TypeError) as exc:
        raise ConfigError("/word", f"malformed word specification ({exc})") from None
    except (WordError, GroupError) as exc:
        raise ConfigError("/word", str(exc)) from None


def _element(gp, obj, path):
    try:
        return gp.from_json(obj)
    except (GroupError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(path, f"not an element of {gp.kind}: {exc}") from None


def _pattern(gp, obj, path) -> CylinderPattern:
    try:
        dom = tuple(gp.from_json(c) for c in obj["domain"])
        return CylinderPattern(dom, tuple(str(s) for s in obj["symbols"]))
    except (GroupError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(path, f"malformed pattern: {exc}") from None


def _model(w, params, mode=None) -> Subshift:
    window = _get(params, "window", int, 512)
    depth = _get(params, "depth", int, 128)
    if mode is None:
        ext = w.group.extension
        mode = "blocks" if ext is not None and ext.kernel_elements is not None else "plain"
    return Subshift(w, window, depth, mode=mode)


def _K(gp, params):
    if "K" in params:
        return tuple(_element(gp, k, f"/params/K/{i}") for i, k in enumerate(params["K"]))
    return tuple(gp.symmetric_generators())


def _model_json(X: Subshift) -> dict:
    return {"word": X.word.to_json(), "window": X.window, "depth": X.depth, "mode": X.mode}


# ---------------------------------------------------------------------------
# tasks


def task_word_eval(cfg, params):
    w = _word(cfg)
    g = _element(w.group, _get(params, "at", object, required=True), "/params/at")
    return {"symbol": w.eval(g), "pass": True}


def task_recurrence(cfg, params):
    w = _word(cfg)
    U = _pattern(w.group, _get(params, "pattern", object, required=True), "/params/pattern")
    rep = REC.recurrence_set(w, U, _get(params, "window", int, 64))
    rng = random.Random(0)
    gp = w.group
    sample = rng.sample(list(rep.window), min(100, len(rep.window)))
    ok = all((g in rep.hits) == all(w.eval(gp.mul(gp.inv(g), i)) == s
                                    for i, s in zip(U.domain, U.symbols)) for g in sample)
    out = rep.to_json()
    out.update({"hitCount": len(rep.hits), "spotCheck": ok, "pass": ok})
    return out, rep


def task_syndetic(cfg, params):
    out, rep = task_recurrence(cfg, params)
    maxK = _get(params, "maxK", int, 8)
    wit = REC.syndetic_check(rep, maxK)
    gp = rep.word.group
    out.pop("hits", None)
    out["syndetic"] = None if wit is None else {
        "m": wit.m, "coreRadius": wit.coreRadius, "K": [gp.to_json(k) for k in wit.K],
        "recheck": REC.covers(gp, wit.K, rep.hits, gp.ball(wit.coreRadius))}
    out["pass"] = wit is not None and out["syndetic"]["recheck"]
    return out


def task_balanced(cfg, params):
    out, rep = task_recurrence(cfg, params)
    wit = REC.balanced_witness(rep, _get(params, "maxK", int, 8))
    out.pop("hits", None)
    if wit is None:
        out.update({"balanced": None, "pass": False})
        return out
    sym = all(-p in wit.P for p in wit.P)
    out["balanced"] = {"period": wit.period, "size": len(wit.P), "m": wit.syndetic.m,
                       "symmetric": sym, "insideHits": wit.P <= rep.hits}
    out["pass"] = sym and wit.P <= rep.hits
    return out


def task_freeness(cfg, params):
    w = _word(cfg)
    gp = w.group
    mode = params.get("mode", "probe")
    if mode == "probe":
        depth = _get(params, "depth", int, 16)
        radius = _get(params, "radius", int, 4)
        probe = REC.stabilizer_probe(w, depth, radius)
        return {"mode": "probe", "depth": depth, "radius": radius,
                "stabilizer": [gp.to_json(g) for g in sorted(probe, key=gp.sort_key)],
                "free": probe == {gp.identity}, "pass": gp.identity in probe}
    if mode == "fixfreq":
        g = _element(gp, _get(params, "g", object, required=True), "/params/g")
        res = _get(params, "resolution", int, 8)
        win = _get(params, "window", int, 256)
        f = REC.fixed_point_frequency(w, g, res, win)
        return {"mode": "fixfreq", "g": gp.to_json(g), "resolution": res, "windowRadius": win,
                "frequency": f, "evidence": "upper-bound", "pass": True}
    raise ConfigError("/params/mode", f"unknown freeness mode {mode!r}")


def task_kr(cfg, params):
    w = _word(cfg)
    X = _model(w, params, "plain")
    r = _get(params, "baseResolution", int, 2)
    if "baseAtom" in params:
        a = _get(params, "baseAtom", int)
    else:
        a = X.atom_at(X.acting.identity, r)
    B = X.atom(r, a)
    step = X.acting.symmetric_generators()[0]
    castle = C.kakutani_rokhlin(X, B, step)
    check = C.verify_castle(castle, X)
    rem = C.remainder_measure(castle, X)
    times = C.return_times(X, B, step)
    heights_ok = all(any(X.atom_at(X.positions[i], castle.towers[0].base.resolution) in t.base.atoms
                         and len(t.shape) == k for t in castle.towers) for i, k in times.items()
                     if i < len(X.atom_ids(castle.towers[0].base.resolution)))
    return {"castle": castle.to_json(X, patterns=False), "model": _model_json(X),
            "heights": [len(t.shape) for t in castle.towers], "verify": check,
            "remainder": rem, "heightsMatchReturnTimes": heights_ok,
            "pass": check["pass"] and rem == 0 and heights_ok}, castle, X


def task_certify(cfg, params):
    w = _word(cfg)
    eps = parse_rational(_get(params, "eps", str, required=True), "/params/eps")
    K = _K(w.group, params)
    castle, report, X = C.af_in_measure_certificate(
        w, K, eps, window=_get(params, "window", int, 1024), depth=_get(params, "depth", int, 256))
    out = {"certificate": report, "castle": castle.to_json(X, patterns=False), "model": _model_json(X),
           "pass": report["pass"]}
    return out, castle, X


def task_lift(cfg, params):
    w = _word(cfg)
    gp = w.group
    ext = gp.extension
    if ext is None or ext.kernel_elements is None:
        raise ConfigError("/word", "lift needs a word over a group extension with finite kernel")
    out, castle, X = task_certify(cfg, params)
    out["lift"] = {"fixedAtomsDropped": castle.notes.get("fixedAtomsDropped", 0),
                   "verify": C.verify_castle(castle, X)}
    out["pass"] = out["pass"] and out["lift"]["verify"]["pass"]
    return out


def _set(X, obj, path) -> CylinderSet:
    try:
        return C.set_from_json(X, obj)
    except (C.CastleError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None


def task_compare(cfg, params):
    w = _word(cfg)
    X = _model(w, params, "plain")
    src = _set(X, _get(params, "src", object, required=True), "/params/src")
    tgt = _set(X, _get(params, "tgt", object, required=True), "/params/tgt")
    L = _get(params, "radius", int, 4)
    budget = _get(params, "budget", int, 200_000)
    wit = CMP.subequivalence_search(X, src, tgt, L, budget)
    ok = wit is not None and CMP.verify_subequivalence(X, wit, src, tgt)
    return {"witness": None if wit is None else wit.to_json(X), "verified": ok,
            "exhausted": wit is None, "pass": ok}


def task_upgrade(cfg, params):
    n = _get(params, "n", int, 2)
    if "cert" in params:
        w = _word(cfg)
        m = params.get("model", {})
        X = Subshift(w, m.get("window", 512), m.get("depth", 128), mode=m.get("mode", "plain"))
        try:
            castle = C.Castle.from_json(params["cert"], X)
        except (KeyError, TypeError, C.CastleError) as exc:
            raise ConfigError("/params/cert", str(exc)) from None
    else:
        _, castle, X = task_certify(cfg, params)
    af = CMP.upgrade_to_af(X, castle, n, _get(params, "radius", int, 4), _get(params, "budget", int, 200_000))
    if af is None:
        return {"n": n, "witness": None, "pass": False}
    return {"n": n, "subsetSizes": [[len(t.shape), len(Sp)] for t, Sp in zip(castle.towers, af.subsets)],
            "remainderWitness": af.remainderWitness.to_json(X), "report": af.report,
            "pass": af.report["pass"]}


def task_gallery(cfg, params):
    return gallery(params)


def run(config: dict) -> dict:
    """Validate ``config`` and dispatch to the task; returns the report."""
    if not isinstance(config, dict):
        raise ConfigError("", "configuration must be a JSON object")
    task = config.get("task")
    if task not in TASKS:
        raise ConfigError("/task", f"unknown task {task!r}; expected one of {', '.join(TASKS)}")
    params = config.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("/params", "must be an object")
    t0 = time.perf_counter()
    fn = {"word-eval": task_word_eval,
          "recurrence": lambda c, p: task_recurrence(c, p)[0],
          "syndetic": task_syndetic, "balanced": task_balanced, "freeness": task_freeness,
          "kr": lambda c, p: task_kr(c, p)[0], "lift": task_lift,
          "certify": lambda c, p: task_certify(c, p)[0], "compare": task_compare,
          "upgrade": task_upgrade, "gallery": task_gallery}[task]
    body = fn(config, params)
    report = {"schemaVersion": SCHEMA_VERSION, "task": task, "params": params}
    report.update(body)
    report.setdefault("timing", {})["seconds"] = round(time.perf_counter() - t0, 3)
    return report


# ---------------------------------------------------------------------------
# gallery


GALLERY_DEFAULTS = {"eps": "1/4", "window": 1024, "depth": 256, "n": 2,
                    "recurrenceWindow": 256, "maxK": 32, "probeDepths": [4, 16, 64],
                    "probeRadius": 8, "fixedsetResolution": 32, "kRange": 8,
                    "fixedsetWindow": 512, "fixfreqResolutions": [4, 16, 64], "fixfreqWindow": 1024}


def _check(section: dict, name: str, ok: bool):
    section["checks"][name] = bool(ok)


def _dihedral_common(section, w_hat, params, stage):
    """Checks shared by both sections, run on the dihedral word."""
    stage("fixedset")
    rows = {}
    Xf = Subshift(w_hat, params["fixedsetWindow"], params["fixedsetResolution"] + params["kRange"])
    for n in (0, 1, 2):
        rep = REC.dihedral_fixedset_report(w_hat, n, params["kRange"], params["fixedsetResolution"], X=Xf)
        rep = {k: v for k, v in rep.items() if k != "rows"}
        rows[str(n)] = rep
        _check(section, f"fixedset n={n}", rep["containment"] and rep["disjointness"]
               and rep["frequencySumAtMostOne"])
    section["fixedset"] = rows


def _section_dihedral(params: dict) -> dict:
    section = {"checks": {}, "stage": None}
    stage = lambda s: section.__setitem__("stage", s)
    eps = parse_rational(params["eps"], "/params/eps")
    w = period_doubling(fill=None, holes=(1, 0))
    w_hat = amplify(w)
    gp = w_hat.group
    section["word"] = w_hat.to_json()

    stage("recurrence")
    dom = [(i, 0) for i in range(-2, 3)]
    U = CylinderPattern(tuple(dom), tuple(w_hat.eval(c) for c in dom))
    rep = REC.recurrence_set(w_hat, U, params["recurrenceWindow"])
    wit = REC.syndetic_check(rep, params["maxK"])
    section["recurrence"] = {"pattern": [[gp.to_json(c), s] for c, s in zip(U.domain, U.symbols)],
                             "hits": len(rep.hits), "syndeticM": None if wit is None else wit.m}
    _check(section, "syndetic recurrence", wit is not None)

    stage("probe")
    probes = {}
    for d in params["probeDepths"]:
        P = REC.stabilizer_probe(w_hat, d, params["probeRadius"])
        probes[str(d)] = sorted((gp.to_json(g) for g in P), key=lambda j: (abs(j["n"]), j["n"], j["r"]))
    section["stabilizer"] = probes
    t = gp.check((0, 1))
    _check(section, "t fixes the amplified word at every depth",
           all({"n": 0, "r": 1} in v for v in probes.values()))

    stage("fixfreq")
    section["fixedPointFrequency"] = {
        str(r): REC.fixed_point_frequency(w_hat, t, r, params["fixfreqWindow"])
        for r in params["fixfreqResolutions"]}
    vals = list(section["fixedPointFrequency"].values())
    _check(section, "fixed-pattern frequency non-increasing", all(a >= b for a, b in zip(vals, vals[1:])))
    _dihedral_common(section, w_hat, params, stage)

    stage("certificate")
    K = ((1, 0), (-1, 0), (0, 1))
    castle, report, X = C.af_in_measure_certificate(w_hat, K, eps, params["window"], params["depth"])
    section["certificate"] = report
    section["castle"] = castle.to_json(X, patterns=False)
    section["model"] = _model_json(X)
    _check(section, "certificate", report["pass"])
    _check(section, f"remainder <= {params['eps']}", Fraction(report["remainder"]) <= eps)
    section["essFreeBound"] = _bound(castle, t, X)

    stage("upgrade")
    af = CMP.upgrade_to_af(X, castle, params["n"])
    section["upgrade"] = None if af is None else af.report
    _check(section, "almost-finite upgrade", af is not None and af.report["pass"])
    section.pop("stage")
    return section


def _bound(castle, g, X):
    b = C.ess_free_bound(castle, g, X)
    return {k: b[k] for k in ("bound", "coverageIdentity", "fixedMissesInner", "resolution")}


def _section_product(params: dict) -> dict:
    section = {"checks": {}, "stage": None}
    stage = lambda s: section.__setitem__("stage", s)
    eps = parse_rational(params["eps"], "/params/eps")
    F = FiniteGroup.cyclic(2)
    w_hat = amplify(period_doubling(fill=None, holes=(1, 0)))
    x0 = product_word(w_hat, F)
    gp = x0.group
    section["word"] = x0.to_json()
    section["alphabet"] = list(x0.alphabet)
    _check(section, "alphabet has |F|+1 symbols", len(x0.alphabet) == F.order + 1)

    stage("recurrence")
    dom = [((i, 0), f) for i in range(-2, 3) for f in (0, 1)]
    U = CylinderPattern(tuple(dom), tuple(x0.eval(c) for c in dom))
    rep = REC.recurrence_set(x0, U, params["recurrenceWindow"] // 2)
    wit = REC.syndetic_check(rep, params["maxK"])
    section["recurrence"] = {"hits": len(rep.hits), "syndeticM": None if wit is None else wit.m}
    _check(section, "syndetic recurrence", wit is not None)

    stage("probe")
    probes = {}
    for d in params["probeDepths"][:2]:
        P = REC.stabilizer_probe(x0, d, params["probeRadius"] // 2)
        probes[str(d)] = [gp.to_json(g) for g in sorted(P, key=gp.sort_key)]
    section["stabilizer"] = probes
    _check(section, "no element with nontrivial F-part stabilizes x0",
           all(g[1] == 0 for v in probes.values() for g in v))
    section["quotientWord"] = w_hat.to_json()
    _dihedral_common(section, w_hat, params, stage)

    stage("certificate")
    K = (((1, 0), 0), ((-1, 0), 0), ((0, 1), 0), ((0, 0), 1))
    castle, report, X = C.af_in_measure_certificate(x0, K, eps, params["window"], params["depth"])
    section["certificate"] = report
    section["castle"] = castle.to_json(X, patterns=False)
    section["model"] = _model_json(X)
    _check(section, "certificate", report["pass"])
    _check(section, f"remainder <= {params['eps']}", Fraction(report["remainder"]) <= eps)
    section["essFreeBound"] = _bound(castle, ((0, 1), 0), X)
    _check(section, "coverage identity", section["essFreeBound"]["coverageIdentity"])

    stage("upgrade")
    af = CMP.upgrade_to_af(X, castle, params["n"])
    section["upgrade"] = None if af is None else af.report
    _check(section, "almost-finite upgrade", af is not None and af.report["pass"])
    section.pop("stage")
    return section


SECTIONS = {"dihedral-amplified-toeplitz": _section_dihedral,
            "product-dihedral-z2": _section_product}


def gallery(params: dict | None = None) -> dict:
    params = {**GALLERY_DEFAULTS, **(params or {})}
    parse_rational(params["eps"], "/params/eps")
    timing = {}

    def runner(name):
        t0 = time.perf_counter()
        section = None
        try:
            section = SECTIONS[name](params)
            section["pass"] = all(section["checks"].values())
        except (C.CastleError, ResolutionError, REC.PeriodicityError, CMP.SearchBudgetExceeded,
                GroupError, WordError) as exc:
            section = {"error": f"{type(exc).__name__}: {exc}", "pass": False}
        timing[name] = round(time.perf_counter() - t0, 3)
        return name, section

    with ThreadPoolExecutor(max_workers=len(SECTIONS)) as pool:
        results = dict(pool.map(runner, sorted(SECTIONS)))
    return {"sections": {k: results[k] for k in sorted(results)},
            "gallery": {k: v for k, v in params.items()},
            "pass": all(s["pass"] for s in results.values()),
            "timing": timing}


# ---------------------------------------------------------------------------
# argparse front end


def _load_json(path_or_text: str, what: str):
    p = Path(path_or_text)
    try:
        if p.exists():
            return json.loads(p.read_text())
        return json.loads(path_or_text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"/{what}", f"invalid JSON: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="castleworks", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="run a JSON configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="write the report here instead of stdout")

    p = sub.add_parser("gallery", help="build both example subshifts end to end")
    p.add_argument("--out", help="directory for gallery.json and CSV tables")

    p = sub.add_parser("word", help="evaluate or dump a word")
    ws = p.add_subparsers(dest="sub", required=True)
    q = ws.add_parser("eval")
    q.add_argument("--word", required=True)
    q.add_argument("--at", required=True)
    q = ws.add_parser("dump")
    q.add_argument("--word", required=True)
    q.add_argument("--window", type=int, required=True)

    p = sub.add_parser("recurrence", help="recurrence sets, syndeticity, balanced witnesses")
    rs = p.add_subparsers(dest="sub", required=True)
    for name in ("scan", "syndetic", "balanced"):
        q = rs.add_parser(name)
        q.add_argument("--word", required=True)
        q.add_argument("--pattern", required=True)
        q.add_argument("--window", type=int, default=64)
        if name != "scan":
            q.add_argument("--maxK", type=int, default=8)

    p = sub.add_parser("freeness", help="stabilizer probe and fixed-point frequencies")
    fs = p.add_subparsers(dest="sub", required=True)
    q = fs.add_parser("probe")
    q.add_argument("--word", required=True)
    q.add_argument("--depth", type=int, default=16)
    q.add_argument("--radius", type=int, default=4)
    q = fs.add_parser("fixfreq")
    q.add_argument("--word", required=True)
    q.add_argument("--g", required=True)
    q.add_argument("--resolution", type=int, default=8)
    q.add_argument("--window", type=int, default=256)
    q.add_argument("--csv", help="also write the empirical pattern frequencies here")

    p = sub.add_parser("castle", help="build, certify, lift and verify castles")
    cs = p.add_subparsers(dest="sub", required=True)
    q = cs.add_parser("kr")
    q.add_argument("--word", required=True)
    q.add_argument("--base-resolution", type=int, default=2)
    q.add_argument("--window", type=int, default=512)
    q.add_argument("--depth", type=int, default=128)
    for name in ("certify", "lift"):
        q = cs.add_parser(name)
        q.add_argument("--word", required=True)
        q.add_argument("--eps", required=True)
        q.add_argument("--K", help="JSON list of group elements (default: generators)")
        q.add_argument("--window", type=int, default=1024)
        q.add_argument("--depth", type=int, default=256)
        q.add_argument("--patterns", action="store_true", help="emit base atoms as patterns")
    q = cs.add_parser("verify")
    q.add_argument("--castle", required=True)
    q.add_argument("--word", required=True)
    q.add_argument("--window", type=int, default=1024)
    q.add_argument("--depth", type=int, default=256)
    q.add_argument("--mode", default="plain", choices=["plain", "blocks", "quotient"])

    p = sub.add_parser("compare", help="comparison witnesses and the almost-finiteness upgrade")
    ms = p.add_subparsers(dest="sub", required=True)
    q = ms.add_parser("search")
    q.add_argument("--word", required=True)
    q.add_argument("--src", required=True)
    q.add_argument("--tgt", required=True)
    q.add_argument("--radius", type=int, default=4)
    q.add_argument("--budget", type=int, default=200_000)
    q.add_argument("--window", type=int, default=512)
    q.add_argument("--depth", type=int, default=128)
    q = ms.add_parser("upgrade")
    q.add_argument("--word", required=True)
    q.add_argument("--cert", help="castle JSON (with folner data); omitted: certify first")
    q.add_argument("--eps", default="1/4")
    q.add_argument("--n", type=int, default=2)
    q.add_argument("--window", type=int, default=1024)
    q.add_argument("--depth", type=int, default=256)
    q.add_argument("--mode", default="plain", choices=["plain", "blocks", "quotient"])
    return ap


def _config_from_args(a) -> dict:
    if a.cmd == "run":
        return _load_json(a.config, "config")
    if a.cmd == "gallery":
        return {"task": "gallery"}
    cfg = {"word": _load_json(a.word, "word")}
    if a.cmd == "word" and a.sub == "eval":
        return {**cfg, "task": "word-eval", "params": {"at": _load_json(a.at, "params/at")}}
    if a.cmd == "recurrence":
        params = {"pattern": _load_json(a.pattern, "params/pattern"), "window": a.window}
        if a.sub != "scan":
            params["maxK"] = a.maxK
        task = {"scan": "recurrence", "syndetic": "syndetic", "balanced": "balanced"}[a.sub]
        return {**cfg, "task": task, "params": params}
    if a.cmd == "freeness":
        if a.sub == "probe":
            return {**cfg, "task": "freeness", "params": {"mode": "probe", "depth": a.depth, "radius": a.radius}}
        return {**cfg, "task": "freeness", "params": {"mode": "fixfreq", "g": _load_json(a.g, "params/g"),
                                                      "resolution": a.resolution, "window": a.window}}
    if a.cmd == "castle":
        if a.sub == "kr":
            return {**cfg, "task": "kr", "params": {"baseResolution": a.base_resolution,
                                                    "window": a.window, "depth": a.depth}}
        if a.sub in ("certify", "lift"):
            params = {"eps": a.eps, "window": a.window, "depth": a.depth}
            if a.K:
                params["K"] = _load_json(a.K, "params/K")
            return {**cfg, "task": a.sub, "params": params}
    if a.cmd == "compare" and a.sub == "search":
        return {**cfg, "task": "compare", "params": {
            "src": _load_json(a.src, "params/src"), "tgt": _load_json(a.tgt, "params/tgt"),
            "radius": a.radius, "budget": a.budget, "window": a.window, "depth": a.depth}}
    if a.cmd == "compare" and a.sub == "upgrade":
        params = {"n": a.n, "eps": a.eps, "window": a.window, "depth": a.depth}
        if a.cert:
            params["cert"] = _load_json(a.cert, "params/cert")
            params["model"] = {"window": a.window, "depth": a.depth, "mode": a.mode}
        return {**cfg, "task": "upgrade", "params": params}
    raise ConfigError("", "unsupported command")


def _word_dump(a, out) -> int:
    w = word_from_json(_load_json(a.word, "word"))
    gp = w.group
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow(["position", "symbol"])
    for g in gp.ball(a.window):
        pos = gp.to_json(g)
        wr.writerow([pos if isinstance(pos, int) else json.dumps(pos, sort_keys=True), w.eval(g)])
    return 0


def _castle_verify(a) -> dict:
    w = word_from_json(_load_json(a.word, "word"))
    X = Subshift(w, a.window, a.depth, mode=a.mode)
    try:
        castle = C.Castle.from_json(_load_json(a.castle, "castle"), X)
    except (KeyError, TypeError, C.CastleError) as exc:
        raise ConfigError("/castle", str(exc)) from None
    rep = C.verify_castle(castle, X)
    rep["remainder"] = C.remainder_measure(castle, X)
    return {"schemaVersion": SCHEMA_VERSION, "task": "castle-verify", **rep}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    out = sys.stdout
    try:
        if a.cmd == "word" and a.sub == "dump":
            return _word_dump(a, out)
        if a.cmd == "castle" and a.sub == "verify":
            report = _castle_verify(a)
        elif a.cmd == "freeness" and a.sub == "fixfreq" and a.csv:
            cfg = _config_from_args(a)
            report = run(cfg)
            w = _word(cfg)
            em = REC.empirical_measure(w, a.resolution, a.window)
            Path(a.csv).write_text(em.to_csv())
        else:
            cfg = _config_from_args(a)
            report = run(cfg)
        text = dumps(report)
        if a.cmd == "gallery" and a.out:
            d = Path(a.out)
            d.mkdir(parents=True, exist_ok=True)
            (d / "gallery.json").write_text(text)
            _gallery_csvs(d, report)
        elif getattr(a, "out", None):
            Path(a.out).write_text(text)
        else:
            out.write(text)
        return 0 if report.get("pass", False) else 1
    except ConfigError as exc:
        print(f"castleworks: configuration error at {exc}", file=sys.stderr)
        return 2
    except (ResourceCapError, MemoryError) as exc:
        print(f"castleworks: resource cap: {exc}", file=sys.stderr)
        return 3
    except (GroupError, WordError, C.CastleError, ResolutionError, REC.PeriodicityError,
            CMP.SearchBudgetExceeded) as exc:
        print(f"castleworks: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def _gallery_csvs(d: Path, report: dict):
    w = amplify(period_doubling(fill=None, holes=(1, 0)))
    (d / "dihedral_frequencies.csv").write_text(REC.empirical_measure(w, 2, 256).to_csv())
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["section", "check", "pass"])
    for name, sec in report["sections"].items():
        for check, ok in sec.get("checks", {}).items():
            wr.writerow([name, check, ok])
    (d / "checks.csv").write_text(buf.getvalue())


if __name__ == "__main__":
    sys.exit(main())
