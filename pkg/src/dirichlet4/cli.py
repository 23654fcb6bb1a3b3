"""Command-line front end: verification suites, moment comparisons,
machine-readable reports, and the on-disk cache.

Every command emits one report, JSON by default or CSV of the results
table; numeric results carry their error estimates. Exit status is 0
on success, 1 when a tolerance check fails (the worst offender goes to
stderr), and 2 on usage errors.
"""

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .arith import ShiftTuple, kl2, phi_star
from .characters import (
    character_group,
    gauss_sum,
    group_from_payload,
    group_to_payload,
    orthogonality_residual,
)
from .divisorlab import (
    QdpInstance,
    RationalPoint,
    SmoothWindow,
    bilinear_kl_sum,
    estermann_fe_residual,
    estermann_hurwitz,
    lemma31_residual,
    qdp_bruteforce,
    qdp_error_bound,
    qdp_mainterm,
    ramanujan_expansion_residual,
    voronoi_residual,
)
from .lfunc import (
    GammaKernelSpec,
    afe_parts,
    completed_lambda,
    fe_residual,
    l_values_vector,
)
from .moments import (
    SharpCutoff,
    WeightSpec,
    extract_cj,
    main_term_terms,
    moment_report,
    zero_shift_terms,
)
from .specfun import zeta

CACHE_ENV = "DIRICHLET4_CACHE_DIR"

# tolerance knobs reachable from the command line, with the range each
# module's contract accepts; anything outside is a usage error
TOLERANCES = {
    "orthogonality": (1e-9, 1e-12, 1e-6),
    "fe": (1e-8, 1e-12, 1e-4),
    "afe": (1e-6, 1e-9, 1e-2),
    "estermann_fe": (1e-7, 1e-12, 1e-3),
    "estermann_residue": (1e-4, 1e-8, 1e-1),
    "lemma31": (1e-12, 1e-15, 1e-6),
    "ramanujan": (1e-3, 1e-6, 1e-1),
    "voronoi": (1e-5, 1e-9, 1e-2),
    "qdp_c": (10.0, 0.1, 100.0),
    "qdp_ratio": (0.1, 0.01, 1.0),
    "bilinear_c": (20.0, 0.1, 100.0),
    "moment_rel": (math.inf, 1e-6, math.inf),
}


class UsageError(Exception):
    pass


@dataclasses.dataclass
class RunConfig:
    command: str
    q: int | None = None
    q_list: tuple = ()
    t: float = 0.0
    t_list: tuple = ()
    T: float | None = None
    T0: float | None = None
    t_grid: tuple = ()
    eps: float = 1e-2
    seed: int = 20240815
    shifts: tuple | None = None
    l_max: int = 12
    c_max: int = 10
    samples: int = 10
    scales: tuple = ()
    sizes: tuple = ()
    a_list: tuple = ()
    q_max: int = 20
    index: int | None = None
    tolerances: dict = dataclasses.field(default_factory=dict)
    cache_dir: str = ""
    output: str = "json"
    out: str | None = None
    csv_path: str | None = None
    threads: int = 1
    quad_err: bool = False
    max_rel: float | None = None

    def __post_init__(self):
        if self.threads < 1:
            raise UsageError(f"--threads must be >= 1, got {self.threads}")
        for key, val in self.tolerances.items():
            if key not in TOLERANCES:
                raise UsageError(f"unknown tolerance {key!r}; "
                                 f"known: {', '.join(sorted(TOLERANCES))}")
            _, lo, hi = TOLERANCES[key]
            if not lo <= val <= hi:
                raise UsageError(
                    f"tolerance {key}={val:g} outside accepted [{lo:g}, {hi:g}]")

    def tol(self, key: str) -> float:
        return self.tolerances.get(key, TOLERANCES[key][0])


def _config_payload(cfg: RunConfig) -> dict:
    out = {}
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if v is None or v == () or (f.name == "tolerances" and not v):
            continue
        if isinstance(v, tuple):
            v = list(v)
        if isinstance(v, float) and math.isinf(v):
            v = "inf"
        out[f.name] = v
    return out


# ----------------------------------------------------------------------
# report plumbing


def _jsonable(obj):
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, (complex, np.complexfloating)):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.bool_, np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    return obj


def _flatten(row: dict) -> dict:
    """CSV cell layout: complex values as paired _re/_im columns,
    sequences exploded by index."""
    flat = {}
    for key, val in row.items():
        if isinstance(val, complex):
            flat[f"{key}_re"] = val.real
            flat[f"{key}_im"] = val.imag
        elif isinstance(val, (list, tuple)):
            for i, item in enumerate(val):
                flat.update(_flatten({f"{key}_{i}": item}))
        elif isinstance(val, dict):
            for k, item in val.items():
                flat.update(_flatten({f"{key}_{k}": item}))
        elif isinstance(val, (bool, np.bool_)):
            flat[key] = int(val)
        elif isinstance(val, (np.complexfloating,)):
            flat[f"{key}_re"] = float(val.real)
            flat[f"{key}_im"] = float(val.imag)
        elif isinstance(val, (np.floating, np.integer)):
            flat[key] = val.item()
        else:
            flat[key] = val
    return flat


def _render(report: dict, cfg: RunConfig) -> str:
    if cfg.output == "csv":
        rows = [_flatten(r) for r in report["results"]]
        header: list[str] = []
        for r in rows:
            for k in r:
                if k not in header:
                    header.append(k)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=header, restval="")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()
    return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"


def _emit(report: dict, cfg: RunConfig):
    text = _render(report, cfg)
    if cfg.out:
        _atomic_write(cfg.out, text)
    else:
        sys.stdout.write(text)


def _report(cfg: RunConfig, results: list, started: float) -> dict:
    # timing sits outside the determinism contract: identical config and
    # warm cache reproduce command/config/results/version bit-for-bit
    return {
        "command": cfg.command,
        "config": _config_payload(cfg),
        "results": results,
        "timing": {"wall_s": time.perf_counter() - started},
        "version": __version__,
    }


# ----------------------------------------------------------------------
# cache


def default_cache_dir() -> str:
    env = os.environ.get(CACHE_ENV)
    if env:
        return env
    return os.path.join(os.path.expanduser("~"), ".cache", "dirichlet4")


def _sha(payload) -> str:
    blob = json.dumps(_jsonable(payload), sort_keys=True,
                      separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _atomic_write(path: str, text: str):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = path + f".tmp{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _chars_path(cache_dir: str, q: int) -> str:
    return os.path.join(cache_dir, "chars", f"q={q}.json")


def _lvals_path(cache_dir: str, q: int) -> str:
    return os.path.join(cache_dir, "lvals", f"q={q}.jsonl")


def load_group(cache_dir: str, q: int):
    """Character group from the disk cache, checksum-verified; any
    corruption falls back to recompute-and-rewrite."""
    path = _chars_path(cache_dir, q)
    if os.path.exists(path):
        try:
            with open(path) as fh:
                doc = json.load(fh)
            if doc.get("sha256") == _sha(doc["payload"]):
                return group_from_payload(doc["payload"]), True
        except (json.JSONDecodeError, KeyError, TypeError, OSError):
            pass
    group = character_group(q)
    payload = group_to_payload(group)
    doc = {"q": q, "version": __version__, "payload": payload,
           "sha256": _sha(payload)}
    _atomic_write(path, json.dumps(_jsonable(doc), sort_keys=True))
    return group, False


def _lval_key(q: int, index: int, t: float) -> str:
    return f"{q}:{index}:{round(t, 12)!r}"


def load_lvals(cache_dir: str, q: int) -> dict:
    """Cached L-value lines for modulus q; every line carries its own
    checksum, so truncation or bit rot surfaces as a recompute."""
    path = _lvals_path(cache_dir, q)
    if not os.path.exists(path):
        return {}
    out = {}
    try:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                doc = json.loads(line)
                rec = doc["record"]
                if doc["sha256"] != _sha(rec):
                    return {}
                out[doc["key"]] = rec
    except (json.JSONDecodeError, KeyError, TypeError, OSError):
        return {}
    return out


def store_lvals(cache_dir: str, q: int, records: dict):
    lines = []
    for key in sorted(records):
        rec = records[key]
        lines.append(json.dumps(
            _jsonable({"key": key, "record": rec, "sha256": _sha(rec)}),
            sort_keys=True))
    _atomic_write(_lvals_path(cache_dir, q), "\n".join(lines) + "\n")


# ----------------------------------------------------------------------
# parallel map


def _pmap(fn, items, threads: int):
    """Ordered parallel map: results come back in input order no matter
    which thread finishes first, keeping reductions deterministic."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ----------------------------------------------------------------------
# commands


def _require_primitive_modulus(q: int):
    if q is None:
        raise UsageError("this command needs --q")
    if q >= 3 and phi_star(q) == 0:
        raise UsageError(
            f"q = {q} = 2 (mod 4) has no primitive characters; "
            "pick an odd or 0 (mod 4) modulus")


def cmd_characters(cfg: RunConfig):
    if cfg.q is None:
        raise UsageError("characters needs --q")
    group, from_cache = load_group(cfg.cache_dir, cfg.q)
    rows = []
    for chi in group:
        tau = gauss_sum(chi)
        rows.append({
            "q": cfg.q,
            "index": chi.index,
            "conductor": chi.conductor,
            "parity": chi.parity,
            "primitive": chi.is_primitive,
            "real": chi.is_real,
            "gauss_sum": tau,
            "gauss_abs_err": abs(abs(tau) - math.sqrt(cfg.q))
            if chi.is_primitive else 0.0,
        })
    rows.append({"q": cfg.q, "summary": "counts", "phi": len(group),
                 "phi_star": phi_star(cfg.q), "from_cache": from_cache})
    return rows, []


def cmd_lvalue(cfg: RunConfig):
    if cfg.q is None:
        raise UsageError("lvalue needs --q")
    q, t = cfg.q, cfg.t
    s = 0.5 + 1j * t
    group, _ = load_group(cfg.cache_dir, q)
    if cfg.index is not None and not 0 <= cfg.index < len(group):
        raise UsageError(f"index {cfg.index} out of range for phi({q}) = "
                         f"{len(group)} characters")
    indices = list(range(len(group))) if cfg.index is None else [cfg.index]

    cached = load_lvals(cfg.cache_dir, q)
    keys = [_lval_key(q, i, t) for i in indices]
    if not all(k in cached for k in keys):
        values = l_values_vector(s, q, indices)
        err = 1e-12 * (1 + math.sqrt(q))
        for i, idx in enumerate(indices):
            v = complex(values[i])
            cached[keys[i]] = {
                "q": q, "index": idx, "s": [s.real, s.imag],
                "value": [v.real, v.imag], "method": "hurwitz",
                "err_estimate": err,
            }
        store_lvals(cfg.cache_dir, q, cached)
    rows = []
    for k in keys:
        rec = dict(cached[k])
        chi = group.character(rec["index"])
        rec["conductor"] = chi.conductor
        rec["primitive"] = chi.is_primitive
        rows.append(rec)
    return rows, []


def _moment_rows(cfg: RunConfig, report) -> tuple[list, list]:
    # wall_time is dropped from the payload: results must be bit-identical
    # across reruns, and the report-level timing block already has the wall
    payload = report.to_payload()
    payload.pop("wall_time")
    payload["main_term_err"] = 1e-4 * abs(report.main_term)
    rows = [payload]
    failures = []
    max_rel = cfg.max_rel if cfg.max_rel is not None else cfg.tol("moment_rel")
    if report.rel_err > max_rel:
        failures.append(
            f"moment rel_err {report.rel_err:.3e} > {max_rel:g} at q={report.q}")
    return rows, failures


def cmd_moment(cfg: RunConfig):
    _require_primitive_modulus(cfg.q)
    try:
        report = moment_report(cfg.q, t=cfg.t)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return _moment_rows(cfg, report)


def cmd_moment_integral(cfg: RunConfig):
    _require_primitive_modulus(cfg.q)
    if cfg.T is None:
        raise UsageError("moment-integral needs --T")
    try:
        weight = WeightSpec(cfg.T, cfg.T0) if cfg.T0 else SharpCutoff(cfg.T)
        report = moment_report(cfg.q, weight=weight)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rows, failures = _moment_rows(cfg, report)
    if cfg.quad_err:
        from .moments import empirical_moment_integral

        _, qerr = empirical_moment_integral(cfg.q, cfg.T, weight=weight,
                                            with_err=True)
        rows[0]["quadrature_err"] = qerr
    return rows, failures


def cmd_mainterm(cfg: RunConfig):
    _require_primitive_modulus(cfg.q)
    try:
        if cfg.shifts:
            shifts = ShiftTuple(*cfg.shifts)
            terms = main_term_terms(cfg.q, cfg.t, shifts)
            label = "shifted"
        else:
            # the extrapolator rejects drift beyond 1e-4 relative, so
            # that envelope is the guaranteed error estimate
            terms = zero_shift_terms(cfg.q, cfg.t)
            label = "zero-shift"
    except ArithmeticError as exc:
        raise UsageError(f"{exc}; rerun with explicit --shifts "
                         "(e.g. 0.01,0.007,0.004,-0.003)") from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    total = complex(math.fsum(z.real for z in terms)
                    + 1j * math.fsum(z.imag for z in terms))
    err = 1e-4 * abs(total) if label == "zero-shift" else 1e-9 * abs(total)
    return [{
        "q": cfg.q, "t": cfg.t, "form": label, "main_term": total,
        "err_estimate": err, "components": list(terms),
    }], []


def cmd_extract_cj(cfg: RunConfig):
    _require_primitive_modulus(cfg.q)
    grid = cfg.t_grid or (0.0, 0.5, 1.0, 2.0, 4.0, 8.0)
    try:
        fit = extract_cj(cfg.q, grid)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    c4_target = 1.0 / (2.0 * math.pi ** 2)
    coeffs = list(fit.coeffs)
    rel_c4 = abs(coeffs[4] - c4_target) / c4_target
    rows = [{
        "q": cfg.q, "t_grid": list(grid),
        "coeffs": coeffs, "fit_residual": fit.residual,
        "condition": fit.condition,
        "c4": coeffs[4], "c4_target": c4_target, "c4_rel_err": rel_c4,
    }]
    return rows, []


# ---- verify suites


def _fail_line(check, worst, tol, at):
    return f"{check} residual {worst:.3e} > {tol:g} at {at}"


def _verify_identities(cfg: RunConfig):
    rng = np.random.default_rng(cfg.seed)
    rows, failures = [], []

    worst, worst_at = 0.0, ""
    cases = 0
    for q in range(3, cfg.q_max + 1):
        if phi_star(q) == 0:
            continue
        for m in range(1, min(2 * q, 30) + 1):
            for n in range(1, min(2 * q, 30) + 1):
                if math.gcd(m * n, q) != 1:
                    continue
                rep = orthogonality_residual(q, m, n)
                r = max(rep.residual_sum, rep.residual_parity)
                cases += 1
                if r > worst:
                    worst, worst_at = r, f"q={q} m={m} n={n}"
    tol = cfg.tol("orthogonality")
    rows.append({"check": "orthogonality", "cases": cases, "worst": worst,
                 "worst_at": worst_at, "tolerance": tol, "pass": worst <= tol})
    if worst > tol:
        failures.append(_fail_line("orthogonality", worst, tol, worst_at))

    worst, worst_at = 0.0, ""
    cases = 0
    mods = [q for q in range(2, cfg.q_max + 1)]
    for q in mods:
        for _ in range(3):
            s = complex(rng.uniform(-1.0, 1.5), rng.uniform(-3.0, 3.0))
            r = lemma31_residual(q, s)
            scale = 1.0 + abs(phi_star(q) * q ** (-s.real))
            cases += 1
            if r / scale > worst:
                worst, worst_at = r / scale, f"q={q} s={s:.3f}"
    tol = cfg.tol("lemma31")
    rows.append({"check": "mu-weighted divisor identity", "cases": cases,
                 "worst": worst, "worst_at": worst_at, "tolerance": tol,
                 "pass": worst <= tol})
    if worst > tol:
        failures.append(_fail_line("lemma31", worst, tol, worst_at))

    worst, worst_at = 0.0, ""
    cases = 0
    for n in range(1, 13):
        for alpha in (-0.7, -1.0):
            r = ramanujan_expansion_residual(n, alpha)
            cases += 1
            if r > worst:
                worst, worst_at = r, f"n={n} alpha={alpha}"
    tol = cfg.tol("ramanujan")
    rows.append({"check": "ramanujan expansion", "cases": cases,
                 "worst": worst, "worst_at": worst_at, "tolerance": tol,
                 "pass": worst <= tol})
    if worst > tol:
        failures.append(_fail_line("ramanujan", worst, tol, worst_at))

    worst, worst_at = 0.0, ""
    cases = 0
    for q in range(3, min(cfg.q_max, 50) + 1):
        if phi_star(q) == 0:
            continue
        group, _ = load_group(cfg.cache_dir, q)
        for chi in group.primitive():
            for s in (0.5, 0.3 + 2.0j):
                lam = completed_lambda(s, chi)
                r = fe_residual(s, chi) / (1.0 + abs(lam))
                cases += 1
                if r > worst:
                    worst, worst_at = r, f"q={q} index={chi.index} s={s}"
    tol = cfg.tol("fe")
    rows.append({"check": "functional equation", "cases": cases,
                 "worst": worst, "worst_at": worst_at, "tolerance": tol,
                 "pass": worst <= tol})
    if worst > tol:
        failures.append(_fail_line("fe", worst, tol, worst_at))

    return rows, failures


def _verify_afe(cfg: RunConfig):
    qs = cfg.q_list or (5, 7, 13)
    ts = cfg.t_list or (0.0, 1.0)
    base = ShiftTuple(0.01, 0.007, 0.004, -0.003)
    tol = cfg.tol("afe")
    jobs = []
    for q in qs:
        group, _ = load_group(cfg.cache_dir, q)
        for chi in group.primitive():
            for t in ts:
                jobs.append((q, chi, float(t)))

    def one(job):
        q, chi, t = job
        spec = GammaKernelSpec(base, t, chi.parity)
        first, second, product = afe_parts(chi, t, spec)
        resid = abs(first + second - product)
        return {"q": q, "index": chi.index, "t": t,
                "residual": resid, "relative": resid / (1.0 + abs(product)),
                "product": product, "tolerance": tol}

    rows = _pmap(one, jobs, cfg.threads)
    failures = []
    worst = max(rows, key=lambda r: r["relative"], default=None)
    for r in rows:
        r["pass"] = r["relative"] <= tol
    if worst and worst["relative"] > tol:
        failures.append(_fail_line(
            "afe", worst["relative"], tol,
            f"q={worst['q']} index={worst['index']} t={worst['t']}"))
    return rows, failures


def _verify_estermann(cfg: RunConfig):
    rng = np.random.default_rng(cfg.seed)
    tol_fe = cfg.tol("estermann_fe")
    tol_res = cfg.tol("estermann_residue")
    rows, failures = [], []
    worst_fe, worst_at = 0.0, ""
    worst_res, worst_res_at = 0.0, ""
    cases = 0
    for l in range(1, cfg.l_max + 1):
        units = [h for h in range(l) if math.gcd(h, l) == 1] or [0]
        for _ in range(cfg.samples):
            h = units[int(rng.integers(0, len(units)))]
            pt = RationalPoint(h, l)
            lam = complex(rng.uniform(-0.4, 0.4), rng.uniform(-0.3, 0.3))
            s = complex(rng.uniform(-0.3, 0.3), rng.uniform(0.5, 4.0))
            lhs = estermann_hurwitz(0.5 + s, lam, pt)
            r = estermann_fe_residual(s, lam, pt) / (1.0 + abs(lhs))
            cases += 1
            if r > worst_fe:
                worst_fe, worst_at = r, f"l={l} h={h} s={s:.3f} lam={lam:.3f}"

        lam = complex(rng.uniform(0.1, 0.4))
        eps = 1e-6
        pt = RationalPoint(units[0], l)
        r1 = eps * estermann_hurwitz(1.0 + eps, lam, pt)
        e1 = l ** (lam - 1.0) * zeta(1.0 - lam)
        r2 = eps * estermann_hurwitz(1.0 + lam + eps, lam, pt)
        e2 = l ** (-lam - 1.0) * zeta(1.0 + lam)
        rres = max(abs(r1 - e1) / abs(e1), abs(r2 - e2) / abs(e2))
        if rres > worst_res:
            worst_res, worst_res_at = rres, f"l={l} lam={lam:.3f}"
    rows.append({"check": "reflection formula", "cases": cases,
                 "worst": worst_fe, "worst_at": worst_at,
                 "tolerance": tol_fe, "pass": worst_fe <= tol_fe})
    rows.append({"check": "pole residues", "cases": 2 * cfg.l_max,
                 "worst": worst_res, "worst_at": worst_res_at,
                 "tolerance": tol_res, "pass": worst_res <= tol_res})
    if worst_fe > tol_fe:
        failures.append(_fail_line("estermann fe", worst_fe, tol_fe, worst_at))
    if worst_res > tol_res:
        failures.append(_fail_line("estermann residues", worst_res, tol_res,
                                   worst_res_at))
    return rows, failures


def _verify_voronoi(cfg: RunConfig):
    scales = cfg.scales or (500.0, 2000.0)
    tol = cfg.tol("voronoi")
    jobs = []
    for N in scales:
        for c in range(1, cfg.c_max + 1):
            a = 1 if c == 1 else next(
                x for x in range(1, c) if math.gcd(x, c) == 1)
            jobs.append((a, c, float(N)))

    def one(job):
        a, c, N = job
        resid, parts = voronoi_residual(a, c, SmoothWindow(scale=N),
                                        with_parts=True)
        rel = resid / (1.0 + abs(parts["lhs"]))
        return {"a": a, "c": c, "N": N, "residual": resid, "relative": rel,
                "lhs": parts["lhs"], "n_dual": parts["n_dual"],
                "quad_err": parts["quad_err"], "tolerance": tol,
                "pass": rel <= tol}

    rows = _pmap(one, jobs, cfg.threads)
    failures = []
    worst = max(rows, key=lambda r: r["relative"], default=None)
    if worst and worst["relative"] > tol:
        failures.append(_fail_line(
            "voronoi", worst["relative"], tol,
            f"a={worst['a']} c={worst['c']} N={worst['N']}"))
    return rows, failures


def _qdp_grid(cfg: RunConfig):
    # symmetric scales make the two signs exactly equal, so alternating
    # the sign over the size ladder costs no coverage; 0.09 keeps H clear
    # of the 0.1 sqrt(M1 M2 N1 N2) cap, where 0.1 S^2 can land an ulp above
    qs = cfg.q_list or (3, 5)
    sizes = cfg.sizes or (35.0, 46.0)
    insts = []
    for q in qs:
        for d_full in (False, True):
            for k, S in enumerate(sizes):
                d = q if d_full else 1
                insts.append(QdpInstance(
                    H=0.09 * S * S, M1=S, M2=S, N1=S, N2=S,
                    d=d, q=q, sign=1 if k % 2 == 0 else -1,
                    window=SmoothWindow()))
    return insts


def _verify_qdp(cfg: RunConfig):
    insts = _qdp_grid(cfg)
    tol_c = cfg.tol("qdp_c")
    band = cfg.tol("qdp_ratio")

    def one(inst):
        brute = qdp_bruteforce(inst)
        main = qdp_mainterm(inst)
        bound = qdp_error_bound(inst)
        return {"q": inst.q, "d": inst.d, "sign": inst.sign, "H": inst.H,
                "M1": inst.M1, "M2": inst.M2, "N1": inst.N1, "N2": inst.N2,
                "Q": inst.window.Q, "brute": brute, "main": main,
                "bound": bound,
                "ratio": brute / main if main else math.inf,
                "c": abs(brute - main) / bound}

    rows = _pmap(one, insts, cfg.threads)
    if cfg.csv_path:
        # stream the sweep as it is reduced, one row per instance
        fields = list(rows[0]) if rows else []
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fields)
        writer.writeheader()
        for r in rows:
            writer.writerow(_flatten(r))
        _atomic_write(cfg.csv_path, buf.getvalue())

    failures = []
    fitted = max((r["c"] for r in rows), default=0.0)
    if fitted > tol_c:
        at = max(rows, key=lambda r: r["c"])
        failures.append(_fail_line(
            "qdp envelope C", fitted, tol_c,
            f"q={at['q']} d={at['d']} sign={at['sign']} M1={at['M1']}"))
    top = sorted(rows, key=lambda r: abs(r["brute"]), reverse=True)
    top = top[: max(1, len(top) // 2)]
    worst_top = max(top, key=lambda r: abs(r["ratio"] - 1.0), default=None)
    off_band = [r for r in top if abs(r["ratio"] - 1.0) > band]
    if off_band:
        at = max(off_band, key=lambda r: abs(r["ratio"] - 1.0))
        failures.append(
            f"qdp ratio {at['ratio']:.4f} outside 1 +- {band:g} at "
            f"q={at['q']} d={at['d']} sign={at['sign']} M1={at['M1']}")
    rows.append({"summary": "fit", "instances": len(rows), "fitted_c": fitted,
                 "tolerance_c": tol_c, "ratio_band": band,
                 "worst_top_ratio": worst_top["ratio"] if worst_top else 1.0,
                 "pass": not failures})
    return rows, failures


def _verify_bilinear(cfg: RunConfig):
    qs = cfg.q_list or (101,)
    scales = cfg.scales or (50.0,)
    a_list = cfg.a_list or (1, 3)
    tol_c = cfg.tol("bilinear_c")
    rows, failures = [], []
    for q in qs:
        for S in scales:
            for a in a_list:
                val = bilinear_kl_sum(q, S, S, a, SmoothWindow())
                envelope = math.sqrt(q) + S * S / math.sqrt(q)
                c = abs(val) / envelope
                rows.append({"q": q, "M": S, "N": S, "a": a, "value": val,
                             "envelope": envelope, "c": c,
                             "tolerance": tol_c, "pass": c <= tol_c})
                if c > tol_c:
                    failures.append(_fail_line("bilinear envelope", c, tol_c,
                                               f"q={q} M=N={S} a={a}"))
        worst_kl = max(abs(kl2(a, q)) for a in range(1, min(q, 50)))
        rows.append({"q": q, "check": "square-root cancellation",
                     "worst_kl2": worst_kl, "weil_bound": 2.0,
                     "pass": worst_kl <= 2.0 + 1e-12})
        if worst_kl > 2.0 + 1e-12:
            failures.append(_fail_line("weil bound", worst_kl, 2.0, f"q={q}"))
    return rows, failures


VERIFY_SUITES = {
    "identities": _verify_identities,
    "afe": _verify_afe,
    "estermann": _verify_estermann,
    "voronoi": _verify_voronoi,
    "qdp": _verify_qdp,
    "bilinear": _verify_bilinear,
}


def cmd_verify(cfg: RunConfig, suite: str):
    if suite not in VERIFY_SUITES:
        raise UsageError(f"unknown verify suite {suite!r}; "
                         f"choose from {', '.join(sorted(VERIFY_SUITES))}")
    return VERIFY_SUITES[suite](cfg)


def cmd_cache(cfg: RunConfig, action: str):
    rows = []
    base = cfg.cache_dir
    if action == "stats":
        for kind, ext in (("chars", ".json"), ("lvals", ".jsonl")):
            d = os.path.join(base, kind)
            files = sorted(f for f in os.listdir(d)) if os.path.isdir(d) else []
            files = [f for f in files if f.endswith(ext)]
            nbytes = sum(os.path.getsize(os.path.join(d, f)) for f in files)
            records = 0
            for f in files:
                path = os.path.join(d, f)
                if kind == "lvals":
                    with open(path) as fh:
                        records += sum(1 for line in fh if line.strip())
                else:
                    records += 1
            rows.append({"kind": kind, "files": len(files), "bytes": nbytes,
                         "records": records})
        return rows, []
    if action == "clear":
        removed = 0
        for kind, ext in (("chars", ".json"), ("lvals", ".jsonl")):
            d = os.path.join(base, kind)
            if not os.path.isdir(d):
                continue
            for f in os.listdir(d):
                if f.endswith(ext):
                    os.remove(os.path.join(d, f))
                    removed += 1
        rows.append({"removed": removed, "cache_dir": base})
        return rows, []
    raise UsageError(f"unknown cache action {action!r}; use stats or clear")


# ----------------------------------------------------------------------
# argument parsing and dispatch


def _parse_floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _parse_ints(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x.strip())


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="dirichlet4",
        description="Verification suites and moment comparisons for the "
                    "fourth-moment laboratory.")
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--cache-dir", default=None,
                       help=f"cache directory (default ${CACHE_ENV} or "
                            "~/.cache/dirichlet4)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out", default=None, help="write the report here "
                       "instead of stdout")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--tol", action="append", default=[],
                       metavar="KEY=VALUE", help="override a tolerance")
        p.add_argument("--seed", type=int, default=20240815)

    p = sub.add_parser("characters", help="character table for one modulus")
    p.add_argument("--q", type=int, required=True)
    common(p)

    p = sub.add_parser("lvalue", help="L(1/2+it) across characters mod q")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--index", type=int, default=None)
    common(p)

    p = sub.add_parser("moment", help="empirical fourth moment vs main term")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--max-rel", type=float, default=None,
                   help="fail (exit 1) if rel_err exceeds this")
    common(p)

    p = sub.add_parser("moment-integral",
                       help="integrated moment vs weighted main term")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--T0", type=float, default=None,
                   help="smooth window ramp; omit for the sharp cutoff")
    p.add_argument("--quad-err", action="store_true")
    p.add_argument("--max-rel", type=float, default=None)
    common(p)

    p = sub.add_parser("mainterm", help="six-term main term at one point")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--shifts", type=_parse_floats, default=None,
                   metavar="A,B,C,D", help="explicit real shifts "
                   "(default: shift-to-zero extrapolation)")
    common(p)

    p = sub.add_parser("extract-cj", help="log-power coefficients of the "
                       "main term; c_4 should be 1/(2 pi^2)")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--t-grid", type=_parse_floats, default=None)
    common(p)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=sorted(VERIFY_SUITES))
    p.add_argument("--q-max", type=int, default=20)
    p.add_argument("--q-list", type=_parse_ints, default=None)
    p.add_argument("--t-list", type=_parse_floats, default=None)
    p.add_argument("--l-max", type=int, default=12)
    p.add_argument("--c-max", type=int, default=10)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--scales", type=_parse_floats, default=None)
    p.add_argument("--sizes", type=_parse_floats, default=None)
    p.add_argument("--a-list", type=_parse_ints, default=None)
    p.add_argument("--csv", dest="csv_path", default=None,
                   help="stream sweep rows to this CSV file (qdp)")
    common(p)

    p = sub.add_parser("cache", help="inspect or clear the on-disk cache")
    p.add_argument("action", choices=("stats", "clear"))
    common(p)

    return top


def _config_from_args(args) -> RunConfig:
    tolerances = {}
    for item in getattr(args, "tol", []) or []:
        if "=" not in item:
            raise UsageError(f"--tol expects KEY=VALUE, got {item!r}")
        key, _, val = item.partition("=")
        try:
            tolerances[key.strip()] = float(val)
        except ValueError as exc:
            raise UsageError(f"--tol {item!r}: value is not a number") from exc

    command = args.command
    if command == "verify":
        command = f"verify-{args.suite}"
    elif command == "cache":
        command = f"cache-{args.action}"

    def take(name, default):
        return getattr(args, name, None) if getattr(args, name, None) is not None \
            else default

    cfg = RunConfig(
        command=command,
        q=getattr(args, "q", None),
        q_list=tuple(take("q_list", ())),
        t=take("t", 0.0),
        t_list=tuple(take("t_list", ())),
        T=getattr(args, "T", None),
        T0=getattr(args, "T0", None),
        t_grid=tuple(take("t_grid", ())),
        seed=take("seed", 20240815),
        shifts=tuple(args.shifts) if getattr(args, "shifts", None) else None,
        l_max=take("l_max", 12),
        c_max=take("c_max", 10),
        samples=take("samples", 10),
        scales=tuple(take("scales", ())),
        sizes=tuple(take("sizes", ())),
        a_list=tuple(take("a_list", ())),
        q_max=take("q_max", 20),
        index=getattr(args, "index", None),
        tolerances=tolerances,
        cache_dir=take("cache_dir", default_cache_dir()),
        output=take("format", "json"),
        out=getattr(args, "out", None),
        csv_path=getattr(args, "csv_path", None),
        threads=take("threads", 1),
        quad_err=bool(getattr(args, "quad_err", False)),
        max_rel=getattr(args, "max_rel", None),
    )
    if cfg.command.startswith("verify") and not cfg.q_list and \
            getattr(args, "q_list", None) is not None:
        raise UsageError("--q-list must be nonempty")
    return cfg


def dispatch(cfg: RunConfig) -> int:
    started = time.perf_counter()
    if cfg.command == "characters":
        results, failures = cmd_characters(cfg)
    elif cfg.command == "lvalue":
        results, failures = cmd_lvalue(cfg)
    elif cfg.command == "moment":
        results, failures = cmd_moment(cfg)
    elif cfg.command == "moment-integral":
        results, failures = cmd_moment_integral(cfg)
    elif cfg.command == "mainterm":
        results, failures = cmd_mainterm(cfg)
    elif cfg.command == "extract-cj":
        results, failures = cmd_extract_cj(cfg)
    elif cfg.command.startswith("verify-"):
        results, failures = cmd_verify(cfg, cfg.command.removeprefix("verify-"))
    elif cfg.command.startswith("cache-"):
        results, failures = cmd_cache(cfg, cfg.command.removeprefix("cache-"))
    else:
        raise UsageError(f"unknown command {cfg.command!r}")

    _emit(_report(cfg, results, started), cfg)
    if failures:
        for line in failures:
            print(f"tolerance failure: {line}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        return dispatch(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
