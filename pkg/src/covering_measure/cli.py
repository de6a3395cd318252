"""Command-line interface: ``covering-measure <subcommand> [options]``.

Every subcommand writes one JSON document (or CSV for ``curve``) to stdout or
``--out``. Failures print a single ``error[<code>]: <message>`` line on
stderr and exit with the status of the exception class: 2 for arguments and
malformed input, 3 for resource caps, 4 for an exhausted solver budget,
5 for ``--strict`` runs that end inconclusive or divergent, 1 for a failed
check.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .covering import DEFAULT_BUDGET, SOLVERS, CoverCache, cover, covering_curve, curve_error
from .exceptions import ArgumentError, CoveringMeasureError, InconclusiveError, StructuralError
from .gallery import (
    VARIANTS,
    GallerySpace,
    SpaceSpec,
    cantor_alternating,
    counterexample_schedule,
    cyclic,
    generate,
    hyperspace,
    hyperspace_map,
    interval,
    rotation,
)
from .intervals import RationalIntervalUnion, min_cover_count, normalize, union_from_json
from .limits import LimitStrategy, RatioSequence, detect_oscillation, estimate_limit
from .measure import (
    DEFAULT_MEMBERSHIP_TOLERANCE,
    INCONCLUSIVE,
    Schedule,
    borel_measure,
    closed_measure,
    conditional_ratio,
    homogeneity_classes,
    invariance_report,
    membership_in_M,
    ratio_measure,
)
from .metric import MapKind, MapTable, check_map, space_from_json
from .rational import as_fraction, format_fraction

__all__ = ["main", "run", "RunConfig", "build_parser"]

CHECK_FAILED = 1


class CheckFailed(CoveringMeasureError):
    code = "check-failed"
    exit_status = CHECK_FAILED


@dataclass
class RunConfig:
    """Parsed command line; ``options`` holds the subcommand's own flags."""

    subcommand: str
    options: dict = field(default_factory=dict)

    @classmethod
    def from_args(cls, argv) -> RunConfig:
        ns = build_parser().parse_args(argv)
        opts = vars(ns).copy()
        return cls(opts.pop("subcommand"), opts)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(message)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def rational(text):
    return as_fraction(text)


def _add_space(p):
    g = p.add_argument_group("space")
    g.add_argument("--gallery", choices=sorted(VARIANTS), help="gallery variant")
    g.add_argument("--spec", help="gallery spec as JSON text or file")
    g.add_argument("--space", help="space JSON file (matrix, points or intervals)")
    g.add_argument("--pitch", type=rational, help="grid pitch for interval")
    g.add_argument("--lo", type=rational, default=Fraction(0))
    g.add_argument("--hi", type=rational, default=Fraction(1))
    g.add_argument("--n-max", type=int, help="truncation for harmonic / two_cluster")
    g.add_argument("--depth", type=int, help="depth for cantor_alternating / fat_cantor")
    g.add_argument("--m", type=int, help="order for cyclic")
    g.add_argument("--n", type=int, help="size for discrete")


def _add_schedule(p, eps_steps=10, delta=True):
    g = p.add_argument_group("schedule")
    g.add_argument("--eps-start", type=rational, default=Fraction(1, 8))
    g.add_argument("--eps-ratio", type=rational, default=Fraction(1, 2))
    g.add_argument("--eps-steps", type=int, default=eps_steps)
    if delta:
        g.add_argument("--delta-start", type=rational, default=Fraction(1, 4))
        g.add_argument("--delta-ratio", type=rational, default=Fraction(1, 2))
        g.add_argument("--delta-steps", type=int, default=5)
    g.add_argument("--tail-fraction", type=rational, default=Fraction(1, 2))
    g.add_argument(
        "--extrapolation", choices=("linear", "last"), default="linear", help="outer delta -> 0 rule"
    )


def _add_common(p, tolerance=Fraction(1, 100)):
    p.add_argument("--solver", choices=SOLVERS, default="auto")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--tolerance", type=rational, default=tolerance)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--strict", action="store_true", help="inconclusive or divergent results exit with status 5")
    p.add_argument("--out", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="covering-measure", description="Covering numbers and the measures they induce.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser, required=True)

    p = sub.add_parser("cover", help="one covering number")
    _add_space(p)
    _add_common(p)
    p.add_argument("--subset", default="all")
    p.add_argument("--eps", type=rational, required=True)

    p = sub.add_parser("curve", help="covering ratio over an eps schedule")
    _add_space(p)
    _add_schedule(p, delta=False)
    _add_common(p)
    p.add_argument("--subset", default="all")

    p = sub.add_parser("measure", help="measure estimate of a subset")
    _add_space(p)
    _add_schedule(p)
    _add_common(p)
    p.add_argument("--subset", default="all")
    p.add_argument("--kind", choices=("borel", "closed", "ratio"), default="borel")
    p.add_argument("--interior", action="store_true", help="treat an interval subset as its interior")

    p = sub.add_parser("membership", help="null-boundary verdict for a subset")
    _add_space(p)
    _add_schedule(p)
    _add_common(p, tolerance=DEFAULT_MEMBERSHIP_TOLERANCE)
    p.add_argument("--subset", default="all")
    p.add_argument("--resolution", type=rational, help="boundary resolution on finite spaces")

    p = sub.add_parser("conditional", help="mu_F(B) next to mu_K(B)/mu_K(F)")
    _add_space(p)
    _add_schedule(p)
    _add_common(p)
    p.add_argument("--closed-set", required=True, help="selector for F")
    p.add_argument("--subset", required=True, help="selector for B")
    p.add_argument("--null-threshold", type=rational, default=Fraction(1, 100))

    p = sub.add_parser("counterexample", help="alternating Cantor construction with a divergent ratio")
    p.add_argument("--depth", type=int, default=3, help="schedule depth d: 2d scales, 2d construction levels")
    p.add_argument("--slack", type=rational, default=Fraction(1, 4225))
    _add_common(p)

    p = sub.add_parser("haar-check", help="rotation invariance and arc measure on a cyclic group")
    p.add_argument("--m", type=int, default=60)
    p.add_argument("--arc", type=int, default=15)
    _add_schedule(p)
    _add_common(p)

    p = sub.add_parser("hyperspace", help="reflection-induced isometry of a grid hyperspace")
    p.add_argument("--pitch", type=rational, default=Fraction(1, 4))
    p.add_argument("--eps-start", type=rational, default=Fraction(1, 2))
    p.add_argument("--eps-ratio", type=rational, default=Fraction(1, 2))
    p.add_argument("--eps-steps", type=int, default=6)
    p.add_argument("--delta-start", type=rational, default=Fraction(1, 2))
    p.add_argument("--delta-ratio", type=rational, default=Fraction(1, 2))
    p.add_argument("--delta-steps", type=int, default=3)
    p.add_argument("--tail-fraction", type=rational, default=Fraction(1, 2))
    p.add_argument("--extrapolation", choices=("linear", "last"), default="linear")
    _add_common(p, tolerance=Fraction(1, 10**9))

    p = sub.add_parser("homogeneity", help="homogeneity classes at a ball radius")
    _add_space(p)
    _add_common(p)
    p.add_argument("--radius", type=rational, required=True)
    p.add_argument("--cap", type=int, default=12)

    p = sub.add_parser("check-invariance", help="audit covering numbers along a map")
    _add_space(p)
    _add_schedule(p, eps_steps=6, delta=True)
    _add_common(p, tolerance=Fraction(1, 10**9))
    p.add_argument(
        "--map",
        required=True,
        help="rotation:K, affine:A:B (x -> A*x + B on line spaces) or a JSON file with 'pairs'",
    )
    p.add_argument("--target-spec", help="gallery spec of the target (default: the source)")
    p.add_argument("--subset", action="append", default=None, help="source subset (repeatable)")
    p.add_argument("--target-subset", action="append", default=None, help="target subset (repeatable)")

    p = sub.add_parser("gallery", help="list or emit gallery spaces")
    gs = p.add_subparsers(dest="gallery_command", parser_class=_Parser, required=True)
    gs.add_parser("list")
    e = gs.add_parser("emit")
    e.add_argument("spec", help="gallery spec as JSON text or file")
    e.add_argument("--out")
    return parser


# ---------------------------------------------------------------------------
# Space and subset resolution
# ---------------------------------------------------------------------------


def _read_json(text_or_path):
    text = str(text_or_path)
    if text.lstrip().startswith(("{", "[")):
        return json.loads(text)
    path = Path(text)
    if not path.exists():
        raise ArgumentError(f"no such file: {text}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise StructuralError(f"{text}: invalid JSON ({exc.msg})") from None


def _gallery_params(opts) -> dict:
    v = opts["gallery"]
    if v == "interval":
        p = {"lo": opts["lo"], "hi": opts["hi"]}
        if opts.get("pitch") is not None:
            p["pitch"] = opts["pitch"]
        return p
    key = {"harmonic": "n_max", "two_cluster": "n_max", "cantor_alternating": "depth", "fat_cantor": "depth", "cyclic": "m", "discrete": "n"}.get(v)
    if key is None:
        raise ArgumentError(f"{v} needs --spec")
    if opts.get(key) is None:
        raise ArgumentError(f"--gallery {v} needs --{key.replace('_', '-')}")
    return {key: opts[key]}


def load_space(opts) -> GallerySpace:
    """Resolve ``--gallery``/``--spec``/``--space`` into a :class:`GallerySpace`."""
    given = [k for k in ("gallery", "spec", "space") if opts.get(k)]
    if len(given) != 1:
        raise ArgumentError("give exactly one of --gallery, --spec, --space")
    if opts.get("gallery"):
        return generate(SpaceSpec(opts["gallery"], _gallery_params(opts)))
    if opts.get("spec"):
        return generate(_read_json(opts["spec"]))
    data = _read_json(opts["space"])
    if isinstance(data, dict) and "intervals" in data and "metric" not in data:
        s, ambient = union_from_json(data)
        subsets = {k: normalize(v) for k, v in data.get("subsets", {}).items()}
        return GallerySpace(data.get("name", "file"), ambient if ambient is not None else s, subsets)
    space, subsets = space_from_json(data)
    return GallerySpace(data.get("name", "file"), space, subsets)


def select(g: GallerySpace, text: str):
    """Subset selector: ``all``, ``lo:hi``, a distinguished subset name,
    ``labels:a,b`` or ``indices:0,1``."""
    text = text.strip()
    space = g.space
    if text == "all":
        return space if g.is_union else space.full()
    if text in g.subsets:
        return g.subsets[text]
    if text.startswith("labels:"):
        if g.is_union:
            raise ArgumentError("labels select points of finite spaces only")
        return space.mask([x for x in text[7:].split(",") if x])
    if text.startswith("indices:"):
        if g.is_union:
            raise ArgumentError("indices select points of finite spaces only")
        idx = [int(x) for x in text[8:].split(",") if x]
        if any(not 0 <= i < space.n for i in idx):
            raise ArgumentError("index out of range")
        from .metric import SubsetMask

        return SubsetMask.from_indices(space.n, idx)
    if ":" in text:
        lo, hi = (as_fraction(x) for x in text.split(":", 1))
        if lo > hi:
            raise ArgumentError(f"empty range {text}")
        if g.is_union:
            return normalize([(lo, hi)]).intersection(space)
        if not space.is_line:
            raise ArgumentError("coordinate ranges need a line space")
        return space.mask_between(lo, hi)
    raise ArgumentError(f"unknown subset selector {text!r}")


def _schedule(opts, need_delta=True) -> Schedule:
    strategy = LimitStrategy.classical(opts.get("tolerance_limit", opts["tolerance"]), opts["tail_fraction"])
    return Schedule.geometric(
        opts["eps_start"],
        opts["eps_ratio"],
        opts["eps_steps"],
        opts.get("delta_start", Fraction(1, 4)),
        opts.get("delta_ratio", Fraction(1, 2)),
        opts.get("delta_steps", 0) if need_delta else 0,
        strategy,
        opts.get("extrapolation", "linear"),
    )


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_cover(opts):
    g = load_space(opts)
    sub = select(g, opts["subset"])
    if g.is_union:
        count, trace = min_cover_count(sub, opts["eps"])
        return {
            "size": count,
            "exactness": "exact",
            "epsilon": format_fraction(opts["eps"]),
            "centers": [{"value": format_fraction(c), "status": s} for c, s in trace.centers],
        }, None
    res = cover(g.space, sub, opts["eps"], opts["solver"], opts["budget"])
    return {**res.to_json(g.space), "epsilon": format_fraction(opts["eps"])}, None


def _cmd_curve(opts):
    g = load_space(opts)
    sub = select(g, opts["subset"])
    eps = _schedule(opts, need_delta=False).eps
    curve = covering_curve(g.space, sub, eps, opts["solver"], opts["budget"])
    err = curve_error(curve)
    if err is not None:
        raise err
    if opts["format"] == "csv":
        return curve.to_csv(), None
    return curve.to_json(), None


def _cmd_measure(opts):
    g = load_space(opts)
    sub = select(g, opts["subset"])
    sch = _schedule(opts)
    kw = {"solver": opts["solver"], "budget": opts["budget"]}
    if opts["kind"] == "borel":
        est = borel_measure(g.space, sub, sch, interior=opts["interior"], **kw)
    elif opts["kind"] == "closed":
        est = closed_measure(g.space, sub, sch, **kw)
    else:
        est = ratio_measure(g.space, sub, sch, closed=not opts["interior"], **kw)
    out = {"kind": opts["kind"], **est.to_json(), "schedule": sch.to_json()}
    return out, None if est.converged else "measure estimate did not converge"


def _cmd_membership(opts):
    g = load_space(opts)
    sub = select(g, opts["subset"])
    opts = {**opts, "tolerance_limit": Fraction(1, 100)}
    sch = _schedule(opts)
    v = membership_in_M(g.space, sub, sch, opts["tolerance"], resolution=opts.get("resolution"), solver=opts["solver"], budget=opts["budget"])
    return v.to_json(), "membership verdict is inconclusive" if v.in_M == INCONCLUSIVE else None


def _cmd_conditional(opts):
    g = load_space(opts)
    f = select(g, opts["closed_set"])
    b = select(g, opts["subset"])
    rep = conditional_ratio(g.space, f, b, _schedule(opts), null_threshold=opts["null_threshold"], solver=opts["solver"], budget=opts["budget"])
    out = rep.to_json()
    converged = rep.mu_F_of_B.converged and rep.mu_K_of_B.converged and rep.mu_K_of_F.converged
    out["converged"] = converged
    return out, None if converged else "conditional estimates did not all converge"


def counterexample_report(depth: int, slack=Fraction(1, 4225), tolerance=Fraction(1, 100)) -> dict:
    """Covering counts of the alternating construction and the limit verdict."""
    if depth < 1:
        raise ArgumentError("--depth must be at least 1")
    g = cantor_alternating(2 * depth, slack=slack)
    a, b, k = g.subsets["A"], g.subsets["B"], g.space
    rows = []
    ratios = []
    for eps in counterexample_schedule(depth):
        na, nb, nk = (min_cover_count(s, eps)[0] for s in (a, b, k))
        ratios.append(Fraction(na, nk))
        rows.append(
            {
                "epsilon": format_fraction(eps),
                "N_A": na,
                "N_B": nb,
                "N_K": nk,
                "N_A/N_B": format_fraction(Fraction(na, nb)),
                "N_A/N_K": format_fraction(Fraction(na, nk)),
            }
        )
    seq = RatioSequence(tuple(counterexample_schedule(depth)), tuple(ratios))
    est = estimate_limit(seq, LimitStrategy.classical(tolerance))
    report = {
        "depth": depth,
        "construction_levels": 2 * depth,
        "widths": {
            "alpha_A": [format_fraction(x) for x in g.meta["alpha_A"]],
            "alpha_B": [format_fraction(x) for x in g.meta["alpha_B"]],
        },
        "counts": rows,
        "limit": est.to_json(),
        "verdict": "converged" if est.converged else "divergent",
    }
    if len(seq) >= 6:
        report["oscillation"] = detect_oscillation(seq).to_json()
    try:
        cantor_alternating(2, shrink_base=65)
        report["literal_construction"] = "non-empty"
    except StructuralError as exc:
        report["literal_construction"] = f"empty: {exc}"
    return report


def _cmd_counterexample(opts):
    rep = counterexample_report(opts["depth"], opts["slack"], opts["tolerance"])
    return rep, "covering ratio diverges" if rep["verdict"] == "divergent" else None


def _cmd_haar(opts):
    m, arc = opts["m"], opts["arc"]
    if not 0 < arc <= m:
        raise ArgumentError("--arc must lie in 1..m")
    g = cyclic(m)
    s = g.space
    arc_mask = s.mask(range(arc))
    sch = _schedule(opts)
    cache = CoverCache(s, opts["solver"], opts["budget"])
    mismatches = []
    for shift in range(m):
        img = rotation(s, shift).image(arc_mask)
        for eps in sch.eps:
            a, b = cache.count(arc_mask, eps).size, cache.count(img, eps).size
            if a != b:
                mismatches.append({"shift": shift, "epsilon": format_fraction(eps), "N": a, "N_rotated": b})
    est = borel_measure(s, arc_mask, sch, cache=cache)
    expected = Fraction(arc, m)
    ok = not mismatches and est.converged and abs(est.point - expected) <= opts["tolerance"]
    out = {
        "m": m,
        "arc": arc,
        "expected": format_fraction(expected),
        "estimate": est.to_json(),
        "rotation_mismatches": mismatches,
        "passed": ok,
    }
    return out, None if ok else CheckFailed("haar check failed")


def hyperspace_report(pitch=Fraction(1, 4), schedule: Schedule | None = None, tolerance=Fraction(1, 10**9)) -> dict:
    """Reflection ``x -> lo + hi - x`` of a grid, lifted to its hyperspace."""
    base = interval(pitch)
    b = base.space
    refl = MapTable.from_coordinate_function(b, b, lambda x: 1 - x)
    h = hyperspace(base)
    lifted = hyperspace_map(refl, b.n)
    kind = check_map(h.space, h.space, lifted)
    members = h.meta["members"]
    n = h.space.n
    from .metric import SubsetMask

    classes = {
        "contains_left_end": SubsetMask.from_indices(n, (i for i, m in enumerate(members) if 0 in m)),
        "singletons_left_half": SubsetMask.from_indices(
            n, (i for i, m in enumerate(members) if len(m) == 1 and 2 * b.coords[m[0]] < 1)
        ),
        "pairs": SubsetMask.from_indices(n, (i for i, m in enumerate(members) if len(m) == 2 and 0 in m)),
    }
    schedule = schedule or Schedule.geometric(Fraction(1, 2), Fraction(1, 2), 6, Fraction(1, 2), Fraction(1, 2), 3)
    cache = CoverCache(h.space)
    rows = []
    ok = kind == MapKind.ISOMETRY
    for name, cls_mask in classes.items():
        mirrored = lifted.image(cls_mask)
        ea = borel_measure(h.space, cls_mask, schedule, cache=cache)
        eb = borel_measure(h.space, mirrored, schedule, cache=cache)
        diff = abs(ea.value - eb.value)
        ok = ok and diff <= tolerance
        rows.append(
            {
                "class": name,
                "size": cls_mask.count,
                "estimate": format_fraction(ea.value),
                "mirrored_estimate": format_fraction(eb.value),
                "difference": format_fraction(diff),
            }
        )
    return {
        "base_points": b.n,
        "hyperspace_points": n,
        "map_kind": kind.value,
        "classes": rows,
        "passed": ok,
    }


def _cmd_hyperspace(opts):
    sch = _schedule({**opts, "tolerance_limit": Fraction(1, 100)})
    rep = hyperspace_report(opts["pitch"], sch, opts["tolerance"])
    return rep, None if rep["passed"] else CheckFailed("mirrored estimates differ")


def _cmd_homogeneity(opts):
    g = load_space(opts)
    if g.is_union:
        raise ArgumentError("homogeneity needs a finite space")
    res = homogeneity_classes(g.space, opts["radius"], cap=opts["cap"])
    return res.to_json(), "some ball comparisons were inconclusive" if res.inconclusive else None


def _parse_map(text, source, target) -> MapTable:
    if text.startswith("rotation:"):
        shift = int(text.split(":", 1)[1])
        if source is not target:
            raise ArgumentError("rotation maps a space to itself")
        return rotation(source, shift)
    if text.startswith("affine:"):
        parts = text.split(":")
        if len(parts) != 3:
            raise ArgumentError("affine map reads affine:A:B")
        a, c = as_fraction(parts[1]), as_fraction(parts[2])
        return MapTable.from_coordinate_function(source, target, lambda x: a * x + c)
    data = _read_json(text)
    try:
        pairs = [(source.index(i) if isinstance(i, str) else int(i), target.index(j) if isinstance(j, str) else int(j)) for i, j in data["pairs"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise StructuralError(f"map JSON needs 'pairs': {exc}") from None
    return MapTable(tuple(pairs), source.n, target.n)


def _cmd_check_invariance(opts):
    g = load_space(opts)
    if g.is_union:
        raise ArgumentError("check-invariance needs finite spaces")
    t = generate(_read_json(opts["target_spec"])) if opts.get("target_spec") else g
    table = _parse_map(opts["map"], g.space, t.space)
    subsets = {s: select(g, s) for s in (opts["subset"] or ["all"])}
    tsubsets = {s: select(t, s) for s in (opts["target_subset"] or [])}
    sch = _schedule({**opts, "tolerance_limit": Fraction(1, 100)})
    rep = invariance_report(
        g.space,
        table,
        subsets,
        sch,
        target=None if t is g else t.space,
        target_subsets=tsubsets,
        estimate_tolerance=opts["tolerance"],
        solver=opts["solver"],
        budget=opts["budget"],
    )
    failed = None if rep.passed else CheckFailed(f"{len(rep.failures())} invariance checks failed")
    return rep.to_json(), failed


def _cmd_gallery(opts):
    if opts["gallery_command"] == "list":
        return {"variants": [{"name": k, "signature": v} for k, v in sorted(VARIANTS.items())]}, None
    spec = SpaceSpec.from_json(_read_json(opts["spec"]))
    g = generate(spec)
    return {"spec": spec.to_json(), **g.to_json()}, None


COMMANDS = {
    "cover": _cmd_cover,
    "curve": _cmd_curve,
    "measure": _cmd_measure,
    "membership": _cmd_membership,
    "conditional": _cmd_conditional,
    "counterexample": _cmd_counterexample,
    "haar-check": _cmd_haar,
    "hyperspace": _cmd_hyperspace,
    "homogeneity": _cmd_homogeneity,
    "check-invariance": _cmd_check_invariance,
    "gallery": _cmd_gallery,
}


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def _render(payload, fmt) -> str:
    if isinstance(payload, str):
        return payload
    if fmt == "csv":
        raise ArgumentError("csv output is only available for curve")
    return json.dumps(payload, indent=2) + "\n"


def run(config: RunConfig, stdout=None) -> int:
    """Execute a parsed configuration; returns the exit status."""
    stdout = stdout or sys.stdout
    opts = config.options
    payload, doubt = COMMANDS[config.subcommand](opts)
    text = _render(payload, opts.get("format", "json"))
    if opts.get("out"):
        Path(opts["out"]).write_text(text)
    else:
        stdout.write(text)
    if isinstance(doubt, CheckFailed):
        raise doubt
    if doubt and opts.get("strict"):
        raise InconclusiveError(doubt)
    return 0


def main(argv=None) -> int:
    try:
        return run(RunConfig.from_args(argv))
    except CoveringMeasureError as exc:
        message = str(exc).splitlines()[0] if str(exc) else exc.__class__.__name__
        print(f"error[{exc.code}]: {message}", file=sys.stderr)
        return exc.exit_status
    except KeyboardInterrupt:
        print("error[interrupted]: interrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
