import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pydantic

from src.config.config import Config
from src.core.geometry import crop, verify_delone
from src.diffraction.autocorrelation import autocorrelation
from src.diffraction.peaks import detect_peaks, pure_point_diagnostic
from src.diffraction.spectrum import default_k_grid, fft_spectrum, intensity
from src.generators.lattices import coin_coloured_lattice, lattice
from src.generators.model_sets import fibonacci_model_set
from src.generators.sparse import euler_gap_set
from src.generators.substitution import RULES, substitution_chain
from src.generators.visible import coloured_visible_points, visible_points
from src.hullmetric.kronecker import KroneckerSystem, kronecker_entropy_demo
from src.hullmetric.metric import hull_metric, orbit_metric
from src.hullmetric.separation import hull_sample, separated_set
from src.hullmetric.theorem import check_htop_equals_hpc, epsilon0
from src.mahler.dimer_entropy import dimer_entropy_extrapolation, mahler_vs_dimer_report
from src.mahler.polynomial import LaurentPolynomial
from src.mahler.quadrature import mahler_measure
from src.models.errors import FlcError, ValidationError
from src.models.geometry import Box
from src.models.pointset import PointSet
from src.models.run_config import RunConfig
from src.patchstat.entropy import entropy_estimate
from src.patchstat.frequencies import disjoint_anchors, patch_frequencies
from src.patchstat.patches import extract_patches
from src.patchstat.repetitivity import check_repetitivity_bound
from src.utils.pointset_io import default_metadata, format_pointset, read_pointset
from src.workflows.report_graph import run_report

logger = logging.getLogger(__name__)

# Options whose values may start with "-" (negative coordinates, exponents)
_VALUE_OPTIONS = ("--window", "--basis", "--poly")

Handler = Callable[[argparse.Namespace, RunConfig], Any]
_HANDLERS: Dict[str, Handler] = {}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def route(name: str) -> Callable[[Handler], Handler]:
    def register(handler: Handler) -> Handler:
        _HANDLERS[name] = handler
        return handler
    return register


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _ints(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def _eps(text: str):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("eps must be a number or 'auto'")


def _resolve_eps(ps: PointSet, eps) -> float:
    """
    "auto" means 0.9 * eps0(r, R)
    """
    if eps in (None, "auto"):
        return 0.9 * epsilon0(ps.packing_radius, ps.covering_radius)
    return float(eps)


def _nested_cubes(ps: PointSet, count: int) -> List[Box]:
    extent = float(np.min(ps.window.extents))
    return [Box.cube(extent * i / (2.0 * count), ps.dimension, ps.window.center) for i in range(1, count + 1)]


# ---------------------------------------------------------------- generators

def _generate(args: argparse.Namespace, run: RunConfig) -> PointSet:
    kind = args.kind
    if kind == "lattice":
        window = Box.from_text(args.window) if args.window else Box.cube(args.half_width, args.dim)
        basis = [[float(v) for v in row.split(",")] for row in args.basis.split(";")] if args.basis else np.eye(window.dimension)
        return lattice(basis, window)
    if kind == "fibonacci":
        return fibonacci_model_set(args.half_width, args.window_length)
    if kind == "substitution":
        rule = RULES[args.rule](weighted=not args.unweighted) if args.rule != "fibonacci" else RULES[args.rule]()
        return substitution_chain(rule, args.iterations, args.axiom or rule.alphabet[0])
    if kind == "visible":
        return visible_points(args.bound)
    if kind == "coloured-visible":
        return coloured_visible_points(args.bound)
    if kind == "euler":
        return euler_gap_set(args.terms)
    if kind == "coin":
        return coin_coloured_lattice(int(args.half_width), run.seed)
    raise ValidationError(f"unknown generator '{kind}'")


@route("generate")
def generate_route(args: argparse.Namespace, run: RunConfig) -> PointSet:
    return _generate(args, run)


# ---------------------------------------------------------------- core / patches

@route("verify")
def verify_route(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    return asdict(verify_delone(read_pointset(args.input), first_hole=args.first_hole))


@route("patches")
def patches_route(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    ps = read_pointset(args.input)
    results = []
    for D in run.D:
        table = extract_patches(ps, D, run.threads)
        results.append({"D": D, "patch_count": len(table), "n_centers": table.n_centers, "patches": table.to_dict()["patches"]})
    rows = [{"D": r["D"], "patch_count": r["patch_count"], "n_centers": r["n_centers"]} for r in results]
    return {"results": results, "rows": rows}


@route("entropy")
def entropy_route(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    curve = entropy_estimate(read_pointset(args.input), run.radii, run.threads)
    return {"tail_estimate": curve.tail_estimate, "method": curve.method, "rows": curve.to_rows()}


@route("frequencies")
def frequencies_route(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    ps = read_pointset(args.input)
    anchors = disjoint_anchors(ps.window, args.anchors, args.anchor_length)
    report = patch_frequencies(ps, run.D[0], anchors, run.threads)
    return asdict(report)


@route("repetitivity")
def repetitivity_route(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    ps = read_pointset(args.input)
    rows = [check_repetitivity_bound(ps, D, args.anchors, run.threads) for D in run.D]
    return {"rows": rows}


# ---------------------------------------------------------------- hull metric

@route("metric")
def metric_route(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    xi1, xi2 = read_pointset(args.input), read_pointset(args.other)
    if run.D:
        rows = [{"D": D, **orbit_metric(xi1, xi2, D, run.resolution).to_dict()} for D in run.D]
        return {"rows": rows}
    return hull_metric(xi1, xi2, run.resolution).to_dict()


@route("separated")
def separated_route(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    ps = read_pointset(args.input)
    eps = _resolve_eps(ps, run.eps)
    rng = np.random.default_rng(run.seed)
    rows = []
    for D in run.D:
        half_width = args.half_width or D + 2.0 / epsilon0(ps.packing_radius, ps.covering_radius) + 2.0
        reach = ps.window.erode(half_width)
        if reach is None:
            raise ValidationError("half width leaves no room for translates")
        vectors = reach.lower + rng.random((args.count, ps.dimension)) * reach.extents
        result = separated_set(hull_sample(ps, vectors, half_width), D, eps, run.resolution, threads=run.threads)
        rows.append({"D": D, "eps": eps, "N_hat": result.N_hat, "exact": result.exact, "indices": result.indices})
    return {"rows": rows}


@route("theorem-check")
def theorem_route(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    ps = read_pointset(args.input)
    eps = _resolve_eps(ps, run.eps)
    rows = check_htop_equals_hpc(ps, run.D, eps, run.resolution, args.extra, run.seed)
    return {"eps": eps, "eps_rule": "0.9*eps0" if run.eps in (None, "auto") else "given", "rows": rows}


@route("kronecker")
def kronecker_route(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    system = KroneckerSystem.square_roots_of_primes(args.torus_dim)
    eps = 0.1 if run.eps in (None, "auto") else float(run.eps)
    D_list = run.D or [1.0, 10.0, 100.0]
    sizes = kronecker_entropy_demo(system, eps, D_list, args.points)
    return {
        "rotation": system.rotation_vector.tolist(),
        "eps": eps,
        "rows": [{"D": D, "N_hat": n} for D, n in zip(D_list, sizes)],
    }


# ---------------------------------------------------------------- diffraction

@route("autocorr")
def autocorr_route(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    gamma = autocorrelation(read_pointset(args.input), run.z_max or 5.0)
    return {"z_max": gamma.z_max, "normalizing_volume": gamma.normalizing_volume, "rows": gamma.to_rows()}


@route("spectrum")
def spectrum_route(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    ps = read_pointset(args.input)
    if args.fft:
        spectrum = fft_spectrum(ps, args.fft)
    else:
        k_grid = default_k_grid(ps.dimension, run.k_points, run.k_max)
        spectrum = intensity(ps, k_grid, args.taper, run.threads)
    return {"volume": spectrum.volume, "n_points": spectrum.n_points, "taper": spectrum.taper, "rows": spectrum.to_rows()}


@route("peaks")
def peaks_route(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    ps = read_pointset(args.input)
    k_grid = default_k_grid(ps.dimension, run.k_points, run.k_max)
    count = Config.get_diffraction_config()["n_volumes"]
    spectra = [intensity(crop(ps, box), k_grid, args.taper, run.threads) for box in _nested_cubes(ps, count)]
    report = detect_peaks(spectra)
    payload = report.to_dict()
    payload["rows"] = [{**{f"k{i}": v for i, v in enumerate(p.k)}, "intensity": p.intensity, "r2": p.scaling_r2} for p in report.peaks]
    return payload


@route("diagnose")
def diagnose_route(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    overrides = {"k_max": run.k_max} if run.k_max else {}
    return pure_point_diagnostic(read_pointset(args.input), overrides).to_dict()


# ---------------------------------------------------------------- mahler / dimers

@route("mahler")
def mahler_route(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    P = LaurentPolynomial.parse(args.poly)
    result = mahler_measure(P, run.base_grid, run.max_levels)
    return {"polynomial": P.to_text(), **result.to_dict()}


@route("dimer")
def dimer_route(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    sizes = run.sizes or None
    if args.compare:
        return mahler_vs_dimer_report(args.model, sizes)
    return dimer_entropy_extrapolation(args.model, sizes)


@route("report")
def report_route(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    return run_report(scale=args.scale, seed=run.seed, threads=run.threads)


# ---------------------------------------------------------------- parser

_HELP = {
    "generate": "generate an FLC point set (lattice, cut-and-project model set, substitution chain, visible points, ...)",
    "verify": "check the Delone property: packing radius r and covering radius R",
    "patches": "count D-patches up to translation (finite local complexity)",
    "entropy": "patch counting entropy log card p(n) / |B_n| over radii",
    "frequencies": "patch frequencies over disjoint anchors (uniform cluster frequencies)",
    "repetitivity": "repetitivity function F(D) and the linear repetitivity bound",
    "metric": "hull metric d (or the orbit metric d_D with --D) between two point sets",
    "separated": "greedy or exact (D, eps)-separated set in a sample of the hull",
    "theorem-check": "finite-scale check that topological entropy equals patch counting entropy",
    "kronecker": "separated-set sizes for a Kronecker rotation (invariant metric, zero entropy)",
    "autocorr": "autocorrelation coefficients gamma of the weighted Dirac comb",
    "spectrum": "diffraction intensity (Fourier transform of the autocorrelation) on a k grid",
    "peaks": "Bragg peaks by linear growth of intensity with volume",
    "diagnose": "pure point diffraction versus continuous components",
    "mahler": "logarithmic Mahler measure m(P) of a two-variable Laurent polynomial",
    "dimer": "per-site entropy of domino or lozenge tilings, optionally against m(P)",
    "report": "run the full acceptance report workflow",
}


def build_parser() -> argparse.ArgumentParser:
    runtime = Config.get_runtime_config()
    parser = _Parser(prog=Config.TOOL_NAME, description="Entropy, hull metric and diffraction of FLC point sets")
    parser.add_argument("--version", action="version", version=f"{Config.TOOL_NAME} {Config.VERSION}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", help="output path (stdout when omitted)")
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--seed", type=int, default=runtime["seed"])
    common.add_argument("--threads", type=int, default=runtime["threads"], help="cap on worker threads (FLC_THREADS)")
    common.add_argument("--resolution", type=float, default=Config.get_metric_config()["resolution"])

    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)

    def add(name: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], help=_HELP[name], description=_HELP[name])

    p = add("generate")
    p.add_argument("kind", choices=["lattice", "fibonacci", "substitution", "visible", "coloured-visible", "euler", "coin"])
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--window", help='box "lo,hi[;lo,hi]"')
    p.add_argument("--basis", help='lattice basis rows "a,b;c,d"')
    p.add_argument("--half-width", type=float, default=50.0)
    p.add_argument("--window-length", type=float, help="internal window length of the Fibonacci scheme")
    p.add_argument("--rule", choices=sorted(RULES), default="fibonacci")
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--axiom")
    p.add_argument("--unweighted", action="store_true")
    p.add_argument("--bound", type=int, default=100)
    p.add_argument("--terms", type=int, default=20)

    for name in ("verify", "entropy", "autocorr", "diagnose"):
        p = add(name)
        p.add_argument("input")
    sub.choices["verify"].add_argument("--first-hole", action="store_true", help="stop the 2-D hole search at the first hole larger than R")
    sub.choices["entropy"].add_argument("--radii", type=_floats, required=True)
    sub.choices["autocorr"].add_argument("--z-max", type=float, default=5.0)
    sub.choices["diagnose"].add_argument("--k-max", type=float)

    for name in ("patches", "frequencies", "repetitivity"):
        p = add(name)
        p.add_argument("input")
        p.add_argument("--D", type=_floats, required=True)
    sub.choices["frequencies"].add_argument("--anchors", type=int, default=4)
    sub.choices["frequencies"].add_argument("--anchor-length", type=float, default=100.0)
    sub.choices["repetitivity"].add_argument("--anchors", type=int)

    p = add("metric")
    p.add_argument("input")
    p.add_argument("other")
    p.add_argument("--D", type=_floats, default=[])

    p = add("separated")
    p.add_argument("input")
    p.add_argument("--D", type=_floats, required=True)
    p.add_argument("--eps", type=_eps, default="auto")
    p.add_argument("--count", type=int, default=8)
    p.add_argument("--half-width", type=float)

    p = add("theorem-check")
    p.add_argument("input")
    p.add_argument("--D", type=_floats, required=True)
    p.add_argument("--eps", type=_eps, default="auto")
    p.add_argument("--extra", type=int, default=8, help="seeded extra translates in the separated-set sample")

    p = add("kronecker")
    p.add_argument("--torus-dim", type=int, default=2)
    p.add_argument("--D", type=_floats, default=[])
    p.add_argument("--eps", type=_eps, default=0.1)
    p.add_argument("--points", type=int, default=200)

    for name in ("spectrum", "peaks"):
        p = add(name)
        p.add_argument("input")
        p.add_argument("--k-max", type=float)
        p.add_argument("--k-points", type=int)
        p.add_argument("--taper", choices=["none", "hann"], default="none")
    sub.choices["spectrum"].add_argument("--fft", type=int, help="box side for the exact FFT path (integer samples)")

    p = add("mahler")
    p.add_argument("--poly", required=True, help='terms "a,b,re[,im]" separated by spaces')
    p.add_argument("--base-grid", type=int)
    p.add_argument("--max-levels", type=int)

    p = add("dimer")
    p.add_argument("--model", choices=["domino", "lozenge"], default="domino")
    p.add_argument("--sizes", type=_ints, default=[])
    p.add_argument("--compare", action="store_true", help="compare with the Mahler measure of the model polynomial")

    p = add("report")
    p.add_argument("--scale", choices=["quick", "full"], default="quick")
    return parser


def _normalize(argv: Sequence[str]) -> List[str]:
    out, i = [], 0
    argv = list(argv)
    while i < len(argv):
        if argv[i] in _VALUE_OPTIONS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def _run_config(args: argparse.Namespace) -> RunConfig:
    fields = {
        "subcommand": args.subcommand,
        "input": getattr(args, "input", None),
        "output": args.output,
        "format": args.format,
        "seed": args.seed,
        "threads": args.threads,
        "D": getattr(args, "D", []) or [],
        "eps": getattr(args, "eps", None),
        "radii": getattr(args, "radii", []) or [],
        "resolution": args.resolution,
        "z_max": getattr(args, "z_max", None),
        "k_max": getattr(args, "k_max", None),
        "k_points": getattr(args, "k_points", None),
        "base_grid": getattr(args, "base_grid", None),
        "max_levels": getattr(args, "max_levels", None),
        "sizes": getattr(args, "sizes", []) or [],
    }
    return RunConfig(**fields)


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (tuple, set)):
        return list(value)
    raise TypeError(f"not serializable: {type(value).__name__}")


def _metadata(run: RunConfig) -> Dict[str, Any]:
    meta = default_metadata(run.seed)
    meta["config"] = run.echo()
    return meta


def render(result: Any, run: RunConfig) -> str:
    """
    Serialize a handler result with the metadata header
    """
    meta = _metadata(run)
    if isinstance(result, PointSet):
        return format_pointset(result, meta)
    if run.format == "csv" and isinstance(result, dict) and result.get("rows"):
        buffer = io.StringIO()
        for key, value in meta.items():
            buffer.write(f"# {key}={value}\n")
        rows = result["rows"]
        columns = list(dict.fromkeys(k for row in rows for k in row))
        writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: json.dumps(v, default=_json_default) if isinstance(v, (list, dict)) else v for k, v in row.items()})
        return buffer.getvalue()
    return json.dumps({"metadata": meta, "result": result}, sort_keys=True, indent=2, default=_json_default) + "\n"


def dispatch(argv: Sequence[str]) -> int:
    """
    Parse argv, run one subcommand and write its output

    Returns:
        0 on success, 1 on validation or usage errors, 2 on computation errors
    """
    parser = build_parser()
    try:
        args = parser.parse_args(_normalize(argv))
    except UsageError as e:
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return 1
    except SystemExit as e:
        return int(e.code or 0)
    if not args.subcommand:
        parser.print_usage(sys.stderr)
        return 1

    try:
        run = _run_config(args)
        result = _HANDLERS[args.subcommand](args, run)
        text = render(result, run)
        if run.output:
            Path(run.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return 0
    except pydantic.ValidationError as e:
        logger.error("invalid options", extra={"subcommand": args.subcommand, "errors": e.error_count()})
        print(f"{parser.prog}: invalid options: {e}", file=sys.stderr)
        return 1
    except FlcError as e:
        logger.error("command failed", extra={"subcommand": args.subcommand, "error": type(e).__name__})
        print(f"{parser.prog}: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"{parser.prog}: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        logger.exception("unexpected failure", extra={"subcommand": args.subcommand})
        print(f"{parser.prog}: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
