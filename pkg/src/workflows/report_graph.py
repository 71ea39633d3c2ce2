import logging
from dataclasses import asdict
from typing import Any, Dict, List, Literal, TypedDict

from langgraph.graph import END, StateGraph

from src.core.geometry import verify_delone
from src.diffraction.peaks import pure_point_diagnostic
from src.generators.lattices import integer_lattice
from src.generators.model_sets import fibonacci_model_set
from src.generators.substitution import substitution_chain, thue_morse_rule
from src.generators.visible import visible_points
from src.hullmetric.kronecker import KroneckerSystem, kronecker_entropy_demo
from src.hullmetric.theorem import check_htop_equals_hpc, epsilon0
from src.mahler.dimer_entropy import mahler_vs_dimer_report
from src.models.errors import FlcError
from src.patchstat.entropy import entropy_estimate
from src.patchstat.patches import admissible_centers, patch_count
from src.patchstat.repetitivity import check_repetitivity_bound

logger = logging.getLogger(__name__)

Scale = Literal["quick", "full"]

# Sample sizes per scale
_SIZES = {
    "quick": {"fibonacci": 2000.0, "thue_morse": 11, "visible": 300, "lattice": 200, "kronecker": 100},
    "full": {"fibonacci": 8000.0, "thue_morse": 13, "visible": 1000, "lattice": 500, "kronecker": 200},
}


class ReportState(TypedDict):
    scale: Scale
    seed: int
    threads: int
    samples: Dict[str, Any]
    results: Dict[str, Any]
    failures: List[Dict[str, str]]


def _guarded(name: str, state: ReportState, compute) -> ReportState:
    """
    Run one report section, recording failures instead of aborting the workflow
    """
    try:
        value = compute()
        return {**state, "results": {**state["results"], name: value}}
    except FlcError as e:
        logger.warning("report section failed", extra={"section": name, "error": str(e)})
        return {**state, "failures": state["failures"] + [{"section": name, "error": f"{type(e).__name__}: {e}"}]}


def generate_samples(state: ReportState) -> ReportState:
    sizes = _SIZES[state["scale"]]
    samples = {
        "lattice": integer_lattice(1, sizes["lattice"]),
        "lattice2": integer_lattice(2, sizes["lattice"] // 10),
        "fibonacci": fibonacci_model_set(sizes["fibonacci"]),
        "thue_morse": substitution_chain(thue_morse_rule(weighted=True), sizes["thue_morse"], "a"),
        "visible": visible_points(sizes["visible"]),
    }
    return {**state, "samples": samples}


def patch_statistics(state: ReportState) -> ReportState:
    samples, threads = state["samples"], state["threads"]

    def compute():
        radii = [float(n) for n in range(10, 51, 10)]
        lattice = {name: [patch_count(samples[name], D, threads) for D in (1.0, 2.0, 4.0)] for name in ("lattice", "lattice2")}
        fib = entropy_estimate(samples["fibonacci"], radii, threads)
        visible = entropy_estimate(samples["visible"], [float(n) for n in range(1, 7)], threads)
        visible_delone = verify_delone(samples["visible"], first_hole=True)
        repetitivity = [check_repetitivity_bound(samples["fibonacci"], D, threads=threads) for D in (2.0, 4.0, 8.0, 16.0)]
        ratios = [r["F_hat"] / r["D"] for r in repetitivity]
        return {
            "lattice_patch_counts": lattice,
            "fibonacci_entropy": fib.to_rows(),
            "fibonacci_decay": fib.values[0] / fib.values[-1] if fib.values[-1] > 0 else None,
            "visible_entropy": visible.to_rows(),
            # share of admissible centres carrying a distinct patch
            "visible_saturation": [
                c / len(admissible_centers(samples["visible"], n)) for n, c in zip(visible.radii, visible.counts)
            ],
            "visible_delone": asdict(visible_delone),
            "repetitivity": repetitivity,
            "repetitivity_ratio_spread": max(ratios) / min(ratios),
        }

    return _guarded("patch_statistics", state, compute)


def hull_checks(state: ReportState) -> ReportState:
    fib = state["samples"]["fibonacci"]

    def compute():
        eps = 0.9 * epsilon0(fib.packing_radius, fib.covering_radius)
        D_list = [4.0, 8.0] if state["scale"] == "quick" else [4.0, 8.0, 12.0]
        theorem = check_htop_equals_hpc(fib, D_list, eps, seed=state["seed"])
        system = KroneckerSystem.square_roots_of_primes(2)
        sizes = kronecker_entropy_demo(system, 0.1, [1.0, 10.0, 100.0], _SIZES[state["scale"]]["kronecker"])
        return {"theorem": theorem, "kronecker_sizes": sizes, "kronecker_constant": len(set(sizes)) == 1}

    return _guarded("hull_checks", state, compute)


def diffraction_checks(state: ReportState) -> ReportState:
    samples = state["samples"]

    def compute():
        return {name: pure_point_diagnostic(samples[name]).to_dict() for name in ("fibonacci", "thue_morse", "visible")}

    return _guarded("diffraction", state, compute)


def mahler_checks(state: ReportState) -> ReportState:
    return _guarded("mahler", state, lambda: {m: mahler_vs_dimer_report(m) for m in ("domino", "lozenge")})


def wants_mahler(state: ReportState) -> str:
    return "mahler" if state["scale"] == "full" else "done"


def create_report_workflow():
    """
    Create the LangGraph workflow that runs the acceptance report
    """
    builder = StateGraph(ReportState)
    builder.add_node("generate_samples", generate_samples)
    builder.add_node("patch_statistics", patch_statistics)
    builder.add_node("hull_checks", hull_checks)
    builder.add_node("diffraction_checks", diffraction_checks)
    builder.add_node("mahler_checks", mahler_checks)

    builder.set_entry_point("generate_samples")
    builder.add_edge("generate_samples", "patch_statistics")
    builder.add_edge("patch_statistics", "hull_checks")
    builder.add_edge("hull_checks", "diffraction_checks")
    # the dimer counts dominate the runtime, so quick reports stop here
    builder.add_conditional_edges("diffraction_checks", wants_mahler, {"mahler": "mahler_checks", "done": END})
    builder.add_edge("mahler_checks", END)
    return builder.compile()


report_workflow = create_report_workflow()


def run_report(scale: Scale = "quick", seed: int = 0, threads: int = 1) -> Dict[str, Any]:
    """
    Invoke the report workflow

    Returns:
        {"scale", "results", "failures"}; point-set samples are not included
    """
    initial: ReportState = {"scale": scale, "seed": seed, "threads": threads, "samples": {}, "results": {}, "failures": []}
    final = report_workflow.invoke(initial)
    return {"scale": scale, "results": final["results"], "failures": final["failures"]}
