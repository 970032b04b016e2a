"""``powerscale-sense`` command line interface.

Exit status: 0 clean, 3 when any importance weights were flagged unreliable,
1 on error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import io as pio
from .draws import DrawsMatrix, parse_quantities, validate_draws, weighted_ecdf
from .errors import PowerscaleError
from .evaluator import DEFAULT_TIMEOUT, SubprocessEvaluator
from .oracles import builtin_evaluator, fit_model, parse_oracle
from .powerscale import COMPONENTS, AlphaGrid, whiten
from .psis import KHAT_THRESHOLD
from .sensitivity import (
    DEFAULT_DELTA,
    DEFAULT_THRESHOLD,
    powerscale_sensitivity,
    powerscale_sequence,
    quantity_estimate,
    quantity_sensitivity,
    weighted_quantity,
)

EXIT_OK, EXIT_ERROR, EXIT_FLAGGED = 0, 1, 3
DEFAULT_QUANTITIES = "mean,sd,median,q05,q95"


@dataclass
class RunConfig:
    input: Optional[str] = None
    format: Optional[str] = None
    oracle: Optional[str] = None
    draws: int = 4000
    component: str = "both"
    grid: AlphaGrid = field(default_factory=AlphaGrid)
    delta: float = DEFAULT_DELTA
    threshold: float = DEFAULT_THRESHOLD
    quantities: str = DEFAULT_QUANTITIES
    variables: Optional[list] = None
    moment_match: bool = False
    evaluator: Optional[str] = None
    evaluator_timeout: float = DEFAULT_TIMEOUT
    whiten: bool = False
    output: str = "table"
    plot_data: Optional[str] = None
    figures: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.delta < 0.5:
            raise ValueError(f"--delta must be in (0, 0.5), got {self.delta}")
        if not self.threshold > 0:
            raise ValueError(f"--threshold must be positive, got {self.threshold}")
        if (self.input is None) == (self.oracle is None):
            raise ValueError("give exactly one of --input or --oracle")
        if self.evaluator and not self.moment_match:
            raise ValueError("--evaluator only makes sense with --moment-match")
        if self.moment_match and not (self.evaluator or self.oracle):
            raise ValueError("--moment-match needs --evaluator (or a built-in --oracle)")

    @property
    def components(self) -> tuple:
        return COMPONENTS if self.component == "both" else (self.component,)

    @property
    def stabilize(self) -> str:
        return "iwmm" if self.moment_match else "psis"

    def settings(self) -> dict:
        return {
            "delta": self.delta,
            "threshold": self.threshold,
            "khat_threshold": KHAT_THRESHOLD,
            "stabilize": self.stabilize,
        }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="powerscale-sense",
        description="Prior and likelihood power-scaling sensitivity from posterior draws.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("input")
    src.add_argument("--input", help="draws file (CSV or NDJSON)")
    src.add_argument("--format", choices=("csv", "ndjson"), help="draws file format (default: from extension)")
    src.add_argument("--oracle", help="built-in model, e.g. 'normal-normal:mu0=0,s0=2.5,sigma=1,y=10'")
    src.add_argument("--draws", type=int, default=4000, help="number of exact draws for --oracle")
    src.add_argument("--seed", type=int, default=0)
    opt = common.add_argument_group("analysis")
    opt.add_argument("--component", choices=("prior", "likelihood", "both"), default="both")
    opt.add_argument("--alpha-lower", type=float, default=0.5)
    opt.add_argument("--alpha-upper", type=float, default=2.0)
    opt.add_argument("--alpha-count", type=int, default=11)
    opt.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    opt.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    opt.add_argument("--quantities", default=DEFAULT_QUANTITIES)
    opt.add_argument("--variables", help="comma-separated glob patterns selecting parameters")
    opt.add_argument("--whiten", action="store_true", help="analyse ZCA-whitened parameter combinations")
    opt.add_argument("--moment-match", action="store_true", help="adapt unreliable weights by moment matching")
    opt.add_argument("--evaluator", help="command speaking the NDJSON density-evaluator protocol")
    opt.add_argument("--evaluator-timeout", type=float, default=DEFAULT_TIMEOUT)
    out = common.add_argument_group("output")
    out.add_argument("--output", choices=("table", "json", "csv"), default="table")
    out.add_argument("--plot-data", help="directory for tidy plot datasets")
    out.add_argument("--figures", action="store_true", help="also render PNG figures into --plot-data")

    sub.add_parser("sensitivity", parents=[common], help="local prior/likelihood sensitivity and diagnosis")
    sub.add_parser("sequence", parents=[common], help="weighted ECDFs and quantities over an alpha grid")
    sub.add_parser("quantities", parents=[common], help="quantity derivatives at alpha = 1")
    return parser


def config_from_args(args) -> RunConfig:
    return RunConfig(
        input=args.input,
        format=args.format,
        oracle=args.oracle,
        draws=args.draws,
        component=args.component,
        grid=AlphaGrid(args.alpha_lower, args.alpha_upper, args.alpha_count),
        delta=args.delta,
        threshold=args.threshold,
        quantities=args.quantities,
        variables=args.variables.split(",") if args.variables else None,
        moment_match=args.moment_match,
        evaluator=args.evaluator,
        evaluator_timeout=args.evaluator_timeout,
        whiten=args.whiten,
        output=args.output,
        plot_data=args.plot_data,
        figures=args.figures,
        seed=args.seed,
    )


def load(config: RunConfig):
    """Draws, selected parameter names and the density evaluator (or None)."""
    evaluator = None
    if config.oracle:
        model = parse_oracle(config.oracle)
        draws = fit_model(model, config.draws, config.seed)
        if config.moment_match and not config.evaluator:
            evaluator = builtin_evaluator(model)
    else:
        draws = pio.read_draws(config.input, config.format)
    if config.evaluator:
        evaluator = SubprocessEvaluator(config.evaluator, config.evaluator_timeout)
    validate_draws(draws)
    if config.whiten:
        if evaluator is not None:
            raise ValueError("--whiten cannot be combined with --moment-match")
        draws, _ = whiten(draws)
    names = pio.select_variables(draws.parameter_names, config.variables)
    return draws, names, evaluator


def run_sensitivity(config: RunConfig) -> tuple[dict, int]:
    draws, names, evaluator = load(config)
    records = powerscale_sensitivity(
        draws, config.delta, config.threshold, config.stabilize, evaluator, parameters=names
    )
    report = pio.sensitivity_report(records, config.settings(), draws.n_draws)
    return report, EXIT_FLAGGED if report["flagged"] else EXIT_OK


def sequence_rows(draws: DrawsMatrix, names, config: RunConfig, evaluator=None):
    """ECDF and quantity dataset rows plus per-perturbation diagnostics, deterministically ordered."""
    quantities = [q for q in parse_quantities(config.quantities) if q.kind != "ecdf"]
    sequences = {
        c: powerscale_sequence(draws, c, config.grid, config.stabilize, evaluator) for c in config.components
    }
    ecdf_rows, quantity_rows = [], []
    for name in names:
        for comp in config.components:
            for pp in sequences[comp]:
                e = pp.ecdf(name)
                ecdf_rows.extend((name, comp, pp.alpha, x, c) for x, c in zip(e.points, e.cum_weights))
                for q in quantities:
                    est, se = quantity_estimate(pp, name, q)
                    quantity_rows.append((name, comp, pp.alpha, q.label, est, se))
    diag_rows = [
        {
            "component": comp,
            "alpha": pp.alpha,
            "khat": float(pp.weights.khat),
            "reliable": bool(pp.reliable),
            "method": pp.method,
        }
        for comp in config.components
        for pp in sequences[comp]
    ]
    return ecdf_rows, quantity_rows, diag_rows


def run_sequence(config: RunConfig) -> tuple[dict, int]:
    if not config.plot_data:
        raise ValueError("sequence needs --plot-data DIR")
    draws, names, evaluator = load(config)
    ecdf_rows, quantity_rows, diag_rows = sequence_rows(draws, names, config, evaluator)
    outdir = Path(config.plot_data)
    outdir.mkdir(parents=True, exist_ok=True)
    pio.write_dataset(outdir / "ecdf.csv", pio.ECDF_COLUMNS, ecdf_rows)
    pio.write_dataset(outdir / "quantities.csv", pio.QUANTITY_COLUMNS, quantity_rows)
    files = ["ecdf.csv", "quantities.csv"]
    if config.figures:
        files += render_figures(draws, names, config, ecdf_rows, quantity_rows, outdir)
    report = {
        "schema_version": pio.SCHEMA_VERSION,
        "command": "sequence",
        "settings": {**config.settings(), "alphas": sorted({r["alpha"] for r in diag_rows})},
        "columns": ["component", "alpha", "khat", "reliable", "method"],
        "significant": ["khat"],
        "rows": [{**r, "khat": None if np.isnan(r["khat"]) else r["khat"]} for r in diag_rows],
        "files": files,
    }
    flagged = not all(r["reliable"] for r in diag_rows)
    return report, EXIT_FLAGGED if flagged else EXIT_OK


def render_figures(draws, names, config, ecdf_rows, quantity_rows, outdir) -> list[str]:
    from .plotting import plot_ecdf_sequence, plot_quantity_sequence

    S = draws.n_draws
    uniform = np.full(S, 1.0 / S)
    base_ecdf = {}
    base_q = {}
    for name in names:
        e = weighted_ecdf(draws.column(name), uniform)
        base_ecdf[name] = (e.points, e.cum_weights)
        for q in parse_quantities(config.quantities):
            if q.kind != "ecdf":
                base_q[(name, q.label)] = weighted_quantity(draws.column(name), uniform, q)
    plot_ecdf_sequence(ecdf_rows, outdir / "ecdf.png", base_ecdf)
    plot_quantity_sequence(quantity_rows, outdir / "quantities.png", base_q)
    return ["ecdf.png", "quantities.png"]


def run_quantities(config: RunConfig) -> tuple[dict, int]:
    draws, names, _ = load(config)
    rows = []
    for name in names:
        for comp in config.components:
            for q in parse_quantities(config.quantities):
                if q.kind == "ecdf":
                    continue
                qs = quantity_sensitivity(draws, name, comp, q, config.delta)
                rows.append(
                    {
                        "parameter": name,
                        "component": comp,
                        "quantity": q.label,
                        "estimate": qs.base,
                        "mcse": qs.base_mcse,
                        "derivative": qs.derivative,
                    }
                )
    report = {
        "schema_version": pio.SCHEMA_VERSION,
        "command": "quantities",
        "settings": config.settings(),
        "columns": ["parameter", "component", "quantity", "estimate", "mcse", "derivative"],
        "significant": ["estimate", "mcse", "derivative"],
        "rows": rows,
    }
    if config.plot_data:
        outdir = Path(config.plot_data)
        outdir.mkdir(parents=True, exist_ok=True)
        _, quantity_rows, _ = sequence_rows(draws, names, config)
        pio.write_dataset(outdir / "quantities.csv", pio.QUANTITY_COLUMNS, quantity_rows)
    return report, EXIT_OK


COMMANDS = {"sensitivity": run_sensitivity, "sequence": run_sequence, "quantities": run_quantities}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        report, code = COMMANDS[args.command](config)
    except (PowerscaleError, ValueError, OSError) as err:
        stderr.write(f"powerscale-sense: error: {err}\n")
        return EXIT_ERROR
    stdout.write(pio.render_report(report, config.output))
    if code == EXIT_FLAGGED:
        stderr.write("powerscale-sense: warning: some importance weights are unreliable (khat > 0.7)\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
