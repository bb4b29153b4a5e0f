"""Command-line pipeline driver.

Exit codes: 0 success, 2 configuration error, 3 convergence-gate failure,
4 data error.  All artifacts land under ``--out``.
"""

import argparse
import sys
from dataclasses import replace

from .config import default_config, load_config
from .errors import (
    EXIT_CONFIG,
    EXIT_CONVERGENCE,
    EXIT_DATA,
    EXIT_OK,
    ConfigError,
    ConvergenceError,
    DataError,
)
from .study import run_task


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modassess",
        description=(
            "Bayesian updating and expected-utility assessment of structural "
            "deterioration models on strain-monitoring data."
        ),
    )
    parser.add_argument("--config", metavar="PATH", help="TOML study configuration")
    parser.add_argument("--seed", type=int, metavar="U64", help="override the config seed")
    parser.add_argument(
        "--out", default="out", metavar="DIR", help="artifact directory (default: out)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("generate", help="simulate the three-phase strain record")
    sub.add_parser("fit-surrogate", help="train polynomial response surfaces")
    sub.add_parser("sysid", help="infer Young's modulus from phase-1 data")
    sub.add_parser("diagnose", help="infer thickness loss from phase-3 data")
    sub.add_parser(
        "prognose", help="fit both deterioration laws and emit predictive bands"
    )
    assess = sub.add_parser("assess", help="score candidates against the oracle")
    assess.add_argument(
        "--task",
        required=True,
        choices=["sysid", "diagnosis", "prognosis-logistic", "prognosis-powerlaw"],
    )
    sub.add_parser("report", help="summarize all artifacts into summary.json")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else default_config()
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        task_name = args.command
        if task_name == "assess":
            task_name = f"assess-{args.task}"
        result = run_task(config, task_name, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"convergence gate: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA

    _print_result(task_name, result)
    return EXIT_OK


def _print_result(task_name: str, result) -> None:
    if task_name == "generate":
        print(f"wrote {result}")
    elif task_name == "fit-surrogate":
        for cid, r2 in result.items():
            print(
                f"{cid}: strain r2={r2['strain_r2']:.4f} "
                f"demand r2={r2['demand_r2']:.4f}"
            )
    elif task_name in ("sysid", "diagnose"):
        for cid, entry in result.items():
            rhat = max(entry["convergence"]["rhat"].values())
            print(f"{cid}: max R-hat {rhat:.4f}, MAP {entry['map']}")
    elif task_name == "prognose":
        for det, entries in result.items():
            worst = max(
                max(e["convergence"]["rhat"].values()) for e in entries.values()
            )
            print(f"prognosis-{det}: {len(entries)} posteriors, max R-hat {worst:.4f}")
    elif task_name.startswith("assess-"):
        print(
            f"task={result['task']} oracle={result['oracle']} "
            f"attribute={result['data_attribute']}"
        )
        for row in result["candidates"]:
            print(
                f"  {row['id']}: u_nmse={row['u_nmse']:.4f} "
                f"u_lik={row['u_lik']:.4f} u_pf={row['u_pf']:.4f} "
                f"unified={row['u_unified']:.4f}"
            )
    elif task_name == "report":
        stages = ", ".join(sorted(result["stages"])) or "none"
        assessments = ", ".join(sorted(result["assessments"])) or "none"
        print(f"stages: {stages}")
        print(f"assessments: {assessments}")


if __name__ == "__main__":
    sys.exit(main())
