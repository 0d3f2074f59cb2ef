"""Command-line surface: build, query, serve, eval, dataset, bounds."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bounds as bounds_mod
from . import dataset as dataset_mod
from .config import Config, load_config
from .engine import build_dataset, build_workspace, load_workspace
from .errors import ZfdtError
from .metrics import MetricWeights, evaluate_suite, load_rule_table
from .metrics.rules import RuleTable

DEFAULT_RULES = Path(__file__).parent / "data" / "incompatible_pairs.tsv"
FIXTURE_CORPUS = Path(__file__).parent / "data" / "fixture_corpus.jsonl"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _add_client_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON config file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--endpoint", help="remote client base URL")
    parser.add_argument("--api-key-env", dest="api_key_env")
    parser.add_argument(
        "--stub", action="store_true", default=None, help="force deterministic clients"
    )


def _config_from_args(args: argparse.Namespace) -> Config:
    config = load_config(getattr(args, "config", None))
    overrides = {
        key: getattr(args, key, None)
        for key in (
            "chunk_size",
            "top_k",
            "beam_width",
            "resolution",
            "seed",
            "endpoint",
            "api_key_env",
        )
    }
    if getattr(args, "stub", None):
        overrides["stub"] = True
    elif getattr(args, "endpoint", None):
        overrides["stub"] = False
    return config.with_overrides(**overrides)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zfdt",
        description="Graph-based retrieval-augmented generation engine for formula corpora",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="ingest a corpus and build all stage artifacts")
    p_build.add_argument("corpus", type=Path)
    p_build.add_argument("--workspace", type=Path, required=True)
    p_build.add_argument("--chunk-size", dest="chunk_size", type=int)
    p_build.add_argument("--resolution", type=float)
    _add_client_flags(p_build)

    p_query = sub.add_parser("query", help="answer one symptom query from a workspace")
    p_query.add_argument("workspace", type=Path)
    p_query.add_argument("symptoms")
    p_query.add_argument("--top-k", dest="top_k", type=int)
    p_query.add_argument("--beam-width", dest="beam_width", type=int)
    p_query.add_argument("--trace", action="store_true")
    _add_client_flags(p_query)

    p_serve = sub.add_parser("serve", help="serve the query endpoint over HTTP")
    p_serve.add_argument("workspace", type=Path)
    p_serve.add_argument("--bind", default="127.0.0.1:8000")
    _add_client_flags(p_serve)

    p_eval = sub.add_parser("eval", help="score outputs against references")
    p_eval.add_argument("workspace", type=Path)
    p_eval.add_argument("outputs", type=Path)
    p_eval.add_argument("references", type=Path)
    p_eval.add_argument("--rules", type=Path, default=DEFAULT_RULES)
    p_eval.add_argument("--json-out", type=Path)
    p_eval.add_argument("--tsv-out", type=Path)
    _add_client_flags(p_eval)

    p_dataset = sub.add_parser("dataset", help="export instruction datasets")
    p_dataset.add_argument("workspace", type=Path)
    p_dataset.add_argument("--kind", choices=("sft", "dpo"), required=True)
    p_dataset.add_argument("--out", type=Path, required=True)
    p_dataset.add_argument("--limit", type=int, default=10)
    p_dataset.add_argument("--top-k", dest="top_k", type=int)
    _add_client_flags(p_dataset)

    p_bounds = sub.add_parser("bounds", help="verify one of the four toy-model bounds")
    p_bounds.add_argument("proposition", type=int, choices=(1, 2, 3, 4))
    p_bounds.add_argument("--beta", type=float, default=0.2)
    p_bounds.add_argument("--seed", type=int, default=42)
    p_bounds.add_argument("--steps", type=int)
    p_bounds.add_argument("--trials", type=int, default=10_000)
    p_bounds.add_argument("--json-out", type=Path)

    return parser


def _read_texts(path: Path) -> list[str]:
    texts = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        texts.append(obj["text"] if isinstance(obj, dict) else str(obj))
    return texts


def cmd_build(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    state = build_workspace(args.corpus, args.workspace, config)
    print(f"workspace ready at {state.workspace} ({len(state.corpus.records)} records, "
          f"{len(state.graph.entities)} entities, {len(state.leaves)} leaf communities)")
    return EXIT_OK


def cmd_query(args: argparse.Namespace) -> int:
    if not (args.workspace / "manifest.json").exists():
        print(f"error: no workspace at {args.workspace}", file=sys.stderr)
        return EXIT_USAGE
    state = load_workspace(args.workspace, _config_from_args(args))
    result = state.query(args.symptoms, top_k=args.top_k, beam_width=args.beam_width)
    print(result.answer)
    if args.trace:
        print("--- trace ---", file=sys.stderr)
        for event in result.trace:
            print(json.dumps(event), file=sys.stderr)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    state = load_workspace(args.workspace, _config_from_args(args))
    host, _, port = args.bind.rpartition(":")
    app = create_app(state=state)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    state = load_workspace(args.workspace, _config_from_args(args))
    outputs = _read_texts(args.outputs)
    references = _read_texts(args.references)
    if len(outputs) != len(references):
        print(
            f"error: {len(outputs)} outputs vs {len(references)} references",
            file=sys.stderr,
        )
        return EXIT_USAGE
    rules = load_rule_table(args.rules) if args.rules else RuleTable()
    report = evaluate_suite(outputs, references, state.graph, rules, MetricWeights())
    print(report.to_tsv())
    if args.json_out:
        args.json_out.write_text(report.to_json(), encoding="utf-8")
    if args.tsv_out:
        args.tsv_out.write_text(report.to_tsv() + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_dataset(args: argparse.Namespace) -> int:
    state = load_workspace(args.workspace, _config_from_args(args))
    records = build_dataset(state, args.kind, args.limit)
    dataset_mod.export(records, args.out, args.kind)
    print(f"wrote {len(records)} {args.kind} records to {args.out}")
    return EXIT_OK


def cmd_bounds(args: argparse.Namespace) -> int:
    reports: list[bounds_mod.BoundReport] = []
    if args.proposition == 1:
        world = bounds_mod.default_prop1_world(seed=args.seed)
        config = bounds_mod.PROP1_CONFIG.with_overrides(
            gamma_threshold=bounds_mod.mutual_information(world),
            **({"steps": args.steps} if args.steps else {}),
        )
        reports.append(bounds_mod.verify_prop1(world, config))
    elif args.proposition == 2:
        instance = bounds_mod.default_prop2_instance(seed=args.seed, beta=args.beta)
        config = instance.config.with_overrides(**({"steps": args.steps} if args.steps else {}))
        reports.append(bounds_mod.verify_prop2(instance.world, instance.prefs, config))
    elif args.proposition == 3:
        for epsilon, delta in bounds_mod.DEFAULT_PROP3_CASES:
            world = bounds_mod.default_prop3_world(epsilon, delta, seed=args.seed)
            config = bounds_mod.BoundsConfig(
                beta=args.beta, rng_seed=args.seed, steps=args.steps or 50, trials=args.trials
            )
            reports.append(bounds_mod.verify_prop3(world, config))
    else:
        instance = bounds_mod.default_prop4_instance(beta=args.beta)
        config = instance.config.with_overrides(**({"steps": args.steps} if args.steps else {}))
        reports.append(bounds_mod.verify_prop4(instance.prefs, config))

    all_ok = all(r.satisfied for r in reports)
    print("proposition  bound_lhs      bound_rhs      satisfied")
    for report in reports:
        print(
            f"{report.proposition:<12} {report.bound_lhs:<14.6g} "
            f"{report.bound_rhs:<14.6g} {'pass' if report.satisfied else 'FAIL'}"
        )
    if args.json_out:
        args.json_out.write_text(
            json.dumps([r.to_dict() for r in reports], indent=2), encoding="utf-8"
        )
    return EXIT_OK if all_ok else EXIT_FAILURE


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "build": cmd_build,
        "query": cmd_query,
        "serve": cmd_serve,
        "eval": cmd_eval,
        "dataset": cmd_dataset,
        "bounds": cmd_bounds,
    }
    try:
        return handlers[args.command](args)
    except ZfdtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
