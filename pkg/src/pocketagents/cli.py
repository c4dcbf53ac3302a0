"""Command-line harness: run, eval, flatten, validate, recall, compress-report,
gen-fixtures.

Exit codes: 0 success, 1 config error, 2 partial failure, 3 validation failure.
Only the backend auth token comes from the environment; everything else lives
in the JSON config file (overridable by flags).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .catalog import AgentKind, ToolCatalog, default_catalog, load_catalog
from .config import ConfigError, RunConfig, RunManifest
from .dataset import (
    Trajectory,
    flatten,
    load_trajectories,
    save_pairs,
    save_trajectories,
    validate_dataset,
)
from .device import load_device_states
from .fixtures import write_fixtures
from .metrics import QueryIdMismatch, TrigramSimilarity, evaluate_corpus
from .prompts import COMPRESSED, FULL_TEXT, PromptMode, ProviderUnavailable, retrieved, token_report
from .retrieval import LexicalRetriever, recall_curve
from .runtime import EpisodeConfig, HttpBackend, ScriptedOracle, run_episode

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2
EXIT_VALIDATION = 3


def _load_catalog(config: RunConfig) -> ToolCatalog:
    path = config.get("catalog")
    return load_catalog(Path(path)) if path else default_catalog()


def _prompt_mode(config: RunConfig) -> PromptMode:
    mode = config["prompt_mode"]
    if mode == "full_text":
        return FULL_TEXT
    if mode == "compressed":
        return COMPRESSED
    return retrieved(int(config["k"]))


def _similarity_provider(config: RunConfig):
    spec = config["similarity"]
    if spec.get("type") == "sidecar":
        from .sidecar_client import SidecarClient, SidecarSimilarityProvider

        return SidecarSimilarityProvider(SidecarClient(spec["endpoint"]))
    return TrigramSimilarity()


def _backend(config: RunConfig, gold: list[Trajectory], catalog: ToolCatalog):
    spec = config["backend"]
    if spec["type"] == "oracle":
        return ScriptedOracle(gold, catalog)
    return HttpBackend(
        endpoint=spec["endpoint"],
        model=spec.get("model"),
        temperature=float(spec.get("temperature", 0.0)),
        seed=spec.get("seed"),
        max_tokens=spec.get("max_tokens"),
        timeout=float(spec.get("timeout", 30.0)),
        retries=int(spec.get("retries", 2)),
    )


def _out_dir(config: RunConfig) -> Path:
    out = Path(config["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_report(path: Path, doc: dict, manifest: RunManifest) -> None:
    doc = {"config_hash": manifest.config_hash} | doc
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    manifest.register_output(path)


def cmd_run(config: RunConfig) -> int:
    if not config.get("dataset") or not config.get("device_states"):
        print("run needs dataset and device_states paths", file=sys.stderr)
        return EXIT_CONFIG
    catalog = _load_catalog(config)
    gold = load_trajectories(config["dataset"])
    states = load_device_states(config["device_states"], catalog)
    backend = _backend(config, gold, catalog)
    episode_config = EpisodeConfig(
        max_steps=int(config["max_steps"]),
        mode=_prompt_mode(config),
        include_instruction=bool(config["include_instruction"]),
        baseline_mode=bool(config["baseline_mode"]),
        catalog=catalog,
    )
    manifest = RunManifest.start(config)
    out = _out_dir(config)

    def one(trajectory: Trajectory) -> Trajectory:
        state = states[trajectory.device_state_ref].clone_for_episode()
        predicted = run_episode(
            backend, state, trajectory.query, episode_config, query_id=trajectory.query_id
        )
        predicted.split = trajectory.split
        return predicted

    started = time.perf_counter()
    ordered = sorted(gold, key=lambda t: t.query_id)
    jobs = int(config["jobs"])
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            predictions = list(pool.map(one, ordered))
    else:
        predictions = [one(t) for t in ordered]
    manifest.timings["run_seconds"] = time.perf_counter() - started

    predictions.sort(key=lambda t: t.query_id)
    pred_path = out / "predictions.jsonl"
    save_trajectories(predictions, pred_path)
    manifest.register_output(pred_path)
    manifest.save(out / "manifest.json")

    failures = [t for t in predictions if t.status != "completed"]
    for t in failures:
        print(f"{t.query_id}: {t.status} ({t.abort_reason or 'step budget exhausted'})", file=sys.stderr)
    print(f"wrote {pred_path} ({len(predictions)} trajectories, {len(failures)} not completed)")
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_eval(config: RunConfig, gold_path: str, pred_path: str) -> int:
    for path in (gold_path, pred_path):
        if not Path(path).exists():
            print(f"no such trajectory file: {path}", file=sys.stderr)
            return EXIT_CONFIG
    catalog = _load_catalog(config)
    gold = {t.query_id: t for t in load_trajectories(gold_path)}
    pred = {t.query_id: t for t in load_trajectories(pred_path)}
    missing_pred = sorted(set(gold) - set(pred))
    missing_gold = sorted(set(pred) - set(gold))
    if missing_pred or missing_gold:
        mismatch = QueryIdMismatch(missing_pred, missing_gold)
        print(str(mismatch), file=sys.stderr)
        return EXIT_VALIDATION
    provider = _similarity_provider(config)
    pairs = [
        (query_id, gold[query_id].final_plan, pred[query_id].final_plan)
        for query_id in sorted(gold)
    ]
    report = evaluate_corpus(
        pairs,
        provider=provider,
        threshold=float(config["threshold"]),
        catalog=catalog,
        averaging=config["averaging"],
    )
    manifest = RunManifest.start(config)
    out = _out_dir(config)
    _write_report(out / "eval_report.json", report.to_json(), manifest)
    manifest.save(out / "eval_manifest.json")
    print(report.format_table())
    return EXIT_OK


def cmd_compress_report(config: RunConfig) -> int:
    catalog = _load_catalog(config)
    report = token_report(catalog)
    manifest = RunManifest.start(config)
    out = _out_dir(config)
    _write_report(out / "compression_report.json", report.to_json(), manifest)
    manifest.save(out / "compression_manifest.json")
    print(report.format_table())
    return EXIT_OK


def cmd_recall(config: RunConfig, agents: list[str], k_max: int | None) -> int:
    if not config.get("dataset"):
        print("recall needs a dataset path", file=sys.stderr)
        return EXIT_CONFIG
    catalog = _load_catalog(config)
    trajectories = load_trajectories(config["dataset"])
    retriever = LexicalRetriever()
    manifest = RunManifest.start(config)
    out = _out_dir(config)
    curves = []
    for name in agents:
        agent = AgentKind(name)
        candidates = catalog.owned_by(agent)
        ks = range(1, (k_max or len(candidates)) + 1)
        gold_sets = [(t.query, t.gold_tools(agent)) for t in trajectories]
        curve = recall_curve(gold_sets, candidates, agent, retriever, ks)
        curves.append(curve)
        print(curve.format_table())
    _write_report(out / "recall_curves.json", {"curves": [c.to_json() for c in curves]}, manifest)
    manifest.save(out / "recall_manifest.json")
    return EXIT_OK


def cmd_flatten(config: RunConfig) -> int:
    if not config.get("dataset"):
        print("flatten needs a dataset path", file=sys.stderr)
        return EXIT_CONFIG
    catalog = _load_catalog(config)
    trajectories = load_trajectories(config["dataset"])
    states = (
        load_device_states(config["device_states"], catalog) if config.get("device_states") else None
    )
    pairs = flatten(
        trajectories,
        catalog,
        states,
        mode=_prompt_mode(config),
        include_instruction=bool(config["include_instruction"]),
    )
    manifest = RunManifest.start(config)
    out = _out_dir(config)
    pairs_path = out / "pairs.jsonl"
    save_pairs(pairs, pairs_path, header={"config_hash": manifest.config_hash})
    manifest.register_output(pairs_path)
    manifest.save(out / "flatten_manifest.json")
    print(f"wrote {pairs_path} ({len(pairs)} pairs from {len(trajectories)} queries)")
    return EXIT_OK


def cmd_validate(config: RunConfig) -> int:
    if not config.get("dataset"):
        print("validate needs a dataset path", file=sys.stderr)
        return EXIT_CONFIG
    catalog = _load_catalog(config)
    trajectories = load_trajectories(config["dataset"])
    states = (
        load_device_states(config["device_states"], catalog) if config.get("device_states") else None
    )
    report = validate_dataset(trajectories, catalog, states, released=bool(config["released"]))
    manifest = RunManifest.start(config)
    out = _out_dir(config)
    _write_report(out / "validation_report.json", report.to_json(), manifest)
    manifest.save(out / "validate_manifest.json")
    for message in report.violations:
        print(f"violation: {message}", file=sys.stderr)
    for message in report.warnings:
        print(f"warning: {message}")
    print(f"queries={report.counts.get('queries')} pairs={report.counts.get('pairs')} clean={report.clean}")
    return EXIT_OK if report.clean else EXIT_VALIDATION


def cmd_gen_fixtures(config: RunConfig, out_dir: str | None) -> int:
    target = out_dir or str(_out_dir(config) / "fixtures")
    written = write_fixtures(target, int(config["seed"]))
    for name, path in written.items():
        print(f"{name}: {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pocketagents", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--dataset", help="trajectory JSONL path")
        p.add_argument("--device-states", dest="device_states", help="device states JSONL path")
        p.add_argument("--catalog", help="tool catalog JSON path")
        p.add_argument("--output-dir", dest="output_dir", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int)

    p_run = sub.add_parser("run", help="run episodes over a dataset")
    common(p_run)
    p_run.add_argument("--backend-endpoint", help="chat-completions endpoint (selects http backend)")
    p_run.add_argument("--max-steps", dest="max_steps", type=int)
    p_run.add_argument("--prompt-mode", dest="prompt_mode", choices=["full_text", "compressed", "retrieved"])
    p_run.add_argument("--baseline-mode", dest="baseline_mode", action="store_true", default=None)

    p_eval = sub.add_parser("eval", help="score predictions against gold")
    common(p_eval)
    p_eval.add_argument("gold", help="gold trajectory JSONL")
    p_eval.add_argument("pred", help="predicted trajectory JSONL")
    p_eval.add_argument("--averaging", choices=["macro", "micro"])
    p_eval.add_argument("--sidecar-endpoint", help="use the sidecar similarity provider")

    p_flatten = sub.add_parser("flatten", help="emit prompt-completion pairs")
    common(p_flatten)

    p_validate = sub.add_parser("validate", help="check a dataset against the schema")
    common(p_validate)
    p_validate.add_argument("--released", action="store_true", default=None,
                            help="assert the released-dataset counts")

    p_recall = sub.add_parser("recall", help="retrieval recall@K curves")
    common(p_recall)
    p_recall.add_argument("--agents", nargs="+", default=["personal_context", "task_completion"])
    p_recall.add_argument("--k-max", dest="k_max", type=int)

    p_compress = sub.add_parser("compress-report", help="tool-token compression accounting")
    common(p_compress)

    p_gen = sub.add_parser("gen-fixtures", help="regenerate the bundled fixture files")
    common(p_gen)
    p_gen.add_argument("--out", help="target directory (default: <output_dir>/fixtures)")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        key: getattr(args, key, None)
        for key in ("dataset", "device_states", "catalog", "output_dir", "seed", "jobs",
                    "max_steps", "prompt_mode", "baseline_mode", "averaging", "released")
    }
    if getattr(args, "backend_endpoint", None):
        overrides["backend"] = {"type": "http", "endpoint": args.backend_endpoint}
    if getattr(args, "sidecar_endpoint", None):
        overrides["similarity"] = {"type": "sidecar", "endpoint": args.sidecar_endpoint}
    try:
        config = RunConfig.load(getattr(args, "config", None), overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "run":
            return cmd_run(config)
        if args.command == "eval":
            return cmd_eval(config, args.gold, args.pred)
        if args.command == "flatten":
            return cmd_flatten(config)
        if args.command == "validate":
            return cmd_validate(config)
        if args.command == "recall":
            return cmd_recall(config, args.agents, args.k_max)
        if args.command == "compress-report":
            return cmd_compress_report(config)
        if args.command == "gen-fixtures":
            return cmd_gen_fixtures(config, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProviderUnavailable as exc:
        print(f"similarity provider unavailable: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
