"""Command line harness: serve the API, run briefs in batch, analyze corpora,
and replay session bundles."""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from briefstudio.analytics import corpus_diversity
from briefstudio.errors import BriefStudioError
from briefstudio.persistence import Store, read_bundle_events, replay_events
from briefstudio.pipeline import JobRegistry, Pipeline
from briefstudio.providers import (
    MockEmbedder,
    ProviderSettings,
    build_providers,
    load_provider_settings,
)


def _settings(args, root: Path | None) -> ProviderSettings:
    base = load_provider_settings(root)
    provider = getattr(args, "provider", None) or base.provider
    seed = args.seed if getattr(args, "seed", None) is not None else base.seed
    return ProviderSettings(
        provider=provider,
        seed=seed,
        endpoint=base.endpoint,
        api_key=base.api_key,
        embed_dims=base.embed_dims,
    )


def _build_pipeline(root: Path, settings: ProviderSettings) -> tuple[Store, Pipeline]:
    store = Store(root)
    providers = build_providers(settings, store.blobs)
    return store, Pipeline(store, providers)


def cmd_serve(args) -> int:
    import uvicorn

    from briefstudio.service.app import create_app

    root = Path(args.root)
    root.mkdir(parents=True, exist_ok=True)
    settings = _settings(args, root)
    store, pipeline = _build_pipeline(root, settings)
    registry = JobRegistry(workers=args.workers)
    ui_dir = Path(args.ui_dir) if args.ui_dir else None
    app = create_app(pipeline, registry, store, ui_dir=ui_dir)
    print(f"serving on http://{args.host}:{args.port} (provider={settings.provider}, root={root})")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_run(args) -> int:
    brief_path = Path(args.brief)
    if not brief_path.is_file():
        print(f"error: brief_not_found: no brief file at {brief_path}", file=sys.stderr)
        return 1
    brief_text = brief_path.read_text(encoding="utf-8")
    if args.root:
        root = Path(args.root)
        root.mkdir(parents=True, exist_ok=True)
        cleanup = None
    else:
        tmp = tempfile.TemporaryDirectory(prefix="briefstudio-")
        root = Path(tmp.name)
        cleanup = tmp
    try:
        settings = _settings(args, root if args.root else None)
        store, pipeline = _build_pipeline(root, settings)
        session = pipeline.run_auto(
            brief_text,
            output_language=args.language,
            deliverable_format=args.format,
            orientation=args.orientation,
            n=args.n,
            session_id=args.session_id,
        )
        print(f"session: {session.id}")
        for element_type, cards in sorted(
            session.element_cards.items(), key=lambda kv: kv[0].key
        ):
            print(f"cards[{element_type.key}]: {len(cards)}")
        print(f"artifacts: {len(session.history)}")
        if session.integrated_prompts:
            print(f"integrated_prompt: {session.integrated_prompts[-1].text[:96]}")
        if args.out:
            bundle = store.export_bundle(session.id, Path(args.out))
            print(f"bundle: {bundle}")
        return 0
    finally:
        if cleanup is not None:
            cleanup.cleanup()


def cmd_analyze(args) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        print(f"error: not_found: no directory at {directory}", file=sys.stderr)
        return 1
    settings = _settings(args, None)
    embedder = MockEmbedder(dims=settings.embed_dims, seed=settings.seed)
    if args.what == "prompts":
        files = sorted(directory.glob("*.txt"))
        items = [p.read_text(encoding="utf-8") for p in files]
        ids = [p.name for p in files]
        report = corpus_diversity(items, embedder, ids=ids, kind="text")
    else:
        files = sorted(directory.glob("*.png"))
        with tempfile.TemporaryDirectory(prefix="briefstudio-analyze-") as tmp:
            store = Store(Path(tmp))
            refs = [store.blobs.put_blob(p.read_bytes(), "image/png") for p in files]
            report = corpus_diversity(
                refs, embedder, ids=[p.name for p in files], kind="image"
            )
    out_path = Path(args.out)
    out_path.write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
    print(f"items: {report.item_count}")
    print(f"pairs: {report.pair_count}")
    print(f"mean_pairwise_distance: {report.mean_pairwise_distance:.6f}")
    print(f"report: {out_path}")
    return 0


def cmd_replay(args) -> int:
    bundle = Path(args.bundle)
    if not bundle.is_file():
        print(f"error: not_found: no bundle at {bundle}", file=sys.stderr)
        return 1
    session_id, events, doc = read_bundle_events(bundle)
    state = replay_events(events)
    print(f"session: {session_id}")
    print(f"events: {len(events)}")
    print(f"live_cards: {len(state.live_cards)}")
    print(f"revision_total: {sum(state.revisions.values())}")
    print(f"entry_count: {state.entry_count}")
    if state.selection:
        texts = state.selection.get("text_ids") or []
        print(
            "selection: "
            f"composition={state.selection.get('composition_id')} texts={len(texts)}"
        )
    else:
        print("selection: none")
    print(f"history_length: {state.history_length}")

    doc_cards = sum(len(cards) for cards in doc.get("element_cards", {}).values())
    doc_history = len(doc.get("history", []))
    mismatches = []
    if doc_cards != len(state.live_cards):
        mismatches.append(f"cards: doc={doc_cards} replay={len(state.live_cards)}")
    if doc_history != state.history_length:
        mismatches.append(f"history: doc={doc_history} replay={state.history_length}")
    doc_selection = doc.get("selection")
    replay_composition = state.selection.get("composition_id") if state.selection else None
    doc_composition = doc_selection.get("composition_id") if doc_selection else None
    if doc_composition != replay_composition:
        mismatches.append(f"selection: doc={doc_composition} replay={replay_composition}")
    if mismatches:
        print("verify: MISMATCH " + "; ".join(mismatches))
        return 2
    print("verify: replay matches session document")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="briefstudio",
        description="Brief-to-design pipeline: serve the API, run briefs, analyze corpora, replay bundles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP API")
    serve.add_argument("--root", default=".briefstudio", help="storage root directory")
    serve.add_argument("--provider", choices=["mock", "http"], default=None)
    serve.add_argument("--seed", type=int, default=None)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--workers", type=int, default=4, help="job worker pool size")
    serve.add_argument("--ui-dir", default=None, help="serve a built studio UI from this directory")
    serve.set_defaults(func=cmd_serve)

    run = sub.add_parser("run", help="run one brief end to end in batch mode")
    run.add_argument("--brief", required=True, help="path to a brief text file")
    run.add_argument("--auto", action="store_true", required=True, help="batch mode")
    run.add_argument("--n", type=int, default=None, help="candidates per element type")
    run.add_argument("--out", default=None, help="export the session bundle here")
    run.add_argument("--root", default=None, help="storage root (default: temporary)")
    run.add_argument("--provider", choices=["mock", "http"], default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--language", default="en")
    run.add_argument("--format", default="poster")
    run.add_argument("--orientation", default="portrait")
    run.add_argument("--session-id", default=None)
    run.set_defaults(func=cmd_run)

    analyze = sub.add_parser("analyze", help="diversity report over a corpus")
    analyze.add_argument("what", choices=["prompts", "images"])
    analyze.add_argument("directory")
    analyze.add_argument("--out", default="diversity_report.json")
    analyze.add_argument("--seed", type=int, default=None)
    analyze.set_defaults(func=cmd_analyze)

    replay = sub.add_parser("replay", help="reconstruct session state from a bundle's event log")
    replay.add_argument("bundle")
    replay.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BriefStudioError as exc:
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
