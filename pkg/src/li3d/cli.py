"""Command-line entry points: sessions, eval harness, dataset synthesis, serving.

Exit codes: 0 success, 1 domain errors, 2 usage errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .evaluation import (
    MODE_TABLE11,
    load_dataset_jsonl,
    oracle_client,
    report_text,
    run_benchmark,
    save_dataset_jsonl,
    synthesize_dataset,
)
from .interpreter import Cassette, CassetteClient, HttpChatClient
from .layout import layout_from_json
from .service import make_server, parse_dialect
from .session import POLICIES, POLICY_OFF, SessionEngine, SessionStore

MODE_NAMES = {"table11": MODE_TABLE11, "conversational": "conversational"}


def data_dir(args) -> Path:
    return Path(args.data_dir or os.environ.get("LI3D_DATA_DIR") or "./data")


def resolve_cassette(path: str, session_id: str | None = None) -> Path:
    """A cassette flag may name a file or a directory of recordings."""
    p = Path(path)
    if p.is_dir():
        if session_id and (p / f"{session_id}.json").exists():
            return p / f"{session_id}.json"
        candidates = sorted(p.glob("*.json"))
        if len(candidates) == 1:
            return candidates[0]
        raise ValueError(
            f"{path}: expected one cassette file (or <session>.json), found {len(candidates)}"
        )
    return p


def build_client(args, session_id: str | None = None):
    cassette_path = getattr(args, "cassette", None)
    if cassette_path:
        return CassetteClient(Cassette.load(resolve_cassette(cassette_path, session_id)))
    if os.environ.get("LI3D_API_KEY"):
        return HttpChatClient()
    return None


def build_engine(args) -> SessionEngine:
    store = SessionStore(data_dir(args))
    try:
        client = build_client(args)
    except ValueError:
        client = None  # ambiguous cassette directory: retried once the session is known
    return SessionEngine(store, client=client)


def resolve_session(args, engine: SessionEngine, parser: argparse.ArgumentParser) -> str:
    session_id = getattr(args, "session", None) or engine.store.current_session()
    if not session_id:
        parser.error("no session: pass --session or create one with `li3d new`")
    if getattr(args, "cassette", None):
        engine.client = build_client(args, session_id)
    return session_id


def cmd_new(args, parser) -> int:
    engine = build_engine(args)
    session = engine.create_session(parse_dialect(args.mode), args.policy)
    engine.store.set_current_session(session.id)
    print(session.id)
    return 0


def cmd_say(args, parser) -> int:
    engine = build_engine(args)
    session_id = resolve_session(args, engine, parser)
    record = engine.step(session_id, args.text)
    ops = ", ".join(op.kind.value for op in record.plan.ops) or "no changes"
    print(f"round {record.round_index}: {ops}")
    print(f"objects: {len(record.layout.objects)}; description: {record.layout.description!r}")
    if record.degraded:
        print("render: degraded (no image produced)")
    return 0


def cmd_adjust(args, parser) -> int:
    engine = build_engine(args)
    session_id = resolve_session(args, engine, parser)
    layout = layout_from_json(json.loads(Path(args.file).read_text(encoding="utf-8")))
    record = engine.adjust(session_id, layout)
    ops = ", ".join(op.kind.value for op in record.plan.ops) or "no changes"
    print(f"round {record.round_index}: {ops}")
    return 0


def cmd_render(args, parser) -> int:
    engine = build_engine(args)
    session_id = resolve_session(args, engine, parser)
    session = engine.store.load(session_id)
    if args.round >= len(session.records):
        print(f"session has only {len(session.records)} rounds", file=sys.stderr)
        return 1
    refs = session.records[args.round].render_ref
    if not refs or args.view not in refs:
        print(f"round {args.round} has no {args.view!r} render", file=sys.stderr)
        return 1
    Path(args.out).write_bytes(engine.store.render_bytes(refs[args.view]))
    print(args.out)
    return 0


def cmd_eval(args, parser) -> int:
    dataset = load_dataset_jsonl(args.dataset)
    if args.rounds:
        dataset = [type(s)(s.rounds[: args.rounds]) for s in dataset]
    mode = MODE_NAMES[args.mode]
    if args.oracle:
        client = oracle_client(dataset, mode, negate_x=args.negate_x)
    else:
        client = build_client(args)
        if client is None:
            print("eval needs --cassette, --oracle, or LI3D_API_KEY", file=sys.stderr)
            return 1
    report = run_benchmark(dataset, client, mode)
    print(report_text(report))
    if args.report:
        Path(args.report).write_text(
            json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8"
        )
    return 0


def cmd_synth_dataset(args, parser) -> int:
    scenes = synthesize_dataset(args.n, args.rounds, args.seed)
    save_dataset_jsonl(scenes, args.out)
    print(f"{args.out}: {len(scenes)} sequences x {args.rounds} rounds")
    return 0


def cmd_serve(args, parser) -> int:
    engine = build_engine(args)
    host, _, port = args.addr.rpartition(":")
    server = make_server(engine, host or "127.0.0.1", int(port), args.cors_origin)
    print(f"serving on http://{server.server_address[0]}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def cmd_replay(args, parser) -> int:
    engine = build_engine(args)
    session_id = resolve_session(args, engine, parser)
    client = CassetteClient(Cassette.load(resolve_cassette(args.cassette, session_id)))
    outcomes = engine.replay_session(session_id, client)
    ok = True
    for round_index, matches in outcomes:
        print(f"round {round_index}: {'ok' if matches else 'MISMATCH'}")
        ok = ok and matches
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="li3d", description=__doc__)
    parser.add_argument("--data-dir", help="session data directory (default $LI3D_DATA_DIR or ./data)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("new", help="create a session")
    p.add_argument("--mode", required=True, choices=["scene", "object", "image2d"])
    p.add_argument("--policy", default=POLICY_OFF, choices=list(POLICIES))
    p.add_argument("--cassette")
    p.set_defaults(func=cmd_new)

    p = sub.add_parser("say", help="run one instruction round")
    p.add_argument("text")
    p.add_argument("--session")
    p.add_argument("--cassette")
    p.set_defaults(func=cmd_say)

    p = sub.add_parser("adjust", help="apply a user-edited layout")
    p.add_argument("--file", required=True)
    p.add_argument("--session")
    p.add_argument("--cassette")
    p.set_defaults(func=cmd_adjust)

    p = sub.add_parser("render", help="export a round's view as PNG")
    p.add_argument("--round", type=int, required=True)
    p.add_argument("--view", default="front")
    p.add_argument("--out", required=True)
    p.add_argument("--session")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("eval", help="run the layout benchmark")
    p.add_argument("--dataset", required=True)
    p.add_argument("--rounds", type=int)
    p.add_argument("--mode", default="table11", choices=list(MODE_NAMES))
    p.add_argument("--cassette")
    p.add_argument("--oracle", action="store_true", help="answer from ground truth")
    p.add_argument("--negate-x", action="store_true", help="mirror the oracle's x axis")
    p.add_argument("--report", help="also write a JSON report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth-dataset", help="generate a synthetic benchmark dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rounds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_dataset)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--addr", default="127.0.0.1:8321")
    p.add_argument("--cors-origin", default="*")
    p.add_argument("--cassette")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="re-drive a session against a cassette")
    p.add_argument("--cassette", required=True)
    p.add_argument("--session")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (
        FileNotFoundError,
        json.JSONDecodeError,
        RuntimeError,
        ValueError,
        KeyError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # domain failures from the engine stack
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
