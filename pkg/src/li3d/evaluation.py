"""Instruction-following layout benchmark: recall and relational similarity.

Ground truth is a sequence of cumulative rounds, each adding one colored shape
at a known (x, z) position.  Recall counts identity hits (color + shape words
in an object description); rsim scales recall by the fraction of ground-truth
left-right / front-back relations preserved among the recalled objects.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .interpreter import (
    CassetteMismatch,
    ChatTurn,
    Instruction,
    LayoutInterpreter,
    ParseFailed,
    ScriptedClient,
    TransportError,
)
from .layout import DEFAULT_EPS_REL, BoxObject, Dialect, Layout, relation_edges_from_positions
from .parsing import serialize_layout

SHAPES = ("cube", "sphere", "cylinder")
COLORS = ("red", "cyan", "purple", "green", "blue", "yellow", "brown", "gray")

MODE_TABLE11 = "table11_batched"
MODE_CONVERSATIONAL = "conversational"
MODES = (MODE_TABLE11, MODE_CONVERSATIONAL)


class VocabularyExhausted(Exception):
    pass


@dataclass(frozen=True)
class GtObject:
    color: str
    shape: str
    position: tuple[float, float]  # (x, z)


@dataclass(frozen=True)
class GtRound:
    instruction: str
    objects: tuple[GtObject, ...]


@dataclass(frozen=True)
class GtScene:
    rounds: tuple[GtRound, ...]

    @property
    def instructions(self) -> tuple[str, ...]:
        return tuple(r.instruction for r in self.rounds)


# --- metrics -----------------------------------------------------------------


@dataclass(frozen=True)
class MatchResult:
    pairs: tuple[tuple[int, int], ...]  # (gt index, layout index)
    recall: float
    warnings: tuple[str, ...] = ()


def _words(text: str) -> set[str]:
    out, word = set(), []
    for ch in text.lower():
        if ch.isalnum():
            word.append(ch)
        elif word:
            out.add("".join(word))
            word = []
    if word:
        out.add("".join(word))
    return out


def match_objects(gt_round: GtRound, layout: Layout) -> MatchResult:
    """Match each ground-truth object to the first unused layout object naming it."""
    pairs: list[tuple[int, int]] = []
    warnings: list[str] = []
    used: set[int] = set()
    token_sets = [_words(obj.description) for obj in layout.objects]
    for gi, gt in enumerate(gt_round.objects):
        candidates = [
            li
            for li, tokens in enumerate(token_sets)
            if li not in used and gt.color.lower() in tokens and gt.shape.lower() in tokens
        ]
        if not candidates:
            continue
        if len(candidates) > 1:
            warnings.append(
                f"gt object {gi} ('{gt.color} {gt.shape}') is ambiguous over layout "
                f"objects {candidates}; using index {candidates[0]}"
            )
        pairs.append((gi, candidates[0]))
        used.add(candidates[0])
    n = len(gt_round.objects)
    recall = 100.0 if n == 0 else len(pairs) / n * 100.0
    return MatchResult(tuple(pairs), recall, tuple(warnings))


def rsim(
    gt_round: GtRound,
    layout: Layout,
    match: MatchResult | None = None,
    eps_rel: float = DEFAULT_EPS_REL,
) -> float:
    """Recall scaled by the shared fraction of directed gt relations.

    Both edge sets are restricted to recalled objects and identified through
    the matching; with at most one recalled object the ratio term is 1.
    """
    if match is None:
        match = match_objects(gt_round, layout)
    gt_positions = [gt_round.objects[gi].position for gi, _ in match.pairs]
    gen_positions = [
        (layout.objects[li].center[0], layout.objects[li].center[2]) for _, li in match.pairs
    ]
    gt_edges = relation_edges_from_positions(gt_positions, eps_rel)
    gen_edges = relation_edges_from_positions(gen_positions, eps_rel)
    ratio = 1.0 if not gt_edges else len(gt_edges & gen_edges) / len(gt_edges)
    return (match.recall / 100.0) * ratio * 100.0


# --- synthetic dataset --------------------------------------------------------


def synthesize_dataset(
    n_sequences: int,
    rounds: int,
    seed: int,
    colors: tuple[str, ...] = COLORS,
    shapes: tuple[str, ...] = SHAPES,
) -> list[GtScene]:
    """Deterministic i-CLEVR-style scenes: one colored shape added per round.

    Scenes with two or more rounds get globally distinct (color, shape)
    openings so cumulative instruction prefixes identify a scene uniquely.
    """
    if n_sequences < 1:
        raise ValueError("n_sequences must be at least 1")
    if not 1 <= rounds <= 5:
        raise ValueError("rounds must be in 1..5")
    pairs_all = [(c, s) for c in colors for s in shapes]
    if rounds > len(pairs_all):
        raise VocabularyExhausted(
            f"{rounds} rounds need {rounds} unique pairs; only {len(pairs_all)} available"
        )
    rng = random.Random(seed)
    scenes: list[GtScene] = []
    seen_openings: set[tuple] = set()
    for _ in range(n_sequences):
        pair_list = None
        for _attempt in range(10000):
            candidate = rng.sample(pairs_all, rounds)
            opening = tuple(candidate[:2])
            if rounds == 1 or opening not in seen_openings:
                pair_list = candidate
                seen_openings.add(opening)
                break
        if pair_list is None:
            raise VocabularyExhausted(
                "could not draw a scene opening distinct from every other scene"
            )
        scenes.append(_build_scene(rng, pair_list))
    return scenes


def _build_scene(rng: random.Random, pair_list) -> GtScene:
    objects: list[GtObject] = []
    rounds: list[GtRound] = []
    occupied: set[tuple[float, float]] = set()
    for k, (color, shape) in enumerate(pair_list):
        if k == 0:
            position = (0.0, 0.0)
            instruction = f"Add a {color} {shape} at the center"
        else:
            ref = objects[-1]
            behind = rng.random() < 0.5
            left = rng.random() < 0.5
            sx = -1 if left else 1
            sz = -1 if behind else 1
            position = None
            preferred = (rng.choice((1, 2)), rng.choice((1, 2)))
            for mx, mz in [preferred] + [(a, b) for a in (1, 2, 3) for b in (1, 2, 3)]:
                candidate = (ref.position[0] + sx * mx, ref.position[1] + sz * mz)
                if candidate not in occupied:
                    position = candidate
                    break
            if position is None:
                raise VocabularyExhausted("no free grid position")
            side = "behind" if behind else "in front of"
            lr = "on the left" if left else "on the right"
            instruction = f"Add a {color} {shape} {side} it {lr}"
        occupied.add(position)
        objects.append(GtObject(color, shape, position))
        rounds.append(GtRound(instruction, tuple(objects)))
    return GtScene(tuple(rounds))


def save_dataset_jsonl(scenes: list[GtScene], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for scene in scenes:
            doc = {
                "rounds": [
                    {
                        "instruction": r.instruction,
                        "objects": [
                            {"color": o.color, "shape": o.shape, "position": list(o.position)}
                            for o in r.objects
                        ],
                    }
                    for r in scene.rounds
                ]
            }
            fh.write(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")


def load_dataset_jsonl(path) -> list[GtScene]:
    scenes = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            doc = json.loads(line)
            rounds = tuple(
                GtRound(
                    r["instruction"],
                    tuple(
                        GtObject(o["color"], o["shape"], tuple(o["position"]))
                        for o in r["objects"]
                    ),
                )
                for r in doc["rounds"]
            )
            scenes.append(GtScene(rounds))
    return scenes


def convert_image_plane_ground_truth(
    docs, image_size: tuple[int, int] = (128, 128)
) -> list[GtScene]:
    """Ingest real instruction-sequence ground truth with image-plane positions.

    Each doc carries rounds of {instruction, objects: [{color, shape,
    position: [x_px, y_px]}]}.  Image x maps to the left-right axis; image y
    maps to the depth axis (objects higher in the frame sit behind), both
    normalized to [-1, 1].
    """
    width, height = image_size
    scenes = []
    for doc in docs:
        rounds = tuple(
            GtRound(
                r["instruction"],
                tuple(
                    GtObject(
                        o["color"],
                        o["shape"],
                        (
                            2.0 * o["position"][0] / width - 1.0,
                            2.0 * o["position"][1] / height - 1.0,
                        ),
                    )
                    for o in r["objects"]
                ),
            )
            for r in doc["rounds"]
        )
        scenes.append(GtScene(rounds))
    return scenes


# --- oracle client -----------------------------------------------------------


def _oracle_layout(scene: GtScene, round_index: int, negate_x: bool) -> Layout:
    final = scene.rounds[-1].objects
    extent = max((max(abs(o.position[0]), abs(o.position[1])) for o in final), default=0.0)
    k = 0.8 / max(1.0, extent)
    objs = []
    for o in scene.rounds[round_index].objects:
        x = -o.position[0] if negate_x else o.position[0]
        objs.append(
            BoxObject(f"a {o.color} {o.shape}", (x * k, 0.0, o.position[1] * k), (0.3, 0.3, 0.3))
        )
    description = f"A canvas with {len(objs)} objects."
    return Layout(Dialect.SCENE3D, tuple(objs), description)


def oracle_client(dataset: list[GtScene], mode: str, negate_x: bool = False) -> ScriptedClient:
    """A scripted interpreter that answers from the ground truth itself.

    With ``negate_x`` every left-right relation is mirrored while identities
    stay intact: recall stays perfect, rsim drops by exactly the left-right
    edge share.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    by_batch: dict[str, str] = {}
    by_history: dict[tuple, str] = {}
    for scene in dataset:
        for k in range(len(scene.rounds)):
            text = serialize_layout(_oracle_layout(scene, k, negate_x))
            joined = "\n".join(scene.instructions[: k + 1])
            by_batch.setdefault(joined, text)
            by_history.setdefault(tuple(scene.instructions[: k + 1]), text)

    def respond(turns) -> str:
        users = tuple(t.content for t in turns if t.role == "user")
        if mode == MODE_TABLE11:
            key = users[-1]
            if key in by_batch:
                return by_batch[key]
        else:
            if users in by_history:
                return by_history[users]
        raise TransportError("oracle has no answer for this conversation")

    return ScriptedClient(respond)


# --- harness ------------------------------------------------------------------


@dataclass(frozen=True)
class RoundStats:
    round_index: int  # 1-based
    mean_recall: float
    mean_rsim: float
    count: int
    failures: int


@dataclass(frozen=True)
class SequenceResult:
    rounds: tuple[tuple[float, float], ...]  # (recall, rsim) per round
    errors: tuple[str | None, ...]


@dataclass(frozen=True)
class EvalReport:
    mode: str
    rounds: tuple[RoundStats, ...]
    sequences: tuple[SequenceResult, ...]

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "rounds": [
                {
                    "round": r.round_index,
                    "recall": r.mean_recall,
                    "rsim": r.mean_rsim,
                    "count": r.count,
                    "failures": r.failures,
                }
                for r in self.rounds
            ],
            "sequences": [
                {
                    "rounds": [{"recall": a, "rsim": b} for a, b in seq.rounds],
                    "errors": list(seq.errors),
                }
                for seq in self.sequences
            ],
        }


def run_benchmark(
    dataset: list[GtScene],
    client,
    mode: str = MODE_TABLE11,
    eps_rel: float = DEFAULT_EPS_REL,
    max_retries: int = 3,
) -> EvalReport:
    """Drive the interpreter over every scene and aggregate per-round means.

    Interpreter failures are recorded per sequence-round (scored 0) without
    aborting the run.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    interpreter = LayoutInterpreter(client, max_retries=max_retries)
    sequences: list[SequenceResult] = []
    n_rounds = max((len(s.rounds) for s in dataset), default=0)
    for scene in dataset:
        scores: list[tuple[float, float]] = []
        errors: list[str | None] = []
        history: tuple[ChatTurn, ...] = ()
        prev_layout: Layout | None = None
        broken_conversation = False
        for k, gt_round in enumerate(scene.rounds):
            try:
                if mode == MODE_TABLE11:
                    joined = "\n".join(scene.instructions[: k + 1])
                    result = interpreter.interpret_initial(
                        Instruction(joined, k), Dialect.SCENE3D
                    )
                elif k == 0 or broken_conversation:
                    result = interpreter.interpret_initial(
                        Instruction(scene.instructions[k], k), Dialect.SCENE3D
                    )
                    broken_conversation = False
                else:
                    result = interpreter.interpret_edit(
                        Instruction(scene.instructions[k], k), history, prev_layout
                    )
            except (ParseFailed, TransportError, CassetteMismatch) as exc:
                scores.append((0.0, 0.0))
                errors.append(f"{type(exc).__name__}: {exc}")
                broken_conversation = True
                continue
            history = result.turns
            prev_layout = result.layout
            match = match_objects(gt_round, result.layout)
            scores.append((match.recall, rsim(gt_round, result.layout, match, eps_rel)))
            errors.append(None)
        sequences.append(SequenceResult(tuple(scores), tuple(errors)))

    rounds: list[RoundStats] = []
    for k in range(n_rounds):
        contributing = [s for s in sequences if len(s.rounds) > k]
        if not contributing:
            continue
        recalls = [s.rounds[k][0] for s in contributing]
        rsims = [s.rounds[k][1] for s in contributing]
        failures = sum(1 for s in contributing if s.errors[k] is not None)
        rounds.append(
            RoundStats(
                k + 1,
                sum(recalls) / len(recalls),
                sum(rsims) / len(rsims),
                len(contributing),
                failures,
            )
        )
    return EvalReport(mode, tuple(rounds), tuple(sequences))


def report_text(report: EvalReport) -> str:
    """Aligned-column table shaped like the quantitative benchmark summary."""
    headers = [f"Round-{r.round_index}" for r in report.rounds]
    width = max([8] + [len(h) for h in headers]) + 2
    label_width = max(len("failures"), len("Recall"), len("rsim")) + 2

    def row(label: str, values) -> str:
        cells = "".join(f"{v:>{width}}" for v in values)
        return f"{label:<{label_width}}{cells}"

    lines = [
        row("", headers),
        row("Recall", [f"{r.mean_recall:.1f}" for r in report.rounds]),
        row("rsim", [f"{r.mean_rsim:.1f}" for r in report.rounds]),
    ]
    if any(r.failures for r in report.rounds):
        lines.append(row("failures", [str(r.failures) for r in report.rounds]))
    lines.append(f"mode: {report.mode}; sequences: {len(report.sequences)}")
    return "\n".join(lines)
