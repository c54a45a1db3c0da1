"""Shared fixtures data: transcript loading and the transcribed golden layouts."""
from __future__ import annotations

import random
import re
from pathlib import Path

from li3d.layout import BoxObject, Dialect, Layout

FIXTURES = Path(__file__).parent / "fixtures"
TRANSCRIPTS = FIXTURES / "transcripts"

_LABEL_RE = re.compile(r"^[^:\n]{0,60}(?:Prompt|Response|Layout):\s*$")


def load_transcript(name: str) -> str:
    return (TRANSCRIPTS / name).read_text(encoding="utf-8")


def split_sections(text: str) -> list[tuple[str, str]]:
    """Split a transcript into (label, body) pairs on its speaker-label lines."""
    sections: list[tuple[str, str]] = []
    label = None
    body: list[str] = []
    for line in text.splitlines():
        if _LABEL_RE.match(line.strip()) and line.strip():
            if label is not None:
                sections.append((label, "\n".join(body).strip("\n")))
            label = line.strip()
            body = []
        else:
            body.append(line)
    if label is not None:
        sections.append((label, "\n".join(body).strip("\n")))
    return sections


def sections_with_label(name: str, label: str) -> list[str]:
    return [body for lab, body in split_sections(load_transcript(name)) if lab == label]


def _scene(objects, description) -> Layout:
    return Layout(Dialect.SCENE3D, tuple(BoxObject(d, c, s) for d, c, s in objects), description)


def _parts(objects, description) -> Layout:
    return Layout(
        Dialect.OBJECT_PARTS3D, tuple(BoxObject(d, c, s) for d, c, s in objects), description
    )


def _image(objects, description) -> Layout:
    return Layout(Dialect.IMAGE2D, tuple(BoxObject(d, c, s) for d, c, s in objects), description)


CASTLE = _scene(
    [
        ("a mountain", (0, -0.5, 0), (0.9, 0.5, 0.9)),
        ("a castle", (0, 0, 0), (0.4, 0.4, 0.4)),
    ],
    "A castle on a mountain.",
)

CASTLE_UPDATED = _scene(
    [
        ("a mountain", (0, -0.5, 0), (0.9, 0.5, 0.9)),
        ("a castle", (0, 0, 0), (0.4, 0.4, 0.4)),
    ],
    "The castle is situated atop a tall mountain, overlooking the surrounding landscape. "
    "The castle itself is built into the side of the mountain, providing a sense of natural "
    "fortification. A winding path leads up to the castle gates, which are guarded by two "
    "towering statues. From the castle walls, one can see for miles in every direction, "
    "taking in the majesty of the surrounding peaks and valleys.",
)

OFFROAD = _parts(
    [
        ("vehicle body", (0, 0, 0), (0.6, 0.3, 1)),
        ("front left wheel", (-0.4, -0.25, 0.4), (0.25, 0.25, 0.25)),
        ("front right wheel", (0.4, -0.25, 0.4), (0.25, 0.25, 0.25)),
        ("rear left wheel", (-0.4, -0.25, -0.4), (0.25, 0.25, 0.25)),
        ("rear right wheel", (0.4, -0.25, -0.4), (0.25, 0.25, 0.25)),
    ],
    "an off-road vehicle with a main body and four large wheels",
)

COURTYARD_1 = _scene(
    [
        ("a well", (0, 0, 0), (0.5, 0.5, 0.5)),
        ("a tree", (0.7, 0.4, -0.2), (0.2, 1.5, 0.2)),
        ("a tree", (-0.7, 0.3, 0.4), (0.2, 1.5, 0.2)),
        ("a tree", (-0.5, 0.2, -0.6), (0.2, 1.5, 0.2)),
    ],
    "A courtyard with a well in the center and several trees",
)

COURTYARD_2 = _scene(
    [
        ("a well", (0, 0, 0), (0.5, 0.5, 0.5)),
        ("a well", (0.3, -0.2, 0.6), (0.5, 0.5, 0.5)),
        ("a tree", (0.7, 0.4, -0.2), (0.2, 1.5, 0.2)),
        ("a tree", (-0.7, 0.3, 0.4), (0.2, 1.5, 0.2)),
        ("a tree", (-0.5, 0.2, -0.6), (0.2, 1.5, 0.2)),
    ],
    "A courtyard with two wells in the center and several trees",
)

COURTYARD_3 = _scene(
    [
        ("a well", (0, 0, 0), (0.5, 0.5, 0.5)),
        ("a well", (0.3, -0.2, 0.6), (0.5, 0.5, 0.5)),
        ("a fir tree", (0.7, 0.4, -0.2), (0.2, 1.5, 0.2)),
        ("a fir tree", (-0.7, 0.3, 0.4), (0.2, 1.5, 0.2)),
        ("a fir tree", (-0.5, 0.2, -0.6), (0.2, 1.5, 0.2)),
    ],
    "A courtyard with two wells in the center and several fir trees",
)

WINDMILL_1 = _parts(
    [
        ("base", (0, -0.5, 0), (1, 0.5, 1)),
        ("tower", (0, 0.5, 0), (0.2, 1, 0.2)),
        ("blades", (0, 1.5, 0), (2, 0.1, 0.5)),
        ("spinner", (0, 1.5, 0), (0.5, 0.5, 0.5)),
    ],
    "A windmill with a base, tower, blades, and spinner.",
)

WINDMILL_2 = _parts(
    [
        ("base", (0, -0.5, 0), (1, 0.5, 1)),
        ("tower", (0, 0.5, 0), (0.4, 1, 0.4)),
        ("blades", (0, 1.5, 0), (2, 0.1, 0.5)),
        ("spinner", (0, 1.5, 0), (0.5, 0.5, 0.5)),
    ],
    "A windmill with a base, tower, blades, and spinner.",
)

WINDMILL_3 = _parts(
    [
        ("base", (0, -0.5, 0), (1, 0.5, 1)),
        ("tower", (0, 0.5, 0), (0.4, 1, 0.4)),
        ("blades", (0, 1.5, 0.5), (2, 0.1, 0.5)),
        ("blades", (0, 1.5, -0.5), (2, 0.1, 0.5)),
        ("spinner", (0, 1.5, 0), (0.5, 0.5, 0.5)),
    ],
    "A windmill with a base, tower, blades, blades, and spinner.",
)

DOG_SOFA_1 = _image(
    [
        ("dog", (0.5, 0.5), (0.6, 0.6)),
        ("sofa", (0.5, 0.75), (0.8, 0.2)),
    ],
    "a dog is sitting on the sofa",
)

DOG_SOFA_2 = _image(
    [
        ("dog", (0.7, 0.5), (0.6, 0.6)),
        ("sofa", (0.5, 0.75), (0.8, 0.2)),
    ],
    "a dog is sitting on the sofa",
)

DOG_SOFA_3 = _image([("sofa", (0.5, 0.75), (0.8, 0.2))], "there is a sofa")

ICLEVR_1 = _scene(
    [("Cyan cube", (0, 0, 0), (0.5, 0.5, 0.5))],
    "A cyan cube at the center.",
)

ICLEVR_2 = _scene(
    [
        ("Cyan cube", (0, 0, 0), (0.5, 0.5, 0.5)),
        ("Red cylinder", (0, 0, -0.8), (0.3, 0.3, 0.6)),
    ],
    "A cyan cube at the center and a red cylinder behind it.",
)

ICLEVR_3 = _scene(
    [
        ("Cyan cube", (0, 0, 0), (0.5, 0.5, 0.5)),
        ("Red cylinder", (0, 0, -0.8), (0.3, 0.3, 0.6)),
        ("Cyan sphere", (-0.6, 0, 0.4), (0.3, 0.3, 0.3)),
    ],
    "A cyan cube at the center, a red cylinder behind it, and a cyan sphere in front of it "
    "on the left and in front of the cyan cube on the left.",
)

ICLEVR_4 = _scene(
    [
        ("Cyan cube", (0, 0, 0), (0.5, 0.5, 0.5)),
        ("Red cylinder", (0, 0, -0.8), (0.3, 0.3, 0.6)),
        ("Cyan sphere", (-0.6, 0, 0.4), (0.3, 0.3, 0.3)),
        ("Purple cylinder", (-0.6, 0, -0.4), (0.3, 0.3, 0.6)),
    ],
    "A cyan cube at the center, a red cylinder behind it, a cyan sphere in front of it on "
    "the left and in front of the cyan cube on the left, and a purple cylinder behind it on "
    "the left and in front of the cyan cube on the left.",
)

ICLEVR_5 = _scene(
    [
        ("Cyan cube", (0, 0, 0), (0.5, 0.5, 0.5)),
        ("Red cylinder", (0, 0, -0.8), (0.3, 0.3, 0.6)),
        ("Cyan sphere", (-0.6, 0, 0.4), (0.3, 0.3, 0.3)),
        ("Purple cylinder", (-0.6, 0, -0.4), (0.3, 0.3, 0.6)),
        ("Red cube", (0.6, 0, 0), (0.5, 0.5, 0.5)),
    ],
    "A cyan cube at the center, a red cylinder behind it, a cyan sphere in front of it on "
    "the left and in front of the cyan cube on the left, a purple cylinder behind it on the "
    "left and in front of the cyan cube on the left, and a red cube behind it on the right "
    "and in front of the red cylinder on the right.",
)

SCENE_FORMAT = _scene(
    [
        ("description of single object", (0, 0, 0), (0.5, 0.5, 0.5)),
        ("description of single object", (0, 0, 0), (0.5, 0.5, 0.5)),
    ],
    "description of the whole scene",
)

PARTS_FORMAT = _parts(
    [
        ("description of a object part", (0, 0, 0), (0.5, 0.5, 0.5)),
        ("description of a object part", (0, 0, 0), (0.5, 0.5, 0.5)),
    ],
    "description of the whole object",
)

PARTS_FORMAT_T02 = _parts(
    [
        ("description of an object part", (0, 0, 0), (0.5, 0.5, 0.5)),
        ("description of an object part", (0, 0, 0), (0.5, 0.5, 0.5)),
    ],
    "description of the whole object",
)

IMAGE_FORMAT = _image(
    [
        ("a object description", (0.1, 0.2), (0.9, 0.9)),
        ("a object description", (0.3, 0.4), (0.7, 0.8)),
    ],
    "description of the whole scene",
)

# (file, label, occurrence index, dialect, expected layout)
GOLDEN_BLOCKS = [
    ("table02.txt", "(Scene) Context Prompt:", 0, Dialect.SCENE3D, SCENE_FORMAT),
    ("table02.txt", "(Scene) Generated Response:", 0, Dialect.SCENE3D, CASTLE),
    ("table02.txt", "(Object) Context Prompt:", 0, Dialect.OBJECT_PARTS3D, PARTS_FORMAT_T02),
    ("table02.txt", "(Object) Generated Response:", 0, Dialect.OBJECT_PARTS3D, OFFROAD),
    ("table04.txt", "Context Prompt:", 0, Dialect.SCENE3D, SCENE_FORMAT),
    ("table05.txt", "Generated Response:", 0, Dialect.SCENE3D, COURTYARD_1),
    ("table05.txt", "Generated Response:", 1, Dialect.SCENE3D, COURTYARD_2),
    ("table05.txt", "Generated Response:", 2, Dialect.SCENE3D, COURTYARD_3),
    ("table06.txt", "Context Prompt:", 0, Dialect.OBJECT_PARTS3D, PARTS_FORMAT),
    ("table07.txt", "Generated Response:", 0, Dialect.OBJECT_PARTS3D, WINDMILL_1),
    ("table07.txt", "Generated Response:", 1, Dialect.OBJECT_PARTS3D, WINDMILL_2),
    ("table07.txt", "Generated Response:", 2, Dialect.OBJECT_PARTS3D, WINDMILL_3),
    ("table08.txt", "Generated Layout:", 0, Dialect.SCENE3D, CASTLE),
    ("table08.txt", "Generated Response:", 0, Dialect.SCENE3D, CASTLE_UPDATED),
    ("table09.txt", "Context Prompt:", 0, Dialect.IMAGE2D, IMAGE_FORMAT),
    ("table10.txt", "Generated Response:", 0, Dialect.IMAGE2D, DOG_SOFA_1),
    ("table10.txt", "Generated Response:", 1, Dialect.IMAGE2D, DOG_SOFA_2),
    ("table10.txt", "Generated Response:", 2, Dialect.IMAGE2D, DOG_SOFA_3),
    ("table11.txt", "Generated Response:", 1, Dialect.SCENE3D, ICLEVR_1),
    ("table11.txt", "Generated Response:", 2, Dialect.SCENE3D, ICLEVR_2),
    ("table11.txt", "Generated Response:", 3, Dialect.SCENE3D, ICLEVR_3),
    ("table11.txt", "Generated Response:", 4, Dialect.SCENE3D, ICLEVR_4),
    ("table11.txt", "Generated Response:", 5, Dialect.SCENE3D, ICLEVR_5),
]

ICLEVR_INSTRUCTIONS = [
    "Add a cyan cube at the center",
    "Add a red cylinder behind it",
    "Add a cyan sphere in front of it on the left and in front of the cyan cube on the left",
    "Add a purple cylinder behind it on the left and in front of the cyan cube on the left",
    "Add a red cube behind it on the right and in front of the red cylinder on the right",
]

ICLEVR_LAYOUTS = [ICLEVR_1, ICLEVR_2, ICLEVR_3, ICLEVR_4, ICLEVR_5]


_WORDS = (
    "castle mountain tree well dog sofa tower cube sphere cylinder lamp rock "
    "fir cyan red purple wheel blade spinner base bridge river barn fence"
).split()


def random_layout(rng: random.Random, dialect: Dialect, max_objects: int = 6) -> Layout:
    """A structurally valid random layout for round-trip and diff properties."""
    n = rng.randint(0, max_objects)
    dims = dialect.dims
    objects = []
    for _ in range(n):
        words = [rng.choice(_WORDS) for _ in range(rng.randint(1, 3))]
        if rng.random() < 0.15:
            words[-1] += "'s"
        desc = " ".join(words)
        if dialect is Dialect.IMAGE2D:
            center = tuple(_some_number(rng, 0.0, 1.0) for _ in range(dims))
            scale = tuple(_some_number(rng, 0.2, 1.0) for _ in range(dims))
        else:
            center = tuple(_some_number(rng, -1.0, 1.0) for _ in range(dims))
            scale = tuple(_some_number(rng, 0.05, 1.0) for _ in range(dims))
        objects.append(BoxObject(desc, center, scale))
    return Layout(dialect, tuple(objects), " ".join(rng.choice(_WORDS) for _ in range(4)))


def _some_number(rng: random.Random, lo: float, hi: float) -> float:
    if rng.random() < 0.3:
        step = rng.choice((0.05, 0.1, 0.25, 0.5))
        k_lo = -int(-lo / step) if lo < 0 else int(lo / step + 0.999999)
        k_hi = int(hi / step)
        return rng.randint(k_lo, k_hi) * step
    return rng.uniform(lo, hi)
