"""Layout-centric engine for language-guided interactive 2D/3D scene generation.

Natural-language instructions become versioned box layouts through an external
chat model; layout diffs compile into backend edit directives; deterministic
mock renderers and a visual-feedback loop close the cycle; a benchmark harness
scores layout reasoning with recall and relational similarity.
"""
from .layout import (
    BoxObject,
    Dialect,
    Layout,
    RelationGraph,
    Violation,
    normalize,
    relation_graph,
    validate,
)
from .parsing import ParseError, RawResponse, parse_layout, serialize_layout
from .edits import (
    BackendDirective,
    EditConfig,
    EditOp,
    EditPlan,
    OpKind,
    apply,
    compile_directives,
    diff,
)
from .interpreter import (
    Cassette,
    CassetteClient,
    ChatTurn,
    HttpChatClient,
    Instruction,
    LayoutInterpreter,
)
from .backends import Mock2DBackend, Mock3DBackend, RenderConfig, RenderResult
from .feedback import Feedback, MockVerifier, Verdict, parse_verdict, run_feedback_loop
from .evaluation import GtScene, match_objects, rsim, run_benchmark, synthesize_dataset
from .session import Session, SessionEngine, SessionRecord, SessionStore

__version__ = "0.1.0"
