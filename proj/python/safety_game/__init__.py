"""Python access to the safety_game core: solvers, metrics and the pipeline."""

import json as _json

from . import _core
from ._core import (
    __version__,
    bleu,
    bleu_acc,
    log_p_normalize,
    normalized_objective,
    select,
    select_baseline,
    solve,
)


def run(command, **config):
    """Run one pipeline step ("score", "select", "ablate" or "report").

    Keyword arguments use the CLI flag names with underscores, e.g.
    run("score", dataset="corpus.jsonl", kind="safetybench", out="out").
    """
    _core.run(command, _json.dumps({k: (str(v) if hasattr(v, "__fspath__") else v) for k, v in config.items()}))


__all__ = [
    "__version__",
    "bleu",
    "bleu_acc",
    "log_p_normalize",
    "normalized_objective",
    "run",
    "select",
    "select_baseline",
    "solve",
]
