from __future__ import annotations

from superdist.cli.handlers.analyze import handle_analyze
from superdist.cli.handlers.demos import (
    handle_paradiso_demo,
    handle_potato_demo,
    handle_verify,
    parse_trust_roots,
)
from superdist.cli.handlers.simulate import handle_simulate

__all__ = [
    "handle_analyze",
    "handle_paradiso_demo",
    "handle_potato_demo",
    "handle_simulate",
    "handle_verify",
    "parse_trust_roots",
]
