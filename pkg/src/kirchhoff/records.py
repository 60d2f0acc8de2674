"""Value records shared across the constant ledger."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Method(str, Enum):
    CLOSED_FORM = "closed_form"
    RECURSION = "recursion"
    QUADRATURE = "quadrature"


class Kind(str, Enum):
    L = "L"
    S = "S"
    R = "R"
    M = "M"


@dataclass(frozen=True)
class MomentConstant:
    """One of L_{k,d}, S_{k,d}, R_{k,d}, M_{k,d}, tagged with how it was obtained.

    ``p`` is ``None`` for L, which does not depend on a ground state.
    """

    kind: Kind
    k: float
    d: float
    p: float | None
    value: float
    method: Method

    def __float__(self) -> float:
        return self.value
