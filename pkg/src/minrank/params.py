"""MinRank parameter sets and their validation."""

from __future__ import annotations

import re
from dataclasses import dataclass, field as dc_field

from minrank.errors import InvalidField, InvalidParams
from minrank.gf import GF, Field


@dataclass(frozen=True)
class Params:
    q: int
    m: int
    n: int
    k: int
    r: int
    lam: int = 128
    name: str = dc_field(default="", compare=False)

    def __post_init__(self):
        for attr in ("q", "m", "n", "k", "r", "lam"):
            if not isinstance(getattr(self, attr), int) or getattr(self, attr) < 1:
                raise InvalidParams(f"{attr} must be a positive integer")
        try:
            GF(self.q)
        except InvalidField as exc:
            raise InvalidParams(str(exc)) from exc
        if not self.m >= self.n > self.r:
            raise InvalidParams(f"need m >= n > r, got m={self.m}, n={self.n}, r={self.r}")
        if not self.k < (self.m - self.r) * (self.n - self.r):
            raise InvalidParams(
                f"instance is not overdetermined: k={self.k} >= (m-r)(n-r)={(self.m - self.r) * (self.n - self.r)}"
            )
        if self.lam % 8:
            raise InvalidParams("lambda must be a multiple of 8")

    @property
    def field(self) -> Field:
        return GF(self.q)

    @property
    def seed_bytes(self) -> int:
        return self.lam // 8

    def label(self) -> str:
        return self.name or f"q{self.q}-m{self.m}-n{self.n}-k{self.k}-r{self.r}-l{self.lam}"


# (lambda, q, m, n, k, r) of the MiRitH parameter sets
MIRITH_SETS = {
    "mirith-Ia": (128, 16, 15, 15, 78, 6),
    "mirith-Ib": (128, 16, 16, 16, 142, 4),
    "mirith-IIIa": (192, 16, 19, 19, 109, 8),
    "mirith-IIIb": (192, 16, 19, 19, 167, 6),
    "mirith-Va": (256, 16, 21, 21, 189, 7),
    "mirith-Vb": (256, 16, 22, 22, 254, 6),
}

TOY_SETS = ("toy-2-3-3-2-1", "toy-3-4-4-3-2")

_TOY_RE = re.compile(r"^toy-(\d+)-(\d+)-(\d+)-(\d+)-(\d+)$")


def registry_names() -> list[str]:
    return list(MIRITH_SETS) + list(TOY_SETS)


def resolve(name: str) -> Params:
    """Look up a named set. Any ``toy-q-m-n-k-r`` name resolves with lambda = 128."""
    if name in MIRITH_SETS:
        lam, q, m, n, k, r = MIRITH_SETS[name]
        return Params(q, m, n, k, r, lam, name=name)
    match = _TOY_RE.match(name)
    if match:
        q, m, n, k, r = map(int, match.groups())
        return Params(q, m, n, k, r, 128, name=name)
    raise InvalidParams(f"unknown parameter set {name!r}")


def mirith_params() -> list[Params]:
    return [resolve(name) for name in MIRITH_SETS]
