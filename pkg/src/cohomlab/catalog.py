"""Admissible base spaces and structure parameters.

The base space enters every downstream formula only through the integer pair
(m, p); the catalog is therefore plain data: four parameterized families and
two sporadic rows, with their admissibility conditions, plus a "custom" escape
hatch for raw (m, p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import ValidationError


@dataclass(frozen=True)
class SpaceRecord:
    """One admissible base space, reduced to the integers the formulas use."""

    label: str
    m: int
    p: int
    constraint_note: str = ""

    def __post_init__(self):
        if self.m < 2:
            raise ValidationError(f"m must be >= 2, got {self.m}")
        if self.p < 1:
            raise ValidationError(f"p must be >= 1, got {self.p}")


@dataclass(frozen=True)
class TableRow:
    """A row of the base-space table; parameterized rows carry a maker."""

    label: str
    m_rule: str
    p_rule: str
    conditions: str
    maker: Callable[..., SpaceRecord] | None = None


def grassmannian(k1: int, k2: int) -> SpaceRecord:
    if not (isinstance(k1, int) and isinstance(k2, int)):
        raise ValidationError("k1, k2 must be integers")
    if not (k2 >= k1 >= 1):
        raise ValidationError(f"need k2 >= k1 >= 1, got k1={k1}, k2={k2}")
    return SpaceRecord(
        f"SU({k1 + k2})/S(U({k1})xU({k2}))", k1 * k2 + 1, k1 + k2, "k2 >= k1 >= 1"
    )


def projective_space(m: int) -> SpaceRecord:
    """CP^(m-1), the Grassmannian row with k1 = 1, k2 = m - 1."""
    if m < 2:
        raise ValidationError(f"CP^(m-1) needs m >= 2, got m={m}")
    return grassmannian(1, m - 1)


def so_even_mod_u(k: int) -> SpaceRecord:
    if k < 5:
        raise ValidationError(f"SO(2k)/U(k) needs k >= 5, got k={k}")
    return SpaceRecord(f"SO({2 * k})/U({k})", k * (k - 1) // 2 + 1, 2 * (k - 1), "k >= 5")


def sp_mod_u(k: int) -> SpaceRecord:
    if k < 2:
        raise ValidationError(f"Sp(k)/U(k) needs k >= 2, got k={k}")
    return SpaceRecord(f"Sp({k})/U({k})", k * (k + 1) // 2 + 1, k + 1, "k >= 2")


def real_quadric(k: int) -> SpaceRecord:
    if k < 5:
        raise ValidationError(f"SO(k+2)/(SO(2)xSO(k)) needs k >= 5, got k={k}")
    return SpaceRecord(f"SO({k + 2})/(SO(2)xSO({k}))", k + 1, k, "k >= 5")


# Sporadic rows are fixed constants.
E6_SPACE = SpaceRecord("E6/(SO(2).Spin(10))", 17, 12, "-")
E7_SPACE = SpaceRecord("E7/(SO(2).E6)", 28, 18, "-")


def custom_space(m: int, p: int) -> SpaceRecord:
    """Raw (m, p): every downstream formula depends only on these integers."""
    return SpaceRecord("custom", int(m), int(p))


TABLE: tuple[TableRow, ...] = (
    TableRow(
        "SU(k1+k2)/S(U(k1)xU(k2))", "k1*k2+1", "k1+k2", "k2 >= k1 >= 1", grassmannian
    ),
    TableRow("SO(2k)/U(k)", "k(k-1)/2+1", "2(k-1)", "k >= 5", so_even_mod_u),
    TableRow("Sp(k)/U(k)", "k(k+1)/2+1", "k+1", "k >= 2", sp_mod_u),
    TableRow("SO(k+2)/(SO(2)xSO(k))", "k+1", "k", "k >= 5", real_quadric),
    TableRow("E6/(SO(2).Spin(10))", "17", "12", "-", lambda: E6_SPACE),
    TableRow("E7/(SO(2).E6)", "28", "18", "-", lambda: E7_SPACE),
)


def list_spaces() -> tuple[TableRow, ...]:
    """The six families with their (m, p) rules and conditions."""
    return TABLE


def table_as_json() -> list[dict]:
    return [
        {"label": row.label, "m": row.m_rule, "p": row.p_rule, "conditions": row.conditions}
        for row in TABLE
    ]


@dataclass(frozen=True)
class FamilyParams:
    """Structure parameters (m, p, n, family) plus the frame constant lambda.

    Immutable; safe to share across workers.  ``family`` is 1 (cylinder,
    no singular orbit), 2 (line bundle, one singular orbit), 3 (compact, no
    singular orbit), or 4 (projective-line bundle, two singular orbits).
    """

    space: SpaceRecord
    n: int
    family: int
    lam: float = 0.0

    def __post_init__(self):
        if self.family not in (1, 2, 3, 4):
            raise ValidationError(f"family must be in 1..4, got {self.family}")
        if not isinstance(self.n, int) or self.n < 1:
            raise ValidationError(f"twist n must be a positive integer, got {self.n}")
        object.__setattr__(self, "lam", math.sqrt(2.0 * self.m / (self.m - 1)))

    @property
    def m(self) -> int:
        return self.space.m

    @property
    def p(self) -> int:
        return self.space.p

    @property
    def mn_over_p(self) -> float:
        return self.m * self.n / self.p

    @property
    def tt_coeff(self) -> float:
        """Metric coefficient on the circle direction: 2m(m-1)n^2/p^2."""
        m = self.m
        return 2.0 * m * (m - 1) * self.n**2 / self.p**2

    @property
    def has_singular_orbit(self) -> bool:
        return self.family in (2, 4)

    def describe(self) -> dict:
        return {
            "space": self.space.label,
            "m": self.m,
            "p": self.p,
            "n": self.n,
            "family": self.family,
            "lambda": self.lam,
        }


def make_params(space: SpaceRecord, n: int, family: int) -> FamilyParams:
    """Bundle a base space with the twist n and the family tag i in {1..4}."""
    return FamilyParams(space=space, n=n, family=family)


def params_from_raw(m: int, p: int, n: int, family: int) -> FamilyParams:
    return make_params(custom_space(m, p), n, family)
