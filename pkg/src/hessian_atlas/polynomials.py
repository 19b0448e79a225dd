"""Bivariate and trivariate polynomial algebra on dense exponent maps.

A polynomial is stored as a mapping from exponent tuples to float
coefficients; the zero polynomial is the empty mapping.  Coefficients enter
the system as exact rationals (see :mod:`hessian_atlas.parsing`) and are
converted once to double precision here; all arithmetic after that point is
floating point with a relative pruning threshold that keeps spurious terms
from inflating degrees.

Evaluation goes through cached dense coefficient arrays and numpy's
iterated-Horner kernels (``polyval2d`` / ``polyval3d``), which accept
scalars and broadcast over arrays alike.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np
from numpy.polynomial import polynomial as npoly

# Relative magnitude below which a coefficient produced by arithmetic is
# treated as a rounding artifact and dropped.
RELATIVE_COEFF_FLOOR = 1e-12

_VAR_INDEX = {"x": 0, "y": 1, 0: 0, 1: 1}


class DegreeDeficitError(ValueError):
    """Raised when a homogenization target degree is below the actual degree."""


def _prune(coeffs: Mapping[tuple, float], relative: bool = True) -> dict:
    """Drop exact zeros, and (if ``relative``) terms below the floor."""
    if not coeffs:
        return {}
    if relative:
        scale = max(abs(c) for c in coeffs.values())
        floor = RELATIVE_COEFF_FLOOR * scale
        return {e: float(c) for e, c in coeffs.items() if abs(c) > floor}
    return {e: float(c) for e, c in coeffs.items() if c != 0.0}


@dataclass(frozen=True)
class BivariatePolynomial:
    """Real polynomial in x, y as a map ``(i, j) -> coefficient``."""

    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _prune(self.coeffs, relative=False))

    @classmethod
    def from_terms(cls, terms: Mapping[tuple, float]) -> "BivariatePolynomial":
        return cls(dict(terms))

    @classmethod
    def zero(cls) -> "BivariatePolynomial":
        return cls({})

    @classmethod
    def constant(cls, c: float) -> "BivariatePolynomial":
        return cls({(0, 0): float(c)} if c != 0 else {})

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.coeffs:
            return -1
        return max(i + j for i, j in self.coeffs)

    @cached_property
    def coeff_scale(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    @cached_property
    def _dense(self) -> np.ndarray:
        if not self.coeffs:
            return np.zeros((1, 1))
        dx = max(i for i, _ in self.coeffs)
        dy = max(j for _, j in self.coeffs)
        c = np.zeros((dx + 1, dy + 1))
        for (i, j), v in self.coeffs.items():
            c[i, j] = v
        return c

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "BivariatePolynomial") -> "BivariatePolynomial":
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0.0) + c
        return BivariatePolynomial(_prune(out))

    def __sub__(self, other: "BivariatePolynomial") -> "BivariatePolynomial":
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0.0) - c
        return BivariatePolynomial(_prune(out))

    def __neg__(self) -> "BivariatePolynomial":
        return BivariatePolynomial({e: -c for e, c in self.coeffs.items()})

    def __mul__(self, other) -> "BivariatePolynomial":
        if isinstance(other, (int, float)):
            if other == 0:
                return BivariatePolynomial({})
            return BivariatePolynomial({e: c * other for e, c in self.coeffs.items()})
        out: dict = {}
        for (i1, j1), c1 in self.coeffs.items():
            for (i2, j2), c2 in other.coeffs.items():
                e = (i1 + i2, j1 + j2)
                out[e] = out.get(e, 0.0) + c1 * c2
        return BivariatePolynomial(_prune(out))

    __rmul__ = __mul__

    def differentiate(self, var, order: int = 1) -> "BivariatePolynomial":
        """Exact term-by-term partial derivative of the given order."""
        if order < 0:
            raise ValueError("derivative order must be >= 0")
        axis = _VAR_INDEX[var]
        coeffs = self.coeffs
        for _ in range(order):
            nxt: dict = {}
            for (i, j), c in coeffs.items():
                k = i if axis == 0 else j
                if k == 0:
                    continue
                e = (i - 1, j) if axis == 0 else (i, j - 1)
                nxt[e] = nxt.get(e, 0.0) + k * c
            coeffs = nxt
        return BivariatePolynomial(dict(coeffs))

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, x, y):
        """Evaluate at a point or elementwise over broadcastable arrays."""
        if self.is_zero:
            return np.zeros(np.broadcast(x, y).shape) if np.ndim(x) or np.ndim(y) else 0.0
        out = npoly.polyval2d(x, y, self._dense)
        return float(out) if np.ndim(out) == 0 else out

    def evaluate_grid(self, xs, ys):
        """Evaluate on the cartesian grid ``xs × ys`` (outer-product form)."""
        if self.is_zero:
            return np.zeros((len(xs), len(ys)))
        return npoly.polygrid2d(xs, ys, self._dense)

    # -- structure ----------------------------------------------------------

    def homogeneous_parts(self) -> list["HomogeneousPolynomial"]:
        """Split into homogeneous parts, indexed 0..degree; empty for zero."""
        if self.is_zero:
            return []
        parts: list[dict] = [{} for _ in range(self.degree + 1)]
        for (i, j), c in self.coeffs.items():
            parts[i + j][(i, j)] = c
        return [HomogeneousPolynomial(p, degree_hint=d) for d, p in enumerate(parts)]

    def leading_form(self) -> "HomogeneousPolynomial":
        if self.is_zero:
            raise ValueError("zero polynomial has no leading form")
        n = self.degree
        return HomogeneousPolynomial(
            {e: c for e, c in self.coeffs.items() if e[0] + e[1] == n}, degree_hint=n
        )

    def to_string(self) -> str:
        """Canonical text form; round-trips through the expression parser."""
        if self.is_zero:
            return "0"
        def fmt(c: float) -> str:
            if c == int(c) and abs(c) < 1e15:
                return str(int(c))
            return repr(c)
        pieces = []
        for (i, j) in sorted(self.coeffs, key=lambda e: (-(e[0] + e[1]), -e[0])):
            c = self.coeffs[(i, j)]
            mono = "*".join(
                ([f"x^{i}" if i > 1 else "x"] if i else [])
                + ([f"y^{j}" if j > 1 else "y"] if j else [])
            )
            if not mono:
                term = fmt(c)
            elif c == 1:
                term = mono
            elif c == -1:
                term = "-" + mono
            else:
                term = f"{fmt(c)}*{mono}"
            if pieces and not term.startswith("-"):
                pieces.append("+")
            pieces.append(term)
        return _join_terms(pieces)


def _join_terms(pieces: list[str]) -> str:
    out = []
    for p in pieces:
        if p == "+":
            out.append(" + ")
        elif p.startswith("-") and out:
            out.append(" - " + p[1:])
        elif p.startswith("-"):
            out.append("-" + p[1:])
        else:
            out.append(p)
    return "".join(out)


@dataclass(frozen=True)
class HomogeneousPolynomial(BivariatePolynomial):
    """Bivariate polynomial whose monomials all share one total degree."""

    degree_hint: int = -1

    def __post_init__(self):
        super().__post_init__()
        degs = {i + j for i, j in self.coeffs}
        if len(degs) > 1:
            raise ValueError(f"not homogeneous: degrees {sorted(degs)}")
        if degs:
            d = degs.pop()
            if self.degree_hint >= 0 and d != self.degree_hint:
                raise ValueError(f"declared degree {self.degree_hint}, actual {d}")
            object.__setattr__(self, "degree_hint", d)

    def restrict_chart_x(self) -> np.ndarray:
        """Coefficients (ascending) of t -> p(1, t)."""
        d = max(self.degree_hint, 0)
        out = np.zeros(d + 1)
        for (i, j), c in self.coeffs.items():
            out[j] = c
        return out

    def restrict_chart_y(self) -> np.ndarray:
        """Coefficients (ascending) of u -> p(u, 1)."""
        d = max(self.degree_hint, 0)
        out = np.zeros(d + 1)
        for (i, j), c in self.coeffs.items():
            out[i] = c
        return out


@dataclass(frozen=True)
class TrivariateHomogeneous:
    """Homogeneous polynomial in three variables as ``(i, j, k) -> coefficient``."""

    coeffs: dict = field(default_factory=dict)
    degree: int = -1

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _prune(self.coeffs, relative=False))
        degs = {sum(e) for e in self.coeffs}
        if len(degs) > 1:
            raise ValueError(f"not homogeneous: degrees {sorted(degs)}")
        if degs:
            d = degs.pop()
            if self.degree >= 0 and d != self.degree:
                raise ValueError(f"declared degree {self.degree}, actual {d}")
            object.__setattr__(self, "degree", d)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @cached_property
    def coeff_scale(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    @cached_property
    def _dense(self) -> np.ndarray:
        if not self.coeffs:
            return np.zeros((1, 1, 1))
        d = [max(e[a] for e in self.coeffs) for a in range(3)]
        c = np.zeros((d[0] + 1, d[1] + 1, d[2] + 1))
        for e, v in self.coeffs.items():
            c[e] = v
        return c

    def evaluate(self, u, v, w):
        """Evaluate at a triple; broadcasts over arrays."""
        if self.is_zero:
            if np.ndim(u) or np.ndim(v) or np.ndim(w):
                return np.zeros(np.broadcast(u, v, w).shape)
            return 0.0
        out = npoly.polyval3d(u, v, w, self._dense)
        return float(out) if np.ndim(out) == 0 else out

    def partial(self, axis: int) -> "TrivariateHomogeneous":
        out: dict = {}
        for e, c in self.coeffs.items():
            k = e[axis]
            if k == 0:
                continue
            ne = list(e)
            ne[axis] -= 1
            out[tuple(ne)] = out.get(tuple(ne), 0.0) + k * c
        return TrivariateHomogeneous(out)

    @cached_property
    def gradient_parts(self) -> tuple:
        return (self.partial(0), self.partial(1), self.partial(2))

    def gradient(self, u, v, w):
        gu, gv, gw = self.gradient_parts
        return np.stack(
            [np.asarray(gu.evaluate(u, v, w), dtype=float),
             np.asarray(gv.evaluate(u, v, w), dtype=float),
             np.asarray(gw.evaluate(u, v, w), dtype=float)],
            axis=-1,
        )

    def restrict_chart(self, axis: int) -> BivariatePolynomial:
        """Pin the given variable to 1, returning a bivariate polynomial.

        Remaining variables keep their cyclic order: axis 2 gives (u, v),
        axis 0 gives (v, w), axis 1 gives (u, w).
        """
        keep = [a for a in range(3) if a != axis]
        out: dict = {}
        for e, c in self.coeffs.items():
            key = (e[keep[0]], e[keep[1]])
            out[key] = out.get(key, 0.0) + c
        return BivariatePolynomial(_prune(out))

    def restrict_to_infinity(self) -> HomogeneousPolynomial:
        """Terms with zero exponent in the third variable, as a binary form."""
        out = {(i, j): c for (i, j, k), c in self.coeffs.items() if k == 0}
        return HomogeneousPolynomial(out)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            if other == 0:
                return TrivariateHomogeneous({})
            return TrivariateHomogeneous({e: c * other for e, c in self.coeffs.items()})
        out: dict = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2])
                out[e] = out.get(e, 0.0) + c1 * c2
        return TrivariateHomogeneous(_prune(out))

    __rmul__ = __mul__

    def __add__(self, other):
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0.0) + c
        return TrivariateHomogeneous(_prune(out))

    def __sub__(self, other):
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0.0) - c
        return TrivariateHomogeneous(_prune(out))

    def __neg__(self):
        return TrivariateHomogeneous({e: -c for e, c in self.coeffs.items()})


def homogenize(p: BivariatePolynomial, target_degree: int) -> TrivariateHomogeneous:
    """Pad each monomial with the power of a third variable reaching ``target_degree``.

    The result R satisfies R(x, y, 1) = p(x, y).
    """
    if target_degree < p.degree:
        raise DegreeDeficitError(
            f"degree deficit: target {target_degree} < degree {p.degree}"
        )
    return TrivariateHomogeneous(
        {(i, j, target_degree - i - j): c for (i, j), c in p.coeffs.items()}
    )


def poly_from_fractions(table: Mapping[tuple, "Fraction"]) -> BivariatePolynomial:
    """Single rational-to-float conversion point for parsed coefficients."""
    return BivariatePolynomial({e: float(c) for e, c in table.items() if c != 0})
