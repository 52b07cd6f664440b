"""Truncated Laurent-series solutions with symbolic free parameters.

A degree-1 field with an exact indicial locus c admits the ansatz
y_i(T) = T^{-a_i} sum_j d_{i,j} T^j with d_{i,0} = c_i.  Matching orders
gives (K(c) - jI) d_j = -N_j where N_j collects the nonlinear part built
from lower coefficients.  At a resonance (j a positive integer eigenvalue
of K) the matrix is singular: consistent systems introduce one free
parameter per kernel direction, inconsistent ones are obstructions (the
log-modified continuation is out of scope here and the series beyond the
first obstruction is marked non-authoritative).

Everything is exact: coefficients are polynomials over Q in the parameters
alpha1, alpha2, ... introduced at the resonances, and the pole position
never appears in them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .exactalg import ExactMatrix, Inconsistent, MultiPoly, as_fraction
from .kovalevskaya import exact_point, k_exponents
from .vfmodel import VectorField, WeightCertificate, verify_weight

__all__ = [
    "LaurentSolution",
    "ResonanceRecord",
    "SeriesClass",
    "TruncationBelowResonance",
    "OutsideHeuristicRadius",
    "build_series",
    "classify",
    "qh_coefficient_check",
    "residual_order",
    "initial_value_map",
    "series_json",
]


class TruncationBelowResonance(UserWarning):
    """Truncation order cuts off before the largest resonance."""


class OutsideHeuristicRadius(UserWarning):
    """Requested evaluation point fails the tail-decay test."""


@dataclass(frozen=True)
class ResonanceRecord:
    """One free parameter: enters at ``order`` along ``direction``.

    The anchor is the lowest component index where the direction does not
    vanish; the gauge normalizes that entry to 1 and clears both every
    other parameter direction and the particular solution there, so
    d_{anchor, order} is literally the bare parameter.
    """

    order: int
    parameter: str
    anchor: int
    direction: tuple[Fraction, ...]


@dataclass(frozen=True)
class SeriesClass:
    kind: str
    parameters: int
    first_obstruction: int | None

    def __str__(self) -> str:
        if self.kind == "principal":
            return "principal"
        if self.kind == "lower":
            return f"lower({self.parameters})"
        return f"obstructed({self.first_obstruction})"


@dataclass(frozen=True)
class LaurentSolution:
    """Truncated series y_i = T^{-a_i} sum_{j<=N} d_{i,j} T^j."""

    locus: tuple[Fraction, ...]
    weights: tuple[int, ...]
    truncation: int
    parameters: tuple[str, ...]
    coefficients: tuple[tuple[MultiPoly, ...], ...]
    resonances: tuple[ResonanceRecord, ...]
    obstructions: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.locus)

    @property
    def authoritative_through(self) -> int:
        if not self.obstructions:
            return self.truncation
        return min(self.obstructions) - 1

    def coefficient(self, i: int, j: int) -> MultiPoly:
        """d_{i,j} with i a 0-based component index."""
        return self.coefficients[i][j]

    def resonance_orders(self) -> tuple[int, ...]:
        return tuple(r.order for r in self.resonances)


def _mul_trunc(a: list, b: list, cap: int) -> list:
    out: list = [MultiPoly.zero() for _ in range(cap + 1)]
    for i, left in enumerate(a[:cap + 1]):
        if not left:
            continue
        for k, right in enumerate(b[:cap + 1 - i]):
            if not right:
                continue
            out[i + k] = out[i + k] + left * right
    return out


def _monomial_series(coefficient: Fraction, exps: Sequence[int],
                     partials: list[list], cap: int) -> list:
    """Truncated expansion of coeff * prod_l y_l^{e_l} with poles stripped."""
    acc = [MultiPoly.constant(coefficient)]
    for l, e in enumerate(exps):
        for _ in range(e):
            acc = _mul_trunc(acc, partials[l], cap)
    return acc + [MultiPoly.zero()] * (cap + 1 - len(acc))


def _field_orders(field: VectorField, partials: list[list],
                  cap: int) -> list[list]:
    """Coefficients of T^{a_i+1} f_i(y) through T^cap, one list per i."""
    out = []
    for comp in field.components:
        total = [MultiPoly.zero() for _ in range(cap + 1)]
        idx = [field.variables.index(v) for v in comp.vars]
        for exps, c in comp.terms.items():
            full = [0] * field.dim
            for k, v_i in enumerate(idx):
                full[v_i] = exps[k]
            term = _monomial_series(c, full, partials, cap)
            total = [t + u for t, u in zip(total, term)]
        out.append(total)
    return out


def _monomials_of(polys: Sequence[MultiPoly]):
    """Align a coefficient vector and split it into shared alpha-monomials."""
    union = tuple(sorted(set().union(*(p.vars for p in polys))))
    aligned = [p.embed(union) if p.vars != union else p for p in polys]
    exponents = sorted(set().union(*(p.terms.keys() for p in aligned)))
    for e in exponents:
        yield union, e, [p.terms.get(e, Fraction(0)) for p in aligned]


def _alpha_monomial(union: tuple[str, ...], e: tuple[int, ...]) -> MultiPoly:
    return MultiPoly(union, {e: Fraction(1)})


def build_series(field: VectorField, certificate: WeightCertificate, locus,
                 truncation: int | None = None) -> LaurentSolution:
    """Run the order-by-order recursion at an exact locus.

    The right-hand side at order j is split into alpha-monomials and each
    one is solved against K(c) - jI separately, which keeps the linear
    algebra over plain rationals.  Free parameters are introduced at
    consistent resonances with the anchor gauge described on
    ResonanceRecord; inconsistencies are recorded as obstructions and the
    recursion keeps going so later structure stays visible.
    """
    if certificate.degree != 1:
        raise ValueError("series construction needs a degree-1 field")
    if not verify_weight(field, certificate).ok:
        raise ValueError("weight certificate does not match the field")
    point = exact_point(locus)
    report = k_exponents(field, certificate, point)
    m = field.dim

    resonant_orders = sorted(
        int(r) for r, _ in report.exponents.rational_roots
        if r > 0 and r.denominator == 1)
    if truncation is None:
        truncation = (2 * max(resonant_orders) if resonant_orders
                      else max(certificate.weights) + 1)
    if truncation < 1:
        raise ValueError("truncation must be a positive order")
    if resonant_orders and truncation < max(resonant_orders):
        warnings.warn(
            f"truncation {truncation} stops before the largest resonance "
            f"{max(resonant_orders)}; parameters beyond it are lost",
            TruncationBelowResonance, stacklevel=2)

    coeffs: list[list[MultiPoly]] = [[MultiPoly.constant(c)] for c in point]
    resonances: list[ResonanceRecord] = []
    obstructions: list[int] = []

    for j in range(1, truncation + 1):
        partials = [coeffs[i] for i in range(m)]
        orders = _field_orders(field, partials, j)
        rhs = [orders[i][j] * -1 for i in range(m)]
        shifted = report.matrix - ExactMatrix.identity(m) * j

        kernel = shifted.kernel()
        d_j = [MultiPoly.zero() for _ in range(m)]
        anchors: list[int] = []
        directions: list[tuple[Fraction, ...]] = []
        if kernel:
            # Reduced row echelon form of the kernel gives the anchor
            # gauge directly: each direction is 1 at its own anchor and
            # 0 at every other direction's anchor.
            reduced, pivots = ExactMatrix(list(kernel)).rref()
            for row, anchor in zip(reduced.data, pivots):
                anchors.append(anchor)
                directions.append(tuple(row))

        obstructed_here = False
        if any(rhs):
            for union, e, values in _monomials_of(rhs):
                solved = shifted.solve_singular(values)
                if isinstance(solved, Inconsistent):
                    obstructed_here = True
                    continue
                particular = list(solved.particular)
                for anchor, direction in zip(anchors, directions):
                    if particular[anchor]:
                        shift = particular[anchor]
                        particular = [x - shift * d
                                      for x, d in zip(particular, direction)]
                mono = _alpha_monomial(union, e)
                for i in range(m):
                    if particular[i]:
                        d_j[i] = d_j[i] + mono * particular[i]

        for anchor, direction in zip(anchors, directions):
            name = f"alpha{len(resonances) + 1}"
            resonances.append(ResonanceRecord(j, name, anchor, direction))
            alpha = MultiPoly.variable(name)
            for i in range(m):
                if direction[i]:
                    d_j[i] = d_j[i] + alpha * direction[i]

        if obstructed_here:
            obstructions.append(j)
        for i in range(m):
            coeffs[i].append(d_j[i])

    return LaurentSolution(
        locus=point,
        weights=tuple(certificate.weights),
        truncation=truncation,
        parameters=tuple(r.parameter for r in resonances),
        coefficients=tuple(tuple(row) for row in coeffs),
        resonances=tuple(resonances),
        obstructions=tuple(obstructions),
    )


def classify(sol: LaurentSolution) -> SeriesClass:
    """Parameter-count verdict on a computed series.

    principal means every parameter slot is realized: the pole position
    plus one symbolic parameter per dimension beyond the first.  Any
    obstruction wins over counting, since the series stops being a pure
    power family there.
    """
    count = 1 + len(sol.parameters)
    if sol.obstructions:
        return SeriesClass("obstructed", count, min(sol.obstructions))
    if count == sol.dim:
        return SeriesClass("principal", count, None)
    return SeriesClass("lower", count, None)


def qh_coefficient_check(sol: LaurentSolution) -> tuple[tuple[int, int, tuple[int, ...]], ...]:
    """Monomial support law: every alpha-monomial of d_{i,j} weighs j.

    The weight of a parameter is its resonance order, so a monomial
    alpha^n contributes sum_l n_l kappa_l and must land exactly at j.
    Returns the violations as (component, order, exponent) triples; empty
    means the computed support matches the scaling structure.
    """
    kappa = {r.parameter: r.order for r in sol.resonances}
    violations = []
    for i, row in enumerate(sol.coefficients):
        for j, poly in enumerate(row):
            if j == 0 or not poly:
                continue
            for exps in poly.terms:
                weight = sum(n * kappa[v] for n, v in zip(exps, poly.vars))
                if weight != j:
                    violations.append((i, j, exps))
    return tuple(violations)


def residual_order(field: VectorField, certificate: WeightCertificate,
                   sol: LaurentSolution) -> int | None:
    """Lowest order with a nonzero back-substitution defect, if any.

    The defect of component i is T^{a_i+1} (y_i' - f_i(y)) expanded with
    the computed coefficients; with exact arithmetic every order at or
    below the point where truncation noise enters must vanish identically
    in the parameters.  None means no defect through the truncation order.
    """
    cap = sol.truncation
    partials = [list(row) for row in sol.coefficients]
    orders = _field_orders(field, partials, cap)
    first = None
    for i in range(field.dim):
        a_i = certificate.weights[i]
        for j in range(cap + 1):
            derivative = sol.coefficients[i][j] * (j - a_i)
            defect = derivative - orders[i][j]
            if defect:
                if first is None or j < first:
                    first = j
                break
    return first


def initial_value_map(sol: LaurentSolution, values: Mapping[str, object], z):
    """Evaluate the truncated series at the point z.

    values assigns numbers to the symbolic parameters plus the pole
    position alpha0 (missing names default to 0, unknown names are
    rejected).  With rational inputs the result is exact.  A crude tail
    test compares the last two nonzero term magnitudes and warns when
    they fail to decay.
    """
    unknown = set(values) - set(sol.parameters) - {"alpha0"}
    if unknown:
        raise KeyError(f"not series parameters: {sorted(unknown)}")
    assignment = {name: values.get(name, 0) for name in sol.parameters}
    try:
        # keep int/Fraction inputs exact; negative int powers would go float
        t = as_fraction(z) - as_fraction(values.get("alpha0", 0))
    except TypeError:
        t = z - values.get("alpha0", 0)
    if not t:
        raise ZeroDivisionError("evaluation point sits on the pole")
    out = []
    for i, row in enumerate(sol.coefficients):
        a_i = sol.weights[i]
        terms = []
        for j, poly in enumerate(row):
            needed = {v: assignment[v] for v in poly.vars}
            c = poly.evaluate(needed) if poly else 0
            terms.append(c)
        tail = [abs(complex(c)) * abs(complex(t)) ** j
                for j, c in enumerate(terms) if c]
        if len(tail) >= 2 and tail[-1] > tail[-2]:
            warnings.warn(
                f"component {i + 1}: truncated terms are growing at "
                f"|z - alpha0| = {abs(complex(t)):.3g}",
                OutsideHeuristicRadius, stacklevel=2)
        total = sum(c * t ** (j - a_i) for j, c in enumerate(terms) if c)
        out.append(total)
    return tuple(out)


def series_json(sol: LaurentSolution) -> list[dict]:
    """Coefficients in a stable, exact wire format.

    One entry per nonzero d_{i,j} with 1-based component index; the
    polynomial maps comma-joined exponent vectors (over sol.parameters,
    in order) to rational strings.
    """
    out = []
    for i, row in enumerate(sol.coefficients):
        for j, poly in enumerate(row):
            if not poly:
                continue
            position = {v: k for k, v in enumerate(sol.parameters)}
            entries = {}
            for exps, c in sorted(poly.terms.items()):
                full = [0] * len(sol.parameters)
                for v, e in zip(poly.vars, exps):
                    if e:
                        full[position[v]] = e
                key = ",".join(str(e) for e in full)
                entries[key] = str(Fraction(c))
            out.append({"i": i + 1, "j": j, "polynomial": entries})
    return out
