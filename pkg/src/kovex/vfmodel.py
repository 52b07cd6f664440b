"""Vector fields, weight certificates, Hamiltonian lifting, commutator checks.

A vector field is a tuple of polynomial components over a shared variable
tuple.  Weights live in separate certificate objects because one field can be
quasi-homogeneous for several unrelated weight vectors; the certificate is
what downstream analysis consumes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import gcd
from typing import Mapping, Sequence

from .exactalg import MultiPoly, solve_poly_system
from .vfparse import ProblemSpec


class DimensionMismatchError(ValueError):
    """Two fields (or a field and a point) disagree about the phase space."""


class UnpairedVariableError(ValueError):
    """A Hamiltonian needs conjugate variable pairs (q1, p1, q2, p2, ...)."""


@dataclass(frozen=True)
class VectorField:
    """Polynomial vector field dx_i/dz = components[i](x)."""

    variables: tuple[str, ...]
    components: tuple[MultiPoly, ...]

    def __post_init__(self):
        vars_t = tuple(self.variables)
        comps = tuple(self.components)
        if len(comps) != len(vars_t):
            raise DimensionMismatchError(
                f"{len(comps)} components for {len(vars_t)} variables")
        fixed = []
        for poly in comps:
            extra = set(poly.vars) - set(vars_t)
            if extra:
                raise DimensionMismatchError(
                    f"component uses undeclared variables {sorted(extra)}")
            fixed.append(poly.embed(vars_t))
        object.__setattr__(self, "variables", vars_t)
        object.__setattr__(self, "components", tuple(fixed))

    @property
    def dim(self) -> int:
        return len(self.variables)

    def is_zero(self) -> bool:
        return not any(self.components)

    def evaluate(self, point: Sequence) -> tuple:
        """Evaluate all components at a positional point."""
        if len(point) != self.dim:
            raise DimensionMismatchError(
                f"point of length {len(point)} in dimension {self.dim}")
        values = dict(zip(self.variables, point))
        return tuple(f.evaluate(values) for f in self.components)

    def jacobian(self) -> tuple[tuple[MultiPoly, ...], ...]:
        return tuple(tuple(f.diff(v) for v in self.variables)
                     for f in self.components)

    def substitute(self, mapping: Mapping[str, object]) -> tuple[MultiPoly, ...]:
        return tuple(f.substitute(mapping) for f in self.components)

    def __str__(self) -> str:
        lines = [f"d{v}/dz = {f}" for v, f in zip(self.variables, self.components)]
        return "\n".join(lines)


@dataclass(frozen=True)
class WeightCertificate:
    """A weight vector and the common quasi-homogeneity degree it certifies."""

    weights: tuple[int, ...]
    degree: int


@dataclass(frozen=True)
class WeightCheckResult:
    ok: bool
    violations: tuple[tuple[int, tuple[int, ...]], ...]
    """(1-based component index, offending monomial exponent tuple) pairs."""


def verify_weight(field: VectorField, certificate: WeightCertificate) -> WeightCheckResult:
    """Check the monomial law: every exponent tuple e of component i satisfies
    sum_j a_j e_j = a_i + degree.  Zero components are vacuously fine."""
    weights = certificate.weights
    if len(weights) != field.dim:
        raise DimensionMismatchError("weight vector length mismatches the field")
    violations = []
    for i, poly in enumerate(field.components):
        target = weights[i] + certificate.degree
        for exps in sorted(poly.terms):
            if sum(w * e for w, e in zip(weights, exps)) != target:
                violations.append((i + 1, exps))
    return WeightCheckResult(not violations, tuple(violations))


def euler_identity_check(field: VectorField, certificate: WeightCertificate) -> tuple[int, ...]:
    """Indices (1-based) of components breaking the differential form of the
    weight law: sum_j a_j x_j df_i/dx_j = (a_i + degree) f_i."""
    weights = certificate.weights
    if len(weights) != field.dim:
        raise DimensionMismatchError("weight vector length mismatches the field")
    failing = []
    for i, poly in enumerate(field.components):
        lhs = MultiPoly.zero(field.variables)
        for w, v in zip(weights, field.variables):
            lhs = lhs + MultiPoly.variable(v, field.variables) * poly.diff(v) * w
        rhs = poly * (weights[i] + certificate.degree)
        if lhs != rhs:
            failing.append(i + 1)
    return tuple(failing)


@dataclass(frozen=True)
class WeightFamily:
    """All admissible multiples of one primitive weight direction."""

    primitive: tuple[int, ...]
    members: tuple[WeightCertificate, ...]


@dataclass(frozen=True)
class WeightInference:
    families: tuple[WeightFamily, ...]
    degenerate: bool
    """degenerate means the zero field: every weight vector is admissible."""


def infer_weights(field: VectorField, max_weight: int = 12,
                  min_degree: int = 1) -> WeightInference:
    """Enumerate weight vectors in [1..max_weight]^m admitting a uniform degree.

    Exhaustive search; cost grows as max_weight**m, fine for the small phase
    spaces this tool targets.  Results are grouped by primitive (gcd-reduced)
    direction since proportional weights certify the same scaling structure
    with different degrees.
    """
    if field.is_zero():
        return WeightInference((), True)

    admissible: list[WeightCertificate] = []
    for weights in product(range(1, max_weight + 1), repeat=field.dim):
        degree = None
        ok = True
        for i, poly in enumerate(field.components):
            if not poly:
                continue
            for exps in poly.terms:
                d = sum(w * e for w, e in zip(weights, exps)) - weights[i]
                if degree is None:
                    degree = d
                elif d != degree:
                    ok = False
                    break
            if not ok:
                break
        if ok and degree is not None and degree >= min_degree:
            admissible.append(WeightCertificate(weights, degree))

    grouped: dict[tuple[int, ...], list[WeightCertificate]] = {}
    for cert in admissible:
        g = gcd(*cert.weights)
        primitive = tuple(w // g for w in cert.weights)
        grouped.setdefault(primitive, []).append(cert)
    families = tuple(
        WeightFamily(primitive, tuple(sorted(members, key=lambda c: c.weights)))
        for primitive, members in sorted(grouped.items()))
    return WeightInference(families, False)


def hamiltonian_to_field(h: MultiPoly, variables: Sequence[str]) -> VectorField:
    """Lift a Hamiltonian to its canonical field on interleaved (q, p) pairs.

    Variables are taken in declaration order as (q1, p1, q2, p2, ...); the
    components are dq_k/dz = dH/dp_k and dp_k/dz = -dH/dq_k.
    """
    vars_t = tuple(variables)
    if len(vars_t) % 2 != 0:
        raise UnpairedVariableError(
            f"need an even number of variables, got {len(vars_t)}")
    extra = set(h.vars) - set(vars_t)
    if extra:
        raise UnpairedVariableError(
            f"Hamiltonian uses undeclared variables {sorted(extra)}")
    h = h.embed(vars_t)
    components: list[MultiPoly] = []
    for k in range(0, len(vars_t), 2):
        q, p = vars_t[k], vars_t[k + 1]
        components.append(h.diff(p))
        components.append(-h.diff(q))
    return VectorField(vars_t, tuple(components))


def lie_bracket(f: VectorField, g: VectorField) -> VectorField:
    """[F, G]_i = sum_j (f_j dg_i/dx_j - g_j df_i/dx_j)."""
    if f.variables != g.variables:
        raise DimensionMismatchError(
            f"fields live on different spaces: {f.variables} vs {g.variables}")
    vars_t = f.variables
    components = []
    for i in range(f.dim):
        acc = MultiPoly.zero(vars_t)
        for j, v in enumerate(vars_t):
            acc = acc + f.components[j] * g.components[i].diff(v)
            acc = acc - g.components[j] * f.components[i].diff(v)
        components.append(acc)
    return VectorField(vars_t, tuple(components))


def commutes(f: VectorField, g: VectorField) -> bool:
    return lie_bracket(f, g).is_zero()


def field_degree(field: VectorField, weights: Sequence[int]) -> int | None:
    """The uniform quasi-homogeneity degree for the given weights, or None."""
    ws = tuple(weights)
    degree = None
    for i, poly in enumerate(field.components):
        if not poly:
            continue
        d = poly.quasi_homogeneous_degree(ws)
        if d is None:
            return None
        d -= ws[i]
        if degree is None:
            degree = d
        elif d != degree:
            return None
    if degree is None:
        return None
    if degree != int(degree):
        return None
    return int(degree)


@dataclass(frozen=True)
class ZeroSetCheck:
    """Is the origin the only zero of the field?

    status is "ok" (certified), "counterexample" (witness holds a nonzero
    exact zero of the field), or "undecided" (the exact solver could not
    enumerate the zero set completely).
    """

    status: str
    witness: tuple[Fraction, ...] | None = None


def check_zero_set(field: VectorField) -> ZeroSetCheck:
    result = solve_poly_system(field.components, field.variables)
    zero = tuple([Fraction(0)] * field.dim)
    nonzero = sorted(p for p in result.points if p != zero)
    if nonzero:
        return ZeroSetCheck("counterexample", nonzero[0])
    if result.complete and not result.has_free_parameters:
        return ZeroSetCheck("ok")
    return ZeroSetCheck("undecided")


def fields_from_problem(spec: ProblemSpec) -> tuple[VectorField, VectorField | None]:
    """Materialize the field (and the commuting field if declared)."""
    if spec.f_components is not None:
        f = VectorField(spec.variables, spec.f_components)
    else:
        f = hamiltonian_to_field(spec.h_f, spec.variables)
    g = None
    if spec.g_components is not None:
        g = VectorField(spec.variables, spec.g_components)
    elif spec.h_g is not None:
        g = hamiltonian_to_field(spec.h_g, spec.variables)
    return f, g
