"""Lower-family predictions from a commuting field.

A second field G commuting with the degree-1 field F and scaling with
degree gamma under the same weights acts on F's principal series family.
Substituting the family into G and collecting orders of the expansion
variable gives vectors G_k of parameter polynomials; the leading block,
corrected for the drift of the pole position, is a small polynomial flow
on the free parameters alpha1..alpha_{m-1} together with a shift
coefficient driving alpha0.  The indicial data of that flow predicts the
exponent multisets of F's lower balance families.

The prediction is computed along two independent routes and both are
reported: an exact route on rescaled parameter coordinates, where the
indicial system clears to a polynomial system over Q and the exponent
matrix has a closed form, and a direct route that hunts the flow's own
indicial loci numerically and reads the multiset off the full (pole
position included) exponent matrix.  The routes see different
coordinates, so agreement is a genuine cross-check, not a replay.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exactalg import (
    ExactMatrix,
    MultiPoly,
    RootSet,
    as_fraction,
    roots_exact_first,
    snap_rational,
    solve_poly_system,
)
from .kovalevskaya import (
    NoLocusFound,
    exact_point,
    find_loci,
    k_exponents,
    kovalevskaya_matrix,
    numeric_exponents,
)
from .laurent import LaurentSolution, _field_orders, classify
from .vfmodel import VectorField, WeightCertificate, field_degree

__all__ = [
    "DeformationCheck",
    "DegenerationReport",
    "GExpansion",
    "G0IdenticallyZero",
    "InconsistentG0",
    "ParamFlow",
    "TruncationTooShort",
    "UnrescalableLocus",
    "deformed_field_check",
    "degenerate_gamma1",
    "degenerate_gamma_ge2",
    "expansion_support_check",
    "flow_ladder_check",
    "flow_support_check",
    "g_expansion",
    "g0_nonzero_certificate",
    "hamiltonian_pairing_check",
    "kernel_identity_check",
    "param_flow",
]


class TruncationTooShort(ValueError):
    """The series family does not reach the order the expansion needs."""


class InconsistentG0(ValueError):
    """The leading expansion block is not a multiple of (a_i c_i)."""


class G0IdenticallyZero(ValueError):
    """The shift coefficient vanishes identically; no rescaled flow exists."""


class UnrescalableLocus(UserWarning):
    """A flow locus where the shift coefficient vanishes was skipped."""


@dataclass(frozen=True)
class GExpansion:
    """Order-by-order coefficients of a field along a series family.

    vectors[k][i] is the polynomial coefficient of T^{k-a_i-gamma} in
    g_i(y(T)), where y is the parametrized family the expansion was built
    from.  Uniform quasi-homogeneity makes the pole offset the same for
    every monomial, so each order is a single parameter polynomial.
    """

    vectors: tuple[tuple[MultiPoly, ...], ...]
    gamma: int

    @property
    def count(self) -> int:
        return len(self.vectors)

    def vector(self, k: int) -> tuple[MultiPoly, ...]:
        return self.vectors[k]


def g_expansion(g_field: VectorField, sol: LaurentSolution,
                count: int | None = None) -> GExpansion:
    """Expand a quasi-homogeneous field along a computed series family.

    The degree of g_field is inferred from the series weights; a field
    without a uniform degree is rejected.  Orders are only trustworthy as
    far as the family itself, so asking past sol.authoritative_through
    raises TruncationTooShort instead of returning contaminated vectors.
    """
    if g_field.dim != sol.dim:
        raise ValueError(
            f"field dimension {g_field.dim} does not match the series ({sol.dim})")
    gamma = field_degree(g_field, sol.weights)
    if gamma is None:
        raise ValueError(
            "field has no uniform quasi-homogeneous degree for the series weights")
    if count is None:
        count = sol.authoritative_through + 1
    if count < 1:
        raise ValueError("expansion needs at least the leading order")
    if count - 1 > sol.authoritative_through:
        raise TruncationTooShort(
            f"expansion through order {count - 1} needs the series "
            f"authoritative through that order (it stops at "
            f"{sol.authoritative_through})")
    partials = [list(row) for row in sol.coefficients]
    orders = _field_orders(g_field, partials, count - 1)
    vectors = tuple(tuple(orders[i][k] for i in range(g_field.dim))
                    for k in range(count))
    return GExpansion(vectors=vectors, gamma=gamma)


def expansion_support_check(expansion: GExpansion,
                            sol: LaurentSolution) -> tuple[tuple[int, int, tuple[int, ...]], ...]:
    """Monomial support law for the expansion: order k carries weight k.

    Weighing a parameter by its resonance order, every monomial of
    vectors[k][i] must weigh exactly k.  Violations come back as
    (component, order, exponent) triples; empty means the law holds.
    """
    kappa = {r.parameter: r.order for r in sol.resonances}
    violations = []
    for k, vec in enumerate(expansion.vectors):
        for i, poly in enumerate(vec):
            for exps in poly.terms:
                weight = sum(n * kappa[v] for n, v in zip(exps, poly.vars))
                if weight != k:
                    violations.append((i, k, exps))
    return tuple(violations)


def kernel_identity_check(field: VectorField, certificate: WeightCertificate,
                          locus, expansion: GExpansion) -> tuple[bool, ...]:
    """Exact kernel identities for the low expansion orders.

    For k below gamma the order-k vector must satisfy
    (K(c) + (gamma-k) I) G_k = 0 identically in the parameters: the
    expansion of a commuting field starts inside eigenspaces of the
    exponent matrix.  Returns one bool per k in 0..gamma-1.
    """
    gamma = expansion.gamma
    if expansion.count < gamma:
        raise TruncationTooShort(
            f"kernel identities need orders 0..{gamma - 1}, expansion has "
            f"{expansion.count}")
    matrix = kovalevskaya_matrix(field, certificate, locus)
    m = field.dim
    results = []
    for k in range(gamma):
        vec = expansion.vector(k)
        ok = True
        for i in range(m):
            acc = vec[i] * (gamma - k)
            for j in range(m):
                if matrix.data[i][j]:
                    acc = acc + vec[j] * matrix.data[i][j]
            if acc:
                ok = False
                break
        results.append(ok)
    return tuple(results)


@dataclass(frozen=True)
class ParamFlow:
    """The induced flow on the free parameters of a principal family.

    ghat0 drives the pole position (d alpha0 = ghat0(alpha)); ghat[l-1]
    drives alpha_l.  On the parameters alone the flow is again a
    quasi-homogeneous field: weights kappa (the resonance orders) and
    degree gamma, which subsystem_field() packages for reuse by the locus
    and exponent machinery.
    """

    ghat0: MultiPoly
    ghat: tuple[MultiPoly, ...]
    kappa: tuple[int, ...]
    gamma: int
    parameters: tuple[str, ...]

    def subsystem_field(self) -> VectorField:
        return VectorField(self.parameters, self.ghat)


def param_flow(expansion: GExpansion, sol: LaurentSolution) -> ParamFlow:
    """Extract the parameter flow from an expansion along a principal family.

    The shift coefficient ghat0 is the ratio of the order gamma-1 vector
    to the eigenvector (a_i c_i); rows where the eigenvector vanishes must
    vanish too, and every other row must give the same ratio, else the
    expansion contradicts the kernel structure and InconsistentG0 is
    raised.  Each ghat_l is read off at the anchor component of its
    parameter, where the series coefficient is the bare parameter and the
    order ladder unwinds to

        ghat_l = g_{i, kappa_l + gamma}
                 - (a_i - 1 - kappa_l) d_{i, kappa_l + 1} ghat0.
    """
    verdict = classify(sol)
    if verdict.kind != "principal":
        raise ValueError(
            f"parameter flow needs a principal family, got {verdict}")
    gamma = expansion.gamma
    if gamma < 1:
        raise ValueError("commuting degree must be at least 1")
    kappa = sol.resonance_orders()
    top = max(kappa) + gamma if kappa else gamma - 1
    if expansion.count <= top:
        raise TruncationTooShort(
            f"flow extraction needs expansion orders through {top}, "
            f"expansion has {expansion.count}")

    weights = sol.weights
    leading = expansion.vector(gamma - 1)
    scales = [Fraction(a) * c for a, c in zip(weights, sol.locus)]
    ghat0 = None
    for i, scale in enumerate(scales):
        if scale:
            ghat0 = leading[i] / scale
            break
    if ghat0 is None:
        if any(leading):
            raise InconsistentG0(
                "leading expansion order is nonzero at the zero locus")
        ghat0 = MultiPoly.zero()
    for i, scale in enumerate(scales):
        if scale == 0:
            if leading[i]:
                raise InconsistentG0(
                    f"component {i + 1}: leading order nonzero where the "
                    f"eigenvector (a_i c_i) vanishes")
        elif leading[i] != ghat0 * scale:
            raise InconsistentG0(
                f"component {i + 1}: leading order is not a consistent "
                f"multiple of the eigenvector (a_i c_i)")

    ghat = []
    for rec in sol.resonances:
        i = rec.anchor
        factor = weights[i] - 1 - rec.order
        g = expansion.vector(rec.order + gamma)[i]
        g = g - sol.coefficient(i, rec.order + 1) * ghat0 * factor
        ghat.append(g)
    return ParamFlow(
        ghat0=ghat0,
        ghat=tuple(ghat),
        kappa=kappa,
        gamma=gamma,
        parameters=sol.parameters,
    )


def flow_ladder_check(expansion: GExpansion, sol: LaurentSolution,
                      flow: ParamFlow) -> tuple[int, int] | None:
    """First (component, order) where the flow fails the order ladder, if any.

    The extraction in param_flow reads each ghat off a single anchor
    component, but commutation forces the same ladder

        (a_i - j - 1) d_{i,j+1} ghat0 + sum_n (d d_{i,j} / d alpha_n) ghat_n
            = g_{i, j + gamma}

    at every component and order.  Checking it everywhere is therefore a
    heavily overdetermined exact test of the whole construction; None
    means no defect anywhere the expansion reaches.
    """
    weights = sol.weights
    gamma = expansion.gamma
    top = min(expansion.count - gamma, sol.truncation)
    for i in range(sol.dim):
        a_i = weights[i]
        for j in range(top):
            lhs = sol.coefficient(i, j + 1) * flow.ghat0 * (a_i - j - 1)
            d_ij = sol.coefficient(i, j)
            for name, g in zip(flow.parameters, flow.ghat):
                if name in d_ij.vars:
                    lhs = lhs + d_ij.diff(name) * g
            if lhs != expansion.vector(j + gamma)[i]:
                return (i, j)
    return None


def flow_support_check(flow: ParamFlow) -> tuple[tuple[int, tuple[int, ...]], ...]:
    """Weight law for the flow components, resonance orders as weights.

    ghat0 must weigh gamma-1 and ghat_l must weigh kappa_l + gamma, which
    is exactly the statement that the parameter subsystem is again
    quasi-homogeneous of degree gamma.  Violations are (l, exponent)
    pairs with l = 0 for the shift coefficient.
    """
    kappa = dict(zip(flow.parameters, flow.kappa))
    targets = [(0, flow.ghat0, flow.gamma - 1)]
    targets.extend((l + 1, g, flow.kappa[l] + flow.gamma)
                   for l, g in enumerate(flow.ghat))
    violations = []
    for label, poly, target in targets:
        for exps in poly.terms:
            weight = sum(n * kappa[v] for n, v in zip(exps, poly.vars))
            if weight != target:
                violations.append((label, exps))
    return tuple(violations)


def g0_nonzero_certificate(g_field: VectorField, sol: LaurentSolution,
                           flow: ParamFlow | None = None) -> str:
    """Rank test for the shift coefficient, decided before any expansion.

    The first resonance direction v enters the family linearly, and the
    shift coefficient inherits its leading term from Jg(c) v.  A nonzero
    product certifies ghat0 is not identically zero ("nonzero_certified");
    a zero product is only ever inconclusive ("possibly_zero").  When a
    computed flow is supplied the certificate is cross-checked against it:
    a certified-nonzero ghat0 that comes out identically zero means the
    implementation broke an exact identity, which is worth a hard stop.
    """
    if not sol.resonances:
        return "possibly_zero"
    point = dict(zip(g_field.variables, sol.locus))
    jac = g_field.jacobian()
    v = sol.resonances[0].direction
    image = [sum((jac[i][j].evaluate(point) * v[j] for j in range(g_field.dim)),
                 Fraction(0))
             for i in range(g_field.dim)]
    verdict = "nonzero_certified" if any(image) else "possibly_zero"
    if flow is not None and verdict == "nonzero_certified" and not flow.ghat0:
        raise RuntimeError(
            "certificate says the shift coefficient is nonzero but the "
            "computed flow has ghat0 = 0; one of the two is wrong")
    return verdict


# ---------------------------------------------------------------------------
# exponent multisets and matching


def _rootset_values(roots: RootSet) -> list:
    out: list = []
    for r, mult in roots.rational_roots:
        out.extend([r] * mult)
    for z, mult, _ in roots.numeric_roots:
        out.extend([z] * mult)
    return out


def _sorted_multiset(values) -> tuple:
    return tuple(sorted(values, key=lambda v: (complex(v).real, complex(v).imag)))


def _all_rational(values) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in values)


def _multisets_match(a, b, tol: float) -> bool:
    if len(a) != len(b):
        return False
    if _all_rational(a) and _all_rational(b):
        return sorted(a) == sorted(b)
    remaining = [complex(v) for v in b]
    for v in a:
        zv = complex(v)
        hit = None
        for idx, w in enumerate(remaining):
            if abs(zv - w) <= tol * max(1.0, abs(w)):
                hit = idx
                break
        if hit is None:
            return False
        remaining.pop(hit)
    return True


def _contains(values, target, tol: float) -> bool:
    if _all_rational(values):
        return as_fraction(target) in values
    zt = complex(target)
    return any(abs(complex(v) - zt) <= tol * max(1.0, abs(zt)) for v in values)


def _lower_spectra(field: VectorField, certificate: WeightCertificate, *,
                   rng_seed: int, tolerance: float) -> tuple:
    """(point, exponent multiset) for every lower locus the search finds.

    Exact loci are classified exactly and only the lower ones kept;
    numeric loci go in unfiltered since a principal multiset can never
    collide with a lower prediction anyway.
    """
    try:
        search = find_loci(field, certificate, rng_seed=rng_seed)
    except NoLocusFound:
        return ()
    pool = []
    for locus in search.loci:
        if locus.is_exact:
            report = k_exponents(field, certificate, locus.point)
            if report.classification != "lower":
                continue
            pool.append((locus.point,
                         _sorted_multiset(_rootset_values(report.exponents))))
        else:
            vals = numeric_exponents(field, certificate, locus.point)
            pool.append((locus.point, _sorted_multiset(vals)))
    return tuple(pool)


@dataclass(frozen=True)
class DegenerationReport:
    """Per-flow-locus predictions and how they match the lower loci.

    Parallel tuples, one entry per locus of the parameter flow: the route
    that produced it, its own exponent multiset, the predicted multiset
    for the ambient field, and the ambient lower loci whose multiset
    matches.  unmatched lists the indices with no match; lower_spectra is
    the pool of (point, multiset) pairs the predictions were held against.
    """

    gamma: int
    routes: tuple[str, ...]
    flow_loci: tuple[tuple, ...]
    flow_exponents: tuple[tuple, ...]
    predicted_lower_exponents: tuple[tuple, ...]
    matched_lower_loci: tuple[tuple[tuple, ...], ...]
    unmatched: tuple[int, ...]
    lower_spectra: tuple
    diagnostics: tuple[dict, ...]


def _assemble(gamma: int, entries: list, pool: tuple,
              tol: float) -> DegenerationReport:
    matched = []
    unmatched = []
    for idx, entry in enumerate(entries):
        predicted = entry[3]
        hits = tuple(point for point, multiset in pool
                     if _multisets_match(predicted, multiset, tol))
        matched.append(hits)
        if not hits:
            unmatched.append(idx)
    return DegenerationReport(
        gamma=gamma,
        routes=tuple(e[1] for e in entries),
        flow_loci=tuple(e[0] for e in entries),
        flow_exponents=tuple(e[2] for e in entries),
        predicted_lower_exponents=tuple(e[3] for e in entries),
        matched_lower_loci=tuple(matched),
        unmatched=tuple(unmatched),
        lower_spectra=pool,
        diagnostics=tuple(e[4] for e in entries),
    )


def degenerate_gamma1(field: VectorField, certificate: WeightCertificate,
                      flow: ParamFlow, *, seeds: Sequence = (),
                      rng_seed: int = 0,
                      tolerance: float = 1e-8) -> DegenerationReport:
    """Lower-family prediction for a degree-1 commuting flow.

    With gamma = 1 the pole position drifts at the constant rate ghat0
    and drops out of the indicial analysis: each locus xi of the
    parameter subsystem contributes the multiset {-1} union spec(K(xi)),
    the extra -1 coming from the pole direction itself.
    """
    if flow.gamma != 1:
        raise ValueError("this route needs a degree-1 commuting flow")
    sub = flow.subsystem_field()
    sub_cert = WeightCertificate(flow.kappa, 1)
    entries: list = []
    if not sub.is_zero():
        try:
            search = find_loci(sub, sub_cert, seeds=seeds, rng_seed=rng_seed)
        except NoLocusFound:
            search = None
        for locus in (search.loci if search else ()):
            if locus.is_exact:
                report = k_exponents(sub, sub_cert, locus.point)
                vals = _rootset_values(report.exponents)
                predicted = _sorted_multiset([Fraction(-1)] + vals)
                diag = {"universal_eigenpair": report.eigenpair_verified}
            else:
                vals = list(numeric_exponents(sub, sub_cert, locus.point))
                predicted = _sorted_multiset([complex(-1)] + vals)
                diag = {}
            entries.append((locus.point, "pole_shift",
                            _sorted_multiset(vals), predicted, diag))
    pool = _lower_spectra(field, certificate,
                          rng_seed=rng_seed, tolerance=tolerance)
    return _assemble(1, entries, pool, tolerance)


def _rescaled_matrix(flow: ParamFlow, point: tuple, g0_value: Fraction) -> ExactMatrix:
    """Closed-form exponent matrix at a rescaled flow locus, all exact.

    Rescaling alpha_i by the kappa_i-th power of the shift rate turns the
    indicial system of the flow into a polynomial system and the exponent
    matrix into

        (d ghat_i / d alpha_j + kappa_i xi_i d ghat0 / d alpha_j) / ghat0
        + kappa_i delta_ij,

    everything evaluated at the rescaled point.
    """
    params = flow.parameters
    assign = dict(zip(params, point))
    grad0 = [flow.ghat0.diff(v).evaluate(assign) for v in params]
    rows = []
    for i, g in enumerate(flow.ghat):
        row = []
        for j, v in enumerate(params):
            entry = (g.diff(v).evaluate(assign)
                     + flow.kappa[i] * point[i] * grad0[j]) / g0_value
            if i == j:
                entry += flow.kappa[i]
            row.append(entry)
        rows.append(row)
    return ExactMatrix(rows)


def _flow_matrix_exact(flow: ParamFlow, point: tuple) -> ExactMatrix:
    """Full exponent matrix of the flow, pole row included, at a rational locus."""
    params = flow.parameters
    gamma = flow.gamma
    assign = dict(zip(params, point))
    top = [Fraction(-1, gamma)]
    top.extend(flow.ghat0.diff(v).evaluate(assign) for v in params)
    rows = [top]
    for l, g in enumerate(flow.ghat):
        row = [Fraction(0)]
        for j, v in enumerate(params):
            entry = g.diff(v).evaluate(assign)
            if l == j:
                entry += Fraction(flow.kappa[l], gamma)
            row.append(entry)
        rows.append(row)
    return ExactMatrix(rows)


def _flow_matrix_numeric(flow: ParamFlow, point: tuple) -> np.ndarray:
    params = flow.parameters
    gamma = flow.gamma
    assign = {v: complex(p) for v, p in zip(params, point)}
    n = len(params)
    mat = np.zeros((n + 1, n + 1), dtype=complex)
    mat[0, 0] = -1.0 / gamma
    for j, v in enumerate(params):
        mat[0, j + 1] = complex(flow.ghat0.diff(v).evaluate(assign))
    for l, g in enumerate(flow.ghat):
        for j, v in enumerate(params):
            mat[l + 1, j + 1] = complex(g.diff(v).evaluate(assign))
        mat[l + 1, l + 1] += flow.kappa[l] / gamma
    return mat


def _conjugacy_ok(flow: ParamFlow, point: tuple, g0_value,
                  predicted, tol: float) -> bool:
    """Spectral check tying the direct route to the rescaled one.

    A diagonal conjugation carries the rescaled exponent matrix onto
    gamma times the parameter block plus a rank-one correction built at
    the raw locus; its spectrum must therefore reproduce the predicted
    multiset minus the one copy of -gamma the pole row contributes.
    """
    params = flow.parameters
    assign = {v: complex(p) for v, p in zip(params, point)}
    n = len(params)
    shift = complex(g0_value) * flow.gamma
    block = np.zeros((n, n), dtype=complex)
    grad0 = [complex(flow.ghat0.diff(v).evaluate(assign)) for v in params]
    for i, g in enumerate(flow.ghat):
        vi = flow.kappa[i] * complex(point[i])
        for j, v in enumerate(params):
            block[i, j] = (complex(g.diff(v).evaluate(assign))
                           + vi * grad0[j] / shift)
        block[i, i] += flow.kappa[i] / flow.gamma
    spectrum = [flow.gamma * z for z in np.linalg.eigvals(block)]
    target = list(predicted)
    for idx, value in enumerate(target):
        if abs(complex(value) + flow.gamma) <= tol * max(1.0, flow.gamma):
            del target[idx]
            break
    else:
        return False
    return _multisets_match(spectrum, target, tol)


def degenerate_gamma_ge2(field: VectorField, certificate: WeightCertificate,
                         flow: ParamFlow, *, seeds: Sequence = (),
                         rng_seed: int = 0,
                         tolerance: float = 1e-8) -> DegenerationReport:
    """Lower-family prediction for commuting degree two or more, dual route.

    Exact route first: in rescaled coordinates the flow's indicial system
    becomes ghat_l + kappa_l alpha_l ghat0 = 0, solved over Q; each
    solution with nonvanishing ghat0 yields the closed-form exponent
    matrix and the prediction spec union {-gamma}.  Then the direct
    route: the subsystem's own indicial loci (typically irrational, found
    numerically), the full exponent matrix with the pole row, and the
    prediction gamma times its spectrum.  Both routes land in the same
    report; neither is allowed to stand in for the other.
    """
    gamma = flow.gamma
    if gamma < 2:
        raise ValueError("this route needs commuting degree at least 2")
    if not flow.ghat0:
        raise G0IdenticallyZero(
            "shift coefficient is identically zero; the rescaled flow "
            "does not exist")
    params = flow.parameters
    entries: list = []

    cleared = [g + MultiPoly.variable(v, params) * flow.ghat0 * k
               for g, v, k in zip(flow.ghat, params, flow.kappa)]
    solved = solve_poly_system(list(cleared), params)
    exact_points = []
    for point in solved.points:
        value = flow.ghat0.evaluate(dict(zip(params, point)))
        if value == 0:
            continue
        exact_points.append(point)
        matrix = _rescaled_matrix(flow, point, value)
        vals = _rootset_values(roots_exact_first(matrix.charpoly()))
        predicted = _sorted_multiset(vals + [Fraction(-gamma)])
        diag = {
            "g0_value": value,
            "minus_one_present": _contains(vals, Fraction(-1), tolerance),
            "search_complete": solved.complete,
        }
        entries.append((point, "rescale_exact",
                        _sorted_multiset(vals), predicted, diag))

    sub = flow.subsystem_field()
    sub_cert = WeightCertificate(flow.kappa, gamma)
    search = None
    if not sub.is_zero():
        try:
            search = find_loci(sub, sub_cert, seeds=seeds, rng_seed=rng_seed)
        except NoLocusFound:
            search = None
    for locus in (search.loci if search else ()):
        assign = dict(zip(params, locus.point))
        g0_value = flow.ghat0.evaluate(assign)
        if abs(complex(g0_value)) <= tolerance:
            warnings.warn(
                "flow locus with vanishing shift coefficient skipped by "
                "the direct route",
                UnrescalableLocus, stacklevel=2)
            continue
        if locus.is_exact:
            matrix = _flow_matrix_exact(flow, locus.point)
            vals = _rootset_values(roots_exact_first(matrix.charpoly()))
            shift = gamma * g0_value
            rescaled = tuple(shift ** k * x
                             for k, x in zip(flow.kappa, locus.point))
        else:
            vals = sorted(np.linalg.eigvals(_flow_matrix_numeric(flow, locus.point)),
                          key=lambda z: (z.real, z.imag))
            shift = gamma * complex(g0_value)
            lifted = [shift ** k * complex(x)
                      for k, x in zip(flow.kappa, locus.point)]
            snapped = [snap_rational(x) for x in lifted]
            rescaled = (tuple(snapped) if all(s is not None for s in snapped)
                        else tuple(lifted))
        predicted = _sorted_multiset([gamma * v for v in vals])
        verified = (all(isinstance(x, Fraction) for x in rescaled)
                    and all(eq.evaluate(dict(zip(params, rescaled))) == 0
                            for eq in cleared)
                    and flow.ghat0.evaluate(dict(zip(params, rescaled))) != 0)
        diag = {
            "minus_one_present": _contains(vals, Fraction(-1), tolerance),
            "inverse_degree_present": _contains(vals, Fraction(-1, gamma),
                                                tolerance),
            "conjugacy_ok": _conjugacy_ok(flow, locus.point, g0_value,
                                          predicted, tolerance),
            "rescaled_point": rescaled,
            "matches_rescaled_exact": verified,
        }
        entries.append((locus.point, "flow_direct",
                        _sorted_multiset(vals), predicted, diag))

    pool = _lower_spectra(field, certificate,
                          rng_seed=rng_seed, tolerance=tolerance)
    return _assemble(gamma, entries, pool, tolerance)


@dataclass(frozen=True)
class DeformationCheck:
    """Exponent multisets of F + G/(eps + k1) across deformation sizes.

    multisets[e] collects the sorted exponent multiset of every exact
    locus of the deformed field at epsilons[e]; realized[e] says whether
    the predicted lower multiset is among them (None when no prediction
    was supplied); stable means the collection is the same at every
    epsilon, which is the signature of a genuine degeneration rather
    than a coincidence at one parameter value.
    """

    epsilons: tuple[Fraction, ...]
    k1: Fraction
    multisets: tuple[tuple[tuple, ...], ...]
    realized: tuple[bool, ...] | None
    stable: bool


def deformed_field_check(field: VectorField, g_field: VectorField,
                         certificate: WeightCertificate, flow: ParamFlow,
                         epsilons: Sequence = (Fraction(1, 10), Fraction(1, 7),
                                               Fraction(1, 3)), *,
                         predicted: Sequence | None = None,
                         rng_seed: int = 0,
                         tolerance: float = 1e-8) -> DeformationCheck:
    """Probe the lower family by deforming F along the commuting direction.

    Only meaningful at commuting degree 1, where k1 = ghat0 is a constant
    and F + G/(eps + k1) is again degree-1 quasi-homogeneous.  An epsilon
    with eps + k1 = 0 makes the deformation undefined and is rejected.
    """
    if flow.gamma != 1:
        raise ValueError("deformation check needs a degree-1 commuting flow")
    if flow.ghat0.total_degree() not in (None, 0):
        raise ValueError("shift coefficient is not constant; the support "
                         "law failed upstream")
    k1 = flow.ghat0.constant_term()
    eps_values = tuple(as_fraction(e) for e in epsilons)
    for eps in eps_values:
        if eps + k1 == 0:
            raise ValueError(
                f"epsilon {eps} hits the excluded value -k1 = {-k1}; "
                f"the deformed field is undefined there")

    per_eps = []
    realized = [] if predicted is not None else None
    want = _sorted_multiset(predicted) if predicted is not None else None
    for eps in eps_values:
        scale = Fraction(1) / (eps + k1)
        deformed = VectorField(
            field.variables,
            tuple(f + g * scale
                  for f, g in zip(field.components, g_field.components)))
        collected = []
        try:
            search = find_loci(deformed, certificate, rng_seed=rng_seed)
        except NoLocusFound:
            search = None
        for locus in (search.loci if search else ()):
            if not locus.is_exact:
                continue
            report = k_exponents(deformed, certificate, locus.point)
            collected.append(_sorted_multiset(_rootset_values(report.exponents)))
        collected.sort(key=lambda ms: tuple((complex(v).real, complex(v).imag)
                                            for v in ms))
        per_eps.append(tuple(collected))
        if want is not None:
            realized.append(any(_multisets_match(want, ms, tolerance)
                                for ms in collected))

    stable = all(ms == per_eps[0] for ms in per_eps[1:])
    return DeformationCheck(
        epsilons=eps_values,
        k1=k1,
        multisets=tuple(per_eps),
        realized=tuple(realized) if realized is not None else None,
        stable=stable,
    )


def hamiltonian_pairing_check(exponents: Sequence, weights: Sequence[int],
                              h_degree: int) -> tuple[str, ...]:
    """Symplectic pairing constraints on an exponent multiset.

    For a canonical field of a quasi-homogeneous Hamiltonian the exponents
    pair off: the multiset is closed under k -> deg(H) - 1 - k, and every
    conjugate weight pair sums to deg(H) - 1.  Returns human-readable
    violations; empty means both constraints hold.
    """
    span = h_degree - 1
    violations = []
    if len(weights) % 2:
        violations.append(
            f"odd number of weights ({len(weights)}); no conjugate pairing")
    else:
        for k in range(0, len(weights), 2):
            if weights[k] + weights[k + 1] != span:
                violations.append(
                    f"conjugate pair {k // 2 + 1}: weights {weights[k]} + "
                    f"{weights[k + 1]} != {span}")
    values = [as_fraction(v) for v in exponents]
    counts: dict[Fraction, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    for v in sorted(counts):
        partner = span - v
        if counts[v] != counts.get(partner, 0):
            if v <= partner:
                violations.append(
                    f"exponent {v} occurs {counts[v]} times but its partner "
                    f"{partner} occurs {counts.get(partner, 0)} times")
    return tuple(violations)
