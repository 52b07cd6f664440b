"""Indicial loci and Kovalevskaya exponents of quasi-homogeneous fields.

A balance of a weight-(a_1..a_m) field of degree g is a nonzero point x*
solving g*f_i(x*) + a_i*x*_i = 0 (for degree 1 this is the classical
indicial equation, for degree g >= 2 the Puiseux variant).  The spectrum
of the matrix Df(x*) + diag(a_i/g) decides whether a pole-like series
through x* can carry a full set of free parameters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exactalg import (
    DEFAULT_TOL,
    ExactMatrix,
    MultiPoly,
    RootSet,
    as_fraction,
    roots_exact_first,
    snap_rational,
    solve_poly_system,
)
from .vfmodel import VectorField, WeightCertificate

_NEWTON_MAX_ITER = 60
_NEWTON_BLOWUP = 1e8
_DEDUP_TOL = 1e-8


class NoLocusFound(RuntimeError):
    """Every search strategy came back empty."""


class SingularJacobian(ValueError):
    """Coordinate change is not locally invertible where it needs to be."""


class InexactLocusError(ValueError):
    """Operation needs exact rational coordinates but got a numeric locus."""


class PreimageNotFound(RuntimeError):
    """No exact preimage of the locus under the coordinate change."""


@dataclass(frozen=True)
class IndicialLocus:
    """One balance point.

    exactness is "exact" (rational coordinates, zero residual) or "numeric"
    (complex coordinates, residual below tolerance).  source records which
    strategy produced it: "user_seed", "newton" or "structured_search".
    """

    point: tuple
    exactness: str
    source: str

    @property
    def is_exact(self) -> bool:
        return self.exactness == "exact"


@dataclass(frozen=True)
class LocusSearch:
    loci: tuple[IndicialLocus, ...]
    strategies: tuple[str, ...]


@dataclass(frozen=True)
class KExponentReport:
    """Exponent spectrum at one exact locus.

    classification is provisional: "principal" means the spectrum passes the
    classical test (one -1, the rest nonnegative integers after scaling by
    the degree, semisimple at repeated resonances); the series construction
    downstream is the authority on the parameter count.
    """

    matrix: ExactMatrix
    exponents: RootSet
    minus_one_eigenvector: tuple[Fraction, ...]
    eigenpair_verified: bool
    has_zero_exponent: bool
    classification: str
    semisimple_at_resonances: bool
    degree: int


@dataclass(frozen=True)
class TransformReport:
    route: str
    preimages: tuple[tuple[Fraction, ...], ...]
    transformed: VectorField | None
    ok: bool


def indicial_system(field: VectorField,
                    certificate: WeightCertificate) -> tuple[MultiPoly, ...]:
    """Polynomials whose common nonzero roots are the indicial loci.

    For degree g the defining relation -(a_i/g)x_i = f_i(x) is cleared of
    denominators, so the equations are g*f_i(x) + a_i*x_i = 0.
    """
    gamma = certificate.degree
    out = []
    for i, comp in enumerate(field.components):
        x_i = MultiPoly.variable(field.variables[i], field.variables)
        out.append(comp * gamma + x_i * certificate.weights[i])
    return tuple(out)


def verify_locus(field: VectorField, certificate: WeightCertificate,
                 point: Sequence) -> bool:
    """Exact residual test of the indicial equations at a rational point."""
    values = {v: as_fraction(p) for v, p in zip(field.variables, point)}
    return all(eq.evaluate(values) == 0
               for eq in indicial_system(field, certificate))


def exact_point(locus) -> tuple[Fraction, ...]:
    """Rational coordinates of a locus or bare point, or InexactLocusError."""
    point = locus.point if isinstance(locus, IndicialLocus) else tuple(locus)
    try:
        return tuple(as_fraction(x) for x in point)
    except TypeError:
        raise InexactLocusError(
            "exact rational coordinates required; refine or snap the locus first")


def kovalevskaya_matrix(field: VectorField, certificate: WeightCertificate,
                        locus) -> ExactMatrix:
    """Df at the locus plus diag(a_i / degree), all entries exact."""
    point = exact_point(locus)
    values = dict(zip(field.variables, point))
    jac = field.jacobian()
    gamma = certificate.degree
    m = field.dim
    rows = [[jac[i][j].evaluate(values)
             + (Fraction(certificate.weights[i], gamma) if i == j else 0)
             for j in range(m)] for i in range(m)]
    return ExactMatrix(rows)


def _semisimple_at(matrix: ExactMatrix, eigenvalue: Fraction,
                   algebraic: int) -> bool:
    if algebraic == 1:
        return True
    shifted = matrix - ExactMatrix.identity(matrix.nrows) * eigenvalue
    geometric = matrix.nrows - shifted.rank()
    return geometric == algebraic


def _classify(matrix: ExactMatrix, roots: RootSet,
              gamma: int) -> tuple[str, bool, bool]:
    """(classification, semisimple at positive resonances, zero present)."""
    has_zero = any(r == 0 for r, _ in roots.rational_roots)
    semisimple = all(
        _semisimple_at(matrix, r, mult)
        for r, mult in roots.rational_roots
        if r > 0 and (r * gamma).denominator == 1)
    if not roots.is_fully_rational:
        return "non_painleve", semisimple, has_zero
    scaled = [(r * gamma, mult) for r, mult in roots.rational_roots]
    if any(s.denominator != 1 for s, _ in scaled):
        return "non_painleve", semisimple, has_zero
    minus_one = sum(mult for r, mult in roots.rational_roots if r == -1)
    if minus_one == 0:
        return "non_painleve", semisimple, has_zero
    others_nonneg = all(r >= 0 for r, _ in roots.rational_roots if r != -1)
    if minus_one == 1 and others_nonneg:
        return ("principal" if semisimple else "non_painleve",
                semisimple, has_zero)
    return "lower", semisimple, has_zero


def k_exponents(field: VectorField, certificate: WeightCertificate, locus, *,
                tolerance: float = DEFAULT_TOL) -> KExponentReport:
    """Spectrum of the Kovalevskaya matrix at an exact locus.

    Eigenvalues come from the characteristic polynomial with the rational
    ones extracted exactly, so integrality questions are decided without
    floating-point doubt.  The universal eigenpair (eigenvalue -1,
    eigenvector (a_i x_i)) is re-verified by an exact matrix-vector product.
    """
    point = exact_point(locus)
    if not verify_locus(field, certificate, point):
        raise ValueError("point does not satisfy the indicial equations")
    matrix = kovalevskaya_matrix(field, certificate, point)
    roots = roots_exact_first(matrix.charpoly(), tol=tolerance)
    vector = tuple(Fraction(a) * c
                   for a, c in zip(certificate.weights, point))
    verified = (any(vector)
                and matrix.matvec(vector) == tuple(-v for v in vector))
    classification, semisimple, has_zero = _classify(
        matrix, roots, certificate.degree)
    return KExponentReport(
        matrix=matrix,
        exponents=roots,
        minus_one_eigenvector=vector,
        eigenpair_verified=verified,
        has_zero_exponent=has_zero,
        classification=classification,
        semisimple_at_resonances=semisimple,
        degree=certificate.degree,
    )


def numeric_exponents(field: VectorField, certificate: WeightCertificate,
                      point: Sequence[complex]) -> tuple[complex, ...]:
    """Floating-point exponents at a numeric locus, sorted by (re, im)."""
    values = {v: complex(p) for v, p in zip(field.variables, point)}
    jac = field.jacobian()
    m = field.dim
    mat = np.array([[complex(jac[i][j].evaluate(values))
                     + (certificate.weights[i] / certificate.degree
                        if i == j else 0.0)
                     for j in range(m)] for i in range(m)])
    return tuple(sorted(np.linalg.eigvals(mat),
                        key=lambda z: (z.real, z.imag)))


def _compile_system(polys: Sequence[MultiPoly], variables: Sequence[str]):
    """Closure evaluating the system on a batch of complex points via numpy.

    The returned function maps an array of shape (batch, m) to residual
    values of shape (batch, len(polys)).
    """
    prepared = []
    for poly in polys:
        if not poly:
            prepared.append(None)
            continue
        idx = [variables.index(v) for v in poly.vars]
        exps = []
        coefs = []
        for e, c in poly.terms.items():
            row = [0] * len(variables)
            for k, v_i in enumerate(idx):
                row[v_i] = e[k]
            exps.append(row)
            coefs.append(complex(c))
        prepared.append((np.array(exps, dtype=np.int64),
                         np.array(coefs, dtype=np.complex128)))

    def evaluate(points: np.ndarray) -> np.ndarray:
        batch = np.atleast_2d(points).astype(np.complex128)
        out = np.zeros((batch.shape[0], len(prepared)), dtype=np.complex128)
        for k, entry in enumerate(prepared):
            if entry is None:
                continue
            exps, coefs = entry
            out[:, k] = np.prod(batch[:, np.newaxis, :] ** exps[np.newaxis],
                                axis=2) @ coefs
        return out

    return evaluate


def _newton_refine(eval_f, eval_jac, starts: np.ndarray, free: np.ndarray,
                   tolerance: float) -> list[np.ndarray]:
    """Damped-free Newton on a batch of starts; returns the converged points.

    Only the coordinates listed in ``free`` move, so zero-pattern clamps are
    preserved exactly.  Diverging starts (non-finite or beyond the blowup
    radius) are dropped; the rest iterate until the residual max-norm falls
    below tolerance or the iteration budget runs out.
    """
    points = np.atleast_2d(starts).astype(np.complex128).copy()
    m = points.shape[1]
    alive = np.ones(points.shape[0], dtype=bool)
    converged: list[np.ndarray] = []
    for _ in range(_NEWTON_MAX_ITER):
        if not alive.any():
            break
        batch = points[alive]
        residual = eval_f(batch)
        error = np.max(np.abs(residual), axis=1)
        done = error <= tolerance
        if done.any():
            converged.extend(batch[done])
            keep = np.where(alive)[0][done]
            alive[keep] = False
            batch = points[alive]
            if batch.shape[0] == 0:
                break
            residual = eval_f(batch)
        jac = eval_jac(batch).reshape(-1, m, m)[:, :, free]
        step = -(np.linalg.pinv(jac) @ residual[:, :, np.newaxis])[:, :, 0]
        batch[:, free] += step
        points[alive] = batch
        bad = (~np.all(np.isfinite(batch), axis=1)
               | (np.max(np.abs(batch), axis=1) > _NEWTON_BLOWUP))
        if bad.any():
            alive[np.where(alive)[0][bad]] = False
    if alive.any():
        batch = points[alive]
        error = np.max(np.abs(eval_f(batch)), axis=1)
        converged.extend(batch[error <= tolerance])
    return converged


def _snap_point(z: np.ndarray) -> tuple[Fraction, ...] | None:
    snapped = []
    for value in z:
        candidate = snap_rational(complex(value))
        if candidate is None:
            return None
        snapped.append(candidate)
    return tuple(snapped)


def _close(a: Sequence[complex], b: Sequence[complex], tol: float) -> bool:
    return max(abs(complex(x) - complex(y)) for x, y in zip(a, b)) <= tol


def find_loci(field: VectorField, certificate: WeightCertificate,
              seeds: Sequence[Sequence[float]] = (), *,
              newton_starts: int = 64, rng_seed: int = 0,
              tolerance: float = DEFAULT_TOL,
              dedup_tol: float = _DEDUP_TOL,
              max_branches: int = 512) -> LocusSearch:
    """Hunt for indicial loci with three stacked strategies.

    1. User seeds are snapped to rationals and verified exactly; failing
       that they start a Newton run.
    2. Newton multistart: per zero pattern (a choice of coordinates clamped
       to zero), ``newton_starts`` pseudo-random complex starts, refined to
       ``tolerance``, then snapped and re-verified exactly.  Reproducible
       through ``rng_seed``.
    3. Structured search: the same zero patterns, but the clamped system is
       handed to the exact solver; every returned point is certified.

    Numeric loci that snap and verify are upgraded to exact.  No claim of
    completeness is made; strategies that ran are listed in the result.
    """
    m = field.dim
    eqs = indicial_system(field, certificate)
    eval_f = _compile_system(eqs, field.variables)
    jac_polys = [entry for i in range(m)
                 for entry in (eqs[i].diff(v) for v in field.variables)]
    eval_jac = _compile_system(jac_polys, field.variables)

    exact: list[tuple[tuple[Fraction, ...], str]] = []
    numeric: list[tuple[tuple[complex, ...], str]] = []
    strategies: list[str] = []

    def residual_ok(z: np.ndarray) -> bool:
        degree = max((eq.total_degree() or 1) for eq in eqs)
        scale = max(1.0, float(np.max(np.abs(z))) ** degree)
        return float(np.max(np.abs(eval_f(z)))) <= tolerance * scale

    def register_exact(point: tuple[Fraction, ...], source: str) -> None:
        if any(point) and all(p != point for p, _ in exact):
            exact.append((point, source))

    def register_numeric(z: np.ndarray, source: str) -> None:
        if float(np.max(np.abs(z))) <= dedup_tol:
            return
        snapped = _snap_point(z)
        if snapped is not None and verify_locus(field, certificate, snapped):
            register_exact(snapped, source)
            return
        if not residual_ok(z):
            return
        point = tuple(complex(v) for v in z)
        known = [p for p, _ in exact] + [p for p, _ in numeric]
        if not any(_close(point, p, dedup_tol) for p in known):
            numeric.append((point, source))

    if seeds:
        strategies.append("user_seed")
        for seed in seeds:
            if len(seed) != m:
                raise ValueError(
                    f"seed has {len(seed)} coordinates, field has {m}")
            start = np.asarray(seed, dtype=complex)
            snapped = _snap_point(start)
            if snapped is not None and verify_locus(field, certificate, snapped):
                register_exact(snapped, "user_seed")
                continue
            for refined in _newton_refine(eval_f, eval_jac, start[np.newaxis],
                                          np.arange(m), tolerance):
                register_numeric(refined, "user_seed")

    patterns = [p for p in itertools.product((False, True), repeat=m)
                if not all(p)]

    strategies.append("structured_search")
    for pattern in patterns:
        clamped = []
        for eq in eqs:
            zeroed = {v: 0 for v, z in zip(field.variables, pattern)
                      if z and v in eq.vars}
            clamped.append(eq.substitute(zeroed) if zeroed else eq)
        free_vars = [v for v, z in zip(field.variables, pattern) if not z]
        result = solve_poly_system(clamped, free_vars, max_branches)
        for partial in result.points:
            filled = dict(zip(free_vars, partial))
            point = tuple(filled.get(v, Fraction(0)) for v in field.variables)
            if verify_locus(field, certificate, point):
                register_exact(point, "structured_search")

    if newton_starts > 0:
        strategies.append("newton")
        rng = np.random.default_rng(rng_seed)
        for pattern in patterns:
            free = np.array([i for i, z in enumerate(pattern) if not z])
            starts = np.zeros((newton_starts, m), dtype=np.complex128)
            starts[:, free] = (rng.standard_normal((newton_starts, len(free)))
                               + 1j * rng.standard_normal((newton_starts,
                                                           len(free))))
            for refined in _newton_refine(eval_f, eval_jac, starts, free,
                                          tolerance):
                register_numeric(refined, "newton")

    loci = [IndicialLocus(p, "exact", src) for p, src in exact]
    loci.extend(IndicialLocus(p, "numeric", src) for p, src in numeric)
    loci.sort(key=lambda loc: (loc.exactness != "exact",
                               tuple((complex(x).real, complex(x).imag)
                                     for x in loc.point)))
    if not loci:
        raise NoLocusFound("no indicial locus found by any strategy")
    return LocusSearch(tuple(loci), tuple(strategies))


def _poly_det(rows: list[list[MultiPoly]]) -> MultiPoly:
    n = len(rows)
    if n == 1:
        return rows[0][0]
    acc = MultiPoly.zero()
    for j in range(n):
        entry = rows[0][j]
        if not entry:
            continue
        minor = [[row[k] for k in range(n) if k != j] for row in rows[1:]]
        term = entry * _poly_det(minor)
        acc = acc + (term if j % 2 == 0 else -term)
    return acc


def _poly_adjugate(rows: list[list[MultiPoly]]) -> list[list[MultiPoly]]:
    n = len(rows)
    if n == 1:
        return [[MultiPoly.constant(1)]]
    adj = [[MultiPoly.zero() for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[rows[r][k] for k in range(n) if k != j]
                     for r in range(n) if r != i]
            cofactor = _poly_det(minor)
            adj[j][i] = cofactor if (i + j) % 2 == 0 else -cofactor
    return adj


def _exact_inverse(matrix: ExactMatrix) -> ExactMatrix | None:
    n = matrix.nrows
    augmented = ExactMatrix([list(matrix.data[i])
                             + [1 if j == i else 0 for j in range(n)]
                             for i in range(n)])
    reduced, pivots = augmented.rref()
    if pivots != tuple(range(n)):
        return None
    return ExactMatrix([[reduced[(i, n + j)] for j in range(n)]
                        for i in range(n)])


def _same_spectrum(a: RootSet, b: RootSet) -> bool:
    return (sorted(a.rational_roots) == sorted(b.rational_roots)
            and a.residual_factor == b.residual_factor)


def transform_check(field: VectorField, certificate: WeightCertificate,
                    phi: Sequence[MultiPoly], locus, *,
                    require_quasi_homogeneous: bool = True,
                    tolerance: float = DEFAULT_TOL) -> TransformReport:
    """Check exponent invariance under a polynomial change of coordinates.

    phi sends new coordinates to old ones, component i carrying weighted
    degree a_i.  For such maps the Jacobian determinant is automatically a
    constant (each Leibniz term has weighted degree sum(a) - sum(a) = 0), so
    the transformed field (Dphi)^{-1} f(phi(u)) is polynomial and the whole
    comparison runs exactly.  A non-constant determinant can only arise when
    quasi-homogeneity is waived; then the matrices Dphi(u*)^{-1} K Dphi(u*)
    and K are compared through their characteristic polynomials instead.
    """
    m = field.dim
    if len(phi) != m:
        raise ValueError(f"phi has {len(phi)} components, field has {m}")
    phi = tuple(p.embed(field.variables) if p.vars != field.variables else p
                for p in phi)
    if require_quasi_homogeneous:
        weight_map = dict(zip(field.variables, certificate.weights))
        for i, comp in enumerate(phi):
            if not comp:
                continue
            degree = comp.quasi_homogeneous_degree(
                [weight_map[v] for v in comp.vars])
            if degree != certificate.weights[i]:
                raise ValueError(
                    f"phi component {i + 1} does not carry weighted degree "
                    f"{certificate.weights[i]}")

    point = exact_point(locus)
    jac_phi = [[phi[i].diff(v) for v in field.variables] for i in range(m)]
    det = _poly_det(jac_phi)
    if not det:
        raise SingularJacobian("coordinate change has zero Jacobian determinant")

    target = solve_poly_system(
        [phi[i] - point[i] for i in range(m)], field.variables)
    preimages = [p for p in target.points if any(p)]
    if not preimages:
        raise PreimageNotFound("no exact preimage of the locus under phi")

    base = k_exponents(field, certificate, point, tolerance=tolerance)

    if det.total_degree() == 0:
        adj = _poly_adjugate(jac_phi)
        composed = field.substitute(dict(zip(field.variables, phi)))
        scale = Fraction(1) / det.constant_term()
        components = []
        for i in range(m):
            acc = MultiPoly.zero(field.variables)
            for j in range(m):
                acc = acc + adj[i][j] * composed[j]
            components.append(acc * scale)
        transformed = VectorField(field.variables, tuple(components))
        ok = True
        for pre in preimages:
            if not verify_locus(transformed, certificate, pre):
                ok = False
                continue
            report = k_exponents(transformed, certificate, pre,
                                 tolerance=tolerance)
            ok = ok and _same_spectrum(base.exponents, report.exponents)
        return TransformReport("exact", tuple(preimages), transformed, ok)

    ok = True
    for pre in preimages:
        values = dict(zip(field.variables, pre))
        frame = ExactMatrix([[entry.evaluate(values) for entry in row]
                             for row in jac_phi])
        inverse = _exact_inverse(frame)
        if inverse is None:
            raise SingularJacobian(
                "coordinate change is singular at the preimage")
        conjugated = inverse * base.matrix * frame
        ok = ok and conjugated.charpoly() == base.matrix.charpoly()
    return TransformReport("similarity", tuple(preimages), None, ok)
