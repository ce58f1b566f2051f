"""Locating single-round periodic solutions (SR_k: period k+1, one point
above the switching strip, k points below it).

For the piecewise family the fixed-point problem of (saddle^k o return)
reduces to a quadratic in ``u = y - y_star`` at the above-strip point:
with A = lam**k*(x_star + ...)/(1 - c1*lam**k) and B the matching c2 slope,

    a*u**2 + b*u + c = 0,
    a = sigma**k*d5 + d3*B*Bs + d4*Bs,
    b = d1*Bs + sigma**k*d2 + 2*d3*A*Bs + d4*As - 1,
    c = d1*As + d3*A*As - y_star,

where As = (lam*sigma)**k*x_star/(1-c1*lam**k), Bs = (lam*sigma)**k*c2/(1-c1*lam**k).
With the example-family defaults this is sigma**k*d5*u**2
+ ((lam*sigma)**k*d1*c2 - 1)*u + ((lam*sigma)**k*d1 - 1) = 0.  The root
u_minus (the "-" sign of the quadratic formula) generates the branch that
the coexistence theory predicts to be asymptotically stable.

Closed-form orbits whose itinerary strays into the blend strip (and only
there) are re-solved with a damped Newton iteration on f^period.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .errors import (
    DegenerateCoefficientsError,
    EscapeError,
    ItineraryInvalidError,
    NoConvergenceError,
    NotMinimalError,
    SingularJacobianError,
)
from .mapcore import Jacobian2, Point2, Region, eval_map, eval_return, eval_saddle, jacobian, region_of
from .params import MapParams
from .stability import StabilityClass, classify, orbit_jacobian

__all__ = [
    "Branch",
    "RootPair",
    "SRkOrbit",
    "ScanRecord",
    "ScanResult",
    "srk_quadratic",
    "assemble_orbit",
    "newton_periodic",
    "scan_srk",
    "orbits_to_csv",
    "orbits_from_csv",
]

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
NEWTON_MAX_HALVINGS = 20
MINIMALITY_TOL = 1e-8
_SINGULAR_TOL = 1e-14
_NEWTON_ESCAPE = 1e6


class Branch(Enum):
    MINUS = "minus"
    PLUS = "plus"


@dataclass(frozen=True)
class RootPair:
    """Roots u = y - y_star of the single-round quadratic (None if absent)."""

    u_minus: float | None
    u_plus: float | None

    def get(self, branch: Branch) -> float | None:
        return self.u_minus if branch is Branch.MINUS else self.u_plus


@dataclass(frozen=True)
class SRkOrbit:
    """A computed periodic solution.

    ``points`` starts at the above-strip point; ``regions`` records the
    map region of every point.  ``itinerary_ok`` is True when exactly one
    point is above the strip and the remaining k points are below it
    (the single-round itinerary).  ``method`` is "closed-form" or "newton".
    """

    k: int
    period: int
    points: tuple[Point2, ...]
    branch: Branch | None
    residual: float
    trace: float
    det: float
    stability: StabilityClass
    regions: tuple[Region, ...]
    itinerary_ok: bool
    method: str

    def __post_init__(self) -> None:
        if self.period != len(self.points):
            raise ValueError("period must equal number of points")


def _quadratic_coefficients(params: MapParams, k: int) -> tuple[float, float, float]:
    lamk = params.lam**k
    sigk = params.sigma**k
    prod = (params.lam * params.sigma) ** k
    denom = 1.0 - params.c1 * lamk
    if denom == 0.0:
        raise DegenerateCoefficientsError("c1*lam**k == 1 degenerates the x-row")
    # A, B parameterize the above-strip abscissa x = A + B*u exactly;
    # As = sigma**k * A and Bs = sigma**k * B are grouped through
    # (lam*sigma)**k so the example family's cancellations stay exact.
    a_coef = lamk * params.x_star / denom
    b_coef = lamk * params.c2 / denom
    a_scaled = prod * params.x_star / denom
    b_scaled = prod * params.c2 / denom
    qa = sigk * params.d5 + params.d3 * b_coef * b_scaled + params.d4 * b_scaled
    qb = (
        params.d1 * b_scaled
        + sigk * params.d2
        + 2.0 * params.d3 * a_coef * b_scaled
        + params.d4 * a_scaled
        - 1.0
    )
    qc = params.d1 * a_scaled + params.d3 * a_coef * a_scaled - params.y_star
    return qa, qb, qc


def srk_quadratic(params: MapParams, k: int) -> RootPair:
    """Real roots of the single-round fixed-point quadratic for index k.

    The minus root corresponds to the branch that the theory predicts to
    be asymptotically stable.  Both roots absent means the discriminant
    is negative (no single-round pair at this k).
    """
    if params.d5 == 0.0:
        raise DegenerateCoefficientsError("srk_quadratic requires d5 != 0")
    if k < 0:
        raise ValueError("k must be non-negative")
    qa, qb, qc = _quadratic_coefficients(params, k)
    disc = qb * qb - 4.0 * qa * qc
    if disc < 0.0:
        return RootPair(None, None)
    root = math.sqrt(disc)
    return RootPair(
        u_minus=(-qb - root) / (2.0 * qa),
        u_plus=(-qb + root) / (2.0 * qa),
    )


def _orbit_regions(params: MapParams, points: Sequence[Point2]) -> tuple[Region, ...]:
    return tuple(region_of(params, p.y) for p in points)


def _single_round_violations(
    regions: Sequence[Region],
) -> list[tuple[int, Region]]:
    """Deviations from the itinerary [upper, lower, ..., lower]."""
    bad: list[tuple[int, Region]] = []
    if regions[0] is not Region.UPPER:
        bad.append((0, regions[0]))
    for j, region in enumerate(regions[1:], start=1):
        if region is not Region.LOWER:
            bad.append((j, region))
    return bad


def _full_map_residual(params: MapParams, points: Sequence[Point2]) -> float:
    p = points[0]
    for _ in range(len(points)):
        p = eval_map(params, p)
    return max(abs(p.x - points[0].x), abs(p.y - points[0].y))


def _check_minimality(params: MapParams, p0: Point2, period: int) -> None:
    p = p0
    for step in range(1, period):
        p = eval_map(params, p)
        if period % step == 0 and step < period:
            if max(abs(p.x - p0.x), abs(p.y - p0.y)) <= MINIMALITY_TOL:
                raise NotMinimalError(divisor=step)


def _finish_orbit(
    params: MapParams,
    k: int,
    points: Sequence[Point2],
    branch: Branch | None,
    method: str,
) -> SRkOrbit:
    regions = _orbit_regions(params, points)
    violations = _single_round_violations(regions)
    residual = _full_map_residual(params, points)
    jac = orbit_jacobian(params, points)
    tau, delta = jac.trace, jac.det
    return SRkOrbit(
        k=k,
        period=len(points),
        points=tuple(points),
        branch=branch,
        residual=residual,
        trace=tau,
        det=delta,
        stability=classify(tau, delta),
        regions=regions,
        itinerary_ok=not violations,
        method=method,
    )


def assemble_orbit(
    params: MapParams, k: int, u: float, branch: Branch | None = None
) -> SRkOrbit:
    """Build the closed-form orbit for root ``u`` and validate it.

    The above-strip point is (lam**k*(x_star + c2*u)/(1 - c1*lam**k),
    y_star + u); the return piece then the saddle piece applied k times
    produce the remaining points.  Raises ``ItineraryInvalidError`` when
    any point falls outside its required region (the closed form is then
    not a genuine orbit of the piecewise map).
    """
    lamk = params.lam**k
    denom = 1.0 - params.c1 * lamk
    x_up = lamk * (params.x_star + params.c2 * u) / denom
    p_up = Point2(x_up, params.y_star + u)
    points = [p_up]
    if k > 0:
        points.append(eval_return(params, p_up))
        for _ in range(k - 1):
            points.append(eval_saddle(params, points[-1]))
    regions = _orbit_regions(params, points)
    violations = _single_round_violations(regions)
    if violations:
        raise ItineraryInvalidError(violations)
    _check_minimality(params, p_up, k + 1)
    return _finish_orbit(params, k, points, branch, "closed-form")


def _solve_2x2(jac: Jacobian2, rx: float, ry: float) -> tuple[float, float]:
    det = jac.det
    if abs(det) < _SINGULAR_TOL:
        raise SingularJacobianError(at_iterate=None)
    return (
        (jac.d * rx - jac.b * ry) / det,
        (jac.a * ry - jac.c * rx) / det,
    )


def _cycle_and_residual(
    params: MapParams, p: Point2, period: int
) -> tuple[list[Point2], float, float]:
    pts = [p]
    for _ in range(period - 1):
        pts.append(eval_map(params, pts[-1]))
    closing = eval_map(params, pts[-1])
    gx = closing.x - p.x
    gy = closing.y - p.y
    if not (math.isfinite(gx) and math.isfinite(gy)):
        raise EscapeError(at_step=period, points=pts)
    return pts, gx, gy


def newton_periodic(
    params: MapParams,
    seed: Point2,
    period: int,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
) -> SRkOrbit:
    """Damped Newton iteration on g(p) = f^period(p) - p.

    The Jacobian of g is the chain-rule product of the single-step
    Jacobians minus the identity.  Steps are halved (up to 20 times)
    whenever the residual increases.  The converged orbit must have
    minimal period; otherwise ``NotMinimalError`` is raised.
    """
    if period < 1:
        raise ValueError("period must be >= 1")
    p = Point2(float(seed[0]), float(seed[1]))
    if max(abs(p.x), abs(p.y)) > _NEWTON_ESCAPE:
        raise NoConvergenceError(iterations=0, last_residual=math.inf)
    pts, gx, gy = _cycle_and_residual(params, p, period)
    res = max(abs(gx), abs(gy))
    for iteration in range(max_iter):
        if res <= tol:
            _check_minimality(params, p, period)
            return _finish_orbit(params, period - 1, pts, None, "newton")
        jac_prod = orbit_jacobian(params, pts)
        dg = Jacobian2(jac_prod.a - 1.0, jac_prod.b, jac_prod.c, jac_prod.d - 1.0)
        if abs(dg.det) < _SINGULAR_TOL:
            raise SingularJacobianError(at_iterate=p)
        dx, dy = _solve_2x2(dg, -gx, -gy)
        step_scale = 1.0
        for _ in range(NEWTON_MAX_HALVINGS + 1):
            trial = Point2(p.x + step_scale * dx, p.y + step_scale * dy)
            try:
                trial_pts, tgx, tgy = _cycle_and_residual(params, trial, period)
            except EscapeError:
                step_scale *= 0.5
                continue
            trial_res = max(abs(tgx), abs(tgy))
            if trial_res < res or trial_res <= tol:
                p, pts, gx, gy, res = trial, trial_pts, tgx, tgy, trial_res
                break
            step_scale *= 0.5
        else:
            raise NoConvergenceError(iterations=iteration + 1, last_residual=res)
        if max(abs(p.x), abs(p.y)) > _NEWTON_ESCAPE:
            raise NoConvergenceError(iterations=iteration + 1, last_residual=res)
    if res <= tol:
        _check_minimality(params, p, period)
        return _finish_orbit(params, period - 1, pts, None, "newton")
    raise NoConvergenceError(iterations=max_iter, last_residual=res)


@dataclass(frozen=True)
class ScanRecord:
    """Outcome of one (k, branch) attempt."""

    k: int
    branch: Branch
    status: str  # "closed-form" | "newton" | "no-real-root" |
    #              "itinerary-invalid" | "newton-failed" | "duplicate"
    orbit: SRkOrbit | None
    detail: str = ""


@dataclass(frozen=True)
class ScanResult:
    records: tuple[ScanRecord, ...]

    @property
    def orbits(self) -> list[SRkOrbit]:
        return [r.orbit for r in self.records if r.orbit is not None]

    def stable_orbits(self) -> list[SRkOrbit]:
        return [
            o
            for o in self.orbits
            if o.stability is StabilityClass.ASYMPTOTICALLY_STABLE
        ]

    def orbit(self, k: int, branch: Branch) -> SRkOrbit | None:
        for r in self.records:
            if r.k == k and r.branch is branch:
                return r.orbit
        return None


def _same_orbit(a: SRkOrbit, b: SRkOrbit, tol: float = 1e-8) -> bool:
    if a.period != b.period:
        return False
    # Compare point sets up to cyclic rotation.
    for shift in range(b.period):
        if all(
            max(abs(pa.x - pb.x), abs(pa.y - pb.y)) <= tol
            for pa, pb in zip(a.points, b.points[shift:] + b.points[:shift])
        ):
            return True
    return False


def _scan_one(
    params: MapParams, k: int, branch: Branch, found: list[SRkOrbit]
) -> ScanRecord:
    roots = srk_quadratic(params, k)
    u = roots.get(branch)
    if u is None:
        return ScanRecord(k, branch, "no-real-root", None, "negative discriminant")
    try:
        orbit = assemble_orbit(params, k, u, branch)
        return ScanRecord(k, branch, "closed-form", orbit)
    except NotMinimalError as err:
        return ScanRecord(k, branch, "duplicate", None, str(err))
    except ItineraryInvalidError as err:
        blend_only = all(region is Region.BLEND for _, region in err.violations)
        if not blend_only:
            return ScanRecord(k, branch, "itinerary-invalid", None, str(err))
        lamk = params.lam**k
        denom = 1.0 - params.c1 * lamk
        seed = Point2(lamk * (params.x_star + params.c2 * u) / denom, params.y_star + u)
        try:
            orbit = newton_periodic(params, seed, k + 1)
        except (NoConvergenceError, SingularJacobianError, NotMinimalError) as nerr:
            return ScanRecord(k, branch, "newton-failed", None, str(nerr))
        for other in found:
            if _same_orbit(orbit, other):
                return ScanRecord(
                    k, branch, "duplicate", None, "newton converged onto another branch"
                )
        orbit = SRkOrbit(
            k=orbit.k,
            period=orbit.period,
            points=orbit.points,
            branch=branch,
            residual=orbit.residual,
            trace=orbit.trace,
            det=orbit.det,
            stability=orbit.stability,
            regions=orbit.regions,
            itinerary_ok=orbit.itinerary_ok,
            method=orbit.method,
        )
        return ScanRecord(k, branch, "newton", orbit, str(err))


def scan_srk(params: MapParams, k_min: int, k_max: int) -> ScanResult:
    """Attempt both single-round branches for every k in [k_min, k_max].

    The closed form is used where its itinerary is valid; orbits that
    stray into the blend strip (and only there) are re-solved by Newton
    iteration seeded with the closed form.  Per-k failures are recorded,
    never raised.
    """
    if k_min > k_max:
        raise ValueError("k_min must not exceed k_max")
    records: list[ScanRecord] = []
    found: list[SRkOrbit] = []
    for k in range(k_min, k_max + 1):
        for branch in (Branch.MINUS, Branch.PLUS):
            record = _scan_one(params, k, branch, found)
            records.append(record)
            if record.orbit is not None:
                found.append(record.orbit)
    return ScanResult(records=tuple(records))


# -- CSV export -------------------------------------------------------------

_CSV_HEADER = "k,period,branch,j,x_j,y_j,trace,det,stability,residual"


def orbits_to_csv(orbits: Iterable[SRkOrbit]) -> str:
    """One row per orbit point; floats use shortest round-trip formatting."""
    lines = [_CSV_HEADER]
    for orbit in orbits:
        branch = orbit.branch.value if orbit.branch is not None else ""
        for j, p in enumerate(orbit.points):
            lines.append(
                f"{orbit.k},{orbit.period},{branch},{j},{p.x!r},{p.y!r},"
                f"{orbit.trace!r},{orbit.det!r},{orbit.stability.value},{orbit.residual!r}"
            )
    return "\n".join(lines) + "\n"


def orbits_from_csv(text: str) -> list[dict]:
    """Parse an orbit CSV back into per-orbit dicts (points in file order)."""
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0] != _CSV_HEADER:
        raise ValueError("unrecognized orbit CSV header")
    grouped: dict[tuple[int, str], dict] = {}
    for line in lines[1:]:
        fields = line.split(",")
        if len(fields) != 10:
            raise ValueError(f"malformed orbit CSV row: {line}")
        k = int(fields[0])
        branch = fields[2]
        key = (k, branch)
        entry = grouped.setdefault(
            key,
            {
                "k": k,
                "period": int(fields[1]),
                "branch": branch,
                "points": [],
                "trace": float(fields[6]),
                "det": float(fields[7]),
                "stability": fields[8],
                "residual": float(fields[9]),
            },
        )
        entry["points"].append(Point2(float(fields[4]), float(fields[5])))
    return list(grouped.values())
