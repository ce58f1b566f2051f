"""Exact evaluation of the piecewise map, its pieces, and Jacobians.

All scalar operations are pure functions of ``MapParams`` and plain floats;
``eval_map_arrays`` mirrors ``eval_map`` for numpy arrays so that rasters
and manifold tracing can batch-iterate large point sets.
"""
from __future__ import annotations

import math
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import EscapeError, ResonanceFormUnavailableError
from .params import MapParams

__all__ = [
    "Point2",
    "Jacobian2",
    "Region",
    "Rect",
    "smoothstep",
    "smoothstep_deriv",
    "blend_weight",
    "blend_weight_deriv",
    "eval_saddle",
    "eval_return",
    "region_of",
    "eval_map",
    "jacobian",
    "iterate",
    "saddle_power",
    "eval_map_arrays",
]

_RESONANCE_TOL = 1e-12


class Point2(NamedTuple):
    x: float
    y: float


class Jacobian2(NamedTuple):
    """2x2 matrix in row-major order: [[a, b], [c, d]]."""

    a: float
    b: float
    c: float
    d: float

    @property
    def trace(self) -> float:
        return self.a + self.d

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def matmul(self, other: "Jacobian2") -> "Jacobian2":
        return Jacobian2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    @staticmethod
    def identity() -> "Jacobian2":
        return Jacobian2(1.0, 0.0, 0.0, 1.0)


class Region(Enum):
    LOWER = "lower"
    BLEND = "blend"
    UPPER = "upper"


class Rect(NamedTuple):
    """Axis-aligned window (xmin, xmax, ymin, ymax)."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    def is_empty(self) -> bool:
        return not (self.xmin < self.xmax and self.ymin < self.ymax)

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    def padded(self, fraction: float) -> "Rect":
        dx = self.width * fraction
        dy = self.height * fraction
        return Rect(self.xmin - dx, self.xmax + dx, self.ymin - dy, self.ymax + dy)


def smoothstep(z: float) -> float:
    """Cubic smoothstep 3*z**2 - 2*z**3 (ramps 0 -> 1 with flat ends)."""
    return 3.0 * z * z - 2.0 * z * z * z


def smoothstep_deriv(z: float) -> float:
    return 6.0 * z * (1.0 - z)


def blend_weight(params: MapParams, y: float) -> float:
    """Convex blend weight r(y); 0 at y=h0, 1 at y=h1, flat at both."""
    z = (y - params.h0) / (params.h1 - params.h0)
    return smoothstep(z)


def blend_weight_deriv(params: MapParams, y: float) -> float:
    width = params.h1 - params.h0
    z = (y - params.h0) / width
    return smoothstep_deriv(z) / width


def eval_saddle(params: MapParams, p: Point2) -> Point2:
    """The linear piece (lam*x, sigma*y), active below the strip."""
    return Point2(params.lam * p.x, params.sigma * p.y)


def eval_return(params: MapParams, p: Point2) -> Point2:
    """The quadratic return piece, active above the strip."""
    u = p.y - params.y_star
    x_new = params.x_star + params.c1 * p.x + params.c2 * u
    y_new = (
        params.d1 * p.x
        + params.d2 * u
        + params.d3 * p.x * p.x
        + params.d4 * p.x * u
        + params.d5 * u * u
    )
    return Point2(x_new, y_new)


def region_of(params: MapParams, y: float) -> Region:
    """Region tag for a given height; boundaries belong to the pure pieces."""
    if y <= params.h0:
        return Region.LOWER
    if y >= params.h1:
        return Region.UPPER
    return Region.BLEND


def eval_map(params: MapParams, p: Point2) -> Point2:
    region = region_of(params, p.y)
    if region is Region.LOWER:
        return eval_saddle(params, p)
    if region is Region.UPPER:
        return eval_return(params, p)
    r = blend_weight(params, p.y)
    p0 = eval_saddle(params, p)
    p1 = eval_return(params, p)
    return Point2(
        (1.0 - r) * p0.x + r * p1.x,
        (1.0 - r) * p0.y + r * p1.y,
    )


def _saddle_jacobian(params: MapParams) -> Jacobian2:
    return Jacobian2(params.lam, 0.0, 0.0, params.sigma)


def _return_jacobian(params: MapParams, p: Point2) -> Jacobian2:
    u = p.y - params.y_star
    return Jacobian2(
        params.c1,
        params.c2,
        params.d1 + 2.0 * params.d3 * p.x + params.d4 * u,
        params.d2 + params.d4 * p.x + 2.0 * params.d5 * u,
    )


def jacobian(params: MapParams, p: Point2) -> Jacobian2:
    """Analytic Jacobian of the active branch.

    Inside the strip the y-column picks up the blend-weight derivative
    times the difference of the two pieces; at y=h0 and y=h1 that term
    vanishes, so the one-sided limits agree with the pure pieces.
    """
    region = region_of(params, p.y)
    if region is Region.LOWER:
        return _saddle_jacobian(params)
    if region is Region.UPPER:
        return _return_jacobian(params, p)
    r = blend_weight(params, p.y)
    dr = blend_weight_deriv(params, p.y)
    j0 = _saddle_jacobian(params)
    j1 = _return_jacobian(params, p)
    p0 = eval_saddle(params, p)
    p1 = eval_return(params, p)
    return Jacobian2(
        (1.0 - r) * j0.a + r * j1.a,
        (1.0 - r) * j0.b + r * j1.b + dr * (p1.x - p0.x),
        (1.0 - r) * j0.c + r * j1.c,
        (1.0 - r) * j0.d + r * j1.d + dr * (p1.y - p0.y),
    )


def iterate(
    params: MapParams,
    p: Point2,
    n: int,
    escape_radius: float = 10.0,
) -> list[Point2]:
    """Forward orbit [p, f(p), ..., f^n(p)].

    Raises ``EscapeError`` (carrying the partial orbit) as soon as a point
    exceeds ``escape_radius`` in the max norm.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    pts = [Point2(float(p[0]), float(p[1]))]
    if max(abs(pts[0].x), abs(pts[0].y)) > escape_radius:
        raise EscapeError(at_step=0, points=pts)
    for step in range(1, n + 1):
        nxt = eval_map(params, pts[-1])
        pts.append(nxt)
        if not (math.isfinite(nxt.x) and math.isfinite(nxt.y)):
            raise EscapeError(at_step=step, points=pts)
        if max(abs(nxt.x), abs(nxt.y)) > escape_radius:
            raise EscapeError(at_step=step, points=pts)
    return pts


def saddle_power(params: MapParams, p: Point2, k: int) -> Point2:
    """k-fold iterate of the resonance-truncated near-saddle normal form.

    Valid only in the orientation-preserving resonance case lam*sigma = 1,
    where the normal form truncated at first order in k*x*y reads

        (x, y) -> (lam**k * x * (1 + k*a1*x*y),
                   lam**(-k) * y * (1 + k*b1*x*y)).
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if abs(params.lam * params.sigma - 1.0) > _RESONANCE_TOL:
        raise ResonanceFormUnavailableError(
            f"requires lam*sigma = 1, got {params.lam * params.sigma}"
        )
    if k == 0:
        return Point2(float(p[0]), float(p[1]))
    lamk = params.lam**k
    xy = p.x * p.y
    return Point2(
        lamk * p.x * (1.0 + k * params.a1 * xy),
        p.y * (1.0 + k * params.b1 * xy) / lamk,
    )


def eval_map_arrays(
    params: MapParams, x: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``eval_map`` over parallel coordinate arrays.

    Elementwise identical to the scalar path: the same branch formulas are
    selected per point, so results do not depend on batching.
    """
    u = y - params.y_star
    sx = params.lam * x
    sy = params.sigma * y
    rx = params.x_star + params.c1 * x + params.c2 * u
    ry = params.d1 * x + params.d2 * u + params.d3 * x * x + params.d4 * x * u + params.d5 * u * u

    lower = y <= params.h0
    upper = y >= params.h1
    blend = ~(lower | upper)

    out_x = np.where(lower, sx, rx)
    out_y = np.where(lower, sy, ry)
    if np.any(blend):
        z = (y - params.h0) / (params.h1 - params.h0)
        r = 3.0 * z * z - 2.0 * z * z * z
        bx = (1.0 - r) * sx + r * rx
        by = (1.0 - r) * sy + r * ry
        out_x = np.where(blend, bx, out_x)
        out_y = np.where(blend, by, out_y)
    return out_x, out_y
