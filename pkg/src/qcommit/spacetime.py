"""Exact Minkowski geometry in a single agreed inertial frame.

Events carry integer coordinates (c = 1, one unit of t equals one unit of
distance), so classification at the light-cone boundary is exact: a pair of
events is lightlike iff the squared interval is the integer zero, never a
float that happens to round there.  Light directions are integer 3-vectors
whose Euclidean norm is itself an integer (Pythagorean vectors), which makes
every point on a light ray exactly lightlike-separated from the ray origin.
"""

import math
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction

import numpy as np

from . import _kernels

# Coordinate magnitude cap.  Differences and squared intervals of capped
# coordinates fit comfortably in int64, so the batched kernels can never
# overflow silently.
COORD_LIMIT = 500_000_000


class ConfigError(ValueError):
    """Raised for geometry that cannot be represented exactly."""


class CausalRelation(IntEnum):
    TIMELIKE_FUTURE = _kernels.TIMELIKE_FUTURE
    LIGHTLIKE_FUTURE = _kernels.LIGHTLIKE_FUTURE
    SPACELIKE = _kernels.SPACELIKE
    LIGHTLIKE_PAST = _kernels.LIGHTLIKE_PAST
    TIMELIKE_PAST = _kernels.TIMELIKE_PAST
    COINCIDENT = _kernels.COINCIDENT

    def mirror(self) -> "CausalRelation":
        """The relation seen from the other event's point of view."""
        if self in (CausalRelation.SPACELIKE, CausalRelation.COINCIDENT):
            return self
        return CausalRelation(-self.value)

    @property
    def is_future(self) -> bool:
        return self in (CausalRelation.TIMELIKE_FUTURE, CausalRelation.LIGHTLIKE_FUTURE)

    @property
    def is_past(self) -> bool:
        return self in (CausalRelation.TIMELIKE_PAST, CausalRelation.LIGHTLIKE_PAST)


@dataclass(frozen=True, order=True)
class Event:
    """A spacetime point with exact integer coordinates in the fixed frame."""

    t: int
    x: int
    y: int = 0
    z: int = 0

    def __post_init__(self):
        for name in ("t", "x", "y", "z"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigError(f"event coordinate {name}={v!r} is not an exact integer")
            if abs(v) > COORD_LIMIT:
                raise ConfigError(
                    f"event coordinate {name}={v} exceeds the resolution cap {COORD_LIMIT}"
                )

    @property
    def coords(self) -> tuple:
        return (self.t, self.x, self.y, self.z)

    def translate(self, dt: int, dx: int, dy: int = 0, dz: int = 0) -> "Event":
        return Event(self.t + dt, self.x + dx, self.y + dy, self.z + dz)

    def to_json(self) -> list:
        return [self.t, self.x, self.y, self.z]


ORIGIN = Event(0, 0, 0, 0)


def interval_squared(a: Event, b: Event) -> int:
    """Squared Minkowski interval (dt^2 - dx^2 - dy^2 - dz^2), exact.

    Positive for timelike pairs, zero for lightlike or coincident ones,
    negative for spacelike ones.
    """
    dt = b.t - a.t
    dx = b.x - a.x
    dy = b.y - a.y
    dz = b.z - a.z
    return dt * dt - dx * dx - dy * dy - dz * dz


def causal_order(a: Event, b: Event) -> CausalRelation:
    """Classify b relative to a (future/past is the sign of b.t - a.t)."""
    if a == b:
        return CausalRelation.COINCIDENT
    s2 = interval_squared(a, b)
    dt = b.t - a.t
    if s2 < 0:
        return CausalRelation.SPACELIKE
    if s2 > 0:
        return CausalRelation.TIMELIKE_FUTURE if dt > 0 else CausalRelation.TIMELIKE_PAST
    return CausalRelation.LIGHTLIKE_FUTURE if dt > 0 else CausalRelation.LIGHTLIKE_PAST


def events_to_array(events) -> np.ndarray:
    """Pack events into an (n, 4) int64 array for the batched kernels."""
    return np.array([e.coords for e in events], dtype=np.int64)


@dataclass(frozen=True)
class LightDirection:
    """A lightlike propagation direction encoding committed value ``index``.

    ``vector`` is an integer spatial 3-vector and ``norm`` its exact Euclidean
    length, so ``origin + s*(norm, vector)`` is exactly on the light cone for
    every positive integer s.
    """

    index: int
    vector: tuple
    norm: int

    def __post_init__(self):
        vx, vy, vz = self.vector
        if vx == 0 and vy == 0 and vz == 0:
            raise ConfigError("light direction vector must be nonzero")
        if self.norm <= 0 or vx * vx + vy * vy + vz * vz != self.norm * self.norm:
            raise ConfigError(
                f"direction {self.vector} does not have exact integer norm {self.norm}"
            )

    @classmethod
    def from_integer_vector(cls, index: int, vector) -> "LightDirection":
        vx, vy, vz = (int(c) for c in vector)
        g = math.gcd(math.gcd(abs(vx), abs(vy)), abs(vz))
        if g > 1:
            vx, vy, vz = vx // g, vy // g, vz // g
        n2 = vx * vx + vy * vy + vz * vz
        n = math.isqrt(n2)
        if n * n != n2:
            raise ConfigError(f"direction vector {vector} has irrational length")
        return cls(index, (vx, vy, vz), n)

    def unit_key(self) -> tuple:
        """Canonical key: equal keys iff the directions are positively parallel."""
        g = math.gcd(math.gcd(abs(self.vector[0]), abs(self.vector[1])), abs(self.vector[2]))
        return tuple(c // g for c in self.vector)

    def unit_float(self) -> np.ndarray:
        return np.array(self.vector, dtype=float) / self.norm

    def angle_to(self, other: "LightDirection") -> float:
        dot = sum(a * b for a, b in zip(self.vector, other.vector))
        c = dot / (self.norm * other.norm)
        return math.acos(max(-1.0, min(1.0, c)))

    def to_json(self) -> dict:
        return {"index": self.index, "vector": list(self.vector), "norm": self.norm}


# Agreed 1D convention: value 0 travels toward -x, value 1 toward +x.
V0_1D = LightDirection(0, (-1, 0, 0), 1)
V1_1D = LightDirection(1, (1, 0, 0), 1)


@dataclass(frozen=True)
class DirectionSet:
    """m pairwise-distinct light directions plus their minimum pairwise angle.

    The reported angle lets callers judge whether the angular budget is small
    compared to 1/m, which is what bounded-precision direction encoding needs.
    """

    directions: tuple
    min_pairwise_angle: float

    def __len__(self):
        return len(self.directions)

    def __iter__(self):
        return iter(self.directions)

    def __getitem__(self, i):
        return self.directions[i]


def _rational_circle_point(angle: float, max_den: int = 64):
    """Exact rational (cos, sin) pair close to the requested angle.

    Uses the tangent-half-angle parametrization: t = p/q gives the exact
    unit-circle point ((q^2-p^2)/(q^2+p^2), 2pq/(q^2+p^2)).  Half-angles with
    |tan| > 1 go through the antipodal point so numerators stay bounded and
    direction vectors keep small integer entries.
    """
    a = math.remainder(angle, 2 * math.pi)  # a in (-pi, pi]
    if abs(abs(a) - math.pi) < 1e-12:
        return Fraction(-1), Fraction(0)
    u = math.tan(a / 2)
    flip = abs(u) > 1.0
    if flip:
        u = -1.0 / u  # half-angle of (a - pi)
    t = Fraction(u).limit_denominator(max_den)
    p, q = t.numerator, t.denominator
    den = q * q + p * p
    cos = Fraction(q * q - p * p, den)
    sin = Fraction(2 * p * q, den)
    if flip:
        return -cos, -sin
    return cos, sin


def _direction_from_rationals(index: int, cx: Fraction, cy: Fraction, cz: Fraction):
    den = math.lcm(cx.denominator, cy.denominator, cz.denominator)
    vec = (
        int(cx * den),
        int(cy * den),
        int(cz * den),
    )
    return LightDirection.from_integer_vector(index, vec)


_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def generate_directions(m: int, mode: str = "planar") -> DirectionSet:
    """Build m distinct light directions, roughly equally separated.

    planar: equal target angles 2*pi*i/m in the xy-plane, snapped to nearby
    exact rational unit vectors (snapping keeps all ray arithmetic exact; the
    angular error is bounded by the rational approximation and is visible in
    the reported minimum pairwise angle).  m=2 reproduces the agreed 1D
    convention (-x for value 0, +x for value 1).

    spherical: deterministic Fibonacci-lattice covering of the sphere, each
    point snapped the same way.
    """
    if m < 2:
        raise ConfigError(f"need at least two directions, got m={m}")
    if mode not in ("planar", "spherical"):
        raise ConfigError(f"unknown direction mode {mode!r}")

    dirs = []
    if m == 2:
        dirs = [V0_1D, V1_1D]
    elif mode == "planar":
        for i in range(m):
            cx, cy = _rational_circle_point(2 * math.pi * i / m)
            dirs.append(_direction_from_rationals(i, cx, cy, Fraction(0)))
    else:
        for i in range(m):
            z = Fraction(m - (2 * i + 1), m)  # exact lattice height 1-(2i+1)/m
            polar = math.acos(max(-1.0, min(1.0, float(z))))
            # two rational factors multiply, so keep each one's denominator
            # small to bound the integer direction entries
            cos_pol, sin_pol = _rational_circle_point(polar, max_den=16)
            cos_az, sin_az = _rational_circle_point(i * _GOLDEN_ANGLE, max_den=16)
            dirs.append(
                _direction_from_rationals(i, sin_pol * cos_az, sin_pol * sin_az, cos_pol)
            )

    keys = set()
    for d in dirs:
        k = d.unit_key()
        if k in keys:
            raise ConfigError(
                f"direction generation produced coinciding directions for m={m}, mode={mode}"
            )
        keys.add(k)

    units = np.array([d.unit_float() for d in dirs])
    dots = units @ units.T
    np.fill_diagonal(dots, -1.0)
    min_angle = float(np.arccos(np.clip(dots.max(), -1.0, 1.0)))
    return DirectionSet(tuple(dirs), min_angle)


def point_on_ray(origin: Event, direction: LightDirection, t: int) -> Event:
    """The point reached after ray parameter t > 0 along a light direction.

    Coordinates advance by t*(norm, vector), so the result is exactly
    lightlike-future of the origin.
    """
    if not isinstance(t, int) or isinstance(t, bool) or t <= 0:
        raise ConfigError(f"ray parameter must be a positive integer, got {t!r}")
    vx, vy, vz = direction.vector
    return Event(
        origin.t + t * direction.norm,
        origin.x + t * vx,
        origin.y + t * vy,
        origin.z + t * vz,
    )


def committed_region_excludes(p: Event, unveil_receipt_points) -> bool:
    """True iff p lies outside the causal past of every receipt point.

    Such a point is one where the recipient may count the committer as having
    been committed: no operation there could still have influenced any of the
    completed verification events.
    """
    pts = list(unveil_receipt_points)
    if not pts:
        raise ConfigError("committed-region test requires at least one receipt point")
    for q in pts:
        rel = causal_order(p, q)
        if rel.is_future or rel is CausalRelation.COINCIDENT:
            return False
    return True


def causal_future_apex(points, spatial_hint=None) -> Event:
    """An early integer-grid event in the common causal future of ``points``.

    The spatial position defaults to the first point's coordinates unless a
    hint is given; the time coordinate is the smallest integer making the
    result causally after every input.  For the symmetric 1D two-point case
    with a midpoint hint this reproduces the exact cone-intersection apex.
    """
    pts = list(points)
    if not pts:
        raise ConfigError("apex of an empty point set")
    if spatial_hint is None:
        sx, sy, sz = pts[0].x, pts[0].y, pts[0].z
    else:
        sx, sy, sz = spatial_hint
    t_min = None
    for q in pts:
        d2 = (sx - q.x) ** 2 + (sy - q.y) ** 2 + (sz - q.z) ** 2
        r = math.isqrt(d2)
        if r * r != d2:
            r += 1  # round the light-travel time up to the integer grid
        t_here = q.t + r
        t_min = t_here if t_min is None else max(t_min, t_here)
    return Event(t_min, sx, sy, sz)
