"""Room, emitter, IRS panel and receiver geometry.

Everything here is a plain immutable value plus a handful of pure
functions computing positions, distances and angle cosines.  Lengths are
meters, angles degrees.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

# vertical clearance kept free at floor and ceiling when the panel rows are squeezed
VERTICAL_MARGIN = 0.1
# PD plane on the floor; at desk height (0.85 m) far fewer wall elements reach the receiver
DEFAULT_RECEIVER_HEIGHT = 0.0


class GeometryError(ValueError):
    pass


class DegenerateGeometryError(GeometryError):
    pass


class PanelFitError(GeometryError):
    pass


class Vec3(NamedTuple):
    x: float
    y: float
    z: float

    def array(self) -> np.ndarray:
        return np.array(self, dtype=float)


def vec3(v) -> Vec3:
    """Coerce any length-3 sequence to a finite Vec3."""
    x, y, z = (float(c) for c in v)
    if not all(math.isfinite(c) for c in (x, y, z)):
        raise GeometryError(f"non-finite coordinates: {v!r}")
    return Vec3(x, y, z)


def _unit(v, name: str) -> Vec3:
    v = vec3(v)
    if abs(math.hypot(*v) - 1.0) > 1e-12:
        raise GeometryError(f"{name} must have unit norm, got {v!r}")
    return v


class Role(str, enum.Enum):
    BOB = "bob"
    EVE = "eve"


class Wall(str, enum.Enum):
    Y0 = "y0"
    Y_MAX = "y_max"
    X0 = "x0"
    X_MAX = "x_max"


class ZoneLabel(str, enum.Enum):
    INNER = "inner"
    OUTER = "outer"


@dataclass(frozen=True)
class Room:
    width: float = 5.0  # x extent
    depth: float = 5.0  # y extent
    height: float = 3.0

    def __post_init__(self):
        if not (self.width > 0 and self.depth > 0 and self.height > 0):
            raise GeometryError(f"room dimensions must be positive: {self}")

    def contains(self, p) -> bool:
        x, y, z = p
        return 0 <= x <= self.width and 0 <= y <= self.depth and 0 <= z <= self.height

    @property
    def center(self) -> Vec3:
        return Vec3(self.width / 2, self.depth / 2, self.height / 2)


@dataclass(frozen=True)
class Emitter:
    position: Vec3 = Vec3(2.5, 2.5, 3.0)
    normal: Vec3 = Vec3(0.0, 0.0, -1.0)
    half_power_semiangle: float = 60.0
    optical_power: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, "position", vec3(self.position))
        object.__setattr__(self, "normal", _unit(self.normal, "emitter normal"))
        if not 0 < self.half_power_semiangle < 90:
            raise GeometryError(
                f"half-power semi-angle must lie in (0, 90) degrees, got {self.half_power_semiangle}")
        if self.optical_power < 0:
            raise GeometryError(f"optical power must be >= 0, got {self.optical_power}")


@dataclass(frozen=True)
class Photodetector:
    area: float = 1e-4
    responsivity: float = 0.6
    fov: float = 90.0
    refractive_index: float = 1.5
    filter_gain: float = 1.0
    normal: Vec3 = Vec3(0.0, 0.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "normal", _unit(self.normal, "photodetector normal"))
        if self.area <= 0:
            raise GeometryError(f"PD area must be > 0, got {self.area}")
        if not 0 < self.fov <= 90:
            raise GeometryError(f"PD field of view must lie in (0, 90] degrees, got {self.fov}")
        if self.refractive_index < 1:
            raise GeometryError(f"refractive index must be >= 1, got {self.refractive_index}")
        if self.filter_gain <= 0:
            raise GeometryError(f"filter gain must be > 0, got {self.filter_gain}")


@dataclass(frozen=True)
class UserTerminal:
    role: Role
    position: Vec3
    pd: Photodetector = field(default_factory=Photodetector)

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        object.__setattr__(self, "position", vec3(self.position))


_WALL_NORMALS = {
    Wall.Y0: Vec3(0.0, 1.0, 0.0),
    Wall.Y_MAX: Vec3(0.0, -1.0, 0.0),
    Wall.X0: Vec3(1.0, 0.0, 0.0),
    Wall.X_MAX: Vec3(-1.0, 0.0, 0.0),
}


@dataclass(frozen=True)
class IrsPanel:
    """Rectangular grid of reflecting elements mounted on one wall.

    ``counts`` is (elements per row, number of rows); rows are horizontal.
    """

    wall: Wall = Wall.Y0
    counts: tuple[int, int] = (12, 12)
    spacing: tuple[float, float] = (0.3, 0.3)
    reflectivity: float = 1.0
    center: Vec3 = Vec3(2.5, 0.0, 1.5)

    def __post_init__(self):
        object.__setattr__(self, "wall", Wall(self.wall))
        object.__setattr__(self, "center", vec3(self.center))
        nx, ny = (int(c) for c in self.counts)
        object.__setattr__(self, "counts", (nx, ny))
        object.__setattr__(self, "spacing", tuple(float(d) for d in self.spacing))
        if nx < 0 or ny < 0 or (nx == 0) != (ny == 0):
            raise GeometryError(f"invalid element counts {self.counts}")
        if min(self.spacing) <= 0:
            raise GeometryError(f"element spacing must be positive, got {self.spacing}")
        if not 0 <= self.reflectivity <= 1:
            raise GeometryError(f"reflectivity must lie in [0, 1], got {self.reflectivity}")

    @property
    def n_elements(self) -> int:
        return self.counts[0] * self.counts[1]

    @property
    def normal(self) -> Vec3:
        return _WALL_NORMALS[self.wall]


@dataclass(frozen=True)
class Zone:
    label: ZoneLabel
    radius_threshold: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "label", ZoneLabel(self.label))
        if self.radius_threshold <= 0:
            raise GeometryError(f"zone radius must be > 0, got {self.radius_threshold}")


@dataclass(frozen=True)
class Scene:
    room: Room = field(default_factory=Room)
    led: Emitter = field(default_factory=Emitter)
    pd: Photodetector = field(default_factory=Photodetector)
    panel: IrsPanel | None = field(default_factory=IrsPanel)
    receiver_height: float = DEFAULT_RECEIVER_HEIGHT
    zone_radius: float = 1.0

    def __post_init__(self):
        if not 0 <= self.receiver_height < self.room.height:
            raise GeometryError(f"receiver height {self.receiver_height} outside the room")
        if self.zone_radius <= 0:
            raise GeometryError(f"zone radius must be > 0, got {self.zone_radius}")
        if not self.room.contains(self.led.position):
            raise GeometryError(f"LED at {self.led.position} lies outside the room")

    @property
    def n_elements(self) -> int:
        return 0 if self.panel is None else self.panel.n_elements

    def element_positions(self) -> np.ndarray:
        if self.panel is None:
            return np.zeros((0, 3))
        return element_positions(self.panel, self.room)

    def user(self, role, x: float, y: float) -> UserTerminal:
        p = Vec3(float(x), float(y), self.receiver_height)
        if not self.room.contains(p):
            raise GeometryError(f"user position {p} lies outside the room")
        return UserTerminal(role, p, self.pd)


def _wall_frame(panel: IrsPanel, room: Room):
    """Return (horizontal unit axis, wall width, index of the constant coordinate, its value)."""
    if panel.wall in (Wall.Y0, Wall.Y_MAX):
        const = 0.0 if panel.wall is Wall.Y0 else room.depth
        return np.array([1.0, 0.0, 0.0]), room.width, 1, const
    const = 0.0 if panel.wall is Wall.X0 else room.width
    return np.array([0.0, 1.0, 0.0]), room.depth, 0, const


def effective_spacing(panel: IrsPanel, room: Room) -> tuple[float, float]:
    """Horizontal and vertical element pitch after squeezing the rows to fit the wall."""
    dx, dy = panel.spacing
    ny = panel.counts[1]
    if ny > 1:
        dy = min(dy, (room.height - 2 * VERTICAL_MARGIN) / (ny - 1))
    return dx, dy


def element_positions(panel: IrsPanel, room: Room) -> np.ndarray:
    """Element centres as an (N, 3) array, row-major from the bottom row upwards.

    Within a row, elements run along increasing horizontal coordinate.
    """
    nx, ny = panel.counts
    if nx * ny == 0:
        return np.zeros((0, 3))
    axis, wall_width, k, const = _wall_frame(panel, room)
    c = panel.center.array()
    if abs(c[k] - const) > 1e-12:
        raise PanelFitError(f"panel center {panel.center} is not on wall {panel.wall.value}")
    dx, dy = effective_spacing(panel, room)

    h_off = (np.arange(nx) - (nx - 1) / 2) * dx
    v_off = (np.arange(ny) - (ny - 1) / 2) * dy
    h0 = float(c @ axis)
    if h0 + h_off[0] <= 0 or h0 + h_off[-1] >= wall_width:
        raise PanelFitError(f"panel is wider than wall {panel.wall.value}")
    if c[2] + v_off[0] <= 0 or c[2] + v_off[-1] >= room.height:
        raise PanelFitError("panel does not fit the wall height even with squeezed rows")

    pos = np.empty((ny, nx, 3))
    pos[:] = c
    pos += h_off[None, :, None] * axis
    pos[..., 2] = c[2] + v_off[:, None]
    pos[..., k] = const
    return pos.reshape(-1, 3)


def cos_angle(frm, to, normal) -> float:
    """Cosine between the direction frm -> to and ``normal``."""
    d = np.asarray(to, dtype=float) - np.asarray(frm, dtype=float)
    norm = np.linalg.norm(d)
    if norm == 0:
        raise DegenerateGeometryError(f"coincident points {frm!r}")
    return float(d @ np.asarray(normal, dtype=float) / norm)


def horizontal_distance(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def horizontal_distance_to_emitter(user: UserTerminal, led: Emitter) -> float:
    return horizontal_distance(user.position, led.position)


def classify_zone(position, led: Emitter, radius: float = 1.0) -> ZoneLabel:
    # strict inequality: the boundary circle counts as outer
    inside = horizontal_distance(position, led.position) < radius
    return ZoneLabel.INNER if inside else ZoneLabel.OUTER


def sample_position(room: Room, rng: np.random.Generator, *, height: float = DEFAULT_RECEIVER_HEIGHT,
                    zone: Zone | None = None, center=(2.5, 2.5)) -> Vec3:
    """Draw a uniform receiver position on the floor rectangle at ``height``.

    With a zone, the draw is restricted (by rejection) to the disc of
    ``zone.radius_threshold`` around ``center`` or to its complement.
    """
    cx, cy = center[0], center[1]
    if zone is None:
        return Vec3(rng.uniform(0, room.width), rng.uniform(0, room.depth), height)
    r = zone.radius_threshold
    if zone.label is ZoneLabel.INNER:
        lo_x, hi_x = max(0.0, cx - r), min(room.width, cx + r)
        lo_y, hi_y = max(0.0, cy - r), min(room.depth, cy + r)
    else:
        lo_x, hi_x, lo_y, hi_y = 0.0, room.width, 0.0, room.depth
    for _ in range(100_000):
        x, y = rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)
        inside = math.hypot(x - cx, y - cy) < r
        if inside == (zone.label is ZoneLabel.INNER):
            return Vec3(x, y, height)
    raise GeometryError(f"zone {zone} has (numerically) empty intersection with the floor")
