"""Image-space augmentations for grey-level line images.

Images are 2-D ``uint8`` arrays (rows x columns), dark ink on a white (255)
background. All transforms sample the source with bilinear interpolation and
fill uncovered pixels with white. Shear and rotation widen the canvas so no
ink is clipped; elastic and control-point warps keep the input size.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.interpolate import RBFInterpolator
from scipy.ndimage import gaussian_filter1d, map_coordinates

from .errors import InvalidInputError, InvalidParameterError

WHITE = 255

SHEAR_RANGE = (-0.6, 0.6)
ROTATION_RANGE = (-2.5, 2.5)
ELASTIC_SIGMAS = (3.0, 4.0)
ELASTIC_ALPHAS = (15.0, 20.0)
TRAIN_PROBABILITY = 0.5
KINDS = ("shear", "rotate", "elastic", "geometric")


def as_gray(img) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidInputError(f"expected a non-empty 2-D grey image, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if arr.min() < 0 or arr.max() > 255:
            raise InvalidInputError("pixel intensities must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def _sample(img: np.ndarray, rows, cols) -> np.ndarray:
    out = map_coordinates(img.astype(np.float64), [rows, cols], order=1, mode="constant", cval=WHITE)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


# ------------------------------------------------------------------- shear

def shear_point(x: float, y: float, k: float) -> tuple[float, float]:
    """Horizontal shear of a point, before the canvas offset."""
    return x + k * y, y


def shear_offset(height: int, k: float) -> float:
    """Column offset applied after the shear so every column index is >= 0."""
    return max(0.0, -k * (height - 1))


def shear(img, k: float) -> np.ndarray:
    """Map (x, y) to (x + k*y, y). Shearing about the vertical centre only
    changes a constant horizontal shift, which the widened canvas absorbs."""
    img = as_gray(img)
    if not math.isfinite(k):
        raise InvalidParameterError(f"shear factor must be finite, got {k}")
    h, w = img.shape
    extra = int(math.ceil(abs(k) * (h - 1) - 1e-9))
    off = shear_offset(h, k)
    ys, xs = np.mgrid[0:h, 0:w + extra].astype(np.float64)
    src_x = xs - off - k * ys
    return _sample(img, ys, src_x)


# ---------------------------------------------------------------- rotation

def rotate_point(dx: float, dy: float, theta_deg: float) -> tuple[float, float]:
    """Rotate a Cartesian offset (y pointing up) counter-clockwise."""
    t = math.radians(theta_deg)
    c, s = math.cos(t), math.sin(t)
    return c * dx - s * dy, s * dx + c * dy


def _rotated_size(n: int, extent: float) -> int:
    # keep the parity of the input so centres stay on the same pixel grid
    grow = int(math.ceil((extent - n) / 2.0 - 1e-9))
    return n + 2 * max(grow, 0)


def rotate(img, theta_deg: float) -> np.ndarray:
    """Counter-clockwise rotation about the image centre on an enlarged canvas."""
    img = as_gray(img)
    if not abs(theta_deg) <= 45.0:
        raise InvalidParameterError(f"rotation angle must be within +-45 degrees, got {theta_deg}")
    h, w = img.shape
    t = math.radians(theta_deg)
    c, s = math.cos(t), math.sin(t)
    hw, hh = (w - 1) / 2.0, (h - 1) / 2.0
    new_w = _rotated_size(w, 2 * (abs(c) * hw + abs(s) * hh) + 1)
    new_h = _rotated_size(h, 2 * (abs(s) * hw + abs(c) * hh) + 1)
    ncx, ncy = (new_w - 1) / 2.0, (new_h - 1) / 2.0
    ys, xs = np.mgrid[0:new_h, 0:new_w].astype(np.float64)
    u, v = xs - ncx, ncy - ys
    # inverse rotation back into the source frame
    su = c * u + s * v
    sv = -s * u + c * v
    return _sample(img, hh - sv, su + hw)


# ----------------------------------------------------------------- elastic

def elastic_displacement(shape, sigma: float, alpha: float, seed) -> tuple[np.ndarray, np.ndarray]:
    """Column and row displacement fields: uniform noise in [-1, 1], two
    1-D Gaussian passes of std ``sigma``, scaled by ``alpha``."""
    if not sigma > 0:
        raise InvalidParameterError(f"sigma must be > 0, got {sigma}")
    if not alpha >= 0:
        raise InvalidParameterError(f"alpha must be >= 0, got {alpha}")
    rng = np.random.default_rng(seed)
    fields = []
    for _ in range(2):
        f = rng.uniform(-1.0, 1.0, size=shape)
        f = gaussian_filter1d(f, sigma, axis=0, mode="reflect")
        f = gaussian_filter1d(f, sigma, axis=1, mode="reflect")
        fields.append(f * alpha)
    return fields[0], fields[1]


def elastic(img, sigma: float, alpha: float, seed) -> np.ndarray:
    img = as_gray(img)
    dx, dy = elastic_displacement(img.shape, sigma, alpha, seed)
    h, w = img.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    return _sample(img, ys + dy, xs + dx)


# --------------------------------------------------------------- geometric

def warp_field(shape, control_points, displacements) -> tuple[np.ndarray, np.ndarray]:
    """Backward sampling offsets (columns, rows) of the control-point warp.

    A thin-plate spline is fitted on the *moved* points so that the output
    pixel at ``point + displacement`` samples the input exactly at
    ``point``.
    """
    pts = np.asarray(control_points, dtype=np.float64).reshape(-1, 2)
    disp = np.asarray(displacements, dtype=np.float64).reshape(-1, 2)
    if len(pts) < 3:
        raise InvalidParameterError(f"need at least 3 control points, got {len(pts)}")
    if disp.shape != pts.shape:
        raise InvalidParameterError("control_points and displacements differ in length")
    h, w = shape
    if not disp.any():
        return np.zeros(shape), np.zeros(shape)
    rbf = RBFInterpolator(pts + disp, -disp, kernel="thin_plate_spline", degree=1)
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    off = rbf(np.column_stack([xs.ravel(), ys.ravel()]))
    return off[:, 0].reshape(shape), off[:, 1].reshape(shape)


def geometric_warp(img, control_points, displacements) -> np.ndarray:
    """Move control points (x, y) by displacements (dx, dy) and interpolate
    the rest of the image smoothly."""
    img = as_gray(img)
    ox, oy = warp_field(img.shape, control_points, displacements)
    h, w = img.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    return _sample(img, ys + oy, xs + ox)


def border_control_points(shape, segments: int = 4) -> np.ndarray:
    """Evenly spaced points along the top and bottom edges."""
    h, w = shape
    xs = np.linspace(0, w - 1, segments + 1)
    return np.concatenate([np.column_stack([xs, np.zeros_like(xs)]),
                           np.column_stack([xs, np.full_like(xs, h - 1)])])


def random_geometric(shape, rng: np.random.Generator, segments: int = 4):
    pts = border_control_points(shape, segments)
    h, w = shape
    limit = max(1.0, min(h, w / segments) / 4.0)
    disp = rng.uniform(-limit, limit, size=pts.shape)
    return pts, disp


# ------------------------------------------------------------------- specs

@dataclass
class TransformSpec:
    kind: str
    k: float | None = None
    theta_deg: float | None = None
    sigma: float | None = None
    alpha: float | None = None
    control_points: list | None = None
    displacements: list | None = None
    seed: int | None = None

    _FIELDS = {
        "shear": ("k",),
        "rotate": ("theta_deg",),
        "elastic": ("sigma", "alpha", "seed"),
        "geometric": ("control_points", "displacements"),
    }

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown transform kind {self.kind!r}")
        needed = self._FIELDS[self.kind]
        for name in ("k", "theta_deg", "sigma", "alpha", "control_points", "displacements", "seed"):
            present = getattr(self, name) is not None
            if present != (name in needed):
                raise InvalidParameterError(
                    f"{self.kind} transform {'needs' if name in needed else 'does not take'} {name!r}"
                )

    def apply(self, img) -> np.ndarray:
        if self.kind == "shear":
            return shear(img, self.k)
        if self.kind == "rotate":
            return rotate(img, self.theta_deg)
        if self.kind == "elastic":
            return elastic(img, self.sigma, self.alpha, self.seed)
        return geometric_warp(img, self.control_points, self.displacements)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        for name in self._FIELDS[self.kind]:
            v = getattr(self, name)
            d[name] = np.asarray(v).tolist() if name in ("control_points", "displacements") else v
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TransformSpec":
        return cls(**d)

    def label(self) -> str:
        if self.kind == "shear":
            return f"shear{self.k:+.3f}"
        if self.kind == "rotate":
            return f"rotate{self.theta_deg:+.3f}"
        return self.kind


def sample_transform(shape, rng: np.random.Generator) -> TransformSpec:
    """One transform, kind uniform over the four, parameters uniform over
    the training ranges."""
    kind = KINDS[int(rng.integers(len(KINDS)))]
    if kind == "shear":
        return TransformSpec("shear", k=float(rng.uniform(*SHEAR_RANGE)))
    if kind == "rotate":
        return TransformSpec("rotate", theta_deg=float(rng.uniform(*ROTATION_RANGE)))
    if kind == "elastic":
        return TransformSpec(
            "elastic",
            sigma=float(rng.choice(ELASTIC_SIGMAS)),
            alpha=float(rng.choice(ELASTIC_ALPHAS)),
            seed=int(rng.integers(2**31)),
        )
    pts, disp = random_geometric(shape, rng)
    return TransformSpec("geometric", control_points=pts.tolist(), displacements=disp.tolist())


def train_sampler(img, rng: np.random.Generator) -> tuple[np.ndarray, TransformSpec | None]:
    """With probability 0.5 return the image untouched (spec ``None``),
    otherwise apply exactly one randomly drawn transform."""
    img = as_gray(img)
    if rng.random() < TRAIN_PROBABILITY:
        return img.copy(), None
    spec = sample_transform(img.shape, rng)
    return spec.apply(img), spec


def tta_specs(n_per_kind: int = 8) -> list[TransformSpec]:
    """Shear factors and rotation angles evenly spaced over the training
    ranges with zero left out: 8 + 8 by default."""
    if n_per_kind % 2:
        raise InvalidParameterError("n_per_kind must be even to stay symmetric about zero")
    ks = np.linspace(SHEAR_RANGE[0], SHEAR_RANGE[1], n_per_kind + 1)
    ts = np.linspace(ROTATION_RANGE[0], ROTATION_RANGE[1], n_per_kind + 1)
    mid = n_per_kind // 2
    ks = np.delete(ks, mid)
    ts = np.delete(ts, mid)
    specs = [TransformSpec("shear", k=round(float(k), 12)) for k in ks]
    specs += [TransformSpec("rotate", theta_deg=round(float(t), 12)) for t in ts]
    return specs


def tta_grid(img) -> list[tuple[TransformSpec, np.ndarray]]:
    img = as_gray(img)
    return [(spec, spec.apply(img)) for spec in tta_specs()]


# --------------------------------------------------------------------- I/O

IMAGE_SUFFIXES = (".png", ".pgm")


def read_image(path: str | os.PathLike) -> np.ndarray:
    with Image.open(path) as im:
        return np.array(im.convert("L"))


def write_image(path: str | os.PathLike, img) -> None:
    """PNG or binary PGM (P5), chosen by suffix."""
    path = Path(path)
    fmt = {".png": "PNG", ".pgm": "PPM"}.get(path.suffix.lower())
    if fmt is None:
        raise InvalidInputError(f"unsupported image suffix {path.suffix!r}")
    Image.fromarray(as_gray(img)).save(path, format=fmt)


def write_sidecar(image_path: str | os.PathLike, source: str, spec: TransformSpec | None, **extra) -> Path:
    side = Path(image_path).with_suffix(".json")
    doc = {
        "schema_version": 1,
        "source": source,
        "transforms": [] if spec is None else [spec.to_dict()],
        **extra,
    }
    side.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return side
