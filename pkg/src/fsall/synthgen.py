"""Deterministic procedural face renderer with ground-truth factors.

Faces are anti-aliased parametric 2D shapes (ellipse head, ellipse eyes,
parabolic-band mouth, triangle nose, hair cap band) so that landmarks and the
face mask are closed-form functions of the generative factors.  Rendering is a
pure function of (factors, resolution): identical inputs give bit-identical
output.
"""

from __future__ import annotations

import colorsys
import csv
import os
from dataclasses import dataclass, fields

import numpy as np

from .config import ConfigError

# factor name -> (low, high) for continuous fields, or tuple of levels for discrete
FACTOR_RANGES = {
    "face_aspect": (0.7, 1.3),
    "eye_spacing": (0.2, 0.4),
    "eye_hue": (0.0, 1.0),
    "skin_tone": (0.0, 1.0),
    "nose_scale": (0.5, 1.5),
    "beard": (0, 1),
    "yaw": (-0.5, 0.5),
    "tilt": (-0.3, 0.3),
    "mouth_curve": (-1.0, 1.0),
    "mouth_open": (0.0, 1.0),
    "lighting": (0.5, 1.5),
    "hair_hue": (0.0, 1.0),
    "bg_hue": (0.0, 1.0),
    "bg_pattern": (0, 1, 2),
}

IDENTITY_FIELDS = ("face_aspect", "eye_spacing", "eye_hue", "skin_tone", "nose_scale", "beard")
POSE_FIELDS = ("yaw", "tilt")
EXPRESSION_FIELDS = ("mouth_curve", "mouth_open")
APPEARANCE_FIELDS = ("lighting", "hair_hue")
BACKGROUND_FIELDS = ("bg_hue", "bg_pattern")

LANDMARK_NAMES = ("left_eye", "right_eye", "nose_tip", "left_mouth", "right_mouth")

# head geometry in normalized image coordinates ([0,1] per side, y grows down)
_CX, _CY = 0.5, 0.52
_AY = 0.38            # vertical semi-axis of the head ellipse
_AX_BASE = 0.24       # horizontal semi-axis at face_aspect = 1
_K_SHEAR = 0.35       # yaw: horizontal shear per unit (y - cy)
_K_FEAT = 0.35        # yaw: common horizontal feature offset (fraction of ax)
_K_TILT = 0.18        # tilt: common vertical feature offset (fraction of ay)
_HAIR_LINE = -0.55    # hair cap covers ellipse rows above cy + _HAIR_LINE*ay
_BEARD_LINE = 0.60    # beard band covers ellipse rows below cy + _BEARD_LINE*ay
_SUPERSAMPLE = 2


@dataclass(frozen=True)
class FactorVector:
    """Ground-truth generative factors of one synthetic face."""

    face_aspect: float
    eye_spacing: float
    eye_hue: float
    skin_tone: float
    nose_scale: float
    beard: int
    yaw: float
    tilt: float
    mouth_curve: float
    mouth_open: float
    lighting: float
    hair_hue: float
    bg_hue: float
    bg_pattern: int

    def validate(self):
        for f in fields(self):
            value = getattr(self, f.name)
            rng = FACTOR_RANGES[f.name]
            if f.name in ("beard", "bg_pattern"):
                if value not in rng:
                    raise ValueError(f"{f.name}={value} not in {rng}")
            elif not rng[0] <= value <= rng[1]:
                raise ValueError(f"{f.name}={value} outside [{rng[0]}, {rng[1]}]")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)

    def group(self, names) -> np.ndarray:
        return np.array([getattr(self, n) for n in names], dtype=np.float64)

    def identity(self) -> np.ndarray:
        return self.group(IDENTITY_FIELDS)

    def pose(self) -> np.ndarray:
        return self.group(POSE_FIELDS)

    def expression(self) -> np.ndarray:
        return self.group(EXPRESSION_FIELDS)

    def replace(self, **kwargs) -> "FactorVector":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(kwargs)
        return FactorVector(**values)


FACTOR_FIELDS = tuple(f.name for f in fields(FactorVector))


@dataclass
class FaceSample:
    """One rendered face: image in [0,1], binary mask, 5 landmarks, factors."""

    image: np.ndarray      # (R, R, 3) float32 in [0, 1]
    mask: np.ndarray       # (R, R) uint8 in {0, 1}
    landmarks: np.ndarray  # (5, 2) float64, (x, y) pixel coordinates
    factors: FactorVector

    @property
    def resolution(self) -> int:
        return self.image.shape[0]


def sample_factors(seed: int) -> FactorVector:
    """Draw every factor uniformly within its declared range, deterministically."""
    rng = np.random.default_rng(seed)
    values = {}
    for name in FACTOR_FIELDS:
        if name in ("beard", "bg_pattern"):
            values[name] = int(rng.integers(0, len(FACTOR_RANGES[name])))
        else:
            lo, hi = FACTOR_RANGES[name]
            values[name] = float(rng.uniform(lo, hi))
    return FactorVector(**values)


def _hsv(h, s, v):
    return np.array(colorsys.hsv_to_rgb(h % 1.0, s, v), dtype=np.float64)


def _skin_color(tone):
    dark = np.array([0.30, 0.20, 0.13])
    light = np.array([0.65, 0.52, 0.42])
    return dark + tone * (light - dark)


def _landmark_points(f: FactorVector) -> np.ndarray:
    """Closed-form landmark positions in normalized coordinates, order per LANDMARK_NAMES."""
    ax = _AX_BASE * f.face_aspect
    fx = f.yaw * _K_FEAT * ax
    fy = f.tilt * _K_TILT * _AY

    def place(x0, y0):
        # features shift by (fx, fy); the whole scene shears horizontally with yaw
        y = y0 + fy
        x = x0 + fx + f.yaw * _K_SHEAR * (y - _CY)
        return (x, y)

    eye_y = _CY - 0.20 * _AY
    nose_tip_y = _CY + 0.16 * _AY
    mouth_y = _CY + 0.34 * _AY
    pts = [
        place(_CX - f.eye_spacing * ax, eye_y),
        place(_CX + f.eye_spacing * ax, eye_y),
        place(_CX, nose_tip_y),
        place(_CX - 0.30 * ax, mouth_y),
        place(_CX + 0.30 * ax, mouth_y),
    ]
    return np.array(pts, dtype=np.float64)


def render_face(factors: FactorVector, resolution: int) -> FaceSample:
    """Render one face; deterministic, anti-aliased by 2x supersampling."""
    r = int(resolution)
    if r < 32 or (r & (r - 1)) != 0:
        raise ConfigError(f"resolution must be a power of two >= 32, got {resolution}")
    factors.validate()
    f = factors

    n = _SUPERSAMPLE * r
    coords = (np.arange(n, dtype=np.float64) + 0.5) / n
    xg, yg = np.meshgrid(coords, coords)  # x = column, y = row

    ax = _AX_BASE * f.face_aspect
    fx = f.yaw * _K_FEAT * ax
    fy = f.tilt * _K_TILT * _AY

    # undo the global yaw shear, then test shapes in face coordinates
    xf = xg - f.yaw * _K_SHEAR * (yg - _CY)
    xff = xf - fx          # feature-local coordinates
    yff = yg - fy

    head = ((xf - _CX) / ax) ** 2 + ((yg - _CY) / _AY) ** 2 <= 1.0
    hair = head & (yg < _CY + _HAIR_LINE * _AY)
    beard = head & (yg > _CY + _BEARD_LINE * _AY) if f.beard else np.zeros_like(head)

    def ellipse(cx, cy, rx, ry):
        return ((xff - cx) / rx) ** 2 + ((yff - cy) / ry) ** 2 <= 1.0

    eye_y = _CY - 0.20 * _AY
    sclera = np.zeros_like(head)
    iris = np.zeros_like(head)
    for sgn in (-1.0, 1.0):
        ex = _CX + sgn * f.eye_spacing * ax
        sclera |= ellipse(ex, eye_y, 0.13 * ax, 0.085 * _AY)
        iris |= ellipse(ex, eye_y, 0.065 * ax, 0.05 * _AY)

    # nose: downward-widening triangle, apex band at the bridge
    tip_y = _CY + 0.16 * _AY
    top_y = tip_y - 0.18 * _AY * f.nose_scale
    wn = 0.10 * ax * f.nose_scale
    t = (yff - top_y) / (tip_y - top_y)
    nose = (t >= 0.0) & (t <= 1.0) & (np.abs(xff - _CX) <= wn * t)

    # mouth: parabolic centerline band
    mouth_y = _CY + 0.34 * _AY
    wm = 0.30 * ax
    u = (xff - _CX) / wm
    inside_u = np.abs(u) <= 1.0
    env = np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    center = mouth_y + f.mouth_curve * 0.06 * _AY * (1.0 - u * u)
    half_th = (0.025 + 0.065 * f.mouth_open) * _AY * env
    mouth = inside_u & (np.abs(yff - center) <= half_th)

    skin = _skin_color(f.skin_tone)
    bg = _hsv(f.bg_hue, 0.45, 0.75)
    img = np.empty((n, n, 3), dtype=np.float64)
    img[:] = bg
    if f.bg_pattern:
        band = r // 8
        axis = yg if f.bg_pattern == 1 else xg
        stripe = (np.floor(axis * r / band).astype(np.int64) % 2) == 1
        img[stripe] = np.clip(bg + 0.08, 0.0, 1.0)

    def paint(region, color):
        img[region] = color

    paint(head, skin)
    paint(hair, _hsv(f.hair_hue, 0.70, 0.35))
    if f.beard:
        paint(beard, np.array([0.22, 0.16, 0.12]))
    paint(sclera & head, np.array([0.92, 0.92, 0.90]))
    paint(iris & head, _hsv(f.eye_hue, 0.80, 0.55))
    paint(nose & head, skin * 0.82)
    paint(mouth & head, np.array([0.55, 0.15, 0.18]))

    img = np.clip(img * f.lighting, 0.0, 1.0)
    s = _SUPERSAMPLE
    image = img.reshape(r, s, r, s, 3).mean(axis=(1, 3)).astype(np.float32)

    face_region = (head & ~hair).astype(np.float64)
    coverage = face_region.reshape(r, s, r, s).mean(axis=(1, 3))
    mask = (coverage >= 0.5).astype(np.uint8)

    landmarks = _landmark_points(f) * r
    return FaceSample(image=image, mask=mask, landmarks=landmarks, factors=f)


def make_pairs(count: int, seed: int, resolution: int = 64):
    """Independent (source, target) sample pairs; identity-group collisions are redrawn."""
    if count < 1:
        raise ConfigError(f"pair count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(count):
        src = render_face(sample_factors(int(rng.integers(0, 2**63 - 1))), resolution)
        while True:
            tgt = render_face(sample_factors(int(rng.integers(0, 2**63 - 1))), resolution)
            if not np.array_equal(src.factors.identity(), tgt.factors.identity()):
                break
        pairs.append((src, tgt))
    return pairs


def generate_samples(count: int, seed: int, resolution: int = 64):
    """Render `count` faces from factor seeds derived from `seed`."""
    if count < 1:
        raise ConfigError(f"sample count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2**63 - 1, size=count)
    return [render_face(sample_factors(int(s)), resolution) for s in seeds]


def _csv_header():
    names = list(FACTOR_FIELDS)
    for lm in LANDMARK_NAMES:
        names += [f"lm_{lm}_x", f"lm_{lm}_y"]
    return names


def write_dataset(out_dir, samples) -> None:
    """Write images/, masks/ (8-bit PNG) and an index-aligned factors.csv."""
    from PIL import Image

    img_dir = os.path.join(out_dir, "images")
    mask_dir = os.path.join(out_dir, "masks")
    os.makedirs(img_dir, exist_ok=True)
    os.makedirs(mask_dir, exist_ok=True)
    rows = []
    for i, sample in enumerate(samples):
        name = f"{i:06d}.png"
        rgb = np.clip(np.rint(sample.image * 255.0), 0, 255).astype(np.uint8)
        Image.fromarray(rgb, mode="RGB").save(os.path.join(img_dir, name))
        Image.fromarray(sample.mask * 255, mode="L").save(os.path.join(mask_dir, name))
        row = [getattr(sample.factors, n) for n in FACTOR_FIELDS]
        row += [c for pt in sample.landmarks for c in pt]
        rows.append(row)
    with open(os.path.join(out_dir, "factors.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_csv_header())
        writer.writerows(rows)


def load_dataset(data_dir):
    """Load a written dataset back into FaceSample objects (8-bit quantized images)."""
    from PIL import Image

    csv_path = os.path.join(data_dir, "factors.csv")
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != _csv_header():
            raise ValueError(f"unexpected factors.csv header in {data_dir}")
        rows = list(reader)
    samples = []
    for i, row in enumerate(rows):
        name = f"{i:06d}.png"
        image = np.asarray(
            Image.open(os.path.join(data_dir, "images", name)).convert("RGB"),
            dtype=np.float32) / 255.0
        mask = (np.asarray(
            Image.open(os.path.join(data_dir, "masks", name)).convert("L")) >= 128
        ).astype(np.uint8)
        values = {}
        for name_, value in zip(FACTOR_FIELDS, row):
            values[name_] = int(float(value)) if name_ in ("beard", "bg_pattern") else float(value)
        lm = np.array([float(v) for v in row[len(FACTOR_FIELDS):]], dtype=np.float64)
        samples.append(FaceSample(
            image=image, mask=mask, landmarks=lm.reshape(5, 2),
            factors=FactorVector(**values)))
    return samples
