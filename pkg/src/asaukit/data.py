"""Seeded synthetic datasets plus the IDX and binary container loaders.

All generators draw exclusively from the SplitMix64 stream, so the same
(seed, arguments) pair reproduces a dataset bit-for-bit on any platform.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .rng import SplitMix64
from .tensor import Tensor

DATA_MAGIC = b"ASAUKIT-DATA v1\n"

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    """Malformed IDX file (bad magic, truncation, or count mismatch)."""


@dataclass
class LabeledSet:
    """Features (N x D or N x C x H x W) with integer class labels."""

    features: Tensor
    labels: list[int]
    k: int

    def __post_init__(self):
        # split views may hold fewer samples than classes; generators and
        # loaders enforce N >= k on full datasets
        n = self.features.shape[0]
        if len(self.labels) != n:
            raise ValueError(f"{n} feature rows but {len(self.labels)} labels")
        if any(not (0 <= y < self.k) for y in self.labels):
            raise ValueError(f"labels must lie in [0, {self.k})")

    def __len__(self):
        return self.features.shape[0]

    def take(self, indices) -> "LabeledSet":
        arr = self.features.array()[list(indices)]
        return LabeledSet(Tensor.from_array(arr), [self.labels[i] for i in indices], self.k)

    def batch(self, indices) -> tuple[Tensor, list[int]]:
        arr = self.features.array()[list(indices)]
        return Tensor.from_array(arr), [self.labels[i] for i in indices]


@dataclass
class MaskSet:
    """Grayscale images (N x 1 x H x W) with binary masks of the same shape."""

    images: Tensor
    masks: Tensor

    def __post_init__(self):
        if self.images.shape != self.masks.shape:
            raise ValueError(f"images {self.images.shape} vs masks {self.masks.shape}")
        m = self.masks.array()
        if not np.isin(m, (0.0, 1.0)).all():
            raise ValueError("masks must be strictly {0, 1}")

    def __len__(self):
        return self.images.shape[0]

    def take(self, indices) -> "MaskSet":
        idx = list(indices)
        return MaskSet(Tensor.from_array(self.images.array()[idx]),
                       Tensor.from_array(self.masks.array()[idx]))

    def batch(self, indices) -> tuple[Tensor, Tensor]:
        idx = list(indices)
        return (Tensor.from_array(self.images.array()[idx]),
                Tensor.from_array(self.masks.array()[idx]))


@dataclass
class SplitSpec:
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0

    def __post_init__(self):
        if any(f <= 0 for f in self.fractions) or abs(sum(self.fractions) - 1.0) > 1e-12:
            raise ValueError(f"fractions must be positive and sum to 1, got {self.fractions}")


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def gen_two_moons(n: int, noise_sd: float, seed: int) -> LabeledSet:
    """Two interleaved half-circles, n/2 points each, Gaussian jitter.

    Class 0 sits on the upper unit half-circle, class 1 on a lower
    half-circle shifted to interleave with it.
    """
    if n % 2:
        raise ValueError(f"n must be even, got {n}")
    if noise_sd < 0:
        raise ValueError("noise_sd must be nonnegative")
    rng = SplitMix64(seed)
    feats = np.empty((n, 2))
    labels = []
    for i in range(n):
        label = i % 2
        theta = rng.uniform(0.0, math.pi)
        if label == 0:
            px, py = math.cos(theta), math.sin(theta)
        else:
            px, py = 1.0 - math.cos(theta), 0.5 - math.sin(theta)
        if noise_sd > 0:
            px += rng.normal(0.0, noise_sd)
            py += rng.normal(0.0, noise_sd)
        feats[i] = (px, py)
        labels.append(label)
    return LabeledSet(Tensor.from_array(feats), labels, 2)


def gen_blobs(n: int, k: int, spread: float, seed: int) -> LabeledSet:
    """k isotropic Gaussian clusters at distinct seeded centers, balanced labels."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise ValueError("n must be >= k")
    rng = SplitMix64(seed)
    centers = []
    while len(centers) < k:
        c = (rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0))
        if all((c[0] - o[0]) ** 2 + (c[1] - o[1]) ** 2 > 1.0 for o in centers):
            centers.append(c)
    feats = np.empty((n, 2))
    labels = []
    for i in range(n):
        label = i % k
        cx, cy = centers[label]
        feats[i] = (cx + spread * rng.normal(), cy + spread * rng.normal())
        labels.append(label)
    return LabeledSet(Tensor.from_array(feats), labels, k)


def _ellipse_mask(h, w, cy, cx, ry, rx):
    yy, xx = np.mgrid[0:h, 0:w]
    return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0


def _rect_mask(h, w, y0, x0, y1, x1):
    m = np.zeros((h, w), dtype=bool)
    m[y0:y1, x0:x1] = True
    return m


def gen_shapes_seg(n: int, h: int, w: int, seed: int) -> MaskSet:
    """One bright ellipse or rectangle per image on a dim noisy background.

    Shape parameters are rejection-resampled until the foreground covers
    between 5% and 60% of the image.
    """
    if h < 16 or w < 16 or h % 2 or w % 2:
        raise ValueError(f"h and w must be even and >= 16, got ({h}, {w})")
    rng = SplitMix64(seed)
    images = np.empty((n, 1, h, w))
    masks = np.empty((n, 1, h, w))
    for i in range(n):
        while True:
            if rng.randint(2) == 0:
                cy = rng.uniform(0.25 * h, 0.75 * h)
                cx = rng.uniform(0.25 * w, 0.75 * w)
                ry = rng.uniform(0.1 * h, 0.4 * h)
                rx = rng.uniform(0.1 * w, 0.4 * w)
                mask = _ellipse_mask(h, w, cy, cx, ry, rx)
            else:
                y0 = int(rng.uniform(0, 0.6 * h))
                x0 = int(rng.uniform(0, 0.6 * w))
                y1 = y0 + int(rng.uniform(0.2 * h, 0.5 * h))
                x1 = x0 + int(rng.uniform(0.2 * w, 0.5 * w))
                mask = _rect_mask(h, w, y0, x0, min(y1, h), min(x1, w))
            frac = mask.mean()
            if 0.05 <= frac <= 0.6:
                break
        fg = rng.uniform(0.6, 0.9)
        bg = rng.uniform(0.1, 0.4)
        img = np.empty((h, w))
        for r in range(h):
            for c in range(w):
                level = fg if mask[r, c] else bg
                img[r, c] = level + 0.05 * rng.normal()
        images[i, 0] = np.clip(img, 0.0, 1.0)
        masks[i, 0] = mask.astype(np.float64)
    return MaskSet(Tensor.from_array(images), Tensor.from_array(masks))


def split_dataset(dataset, spec: SplitSpec):
    """Seeded permutation, then contiguous slices: floor train, floor val, rest test."""
    n = len(dataset)
    if n < 10:
        raise ValueError(f"dataset of size {n} is too small to split")
    order = list(range(n))
    SplitMix64(spec.seed).shuffle(order)
    n_train = int(math.floor(spec.fractions[0] * n))
    n_val = int(math.floor(spec.fractions[1] * n))
    train = dataset.take(order[:n_train])
    val = dataset.take(order[n_train:n_train + n_val])
    test = dataset.take(order[n_train + n_val:])
    return train, val, test


# ---------------------------------------------------------------------------
# IDX files (big-endian magic + dims, raw unsigned bytes)
# ---------------------------------------------------------------------------


def _read_exact(f, n: int, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise IdxFormatError(f"truncated IDX file: expected {n} more bytes for {what}")
    return buf


def load_idx(images_path, labels_path) -> LabeledSet:
    """Load an IDX image/label pair; pixels scaled to [0, 1]."""
    with open(images_path, "rb") as f:
        magic, count, rows, cols = struct.unpack(">IIII", _read_exact(f, 16, "image header"))
        if magic != IDX_IMAGES_MAGIC:
            raise IdxFormatError(
                f"bad image magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x}")
        raw = _read_exact(f, count * rows * cols, "image data")
    pixels = np.frombuffer(raw, dtype=np.uint8).astype(np.float64) / 255.0
    images = pixels.reshape(count, 1, rows, cols)
    with open(labels_path, "rb") as f:
        magic, lcount = struct.unpack(">II", _read_exact(f, 8, "label header"))
        if magic != IDX_LABELS_MAGIC:
            raise IdxFormatError(
                f"bad label magic 0x{magic:08x}, expected 0x{IDX_LABELS_MAGIC:08x}")
        raw = _read_exact(f, lcount, "label data")
    labels = list(np.frombuffer(raw, dtype=np.uint8))
    if lcount != count:
        raise IdxFormatError(f"count mismatch: {count} images but {lcount} labels")
    if not labels:
        raise IdxFormatError("IDX pair holds no samples")
    k = int(max(labels)) + 1
    return LabeledSet(Tensor.from_array(images), [int(y) for y in labels], k)


# ---------------------------------------------------------------------------
# binary container: magic line, record count, per record a header line
# (`name ndim d0 d1 ...`) followed by row-major little-endian float64 data
# ---------------------------------------------------------------------------


def save_container(records: dict[str, np.ndarray], path) -> None:
    with open(path, "wb") as f:
        f.write(DATA_MAGIC)
        f.write(f"{len(records)}\n".encode())
        for name, arr in records.items():
            arr = np.asarray(arr, dtype=np.float64)
            dims = " ".join(str(d) for d in arr.shape)
            f.write(f"{name} {arr.ndim} {dims}\n".encode())
            f.write(arr.astype("<f8").tobytes())


def load_container(path) -> dict[str, np.ndarray]:
    def read_line(f) -> str:
        out = bytearray()
        while (ch := f.read(1)) not in (b"", b"\n"):
            out += ch
        return out.decode()

    with open(path, "rb") as f:
        magic = f.read(len(DATA_MAGIC))
        if magic != DATA_MAGIC:
            raise ValueError(f"bad container magic {magic!r}")
        count = int(read_line(f))
        records = {}
        for _ in range(count):
            parts = read_line(f).split(" ")
            name, ndim = parts[0], int(parts[1])
            shape = tuple(int(d) for d in parts[2:2 + ndim])
            nbytes = 8 * int(np.prod(shape)) if shape else 8
            raw = f.read(nbytes)
            if len(raw) != nbytes:
                raise ValueError(f"truncated container record {name!r}")
            records[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    return records


def save_labeled_set(ds: LabeledSet, path) -> None:
    save_container({"features": ds.features.array(),
                    "labels": np.asarray(ds.labels, dtype=np.float64),
                    "k": np.asarray([ds.k], dtype=np.float64)}, path)


def load_labeled_set(path) -> LabeledSet:
    rec = load_container(path)
    return LabeledSet(Tensor.from_array(rec["features"]),
                      [int(v) for v in rec["labels"]], int(rec["k"][0]))


def save_mask_set(ds: MaskSet, path) -> None:
    save_container({"images": ds.images.array(), "masks": ds.masks.array()}, path)


def load_mask_set(path) -> MaskSet:
    rec = load_container(path)
    return MaskSet(Tensor.from_array(rec["images"]), Tensor.from_array(rec["masks"]))
