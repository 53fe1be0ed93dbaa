"""IDX image ingestion and conversion to pixel-grid measures.

Digit images become discrete measures on the unit square: pixel centers are
the atoms, normalized intensities the weights. The barycenter support for
image runs is the full pixel grid, so every node shares the same cost
geometry regardless of which pixels its own image lights up.

A synthetic generator produces deterministic digit-like IDX payloads so the
ingestion path and image experiments run without any external download.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .rng import Purpose, stream
from .transport import DiscreteMeasure, SupportGrid

__all__ = [
    "IdxFormatError",
    "IdxImages",
    "parse_idx_images",
    "serialize_idx_images",
    "parse_idx_labels",
    "serialize_idx_labels",
    "pixel_grid",
    "image_to_measure",
    "synthetic_digit_idx",
    "write_manifest",
    "read_manifest",
]

_IMAGES_MAGIC = 0x00000803
_LABELS_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    """Malformed IDX byte stream."""


@dataclass(frozen=True)
class IdxImages:
    """Decoded IDX image file.

    Attributes:
        pixels: (count, rows, cols) array of 8-bit intensities.
    """

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim != 3:
            raise ValueError(f"pixels must be (count, rows, cols), got shape {px.shape}")
        object.__setattr__(self, "pixels", px)

    @property
    def count(self) -> int:
        return self.pixels.shape[0]

    @property
    def rows(self) -> int:
        return self.pixels.shape[1]

    @property
    def cols(self) -> int:
        return self.pixels.shape[2]


def parse_idx_images(data: bytes) -> IdxImages:
    """Decode big-endian IDX: magic, count, rows, cols, then raw pixels."""
    if len(data) < 16:
        raise IdxFormatError(f"image header needs 16 bytes, got {len(data)}")
    magic, count, rows, cols = struct.unpack(">IIII", data[:16])
    if magic != _IMAGES_MAGIC:
        raise IdxFormatError(
            f"bad image magic 0x{magic:08x}, expected 0x{_IMAGES_MAGIC:08x}"
        )
    need = count * rows * cols
    payload = data[16:]
    if len(payload) != need:
        raise IdxFormatError(f"expected {need} pixel bytes, got {len(payload)}")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(count, rows, cols)
    return IdxImages(pixels=pixels)


def serialize_idx_images(images: IdxImages) -> bytes:
    header = struct.pack(">IIII", _IMAGES_MAGIC, images.count, images.rows, images.cols)
    return header + images.pixels.tobytes()


def parse_idx_labels(data: bytes) -> np.ndarray:
    """Decode big-endian IDX labels: magic, count, then raw bytes."""
    if len(data) < 8:
        raise IdxFormatError(f"label header needs 8 bytes, got {len(data)}")
    magic, count = struct.unpack(">II", data[:8])
    if magic != _LABELS_MAGIC:
        raise IdxFormatError(
            f"bad label magic 0x{magic:08x}, expected 0x{_LABELS_MAGIC:08x}"
        )
    payload = data[8:]
    if len(payload) != count:
        raise IdxFormatError(f"expected {count} label bytes, got {len(payload)}")
    return np.frombuffer(payload, dtype=np.uint8).copy()


def serialize_idx_labels(labels: np.ndarray) -> bytes:
    labels = np.asarray(labels, dtype=np.uint8)
    return struct.pack(">II", _LABELS_MAGIC, len(labels)) + labels.tobytes()


def pixel_grid(rows: int, cols: int) -> SupportGrid:
    """Pixel centers scaled to the unit square, row-major order."""
    ys = (np.arange(rows) + 0.5) / rows
    xs = (np.arange(cols) + 0.5) / cols
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return SupportGrid(points=np.column_stack([xx.ravel(), yy.ravel()]))


def image_to_measure(image: np.ndarray, prune_zeros: bool = True) -> DiscreteMeasure:
    """Normalize intensities into a measure on pixel centers.

    Zero-intensity atoms are pruned by default; an all-zero image has no
    measure and is rejected.
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {image.shape}")
    total = image.sum()
    if total <= 0:
        raise ValueError("image has no positive intensity, cannot normalize")
    grid = pixel_grid(*image.shape)
    weights = image.ravel() / total
    if prune_zeros:
        keep = weights > 0
        return DiscreteMeasure(atoms=grid.points[keep], weights=weights[keep])
    return DiscreteMeasure(atoms=grid.points, weights=weights)


# 3x5 digit glyphs, upscaled with jitter by the synthetic generator
_GLYPHS = {
    0: ["111", "101", "101", "101", "111"],
    1: ["010", "110", "010", "010", "111"],
    2: ["111", "001", "111", "100", "111"],
    3: ["111", "001", "111", "001", "111"],
    4: ["101", "101", "111", "001", "001"],
    5: ["111", "100", "111", "001", "111"],
    6: ["111", "100", "111", "101", "111"],
    7: ["111", "001", "010", "010", "010"],
    8: ["111", "101", "111", "101", "111"],
    9: ["111", "101", "111", "001", "111"],
}


def synthetic_digit_idx(
    count: int, seed: int, digits=None, rows: int = 28, cols: int = 28
) -> tuple:
    """Deterministic digit-like IDX payloads: (image bytes, label bytes).

    Each image renders a block-scaled glyph with a seeded position jitter
    and intensity noise, enough structure for ingestion and consensus tests
    without any external data.
    """
    if count < 1:
        raise ValueError(f"need at least one image, got {count}")
    digits = list(range(10)) if digits is None else list(digits)
    rng = stream(seed, Purpose.PRESET)
    labels = np.array([digits[int(rng.integers(len(digits)))] for _ in range(count)])
    images = np.zeros((count, rows, cols), dtype=np.uint8)
    cell_r, cell_c = (rows - 8) // 5, (cols - 8) // 3
    if cell_r < 1 or cell_c < 1:
        raise ValueError(f"canvas {rows}x{cols} too small for a glyph plus jitter")
    for idx in range(count):
        glyph = _GLYPHS[int(labels[idx])]
        dy, dx = int(rng.integers(-2, 3)), int(rng.integers(-2, 3))
        canvas = np.zeros((rows, cols))
        for gr, line in enumerate(glyph):
            for gc, ch in enumerate(line):
                if ch != "1":
                    continue
                r0 = 4 + gr * cell_r + dy
                c0 = 4 + gc * cell_c + dx
                canvas[r0 : r0 + cell_r, c0 : c0 + cell_c] = 1.0
        noise = rng.uniform(0.6, 1.0, size=(rows, cols))
        images[idx] = np.clip(canvas * noise * 255.0, 0, 255).astype(np.uint8)
    return (
        serialize_idx_images(IdxImages(pixels=images)),
        serialize_idx_labels(labels.astype(np.uint8)),
    )


def write_manifest(path, measures, digit: int, rows: int, cols: int) -> None:
    """Store selected per-node measures as JSON next to their grid shape."""
    payload = {
        "digit": digit,
        "rows": rows,
        "cols": cols,
        "measures": [
            {
                "atoms": np.asarray(mu.atoms).tolist(),
                "weights": np.asarray(mu.weights).tolist(),
            }
            for mu in measures
        ],
    }
    with open(path, "w") as f:
        json.dump(payload, f)


def read_manifest(path) -> tuple:
    """(grid, measures, digit) from a manifest written by write_manifest."""
    with open(path) as f:
        payload = json.load(f)
    for key in ("digit", "rows", "cols", "measures"):
        if key not in payload:
            raise ValueError(f"manifest is missing the {key!r} field")
    measures = tuple(
        DiscreteMeasure(
            atoms=np.asarray(entry["atoms"], dtype=float),
            weights=np.asarray(entry["weights"], dtype=float),
        )
        for entry in payload["measures"]
    )
    grid = pixel_grid(int(payload["rows"]), int(payload["cols"]))
    return grid, measures, int(payload["digit"])
