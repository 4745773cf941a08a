"""Image files, CSV output and the fundus-patch pipeline."""
from __future__ import annotations

import csv
import glob
import os

import numpy as np
from PIL import Image, UnidentifiedImageError

__all__ = [
    "UnsupportedImageError",
    "load_image",
    "save_image",
    "to_gray",
    "patch_starts",
    "extract_patches",
    "load_drive",
    "write_csv",
    "write_kernel_csv",
    "read_kernel_csv",
    "LUMA",
]

LUMA = (0.299, 0.587, 0.114)
_EIGHT_BIT_MODES = {"1", "L", "P", "RGB", "RGBA", "LA", "CMYK", "YCbCr"}


class UnsupportedImageError(ValueError):
    pass


def to_gray(rgb):
    rgb = np.asarray(rgb, dtype=float)
    return rgb[..., 0] * LUMA[0] + rgb[..., 1] * LUMA[1] + rgb[..., 2] * LUMA[2]


def load_image(path, gray: bool = True) -> np.ndarray:
    """Read an 8-bit image and rescale to [0, 1].

    Color images become grayscale with the luma weights unless
    ``gray=False``, in which case an ``(H, W, 3)`` array is returned.
    16-bit and floating point rasters are rejected.
    """
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode not in _EIGHT_BIT_MODES:
                raise UnsupportedImageError(f"{path}: unsupported pixel mode {im.mode!r} (only 8-bit images)")
            if im.mode in ("1", "L", "LA"):
                arr = np.asarray(im.convert("L"), dtype=float) / 255.0
                return arr if gray else np.repeat(arr[..., None], 3, axis=-1)
            arr = np.asarray(im.convert("RGB"), dtype=float) / 255.0
    except UnidentifiedImageError as exc:
        raise UnsupportedImageError(f"{path}: unrecognised or corrupt image") from exc
    except OSError as exc:
        raise UnsupportedImageError(f"{path}: cannot read image ({exc})") from exc
    return to_gray(arr) if gray else arr


def save_image(field, path):
    """Write a [0, 1] field as 8-bit grayscale (or RGB for ``(H, W, 3)``); values are clipped."""
    a = np.clip(np.asarray(field, dtype=float), 0.0, 1.0)
    q = np.rint(a * 255.0).astype(np.uint8)
    if q.ndim == 2:
        Image.fromarray(q, mode="L").save(path)
    elif q.ndim == 3 and q.shape[2] == 3:
        Image.fromarray(q, mode="RGB").save(path)
    else:
        raise ValueError("field must be (H, W) or (H, W, 3)")


# ---------------------------------------------------------------------------
# patches

def patch_starts(dim: int, patch: int = 64, count: int = 12) -> np.ndarray:
    """Evenly spread offsets ``floor(k (dim - patch) / (count - 1))`` covering ``[0, dim - patch]``."""
    if dim < patch:
        raise ValueError(f"image dimension {dim} smaller than patch {patch}")
    if count == 1:
        return np.zeros(1, dtype=int)
    return (np.arange(count) * (dim - patch)) // (count - 1)


def extract_patches(images, masks, annotations, patch: int = 64, grid: int = 12, outside_fraction: float = 0.99):
    """Cut a ``grid x grid`` lattice of overlapping patches from every image.

    A patch is dropped when its annotation is empty and at least
    ``outside_fraction`` of its pixels lie outside the field-of-view mask.

    Returns
    -------
    dict with ``images``, ``annotations`` (kept patches, image-major then
    row-major order), ``origins`` ``(n, 3)`` rows of (image, row, col) and
    ``total`` (patch count before filtering).
    """
    images = [np.asarray(im, dtype=float) for im in images]
    masks = [np.asarray(m) > 0 for m in masks]
    annotations = [np.asarray(a) > 0 for a in annotations]
    if not (len(images) == len(masks) == len(annotations)):
        raise ValueError("images, masks and annotations differ in count")
    out_img, out_ann, origins = [], [], []
    total = 0
    for n, (im, fov, ann) in enumerate(zip(images, masks, annotations)):
        if im.shape[:2] != fov.shape or fov.shape != ann.shape:
            raise ValueError(f"image {n}: dimension mismatch {im.shape[:2]}, {fov.shape}, {ann.shape}")
        for r in patch_starts(im.shape[0], patch, grid):
            for c in patch_starts(im.shape[1], patch, grid):
                total += 1
                a = ann[r:r + patch, c:c + patch]
                outside = 1.0 - fov[r:r + patch, c:c + patch].mean()
                if not a.any() and outside >= outside_fraction:
                    continue
                out_img.append(im[r:r + patch, c:c + patch])
                out_ann.append(a.astype(np.uint8))
                origins.append((n, r, c))
    return {
        "images": np.array(out_img),
        "annotations": np.array(out_ann),
        "origins": np.array(origins, dtype=int).reshape(-1, 3),
        "total": total,
    }


def _first(pattern):
    hits = sorted(glob.glob(pattern))
    if not hits:
        raise FileNotFoundError(pattern)
    return hits[0]


def load_drive(root, split: str = "training"):
    """Load a DRIVE split: RGB images, field-of-view masks and first-observer annotations.

    ``root`` is the directory holding ``training/`` and ``test/``.
    """
    base = os.path.join(root, split)
    image_files = sorted(glob.glob(os.path.join(base, "images", "*")))
    if not image_files:
        raise FileNotFoundError(f"no images under {base}/images")
    images, masks, anns = [], [], []
    for path in image_files:
        ident = os.path.basename(path).split("_")[0]
        images.append(load_image(path, gray=False))
        masks.append(load_image(_first(os.path.join(base, "mask", f"{ident}_*")), gray=True) > 0.5)
        anns.append(load_image(_first(os.path.join(base, "1st_manual", f"{ident}_*")), gray=True) > 0.5)
    return np.array(images), np.array(masks), np.array(anns)


# ---------------------------------------------------------------------------
# CSV

def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_kernel_csv(kernel, path):
    """``dx,dy,value`` rows, ``dx`` along axis 0, row-major."""
    r = kernel.radius
    rows = []
    for a in range(kernel.values.shape[0]):
        for b in range(kernel.values.shape[1]):
            rows.append((a - r, b - r, repr(float(kernel.values[a, b]))))
    write_csv(path, ("dx", "dy", "value"), rows)


def read_kernel_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    r = max(abs(int(row["dx"])) for row in rows)
    out = np.empty((2 * r + 1, 2 * r + 1))
    for row in rows:
        out[int(row["dx"]) + r, int(row["dy"]) + r] = float(row["value"])
    return out
