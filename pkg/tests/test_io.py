import numpy as np
import pytest
from PIL import Image

from semiscale import io as sio
from semiscale.kernels import KernelSpec, sample_kernel
from semiscale.semifield import TropicalMin


@pytest.mark.parametrize("ext", ["png", "pgm"])
def test_gray_round_trip(tmp_path, rng, ext):
    f = rng.uniform(size=(17, 23))
    path = tmp_path / f"f.{ext}"
    sio.save_image(f, path)
    back = sio.load_image(path)
    assert back.shape == f.shape
    assert np.max(np.abs(back - f)) <= 1 / 510 + 1e-12


@pytest.mark.parametrize("ext", ["png", "ppm"])
def test_rgb_round_trip_and_luma(tmp_path, rng, ext):
    f = rng.uniform(size=(9, 11, 3))
    path = tmp_path / f"f.{ext}"
    sio.save_image(f, path)
    rgb = sio.load_image(path, gray=False)
    assert np.max(np.abs(rgb - f)) <= 1 / 510 + 1e-12
    gray = sio.load_image(path)
    np.testing.assert_allclose(gray, rgb @ np.array(sio.LUMA), atol=1e-12)


def test_values_are_clipped(tmp_path):
    path = tmp_path / "c.png"
    sio.save_image(np.array([[-1.0, 2.0]]), path)
    np.testing.assert_array_equal(sio.load_image(path), [[0.0, 1.0]])


def test_sixteen_bit_rejected(tmp_path):
    path = tmp_path / "deep.png"
    Image.fromarray(np.full((4, 4), 40000, dtype=np.uint16)).save(path)
    assert Image.open(path).mode.startswith("I")
    with pytest.raises(sio.UnsupportedImageError):
        sio.load_image(path)


def test_corrupt_and_unknown_rejected(tmp_path):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"\x89PNG\r\n\x1a\n garbage")
    with pytest.raises(sio.UnsupportedImageError):
        sio.load_image(bad)
    txt = tmp_path / "notes.txt"
    txt.write_text("hello")
    with pytest.raises(sio.UnsupportedImageError):
        sio.load_image(txt)
    with pytest.raises(ValueError):
        sio.save_image(np.zeros((2, 2, 2)), tmp_path / "x.png")


def test_patch_starts():
    s = sio.patch_starts(584)
    assert len(s) == 12 and s[0] == 0 and s[-1] == 584 - 64
    assert np.all(np.diff(s) > 0)
    with pytest.raises(ValueError):
        sio.patch_starts(50)


def _fake_drive(n=20, ones=True, seed=0):
    rng = np.random.default_rng(seed)
    images = rng.uniform(size=(n, 584, 565, 3))
    masks = np.ones((n, 584, 565), bool)
    if not ones:
        yy, xx = np.mgrid[0:584, 0:565]
        disc = (yy - 292) ** 2 / 270**2 + (xx - 282) ** 2 / 270**2 <= 1
        masks[:] = disc
    ann = np.zeros((n, 584, 565), bool)
    ann[:, 250:330, :] = True
    return images, masks, ann


def test_patch_counts_without_filtering():
    images, masks, ann = _fake_drive()
    out = sio.extract_patches(images, masks, ann)
    assert out["total"] == 2880 and len(out["images"]) == 2880
    assert out["images"].shape == (2880, 64, 64, 3)
    # image-major, then row-major order
    assert tuple(out["origins"][0]) == (0, 0, 0) and tuple(out["origins"][13]) == (0, sio.patch_starts(584)[1],
                                                                                   sio.patch_starts(565)[1])


def test_patch_filter_drops_empty_outside_patches():
    images, masks, ann = _fake_drive(n=2, ones=False)
    out = sio.extract_patches(images, masks, ann)
    kept = {tuple(o) for o in out["origins"]}
    assert out["total"] == 288 and len(kept) < 288
    # corner patches lie outside the disc and hold no annotation
    assert (0, 0, 0) not in kept
    # everything with annotation stays
    ann_rows = [(n, r, c) for n in range(2) for r in sio.patch_starts(584) for c in sio.patch_starts(565)
                if ann[n, r:r + 64, c:c + 64].any()]
    assert set(ann_rows) <= kept


def test_patch_dimension_mismatch():
    images, masks, ann = _fake_drive(n=1)
    with pytest.raises(ValueError):
        sio.extract_patches(images, masks[:, :-1], ann)
    with pytest.raises(ValueError):
        sio.extract_patches(images, masks, ann[:0])


def test_load_drive_layout(tmp_path):
    rng = np.random.default_rng(0)
    for split in ("training", "test"):
        for sub in ("images", "mask", "1st_manual"):
            (tmp_path / split / sub).mkdir(parents=True)
        for i in (21, 22):
            Image.fromarray((rng.uniform(size=(584, 565, 3)) * 255).astype(np.uint8)).save(
                tmp_path / split / "images" / f"{i}_{split}.tif")
            Image.fromarray(np.full((584, 565), 255, np.uint8)).save(tmp_path / split / "mask" / f"{i}_{split}_mask.gif")
            Image.fromarray(np.zeros((584, 565), np.uint8)).save(tmp_path / split / "1st_manual" / f"{i}_manual1.gif")
    imgs, fov, ann = sio.load_drive(tmp_path, "training")
    assert imgs.shape == (2, 584, 565, 3) and fov.all() and not ann.any()
    with pytest.raises(FileNotFoundError):
        sio.load_drive(tmp_path / "missing")


def test_kernel_csv_round_trip(tmp_path):
    k = sample_kernel(KernelSpec(TropicalMin(), t=0.7), radius=3)
    path = tmp_path / "k.csv"
    sio.write_kernel_csv(k, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "dx,dy,value" and lines[1].startswith("-3,-3,") and len(lines) == 50
    np.testing.assert_array_equal(sio.read_kernel_csv(path), k.values)
