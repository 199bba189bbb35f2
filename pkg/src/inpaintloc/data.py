"""Synthetic inpainting-style dataset generation, edge GT derivation,
folder ingestion, and the four robustness attacks."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

log = logging.getLogger(__name__)

ATTACK_KINDS = ("gaussian_noise", "gaussian_blur", "scaling", "distortion")

# strength validity ranges per attack kind (0 is always the identity)
ATTACK_RANGES = {
    "gaussian_noise": (0.0, 1.0),   # additive noise sigma in [0,1] image units
    "gaussian_blur": (0.0, 10.0),   # blur kernel sigma in pixels
    "scaling": (0.0, 1.0),          # downscale factor; 0 means identity
    "distortion": (0.0, 16.0),      # elastic displacement amplitude in pixels
}


@dataclass
class Sample:
    image: np.ndarray    # H x W x 3 float in [0,1]
    gt_mask: np.ndarray  # H x W float in {0,1}
    gt_edge: np.ndarray  # H x W float in {0,1}
    id: str


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    strength: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        lo, hi = ATTACK_RANGES[self.kind]
        if not (lo <= self.strength <= hi):
            raise ValueError(f"{self.kind} strength {self.strength} outside [{lo}, {hi}]")


def derive_edge(gt_mask: np.ndarray, width: int = 2) -> np.ndarray:
    """Morphological gradient: dilation XOR erosion, each of radius `width`.

    Erosion uses border_value=1 so an all-ones mask produces an empty edge
    (replicate-style border handling).
    """
    vals = np.unique(gt_mask)
    if not np.all(np.isin(vals, [0.0, 1.0])):
        raise ValueError("derive_edge expects a binary mask")
    m = gt_mask.astype(bool)
    dil = ndimage.binary_dilation(m, iterations=width, border_value=0)
    ero = ndimage.binary_erosion(m, iterations=width, border_value=1)
    return (dil ^ ero).astype(np.float32)


def _band_noise(rng: np.random.Generator, size: int, sigma: float) -> np.ndarray:
    """Band-limited noise texture in roughly [-1, 1]."""
    n = ndimage.gaussian_filter(rng.standard_normal((size, size)), sigma)
    peak = np.abs(n).max()
    return n / peak if peak > 0 else n


def _random_region(rng: np.random.Generator, size: int) -> np.ndarray:
    """One random ellipse or polygon mask with area in [2%, 30%] of the image."""
    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(100):
        cx, cy = rng.uniform(0.25 * size, 0.75 * size, 2)
        if rng.random() < 0.5:
            a = rng.uniform(0.06, 0.35) * size
            b = rng.uniform(0.06, 0.35) * size
            th = rng.uniform(0, np.pi)
            xr = (xx - cx) * np.cos(th) + (yy - cy) * np.sin(th)
            yr = -(xx - cx) * np.sin(th) + (yy - cy) * np.cos(th)
            mask = (xr / a) ** 2 + (yr / b) ** 2 <= 1.0
        else:
            k = rng.integers(3, 7)
            angles = np.sort(rng.uniform(0, 2 * np.pi, k))
            radii = rng.uniform(0.08, 0.35, k) * size
            px = cx + radii * np.cos(angles)
            py = cy + radii * np.sin(angles)
            # point-in-polygon by winding via matplotlib-free cross products
            mask = np.zeros((size, size), dtype=bool)
            pts = np.stack([px, py], axis=1)
            from matplotlib.path import Path as MplPath

            path = MplPath(pts)
            coords = np.stack([xx.ravel(), yy.ravel()], axis=1)
            mask = path.contains_points(coords).reshape(size, size)
        frac = mask.mean()
        if 0.02 <= frac <= 0.30:
            return mask.astype(np.float32)
    raise RuntimeError("failed to draw a region with area in [2%, 30%]")


def generate_synthetic(n: int, size: int, seed: int) -> list[Sample]:
    """Procedural tamper-localization samples: textured background, one
    differently-textured region alpha-blended over a 2px boundary band."""
    if size % 32 != 0:
        raise ValueError(f"size {size} not divisible by 32")
    if n < 1:
        raise ValueError("n must be >= 1")
    samples = []
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        # background: linear gradient + smooth noise, per channel
        yy, xx = np.mgrid[0:size, 0:size] / size
        gdir = rng.uniform(0, 2 * np.pi)
        grad = xx * np.cos(gdir) + yy * np.sin(gdir)
        base = rng.uniform(0.2, 0.7, 3)
        bg = np.stack(
            [
                base[c] + 0.25 * grad + 0.12 * _band_noise(rng, size, sigma=3.0)
                for c in range(3)
            ],
            axis=-1,
        )
        # foreground texture: different color and finer noise
        fg_base = np.clip(base + rng.uniform(-0.35, 0.35, 3), 0.05, 0.95)
        fg = np.stack(
            [
                fg_base[c] + 0.2 * _band_noise(rng, size, sigma=1.0)
                for c in range(3)
            ],
            axis=-1,
        )
        region = _random_region(rng, size)
        # 2px alpha-blended band to mimic concealed inpainting seams
        alpha = ndimage.gaussian_filter(region.astype(np.float64), 1.0)
        alpha = np.clip((alpha - 0.15) / 0.7, 0.0, 1.0)
        img = np.clip(bg * (1 - alpha[..., None]) + fg * alpha[..., None], 0.0, 1.0)
        mask = region
        samples.append(
            Sample(
                image=img.astype(np.float32),
                gt_mask=mask,
                gt_edge=derive_edge(mask),
                id=f"synthetic-{seed}-{i:04d}",
            )
        )
    return samples


def _resize_bilinear(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of an HxW or HxWxC float array via torch interpolate."""
    import torch
    import torch.nn.functional as F

    x = torch.from_numpy(np.ascontiguousarray(arr, dtype=np.float32))
    if x.ndim == 2:
        x = x[None, None]
        out = F.interpolate(x, size=(out_h, out_w), mode="bilinear", align_corners=False)
        return out[0, 0].numpy()
    x = x.permute(2, 0, 1)[None]
    out = F.interpolate(x, size=(out_h, out_w), mode="bilinear", align_corners=False)
    return out[0].permute(1, 2, 0).numpy()


def apply_attack(sample: Sample, spec: AttackSpec) -> Sample:
    """Robustness attacks. Photometric attacks touch the image only;
    geometric attacks warp image and GT identically, then re-derive the
    edge GT."""
    if spec.strength == 0.0:
        return Sample(sample.image.copy(), sample.gt_mask.copy(), sample.gt_edge.copy(), sample.id)

    img = sample.image
    mask = sample.gt_mask
    sid = f"{sample.id}+{spec.kind}@{spec.strength:g}"

    if spec.kind == "gaussian_noise":
        rng = np.random.default_rng(spec.seed)
        noisy = np.clip(img + spec.strength * rng.standard_normal(img.shape), 0.0, 1.0)
        return Sample(noisy.astype(np.float32), mask.copy(), sample.gt_edge.copy(), sid)

    if spec.kind == "gaussian_blur":
        blurred = np.stack(
            [ndimage.gaussian_filter(img[..., c], spec.strength) for c in range(3)],
            axis=-1,
        )
        return Sample(np.clip(blurred, 0, 1).astype(np.float32), mask.copy(), sample.gt_edge.copy(), sid)

    h, w = mask.shape
    if spec.kind == "scaling":
        dh, dw = max(1, round(h * spec.strength)), max(1, round(w * spec.strength))
        img2 = _resize_bilinear(_resize_bilinear(img, dh, dw), h, w)
        mask2 = (_resize_bilinear(_resize_bilinear(mask, dh, dw), h, w) >= 0.5).astype(np.float32)
        return Sample(
            np.clip(img2, 0, 1).astype(np.float32), mask2, derive_edge(mask2), sid
        )

    # distortion: smooth elastic displacement field, shared by image and GT
    rng = np.random.default_rng(spec.seed)
    field_sigma = 8.0
    dy = ndimage.gaussian_filter(rng.standard_normal((h, w)), field_sigma)
    dx = ndimage.gaussian_filter(rng.standard_normal((h, w)), field_sigma)
    for d in (dy, dx):
        peak = np.abs(d).max()
        if peak > 0:
            d *= spec.strength / peak
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    coords = [yy + dy, xx + dx]
    img2 = np.stack(
        [ndimage.map_coordinates(img[..., c], coords, order=1, mode="reflect") for c in range(3)],
        axis=-1,
    )
    mask2 = (ndimage.map_coordinates(mask, coords, order=1, mode="reflect") >= 0.5).astype(np.float32)
    return Sample(np.clip(img2, 0, 1).astype(np.float32), mask2, derive_edge(mask2), sid)


def save_folder(samples: list[Sample], root: str | Path) -> None:
    """Export samples to the {images/*.png, masks/*.png} layout."""
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "masks").mkdir(parents=True, exist_ok=True)
    for s in samples:
        Image.fromarray((s.image * 255).round().astype(np.uint8)).save(root / "images" / f"{s.id}.png")
        Image.fromarray((s.gt_mask * 255).astype(np.uint8)).save(root / "masks" / f"{s.id}.png")


def load_folder(root: str | Path) -> list[Sample]:
    """Ingest a {images/, masks/} folder dataset; pairs matched by stem."""
    root = Path(root)
    img_dir, mask_dir = root / "images", root / "masks"
    imgs = {p.stem: p for p in sorted(img_dir.glob("*.png"))} if img_dir.is_dir() else {}
    masks = {p.stem: p for p in sorted(mask_dir.glob("*.png"))} if mask_dir.is_dir() else {}
    for stem in sorted(set(imgs) ^ set(masks)):
        log.warning("unpaired file: %s", stem)
    samples = []
    for stem in sorted(set(imgs) & set(masks)):
        img = np.asarray(Image.open(imgs[stem]).convert("RGB"), dtype=np.float32) / 255.0
        mask = np.asarray(Image.open(masks[stem]).convert("L"), dtype=np.float32) / 255.0
        if img.shape[:2] != mask.shape:
            raise ValueError(
                f"{stem}: image size {img.shape[:2]} does not match mask size {mask.shape}"
            )
        mask = (mask >= 0.5).astype(np.float32)
        samples.append(Sample(image=img, gt_mask=mask, gt_edge=derive_edge(mask), id=stem))
    return samples
