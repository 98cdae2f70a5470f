"""Deterministic synthetic corpus of positive-like and negative-like scenes.

Positive scenes hold one large skin-toned region with a lobed, limb-like
outline. Negative scenes are portrait-like smooth ellipses, skin-colored
textures that are not bodies (grainy sand blobs, clusters of round petals),
or scenes with no skin tones at all. Every image depends only on
``(seed, class, index)``.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

log = logging.getLogger(__name__)

NEGATIVE_KINDS = ("portrait", "portrait", "sand", "flowers", "plain")


def _rng(seed: int, label: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, label, index])


def _skin_color(rng) -> np.ndarray:
    r = rng.uniform(175, 235)
    g = r * rng.uniform(0.62, 0.78)
    b = g * rng.uniform(0.72, 0.88)
    return np.array([r, g, b])


def _background_color(rng) -> np.ndarray:
    # green- or blue-dominant so no background pixel passes as skin
    base = rng.uniform(30, 150)
    hi = base + rng.uniform(45, 100)
    if rng.random() < 0.5:
        return np.array([base, hi, rng.uniform(20, hi - 30)])
    return np.array([base, rng.uniform(20, hi - 30), hi])


def _background(rng, w: int, h: int) -> np.ndarray:
    c1, c2 = _background_color(rng), _background_color(rng)
    t = np.linspace(0.0, 1.0, h)[:, None, None]
    img = c1 * (1 - t) + c2 * t
    img = np.broadcast_to(img, (h, w, 3)).copy()
    img += rng.normal(0.0, 4.0, img.shape)
    return img


def _paint(img, mask, color, rng, grain=4.0, shade=0.12):
    h, w = mask.shape
    yy, xx = np.mgrid[:h, :w]
    ang = rng.uniform(0, 2 * np.pi)
    ramp = (np.cos(ang) * xx / w + np.sin(ang) * yy / h)
    factor = 1.0 + shade * (ramp - ramp.mean())
    tex = color[None, None, :] * factor[..., None] + rng.normal(0.0, grain, (h, w, 3))
    img[mask] = tex[mask]


def _polygon_mask(w, h, points) -> np.ndarray:
    im = Image.new("L", (w, h), 0)
    ImageDraw.Draw(im).polygon([tuple(p) for p in points], fill=1)
    return np.asarray(im, dtype=bool)


def _radial_shape(cx, cy, radius_fn, n=360):
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    r = radius_fn(t)
    return np.column_stack([cx + r * np.cos(t), cy - r * np.sin(t)])


def _positive(rng, w, h, img):
    side = min(w, h)
    cx = w / 2 + rng.uniform(-0.1, 0.1) * w
    cy = h / 2 + rng.uniform(-0.1, 0.1) * h
    r0 = side * rng.uniform(0.22, 0.3)
    lobes = int(rng.integers(3, 8))
    amp = rng.uniform(0.3, 0.7)
    phase = rng.uniform(0, 2 * np.pi)
    jitter = rng.uniform(-0.15, 0.15, lobes)

    def radius(t):
        k = (t * lobes / (2 * np.pi) + phase).astype(int) % lobes
        wave = np.maximum(np.cos(lobes * t + phase), 0.0) ** 1.5
        return r0 * (1.0 + amp * wave * (1.0 + jitter[k]))

    mask = _polygon_mask(w, h, _radial_shape(cx, cy, radius))
    _paint(img, mask, _skin_color(rng), rng)


def _portrait(rng, w, h, img):
    side = min(w, h)
    a = side * rng.uniform(0.12, 0.2)
    b = a * rng.uniform(1.1, 1.45)
    cx = w / 2 + rng.uniform(-0.2, 0.2) * w
    cy = h / 2 + rng.uniform(-0.15, 0.15) * h
    tilt = rng.uniform(-0.4, 0.4)
    t = np.linspace(0, 2 * np.pi, 240, endpoint=False)
    x, y = a * np.cos(t), b * np.sin(t)
    pts = np.column_stack(
        [cx + x * np.cos(tilt) - y * np.sin(tilt), cy + x * np.sin(tilt) + y * np.cos(tilt)]
    )
    mask = _polygon_mask(w, h, pts)
    if rng.random() < 0.3:
        # neck and shoulders below the face
        top = cy + 0.8 * b
        neck = [(cx - 0.45 * a, cy), (cx + 0.45 * a, cy), (cx + 0.45 * a, top), (cx - 0.45 * a, top)]
        span = a * rng.uniform(1.8, 2.6)
        shoulders = [(cx - 0.5 * a, top), (cx + 0.5 * a, top), (cx + span, h), (cx - span, h)]
        mask |= _polygon_mask(w, h, neck) | _polygon_mask(w, h, shoulders)
    _paint(img, mask, _skin_color(rng), rng)


def _sand(rng, w, h, img):
    side = min(w, h)
    r0 = side * rng.uniform(0.12, 0.2)
    cx = w / 2 + rng.uniform(-0.2, 0.2) * w
    cy = h / 2 + rng.uniform(-0.2, 0.2) * h
    p1, p2 = rng.uniform(0, 2 * np.pi, 2)
    a1, a2 = rng.uniform(0.05, 0.15, 2)

    def radius(t):
        return r0 * (1.0 + a1 * np.cos(2 * t + p1) + a2 * np.cos(3 * t + p2))

    mask = _polygon_mask(w, h, _radial_shape(cx, cy, radius))
    color = _skin_color(rng) * np.array([1.0, 1.06, 0.95])
    _paint(img, mask, color, rng, grain=9.0, shade=0.05)


def _flowers(rng, w, h, img):
    side = min(w, h)
    n = int(rng.integers(4, 9))
    im = Image.new("L", (w, h), 0)
    draw = ImageDraw.Draw(im)
    for _ in range(n):
        r = side * rng.uniform(0.045, 0.075)
        x = rng.uniform(r + 2, w - r - 2)
        y = rng.uniform(r + 2, h - r - 2)
        draw.ellipse([x - r, y - r, x + r, y + r], fill=1)
    mask = np.asarray(im, dtype=bool)
    color = _skin_color(rng) * np.array([1.0, 1.1, 0.85])
    _paint(img, mask, color, rng, grain=5.0)


def _plain(rng, w, h, img):
    for _ in range(int(rng.integers(1, 4))):
        x0, x1 = np.sort(rng.uniform(0, w, 2))
        y0, y1 = np.sort(rng.uniform(0, h, 2))
        im = Image.new("L", (w, h), 0)
        ImageDraw.Draw(im).rectangle([x0, y0, x1, y1], fill=1)
        _paint(img, np.asarray(im, dtype=bool), _background_color(rng), rng)


_NEGATIVES = {"portrait": _portrait, "sand": _sand, "flowers": _flowers, "plain": _plain}


def render(seed: int, label: int, index: int) -> tuple:
    """Render one scene; returns ``(uint8 RGB array, kind)``."""
    rng = _rng(seed, label, index)
    w = int(rng.integers(220, 341))
    h = int(rng.integers(200, 321))
    img = _background(rng, w, h)
    if label == 1:
        kind = "positive"
        _positive(rng, w, h, img)
    else:
        kind = NEGATIVE_KINDS[index % len(NEGATIVE_KINDS)]
        _NEGATIVES[kind](rng, w, h, img)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8), kind


def generate_corpus(out_dir, n_per_class: int, seed: int = 0, n_test_per_class: int = 0) -> Path:
    """Write PNGs and ``manifest.csv`` (``path,label,split``) into ``out_dir``.

    Test images use indices after the training ones, so the two splits never
    share a scene.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if n_per_class == 0 and n_test_per_class == 0:
        log.warning("empty corpus requested")
    rows = []
    for split, start, count in (("train", 0, n_per_class), ("test", n_per_class, n_test_per_class)):
        for label, name in ((1, "positive"), (0, "negative")):
            for index in range(start, start + count):
                pixels, _ = render(seed, label, index)
                fname = f"{name}_{index:05d}.png"
                Image.fromarray(pixels).save(out / fname, format="PNG", optimize=False)
                rows.append((fname, name, split))
    manifest = out / "manifest.csv"
    with manifest.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path", "label", "split"])
        writer.writerows(rows)
    return manifest
