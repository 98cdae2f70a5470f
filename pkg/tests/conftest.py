import numpy as np
import pytest
from PIL import Image, ImageDraw

from skinshape.skin import label_components


def disk_mask(radius, pad=6):
    n = 2 * (radius + pad) + 1
    yy, xx = np.mgrid[:n, :n] - (radius + pad)
    return xx**2 + yy**2 <= radius**2


def square_mask(radius, pad=6):
    # axis-aligned square of half-side ``radius``
    n = 2 * (radius + pad) + 1
    m = np.zeros((n, n), dtype=bool)
    m[pad : pad + 2 * radius + 1, pad : pad + 2 * radius + 1] = True
    return m


def star_mask(radius, points=5, inner=0.45, pad=6):
    n = 2 * (radius + pad) + 1
    c = radius + pad
    t = np.arange(2 * points) * np.pi / points + np.pi / 2
    r = np.where(np.arange(2 * points) % 2 == 0, radius, inner * radius)
    poly = [(c + ri * np.cos(ti), c - ri * np.sin(ti)) for ri, ti in zip(r, t)]
    im = Image.new("L", (n, n), 0)
    ImageDraw.Draw(im).polygon(poly, fill=1)
    return np.asarray(im, dtype=bool)


def ellipse_mask(a, b, pad=6):
    h, w = 2 * (b + pad) + 1, 2 * (a + pad) + 1
    yy, xx = np.mgrid[:h, :w]
    return ((xx - a - pad) / a) ** 2 + ((yy - b - pad) / b) ** 2 <= 1.0


def regions_of(mask):
    rs = label_components(mask)
    return rs, rs.regions[0].id


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


def record(number, ok, detail):
    """Remember one acceptance outcome for the end-of-run summary."""
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
