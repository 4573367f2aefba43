"""Box-level exchange — weight maps, pairing and the in-place blend.

The Gaussian map's widths are checked against an independent 50-digit ``decimal`` evaluation of the
same formula."""

import math
from collections import Counter
from decimal import Decimal, localcontext

import numpy as np
import pytest

from domainsift.augment import (
    BoxPair,
    exchange,
    exchange_boxes,
    gaussian_sigmas,
    gaussian_weight_map,
    pair_boxes,
    pixel_rect,
    weight_map,
)
from domainsift.dataset import BoxLabel, LabeledImage

PI = Decimal("3.14159265358979323846264338327950288419716939937510")
DONOR_COLOR = (10, 200, 30)


def _box(category, x0, y0, x1, y1, size, conf=1.0, n=2):
    return BoxLabel.from_pixels(x0, y0, x1, y1, size[0], size[1],
                                [conf if c == category else 0.0 for c in range(n)], category)


def _host(seed=0):
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
    boxes = (_box(0, 8, 8, 29, 29, (64, 64)), _box(0, 35, 35, 56, 56, (64, 64)), _box(1, 40, 4, 60, 20, (64, 64)))
    return LabeledImage(pixels, boxes, "source", "host")


def _donor(conf=1.0):
    pixels = np.zeros((30, 40, 3), dtype=np.uint8)
    pixels[5:20, 10:30] = DONOR_COLOR
    return LabeledImage(pixels, (_box(0, 10, 5, 30, 20, (40, 30), conf=conf),), "target", "donor")


class _Beta:
    """A generator stand-in whose Beta draw is always ``value``."""

    def __init__(self, value):
        self.value = value

    def beta(self, a, b):
        return self.value


def _rects(img, indices):
    return [pixel_rect(img.labels[i], img.width, img.height) for i in indices]


def _outside(img, rects):
    mask = np.ones((img.height, img.width), dtype=bool)
    for x0, y0, x1, y1 in rects:
        mask[y0:y1, x0:x1] = False
    return mask


# --- weight maps ----------------------------------------------------------

def _random_shapes(count=100, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        W, H = int(rng.integers(2, 700)), int(rng.integers(2, 700))
        yield int(rng.integers(2, min(W, 120) + 1)), int(rng.integers(2, min(H, 120) + 1)), W, H


def test_sigma_of_a_64_box_in_a_640_image():
    sx, sy = gaussian_sigmas(64, 64, 640, 640)
    assert sx == pytest.approx(2.553, abs=5e-4)
    assert sx == sy


@pytest.mark.parametrize("w, h, W, H", list(_random_shapes(20, seed=1)) + [(64, 64, 640, 640)])
def test_sigmas_match_a_high_precision_evaluation(w, h, W, H):
    with localcontext() as ctx:
        ctx.prec = 50
        common = (Decimal(h * w) / (2 * PI)).sqrt()
    sx, sy = gaussian_sigmas(w, h, W, H)
    assert abs(Decimal(sx) - Decimal(w) / Decimal(W) * common) <= Decimal("1e-9")
    assert abs(Decimal(sy) - Decimal(h) / Decimal(H) * common) <= Decimal("1e-9")


def test_gaussian_map_shape_and_peak():
    for w, h, W, H in _random_shapes():
        wm = gaussian_weight_map(w, h, W, H)
        assert wm.values.shape == (h, w)
        assert wm.value_at(wm.mu_x, wm.mu_y) == 1.0
        assert wm.value_at(wm.mu_x + wm.sigma_x, wm.mu_y) == pytest.approx(math.exp(-1), abs=1e-9)
        if w % 2 and h % 2:
            assert wm.values[h // 2, w // 2] == 1.0
        assert ((wm.values >= 0) & (wm.values <= 1)).all()


def test_gaussian_map_is_symmetric_and_decays():
    for w, h, W, H in _random_shapes(seed=2):
        v = gaussian_weight_map(w, h, W, H).values
        assert np.abs(v - v[:, ::-1]).max() <= 1e-12
        assert np.abs(v - v[::-1, :]).max() <= 1e-12
        row = v[h // 2, w // 2:]
        assert ((np.diff(row) < 0) | (row[1:] == 0)).all()
        col = v[h // 2:, w // 2]
        assert ((np.diff(col) < 0) | (col[1:] == 0)).all()


def test_larger_images_narrow_the_map():
    narrow = gaussian_weight_map(32, 32, 320, 64)
    wide = gaussian_weight_map(32, 32, 64, 64)
    assert narrow.sigma_x < wide.sigma_x
    assert narrow.values[15, 0] < wide.values[15, 0]


@pytest.mark.parametrize("w, h, W, H", [(1, 5, 10, 10), (5, 5, 4, 10), (5, 12, 10, 10)])
def test_gaussian_map_needs_a_real_box(w, h, W, H):
    with pytest.raises(ValueError):
        gaussian_weight_map(w, h, W, H)


def test_direct_and_mixture_maps():
    assert (weight_map("direct", 5, 4, 10, 10).values == 0).all()
    wm = weight_map("mixture", 5, 4, 10, 10, alpha_m=2.0, rng=np.random.default_rng(0))
    assert (wm.values == wm.beta_mix).all() and 0 <= wm.beta_mix <= 1
    with pytest.raises(ValueError, match="unknown exchange mode"):
        weight_map("poisson", 5, 4, 10, 10)


# --- pairing --------------------------------------------------------------

def test_no_shared_class_means_no_pairs():
    donor = LabeledImage(np.zeros((30, 40, 3), dtype=np.uint8), (_box(1, 0, 0, 10, 10, (40, 30)),), "target", "d")
    host = LabeledImage(np.zeros((64, 64, 3), dtype=np.uint8), (_box(0, 8, 8, 29, 29, (64, 64)),), "source", "h")
    assert pair_boxes(host, [donor], np.random.default_rng(0), p_exchange=1.0) == []


def test_zero_probability_means_no_pairs():
    assert pair_boxes(_host(), [_donor()], np.random.default_rng(0), p_exchange=0.0) == []


def test_every_same_class_box_pairs_at_probability_one():
    host = _host()
    pairs = pair_boxes(host, [_donor(), _donor()], np.random.default_rng(0), p_exchange=1.0)
    assert [p.src for p in pairs] == [("host", 0), ("host", 1)]
    assert all(p.category == 0 for p in pairs)
    assert all(p.tgt[1] == 0 and p.tgt[0] in (0, 1) for p in pairs)
    assert (pairs[0].common_w, pairs[0].common_h) == (21, 21)


def test_hosts_limit_which_boxes_receive():
    pairs = pair_boxes(_host(), [_donor()], np.random.default_rng(0), p_exchange=1.0, hosts={1})
    assert [p.src for p in pairs] == [("host", 1)]


def test_pair_needs_two_pixels():
    with pytest.raises(ValueError):
        BoxPair(("h", 0), (0, 0), 1, 5, 0)


# --- exchange -------------------------------------------------------------

def _pair(index=0):
    host = _host()
    x0, y0, x1, y1 = pixel_rect(host.labels[index], 64, 64)
    return host, BoxPair(("host", index), (0, 0), x1 - x0, y1 - y0, 0)


def test_direct_exchange_pastes_the_donor_patch():
    host, pair = _pair()
    out = exchange(host, _donor(conf=0.6), pair, "direct")
    x0, y0, x1, y1 = pixel_rect(host.labels[0], 64, 64)
    assert (out.pixels[y0:y1, x0:x1] == DONOR_COLOR).all()
    assert out.labels[0].confidence == pytest.approx(0.6)
    assert out.labels[0].cx == host.labels[0].cx and out.labels[0].w == host.labels[0].w


def test_mixture_with_beta_one_keeps_the_host():
    host, pair = _pair()
    out = exchange(host, _donor(conf=0.6), pair, "mixture", rng=_Beta(1.0))
    assert np.array_equal(out.pixels, host.pixels)
    assert out.labels[0].confidence == pytest.approx(1.0)


def test_gaussian_exchange_matches_a_per_pixel_evaluation():
    host, pair = _pair()
    out = exchange(host, _donor(), pair, "gaussian")
    x0, y0, x1, y1 = pixel_rect(host.labels[0], 64, 64)
    w, h = x1 - x0, y1 - y0
    sx, sy = gaussian_sigmas(w, h, 64, 64)
    mx, my = (w - 1) / 2, (h - 1) / 2
    region = out.pixels[y0:y1, x0:x1].astype(float)
    original = host.pixels[y0:y1, x0:x1].astype(float)
    for q in range(h):
        for p in range(w):
            beta = math.exp(-((p - mx) ** 2 / sx ** 2 + (q - my) ** 2 / sy ** 2))
            expected = beta * original[q, p] + (1 - beta) * np.array(DONOR_COLOR, dtype=float)
            assert np.abs(region[q, p] - expected).max() <= 1.0
    assert np.array_equal(out.pixels[y0 + h // 2, x0 + w // 2], host.pixels[y0 + h // 2, x0 + w // 2])
    assert np.abs(region[0, 0] - DONOR_COLOR).max() <= 1.0


@pytest.mark.parametrize("mode", ["direct", "mixture", "gaussian"])
def test_exchange_only_touches_the_exchanged_boxes(mode):
    host = _host(seed=3)
    rng = np.random.default_rng(4)
    out, done = exchange_boxes(host, [_donor()], mode, p_exchange=1.0, rng=rng)
    assert done == 2
    outside = _outside(host, _rects(host, [0, 1]))
    assert np.array_equal(out.pixels[outside], host.pixels[outside])


@pytest.mark.parametrize("mode", ["direct", "mixture", "gaussian"])
def test_exchanged_pixels_stay_between_their_inputs(mode):
    host = _host(seed=5)
    out, _ = exchange_boxes(host, [_donor()], mode, p_exchange=1.0, rng=np.random.default_rng(6))
    donor = np.array(DONOR_COLOR)
    for x0, y0, x1, y1 in _rects(host, [0, 1]):
        before = host.pixels[y0:y1, x0:x1].astype(int)
        after = out.pixels[y0:y1, x0:x1].astype(int)
        assert (after >= np.minimum(before, donor) - 1).all()
        assert (after <= np.maximum(before, donor) + 1).all()


def test_exchange_is_deterministic():
    a, _ = exchange_boxes(_host(), [_donor()], "mixture", rng=np.random.default_rng(7))
    b, _ = exchange_boxes(_host(), [_donor()], "mixture", rng=np.random.default_rng(7))
    assert np.array_equal(a.pixels, b.pixels)
    assert a.labels == b.labels


def test_degenerate_donor_is_skipped_and_counted():
    donor = LabeledImage(np.zeros((10, 1000, 3), dtype=np.uint8),
                         (BoxLabel.one_hot(0, 2, 0.5, 0.5, 0.0004, 0.5),), "target", "thin")
    host, pair = _pair()
    warnings = Counter()
    out = exchange(host, donor, pair, "direct", warnings=warnings)
    assert out is host
    assert warnings["skipped_exchanges"] == 1
