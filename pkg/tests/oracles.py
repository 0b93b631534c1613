"""Brute-force reference computations used by the oracle tests.

Everything here is explicit Python loops over plain floats, sharing no code
with the library implementations it checks.
"""

import math


def cosine_loss_loop(a, b):
    a, b = list(a), list(b)
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    return 1.0 - dot / (na * nb)


def avg_hair_color_loop(img, mask):
    img, mask = img.tolist(), mask.tolist()
    h, w = len(mask), len(mask[0])
    total = sum(mask[r][c] for r in range(h) for c in range(w))
    if total == 0:
        return [0.0, 0.0, 0.0]
    out = []
    for ch in range(3):
        s = 0.0
        for r in range(h):
            for c in range(w):
                s += img[ch][r][c] * mask[r][c]
        out.append(s / total)
    return out


def l1_color_distance_loop(color_a, color_b):
    return sum(abs(x - y) for x, y in zip(color_a, color_b))


def background_loss_loop(x_m, x_w, hair_m, hair_w, normalized=True, squared=False):
    x_m, x_w = x_m.tolist(), x_w.tolist()
    hair_m, hair_w = hair_m.tolist(), hair_w.tolist()
    h, w = len(hair_m), len(hair_m[0])
    acc = 0.0
    for ch in range(3):
        for r in range(h):
            for c in range(w):
                region = min(1.0 - hair_m[r][c], 1.0 - hair_w[r][c])
                acc += (region * (x_m[ch][r][c] - x_w[ch][r][c])) ** 2
    if normalized:
        acc /= 3 * h * w
    return acc if squared else math.sqrt(acc)


def norm_loop(layers):
    acc = 0.0
    for row in layers.tolist():
        for v in row:
            acc += v * v
    return math.sqrt(acc)


def weighted_total_loop(terms, style_kind, color_kind):
    """Recompose the total from per-term values using the default weights."""
    text_part = terms.get("style_text", 0.0) + terms.get("color_text", 0.0)
    image_part = 5.0 * terms.get("style_image", 0.0) + 0.02 * terms.get("color_image", 0.0)
    preserve_part = (
        0.3 * terms.get("identity", 0.0)
        + 0.02 * terms.get("style_keeps_color", 0.0)
        + 1.0 * terms.get("background", 0.0)
        + 0.8 * terms.get("latent_norm", 0.0)
    )
    return 2.0 * text_part + 1.0 * image_part + 1.0 * preserve_part
