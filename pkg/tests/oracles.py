"""Slow, straight-line reference computations used as independent test oracles.

Everything here works pixel by pixel on nested Python lists so that it shares
no code path with the vectorized implementations under test.
"""

import math


def to_lists(a):
    return [[float(v) for v in row] for row in a]


def level(v):
    return math.floor(v * 255.0 + 0.5)


def naive_counts(sal, gt, threshold):
    tp = fp = fn = tn = 0
    for srow, grow in zip(sal, gt):
        for v, g in zip(srow, grow):
            pred = level(v) >= threshold
            if pred and g:
                tp += 1
            elif pred:
                fp += 1
            elif g:
                fn += 1
            else:
                tn += 1
    return tp, fp, fn, tn


def _mean(xs):
    return sum(xs) / len(xs)


def _object(vals):
    m = _mean(vals)
    if len(vals) > 1:
        sd = math.sqrt(sum((v - m) ** 2 for v in vals) / (len(vals) - 1))
    else:
        sd = 0.0
    return 2 * m / (m * m + 1 + 2 * 1.0 * sd + 1e-20)


def _exact_level(vals):
    # a constant block has exactly zero spread; a rounded mean would fake some
    return vals[0] if min(vals) == max(vals) else _mean(vals)


def _quadrant_ssim(xs, ys):
    n = len(xs)
    mx, my = _exact_level(xs), _exact_level(ys)
    if n > 1:
        vx = sum((x - mx) ** 2 for x in xs) / (n - 1)
        vy = sum((y - my) ** 2 for y in ys) / (n - 1)
        cov = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / (n - 1)
    else:
        vx = vy = cov = 0.0
    a = 4 * mx * my * cov
    b = (mx * mx + my * my) * (vx + vy)
    if a != 0:
        return a / b
    return 1.0 if b == 0 else 0.0


def s_measure_ref(sal, gt):
    h, w = len(gt), len(gt[0])
    n = h * w
    flat = [(i, j) for i in range(h) for j in range(w)]
    fg = [(i, j) for i, j in flat if gt[i][j]]
    bg = [(i, j) for i, j in flat if not gt[i][j]]
    y = len(fg) / n
    total = sum(sal[i][j] for i, j in flat)
    if not fg:
        return 1 - total / n
    if not bg:
        return total / n

    s_o = y * _object([sal[i][j] for i, j in fg]) + (1 - y) * _object([1 - sal[i][j] for i, j in bg])

    cy = sum(i for i, _ in fg) / len(fg)
    cx = sum(j for _, j in fg) / len(fg)
    split_y = math.floor(cy + 0.5) + 1
    split_x = math.floor(cx + 0.5) + 1
    s_r = 0.0
    for rows in (range(0, min(split_y, h)), range(min(split_y, h), h)):
        for cols in (range(0, min(split_x, w)), range(min(split_x, w), w)):
            pix = [(i, j) for i in rows for j in cols]
            k = sum(1 for i, j in pix if gt[i][j])
            if k == 0:
                continue
            xs = [sal[i][j] for i, j in pix]
            ys = [1.0 if gt[i][j] else 0.0 for i, j in pix]
            s_r += k / len(fg) * _quadrant_ssim(xs, ys)
    return min(max(0.5 * s_o + 0.5 * s_r, 0.0), 1.0)


def e_measure_ref(pred, gt, eps=2.220446049250313e-16):
    h, w = len(gt), len(gt[0])
    n = h * w
    p = [[1.0 if pred[i][j] else 0.0 for j in range(w)] for i in range(h)]
    g = [[1.0 if gt[i][j] else 0.0 for j in range(w)] for i in range(h)]
    mp = sum(map(sum, p)) / n
    mg = sum(map(sum, g)) / n
    if mg == 0:
        return sum(1 - p[i][j] for i in range(h) for j in range(w)) / n
    if mg == 1:
        return mp
    acc = 0.0
    for i in range(h):
        for j in range(w):
            a = p[i][j] - mp
            b = g[i][j] - mg
            xi = 2 * a * b / (a * a + b * b + eps)
            acc += (1 + xi) ** 2 / 4
    return acc / n
