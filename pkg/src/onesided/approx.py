"""Best one-sided approximation records of x1 a1 + x2 a2 with x1, x2 >= 1.

A record is a vector whose ||x1 a1 + x2 a2|| is certainly smaller than that
of every vector of smaller height max(x1, x2).  Below ``exhaustive_limit``
every height shell is scanned.  Above it the search goes through doubling
height bands (L, 2L] and asks only for pairs whose form lies below the
current record: with the residues x2 a2 mod 1 sorted once per band, the
matching x2 for each x1 sit in one or two contiguous runs, found by binary
search.  That finds every pair below the record, so acceleration agrees
with the exhaustive walk exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .constants import derive_constants
from .numerics import RealEnclosure, enclose, log, nearest_int_dist

EXHAUSTIVE_LIMIT = 10**4
DERIVED_BITS = 96
SEED_HEIGHT = 64
CSV_HEADER = [
    "x1", "x2", "height", "form_lo", "form_hi",
    "exponent_lo", "exponent_hi", "product_phi_lo", "product_phi_hi",
]

_M64 = 1 << 64


class EmptyInput(ValueError):
    pass


class EnclosureTooWide(ValueError):
    pass


@dataclass(frozen=True)
class ApproxRecord:
    x1: int
    x2: int
    form_value: RealEnclosure
    height: int
    exponent: Optional[RealEnclosure]
    product_phi: RealEnclosure

    def csv_row(self) -> list[str]:
        def f(x):
            return "" if x is None else f"{float(x):.17g}"

        e = self.exponent
        return [
            str(self.x1), str(self.x2), str(self.height),
            f(self.form_value.lo), f(self.form_value.hi),
            f(e and e.lo), f(e and e.hi),
            f(self.product_phi.lo), f(self.product_phi.hi),
        ]


def _form(x1: int, x2: int, alpha: Sequence[RealEnclosure]) -> RealEnclosure:
    return nearest_int_dist(alpha[0] * x1 + alpha[1] * x2)


def make_record(
    x1: int, x2: int, alpha: Sequence[RealEnclosure], bits: int = DERIVED_BITS, form: Optional[RealEnclosure] = None
) -> ApproxRecord:
    """The form keeps alpha's precision; exponent and phi-product use ``bits``."""
    form = form if form is not None else _form(x1, x2, alpha)
    h = max(x1, x2)
    phi = derive_constants(max(64, bits)).phi
    H = enclose(h, bits)
    f = form.with_bits(bits)
    expo = None
    if h > 1 and f.lo > 0:
        expo = -log(f) / log(H)
    return ApproxRecord(x1, x2, form, h, expo, f * H ** phi)


class _FixedPoint:
    """x1 a1 + x2 a2 mod 1 in units of 2^-64, screened with a rigorous error."""

    def __init__(self, alpha: Sequence[RealEnclosure], height_max: int):
        w = max(a.width for a in alpha)
        if not w * height_max < Fraction(1, 256):
            raise EnclosureTooWide(f"alpha width {float(w):.3g} too large for height {height_max}")
        self.a = []
        for x in alpha:
            frac = x.lo - math.floor(x.lo)
            self.a.append(math.floor(frac * _M64))
        self.unit = 1 + math.ceil(w * _M64)
        idx = np.arange(height_max + 1, dtype=np.uint64)
        self.A = idx * np.uint64(self.a[0])
        self.B = idx * np.uint64(self.a[1])

    def err(self, h: int) -> int:
        # x1 + x2 <= 2h
        return 2 * h * self.unit + 1

    def shell(self, h: int) -> tuple[np.ndarray, np.ndarray]:
        """Distances for (h, 1..h) and (1..h-1, h)."""
        row = self.B[1 : h + 1] + np.uint64(h * self.a[0] % _M64)
        col = self.A[1:h] + np.uint64(h * self.a[1] % _M64)
        return np.minimum(row, np.uint64(0) - row), np.minimum(col, np.uint64(0) - col)


def _exact_min(cands, alpha, bits) -> tuple[tuple[int, int], RealEnclosure]:
    forms = [(c, _form(*c, alpha)) for c in cands]
    low = min(f.hi for _, f in forms)
    # enclosures that overlap the smallest are ties; break them lexicographically
    return min((cf for cf in forms if cf[1].lo <= low), key=lambda cf: cf[0])


def _improves(form: RealEnclosure, best: Optional[RealEnclosure]) -> bool:
    return best is None or form.hi < best.lo


def _exhaustive(fp: _FixedPoint, alpha, h_from: int, h_to: int, bits, records: list) -> None:
    best = records[-1][1] if records else None
    for h in range(h_from, h_to + 1):
        drow, dcol = fp.shell(h)
        d = int(drow.min())
        if len(dcol):
            d = min(d, int(dcol.min()))
        E = fp.err(h)
        if best is not None and (d - E) >= best.lo * _M64:
            continue
        lim = np.uint64(min(d + 2 * E + 2, _M64 - 1))
        cands = [(h, int(k) + 1) for k in np.nonzero(drow <= lim)[0]]
        cands += [(int(k) + 1, h) for k in np.nonzero(dcol <= lim)[0]]
        vec, form = _exact_min(cands, alpha, bits)
        if _improves(form, best):
            records.append((vec, form))
            best = form


def _pairs_below(fp: _FixedPoint, xmax: int, band: int) -> tuple[np.ndarray, np.ndarray]:
    """All (x1, x2) in [1, xmax]^2 whose screened distance is <= band."""
    band = min(band, (1 << 63) - 1)
    r2 = fp.B[1 : xmax + 1]
    order = np.argsort(r2, kind="stable")
    S = r2[order]
    x1 = np.arange(1, xmax + 1, dtype=np.int64)
    T = np.uint64(0) - fp.A[1 : xmax + 1]
    b = np.uint64(band)
    lo = T - b
    hi = T + b
    wrap = lo > hi
    s_lo = np.searchsorted(S, lo, side="left")
    s_hi = np.searchsorted(S, hi, side="right")
    n = len(S)
    # a wrapped window is [lo, 2^64) together with [0, hi]
    st1 = s_lo
    en1 = np.where(wrap, n, s_hi)
    st2 = np.zeros_like(s_lo)
    en2 = np.where(wrap, s_hi, 0)
    xs, ys = [], []
    for st, en in ((st1, en1), (st2, en2)):
        cnt = np.maximum(en - st, 0)
        total = int(cnt.sum())
        if not total:
            continue
        rep_x1 = np.repeat(x1, cnt)
        base = np.repeat(st - np.cumsum(cnt) + cnt, cnt)
        pos = base + np.arange(total)
        xs.append(rep_x1)
        ys.append(order[pos].astype(np.int64) + 1)
    if not xs:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(xs), np.concatenate(ys)


def _accelerated(fp: _FixedPoint, alpha, h_from: int, h_to: int, bits, records: list) -> None:
    L = h_from - 1
    while L < h_to:
        U = min(2 * L, h_to)
        best = records[-1][1]
        band = math.ceil(best.hi * _M64) + fp.err(U)
        X1, X2 = _pairs_below(fp, U, band)
        H = np.maximum(X1, X2)
        keep = H > L
        X1, X2, H = X1[keep], X2[keep], H[keep]
        v = fp.A[X1] + fp.B[X2]
        D = np.minimum(v, np.uint64(0) - v)
        srt = np.lexsort((X2, X1, H))
        X1, X2, H, D = X1[srt], X2[srt], H[srt], D[srt]
        cuts = np.flatnonzero(np.diff(H)) + 1
        for g in np.split(np.arange(len(H)), cuts):
            if not len(g):
                continue
            h = int(H[g[0]])
            d = int(D[g].min())
            E = fp.err(h)
            if (d - E) >= best.lo * _M64:
                continue
            sel = g[D[g] <= np.uint64(min(d + 2 * E + 2, _M64 - 1))]
            vec, form = _exact_min([(int(X1[k]), int(X2[k])) for k in sel], alpha, bits)
            if _improves(form, best):
                records.append((vec, form))
                best = form
        L = U


def positive_records(
    alpha: Sequence[RealEnclosure],
    height_max: int,
    exhaustive_limit: int = EXHAUSTIVE_LIMIT,
    method: str = "auto",
) -> list[ApproxRecord]:
    """Running-minimum records of ||x1 a1 + x2 a2|| over x1, x2 >= 1 by height.

    method: "auto" (exhaustive up to exhaustive_limit, then accelerated),
    "exhaustive", or "accelerated" (exhaustive only up to a small seed height).
    """
    if height_max < 1:
        raise ValueError("height_max must be >= 1")
    bits = max(128, max(a.bits for a in alpha))
    fp = _FixedPoint(alpha, height_max)
    cut = {"auto": exhaustive_limit, "exhaustive": height_max, "accelerated": SEED_HEIGHT}[method]
    cut = min(cut, height_max)
    found: list[tuple[tuple[int, int], RealEnclosure]] = []
    _exhaustive(fp, alpha, 1, cut, bits, found)
    if cut < height_max:
        _accelerated(fp, alpha, cut + 1, height_max, bits, found)
    return [make_record(x1, x2, alpha, form=f) for (x1, x2), f in found]


def exponent_summary(records: Sequence[ApproxRecord]) -> dict:
    if not records:
        raise EmptyInput("no records")
    with_exp = [r for r in records if r.exponent is not None]
    best = max(with_exp, key=lambda r: r.exponent.lo).exponent if with_exp else None
    return {
        "best_exponent": best,
        "product_phi_trend": [r.product_phi for r in records],
    }


def gnuplot_script(csv_path: str, png_path: str) -> str:
    """Exponent enclosure midpoints against log2(height)."""
    return "\n".join([
        "set datafile separator ','",
        "set terminal pngcairo size 900,600",
        f"set output '{png_path}'",
        "set logscale x 2",
        "set xlabel 'height max(x1, x2)'",
        "set ylabel '-log ||x1 a1 + x2 a2|| / log height'",
        "set key bottom right",
        f"plot '{csv_path}' every ::1 using 3:(($6+$7)/2) with linespoints title 'record exponent'",
        "",
    ])
