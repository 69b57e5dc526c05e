"""Exact algebra of continuous R -> R piecewise-linear functions.

Everything here works on `fractions.Fraction`; there is no float fast path.
A function is stored in normalized form: strictly increasing breakpoints,
one slope per piece with adjacent slopes distinct, and an anchor value that
pins the whole function (continuity is by construction).  Piece counting is
therefore exact: pieces == len(breakpoints) + 1.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

from .errors import ValidationError
from .rational import format_rational, frac, parse_rational, rational_vector

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _as_frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else frac(x)


@dataclass(frozen=True)
class PwlFunction1D:
    """Normalized continuous PWL function.

    `slopes` has one entry per piece (left to right, len(breakpoints) + 1 of
    them).  `anchor_x`/`anchor_y` give the value at the first breakpoint, or
    the value at 0 for a breakpoint-free (single affine piece) function.
    Instances are immutable; construct through `PwlFunction1D.build` or the
    factories below, which normalize (merge collinear neighbor pieces).
    """

    breakpoints: tuple[Fraction, ...]
    slopes: tuple[Fraction, ...]
    anchor_x: Fraction
    anchor_y: Fraction

    def __post_init__(self):
        if len(self.slopes) != len(self.breakpoints) + 1:
            raise ValidationError("need exactly one slope per piece")
        for a, b in zip(self.breakpoints, self.breakpoints[1:]):
            if not a < b:
                raise ValidationError("breakpoints must be strictly increasing")
        for a, b in zip(self.slopes, self.slopes[1:]):
            if a == b:
                raise ValidationError("not normalized: equal adjacent slopes")
        if self.breakpoints and self.anchor_x != self.breakpoints[0]:
            raise ValidationError("anchor must sit on the first breakpoint")

    # -- construction ------------------------------------------------------

    @staticmethod
    def build(breakpoints, slopes, anchor_x, anchor_y) -> "PwlFunction1D":
        """Normalize raw data: merge pieces whose slopes are exactly equal."""
        breakpoints = rational_vector(breakpoints)
        slopes = rational_vector(slopes)
        anchor_x = frac(anchor_x)
        anchor_y = frac(anchor_y)
        if len(slopes) != len(breakpoints) + 1:
            raise ValidationError("need exactly one slope per piece")
        for a, b in zip(breakpoints, breakpoints[1:]):
            if not a < b:
                raise ValidationError("breakpoints must be strictly increasing")

        values = _values_from_anchor(breakpoints, slopes, anchor_x, anchor_y)
        keep = [
            i for i in range(len(breakpoints)) if slopes[i] != slopes[i + 1]
        ]
        new_breaks = tuple(breakpoints[i] for i in keep)
        new_slopes = (slopes[0],) + tuple(slopes[i + 1] for i in keep)
        if new_breaks:
            idx = keep[0]
            return PwlFunction1D(new_breaks, new_slopes, breakpoints[idx], values[idx])
        # Single affine piece: anchor at x = 0.
        y0 = anchor_y + slopes[0] * (_ZERO - anchor_x)
        return PwlFunction1D((), new_slopes, _ZERO, y0)

    @staticmethod
    def affine(slope, intercept) -> "PwlFunction1D":
        return PwlFunction1D((), (frac(slope),), _ZERO, frac(intercept))

    @staticmethod
    def constant(value) -> "PwlFunction1D":
        return PwlFunction1D.affine(0, value)

    @staticmethod
    def identity() -> "PwlFunction1D":
        return PwlFunction1D.affine(1, 0)

    @staticmethod
    def relu() -> "PwlFunction1D":
        return PwlFunction1D((_ZERO,), (_ZERO, _ONE), _ZERO, _ZERO)

    @staticmethod
    def interpolate(points, left_slope, right_slope) -> "PwlFunction1D":
        """PWL through the given (x, y) nodes with prescribed tail slopes."""
        pts = sorted((frac(x), frac(y)) for x, y in points)
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        if len(set(xs)) != len(xs):
            raise ValidationError("interpolation nodes must have distinct x")
        slopes = [frac(left_slope)]
        for i in range(len(xs) - 1):
            slopes.append((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
        slopes.append(frac(right_slope))
        return PwlFunction1D.build(xs, slopes, xs[0], ys[0])

    # -- queries -----------------------------------------------------------

    @property
    def piece_count(self) -> int:
        return len(self.breakpoints) + 1

    def pieces_in_interval(self, lo, hi) -> int:
        """Pieces of the restriction to [lo, hi] (Definition-2 counting)."""
        lo, hi = frac(lo), frac(hi)
        if hi < lo:
            raise ValidationError("empty interval")
        return 1 + sum(1 for b in self.breakpoints if lo < b < hi)

    def breakpoint_values(self) -> tuple[Fraction, ...]:
        return _values_from_anchor(
            self.breakpoints, self.slopes, self.anchor_x, self.anchor_y
        )

    def evaluate(self, x) -> Fraction:
        x = _as_frac(x)
        if not self.breakpoints:
            return self.anchor_y + self.slopes[0] * (x - self.anchor_x)
        values = self.breakpoint_values()
        i = bisect_right(self.breakpoints, x)
        if i == 0:
            return values[0] + self.slopes[0] * (x - self.breakpoints[0])
        return values[i - 1] + self.slopes[i] * (x - self.breakpoints[i - 1])

    __call__ = evaluate

    def slope_at(self, x) -> Fraction:
        """Slope of the piece containing x (right piece if x is a breakpoint)."""
        x = _as_frac(x)
        return self.slopes[bisect_right(self.breakpoints, x)]

    @property
    def left_slope(self) -> Fraction:
        return self.slopes[0]

    @property
    def right_slope(self) -> Fraction:
        return self.slopes[-1]

    def scale(self, c) -> "PwlFunction1D":
        c = frac(c)
        if c == 0:
            return PwlFunction1D.constant(0)
        return PwlFunction1D(
            self.breakpoints,
            tuple(s * c for s in self.slopes),
            self.anchor_x,
            self.anchor_y * c,
        )

    def shift(self, c) -> "PwlFunction1D":
        """f + c (vertical shift)."""
        c = frac(c)
        return PwlFunction1D(
            self.breakpoints, self.slopes, self.anchor_x, self.anchor_y + c
        )

    def __neg__(self) -> "PwlFunction1D":
        return self.scale(-1)

    def __add__(self, other) -> "PwlFunction1D":
        if isinstance(other, PwlFunction1D):
            return add(self, other)
        return self.shift(other)

    def __sub__(self, other) -> "PwlFunction1D":
        if isinstance(other, PwlFunction1D):
            return add(self, -other)
        return self.shift(-frac(other))

    # -- serialization (pwl-v1) ---------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "format": "pwl-v1",
            "left_slope": format_rational(self.slopes[0]),
            "anchor": {
                "x": format_rational(self.anchor_x),
                "y": format_rational(self.anchor_y),
            },
            "breakpoints": [format_rational(b) for b in self.breakpoints],
            "slopes": [format_rational(s) for s in self.slopes[1:]],
        }

    @staticmethod
    def from_json_dict(data: dict) -> "PwlFunction1D":
        try:
            breaks = [parse_rational(b) for b in data["breakpoints"]]
            slopes = [parse_rational(data["left_slope"])] + [
                parse_rational(s) for s in data["slopes"]
            ]
            ax = parse_rational(data["anchor"]["x"])
            ay = parse_rational(data["anchor"]["y"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed pwl-v1 object: {exc}") from exc
        return PwlFunction1D(tuple(breaks), tuple(slopes), ax, ay)


def _values_from_anchor(breakpoints, slopes, anchor_x, anchor_y):
    """Values at the breakpoints implied by the anchor and the slopes."""
    if not breakpoints:
        return ()
    values = [None] * len(breakpoints)
    base_i = min(range(len(breakpoints)), key=lambda i: abs(breakpoints[i] - anchor_x))
    values[base_i] = anchor_y + _integrate(
        breakpoints, slopes, anchor_x, breakpoints[base_i]
    )
    for i in range(base_i + 1, len(breakpoints)):
        values[i] = values[i - 1] + slopes[i] * (breakpoints[i] - breakpoints[i - 1])
    for i in range(base_i - 1, -1, -1):
        values[i] = values[i + 1] - slopes[i + 1] * (breakpoints[i + 1] - breakpoints[i])
    return tuple(values)


def _integrate(breakpoints, slopes, x_from, x_to):
    """Integral of the slope function from x_from to x_to (signed)."""
    if x_from == x_to:
        return _ZERO
    sign = 1
    if x_from > x_to:
        x_from, x_to = x_to, x_from
        sign = -1
    total = _ZERO
    cuts = [x_from] + [b for b in breakpoints if x_from < b < x_to] + [x_to]
    for a, b in zip(cuts, cuts[1:]):
        mid = (a + b) / 2
        total += slopes[bisect_right(breakpoints, mid)] * (b - a)
    return sign * total


# ----------------------------------------------------------------------------
# Algebra
# ----------------------------------------------------------------------------


def _sample_points(cuts):
    """One probe per interval of the subdivision induced by `cuts`."""
    if not cuts:
        return [_ZERO]
    pts = [cuts[0] - 1]
    for a, b in zip(cuts, cuts[1:]):
        pts.append((a + b) / 2)
    pts.append(cuts[-1] + 1)
    return pts


def _from_cuts(cuts, slope_fn, value_fn):
    """Assemble a normalized PWL from a subdivision and per-interval slopes."""
    if not cuts:
        x0 = _ZERO
        return PwlFunction1D.build((), (slope_fn(x0),), x0, value_fn(x0))
    slopes = [slope_fn(p) for p in _sample_points(cuts)]
    return PwlFunction1D.build(cuts, slopes, cuts[0], value_fn(cuts[0]))


def add(f: PwlFunction1D, g: PwlFunction1D) -> PwlFunction1D:
    """Exact pointwise sum; pieces(f + g) <= pieces(f) + pieces(g) - 1."""
    cuts = sorted(set(f.breakpoints) | set(g.breakpoints))
    return _from_cuts(
        cuts,
        lambda x: f.slope_at(x) + g.slope_at(x),
        lambda x: f.evaluate(x) + g.evaluate(x),
    )


def compose(outer: PwlFunction1D, inner: PwlFunction1D) -> PwlFunction1D:
    """Exact composition outer(inner(x)).

    Breakpoints of the result are the inner breakpoints plus the preimages of
    the outer breakpoints under the inner function, all computed exactly.
    """
    cand = set(inner.breakpoints)
    for yb in outer.breakpoints:
        cand |= set(_preimages(inner, yb))
    cuts = sorted(cand)

    def slope(x):
        s_in = inner.slope_at(x)
        if s_in == 0:
            return _ZERO
        return s_in * outer.slope_at(inner.evaluate(x))

    return _from_cuts(cuts, slope, lambda x: outer.evaluate(inner.evaluate(x)))


def _preimages(f: PwlFunction1D, y: Fraction):
    """All isolated solutions of f(x) = y (pieces where f is flat contribute
    no interior solutions; their endpoints are already breakpoints of f)."""
    out = []
    if not f.breakpoints:
        if f.slopes[0] != 0:
            out.append(f.anchor_x + (y - f.anchor_y) / f.slopes[0])
        return out
    values = f.breakpoint_values()
    bks = f.breakpoints
    # Leftmost unbounded piece.
    if f.slopes[0] != 0:
        x = bks[0] + (y - values[0]) / f.slopes[0]
        if x <= bks[0]:
            out.append(x)
    # Bounded pieces.
    for i in range(len(bks) - 1):
        s = f.slopes[i + 1]
        if s != 0:
            x = bks[i] + (y - values[i]) / s
            if bks[i] <= x <= bks[i + 1]:
                out.append(x)
    # Rightmost unbounded piece.
    if f.slopes[-1] != 0:
        x = bks[-1] + (y - values[-1]) / f.slopes[-1]
        if x >= bks[-1]:
            out.append(x)
    return out


def max_pwl(f: PwlFunction1D, g: PwlFunction1D) -> PwlFunction1D:
    """Exact pointwise maximum; crossing points become breakpoints."""
    d = add(f, -g)
    cand = set(f.breakpoints) | set(g.breakpoints) | set(_preimages(d, _ZERO))
    cuts = sorted(cand)

    def slope(x):
        return f.slope_at(x) if d.evaluate(x) >= 0 else g.slope_at(x)

    def value(x):
        return max(f.evaluate(x), g.evaluate(x))

    return _from_cuts(cuts, slope, value)


def min_pwl(f: PwlFunction1D, g: PwlFunction1D) -> PwlFunction1D:
    return -max_pwl(-f, -g)


# ----------------------------------------------------------------------------
# Sawtooth hard family
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class SawtoothParams:
    """k layers of oscillation anchors, each strictly inside (0, M).

    Layer vectors all have the same length w - 1, so the composed function
    has w^k pieces in [0, M].
    """

    M: Fraction
    layers: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "M", frac(self.M))
        object.__setattr__(
            self, "layers", tuple(rational_vector(layer) for layer in self.layers)
        )
        if self.M <= 0:
            raise ValidationError("M must be positive")
        if not self.layers:
            raise ValidationError("need at least one layer (k >= 1)")
        width = len(self.layers[0])
        for layer in self.layers:
            if len(layer) != width:
                raise ValidationError("all layers must have the same width")
            if not layer:
                raise ValidationError("each layer needs at least one anchor (w >= 2)")
            prev = _ZERO
            for a in layer:
                if not prev < a:
                    raise ValidationError(
                        "layer anchors must satisfy 0 < a_1 < ... < a_p < M"
                    )
                prev = a
            if not layer[-1] < self.M:
                raise ValidationError("layer anchors must stay below M")

    @property
    def w(self) -> int:
        return len(self.layers[0]) + 1

    @property
    def k(self) -> int:
        return len(self.layers)

    @staticmethod
    def uniform(w: int, k: int, M=1) -> "SawtoothParams":
        """The evenly spaced instance a = (M/w, ..., (w-1)M/w) in every layer."""
        if w < 2 or k < 1:
            raise ValidationError("need w >= 2 and k >= 1")
        M = frac(M)
        layer = tuple(Fraction(i, w) * M for i in range(1, w))
        return SawtoothParams(M, tuple(layer for _ in range(k)))


def sawtooth_layer(anchors, M) -> PwlFunction1D:
    """Single oscillation: 0 left of 0, hits M at odd anchors and 0 at even
    ones, linear continuation beyond the last segment."""
    params = SawtoothParams(frac(M), (tuple(anchors),))
    (layer,) = params.layers
    M = params.M
    xs = [_ZERO] + list(layer)
    ys = [_ZERO] + [M * (i % 2) for i in range(1, len(layer) + 1)]
    last = M - ys[-1]
    right_slope = (last - ys[-1]) / (M - xs[-1])
    slopes = [_ZERO]
    for i in range(len(xs) - 1):
        slopes.append((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
    slopes.append(right_slope)
    return PwlFunction1D.build(xs, slopes, xs[0], ys[0])


def sawtooth(params: SawtoothParams) -> PwlFunction1D:
    """The k-fold composition of the per-layer oscillations."""
    result = None
    for layer in params.layers:
        h = sawtooth_layer(layer, params.M)
        result = h if result is None else compose(h, result)
    return result


# ----------------------------------------------------------------------------
# L1 distance and the depth-gap bound formulas
# ----------------------------------------------------------------------------


def l1_distance(f: PwlFunction1D, g: PwlFunction1D, interval) -> Fraction:
    """Exact integral of |f - g| over [lo, hi].

    The difference is PWL; zero crossings are found exactly, so each
    subinterval has a sign-constant integrand and the trapezoid rule is exact.
    """
    lo, hi = frac(interval[0]), frac(interval[1])
    if hi < lo:
        raise ValidationError("interval is empty")
    if hi == lo:
        return _ZERO
    d = add(f, -g)
    cuts = {lo, hi}
    cuts |= {b for b in d.breakpoints if lo < b < hi}
    cuts |= {z for z in _preimages(d, _ZERO) if lo < z < hi}
    xs = sorted(cuts)
    total = _ZERO
    prev_x = xs[0]
    prev_v = d.evaluate(prev_x)
    for x in xs[1:]:
        v = d.evaluate(x)
        total += (abs(prev_v) + abs(v)) * (x - prev_x) / 2
        prev_x, prev_v = x, v
    return total


def gap_lower_bound(w: int, k: int, p: int) -> Fraction:
    """Certified L1 gap between the w^k-piece sawtooth and any p-piece
    comparator on [0, 1]: max(0, (floor(w^k / 2) - (p - 1)) / (2 w^k))."""
    if w < 2 or k < 1 or p < 1:
        raise ValidationError("need w >= 2, k >= 1, p >= 1")
    q = w**k
    protected = q // 2 - (p - 1)
    if protected <= 0:
        return _ZERO
    return Fraction(protected, 2 * q)


def gap_lower_bound_loose(w: int, k: int, p: int) -> Fraction:
    """The looser closed form 1/4 - (2p - 1) / (4 w^k), floored at 0."""
    if w < 2 or k < 1 or p < 1:
        raise ValidationError("need w >= 2, k >= 1, p >= 1")
    bound = Fraction(1, 4) - Fraction(2 * p - 1, 4 * w**k)
    return max(_ZERO, bound)


def comparator_size_bound(w: int, k: int, k_prime: int, delta: float) -> float:
    """Size cap on depth-(k'+1) comparators below which the L1 gap delta is
    certified: k' * w^(k/k') * (1 - 4 delta)^(1/k') / 2^(1 + 1/k')."""
    if not 0 < delta < 0.25:
        raise ValidationError("delta must lie in (0, 1/4)")
    return (
        k_prime
        * w ** (k / k_prime)
        * (1 - 4 * delta) ** (1 / k_prime)
        / 2 ** (1 + 1 / k_prime)
    )


# ----------------------------------------------------------------------------
# Flap decomposition (the 2-layer representation witness)
# ----------------------------------------------------------------------------

LEFT = "left"
RIGHT = "right"


@dataclass(frozen=True)
class FlapSpec:
    """One-breakpoint PWL that vanishes on one side of its breakpoint.

    right: 0 for x <= a, slope*(x - a) beyond.
    left:  slope*(x - a) for x <= a, 0 beyond.
    """

    kind: str
    breakpoint: Fraction
    slope: Fraction

    def __post_init__(self):
        if self.kind not in (LEFT, RIGHT):
            raise ValidationError("flap kind must be 'left' or 'right'")
        object.__setattr__(self, "breakpoint", frac(self.breakpoint))
        object.__setattr__(self, "slope", frac(self.slope))

    def to_pwl(self) -> PwlFunction1D:
        a = self.breakpoint
        if self.kind == RIGHT:
            return PwlFunction1D.build((a,), (_ZERO, self.slope), a, _ZERO)
        return PwlFunction1D.build((a,), (self.slope, _ZERO), a, _ZERO)

    def evaluate(self, x) -> Fraction:
        x = _as_frac(x)
        if self.kind == RIGHT:
            return self.slope * (x - self.breakpoint) if x > self.breakpoint else _ZERO
        return self.slope * (x - self.breakpoint) if x <= self.breakpoint else _ZERO


@dataclass(frozen=True)
class FlapDecomposition:
    flaps: tuple[FlapSpec, ...]
    constant: Fraction

    def reconstruct(self) -> PwlFunction1D:
        total = PwlFunction1D.constant(self.constant)
        for flap in self.flaps:
            total = add(total, flap.to_pwl())
        return total

    def evaluate(self, x) -> Fraction:
        return self.constant + sum(f.evaluate(x) for f in self.flaps)


def decompose_flaps(f: PwlFunction1D) -> FlapDecomposition:
    """Write f as (sum of one-ReLU flaps) + constant.

    For p >= 2 pieces this uses p flaps, or p - 1 when a tail slope is zero:
    the zero right flap is simply dropped, and when only the left tail is flat
    the mirrored decomposition (left flap at the first breakpoint plus right
    flaps) is used so that the zero flap drops there instead.  Zero-slope
    interior flaps are kept: they are genuine solutions of the triangular
    system and keep the flap count at exactly p or p - 1.
    """
    bks = f.breakpoints
    if not bks:
        s = f.slopes[0]
        if s == 0:
            return FlapDecomposition((), f.anchor_y)
        flaps = (FlapSpec(LEFT, _ZERO, s), FlapSpec(RIGHT, _ZERO, s))
        return FlapDecomposition(flaps, f.evaluate(0))
    values = f.breakpoint_values()
    s_l, s_r = f.slopes[0], f.slopes[-1]
    m1 = len(bks)  # number of breakpoints = pieces - 1

    if s_l == 0 and s_r != 0:
        # Mirror: constant = value at the FIRST breakpoint, right flaps only.
        c = values[0]
        shifted = [v - c for v in values]
        r = [None] * m1
        for i in range(1, m1):
            acc = sum(
                r[j] * (bks[i] - bks[j]) for j in range(i - 1)
            )
            r[i - 1] = (shifted[i] - acc) / (bks[i] - bks[i - 1])
        r[m1 - 1] = s_r - sum(r[:-1])
        flaps = tuple(FlapSpec(RIGHT, bks[j], r[j]) for j in range(m1))
        return FlapDecomposition(flaps, c)

    # Standard: constant = value at the LAST breakpoint, one right flap there
    # plus left flaps at every breakpoint (dropped if s_r == 0).
    c = values[-1]
    shifted = [v - c for v in values]
    t = [None] * m1
    for i in range(m1 - 2, -1, -1):
        acc = sum(t[j] * (bks[i] - bks[j]) for j in range(i + 2, m1))
        t[i + 1] = (shifted[i] - acc) / (bks[i] - bks[i + 1])
    t[0] = s_l - sum(t[1:])
    flaps = [FlapSpec(LEFT, bks[j], t[j]) for j in range(m1)]
    if s_r != 0:
        flaps.append(FlapSpec(RIGHT, bks[-1], s_r))
    return FlapDecomposition(tuple(flaps), c)


# ----------------------------------------------------------------------------
# Probe sets shared by builder/round-trip tests
# ----------------------------------------------------------------------------


def probe_points(f: PwlFunction1D, offset=Fraction(1, 128)) -> list[Fraction]:
    """Midpoints of every piece plus each breakpoint and breakpoint +- offset."""
    offset = frac(offset)
    if not f.breakpoints:
        return [Fraction(-1), _ZERO, _ONE]
    pts = []
    bks = f.breakpoints
    pts.append(bks[0] - 1)
    for b in bks:
        pts.extend([b - offset, b, b + offset])
    for a, b in zip(bks, bks[1:]):
        pts.append((a + b) / 2)
    pts.append(bks[-1] + 1)
    return sorted(set(pts))
