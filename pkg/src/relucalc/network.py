"""ReLU network data model and the constructive representation builders.

Networks are chains of exact rational affine maps with componentwise
`max(0, .)` between them.  Every builder's depth/size accounting is exact, so
the composition/addition/max/affine-embedding bookkeeping can be asserted as
inequalities in tests.  The output map may carry a bias behind the
`output_bias_allowed` flag (the strict data model makes the output map linear;
the 2-layer representation of a PWL function genuinely needs the constant, so
builders set the flag and record it).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import BudgetExceededError, ValidationError
from .pwl import (
    PwlFunction1D,
    SawtoothParams,
    add,
    decompose_flaps,
    max_pwl,
    sawtooth_layer,
)
from .rational import format_rational, frac, parse_rational, rational_vector

_ZERO = Fraction(0)
_ONE = Fraction(1)
_HALF = Fraction(1, 2)


@dataclass(frozen=True)
class AffineMap:
    """x -> W x + b with exact rational entries (out_dim x in_dim)."""

    weights: tuple[tuple[Fraction, ...], ...]
    bias: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "weights", tuple(rational_vector(row) for row in self.weights)
        )
        object.__setattr__(self, "bias", rational_vector(self.bias))
        if len(self.weights) != len(self.bias):
            raise ValidationError("one bias entry per output row required")
        widths = {len(row) for row in self.weights}
        if len(widths) > 1:
            raise ValidationError("ragged weight matrix")

    @property
    def out_dim(self) -> int:
        return len(self.weights)

    @property
    def in_dim(self) -> int:
        return len(self.weights[0]) if self.weights else 0

    @property
    def is_linear(self) -> bool:
        return all(b == 0 for b in self.bias)

    def apply(self, x):
        if len(x) != self.in_dim:
            raise ValidationError(
                f"expected input of dim {self.in_dim}, got {len(x)}"
            )
        return tuple(
            sum(w * xi for w, xi in zip(row, x)) + b
            for row, b in zip(self.weights, self.bias)
        )

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """self(inner(x)) as a single affine map."""
        if inner.out_dim != self.in_dim:
            raise ValidationError("affine composition dimension mismatch")
        weights = tuple(
            tuple(
                sum(row[k] * inner.weights[k][j] for k in range(self.in_dim))
                for j in range(inner.in_dim)
            )
            for row in self.weights
        )
        bias = tuple(
            sum(row[k] * inner.bias[k] for k in range(self.in_dim)) + b
            for row, b in zip(self.weights, self.bias)
        )
        return AffineMap(weights, bias)

    def negate(self) -> "AffineMap":
        return AffineMap(
            tuple(tuple(-w for w in row) for row in self.weights),
            tuple(-b for b in self.bias),
        )

    @staticmethod
    def identity(n: int) -> "AffineMap":
        return AffineMap(
            tuple(
                tuple(_ONE if i == j else _ZERO for j in range(n)) for i in range(n)
            ),
            (_ZERO,) * n,
        )

    @staticmethod
    def vstack(maps) -> "AffineMap":
        """Stack maps sharing the same input space: rows concatenated."""
        maps = list(maps)
        in_dims = {m.in_dim for m in maps}
        if len(in_dims) > 1:
            raise ValidationError("vstack needs equal input dims")
        weights = tuple(row for m in maps for row in m.weights)
        bias = tuple(b for m in maps for b in m.bias)
        return AffineMap(weights, bias)

    @staticmethod
    def block_diag(maps) -> "AffineMap":
        """Independent blocks: inputs concatenated, outputs concatenated."""
        maps = list(maps)
        total_in = sum(m.in_dim for m in maps)
        weights = []
        bias = []
        offset = 0
        for m in maps:
            for row, b in zip(m.weights, m.bias):
                full = [_ZERO] * total_in
                for j, w in enumerate(row):
                    full[offset + j] = w
                weights.append(tuple(full))
                bias.append(b)
            offset += m.in_dim
        return AffineMap(tuple(weights), tuple(bias))

    def to_json_dict(self) -> dict:
        return {
            "weights": [[format_rational(w) for w in row] for row in self.weights],
            "bias": [format_rational(b) for b in self.bias],
        }

    @staticmethod
    def from_json_dict(data: dict) -> "AffineMap":
        try:
            weights = tuple(
                tuple(parse_rational(w) for w in row) for row in data["weights"]
            )
            bias = tuple(parse_rational(b) for b in data["bias"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed affine map: {exc}") from exc
        return AffineMap(weights, bias)


def _relu_vec(x):
    zero = _ZERO if x and isinstance(x[0], Fraction) else 0
    return tuple(v if v > 0 else zero for v in x)


@dataclass(frozen=True)
class ReluNetwork:
    """T_out o sigma o T_k o ... o sigma o T_1, all maps exact rational.

    depth = number of affine maps (= hidden layers + 1); size = total hidden
    units.  `hidden` may be empty, in which case the network is a bare affine
    map of depth 1 (useful as a composition unit).
    """

    input_dim: int
    hidden: tuple[AffineMap, ...]
    output: AffineMap
    output_bias_allowed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(self.hidden))
        cur = self.input_dim
        for i, layer in enumerate(self.hidden):
            if layer.in_dim != cur:
                raise ValidationError(f"hidden layer {i} expects dim {cur}")
            cur = layer.out_dim
        if self.output.in_dim != cur:
            raise ValidationError("output map input dim mismatch")
        if not self.output_bias_allowed and not self.output.is_linear:
            raise ValidationError("output bias present but not allowed")

    @property
    def depth(self) -> int:
        return len(self.hidden) + 1

    @property
    def width(self) -> int:
        return max((layer.out_dim for layer in self.hidden), default=0)

    @property
    def size(self) -> int:
        return sum(layer.out_dim for layer in self.hidden)

    @property
    def hidden_widths(self) -> tuple[int, ...]:
        return tuple(layer.out_dim for layer in self.hidden)

    @property
    def output_dim(self) -> int:
        return self.output.out_dim

    def forward(self, x):
        if len(x) != self.input_dim:
            raise ValidationError(
                f"expected input of dim {self.input_dim}, got {len(x)}"
            )
        cur = tuple(x)
        for layer in self.hidden:
            cur = _relu_vec(layer.apply(cur))
        return self.output.apply(cur)

    def forward_scalar(self, x):
        out = self.forward((frac(x),))
        if len(out) != 1:
            raise ValidationError("network output is not scalar")
        return out[0]

    def to_json_dict(self) -> dict:
        return {
            "format": "relu-net-v1",
            "input_dim": self.input_dim,
            "layers": [layer.to_json_dict() for layer in self.hidden],
            "output": self.output.to_json_dict(),
            "output_bias_allowed": self.output_bias_allowed,
        }

    @staticmethod
    def from_json_dict(data: dict) -> "ReluNetwork":
        try:
            hidden = tuple(AffineMap.from_json_dict(d) for d in data["layers"])
            output = AffineMap.from_json_dict(data["output"])
            return ReluNetwork(
                int(data["input_dim"]),
                hidden,
                output,
                bool(data["output_bias_allowed"]),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed relu-net-v1 object: {exc}") from exc


# ----------------------------------------------------------------------------
# Constructive builders
# ----------------------------------------------------------------------------


def affine_only_net(T: AffineMap) -> ReluNetwork:
    """Depth-1 wrapper around a bare affine map (size 0)."""
    return ReluNetwork(T.in_dim, (), T, output_bias_allowed=not T.is_linear)


def affine_net(T: AffineMap) -> ReluNetwork:
    """2-layer embedding of an affine map: T = I o sigma o T - I o sigma o (-T).

    Size is exactly 2 * out_dim; no output bias is needed.
    """
    m = T.out_dim
    hidden = AffineMap.vstack([T, T.negate()])
    out_rows = tuple(
        tuple(
            (_ONE if j == i else _ZERO) if j < m else (-_ONE if j == m + i else _ZERO)
            for j in range(2 * m)
        )
        for i in range(m)
    )
    output = AffineMap(out_rows, (_ZERO,) * m)
    return ReluNetwork(T.in_dim, (hidden,), output, output_bias_allowed=False)


def from_pwl_2layer(f: PwlFunction1D) -> ReluNetwork:
    """Depth-2 network computing f, one hidden unit per flap.

    Size is at most p (the piece count), and exactly p - 1 whenever a tail
    slope is zero.  A non-constant single-piece (affine) input falls back to
    the affine embedding of size 2; a constant becomes a hidden-free net.
    """
    if not f.breakpoints and f.slopes[0] != 0:
        net = affine_net(AffineMap(((f.slopes[0],),), (f.evaluate(0),)))
        return ReluNetwork(1, net.hidden, net.output, output_bias_allowed=True)
    dec = decompose_flaps(f)
    if not dec.flaps:
        return affine_only_net(AffineMap(((_ZERO,),), (dec.constant,)))
    rows = []
    out_weights = []
    for flap in dec.flaps:
        if flap.kind == "right":
            # slope * relu(x - a)
            rows.append((_ONE, -flap.breakpoint))
            out_weights.append(flap.slope)
        else:
            # -slope * relu(a - x) equals slope*(x-a) left of a, 0 beyond
            rows.append((-_ONE, flap.breakpoint))
            out_weights.append(-flap.slope)
    hidden = AffineMap(
        tuple((row[0],) for row in rows), tuple(row[1] for row in rows)
    )
    output = AffineMap((tuple(out_weights),), (dec.constant,))
    return ReluNetwork(1, (hidden,), output, output_bias_allowed=True)


def compose_nets(outer: ReluNetwork, inner: ReluNetwork) -> ReluNetwork:
    """Network computing outer(inner(x)).

    The inner output map fuses with the outer first map, so
    depth = depth(outer) + depth(inner) - 1 and size = size(outer) + size(inner).
    """
    if inner.output_dim != outer.input_dim:
        raise ValidationError("composition dimension mismatch")
    inner_maps = [*inner.hidden, inner.output]
    outer_maps = [*outer.hidden, outer.output]
    fused = outer_maps[0].compose(inner_maps[-1])
    maps = inner_maps[:-1] + [fused] + outer_maps[1:]
    return ReluNetwork(
        inner.input_dim,
        tuple(maps[:-1]),
        maps[-1],
        output_bias_allowed=outer.output_bias_allowed or inner.output_bias_allowed,
    )


def pad_to_depth(net: ReluNetwork, depth: int) -> ReluNetwork:
    """Extend depth with identity blocks (2 units per output scalar per layer)."""
    if depth < net.depth:
        raise ValidationError("cannot shrink depth")
    while net.depth < depth:
        m = net.output_dim
        new_hidden = net.hidden + (AffineMap.vstack([net.output, net.output.negate()]),)
        out_rows = tuple(
            tuple(
                (_ONE if j == i else _ZERO)
                if j < m
                else (-_ONE if j == m + i else _ZERO)
                for j in range(2 * m)
            )
            for i in range(m)
        )
        net = ReluNetwork(
            net.input_dim,
            new_hidden,
            AffineMap(out_rows, (_ZERO,) * m),
            output_bias_allowed=net.output_bias_allowed,
        )
    return net


def stack_nets(nets) -> ReluNetwork:
    """Evaluate several nets on the same input; outputs concatenated.

    Depths are equalized first via identity padding.
    """
    nets = list(nets)
    if not nets:
        raise ValidationError("stack_nets needs at least one network")
    in_dims = {net.input_dim for net in nets}
    if len(in_dims) > 1:
        raise ValidationError("stack_nets needs equal input dims")
    depth = max(net.depth for net in nets)
    nets = [pad_to_depth(net, depth) for net in nets]
    if depth == 1:
        return affine_only_net(AffineMap.vstack([net.output for net in nets]))
    hidden = [AffineMap.vstack([net.hidden[0] for net in nets])]
    for level in range(1, depth - 1):
        hidden.append(AffineMap.block_diag([net.hidden[level] for net in nets]))
    output = AffineMap.block_diag([net.output for net in nets])
    return ReluNetwork(
        nets[0].input_dim,
        tuple(hidden),
        output,
        output_bias_allowed=any(net.output_bias_allowed for net in nets),
    )


def weighted_sum_nets(nets, coefficients, constant=0) -> ReluNetwork:
    """Sum of nets with rational coefficients (vector outputs supported)."""
    nets = list(nets)
    coefficients = [frac(c) for c in coefficients]
    out_dims = {net.output_dim for net in nets}
    if len(out_dims) > 1:
        raise ValidationError("summands must share the output dim")
    m = out_dims.pop()
    stacked = stack_nets(nets)
    rows = tuple(
        tuple(
            coefficients[j // m] if j % m == i else _ZERO
            for j in range(m * len(nets))
        )
        for i in range(m)
    )
    constant = frac(constant)
    combine = AffineMap(rows, (constant,) * m)
    result = compose_nets(affine_only_net(combine), stacked)
    allowed = result.output_bias_allowed or constant != 0
    return ReluNetwork(result.input_dim, result.hidden, result.output, allowed)


def add_nets(f_net: ReluNetwork, g_net: ReluNetwork) -> ReluNetwork:
    """Pointwise sum; size s1 + s2 for equal depths (padding reported in size
    otherwise)."""
    if f_net.input_dim != g_net.input_dim:
        raise ValidationError("add_nets needs equal input dims")
    if f_net.output_dim != g_net.output_dim:
        raise ValidationError("add_nets needs equal output dims")
    return weighted_sum_nets([f_net, g_net], [1, 1])


_MAX_GADGET_HIDDEN = AffineMap(
    (
        (_ONE, _ONE),
        (-_ONE, -_ONE),
        (_ONE, -_ONE),
        (-_ONE, _ONE),
    ),
    (_ZERO,) * 4,
)
_MAX_GADGET_OUTPUT = AffineMap(((_HALF, -_HALF, _HALF, _HALF),), (_ZERO,))


def max_gadget_net() -> ReluNetwork:
    """The 4-unit depth-2 net computing max{x1, x2} = (x1+x2)/2 + |x1-x2|/2."""
    return ReluNetwork(
        2, (_MAX_GADGET_HIDDEN,), _MAX_GADGET_OUTPUT, output_bias_allowed=False
    )


def _max2(a: ReluNetwork, b: ReluNetwork) -> ReluNetwork:
    return compose_nets(max_gadget_net(), stack_nets([a, b]))


def max_nets(nets) -> ReluNetwork:
    """Binary-tree pointwise maximum of scalar-output networks.

    Depth <= max depth + ceil(log2 m); size <= sum(sizes) + 4(2m - 1) for
    equal-depth inputs (unequal depths add identity padding, reported in the
    true size).
    """
    nets = list(nets)
    if not nets:
        raise ValidationError("max_nets needs at least one network")
    for net in nets:
        if net.output_dim != 1:
            raise ValidationError("max_nets needs scalar outputs")
    if len(nets) == 1:
        return nets[0]
    half = len(nets) // 2
    return _max2(max_nets(nets[:half]), max_nets(nets[half:]))


@dataclass(frozen=True)
class HingeForm:
    """Signed sum of maxima of small affine families: sum_j s_j max_i l_i.

    Each term's family has at most n + 1 members, which is what bounds the
    depth of `from_hinge` at ceil(log2(n+1)) + 1.
    """

    terms: tuple[tuple[int, tuple[AffineMap, ...]], ...]

    def __post_init__(self):
        if not self.terms:
            raise ValidationError("hinge form needs at least one term")
        n = self.input_dim
        for sign, affines in self.terms:
            if sign not in (-1, 1):
                raise ValidationError("term signs must be +-1")
            if not affines:
                raise ValidationError("each term needs at least one affine")
            for aff in affines:
                if aff.out_dim != 1:
                    raise ValidationError("hinge affines must be scalar")
                if aff.in_dim != n:
                    raise ValidationError("hinge affines must share the input dim")
            if len(affines) > n + 1:
                raise ValidationError(
                    f"term has {len(affines)} affines; at most n+1 = {n + 1} allowed"
                )

    @property
    def input_dim(self) -> int:
        return self.terms[0][1][0].in_dim

    def evaluate(self, x):
        return sum(
            sign * max(aff.apply(x)[0] for aff in affines)
            for sign, affines in self.terms
        )


def from_hinge(h: HingeForm) -> ReluNetwork:
    """Network for a hinge form; depth <= ceil(log2(n+1)) + 1."""
    term_nets = []
    signs = []
    for sign, affines in h.terms:
        if len(affines) == 1:
            term_nets.append(affine_net(affines[0]))
        else:
            term_nets.append(max_nets([affine_only_net(a) for a in affines]))
        signs.append(sign)
    if len(term_nets) == 1 and signs[0] == 1:
        return term_nets[0]
    return weighted_sum_nets(term_nets, signs)


def sawtooth_net(params: SawtoothParams) -> ReluNetwork:
    """The (k+1)-layer, size w*k network computing the composed sawtooth."""
    net = None
    for layer in params.layers:
        layer_net = from_pwl_2layer(sawtooth_layer(layer, params.M))
        net = layer_net if net is None else compose_nets(layer_net, net)
    return net


# ----------------------------------------------------------------------------
# Exact 1-D extraction and the size/piece bound formulas
# ----------------------------------------------------------------------------


def extract_pwl(net: ReluNetwork, max_breakpoints: int = 10**6) -> PwlFunction1D:
    """The exact PWL function computed by a scalar-in scalar-out network.

    Propagates exact PWL values through every neuron (affine-combine, then
    clip at zero).  Raises BudgetExceededError past `max_breakpoints`
    intermediate breakpoints.
    """
    if net.input_dim != 1:
        raise ValidationError("extract_pwl needs input dim 1")
    if net.output_dim != 1:
        raise ValidationError("extract_pwl needs scalar output")

    def combine(pwls, row, bias):
        acc = PwlFunction1D.constant(bias)
        for w, p in zip(row, pwls):
            if w != 0:
                acc = add(acc, p.scale(w))
        return acc

    zero = PwlFunction1D.constant(0)
    current = [PwlFunction1D.identity()]
    for layer in net.hidden:
        nxt = []
        for row, b in zip(layer.weights, layer.bias):
            pre = combine(current, row, b)
            nxt.append(max_pwl(pre, zero))
        current = nxt
        total_breaks = sum(len(p.breakpoints) for p in current)
        if total_breaks > max_breakpoints:
            raise BudgetExceededError(
                f"extract_pwl exceeded {max_breakpoints} intermediate breakpoints"
            )
    return combine(current, net.output.weights[0], net.output.bias[0])


def pieces_upper_bound(widths) -> int:
    """2^(k-1) * (w1 + 1) * w2 * ... * wk pieces for hidden widths (w1..wk)."""
    widths = list(widths)
    if not widths:
        raise ValidationError("need at least one hidden width")
    bound = 2 ** (len(widths) - 1) * (widths[0] + 1)
    for w in widths[1:]:
        bound *= w
    return bound


def size_lower_bound(p: int, k: int) -> float:
    """Minimum size of a depth-(k+1) net computing a p-piece function."""
    if p < 1 or k < 1:
        raise ValidationError("need p >= 1 and k >= 1")
    return 0.5 * k * p ** (1.0 / k) - 1.0


def pieces_cap(s: int, k: int) -> float:
    """Max piece count of a depth-(k+1) net of size s: (2s/k)^k."""
    if s < 0 or k < 1:
        raise ValidationError("need s >= 0 and k >= 1")
    return (2.0 * s / k) ** k


def probe_equal(net: ReluNetwork, f: PwlFunction1D, points) -> bool:
    """Exact agreement of a scalar net with a PWL function at rational probes."""
    return all(net.forward_scalar(x) == f.evaluate(x) for x in points)
