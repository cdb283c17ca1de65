"""Standard feed-forward networks and input convex neural networks (ICNN).

Parameters live in one flat vector of raw trainable scalars. For the input
convex family the raw entries of every ``W`` block are an unconstrained ``v``
and the network uses ``w = v**2``, which keeps those weights nonnegative while
the optimizer works in unconstrained coordinates.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff.activations import ACTIVATIONS, CONVEX_NONDECREASING
from .errors import UsageError

STANDARD = "standard"
INPUT_CONVEX = "input_convex"
FAMILIES = (STANDARD, INPUT_CONVEX)

DEFAULT_INIT_STD = 0.5


@dataclass(frozen=True)
class NetworkSpec:
    family: str
    input_dim: int
    hidden_sizes: tuple
    activation: str
    output_activation: str = "identity"

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if self.family not in FAMILIES:
            raise UsageError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.input_dim < 1:
            raise UsageError("input_dim must be >= 1")
        if not self.hidden_sizes or any(h < 1 for h in self.hidden_sizes):
            raise UsageError("hidden_sizes must be a non-empty list of positive integers")
        if self.activation not in ACTIVATIONS or self.activation == "exp":
            raise UsageError(f"unsupported hidden activation {self.activation!r}")
        if self.output_activation != "identity":
            raise UsageError("only the identity output activation is supported")
        if self.family == INPUT_CONVEX and self.activation not in CONVEX_NONDECREASING:
            raise UsageError(
                f"input convex networks need a convex nondecreasing activation, "
                f"{self.activation!r} is not")

    @classmethod
    def standard(cls, input_dim, hidden_sizes, activation="sigmoid"):
        return cls(STANDARD, input_dim, tuple(hidden_sizes), activation)

    @classmethod
    def input_convex(cls, input_dim, hidden_sizes, activation="softplus"):
        return cls(INPUT_CONVEX, input_dim, tuple(hidden_sizes), activation)

    def to_dict(self):
        d = asdict(self)
        d["hidden_sizes"] = list(self.hidden_sizes)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["family"], int(d["input_dim"]), tuple(d["hidden_sizes"]),
                   d["activation"], d.get("output_activation", "identity"))


@dataclass(frozen=True)
class Block:
    layer: int
    role: str  # "W", "L" or "b"
    shape: tuple
    start: int

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def stop(self):
        return self.start + self.size


def layout(spec):
    """Parameter blocks in storage order.

    Standard: ``W, b`` per layer. Input convex: ``L_0, b_0`` for the first layer,
    then ``W_j, L_j, b_j`` for every later layer including the output.
    """
    n = spec.input_dim
    sizes = list(spec.hidden_sizes) + [1]
    blocks = []
    pos = 0

    def add(layer, role, shape):
        nonlocal pos
        blocks.append(Block(layer, role, shape, pos))
        pos += int(np.prod(shape))

    prev = n
    for layer, width in enumerate(sizes):
        if spec.family == STANDARD:
            add(layer, "W", (width, prev))
            add(layer, "b", (width,))
        else:
            if layer > 0:
                add(layer, "W", (width, prev))
            add(layer, "L", (width, n))
            add(layer, "b", (width,))
        prev = width
    return blocks


def param_count(spec):
    return layout(spec)[-1].stop


@dataclass
class ParamVector:
    """Flat raw parameters plus the layout that slices them into blocks."""

    spec: NetworkSpec
    raw: np.ndarray
    blocks: list = field(init=False, repr=False)

    def __post_init__(self):
        self.raw = np.asarray(self.raw, dtype=np.float64)
        self.blocks = layout(self.spec)
        if self.raw.shape != (param_count(self.spec),):
            raise UsageError(
                f"expected {param_count(self.spec)} raw parameters, got {self.raw.shape}")

    def __len__(self):
        return len(self.raw)

    def block(self, layer, role):
        for b in self.blocks:
            if b.layer == layer and b.role == role:
                return b
        raise KeyError((layer, role))

    def materialized(self, layer, role):
        """Block as the network uses it (``v**2`` for ICNN ``W`` blocks)."""
        b = self.block(layer, role)
        m = self.raw[b.start:b.stop].reshape(b.shape)
        if self.spec.family == INPUT_CONVEX and role == "W":
            return m * m
        return m


def init_params(spec, rng_seed, std=DEFAULT_INIT_STD):
    """Every raw scalar i.i.d. ``Normal(0, std**2)``."""
    rng = np.random.default_rng(rng_seed)
    return ParamVector(spec, rng.normal(0.0, std, size=param_count(spec)))


def forward(spec, raw, x):
    """Network output at points ``x``.

    ``raw`` may be a plain array or a tape ``Var``; ``x`` may be an array of
    shape ``(P, n)`` or a :class:`~mongenet.autodiff.HyperDual`. Returns one
    value per point.
    """
    blocks = layout(spec)
    params = {}
    for b in blocks:
        m = raw[b.start:b.stop].reshape(b.shape)
        if spec.family == INPUT_CONVEX and b.role == "W":
            m = m * m
        params[b.layer, b.role] = m

    last = len(spec.hidden_sizes)
    if spec.family == STANDARD:
        z = x @ params[0, "W"].T + params[0, "b"]
        for layer in range(1, last + 1):
            z = ad.activation(z, spec.activation) @ params[layer, "W"].T + params[layer, "b"]
    else:
        z = ad.activation(x @ params[0, "L"].T + params[0, "b"], spec.activation)
        for layer in range(1, last + 1):
            z = z @ params[layer, "W"].T + x @ params[layer, "L"].T + params[layer, "b"]
            if layer < last:
                z = ad.activation(z, spec.activation)
    return z[:, 0]


class NetworkField:
    """A network with fixed parameters, usable as a scalar field."""

    def __init__(self, spec, params):
        self.spec = spec
        if isinstance(params, ParamVector):
            params = params.raw
        self.raw = params
        if not isinstance(params, ad.Var):
            self.raw = np.asarray(params, dtype=np.float64)
            if self.raw.shape != (param_count(spec),):
                raise UsageError(
                    f"expected {param_count(spec)} parameters, got {self.raw.shape}")

    @property
    def input_dim(self):
        return self.spec.input_dim

    def __call__(self, x):
        return forward(self.spec, self.raw, x)

    @property
    def params(self):
        return ParamVector(self.spec, ad.value_of(self.raw))


def evaluate(net, x):
    """Network value at a single point ``x`` or at points of shape ``(P, n)``."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if pts.ndim != 2 or pts.shape[1] != net.input_dim:
        raise UsageError(f"network expects {net.input_dim} inputs, got shape {x.shape}")
    out = ad.value_of(net(pts))
    return float(out[0]) if single else out


def convexity_violations(net, x, y, t):
    """Per-trial ``N(tx + (1-t)y) - t N(x) - (1-t) N(y)``."""
    t = np.asarray(t, dtype=np.float64)
    mid = t[:, None] * x + (1.0 - t)[:, None] * y
    return evaluate(net, mid) - t * evaluate(net, x) - (1.0 - t) * evaluate(net, y)


def convexity_probe(net, trials, rng_seed, allow_standard=False):
    """Largest violation of the convexity inequality over random chords in ``[-2, 2]^n``.

    Only meaningful for input convex networks; ``allow_standard`` exists to
    validate the probe itself on networks that are not convex.
    """
    if net.spec.family != INPUT_CONVEX and not allow_standard:
        raise UsageError("convexity_probe requires an input convex network")
    rng = np.random.default_rng(rng_seed)
    n = net.input_dim
    x = rng.uniform(-2.0, 2.0, size=(trials, n))
    y = rng.uniform(-2.0, 2.0, size=(trials, n))
    t = rng.uniform(0.0, 1.0, size=trials)
    return float(np.max(convexity_violations(net, x, y, t)))


# checkpoints ---------------------------------------------------------------

def save_checkpoint(path, spec, params):
    raw = params.raw if isinstance(params, ParamVector) else np.asarray(params)
    doc = {"spec": spec.to_dict(), "raw": [float(v) for v in raw]}
    Path(path).write_text(json.dumps(doc, indent=1))


def load_checkpoint(path):
    doc = json.loads(Path(path).read_text())
    spec = NetworkSpec.from_dict(doc["spec"])
    return NetworkField(spec, ParamVector(spec, np.array(doc["raw"], dtype=np.float64)))
