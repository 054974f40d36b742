"""Coordinate MLPs with hand-written reverse mode.

Parameters live in one flat float64 vector. Each trainable layer owns a
weight block of shape ``(fan_in, fan_out)`` (row-major) followed by a bias
block of length ``fan_out``.

Two variants are supported:

* ``standard``: encode -> hidden layers -> linear output head.
* ``two_layer_fixed_head``: ``f(x) = sum_r a_r relu((w_r.x + b_r) / sqrt 2)``
  with ``a_r = +-1/sqrt(m)`` frozen. Biases start at zero, so the expected
  empirical kernel at initialization is exactly the arc-cosine kernel
  ``(x.x' + 1)(pi - arccos(x.x')) / (4 pi)`` on the unit circle.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .numerics import StructuralError

ACTIVATIONS = ("relu", "sine", "relu_pe")
VARIANTS = ("standard", "two_layer_fixed_head")
FIXED_HEAD_PRESCALE = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class NetworkSpec:
    input_dim: int
    hidden_widths: tuple[int, ...]
    output_dim: int = 1
    activation: str = "relu"
    omega0: float = 30.0
    num_freqs: int = 10
    variant: str = "standard"

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("input_dim and output_dim must be positive")
        if not self.hidden_widths or min(self.hidden_widths) < 1:
            raise ValueError("need at least one hidden layer of positive width")
        if self.activation == "sine" and not self.omega0 > 0:
            raise ValueError("sine activation requires omega0 > 0")
        if self.activation == "relu_pe" and self.num_freqs < 1:
            raise ValueError("positional encoding requires num_freqs >= 1")
        if self.variant == "two_layer_fixed_head":
            if len(self.hidden_widths) != 1 or self.output_dim != 1:
                raise ValueError("two_layer_fixed_head needs exactly one hidden layer and output_dim 1")
            if self.activation != "relu":
                raise ValueError("two_layer_fixed_head is defined for relu only")

    @property
    def feature_dim(self) -> int:
        if self.activation == "relu_pe":
            return 2 * self.num_freqs * self.input_dim
        return self.input_dim

    def layer_shapes(self) -> list[tuple[int, int]]:
        """(fan_in, fan_out) of every trainable layer."""
        dims = [self.feature_dim, *self.hidden_widths]
        shapes = list(zip(dims[:-1], dims[1:]))
        if self.variant == "standard":
            shapes.append((dims[-1], self.output_dim))
        return shapes

    @property
    def num_params(self) -> int:
        return sum(fi * fo + fo for fi, fo in self.layer_shapes())


@dataclass(frozen=True)
class LayerSlot:
    w_offset: int
    b_offset: int
    fan_in: int
    fan_out: int


@dataclass(frozen=True)
class Parameters:
    flat: np.ndarray
    layout: tuple[LayerSlot, ...]
    head: np.ndarray | None = field(default=None)

    def __post_init__(self):
        expected = sum(s.fan_in * s.fan_out + s.fan_out for s in self.layout)
        if self.flat.shape != (expected,):
            raise StructuralError(f"flat parameter vector has shape {self.flat.shape}, layout needs ({expected},)")

    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        out = []
        for s in self.layout:
            w = self.flat[s.w_offset : s.w_offset + s.fan_in * s.fan_out].reshape(s.fan_in, s.fan_out)
            b = self.flat[s.b_offset : s.b_offset + s.fan_out]
            out.append((w, b))
        return out

    def with_flat(self, flat: np.ndarray) -> "Parameters":
        return replace(self, flat=np.asarray(flat, dtype=np.float64))

    @property
    def size(self) -> int:
        return int(self.flat.shape[0])


def make_layout(spec: NetworkSpec) -> tuple[LayerSlot, ...]:
    slots = []
    offset = 0
    for fi, fo in spec.layer_shapes():
        slots.append(LayerSlot(offset, offset + fi * fo, fi, fo))
        offset += fi * fo + fo
    return tuple(slots)


def pack(spec: NetworkSpec, layers, head=None) -> Parameters:
    """Build Parameters from a list of (weight, bias) pairs."""
    layout = make_layout(spec)
    if len(layers) != len(layout):
        raise StructuralError(f"expected {len(layout)} layers, got {len(layers)}")
    chunks = []
    for slot, (w, b) in zip(layout, layers):
        w = np.asarray(w, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if w.shape != (slot.fan_in, slot.fan_out) or b.shape != (slot.fan_out,):
            raise StructuralError(f"layer shapes {w.shape}/{b.shape} do not match ({slot.fan_in}, {slot.fan_out})")
        chunks += [w.ravel(), b]
    if spec.variant == "two_layer_fixed_head" and head is None:
        raise StructuralError("two_layer_fixed_head needs a head vector")
    head = None if head is None else np.asarray(head, dtype=np.float64)
    return Parameters(np.concatenate(chunks), layout, head)


def relu_second_moment_constant() -> float:
    """c_sigma = 1 / E_{z~N(0,1)}[relu(z)^2] = 2."""
    return 2.0


def init_network(spec: NetworkSpec, seed: int) -> Parameters:
    rng = np.random.default_rng(seed)
    shapes = spec.layer_shapes()
    layers = []
    head = None
    if spec.variant == "two_layer_fixed_head":
        (fan_in, m), = shapes
        c_sigma = relu_second_moment_constant()
        w = rng.normal(0.0, np.sqrt(c_sigma / m), size=(fan_in, m))
        layers.append((w, np.zeros(m)))
        head = rng.choice([-1.0, 1.0], size=m) / np.sqrt(m)
        return pack(spec, layers, head)

    for idx, (fan_in, fan_out) in enumerate(shapes):
        is_output = idx == len(shapes) - 1
        if spec.activation == "sine":
            if idx == 0:
                bound = 1.0 / fan_in
            else:
                bound = np.sqrt(6.0 / fan_in) / spec.omega0
        elif is_output:
            bound = np.sqrt(1.0 / fan_in)
        else:
            bound = np.sqrt(6.0 / fan_in)
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        bb = 1.0 / np.sqrt(fan_in)
        b = rng.uniform(-bb, bb, size=fan_out)
        layers.append((w, b))
    return pack(spec, layers)


def positional_encode(coords, num_freqs: int) -> np.ndarray:
    """Per input dimension: [sin(2^j pi x), cos(2^j pi x)] for j = 0..L-1.

    Output column order is (dim, j, sin/cos). The raw coordinate is not
    passed through.
    """
    if num_freqs < 1:
        raise ValueError("num_freqs must be >= 1")
    x = np.atleast_2d(np.asarray(coords, dtype=np.float64))
    freqs = (2.0 ** np.arange(num_freqs)) * np.pi
    ang = x[:, :, None] * freqs[None, None, :]
    feats = np.stack([np.sin(ang), np.cos(ang)], axis=-1)
    return feats.reshape(x.shape[0], -1)


def _features(spec: NetworkSpec, coords) -> np.ndarray:
    x = np.asarray(coords, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[1] != spec.input_dim:
        raise StructuralError(f"coords shape {x.shape} incompatible with input_dim={spec.input_dim}")
    if spec.activation == "relu_pe":
        return positional_encode(x, spec.num_freqs)
    return x


@dataclass
class _Tape:
    inputs: list[np.ndarray]  # input to each trainable layer
    gates: list[np.ndarray]  # activation derivative at each hidden layer
    out: np.ndarray


def _layer_scale(spec: NetworkSpec) -> float:
    return FIXED_HEAD_PRESCALE if spec.variant == "two_layer_fixed_head" else 1.0


def encode(spec: NetworkSpec, coords) -> np.ndarray:
    """Network input features for raw coordinates (identity unless positional encoding)."""
    return _features(spec, coords)


def _run(spec: NetworkSpec, params: Parameters, coords, features: np.ndarray | None = None) -> _Tape:
    h = _features(spec, coords) if features is None else features
    layers = params.layers()
    scale = _layer_scale(spec)
    inputs, gates = [], []
    n_hidden = len(spec.hidden_widths)
    for w, b in layers[:n_hidden]:
        inputs.append(h)
        z = h @ w
        z += b
        if scale != 1.0:
            z *= scale
        if spec.activation == "sine":
            z *= spec.omega0
            gates.append(spec.omega0 * np.cos(z))
            h = np.sin(z, out=z)
        else:
            gate = z > 0.0
            gates.append(gate)
            h = np.multiply(z, gate, out=z)
    if spec.variant == "two_layer_fixed_head":
        out = (h @ params.head)[:, None]
    else:
        w, b = layers[-1]
        inputs.append(h)
        out = h @ w + b
    return _Tape(inputs, gates, out)


def forward(spec: NetworkSpec, params: Parameters, coords) -> np.ndarray:
    """Predictions of shape (batch, output_dim)."""
    return _run(spec, params, coords).out


def _deltas(spec: NetworkSpec, params: Parameters, tape: _Tape, cotangent: np.ndarray) -> list[np.ndarray]:
    """Gradient of sum(cotangent * out) w.r.t. each trainable layer's scaled pre-activation.

    A layer's weight gradient is then input^T @ delta and its bias gradient sum(delta).
    """
    layers = params.layers()
    n_hidden = len(spec.hidden_widths)
    scale = _layer_scale(spec)
    deltas: list[np.ndarray] = [None] * len(layers)  # type: ignore[list-item]
    if spec.variant == "two_layer_fixed_head":
        g = cotangent[:, :1] * params.head[None, :]
    else:
        deltas[-1] = cotangent
        g = cotangent @ layers[-1][0].T
    for l in range(n_hidden - 1, -1, -1):
        dz = np.multiply(g, tape.gates[l], out=g)
        if scale != 1.0:
            dz *= scale
        deltas[l] = dz
        if l > 0:
            g = dz @ layers[l][0].T
    return deltas


def backward(spec: NetworkSpec, params: Parameters, coords, cotangent, tape: _Tape | None = None) -> np.ndarray:
    """Vector-Jacobian product: sum_j sum_c cotangent[j, c] * d out[j, c] / d theta."""
    if tape is None:
        tape = _run(spec, params, coords)
    cot = np.asarray(cotangent, dtype=np.float64)
    if cot.ndim == 1:
        cot = cot[:, None]
    if cot.shape != tape.out.shape:
        raise StructuralError(f"cotangent shape {cot.shape} does not match output shape {tape.out.shape}")
    deltas = _deltas(spec, params, tape, cot)
    grad = np.empty(params.size)
    for slot, a, d in zip(params.layout, tape.inputs, deltas):
        grad[slot.w_offset : slot.b_offset] = (a.T @ d).ravel()
        grad[slot.b_offset : slot.b_offset + slot.fan_out] = d.sum(axis=0)
    return grad


def loss_and_gradient(spec: NetworkSpec, params: Parameters, coords, targets):
    """Loss 0.5 * sum r^2 and its gradient; also returns the residual array."""
    tape = _run(spec, params, coords)
    r = tape.out - _as_targets(targets, tape.out.shape)
    return 0.5 * float(np.sum(r * r)), backward(spec, params, coords, r, tape=tape), r


def _as_targets(targets, shape) -> np.ndarray:
    y = np.asarray(targets, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape != shape:
        raise StructuralError(f"targets shape {y.shape} does not match predictions {shape}")
    return y


def jacobian(spec: NetworkSpec, params: Parameters, coords) -> np.ndarray:
    """q x n matrix; column j is the gradient of sum_c f_c(x_j)."""
    tape = _run(spec, params, coords)
    n = tape.out.shape[0]
    if n < 1:
        raise StructuralError("need at least one input")
    deltas = _deltas(spec, params, tape, np.ones_like(tape.out))
    jac = np.empty((params.size, n))
    for slot, a, d in zip(params.layout, tape.inputs, deltas):
        per_sample = a[:, :, None] * d[:, None, :]
        jac[slot.w_offset : slot.b_offset] = per_sample.reshape(n, -1).T
        jac[slot.b_offset : slot.b_offset + slot.fan_out] = d.T
    return jac


def ntk_gram(spec: NetworkSpec, params: Parameters, coords) -> np.ndarray:
    """J^T J for the sum-of-logits Jacobian without materializing J.

    Per layer, <a_i (x) d_i, a_j (x) d_j> + <d_i, d_j> = (a_i.a_j + 1)(d_i.d_j).
    """
    tape = _run(spec, params, coords)
    deltas = _deltas(spec, params, tape, np.ones_like(tape.out))
    k = np.zeros((tape.out.shape[0],) * 2)
    for a, d in zip(tape.inputs, deltas):
        k += (a @ a.T + 1.0) * (d @ d.T)
    return 0.5 * (k + k.T)


def residuals(predictions, targets) -> np.ndarray:
    """f(x_i) - y_i, flattened channel-major: all samples of channel 0, then channel 1, ..."""
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if p.shape != y.shape:
        raise StructuralError(f"predictions {p.shape} and targets {y.shape} differ in shape")
    r = p - y
    return r.T.ravel() if r.ndim == 2 else r.ravel()
