"""Network architectures: split convolutional autoencoder and separable HNN.

A subnet is a list of layer specs plus a flat dict of parameter arrays.
Forward passes run on the autodiff graph; a hand-coded numpy fast path
for the HNN input gradient serves the online rollout, where no parameter
gradients are needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad

ACTIVATIONS = {"elu": ad.elu, "softplus": ad.softplus, "linear": lambda t: t}


@dataclass(frozen=True)
class LayerSpec:
    """One layer: dense, conv1d or conv1d_transpose with its shape algebra."""

    kind: str  # dense | conv1d | conv1d_transpose
    in_size: int  # features (dense) or input channels (conv)
    out_size: int  # features (dense) or output channels / filters (conv)
    activation: str = "linear"
    kernel: int = 3
    stride: int = 3
    in_length: int = 0  # conv layers only
    out_length: int = 0  # conv layers only: forward output length

    def __post_init__(self):
        if self.kind not in ("dense", "conv1d", "conv1d_transpose"):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.kind == "conv1d":
            expected = (self.in_length - self.kernel) // self.stride + 1
            if self.out_length != expected:
                raise ValueError(
                    f"conv1d output length {self.out_length} != "
                    f"floor(({self.in_length}-{self.kernel})/{self.stride})+1 = {expected}"
                )


def conv_output_length(in_length: int, kernel: int = 3, stride: int = 3) -> int:
    return (in_length - kernel) // stride + 1


@dataclass
class Subnet:
    """Layer specs plus parameter arrays keyed '<i>.W' / '<i>.b'."""

    layers: list
    params: dict = field(default_factory=dict)

    @property
    def in_size(self) -> int:
        return self.layers[0].in_size if self.layers[0].kind == "dense" else self.layers[0].in_length

    @property
    def out_size(self) -> int:
        last = self.layers[-1]
        return last.out_size if last.kind == "dense" else last.out_length


def _glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_subnet(layers: list, rng: np.random.Generator) -> Subnet:
    """Fan-in/fan-out scaled uniform initialization, deterministic in the rng state."""
    params = {}
    for i, spec in enumerate(layers):
        if spec.kind == "dense":
            params[f"{i}.W"] = _glorot(rng, (spec.in_size, spec.out_size), spec.in_size, spec.out_size)
            params[f"{i}.b"] = np.zeros(spec.out_size)
        elif spec.kind == "conv1d":
            fan_in = spec.in_size * spec.kernel
            fan_out = spec.out_size * spec.kernel
            params[f"{i}.W"] = _glorot(rng, (spec.out_size, spec.in_size, spec.kernel), fan_in, fan_out)
            params[f"{i}.b"] = np.zeros(spec.out_size)
        else:  # conv1d_transpose: weights indexed (in_ch, out_ch, k)
            fan_in = spec.in_size * spec.kernel
            fan_out = spec.out_size * spec.kernel
            params[f"{i}.W"] = _glorot(rng, (spec.in_size, spec.out_size, spec.kernel), fan_in, fan_out)
            params[f"{i}.b"] = np.zeros(spec.out_size)
    return Subnet(layers=list(layers), params=params)


def _conv1d(x: ad.Tensor, W: ad.Tensor, b: ad.Tensor, spec: LayerSpec) -> ad.Tensor:
    out = None
    span = spec.stride * (spec.out_length - 1) + 1
    for k in range(spec.kernel):
        xk = x[:, :, k : k + span : spec.stride]
        term = ad.einsum2("oc,bcl->bol", W[:, :, k], xk)
        out = term if out is None else ad.add(out, term)
    return ad.add(out, ad.reshape(b, (1, spec.out_size, 1)))


def _conv1d_transpose(x: ad.Tensor, W: ad.Tensor, b: ad.Tensor, spec: LayerSpec) -> ad.Tensor:
    # adjoint of the conv1d index map, with the exact output length recorded
    # in the spec (inverts the floor in the forward length formula)
    batch = x.shape[0]
    in_len = x.shape[2]
    span = spec.stride * (in_len - 1) + 1
    out = None
    out_shape = (batch, spec.out_size, spec.out_length)
    for k in range(spec.kernel):
        term = ad.einsum2("co,bcl->bol", W[:, :, k], x)
        placed = ad.scatter(term, out_shape, (slice(None), slice(None), slice(k, k + span, spec.stride)))
        out = placed if out is None else ad.add(out, placed)
    return ad.add(out, ad.reshape(b, (1, spec.out_size, 1)))


def forward(subnet: Subnet, x: ad.Tensor, params: dict | None = None) -> ad.Tensor:
    """Evaluate a subnet on a (batch, features) tensor.

    Conv stacks reshape to (batch, 1, length) on entry and flatten
    channel-major before the first dense layer.
    """
    params = subnet.params if params is None else params
    x = ad.as_tensor(x)
    if x.ndim != 2:
        raise ValueError(f"subnet input must be 2D (batch, features), got {x.shape}")
    for i, spec in enumerate(subnet.layers):
        W = ad.as_tensor(params[f"{i}.W"])
        b = ad.as_tensor(params[f"{i}.b"])
        if spec.kind == "conv1d":
            if x.ndim == 2:
                if x.shape[1] != spec.in_size * spec.in_length:
                    raise ValueError(f"layer {i}: expected {spec.in_size * spec.in_length} inputs, got {x.shape[1]}")
                x = ad.reshape(x, (x.shape[0], spec.in_size, spec.in_length))
            x = _conv1d(x, W, b, spec)
        elif spec.kind == "conv1d_transpose":
            if x.ndim == 2:
                x = ad.reshape(x, (x.shape[0], spec.in_size, spec.in_length))
            x = _conv1d_transpose(x, W, b, spec)
        else:
            if x.ndim == 3:
                x = ad.reshape(x, (x.shape[0], x.shape[1] * x.shape[2]))  # channel-major flatten
            if x.shape[1] != spec.in_size:
                raise ValueError(f"layer {i}: expected {spec.in_size} inputs, got {x.shape[1]}")
            x = ad.add(ad.matmul(x, W), ad.reshape(b, (1, spec.out_size)))
        x = ACTIVATIONS[spec.activation](x)
    if x.ndim == 3:
        x = ad.reshape(x, (x.shape[0], x.shape[1] * x.shape[2]))
    return x


@dataclass
class NetworkParams:
    """All six subnets of the reduced model: split AE plus separable HNN."""

    encoder_x: Subnet
    encoder_v: Subnet
    decoder_x: Subnet
    decoder_v: Subnet
    hnn_pot: Subnet
    hnn_kin: Subnet

    def subnets(self) -> dict:
        return {
            "encoder_x": self.encoder_x,
            "encoder_v": self.encoder_v,
            "decoder_x": self.decoder_x,
            "decoder_v": self.decoder_v,
            "hnn_pot": self.hnn_pot,
            "hnn_kin": self.hnn_kin,
        }

    def flat_params(self) -> dict:
        return {
            f"{name}/{key}": arr
            for name, net in self.subnets().items()
            for key, arr in net.params.items()
        }

    def set_flat_params(self, flat: dict) -> None:
        nets = self.subnets()
        for full_key, arr in flat.items():
            name, key = full_key.split("/", 1)
            nets[name].params[key] = arr


def encoder_layers(m: int, k: int, conv_blocks: int, dense_sizes: list, activation: str = "elu"):
    """Conv blocks (filters 12, then x3 per block) followed by shrinking dense layers."""
    layers = []
    length, channels = m, 1
    filters = 12
    for _ in range(conv_blocks):
        out_len = conv_output_length(length)
        layers.append(
            LayerSpec("conv1d", channels, filters, activation,
                      in_length=length, out_length=out_len)
        )
        channels, length, filters = filters, out_len, filters * 3
    in_size = channels * length
    for size in dense_sizes:
        layers.append(LayerSpec("dense", in_size, size, activation))
        in_size = size
    layers.append(LayerSpec("dense", in_size, k, "linear"))
    return layers


def decoder_layers(m: int, k: int, conv_blocks: int, dense_sizes: list, activation: str = "elu"):
    """Mirror image of the encoder; transposed convs restore the exact lengths."""
    lengths, channels_list = [m], [1]
    length, channels, filters = m, 1, 12
    conv_channels = []
    for _ in range(conv_blocks):
        out_len = conv_output_length(length)
        conv_channels.append((channels, filters))
        channels, length, filters = filters, out_len, filters * 3
        lengths.append(length)
        channels_list.append(channels)
    layers = [LayerSpec("dense", k, dense_sizes[-1], activation)]
    for i in range(len(dense_sizes) - 1, 0, -1):
        layers.append(LayerSpec("dense", dense_sizes[i], dense_sizes[i - 1], activation))
    flat = channels_list[-1] * lengths[-1]
    layers.append(LayerSpec("dense", dense_sizes[0], flat, activation))
    for i in range(conv_blocks - 1, -1, -1):
        in_ch, out_ch = channels_list[i + 1], channels_list[i]
        act = "linear" if i == 0 else activation
        layers.append(
            LayerSpec("conv1d_transpose", in_ch, out_ch, act,
                      in_length=lengths[i + 1], out_length=lengths[i])
        )
    return layers


def hnn_layers(k: int, widths: list, activation: str = "softplus"):
    layers = []
    in_size = k
    for w in widths:
        layers.append(LayerSpec("dense", in_size, w, activation))
        in_size = w
    layers.append(LayerSpec("dense", in_size, 1, "linear"))
    return layers


def build_networks(
    m: int,
    k: int,
    conv_blocks: int = 2,
    dense_sizes: list | None = None,
    hnn_widths: list | None = None,
    seed: int = 0,
    ae_activation: str = "elu",
    hnn_activation: str = "softplus",
) -> NetworkParams:
    """Initialize all subnets for intermediate dim M and reduced dim K (per block)."""
    dense_sizes = dense_sizes if dense_sizes is not None else [150, 100, 50, 25]
    hnn_widths = hnn_widths if hnn_widths is not None else [48, 24, 24, 24, 12]
    if hnn_activation == "elu":
        raise ValueError("HNN activation must have a smooth second derivative")
    rng = np.random.default_rng(seed)
    enc = encoder_layers(m, k, conv_blocks, dense_sizes, ae_activation)
    dec = decoder_layers(m, k, conv_blocks, dense_sizes, ae_activation)
    hnn = hnn_layers(k, hnn_widths, hnn_activation)
    return NetworkParams(
        encoder_x=init_subnet(enc, rng),
        encoder_v=init_subnet(enc, rng),
        decoder_x=init_subnet(dec, rng),
        decoder_v=init_subnet(dec, rng),
        hnn_pot=init_subnet(hnn, rng),
        hnn_kin=init_subnet(hnn, rng),
    )


def build_dense_networks(
    m: int, k: int, ae_sizes: list, hnn_widths: list, seed: int = 0,
    ae_activation: str = "linear", hnn_activation: str = "softplus",
) -> NetworkParams:
    """Dense-only variant (used by synthetic / miniature configurations)."""
    rng = np.random.default_rng(seed)

    def enc():
        sizes = [m] + list(ae_sizes) + [k]
        return [
            LayerSpec("dense", sizes[i], sizes[i + 1],
                      "linear" if i == len(sizes) - 2 else ae_activation)
            for i in range(len(sizes) - 1)
        ]

    def dec():
        sizes = [k] + list(reversed(ae_sizes)) + [m]
        return [
            LayerSpec("dense", sizes[i], sizes[i + 1],
                      "linear" if i == len(sizes) - 2 else ae_activation)
            for i in range(len(sizes) - 1)
        ]

    hnn = hnn_layers(k, hnn_widths, hnn_activation)
    return NetworkParams(
        encoder_x=init_subnet(enc(), rng),
        encoder_v=init_subnet(enc(), rng),
        decoder_x=init_subnet(dec(), rng),
        decoder_v=init_subnet(dec(), rng),
        hnn_pot=init_subnet(hnn, rng),
        hnn_kin=init_subnet(hnn, rng),
    )


def hnn_value(params: NetworkParams, x_bar, v_bar,
              pot_params: dict | None = None, kin_params: dict | None = None) -> ad.Tensor:
    """Separable reduced Hamiltonian H_kin(v) + H_pot(x), shape (batch, 1)."""
    h_pot = forward(params.hnn_pot, ad.as_tensor(x_bar), pot_params)
    h_kin = forward(params.hnn_kin, ad.as_tensor(v_bar), kin_params)
    return ad.add(h_pot, h_kin)


def hnn_input_gradient(params: NetworkParams, x_bar, v_bar,
                       pot_params: dict | None = None, kin_params: dict | None = None):
    """Exact input gradients (dH_pot/dx, dH_kin/dv), each (batch, K), differentiable."""
    xt, vt = ad.as_tensor(x_bar), ad.as_tensor(v_bar)
    h_pot = forward(params.hnn_pot, xt, pot_params)
    h_kin = forward(params.hnn_kin, vt, kin_params)
    (gx,) = ad.backward(h_pot, [xt])
    (gv,) = ad.backward(h_kin, [vt])
    return gx, gv


def loss_gradient(loss: ad.Tensor, leaf_map: dict):
    """Gradients of a loss tensor for every named parameter leaf.

    leaf_map maps names to the Tensor leaves used when building the loss.
    """
    if not np.all(np.isfinite(loss.value)):
        raise FloatingPointError("non-finite loss value")
    names = list(leaf_map)
    grads = ad.backward(loss, [leaf_map[n] for n in names])
    return {n: g.value for n, g in zip(names, grads)}


def dense_gradient_fn(subnet: Subnet):
    """Hand-coded numpy input gradient for a dense stack with scalar output.

    Returns f(x) -> dOut/dx for a (batch, in) array; used on the online
    rollout path where no graph is needed.  Validated against the autodiff
    gradient in the test suite.
    """
    specs = subnet.layers
    if any(s.kind != "dense" for s in specs):
        raise ValueError("fast gradient path supports dense stacks only")
    weights = [subnet.params[f"{i}.W"] for i in range(len(specs))]
    biases = [subnet.params[f"{i}.b"] for i in range(len(specs))]

    def grad(x: np.ndarray) -> np.ndarray:
        acts = []
        h = x
        for spec, W, b in zip(specs, weights, biases):
            z = h @ W + b
            if spec.activation == "softplus":
                s = 1.0 / (1.0 + np.exp(-z))
                h = np.logaddexp(0.0, z)
                acts.append(s)
            elif spec.activation == "elu":
                h = np.where(z > 0, z, np.expm1(np.minimum(z, 0.0)))
                acts.append(np.where(z > 0, 1.0, np.exp(np.minimum(z, 0.0))))
            else:
                h = z
                acts.append(None)
        delta = np.ones((x.shape[0], 1))
        for W, act in zip(reversed(weights), reversed(acts)):
            if act is not None:
                delta = delta * act
            delta = delta @ W.T
        return delta

    return grad
