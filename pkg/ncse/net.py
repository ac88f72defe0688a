from __future__ import annotations

import enum
import math
import numpy as np
from collections.abc import Sequence
from dataclasses import dataclass, replace
from ncse.utils import (
    DimensionMismatchError,
    DomainError,
    LabelOutOfRangeError,
    Seed,
    ShapeMismatchError,
    StaleCacheError,
    Stream,
    UnsupportedActivationError,
    as_rng,
)
from typing import NamedTuple

NORM_FLOOR = 1e-12


class Activation(enum.StrEnum):
    IDENTITY = enum.auto()
    RELU = enum.auto()
    TANH = enum.auto()
    L2_NORMALIZE = enum.auto()
    SIGMOID = enum.auto()


PIECEWISE_LINEAR = (Activation.IDENTITY, Activation.RELU)


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray
    bias: np.ndarray
    activation: Activation

    @property
    def input_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def output_dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class DenseNet:
    layers: tuple[Layer, ...]

    def __post_init__(self) -> None:
        layers = tuple(self.layers)
        if not layers:
            msg = "A network needs at least one layer!"
            raise DomainError(msg)
        for previous, current in zip(layers, layers[1:], strict=False):
            if previous.output_dim != current.input_dim:
                msg = (
                    "Layer dimensions do not chain! "
                    f"[{previous.output_dim} -> {current.input_dim}]"
                )
                raise DimensionMismatchError(msg)
        for layer in layers:
            if layer.bias.shape != (layer.output_dim,):
                msg = "Bias length must match the layer output!"
                raise ShapeMismatchError(msg)
        normalizers = [
            layer
            for layer in layers
            if layer.activation == Activation.L2_NORMALIZE
        ]
        if len(normalizers) > 1:
            msg = "At most one l2_normalize layer is allowed!"
            raise DomainError(msg)
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].output_dim

    def parameters(self) -> list[np.ndarray]:
        params = []
        for layer in self.layers:
            params += [layer.weights, layer.bias]
        return params

    def with_parameters(self, params: Sequence[np.ndarray]) -> DenseNet:
        if len(params) != 2 * len(self.layers):
            msg = "Parameter count does not match the network!"
            raise ShapeMismatchError(msg)
        layers = []
        for index, layer in enumerate(self.layers):
            weights, bias = params[2 * index], params[2 * index + 1]
            if (
                weights.shape != layer.weights.shape
                or bias.shape != layer.bias.shape
            ):
                msg = f"Parameter shapes differ in layer {index}!"
                raise ShapeMismatchError(msg)
            layers.append(replace(layer, weights=weights, bias=bias))
        return DenseNet(tuple(layers))

    def __add__(self, other: DenseNet) -> DenseNet:
        return DenseNet(self.layers + other.layers)


def init_layer(
    fan_in: int,
    fan_out: int,
    activation: Activation,
    rng: np.random.Generator,
) -> Layer:
    if activation == Activation.RELU:
        std = math.sqrt(2.0 / fan_in)
    else:
        std = math.sqrt(2.0 / (fan_in + fan_out))
    return Layer(
        weights=rng.normal(0.0, std, size=(fan_in, fan_out)),
        bias=np.zeros(fan_out),
        activation=activation,
    )


def build_net(
    sizes: Sequence[int],
    activations: Sequence[Activation],
    seed: Seed,
) -> DenseNet:
    if len(sizes) != len(activations) + 1:
        msg = "Need one activation per consecutive pair of sizes!"
        raise ShapeMismatchError(msg)
    rng = as_rng(seed, Stream.INIT)
    return DenseNet(
        tuple(
            init_layer(fan_in, fan_out, activation, rng)
            for fan_in, fan_out, activation in zip(
                sizes[:-1], sizes[1:], activations, strict=True
            )
        )
    )


class LayerCache(NamedTuple):
    inputs: np.ndarray
    pre: np.ndarray
    outputs: np.ndarray


class Gradients(NamedTuple):
    params: list[np.ndarray]
    inputs: np.ndarray


def _activate(activation: Activation, pre: np.ndarray) -> np.ndarray:
    match activation:
        case Activation.RELU:
            return np.maximum(pre, 0.0)
        case Activation.TANH:
            return np.tanh(pre)
        case Activation.SIGMOID:
            return 0.5 * (1.0 + np.tanh(0.5 * pre))
        case Activation.L2_NORMALIZE:
            norms = np.linalg.norm(pre, axis=1, keepdims=True)
            return pre / np.maximum(norms, NORM_FLOOR)
        case _:
            return pre


def _activation_backward(
    activation: Activation,
    pre: np.ndarray,
    outputs: np.ndarray,
    upstream: np.ndarray,
) -> np.ndarray:
    match activation:
        case Activation.RELU:
            return upstream * (pre > 0.0)
        case Activation.TANH:
            return upstream * (1.0 - outputs * outputs)
        case Activation.SIGMOID:
            return upstream * outputs * (1.0 - outputs)
        case Activation.L2_NORMALIZE:
            # (I - y y^T) / ||x||
            norms = np.maximum(
                np.linalg.norm(pre, axis=1, keepdims=True), NORM_FLOOR
            )
            radial = np.sum(outputs * upstream, axis=1, keepdims=True)
            return (upstream - outputs * radial) / norms
        case _:
            return upstream


def forward(
    net: DenseNet,
    inputs: np.ndarray,
) -> tuple[np.ndarray, list[LayerCache]]:
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != net.input_dim:
        msg = (
            f"Expected inputs with {net.input_dim} columns! "
            f"[{inputs.shape}]"
        )
        raise DimensionMismatchError(msg)
    cache = []
    h = inputs
    for layer in net.layers:
        pre = h @ layer.weights + layer.bias
        out = _activate(layer.activation, pre)
        cache.append(LayerCache(inputs=h, pre=pre, outputs=out))
        h = out
    return h, cache


def _check_cache(
    net: DenseNet,
    cache: Sequence[LayerCache],
    output_gradient: np.ndarray,
) -> None:
    if len(cache) != len(net.layers) or any(
        entry.pre.shape[1] != layer.output_dim
        or entry.inputs.shape[1] != layer.input_dim
        for entry, layer in zip(cache, net.layers, strict=False)
    ):
        msg = "Cache does not belong to this network!"
        raise StaleCacheError(msg)
    if output_gradient.shape != cache[-1].outputs.shape:
        msg = (
            "Output gradient shape does not match the cached forward pass! "
            f"[{output_gradient.shape} != {cache[-1].outputs.shape}]"
        )
        raise StaleCacheError(msg)


def _backprop(
    net: DenseNet,
    cache: Sequence[LayerCache],
    d_pre: np.ndarray,
) -> Gradients:
    reversed_params: list[np.ndarray] = []
    d_inputs = d_pre
    for index in reversed(range(len(net.layers))):
        layer, entry = net.layers[index], cache[index]
        reversed_params += [d_pre.sum(axis=0), entry.inputs.T @ d_pre]
        d_inputs = d_pre @ layer.weights.T
        if index > 0:
            below = cache[index - 1]
            d_pre = _activation_backward(
                net.layers[index - 1].activation,
                below.pre,
                below.outputs,
                d_inputs,
            )
    return Gradients(params=reversed_params[::-1], inputs=d_inputs)


def backward(
    net: DenseNet,
    cache: Sequence[LayerCache],
    output_gradient: np.ndarray,
) -> Gradients:
    output_gradient = np.asarray(output_gradient, dtype=np.float64)
    _check_cache(net, cache, output_gradient)
    last = cache[-1]
    d_pre = _activation_backward(
        net.layers[-1].activation, last.pre, last.outputs, output_gradient
    )
    return _backprop(net, cache, d_pre)


def softmax_cross_entropy(
    logits: np.ndarray,
    labels: np.ndarray,
) -> tuple[float, np.ndarray]:
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (logits.shape[0],):
        msg = "Need exactly one label per row of logits!"
        raise ShapeMismatchError(msg)
    if np.any(labels < 0) or np.any(labels >= logits.shape[1]):
        msg = f"Labels must lie in [0, {logits.shape[1]})!"
        raise LabelOutOfRangeError(msg)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    rows = np.arange(logits.shape[0])
    loss = float(-log_probs[rows, labels].mean())
    dlogits = np.exp(log_probs)
    dlogits[rows, labels] -= 1.0
    return loss, dlogits / logits.shape[0]


def input_gradient(
    net: DenseNet,
    cache: Sequence[LayerCache],
) -> np.ndarray:
    """Row-wise gradient of a single-output network w.r.t. its inputs."""
    if net.output_dim != 1:
        msg = "Input gradients are defined for single-output networks!"
        raise DimensionMismatchError(msg)
    return backward(net, cache, np.ones_like(cache[-1].outputs)).inputs


class Penalty(NamedTuple):
    values: np.ndarray
    gradients: list[np.ndarray]


def gradient_penalty(
    net: DenseNet,
    cache: Sequence[LayerCache],
    mask: np.ndarray,
) -> Penalty:
    """Per-row ||mask * dD/dx||^2; hidden layers must be piecewise linear."""
    if net.output_dim != 1:
        msg = "Gradient penalties need a single-output network!"
        raise DimensionMismatchError(msg)
    hidden = net.layers[:-1]
    final = net.layers[-1].activation
    if any(layer.activation not in PIECEWISE_LINEAR for layer in hidden) or (
        final not in (Activation.SIGMOID, Activation.IDENTITY)
    ):
        msg = "Gradient penalty needs relu/identity hidden layers!"
        raise UnsupportedActivationError(msg)
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != (net.input_dim,):
        msg = "Penalty mask must cover every input column!"
        raise DimensionMismatchError(msg)
    _check_cache(net, cache, cache[-1].outputs)

    rows = cache[0].inputs.shape[0]
    out = cache[-1].outputs
    if final == Activation.SIGMOID:
        slope = out * (1.0 - out)
        curvature = slope * (1.0 - 2.0 * out)
    else:
        slope = np.ones_like(out)
        curvature = np.zeros_like(out)
    gates = [
        (entry.pre > 0.0).astype(np.float64)
        if layer.activation == Activation.RELU
        else np.ones_like(entry.pre)
        for layer, entry in zip(net.layers, cache, strict=True)
    ]

    # e[l] = d a_L / d a_l
    e = [np.empty(0)] * len(net.layers)
    e[-1] = np.ones((rows, 1))
    for index in range(len(net.layers) - 1, 0, -1):
        e[index - 1] = (e[index] @ net.layers[index].weights.T) * gates[
            index - 1
        ]
    g = e[0] @ net.layers[0].weights.T
    masked = g * mask
    squared = np.sum(masked * masked, axis=1, keepdims=True)
    values = (slope * slope * squared)[:, 0]

    # through the output slope
    d_pre_last = 2.0 * slope * curvature * squared / rows
    params = _backprop(net, cache, d_pre_last).params

    # through the input gradient itself: push r forward along the
    # linearized network and pair it with e
    tangent = 2.0 * slope * slope * masked / rows
    for index, layer in enumerate(net.layers):
        params[2 * index] = params[2 * index] + tangent.T @ e[index]
        if index < len(net.layers) - 1:
            tangent = (tangent @ layer.weights) * gates[index]
    return Penalty(values=values, gradients=params)


@dataclass
class AdamState:
    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if self.step_count < 0:
            msg = "Adam step count must be >= 0!"
            raise DomainError(msg)
        if self.shapes() != [v.shape for v in self.second_moment]:
            msg = "Adam moment arrays are not congruent!"
            raise ShapeMismatchError(msg)

    def shapes(self) -> list[tuple[int, ...]]:
        return [m.shape for m in self.first_moment]

    @classmethod
    def for_parameters(
        cls,
        params: Sequence[np.ndarray],
        learning_rate: float = 0.01,
        **kwargs,
    ) -> AdamState:
        return cls(
            first_moment=[np.zeros_like(p) for p in params],
            second_moment=[np.zeros_like(p) for p in params],
            learning_rate=learning_rate,
            **kwargs,
        )


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState,
) -> tuple[list[np.ndarray], AdamState]:
    shapes = state.shapes()
    if (
        len(params) != len(grads)
        or len(params) != len(shapes)
        or any(
            p.shape != g.shape or p.shape != shape
            for p, g, shape in zip(params, grads, shapes, strict=True)
        )
    ):
        msg = "Parameters, gradients and Adam moments are not congruent!"
        raise ShapeMismatchError(msg)
    step = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    first = [
        b1 * m + (1.0 - b1) * g
        for m, g in zip(state.first_moment, grads, strict=True)
    ]
    second = [
        b2 * v + (1.0 - b2) * g * g
        for v, g in zip(state.second_moment, grads, strict=True)
    ]
    first_scale = 1.0 / (1.0 - b1**step)
    second_scale = 1.0 / (1.0 - b2**step)
    updated = [
        p
        - state.learning_rate
        * (m * first_scale)
        / (np.sqrt(v * second_scale) + state.epsilon)
        for p, m, v in zip(params, first, second, strict=True)
    ]
    return updated, replace(
        state,
        first_moment=first,
        second_moment=second,
        step_count=step,
    )
