"""Feed-forward control policy with exact reverse-mode gradients.

Task features go through a tanh MLP to two raw outputs, which logistic
squashing maps into the feasible box: x_pa = L * s(a1), P = P_max * s(a2).
Parameters are one flat float64 array, layer by layer, each layer stored as a
row-major (out, in) weight matrix followed by its bias.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .channel import ControlDecision
from .errors import DomainError, InvalidParameterError, NumericalError
from .tasks import LossWeights, PilotSet, Task, encode_features, simulate_pilots


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int = 5
    hidden: tuple = (64, 64)
    output_dim: int = 2
    activation: str = "tanh"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.input_dim < 1 or any(h < 1 for h in self.hidden):
            raise InvalidParameterError("layer widths must be >= 1")
        if self.output_dim != 2:
            raise InvalidParameterError("the policy emits exactly two outputs")
        if self.activation != "tanh":
            raise InvalidParameterError("only tanh activations are supported")

    @property
    def sizes(self) -> np.ndarray:
        return np.array((self.input_dim, *self.hidden, self.output_dim), dtype=np.int64)

    @property
    def n_params(self) -> int:
        s = self.sizes
        return int(sum(a * b + b for a, b in zip(s[:-1], s[1:])))

    def layer_slices(self):
        """(weight slice, bias slice, fan_in) per layer."""
        p = 0
        s = self.sizes
        for nin, nout in zip(s[:-1], s[1:]):
            yield slice(p, p + nout * nin), slice(p + nout * nin, p + nout * nin + nout), int(nin)
            p += nout * nin + nout


def init_params(spec: MlpSpec, seed: int) -> np.ndarray:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    theta = np.zeros(spec.n_params)
    for w, _, fan_in in spec.layer_slices():
        bound = 1.0 / math.sqrt(fan_in)
        theta[w] = gen.uniform(-bound, bound, w.stop - w.start)
    return theta


def _logistic(a: float) -> float:
    if a >= 0:
        return 1.0 / (1.0 + math.exp(-a))
    e = math.exp(a)
    return e / (1.0 + e)


def squash(raw, length: float, p_max: float) -> ControlDecision:
    return ControlDecision(length * _logistic(float(raw[0])), p_max * _logistic(float(raw[1])))


def forward(params: np.ndarray, features, spec: MlpSpec, length: float, p_max: float) -> ControlDecision:
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (spec.input_dim,):
        raise DomainError(f"expected {spec.input_dim} features, got shape {features.shape}")
    if params.shape != (spec.n_params,):
        raise DomainError(f"expected {spec.n_params} parameters, got {params.shape}")
    return squash(kernels.policy_forward(params, spec.sizes, features), length, p_max)


@dataclass(frozen=True)
class GradResult:
    loss: float
    grad: np.ndarray


@dataclass(frozen=True)
class PolicyObjective:
    """Task loss of the policy as a function of its parameters."""

    spec: MlpSpec = field(default_factory=MlpSpec)
    weights: LossWeights = field(default_factory=LossWeights)
    y_max: float = 6.0
    r_max: float = 2.0

    def features(self, task: Task) -> np.ndarray:
        return encode_features(task, self.y_max, self.r_max)

    def decision(self, params: np.ndarray, task: Task) -> ControlDecision:
        return forward(params, self.features(task), self.spec, task.geom.length_L, task.req.p_max)

    def loss_and_grad(self, params: np.ndarray, task: Task, pilots: PilotSet) -> GradResult:
        if len(pilots) == 0:
            raise DomainError("task loss needs at least one pilot")
        loss, grad = kernels.policy_loss_grad(
            params, self.spec.sizes, self.features(task), pilots.px, pilots.py,
            task.eve[0], task.eve[1], task.geom.length_L, task.geom.height_d**2,
            task.env.gain_to_snr, task.req.p_max, task.req.r_th, task.req.r_sec,
            self.weights.lambda_sec, self.weights.mu_power)
        if not (math.isfinite(loss) and np.all(np.isfinite(grad))):
            bad = int(np.count_nonzero(~np.isfinite(grad)))
            raise NumericalError(
                f"non-finite loss/gradient (loss={loss}, {bad} bad entries, "
                f"|theta|max={np.max(np.abs(params)):.3g}, task={task.key()})")
        return GradResult(float(loss), grad)

    def sample_pilots(self, task: Task, n: int, rng) -> PilotSet:
        return simulate_pilots(task, n, rng)

    def loss(self, params, task, pilots) -> float:
        return self.loss_and_grad(params, task, pilots).loss

    def hvp(self, params, v, task, pilots, eps=None) -> np.ndarray:
        return fd_hvp(lambda th: self.loss_and_grad(th, task, pilots).grad, params, v, eps)


def loss_and_grad(params, task, pilots, weights: LossWeights, spec: MlpSpec | None = None) -> GradResult:
    return PolicyObjective(spec or MlpSpec(), weights).loss_and_grad(params, task, pilots)


def fd_hvp(grad_fn, params: np.ndarray, v: np.ndarray, eps: float | None = None) -> np.ndarray:
    """Hessian-vector product by central differences of exact gradients.

    Differencing is along the unit direction v/|v| with step
    eps = 1e-4 * (1 + |theta|) unless given, then rescaled by |v|.
    """
    params = np.asarray(params, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return np.zeros_like(params)
    if not math.isfinite(norm):
        raise DomainError("HVP direction must be finite")
    if eps is None:
        eps = 1e-4 * (1.0 + float(np.linalg.norm(params)))
    unit = v / norm
    g_plus = grad_fn(params + eps * unit)
    g_minus = grad_fn(params - eps * unit)
    return (g_plus - g_minus) / (2.0 * eps) * norm


def hessian_vector_product(params, v, task, pilots, weights, eps=None, spec=None) -> np.ndarray:
    return PolicyObjective(spec or MlpSpec(), weights).hvp(params, v, task, pilots, eps)


# checkpoint file: little-endian header then the raw float64 parameters
_MAGIC = b"PINCHMLP"
FORMAT_VERSION = 1
_ACTIVATIONS = {"tanh": 0}


def save_checkpoint(path, params: np.ndarray, spec: MlpSpec, seed: int) -> None:
    sizes = [int(s) for s in spec.sizes]
    header = _MAGIC + struct.pack("<IQI", FORMAT_VERSION, int(seed), len(sizes))
    header += struct.pack(f"<{len(sizes)}I", *sizes)
    header += struct.pack("<IQ", _ACTIVATIONS[spec.activation], params.shape[0])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(params, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[np.ndarray, MlpSpec, int]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != _MAGIC:
        raise InvalidParameterError(f"{path}: not a policy checkpoint")
    off = 8
    version, seed, n_sizes = struct.unpack_from("<IQI", data, off)
    if version != FORMAT_VERSION:
        raise InvalidParameterError(f"{path}: unsupported checkpoint version {version}")
    off += struct.calcsize("<IQI")
    sizes = struct.unpack_from(f"<{n_sizes}I", data, off)
    off += 4 * n_sizes
    act, n_params = struct.unpack_from("<IQ", data, off)
    off += struct.calcsize("<IQ")
    spec = MlpSpec(sizes[0], tuple(sizes[1:-1]), sizes[-1],
                   {v: k for k, v in _ACTIVATIONS.items()}[act])
    params = np.frombuffer(data, dtype="<f8", count=n_params, offset=off).astype(np.float64)
    if params.shape[0] != spec.n_params:
        raise InvalidParameterError(f"{path}: parameter count does not match layer sizes")
    return params, spec, seed
