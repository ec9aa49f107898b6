"""Range-size schedules for the progressive quantizer.

The quantizer interval at iteration t has size S_t, shared by every node. Two
ways to precompute the sequence are provided: the recursive average-case
bound, and its closed-form exponential approximation S_t = 2 exp(-(alpha t + gamma)).
All logarithms are natural unless stated otherwise.
"""
import csv
import math
from dataclasses import dataclass

import numpy as np

from qconsensus.errors import NonPositiveLogArgument, ParameterOutOfRange
from qconsensus.spectral import norms_ws_wi

DEFAULT_CLAMP = 1e-16


@dataclass(frozen=True)
class ScheduleInputs:
    lambda2: float
    lambda_min: float
    n: int
    z0_inf: float
    s0: float
    norms: np.ndarray
    clamp_delta: float = DEFAULT_CLAMP

    def __post_init__(self):
        if not self.s0 > 0:
            raise ParameterOutOfRange("s0 must be positive")
        if self.n < 1:
            raise ParameterOutOfRange("n must be at least 1")
        if self.clamp_delta < 0:
            raise ParameterOutOfRange("clamp_delta must be nonnegative (0 disables the clamp)")
        norms = np.asarray(self.norms, dtype=float)
        if norms.size and abs(norms[0] - (1.0 - self.lambda_min)) > 1e-9:
            raise ParameterOutOfRange(
                f"norms[0]={norms[0]} disagrees with 1 - lambda_min={1.0 - self.lambda_min}")
        object.__setattr__(self, "norms", norms)

    @classmethod
    def from_weights(cls, w, n, z0_inf, s0, horizon, clamp_delta=DEFAULT_CLAMP):
        return cls(lambda2=w.lambda2, lambda_min=w.lambda_min, n=n, z0_inf=z0_inf, s0=s0,
                   norms=norms_ws_wi(w, max(horizon, 1)), clamp_delta=clamp_delta)


@dataclass(frozen=True)
class RangeSchedule:
    sizes: np.ndarray
    source: str

    @property
    def betas(self):
        return -np.log(self.sizes / 2.0)

    @property
    def horizon(self):
        return len(self.sizes) - 1

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "S_t", "beta_t"])
            for t, (s, b) in enumerate(zip(self.sizes, self.betas)):
                writer.writerow([t, f"{s:.12g}", f"{b:.12g}"])


def _clamped(raw, prev, delta):
    return prev if raw < delta else raw


def recursive_ranges(inp, horizon):
    """S_0..S_T from the average-case recursion.

    S_1 drops the accumulated-noise term (it is empty at t = 0 anyway); later
    steps keep all three terms and take the positive root.
    """
    if horizon < 1:
        raise ParameterOutOfRange("horizon must be at least 1")
    if len(inp.norms) < horizon - 1:
        raise ParameterOutOfRange(f"need {horizon - 1} norms, got {len(inp.norms)}")
    lam2, lmin = inp.lambda2, inp.lambda_min
    q = 2.0 ** (2 * inp.n) * 12.0
    lead = inp.z0_inf ** 2 * (1.0 - lmin) ** 2
    accum_coef = (1.0 - lmin) ** 2 / q
    self_coef = (2.0 - lmin) ** 2 / q
    norms_sq = inp.norms[: max(horizon - 1, 0)] ** 2

    sizes = np.empty(horizon + 1)
    sq = np.empty(horizon + 1)
    sizes[0] = inp.s0
    sq[0] = inp.s0 ** 2
    for t in range(horizon):
        half_sq = lead * lam2 ** (2 * t) + self_coef * sq[t]
        if t >= 1:
            # sum_{s=0}^{t-1} ||W^s(W-I)||^2 S_{t-s-1}^2
            half_sq += accum_coef * float(np.dot(norms_sq[:t], sq[t - 1::-1]))
        sizes[t + 1] = _clamped(2.0 * math.sqrt(half_sq), sizes[t], inp.clamp_delta)
        sq[t + 1] = sizes[t + 1] ** 2
    return RangeSchedule(sizes=sizes, source="recursive")


def feasible_exponential_bits(lambda2, lambda_min):
    """Smallest n for which the exponential model's log argument is positive."""
    if lambda2 <= 0:
        return None
    n = 1
    while lambda2 ** 2 <= (2.0 - lambda_min) ** 2 / (2.0 ** (2 * n) * 3.0):
        n += 1
    return n


def exponential_params(lambda2, lambda_min, n, z0_inf):
    """Decay rate ``alpha`` and offset ``gamma`` of beta_t = alpha t + gamma."""
    if not 0.0 < lambda2 < 1.0:
        raise ParameterOutOfRange(f"lambda2={lambda2} must lie in (0, 1)")
    arg = lambda2 ** 2 - (2.0 - lambda_min) ** 2 / (2.0 ** (2 * n) * 3.0)
    if arg <= 0:
        need = feasible_exponential_bits(lambda2, lambda_min)
        raise NonPositiveLogArgument(
            f"{n} bits too few for lambda2={lambda2:.6g}, lambda_min={lambda_min:.6g}; "
            f"need at least {need}", min_bits=need)
    alpha = -math.log(lambda2)
    gamma = 0.5 * math.log(arg) - math.log(z0_inf * (1.0 - lambda_min))
    return alpha, gamma


def exponential_ranges(alpha, gamma, horizon, clamp_delta=DEFAULT_CLAMP, s0=None):
    """S_t = 2 exp(-(alpha t + gamma)) for t >= 1; S_0 is the caller's initial interval."""
    if not alpha > 0:
        raise ParameterOutOfRange("alpha must be positive")
    sizes = np.empty(horizon + 1)
    sizes[0] = 2.0 * math.exp(-gamma) if s0 is None else s0
    for t in range(1, horizon + 1):
        sizes[t] = _clamped(2.0 * math.exp(-(alpha * t + gamma)), sizes[t - 1], clamp_delta)
    return RangeSchedule(sizes=sizes, source="exponential")


def _stability_lhs(lambda2, lambda_min):
    if lambda2 >= 1.0:
        return math.inf
    return (1.0 - lambda_min) ** 4 / (1.0 - lambda2 ** 2) + (2.0 - lambda_min) ** 2


def stability_condition(lambda2, lambda_min, n):
    return _stability_lhs(lambda2, lambda_min) < 3.0 * 2.0 ** (2 * n)


def min_bits(lambda2, lambda_min):
    """Smallest n >= 1 for which the range sequence provably decays."""
    lhs = _stability_lhs(lambda2, lambda_min)
    if math.isinf(lhs):
        raise ParameterOutOfRange("lambda2 >= 1: no bit budget makes the schedule decay")
    n = max(1, math.floor(math.log2(lhs / 3.0) / 2.0) + 1) if lhs > 3.0 else 1
    # the closed form can be off by one at floating-point boundaries
    while n > 1 and stability_condition(lambda2, lambda_min, n - 1):
        n -= 1
    while not stability_condition(lambda2, lambda_min, n):
        n += 1
    return n


def _recursion_constants(lambda2, lambda_min, n):
    q = 2.0 ** (2 * n) * 3.0
    c = (2.0 - lambda_min) ** 2 / q
    b = (1.0 - lambda_min) ** 4 / q
    return c, b, lambda2 ** 2


def p_sequence(lambda2, lambda_min, n, z0_inf, s0, horizon):
    """The majorant P(0..T) of exp(-2 beta_t) built with ||W^s(W-I)|| <= lambda2^s (1 - lambda_min)."""
    if horizon < 2:
        raise ParameterOutOfRange("horizon must be at least 2")
    c, b, g = _recursion_constants(lambda2, lambda_min, n)
    lead = z0_inf ** 2 * (1.0 - lambda_min) ** 2
    p = np.empty(horizon + 1)
    p[0] = s0 ** 2 / 4.0
    p[1] = lead + c * p[0]
    powers = g ** np.arange(horizon)
    for t in range(2, horizon + 1):
        p[t] = lead * g ** (t - 1) + b * float(np.dot(powers[: t - 1], p[t - 2::-1])) + c * p[t - 1]
    return p


def companion_matrix(lambda2, lambda_min, n):
    c, b, g = _recursion_constants(lambda2, lambda_min, n)
    return np.array([[c + g, b - c * g], [1.0, 0.0]])


def companion_matrix_radius(lambda2, lambda_min, n):
    c, b, g = _recursion_constants(lambda2, lambda_min, n)
    return (c + g + math.sqrt((c - g) ** 2 + 4.0 * b)) / 2.0


def unquantized_decay_params(w, z0_inf):
    """Rate and offset of the decay of successive differences without quantization."""
    alpha_p = -math.log(w.lambda2)
    gamma_p = -math.log(z0_inf * (1.0 - w.lambda_min))
    return alpha_p, gamma_p


def accumulated_noise_sums(norms, sizes):
    """sum_{s=0}^{t-1} ||W^s(W-I)||^2 exp(-2 beta_{t-s-1}) for t = 0..T.

    ``exp(-2 beta)`` is (S/2)^2, so the sum runs over the supplied range sizes.
    """
    norms_sq = np.asarray(norms, dtype=float) ** 2
    e = (np.asarray(sizes, dtype=float) / 2.0) ** 2
    horizon = len(e) - 1
    out = np.zeros(horizon + 1)
    for t in range(1, horizon + 1):
        k = min(t, len(norms_sq))
        out[t] = float(np.dot(norms_sq[:k], e[t - 1::-1][:k]))
    return out


def progressive_schedule(w, n, z0_inf, s0, horizon, source="exponential", clamp_delta=DEFAULT_CLAMP):
    """Schedule for one topology and bit budget, either recursive or exponential."""
    if source == "recursive":
        inp = ScheduleInputs.from_weights(w, n, z0_inf, s0, horizon, clamp_delta)
        return recursive_ranges(inp, horizon)
    if source == "exponential":
        alpha, gamma = exponential_params(w.lambda2, w.lambda_min, n, z0_inf)
        return exponential_ranges(alpha, gamma, horizon, clamp_delta, s0=s0)
    raise ValueError(f"unknown schedule source {source!r}")
