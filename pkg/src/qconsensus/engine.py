"""Synchronous quantized consensus iterations and their traces."""
import csv
import json
from dataclasses import dataclass

import numpy as np

from qconsensus import codec as codecs
from qconsensus.errors import DimensionMismatch

MEAN_TOL = 1e-9


@dataclass(frozen=True)
class CodecSpec:
    """Everything a neighbour needs to build the same initial decoder state."""

    kind: str
    n: int
    lo: float = 0.0
    hi: float = 1.0
    params: tuple = ()

    def __call__(self, m):
        return codecs.init_state(self.kind, self.n, m, self.lo, self.hi, **dict(self.params))

    def to_dict(self):
        return {"kind": self.kind, "n": self.n, "lo": self.lo, "hi": self.hi, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], int(d["n"]), float(d["lo"]), float(d["hi"]),
                   tuple(sorted(d.get("params", {}).items())))


def codec_factory(kind, n, lo=0.0, hi=1.0, **params):
    return CodecSpec(kind, n, lo, hi, tuple(sorted(params.items())))


@dataclass(frozen=True)
class RunTrace:
    z: np.ndarray
    z_hat: np.ndarray
    eps: np.ndarray
    clip_counts: np.ndarray
    mu: float
    indices: np.ndarray = None
    codec: CodecSpec = None
    sizes: np.ndarray = None

    @property
    def horizon(self):
        return self.z.shape[0] - 1


@dataclass(frozen=True)
class MetricSeries:
    err: np.ndarray
    noise_var: np.ndarray
    clip: np.ndarray


def _matrix(w):
    return np.asarray(getattr(w, "w", w), dtype=float)


def _check(w, z0, horizon):
    wm = _matrix(w)
    z0 = np.asarray(z0, dtype=float).ravel()
    if wm.ndim != 2 or wm.shape[0] != wm.shape[1] or wm.shape[0] != z0.size:
        raise DimensionMismatch(f"W has shape {wm.shape} but z0 has {z0.size} entries")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    return wm, z0


def run_consensus(w, z0, codec_factory=None, schedule=None, horizon=100):
    """z_{t+1} = z_t + (W - I) zhat_t with zhat_t produced by the codec.

    ``codec_factory(m)`` returns the shared initial codec state; ``None`` means
    exact communication. The progressive codec quantizes z_t with range
    ``schedule.sizes[t]``, so the schedule must cover t = 0..horizon.
    """
    wm, z0 = _check(w, z0, horizon)
    m = z0.size
    w_minus_i = wm - np.eye(m)
    z = np.empty((horizon + 1, m))
    z_hat = np.empty_like(z)
    clips = np.zeros(horizon + 1, dtype=np.int64)
    indices = None
    z[0] = z0
    state = None
    if codec_factory is not None:
        state = codec_factory(m)
        indices = np.empty((horizon + 1, m), dtype=np.int64)
        if state.kind == "progressive":
            if schedule is None or len(schedule.sizes) < horizon + 1:
                raise ValueError("progressive codec needs a schedule covering t = 0..horizon")
    for t in range(horizon + 1):
        if state is None:
            hat = z[t].copy()
        else:
            size = schedule.sizes[t] if state.kind == "progressive" else None
            cw = codecs.encode(state, z[t], size)
            # neighbours only ever see the index; reconstruct through the decoder
            state, hat = codecs.decode(state, cw.index, size)
            indices[t] = cw.index
            clips[t] = int(np.count_nonzero(cw.clipped))
        z_hat[t] = hat
        if t < horizon:
            z[t + 1] = z[t] + w_minus_i @ hat
    sizes = None
    if state is not None and state.kind == "progressive":
        sizes = np.asarray(schedule.sizes[: horizon + 1], dtype=float)
    spec = codec_factory if isinstance(codec_factory, CodecSpec) else None
    return RunTrace(z=z, z_hat=z_hat, eps=z_hat - z, clip_counts=clips, mu=float(np.mean(z0)),
                    indices=indices, codec=spec, sizes=sizes)


def ideal_run(w, z0, horizon=100):
    """Unquantized iteration z_{t+1} = W z_t.

    Evaluated as z_t + (W - I) z_t so that it matches ``run_consensus`` with
    exact communication to the last bit.
    """
    return run_consensus(w, z0, None, None, horizon)


def expansion_check(trace, w):
    """Max deviation between the trace and the closed-form noise expansion.

    zhat_t  = W^t z0 + sum_{s<t} W^s (W-I) eps_{t-s-1} + eps_t
    z_{t+1} = W^{t+1} z0 + sum_{s<=t} W^s (W-I) eps_{t-s}
    Both are evaluated with explicit matrix powers, independently of the
    simulation's recursion.
    """
    wm = _matrix(w)
    m = wm.shape[0]
    horizon = trace.horizon
    z0 = trace.z[0]
    eps = trace.eps
    powers = [np.eye(m)]
    for _ in range(horizon + 1):
        powers.append(powers[-1] @ wm)
    kernels = [p @ (wm - np.eye(m)) for p in powers]
    worst = 0.0
    for t in range(horizon + 1):
        acc = np.zeros(m)
        for s in range(t):
            acc += kernels[s] @ eps[t - s - 1]
        zhat = powers[t] @ z0 + acc + eps[t]
        worst = max(worst, float(np.max(np.abs(zhat - trace.z_hat[t]))))
        if t < horizon:
            znext = powers[t + 1] @ z0 + sum(kernels[s] @ eps[t - s] for s in range(t + 1))
            worst = max(worst, float(np.max(np.abs(znext - trace.z[t + 1]))))
    return worst


def metrics(trace):
    dev = trace.z - trace.mu
    err = np.sqrt(np.sum(dev * dev, axis=1))
    noise_var = np.var(trace.eps, axis=1)
    return MetricSeries(err=err, noise_var=noise_var, clip=np.asarray(trace.clip_counts))


def write_metrics_csv(series, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "err", "noise_var", "clip_count"])
        for t in range(len(series.err)):
            writer.writerow([t, f"{series.err[t]:.12g}", f"{series.noise_var[t]:.12g}", int(series.clip[t])])


def save_archive(path, trace, w):
    """Full-state archive (npz) with the packed index stream for replay."""
    wm = _matrix(w)
    payload = {
        "w": wm, "z": trace.z, "z_hat": trace.z_hat, "eps": trace.eps,
        "clip_counts": trace.clip_counts, "mu": np.array(trace.mu),
    }
    if trace.sizes is not None:
        payload["sizes"] = trace.sizes
    if trace.codec is not None and trace.indices is not None:
        payload["codec"] = np.array(json.dumps(trace.codec.to_dict()))
        payload["packed"] = np.frombuffer(codecs.pack_indices(trace.indices.T, trace.codec.n), dtype=np.uint8)
    np.savez(path, **payload)


def load_archive(path):
    """Returns ``(trace, w)``."""
    with np.load(path, allow_pickle=False) as data:
        spec = indices = None
        if "codec" in data:
            spec = CodecSpec.from_dict(json.loads(str(data["codec"])))
            m = data["z"].shape[1]
            horizon = data["z"].shape[0]
            indices = codecs.unpack_indices(data["packed"].tobytes(), spec.n, m, horizon).T
        trace = RunTrace(z=data["z"], z_hat=data["z_hat"], eps=data["eps"],
                         clip_counts=data["clip_counts"], mu=float(data["mu"]), indices=indices,
                         codec=spec, sizes=data["sizes"] if "sizes" in data else None)
        return trace, data["w"]


def replay_mismatch(trace):
    """Max |zhat| difference when the reconstructions are rebuilt from the index stream alone."""
    if trace.codec is None or trace.indices is None:
        return None
    state = trace.codec(trace.z.shape[1])
    rebuilt, _ = codecs.replay_decoder(state, trace.indices, trace.sizes)
    return float(np.max(np.abs(rebuilt - trace.z_hat)))
