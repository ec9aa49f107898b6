"""n-bit codecs for the values nodes exchange.

Every codec splits into ``encode`` (needs the true value) and ``decode`` (needs
only the transmitted index and the shared state). The encoder obtains its own
reconstruction through ``decode`` too, so a neighbour that starts from the same
state and sees the same indices tracks it bit for bit.

States are vectorised: ``prev_hat`` and ``scale`` hold one entry per node, so a
whole network steps in one call. A scalar state is just a length-1 array.

Kinds
-----
uniform      fixed interval ``[lo, lo + size]``
progressive  interval of size S_t centred on the previous reconstruction
zoom         differential encoder with a scale factor that zooms in / out
adapt        delta modulation with a multiplicatively adapted step

The zoom codec quantizes the scaled difference with a mid-tread quantizer of
2^n - 1 levels {-K, ..., K} / K, K = 2^(n-1) - 1, so that hitting an extreme
level signals saturation to the receiver. The top index is unused, and with
n = 1 the only level is zero. The scale factor never grows past the width of
the initial interval.
"""
from dataclasses import dataclass, field, replace

import numpy as np

KINDS = ("uniform", "progressive", "zoom", "adapt")

ZOOM_F0 = 0.5
ZOOM_K_IN = 0.5
ZOOM_K_OUT = 2.0
ADAPT_K = 1.2


@dataclass(frozen=True)
class Codeword:
    index: np.ndarray
    clipped: np.ndarray  # diagnostic only, never transmitted


@dataclass(frozen=True)
class CodecState:
    kind: str
    n: int
    prev_hat: np.ndarray
    scale: np.ndarray
    last_index: np.ndarray
    aux: dict = field(default_factory=dict)

    @property
    def levels(self):
        return 1 << self.n


def uniform_encode(x, lo, size, n):
    x = np.asarray(x, dtype=float)
    delta = np.asarray(size, dtype=float) / (1 << n)
    raw = np.floor((x - lo) / delta)
    idx = np.clip(raw, 0, (1 << n) - 1)
    # x == lo + size lands in the top cell without being clipped
    clipped = (x < lo) | (x > lo + size)
    return Codeword(index=idx.astype(np.int64), clipped=np.asarray(clipped))


def uniform_decode(index, lo, size, n):
    delta = np.asarray(size, dtype=float) / (1 << n)
    return np.asarray(index) * delta + delta / 2.0 + lo


def init_state(kind, n, m, lo=0.0, hi=1.0, **params):
    """Identical starting state for every node; the centre is the midpoint of the known initial interval."""
    if kind not in KINDS:
        raise ValueError(f"unknown codec kind {kind!r}")
    if n < 1:
        raise ValueError("n must be at least 1")
    center = np.full(m, (lo + hi) / 2.0)
    size = hi - lo
    aux = {}
    if kind == "uniform":
        aux = {"lo": lo, "size": params.get("size", size)}
        scale = np.full(m, aux["size"])
    elif kind == "progressive":
        scale = np.full(m, size)
    elif kind == "zoom":
        aux = {"k_in": params.get("k_in", ZOOM_K_IN), "k_out": params.get("k_out", ZOOM_K_OUT),
               "f_max": params.get("f_max", size)}
        scale = np.full(m, params.get("f0", ZOOM_F0))
    else:
        aux = {"K": params.get("K", ADAPT_K)}
        scale = np.full(m, params.get("step0", size / (1 << n)))
    return CodecState(kind=kind, n=n, prev_hat=center, scale=scale,
                      last_index=np.full(m, -1, dtype=np.int64), aux=aux)


def _half(n):
    return 1 << (n - 1)


def _zoom_k(n):
    return (1 << (n - 1)) - 1


def _zoom_encode(d, n):
    k = _zoom_k(n)
    d = np.asarray(d, dtype=float)
    clipped = np.abs(d) > 1.0
    if k == 0:
        return Codeword(index=np.zeros(d.shape, dtype=np.int64), clipped=clipped)
    level = np.clip(np.floor(k * d + 0.5), -k, k)
    return Codeword(index=(level + k).astype(np.int64), clipped=clipped)


def encode(state, x, size=None):
    """Index for value ``x``. ``size`` is the progressive range S_t and is ignored by other kinds."""
    n = state.n
    if state.kind == "uniform":
        return uniform_encode(x, state.aux["lo"], state.aux["size"], n)
    if state.kind == "progressive":
        return uniform_encode(x, state.prev_hat - size / 2.0, size, n)
    diff = np.asarray(x, dtype=float) - state.prev_hat
    if state.kind == "zoom":
        # with n = 1 the scale shrinks every step and may underflow to zero
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return _zoom_encode(diff / state.scale, n)
    # unit cells centred on k + 1/2, k = -2^(n-1) .. 2^(n-1) - 1
    return uniform_encode(diff / state.scale, -float(_half(n)), float(1 << n), n)


def decode(state, index, size=None):
    """Reconstruction and next state from the index stream alone."""
    index = np.asarray(index, dtype=np.int64)
    n = state.n
    if state.kind == "uniform":
        hat = uniform_decode(index, state.aux["lo"], state.aux["size"], n)
        return replace(state, prev_hat=hat, last_index=index), hat
    if state.kind == "progressive":
        size_arr = np.broadcast_to(np.asarray(size, dtype=float), state.prev_hat.shape)
        hat = uniform_decode(index, state.prev_hat - size / 2.0, size, n)
        return replace(state, prev_hat=hat, scale=np.array(size_arr), last_index=index), hat
    if state.kind == "zoom":
        k = _zoom_k(n)
        level = (index - k) / k if k else np.zeros(index.shape)
        hat = state.prev_hat + state.scale * level
        saturated = np.abs(index - k) == k if k else np.zeros(index.shape, dtype=bool)
        f = np.where(saturated, state.aux["k_out"] * state.scale, state.aux["k_in"] * state.scale)
        f = np.minimum(f, state.aux["f_max"])
        return replace(state, prev_hat=hat, scale=f, last_index=index), hat
    hat = state.prev_hat + state.scale * uniform_decode(index, -float(_half(n)), float(1 << n), n)
    positive = index >= _half(n)
    had_prev = state.last_index >= 0
    agree = positive == (state.last_index >= _half(n))
    K = state.aux["K"]
    step = np.where(~had_prev, state.scale, np.where(agree, state.scale * K, state.scale / K))
    return replace(state, prev_hat=hat, scale=step, last_index=index), hat


def step(state, x, size=None):
    cw = encode(state, x, size)
    new_state, hat = decode(state, cw.index, size)
    return cw, new_state, hat


def uniform_step(state, x):
    return step(state, x)


def progressive_step(state, x, s_next):
    return step(state, x, s_next)


def zoom_step(state, x):
    return step(state, x)


def adapt_step(state, x):
    return step(state, x)


def pack_indices(indices, n):
    """Pack an (m, T) index array into bytes.

    Node-major, iteration-minor; each index takes exactly ``n`` bits, least
    significant bit first, and bits fill each byte from its least significant
    end. The final byte is zero padded.
    """
    idx = np.asarray(indices, dtype=np.uint64).ravel(order="C")
    if idx.size and int(idx.max()) >= (1 << n):
        raise ValueError(f"index does not fit in {n} bits")
    bits = ((idx[:, None] >> np.arange(n, dtype=np.uint64)) & np.uint64(1)).astype(np.uint8)
    return np.packbits(bits.ravel(), bitorder="little").tobytes()


def unpack_indices(data, n, m, horizon):
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    count = m * horizon
    bits = bits[: count * n].reshape(count, n).astype(np.int64)
    vals = (bits << np.arange(n, dtype=np.int64)).sum(axis=1)
    return vals.reshape(m, horizon)


def replay_decoder(initial, indices, sizes=None):
    """Reconstructions from an index stream alone; ``indices`` is (T, m), ``sizes`` the per-step S_t."""
    state = initial
    out = []
    for t, idx in enumerate(np.asarray(indices)):
        state, hat = decode(state, idx, None if sizes is None else sizes[t])
        out.append(hat)
    return np.array(out), state
