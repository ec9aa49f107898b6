import numpy as np
import pytest
from hypothesis import given, strategies as st

from qconsensus import codec
from qconsensus.codec import (
    decode,
    encode,
    init_state,
    pack_indices,
    replay_decoder,
    step,
    uniform_decode,
    uniform_encode,
    unpack_indices,
)


def test_uniform_encode_examples():
    assert int(uniform_encode(0.3, 0.0, 1.0, 2).index) == 1
    cw = uniform_encode(0.0, 0.0, 1.0, 2)
    assert int(cw.index) == 0 and not bool(cw.clipped)
    cw = uniform_encode(1.7, 0.0, 1.0, 2)
    assert int(cw.index) == 3 and bool(cw.clipped)


def test_uniform_decode_examples():
    assert uniform_decode(1, 0.0, 1.0, 2) == pytest.approx(0.375)
    assert uniform_decode(0, 0.0, 1.0, 1) == pytest.approx(0.25)


@pytest.mark.parametrize("n", [1, 2, 4, 6, 8])
def test_uniform_round_trip_error(n):
    x = np.random.default_rng(n).uniform(-0.3, 0.7, 10**6)
    hat = uniform_decode(uniform_encode(x, -0.3, 1.0, n).index, -0.3, 1.0, n)
    assert np.max(np.abs(hat - x)) <= 1.0 / 2 ** (n + 1) * (1 + 1e-12)


def test_progressive_example():
    state = init_state("progressive", 2, 1)
    cw, state, hat = step(state, np.array([0.58]), 0.5)
    assert int(cw.index[0]) == 2 and hat[0] == pytest.approx(0.5625)


@given(center=st.floats(-5, 5), size=st.floats(1e-6, 10), n=st.integers(1, 10))
def test_progressive_centre_never_clips(center, size, n):
    state = codec.CodecState("progressive", n, np.array([center]), np.array([size]), np.array([-1]))
    cw, _, hat = step(state, np.array([center]), size)
    assert not cw.clipped[0]
    assert abs(hat[0] - center) <= size / 2 ** (n + 1) * (1 + 1e-9) + 1e-12


@given(x=st.floats(0, 1), n=st.integers(1, 10))
def test_progressive_bootstrap_in_range(x, n):
    cw, _, hat = step(init_state("progressive", n, 1), np.array([x]), 1.0)
    assert not cw.clipped[0] and abs(hat[0] - x) <= 1.0 / 2 ** (n + 1) + 1e-15


@given(prev=st.floats(-3, 3), off=st.floats(-0.999, 0.999), size=st.floats(1e-4, 5), n=st.integers(1, 10))
def test_progressive_noise_bound(prev, off, size, n):
    state = codec.CodecState("progressive", n, np.array([prev]), np.array([size]), np.array([-1]))
    x = prev + off * size / 2
    cw, _, hat = step(state, np.array([x]), size)
    assert not cw.clipped[0]
    assert abs(hat[0] - x) <= size / 2 ** (n + 1) * (1 + 1e-9)


def test_zoom_contracts_when_on_target():
    state = init_state("zoom", 4, 1)
    f0 = state.scale[0]
    _, state2, hat = step(state, state.prev_hat.copy())
    assert hat[0] == state.prev_hat[0]
    assert state2.scale[0] == pytest.approx(codec.ZOOM_K_IN * f0)


@pytest.mark.parametrize("n", [2, 3, 6])
def test_zoom_expands_after_overshoot(n):
    state = init_state("zoom", n, 1, f0=0.1)
    cw, state2, _ = step(state, state.prev_hat + 0.3)
    assert cw.clipped[0]
    assert state2.scale[0] == pytest.approx(codec.ZOOM_K_OUT * 0.1)


@given(d=st.floats(-0.99, 0.99), n=st.integers(2, 10))
def test_zoom_in_range_error(d, n):
    state = init_state("zoom", n, 1)
    f = state.scale[0]
    _, _, hat = step(state, state.prev_hat + d * f)
    k = 2 ** (n - 1) - 1
    assert abs(hat[0] - (state.prev_hat[0] + d * f)) <= f / (2 * k) * (1 + 1e-12)


def test_zoom_scale_capped():
    state = init_state("zoom", 2, 1)
    for _ in range(50):
        _, state, _ = step(state, state.prev_hat + 1e6)
    assert state.scale[0] <= 1.0


def test_adapt_constant_input_converges():
    state = init_state("adapt", 2, 1)
    steps = []
    for _ in range(200):
        _, state, hat = step(state, np.array([0.3]))
        steps.append(state.scale[0])
    assert abs(hat[0] - 0.3) < 1e-9
    assert steps[-1] < 1e-9


def test_adapt_ramp_grows_step():
    state = init_state("adapt", 2, 1, step0=1e-3)
    x = 0.5
    scales = []
    for _ in range(10):
        x += 1.0
        cw, state, _ = step(state, np.array([x]))
        scales.append(state.scale[0])
    ratios = np.array(scales[1:]) / np.array(scales[:-1])
    assert np.allclose(ratios, codec.ADAPT_K)


def test_adapt_unit_gain_is_fixed_step():
    state = init_state("adapt", 3, 1, K=1.0, step0=0.05)
    rng = np.random.default_rng(0)
    for _ in range(100):
        _, state, _ = step(state, rng.uniform(0, 1, 1))
    assert state.scale[0] == 0.05


def _drive(kind, n, m, steps, seed):
    rng = np.random.default_rng(seed)
    state = init_state(kind, n, m)
    initial = state
    x = rng.uniform(0, 1, m)
    sizes = np.maximum(1.0 * 0.999 ** np.arange(steps), 1e-6)
    indices, hats = [], []
    for t in range(steps):
        x = x + rng.normal(0, 0.01, m)
        size = sizes[t] if kind == "progressive" else None
        cw = encode(state, x, size)
        state, hat = decode(state, cw.index, size)
        indices.append(cw.index)
        hats.append(hat)
    return initial, np.array(indices), np.array(hats), sizes


@pytest.mark.parametrize("kind", codec.KINDS)
@pytest.mark.parametrize("n", [1, 2, 5])
def test_lockstep(kind, n):
    initial, indices, hats, sizes = _drive(kind, n, 4, 2000, hash((kind, n)) % 2**32)
    rebuilt, _ = replay_decoder(initial, indices, sizes if kind == "progressive" else None)
    assert np.array_equal(rebuilt, hats)
    assert indices.min() >= 0 and indices.max() < 2 ** n


def test_known_packing():
    # indices 1, 2, 3 at 2 bits: 01 | 10 | 11 from the least significant end -> 0b00111001
    assert pack_indices(np.array([[1, 2, 3]]), 2) == bytes([0b00111001])
    assert pack_indices(np.array([[1, 0, 1, 1, 0, 0, 0, 1, 1]]), 1) == bytes([0b10001101, 0b1])


@given(n=st.integers(1, 12), m=st.integers(1, 6), horizon=st.integers(1, 30), seed=st.integers(0, 2**32 - 1))
def test_pack_round_trip(n, m, horizon, seed):
    idx = np.random.default_rng(seed).integers(0, 2 ** n, size=(m, horizon))
    data = pack_indices(idx, n)
    assert len(data) == -(-m * horizon * n // 8)
    assert np.array_equal(unpack_indices(data, n, m, horizon), idx)


def test_pack_rejects_overflow():
    with pytest.raises(ValueError):
        pack_indices(np.array([[4]]), 2)


def test_init_state_validation():
    with pytest.raises(ValueError):
        init_state("nope", 2, 3)
    with pytest.raises(ValueError):
        init_state("uniform", 0, 3)
