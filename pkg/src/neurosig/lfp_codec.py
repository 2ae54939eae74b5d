"""Cross-channel LFP compression: one-tap spatial prediction over a trained tree.

Every non-root channel predicts its temporally-decorrelated (DPCM2) residuals
from a parent channel's residuals scaled by a Q2.14 factor gamma, the
closed-form least-squares solution over a training window. Parents are chosen
by a minimum spanning tree on 1 - rho^2 edge weights so the channel chain can
never close a loop. A single adaptive Rice coder, shared by all channels of
the group, codes the mapped residuals interleaved per sample tick. Lossless
end to end: the quantized-gamma prediction is computed identically on both
sides.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .decorrelate import (
    dpcm2_forward_block,
    dpcm2_inverse_block,
    unzigzag_block,
    zigzag_block,
)
from .entropy import make_rice_state
from .errors import CorruptStreamError

GAMMA_FRAC_BITS = 14
GAMMA_ONE = 1 << GAMMA_FRAC_BITS
GAMMA_MAX = (1 << 15) - 1  # 2 - 2^-14 in Q2.14
MAX_GROUP = 8


@dataclass
class CceTrainingConfig:
    """Training window [n0, N] in the 1-indexed convention of the estimator."""

    window_n: int = 2000
    n0: int = 3

    def __post_init__(self):
        if not 1 <= self.n0 < self.window_n:
            raise ValueError(f"need 1 <= n0 < window_n, got n0={self.n0}, N={self.window_n}")


@dataclass
class ChannelChain:
    """Spatial-prediction tree: per-channel parent plus quantized gamma.

    order lists channels root-first in encode order (parents always precede
    children); parent and gamma_q are keyed by child channel index.
    """

    root: int
    order: tuple
    parent: dict = field(default_factory=dict)
    gamma_q: dict = field(default_factory=dict)

    def __post_init__(self):
        channels = set(self.order)
        if self.order[0] != self.root:
            raise ValueError("order must start at the root")
        if len(channels) != len(self.order):
            raise ValueError("duplicate channel in chain order")
        if set(self.parent) != channels - {self.root}:
            raise ValueError("every non-root channel needs exactly one parent")
        seen = {self.root}
        for ch in self.order[1:]:
            if self.parent[ch] not in seen:
                raise ValueError("chain order must place parents before children")
            seen.add(ch)
        for g in self.gamma_q.values():
            if not -GAMMA_MAX <= g <= GAMMA_MAX:
                raise ValueError("gamma_q outside the Q2.14 range")

    @property
    def edges(self):
        return [(self.parent[ch], ch) for ch in self.order[1:]]


class GammaEstimate(NamedTuple):
    gamma_q: int
    degenerate: bool


def residual_energy(e):
    """Sum of squared residuals, the coding-length proxy being minimized."""
    e = np.asarray(e, dtype=np.int64)
    return int(np.dot(e, e))


def _training_slice(e, config):
    # 1-indexed [n0, N] inclusive.
    return np.asarray(e[config.n0 - 1 : config.window_n], dtype=np.int64)


def estimate_gamma(e_c, e_r, config=None):
    """Closed-form least-squares gamma over the training window, in Q2.14.

    Rounding is half-away-from-zero and the result is clamped to the
    representable range. A zero denominator returns gamma 0 with the
    degenerate flag set.
    """
    config = config or CceTrainingConfig(window_n=min(len(e_c), len(e_r)), n0=1)
    c = _training_slice(e_c, config)
    r = _training_slice(e_r, config)
    if len(c) != len(r):
        raise ValueError("residual sequences must have equal training length")
    den = int(np.dot(r, r))
    if den == 0:
        return GammaEstimate(0, True)
    num = int(np.dot(c, r))
    scaled = abs(num) << GAMMA_FRAC_BITS
    gamma = (scaled + den // 2) // den
    if num < 0:
        gamma = -gamma
    gamma = max(-GAMMA_MAX, min(GAMMA_MAX, gamma))
    return GammaEstimate(int(gamma), False)


def quantized_prediction(gamma_q, e_r):
    """(gamma_q * e_r) >> 14 with round-half-away-from-zero, vectorized."""
    v = gamma_q * np.asarray(e_r, dtype=np.int64)
    half = 1 << (GAMMA_FRAC_BITS - 1)
    return np.where(
        v >= 0,
        (v + half) >> GAMMA_FRAC_BITS,
        -((-v + half) >> GAMMA_FRAC_BITS),
    )


def train_chain(samples_by_channel, config=None):
    """Fit the channel chain on a training window.

    samples_by_channel maps channel index -> sample array. Edge weight is
    1 - rho^2 of the DPCM2 residuals over the training slice; the MST grows
    from the lowest channel index (deterministic Prim, ties to the lower
    index), which also serves as the root. Gamma is fit per edge with the
    child predicted from its parent.
    """
    config = config or CceTrainingConfig()
    channels = sorted(samples_by_channel)
    n = len(channels)
    if n < 2:
        raise ValueError("chain training needs at least 2 channels")
    if n > MAX_GROUP:
        raise ValueError(f"chain training supports at most {MAX_GROUP} channels")
    for ch in channels:
        if len(samples_by_channel[ch]) < config.window_n:
            raise ValueError(f"channel {ch} shorter than the training window")
    res = {
        ch: _training_slice(dpcm2_forward_block(samples_by_channel[ch][: config.window_n]), config)
        for ch in channels
    }
    den = {ch: float(np.dot(res[ch], res[ch])) for ch in channels}

    def weight(a, b):
        d = den[a] * den[b]
        if d == 0.0:
            return 1.0
        num = float(np.dot(res[a], res[b]))
        return 1.0 - num * num / d

    root = channels[0]
    in_tree = {root}
    best = {ch: (weight(root, ch), root) for ch in channels[1:]}
    order = [root]
    parent = {}
    gamma_q = {}
    while len(in_tree) < n:
        pick = min((w, ch) for ch, (w, _) in best.items())[1]
        w, par = best.pop(pick)
        in_tree.add(pick)
        order.append(pick)
        parent[pick] = par
        gamma_q[pick] = estimate_gamma(res[pick], res[par], _sliced_config(res[pick])).gamma_q
        for ch in best:
            cand = weight(pick, ch)
            if cand < best[ch][0]:
                best[ch] = (cand, pick)
    return ChannelChain(root=root, order=tuple(order), parent=parent, gamma_q=gamma_q)


def _sliced_config(sliced):
    """Estimator config for residuals already sliced to the training window."""
    return CceTrainingConfig(window_n=len(sliced), n0=1)


def cce_encode(samples_by_channel, chain, sink):
    """Interleave spatially-decorrelated residuals through the Rice engine.

    Channels are visited in chain order within each sample tick (root first,
    parents before children). The shared engine keeps one adaptation context
    per channel so each channel's parameter tracks its own statistics.
    """
    lengths = {len(samples_by_channel[ch]) for ch in chain.order}
    if len(lengths) != 1:
        raise ValueError("all channels must have equal length")
    total = lengths.pop()
    start_bits = sink.bit_length
    if total == 0:
        return 0
    e = {ch: dpcm2_forward_block(samples_by_channel[ch]).astype(np.int64) for ch in chain.order}
    coded = {chain.root: e[chain.root]}
    for ch in chain.order[1:]:
        coded[ch] = e[ch] - quantized_prediction(chain.gamma_q[ch], e[chain.parent[ch]])
    stacked = np.stack([zigzag_block(coded[ch]) for ch in chain.order])
    interleaved = stacked.T.reshape(-1)
    states = [make_rice_state() for _ in chain.order]
    kernels.RiceCoder.encode_interleaved(interleaved, states, sink)
    return sink.bit_length - start_bits


def cce_decode(source, chain, total_samples):
    """Exact inverse of cce_encode; returns channel -> int16 samples."""
    n_ch = len(chain.order)
    if total_samples == 0:
        return {ch: np.empty(0, dtype=np.int16) for ch in chain.order}
    states = [make_rice_state() for _ in chain.order]
    m = kernels.RiceCoder.decode_interleaved(n_ch * total_samples, states, source)
    per_channel = unzigzag_block(m).reshape(total_samples, n_ch).T.astype(np.int64)
    coded = {ch: per_channel[i] for i, ch in enumerate(chain.order)}
    e = {chain.root: coded[chain.root]}
    for ch in chain.order[1:]:
        e[ch] = coded[ch] + quantized_prediction(chain.gamma_q[ch], e[chain.parent[ch]])
    out = {}
    for ch in chain.order:
        try:
            out[ch] = dpcm2_inverse_block(e[ch]).astype(np.int16)
        except CorruptStreamError:
            raise
    return out


def serialize_chain(chain, writer):
    """root u8, then per non-root channel in order: channel u8, parent u8, gamma i16 LE."""
    writer.write_bits(chain.root, 8)
    for ch in chain.order[1:]:
        writer.write_bits(ch, 8)
        writer.write_bits(chain.parent[ch], 8)
        g = chain.gamma_q[ch] & 0xFFFF
        writer.write_bits(g & 0xFF, 8)
        writer.write_bits(g >> 8, 8)


def deserialize_chain(reader, count):
    root = reader.read_bits(8)
    order = [root]
    parent = {}
    gamma_q = {}
    for _ in range(count - 1):
        ch = reader.read_bits(8)
        par = reader.read_bits(8)
        lo = reader.read_bits(8)
        hi = reader.read_bits(8)
        g = lo | (hi << 8)
        if g >= 1 << 15:
            g -= 1 << 16
        order.append(ch)
        parent[ch] = par
        gamma_q[ch] = g
    return ChannelChain(root=root, order=tuple(order), parent=parent, gamma_q=gamma_q)
