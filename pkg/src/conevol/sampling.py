"""Deterministic Gaussian sampling and streaming moment summaries.

Randomness comes from a counter-based generator: uniform draw number n of
a stream with a given seed is mix(seed + (n+1) * golden), where mix is
the SplitMix64 output permutation.  Every Monte Carlo sample owns a
fixed block of 2**20 counters addressed by its global sample index, and
each Gaussian coordinate pair owns a 128-counter slot inside that block
for its polar Box-Muller rejection attempts.  Draw j of chunk i is
therefore a pure function of (seed, i, j): results never depend on how
many chunks are processed, in what order, or on how many worker threads
ran them.

Summaries accumulate count, mean and second/third/fourth central moment
sums per chunk and combine chunks with the exact pairwise-merge update
formulas, folding in a fixed chunk-index order, so the final summary is
bit-identical for any worker count.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cones import ambient_dim, norms_block, supports_face_dim

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_U64_ONE = np.uint64(1)
_INV_2_53 = 2.0 ** -53

SAMPLE_BLOCK_BITS = 20          # counters reserved per sample
PAIR_SLOT_BITS = 7              # counters per Box-Muller coordinate pair
_MAX_PAIR_ATTEMPTS = 64         # rejection cap; P(fail) < (1 - pi/4)**64


def counter_uniforms(seed, counters):
    """Uniform [0, 1) draws indexed by absolute counter values (uint64)."""
    z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + (counters + _U64_ONE) * _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX_A
    z = (z ^ (z >> np.uint64(27))) * _MIX_B
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53


def _sample_bases(chunk_index, count, chunk_size):
    first = np.uint64(chunk_index) * np.uint64(chunk_size)
    gidx = first + np.arange(count, dtype=np.uint64)
    return gidx << np.uint64(SAMPLE_BLOCK_BITS)


def gaussian_block(seed, chunk_index, count, dim, chunk_size, slot_offset=0):
    """Standard normal block of shape (count, dim) for one chunk.

    Polar Box-Muller: each coordinate pair repeatedly draws a point of
    the square [-1, 1)^2 from its own counter slot until it lands inside
    the unit disk.  slot_offset shifts the slot numbering and exists only
    so degenerate samples can be redrawn deterministically.
    """
    n_pairs = (dim + 1) // 2
    if ((slot_offset + n_pairs) << PAIR_SLOT_BITS) > (1 << SAMPLE_BLOCK_BITS):
        raise ValueError("dimension exceeds the per-sample counter budget")
    bases = _sample_bases(chunk_index, count, chunk_size)
    slots = (np.arange(slot_offset, slot_offset + n_pairs, dtype=np.uint64)
             << np.uint64(PAIR_SLOT_BITS))
    flat = (bases[:, None] + slots[None, :]).ravel()
    total = flat.shape[0]
    out_x = np.empty(total)
    out_y = np.empty(total)
    pending = np.arange(total)
    for attempt in range(_MAX_PAIR_ATTEMPTS):
        c0 = flat[pending] + np.uint64(2 * attempt)
        u = 2.0 * counter_uniforms(seed, c0) - 1.0
        v = 2.0 * counter_uniforms(seed, c0 + _U64_ONE) - 1.0
        ssq = u * u + v * v
        ok = (ssq < 1.0) & (ssq > 0.0)
        if ok.any():
            factor = np.sqrt(-2.0 * np.log(ssq[ok]) / ssq[ok])
            hit = pending[ok]
            out_x[hit] = u[ok] * factor
            out_y[hit] = v[ok] * factor
            pending = pending[~ok]
        if pending.size == 0:
            break
    else:
        raise RuntimeError("Box-Muller rejection cap exceeded")
    out = np.empty((count, 2 * n_pairs))
    out[:, 0::2] = out_x.reshape(count, n_pairs)
    out[:, 1::2] = out_y.reshape(count, n_pairs)
    return out[:, :dim]


_UNDERFLOW_NORM = 1e-300


def sphere_block(seed, chunk_index, count, dim, chunk_size):
    """Uniform points on the unit sphere (normalized Gaussian block).

    A row whose norm underflows (probability is zero for all practical
    purposes) is redrawn from later counter slots of the same sample.
    """
    g = gaussian_block(seed, chunk_index, count, dim, chunk_size)
    n_pairs = (dim + 1) // 2
    for redraw in range(1, 8):
        norms = np.sqrt(np.einsum("ij,ij->i", g, g))
        bad = norms < _UNDERFLOW_NORM
        if not bad.any():
            return g / norms[:, None]
        rows = np.where(bad)[0]
        fresh = gaussian_block(seed, chunk_index, count, dim, chunk_size,
                               slot_offset=redraw * n_pairs)
        g[rows] = fresh[rows]
    raise RuntimeError("sphere sample underflow persisted across redraws")


def sphere_sample(g):
    """Normalize one vector to the unit sphere."""
    g = np.asarray(g, dtype=float)
    norm = math.sqrt(float(g @ g))
    if norm < _UNDERFLOW_NORM:
        raise ValueError("cannot normalize a (near-)zero vector")
    return g / norm


@dataclass(frozen=True)
class MonteCarloConfig:
    """Knobs that determine a sampling run.

    Summaries depend only on (seed, total_samples, chunk_size,
    reservoir_cap); worker counts change wall time, never results.
    """
    seed: int
    total_samples: int
    chunk_size: int = 1 << 14
    reservoir_cap: int = 100_000

    def __post_init__(self):
        if self.total_samples < 1:
            raise ValueError("total_samples must be positive")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be positive")
        if self.reservoir_cap < 1:
            raise ValueError("reservoir_cap must be positive")

    def chunks(self):
        full, rem = divmod(self.total_samples, self.chunk_size)
        sizes = [self.chunk_size] * full + ([rem] if rem else [])
        return list(enumerate(sizes))

    @property
    def reservoir_stride(self):
        return max(1, -(-self.total_samples // self.reservoir_cap))


@dataclass
class MomentAccumulator:
    """Count, mean and central moment sums M2..M4 of a scalar stream."""
    n: int = 0
    mean: float = 0.0
    m2: float = 0.0
    m3: float = 0.0
    m4: float = 0.0

    @classmethod
    def from_values(cls, x):
        x = np.asarray(x, dtype=float)
        n = x.shape[0]
        if n == 0:
            return cls()
        mean = float(x.mean())
        dev = x - mean
        d2 = dev * dev
        return cls(n=n, mean=mean, m2=float(d2.sum()),
                   m3=float((d2 * dev).sum()), m4=float((d2 * d2).sum()))

    def merge(self, other):
        """Exact pairwise combination of two disjoint streams."""
        na, nb = self.n, other.n
        if na == 0:
            return MomentAccumulator(other.n, other.mean, other.m2, other.m3, other.m4)
        if nb == 0:
            return MomentAccumulator(self.n, self.mean, self.m2, self.m3, self.m4)
        n = na + nb
        delta = other.mean - self.mean
        d_n = delta / n
        mean = self.mean + nb * d_n
        m2 = self.m2 + other.m2 + delta * d_n * na * nb
        m3 = (self.m3 + other.m3
              + d_n ** 2 * delta * na * nb * (na - nb)
              + 3.0 * d_n * (na * other.m2 - nb * self.m2))
        m4 = (self.m4 + other.m4
              + d_n ** 3 * delta * na * nb * (na * na - na * nb + nb * nb)
              + 6.0 * d_n ** 2 * (na * na * other.m2 + nb * nb * self.m2)
              + 4.0 * d_n * (na * other.m3 - nb * self.m3))
        return MomentAccumulator(n, mean, m2, m3, m4)

    @property
    def variance(self):
        """Unbiased sample variance."""
        return self.m2 / (self.n - 1) if self.n > 1 else 0.0

    def central_moment(self, k):
        if self.n == 0:
            return 0.0
        return {2: self.m2, 3: self.m3, 4: self.m4}[k] / self.n

    @property
    def se_mean(self):
        return math.sqrt(self.variance / self.n) if self.n > 0 else math.inf


@dataclass
class SampleSummary:
    """Streaming summary of the squared projection / residual norms."""
    dim: int
    count: int
    s_moments: MomentAccumulator
    t_moments: MomentAccumulator
    face_hist: np.ndarray | None
    reservoir_s: np.ndarray
    reservoir_t: np.ndarray
    reservoir_stride: int
    seed: int
    chunk_size: int

    @property
    def mean_s(self):
        return self.s_moments.mean

    @property
    def mean_t(self):
        return self.t_moments.mean


def resolve_workers(workers=None):
    """Worker count: explicit argument, else CONEVOL_THREADS, else 1."""
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("CONEVOL_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"CONEVOL_THREADS must be an integer, got {env!r}") from None
    return 1


def _chunk_summary(cone, config, chunk_index, count, want_faces, dim):
    X = gaussian_block(config.seed, chunk_index, count, dim, config.chunk_size)
    s, t, fd = norms_block(cone, X)
    hist = None
    if want_faces and fd is not None:
        hist = np.bincount(fd, minlength=dim + 1).astype(np.int64)
    stride = config.reservoir_stride
    first = chunk_index * config.chunk_size
    offset = (-first) % stride
    keep = np.arange(offset, count, stride)
    return (MomentAccumulator.from_values(s), MomentAccumulator.from_values(t),
            hist, s[keep], t[keep])


def run_summary(cone, config, workers=None):
    """Sample Gaussians, project every draw, and summarize both norms.

    Returns a SampleSummary with exact-merged central moments up to
    order four for s = ||proj(g)||^2 and t = dist^2(g, cone), a face
    dimension histogram for polyhedral cones, and a stride-thinned
    reservoir of retained (s, t) pairs for the profile estimators.
    """
    dim = ambient_dim(cone)
    want_faces = supports_face_dim(cone)
    chunks = config.chunks()
    nworkers = resolve_workers(workers)

    def work(item):
        index, count = item
        return _chunk_summary(cone, config, index, count, want_faces, dim)

    if nworkers == 1 or len(chunks) == 1:
        results = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            results = list(pool.map(work, chunks))

    s_acc = MomentAccumulator()
    t_acc = MomentAccumulator()
    hist = np.zeros(dim + 1, dtype=np.int64) if want_faces else None
    res_s = []
    res_t = []
    for s_part, t_part, hist_part, rs, rt in results:
        s_acc = s_acc.merge(s_part)
        t_acc = t_acc.merge(t_part)
        if hist is not None and hist_part is not None:
            hist += hist_part
        res_s.append(rs)
        res_t.append(rt)
    return SampleSummary(
        dim=dim,
        count=config.total_samples,
        s_moments=s_acc,
        t_moments=t_acc,
        face_hist=hist,
        reservoir_s=np.concatenate(res_s) if res_s else np.empty(0),
        reservoir_t=np.concatenate(res_t) if res_t else np.empty(0),
        reservoir_stride=config.reservoir_stride,
        seed=config.seed,
        chunk_size=config.chunk_size,
    )


def iter_gaussian_chunks(config, dim):
    """Yield (chunk_index, block) pairs for custom streaming reductions."""
    for index, count in config.chunks():
        yield index, gaussian_block(config.seed, index, count, dim, config.chunk_size)
