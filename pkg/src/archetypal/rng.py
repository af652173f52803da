"""Counter-based pseudo-random number generation.

The generator is SplitMix64 used in counter mode: draw ``i`` of a source
seeded with ``s`` is ``mix64(s + i * GOLDEN)`` where ``GOLDEN`` is the 64-bit
golden-ratio constant and ``mix64`` is the SplitMix64 finalizer.  Because
each output is a pure function of (seed, counter), whole blocks of draws are
produced with vectorized uint64 arithmetic, and the integer stream is
bit-identical on every platform.  Derived quantities that go through libm
(normals, gammas) are bit-identical for a fixed platform/NumPy build.

Child sources for parallel work are derived with the same finalizer, see
:meth:`RandomSource.derive`.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1

# 53-bit mantissa scaling for uniforms in [0, 1)
_INV_2_53 = float(2.0 ** -53)


def _mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer, elementwise over a uint64 array."""
    z = (z ^ (z >> np.uint64(30))) * _MIX_A
    z = (z ^ (z >> np.uint64(27))) * _MIX_B
    return z ^ (z >> np.uint64(31))


class RandomSource:
    """Seeded deterministic random source.

    Two sources constructed with the same seed produce identical draw
    sequences.  A source must not be shared between threads; use
    :meth:`derive` to split off independent child streams.

    Parameters
    ----------
    seed : int
        Any integer; reduced modulo 2**64.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._count = 0

    def __repr__(self):
        return f"RandomSource(seed={self.seed})"

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit outputs as a uint64 array."""
        if n < 0:
            raise ValueError(f"draw count must be >= 0, got {n}")
        idx = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        return _mix64(np.uint64(self.seed) + idx * _GOLDEN)

    def derive(self, stream: int) -> "RandomSource":
        """Child source for stream ``stream``, independent of this one.

        The child seed is ``mix64(seed ^ mix64((stream + 1) * GOLDEN))``;
        distinct stream ids give unrelated sequences for any fixed seed.
        """
        tag = _mix64(np.array([(int(stream) + 1) & _MASK64], dtype=np.uint64) * _GOLDEN)
        child = _mix64(np.uint64(self.seed) ^ tag)
        return RandomSource(int(child[0]))

    def uniform(self, size: int | None = None) -> np.ndarray | float:
        """Uniform draws in [0, 1)."""
        n = 1 if size is None else int(size)
        vals = (self.raw(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53
        return float(vals[0]) if size is None else vals

    def normal(self, size: int | None = None) -> np.ndarray | float:
        """Standard normal draws via Box-Muller."""
        n = 1 if size is None else int(size)
        pairs = (n + 1) // 2
        # u1 in (0, 1] so the log is finite
        u1 = ((self.raw(pairs) >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
        u2 = (self.raw(pairs) >> np.uint64(11)).astype(np.float64) * _INV_2_53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        vals = np.empty(2 * pairs)
        vals[0::2] = r * np.cos(theta)
        vals[1::2] = r * np.sin(theta)
        vals = vals[:n]
        return float(vals[0]) if size is None else vals

    def integers(self, bound: int, size: int | None = None) -> np.ndarray | int:
        """Integer draws in [0, bound)."""
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        n = 1 if size is None else int(size)
        vals = (self.raw(n) % np.uint64(bound)).astype(np.int64)
        return int(vals[0]) if size is None else vals

    def permutation(self, n: int) -> np.ndarray:
        """Random permutation of range(n) (argsort of raw keys)."""
        return np.argsort(self.raw(n), kind="stable")

    def gamma(self, shape, size: int | None = None) -> np.ndarray | float:
        """Gamma(shape, 1) draws via the Marsaglia-Tsang squeeze method.

        ``shape`` may be a scalar or an array; with ``size`` given, a scalar
        shape is broadcast to ``size`` draws.  Shapes below 1 use the
        ``Gamma(shape + 1) * U**(1/shape)`` boost.
        """
        alpha = np.asarray(shape, dtype=np.float64)
        scalar_out = size is None and alpha.ndim == 0
        if size is not None and alpha.ndim == 0:
            alpha = np.full(int(size), float(alpha))
        alpha = np.atleast_1d(alpha).ravel()
        if np.any(alpha <= 0) or not np.all(np.isfinite(alpha)):
            raise ValueError("gamma shape parameters must be positive and finite")

        boost = alpha < 1.0
        a_eff = np.where(boost, alpha + 1.0, alpha)
        d = a_eff - 1.0 / 3.0
        c = 1.0 / np.sqrt(9.0 * d)

        out = np.empty(alpha.size)
        pending = np.arange(alpha.size)
        while pending.size:
            x = np.asarray(self.normal(pending.size))
            v = (1.0 + c[pending] * x) ** 3
            u = np.asarray(self.uniform(pending.size))
            ok = v > 0.0
            v_safe = np.where(ok, v, 1.0)
            squeeze = u < 1.0 - 0.0331 * x ** 4
            full = np.log(np.maximum(u, 1e-300)) < (
                0.5 * x ** 2 + d[pending] * (1.0 - v_safe + np.log(v_safe))
            )
            accept = ok & (squeeze | full)
            sel = pending[accept]
            out[sel] = d[sel] * v[accept]
            pending = pending[~accept]

        n_boost = int(boost.sum())
        if n_boost:
            u = np.asarray(self.uniform(n_boost))
            out[boost] *= np.maximum(u, 1e-300) ** (1.0 / alpha[boost])

        return float(out[0]) if scalar_out else out

    def dirichlet(self, alpha, size: int | None = None) -> np.ndarray:
        """Dirichlet draws: independent gammas normalized by their sum.

        Returns shape ``(k,)`` for ``size=None`` and ``(size, k)`` otherwise.
        """
        alpha = np.asarray(alpha, dtype=np.float64).ravel()
        if alpha.size == 0:
            raise ValueError("alpha must have at least one entry")
        if np.any(alpha <= 0) or not np.all(np.isfinite(alpha)):
            raise ValueError("Dirichlet concentrations must be positive and finite")
        n = 1 if size is None else int(size)
        g = self.gamma(np.tile(alpha, n)).reshape(n, alpha.size)
        totals = g.sum(axis=1, keepdims=True)
        # all-zero rows can only arise from underflow at tiny alpha; redraw them
        while np.any(totals == 0.0):
            bad = np.nonzero(totals[:, 0] == 0.0)[0]
            g[bad] = self.gamma(np.tile(alpha, bad.size)).reshape(bad.size, alpha.size)
            totals = g.sum(axis=1, keepdims=True)
        w = g / totals
        return w[0] if size is None else w
