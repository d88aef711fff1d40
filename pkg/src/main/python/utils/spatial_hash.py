"""
Uniform-grid spatial hash for fixed-radius neighbour queries on point features
"""
import itertools
import logging
from typing import Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)

# Large odd multipliers; a collision only adds candidates, never drops one
_PRIMES = np.array(
    [73856093, 19349663, 83492791, 49979687, 67867967, 86028121, 15485863, 32452843],
    dtype=np.int64,
)
_LABEL_PRIME = np.int64(2654435761)


class SpatialHash:
    """
    Bucket points by floor(feature / bucket) and join query points against them

    Features must be 1-Lipschitz per coordinate with respect to the true metric,
    so that every pair within distance r is also within r in the sup norm of
    features. Candidate pairs are filtered in feature space only; callers
    confirm them with the true distance.
    """

    def __init__(
        self,
        features: np.ndarray,
        bucket: float,
        labels: Optional[np.ndarray] = None,
    ):
        if bucket <= 0 or not np.isfinite(bucket):
            raise ValueError(f"bucket size must be positive, got {bucket}")
        self.features = np.atleast_2d(np.asarray(features, dtype=float))
        if self.features.shape[0] == 0:
            self.features = self.features.reshape(0, max(self.features.shape[-1], 1))
        self.bucket = float(bucket)
        self.dim = self.features.shape[1]
        self.labels = (
            np.zeros(self.features.shape[0], dtype=np.int64)
            if labels is None
            else np.asarray(labels, dtype=np.int64)
        )
        cells = self._cells(self.features)
        keys = self._hash(cells, self.labels)
        self.order = np.argsort(keys, kind="stable")
        self.sorted_keys = keys[self.order]

    def __len__(self) -> int:
        return int(self.features.shape[0])

    def _cells(self, features: np.ndarray) -> np.ndarray:
        return np.floor(features / self.bucket).astype(np.int64)

    def _hash(self, cells: np.ndarray, labels: np.ndarray) -> np.ndarray:
        primes = np.resize(_PRIMES, self.dim)
        keys = np.zeros(cells.shape[0], dtype=np.int64)
        for axis in range(self.dim):
            keys ^= cells[:, axis] * primes[axis]
        keys ^= labels * _LABEL_PRIME
        return keys

    def query_pairs(
        self,
        queries: np.ndarray,
        radius: float,
        label: Optional[int] = None,
        chunk: int = 65536,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Candidate pairs whose features are within radius in the sup norm

        Args:
            queries: (Q, d) query features
            radius: query radius
            label: restrict matches to indexed points carrying this label

        Returns:
            (query indices, indexed point indices), sorted by query then point
        """
        queries = np.atleast_2d(np.asarray(queries, dtype=float))
        if len(self) == 0 or queries.shape[0] == 0:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty
        rings = max(1, int(np.ceil(radius / self.bucket)))
        offsets = np.array(
            list(itertools.product(range(-rings, rings + 1), repeat=self.dim)),
            dtype=np.int64,
        )
        out_q, out_r = [], []
        for start in range(0, queries.shape[0], chunk):
            block = queries[start : start + chunk]
            qi, ri = self._join_block(block, offsets, radius, label)
            out_q.append(qi + start)
            out_r.append(ri)
        qi = np.concatenate(out_q)
        ri = np.concatenate(out_r)
        if qi.size == 0:
            return qi, ri
        combined = np.unique(qi * np.int64(len(self)) + ri)
        return combined // len(self), combined % len(self)

    def _join_block(self, block, offsets, radius, label):
        qcells = self._cells(block)
        n = block.shape[0]
        labels = np.full(n, 0 if label is None else label, dtype=np.int64)
        found_q, found_r = [], []
        for offset in offsets:
            if label is None and np.any(self.labels):
                candidates = [self._lookup(qcells + offset, np.full(n, lab)) for lab in np.unique(self.labels)]
            else:
                candidates = [self._lookup(qcells + offset, labels)]
            for qi, ri in candidates:
                found_q.append(qi)
                found_r.append(ri)
        qi = np.concatenate(found_q) if found_q else np.zeros(0, dtype=np.int64)
        ri = np.concatenate(found_r) if found_r else np.zeros(0, dtype=np.int64)
        if qi.size == 0:
            return qi, ri
        gap = np.abs(block[qi] - self.features[ri]).max(axis=1)
        keep = gap <= radius
        if label is not None:
            keep &= self.labels[ri] == label
        return qi[keep], ri[keep]

    def _lookup(self, cells: np.ndarray, labels: np.ndarray):
        keys = self._hash(cells, labels)
        lo = np.searchsorted(self.sorted_keys, keys, side="left")
        hi = np.searchsorted(self.sorted_keys, keys, side="right")
        counts = hi - lo
        total = int(counts.sum())
        if total == 0:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty
        qi = np.repeat(np.arange(cells.shape[0], dtype=np.int64), counts)
        firsts = np.repeat(lo, counts)
        run_starts = np.repeat(np.cumsum(counts) - counts, counts)
        ri = self.order[firsts + (np.arange(total, dtype=np.int64) - run_starts)]
        return qi, ri
