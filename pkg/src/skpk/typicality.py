"""Robust typicality and typical-candidate enumeration.

A length-n sequence (or aligned tuple of sequences) is typical for a pmf P
when every cell a of P satisfies |count(a)/n - P(a)| <= epsilon * P(a), and
count(a) = 0 wherever P(a) is a structural zero. The relative form makes the
test scale with each cell's own mass, so rare symbols get proportionally
tight windows.

The rest of the module turns that rule into machinery that never materializes
the alphabet**n sequence space. Fix observed sequences and one unknown
variable (the last pmf axis). Positions group into classes by their observed
cell, and the typicality rule constrains only the per-class symbol counts of
the unknown: each class's count vector must fit the joint windows of its row
and sum to the class size. Candidates therefore factorize into a cross
product of per-class arrangements, which supports counting, lazy iteration,
and vectorized bin-filter scans with the same bookkeeping.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, SearchOverflowError, UsageError
from .sources import STRUCTURAL_ZERO

# absorbs float rounding in window boundaries; deviations of interest are
# at least one count, i.e. 1/n, many orders of magnitude larger
BOUNDARY_FUZZ = 1e-12

DEFAULT_SEARCH_CAP = 2 ** 26
DEFAULT_ENUM_CAP = 2 ** 24
# guard on any single class's arrangements-table cells (rows x positions)
ARRANGE_CELL_CAP = 2 ** 27


@dataclass(frozen=True)
class TypicalityParams:
    """Tolerance and blocklength for the membership rule."""

    epsilon: float
    n: int

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise UsageError(f"epsilon must lie strictly in (0, 1), got {self.epsilon}")
        if self.n < 1:
            raise UsageError(f"n must be >= 1, got {self.n}")


def count_window(n: int, p: float, epsilon: float):
    """Integer counts k admissible for a cell of mass p: the k with
    |k/n - p| <= epsilon * p. Structural zeros admit only k = 0.
    """
    if p <= STRUCTURAL_ZERO:
        return (0, 0)
    lo = math.ceil(n * p * (1.0 - epsilon) - BOUNDARY_FUZZ)
    hi = math.floor(n * p * (1.0 + epsilon) + BOUNDARY_FUZZ)
    return (max(lo, 0), min(hi, n))


def count_windows(pmf: np.ndarray, n: int, epsilon: float):
    """Per-cell windows as two integer arrays shaped like pmf."""
    flat = np.asarray(pmf, dtype=np.float64).ravel()
    lo = np.empty(len(flat), dtype=np.int64)
    hi = np.empty(len(flat), dtype=np.int64)
    for i, p in enumerate(flat):
        lo[i], hi[i] = count_window(n, float(p), epsilon)
    return lo.reshape(pmf.shape), hi.reshape(pmf.shape)


def _as_seq_tuple(seqs):
    if isinstance(seqs, (list, tuple)):
        return tuple(np.asarray(s, dtype=np.int64) for s in seqs)
    return (np.asarray(seqs, dtype=np.int64),)


def joint_counts(seqs, shape) -> np.ndarray:
    """Empirical cell counts of aligned sequences against a pmf shape."""
    seqs = _as_seq_tuple(seqs)
    if len(seqs) != len(shape):
        raise UsageError(f"{len(seqs)} sequences against a {len(shape)}-axis pmf")
    code = np.zeros(len(seqs[0]), dtype=np.int64)
    for s, size in zip(seqs, shape):
        if len(s) != len(seqs[0]):
            raise UsageError("sequences must have equal length")
        if len(s) and (s.min() < 0 or s.max() >= size):
            raise UsageError("sequence symbol outside the pmf alphabet")
        code = code * size + s
    total = 1
    for size in shape:
        total *= size
    return np.bincount(code, minlength=total).reshape(shape)


def is_strongly_typical(seqs, pmf: np.ndarray, params: TypicalityParams) -> bool:
    """Membership test. seqs is one array or an aligned tuple; pmf must have
    one axis per sequence. Length must equal params.n.
    """
    seqs = _as_seq_tuple(seqs)
    pmf = np.asarray(pmf, dtype=np.float64)
    if len(seqs[0]) != params.n:
        raise UsageError(f"sequence length {len(seqs[0])} differs from params.n={params.n}")
    counts = joint_counts(seqs, pmf.shape)
    lo, hi = count_windows(pmf, params.n, params.epsilon)
    return bool(np.all((counts >= lo) & (counts <= hi)))


def _count_vectors(m, lo, hi):
    """Integer vectors k with lo <= k <= hi elementwise and sum(k) = m,
    lexicographic order.
    """
    q = len(lo)
    suf_lo = [0] * (q + 1)
    suf_hi = [0] * (q + 1)
    for b in range(q - 1, -1, -1):
        suf_lo[b] = suf_lo[b + 1] + lo[b]
        suf_hi[b] = suf_hi[b + 1] + hi[b]
    vec = [0] * q
    out = []

    def rec(b, rem):
        if b == q - 1:
            if lo[b] <= rem <= hi[b]:
                vec[b] = rem
                out.append(tuple(vec))
            return
        k_min = max(lo[b], rem - suf_hi[b + 1])
        k_max = min(hi[b], rem - suf_lo[b + 1])
        for k in range(k_min, k_max + 1):
            vec[b] = k
            rec(b + 1, rem - k)

    rec(0, m)
    return out


def _multinomial(m, counts) -> int:
    out = 1
    rem = m
    for k in counts:
        out *= math.comb(rem, k)
        rem -= k
    return out


def _arrangement_matrix(m, vectors, q) -> np.ndarray:
    """All symbol assignments to m slots realizing each count vector, as one
    (A, m) int8 matrix. Within a vector, symbols are placed in ascending
    order, each into lexicographic position combinations, so the row order is
    deterministic.
    """
    rows = []
    row = np.empty(m, dtype=np.int8)

    def place(avail, b, counts):
        while b < q and counts[b] == 0:
            b += 1
        if b >= q:
            rows.append(row.copy())
            return
        remaining_syms = [s for s in range(b + 1, q) if counts[s] > 0]
        if not remaining_syms:
            row[avail] = b
            rows.append(row.copy())
            return
        for comb in itertools.combinations(avail, counts[b]):
            row[list(comb)] = b
            taken = set(comb)
            place([t for t in avail if t not in taken], b + 1, counts)

    for counts in vectors:
        place(list(range(m)), 0, list(counts))
    if not rows:
        return np.zeros((0, m), dtype=np.int8)
    return np.stack(rows)


class _ClassBlock:
    """Cached per-(observed cell, class size) arrangement data."""

    __slots__ = ("vectors", "total", "matrix")

    def __init__(self, m, lo_row, hi_row, q):
        self.vectors = _count_vectors(m, list(lo_row), list(hi_row))
        self.total = sum(_multinomial(m, v) for v in self.vectors)
        self.matrix = None  # materialized on demand

    def materialize(self, m, q):
        if self.matrix is None:
            if self.total * max(m, 1) > ARRANGE_CELL_CAP:
                raise SearchOverflowError(
                    f"arrangement table for one class would hold {self.total} x {m} "
                    f"cells, over the {ARRANGE_CELL_CAP} materialization guard")
            self.matrix = _arrangement_matrix(m, self.vectors, q)
        return self.matrix


class CandidateEngine:
    """Typical-candidate enumeration for one unknown variable.

    joint_pmf has the observed variables' axes first (in the order observed
    sequences will be passed) and the unknown variable's axis last. The
    engine caches per-class arrangement tables, so reuse one instance across
    trials that share (pmf, params).
    """

    def __init__(self, joint_pmf: np.ndarray, params: TypicalityParams,
                 cap: int = DEFAULT_SEARCH_CAP):
        pmf = np.asarray(joint_pmf, dtype=np.float64)
        if pmf.ndim < 1:
            raise UsageError("joint pmf needs at least the unknown variable's axis")
        self.params = params
        self.cap = int(cap)
        self.q = pmf.shape[-1]
        self.obs_shape = pmf.shape[:-1]
        self.obs_cells = int(np.prod(self.obs_shape)) if self.obs_shape else 1
        flat = pmf.reshape(self.obs_cells, self.q)
        self.lo, self.hi = count_windows(flat, params.n, params.epsilon)
        self._blocks = {}

    # -- class bookkeeping ------------------------------------------------

    def _observed_codes(self, observed) -> np.ndarray:
        if observed is None or (isinstance(observed, (tuple, list)) and not len(observed)):
            observed = ()
        else:
            observed = _as_seq_tuple(observed)
        if len(observed) != len(self.obs_shape):
            raise UsageError(
                f"{len(observed)} observed sequences against "
                f"{len(self.obs_shape)} observed pmf axes")
        code = np.zeros(self.params.n, dtype=np.int64)
        for s, size in zip(observed, self.obs_shape):
            if len(s) != self.params.n:
                raise UsageError("observed sequence length differs from params.n")
            if s.min() < 0 or s.max() >= size:
                raise UsageError("observed symbol outside the pmf alphabet")
            code = code * size + s
        return code

    def _block(self, cell, m) -> _ClassBlock:
        key = (cell, m)
        block = self._blocks.get(key)
        if block is None:
            block = _ClassBlock(m, self.lo[cell], self.hi[cell], self.q)
            self._blocks[key] = block
        return block

    def _classes(self, observed):
        """[(cell, positions, block), ...] by ascending cell code, or None
        when an absent cell's windows forbid a zero count (no candidates).
        """
        codes = self._observed_codes(observed)
        present = np.unique(codes)
        present_set = set(int(c) for c in present)
        for cell in range(self.obs_cells):
            if cell not in present_set and self.lo[cell].max() > 0:
                return None
        out = []
        for cell in present.tolist():
            positions = np.flatnonzero(codes == cell)
            out.append((cell, positions, self._block(cell, len(positions))))
        return out

    def candidate_count(self, observed) -> int:
        classes = self._classes(observed)
        if classes is None:
            return 0
        total = 1
        for _, _, block in classes:
            total *= block.total
            if total == 0:
                return 0
        return total

    # -- enumeration ------------------------------------------------------

    def iter_candidates(self, observed):
        """Yield each typical unknown sequence as an int64 array. Candidate
        order is the cross product of per-class arrangement orders, first
        class slowest. Raises SearchOverflowError beyond the cap before
        yielding anything.
        """
        classes = self._classes(observed)
        if classes is None:
            return
        total = 1
        for _, _, block in classes:
            total *= block.total
        if total > self.cap:
            raise SearchOverflowError(
                f"{total} candidates exceed the search cap {self.cap}")
        if total == 0:
            return
        mats = [block.materialize(len(pos), self.q) for _, pos, block in classes]
        positions = [pos for _, pos, _ in classes]
        seq = np.empty(self.params.n, dtype=np.int64)
        for choice in itertools.product(*(range(len(m)) for m in mats)):
            for pos, mat, j in zip(positions, mats, choice):
                seq[pos] = mat[j]
            yield seq.copy()

    def candidate_indices(self, observed) -> np.ndarray:
        """Base-q integer codes of all candidates, most significant position
        first. Requires q**n to fit comfortably in int64.
        """
        if self.q ** self.params.n >= 2 ** 62:
            raise CapacityError(
                f"{self.q}**{self.params.n} sequence codes overflow the index space")
        places = (self.q ** np.arange(self.params.n - 1, -1, -1)).astype(np.uint64)
        contrib = places[:, None] * np.arange(self.q, dtype=np.uint64)[None, :]
        acc = self._scan_accumulate(observed, contrib)
        if acc is None:
            return np.zeros(0, dtype=np.int64)
        return acc.astype(np.int64)

    # -- vectorized scans -------------------------------------------------

    def _prepared(self, observed, contrib):
        """Per-class contribution vectors for a fold over candidate space."""
        classes = self._classes(observed)
        if classes is None:
            return None, 0
        total = 1
        for _, _, block in classes:
            total *= block.total
        if total > self.cap:
            raise SearchOverflowError(
                f"{total} candidates exceed the search cap {self.cap}")
        if total == 0:
            return None, 0
        prepared = []
        for _, pos, block in classes:
            mat = block.materialize(len(pos), self.q)
            d = contrib[pos, :]                     # (m, q) uint64
            vals = d[np.arange(len(pos))[None, :], mat].sum(axis=1, dtype=np.uint64)
            prepared.append((pos, mat, vals))
        return prepared, total

    def _scan_accumulate(self, observed, contrib):
        prepared, total = self._prepared(observed, contrib)
        if prepared is None:
            return None
        acc = np.zeros(total, dtype=np.uint64)
        rem = np.arange(total, dtype=np.int64)
        for _, _, vals in reversed(prepared):
            a = len(vals)
            acc += vals[rem % a]
            rem //= a
        return acc

    def scan_bin_filter(self, observed, contrib, finalize, target, want="unique"):
        """Fold candidate space against a codebook and keep bin matches.

        contrib and finalize come from a BinningCodebook. want="unique"
        returns (n_matches capped at 2, first match or None); want="all"
        returns the full match list. Candidate order is identical to
        iter_candidates.
        """
        prepared, total = self._prepared(observed, contrib)
        if prepared is None:
            return (0, None) if want == "unique" else []
        sizes = [len(vals) for _, _, vals in prepared]
        target = np.uint64(target) if finalize is not None else target
        found = []
        chunk = 1 << 20
        for start in range(0, total, chunk):
            stop = min(start + chunk, total)
            flat = np.arange(start, stop, dtype=np.int64)
            acc = np.zeros(stop - start, dtype=np.uint64)
            rem = flat
            for (_, _, vals), a in zip(reversed(prepared), reversed(sizes)):
                acc = acc + vals[rem % a]
                rem = rem // a
            bins = finalize(acc)
            hits = flat[bins == target]
            for j in hits.tolist():
                found.append(self._reconstruct(j, prepared, sizes))
                if want == "unique" and len(found) >= 2:
                    return (2, found[0])
        if want == "unique":
            return (len(found), found[0] if found else None)
        return found

    def _reconstruct(self, j, prepared, sizes):
        seq = np.empty(self.params.n, dtype=np.int64)
        rem = j
        for (pos, mat, _), a in zip(reversed(prepared), reversed(sizes)):
            seq[pos] = mat[rem % a]
            rem //= a
        return seq


def conditional_candidates(observed, joint_pmf, params: TypicalityParams,
                           cap: int = DEFAULT_SEARCH_CAP):
    """Sequences of the last pmf axis jointly typical with the observed
    sequences (earlier axes, in order). Returns a list; deterministic order.
    Raises SearchOverflowError past the cap.
    """
    engine = CandidateEngine(joint_pmf, params, cap=cap)
    return list(engine.iter_candidates(observed))


def enumerate_typical(pmf, params: TypicalityParams, cap: int = DEFAULT_ENUM_CAP):
    """All typical sequences for a marginal, or aligned sequence tuples for a
    joint pmf. Raises CapacityError when the typical set exceeds the cap.
    """
    pmf = np.asarray(pmf, dtype=np.float64)
    flat = pmf.ravel()
    engine = CandidateEngine(flat, params, cap=cap)
    try:
        atoms = list(engine.iter_candidates(()))
    except SearchOverflowError as exc:
        raise CapacityError(
            f"typical set exceeds the {cap} enumeration cap") from exc
    if pmf.ndim == 1:
        return atoms
    out = []
    for atom_seq in atoms:
        parts = []
        rest = atom_seq
        for size in reversed(pmf.shape):
            parts.append(rest % size)
            rest = rest // size
        out.append(tuple(reversed(parts)))
    return out
