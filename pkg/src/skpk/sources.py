"""Discrete memoryless source model over three terminals.

A :class:`JointDistribution` holds the joint pmf P(x, y, z) on finite
alphabets. All Shannon measures are computed in bits (log base 2) by direct
summation over atoms, and :func:`sample` draws i.i.d. sequence triples from a
counter-based generator so every draw is reproducible from its seed alone.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError

# pmf entries below this are structural zeros: outside the support for
# typicality purposes and contributing nothing to any entropy
STRUCTURAL_ZERO = 1e-15

VARS = ("X", "Y", "Z")
_AXIS = {"X": 0, "Y": 1, "Z": 2}

DEFAULT_ALPHABET_CAP = 8


def as_variable_set(variables) -> frozenset:
    """Normalize a variable selector ("XZ", ["X","Z"], frozenset) to a frozenset.

    Raises UsageError on unknown names or duplicates.
    """
    items = tuple(variables)
    for v in items:
        if v not in VARS:
            raise UsageError(f"unknown variable {v!r}, expected members of {VARS}")
    if len(set(items)) != len(items):
        raise UsageError(f"duplicate variables in {items!r}")
    return frozenset(items)


@dataclass(frozen=True)
class JointDistribution:
    """Joint pmf over X x Y x Z with validated invariants.

    pmf is a dense (|X|, |Y|, |Z|) array, entries nonnegative, summing to 1
    within 1e-12. Alphabet sizes are capped (default 8 per axis).
    """

    alphabet_sizes: tuple
    pmf: np.ndarray

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.alphabet_sizes)
        object.__setattr__(self, "alphabet_sizes", sizes)
        if len(sizes) != len(VARS):
            raise UsageError(f"need one alphabet size per variable in {VARS}, got {sizes}")
        pmf = np.asarray(self.pmf, dtype=np.float64)
        if pmf.shape != sizes:
            raise UsageError(f"pmf shape {pmf.shape} does not match alphabet sizes {sizes}")
        for s in sizes:
            if s < 1:
                raise UsageError("alphabet sizes must be >= 1")
        if pmf.min() < 0:
            raise UsageError(f"pmf has a negative entry: {pmf.min()}")
        total = float(pmf.sum())
        if abs(total - 1.0) > 1e-12:
            raise UsageError(f"pmf sums to {total!r}, expected 1 within 1e-12")
        pmf = pmf.copy()
        pmf.flags.writeable = False
        object.__setattr__(self, "pmf", pmf)

    @classmethod
    def create(cls, alphabet_sizes, pmf, alphabet_cap=DEFAULT_ALPHABET_CAP):
        sizes = tuple(int(s) for s in alphabet_sizes)
        for s in sizes:
            if s > alphabet_cap:
                raise UsageError(f"alphabet size {s} exceeds cap {alphabet_cap}")
        return cls(sizes, np.asarray(pmf, dtype=np.float64).reshape(sizes))

    def marginal(self, variables) -> np.ndarray:
        """Marginal pmf on the given variables, axes ordered as listed.

        Accepts an ordered selector; the returned array's axes follow the
        selector order, which is what decoders rely on.
        """
        items = tuple(variables)
        as_variable_set(items)
        drop = tuple(_AXIS[v] for v in VARS if v not in items)
        m = self.pmf.sum(axis=drop) if drop else self.pmf
        keep = [v for v in VARS if v in items]
        # reorder axes from canonical (X,Y,Z) order to selector order
        perm = [keep.index(v) for v in items]
        return np.ascontiguousarray(np.transpose(m, axes=perm))

    def alphabet(self, variable) -> int:
        return self.alphabet_sizes[_AXIS[variable]]

    def support_atoms(self):
        """Indices (x, y, z) of atoms with pmf above the structural-zero floor."""
        idx = np.argwhere(self.pmf > STRUCTURAL_ZERO)
        return [tuple(int(v) for v in row) for row in idx]


@dataclass(frozen=True)
class SourceTriple:
    """Aligned i.i.d. sequences observed at the three terminals."""

    n: int
    x_seq: np.ndarray
    y_seq: np.ndarray
    z_seq: np.ndarray

    def __post_init__(self):
        if not (len(self.x_seq) == len(self.y_seq) == len(self.z_seq) == self.n):
            raise UsageError("sequence lengths disagree with n")

    def seq(self, variable) -> np.ndarray:
        return (self.x_seq, self.y_seq, self.z_seq)[_AXIS[variable]]

    def slice(self, start, stop) -> "SourceTriple":
        return SourceTriple(stop - start, self.x_seq[start:stop],
                            self.y_seq[start:stop], self.z_seq[start:stop])


def _entropy_of(p: np.ndarray) -> float:
    flat = p.ravel()
    return math.fsum(-v * math.log2(v) for v in flat if v > STRUCTURAL_ZERO)


def entropy(dist: JointDistribution, variables) -> float:
    """Shannon entropy H(S) in bits of the marginal on the variable set S."""
    vs = as_variable_set(variables)
    if not vs:
        raise UsageError("entropy requires a nonempty variable set")
    return _entropy_of(dist.marginal(sorted(vs)))


def conditional_entropy(dist: JointDistribution, vars_a, vars_b) -> float:
    """H(A | B) = H(A u B) - H(B). vars_b may be empty."""
    a = as_variable_set(vars_a)
    b = as_variable_set(vars_b) if vars_b else frozenset()
    if not a:
        raise UsageError("conditional_entropy requires nonempty first argument")
    if a & b:
        raise UsageError(f"variable sets overlap: {sorted(a & b)}")
    if not b:
        return entropy(dist, a)
    return entropy(dist, a | b) - entropy(dist, b)


def _clamp_mi(v: float) -> float:
    return 0.0 if v < 0 else v


def mutual_information(dist: JointDistribution, vars_a, vars_b) -> float:
    """I(A; B) = H(A) + H(B) - H(A u B), clamped at 0 against rounding."""
    a, b = as_variable_set(vars_a), as_variable_set(vars_b)
    if not a or not b:
        raise UsageError("mutual_information requires nonempty variable sets")
    if a & b:
        raise UsageError(f"variable sets overlap: {sorted(a & b)}")
    return _clamp_mi(entropy(dist, a) + entropy(dist, b) - entropy(dist, a | b))


def conditional_mutual_information(dist: JointDistribution, vars_a, vars_b, vars_c) -> float:
    """I(A; B | C) = H(A|C) - H(A|B u C), clamped at 0 against rounding."""
    a, b = as_variable_set(vars_a), as_variable_set(vars_b)
    c = as_variable_set(vars_c) if vars_c else frozenset()
    if not a or not b:
        raise UsageError("conditional_mutual_information requires nonempty A and B")
    if (a & b) or (a & c) or (b & c):
        raise UsageError("variable sets must be pairwise disjoint")
    if not c:
        return mutual_information(dist, a, b)
    return _clamp_mi(conditional_entropy(dist, a, c) - conditional_entropy(dist, a, b | c))


@dataclass(frozen=True)
class InfoProfile:
    """Every entropy and mutual information the rate formulas consume.

    All values in bits per symbol. Entropies of arbitrary subsets are
    available through :meth:`h`.
    """

    entropies: dict  # frozenset -> float, all 7 nonempty subsets
    i_x_y: float
    i_x_z: float
    i_y_z: float
    i_z_xy: float
    i_x_yz: float
    i_y_xz: float
    i_x_y_given_z: float
    h_z_given_x: float
    h_z_given_y: float
    h_z_given_xy: float
    h_x_given_y: float
    h_x_given_yz: float
    h_xz_given_y: float
    h_y_given_x: float
    h_y_given_xz: float

    def h(self, variables) -> float:
        vs = as_variable_set(variables)
        if not vs:
            raise UsageError("h requires a nonempty variable set")
        return self.entropies[vs]


def info_profile(dist: JointDistribution) -> InfoProfile:
    ent = {}
    for mask in range(1, 8):
        vs = frozenset(v for i, v in enumerate(VARS) if mask & (1 << i))
        ent[vs] = entropy(dist, vs)

    def H(s):
        return ent[frozenset(s)]

    prof = InfoProfile(
        entropies=ent,
        i_x_y=_clamp_mi(H("X") + H("Y") - H("XY")),
        i_x_z=_clamp_mi(H("X") + H("Z") - H("XZ")),
        i_y_z=_clamp_mi(H("Y") + H("Z") - H("YZ")),
        i_z_xy=_clamp_mi(H("Z") + H("XY") - H("XYZ")),
        i_x_yz=_clamp_mi(H("X") + H("YZ") - H("XYZ")),
        i_y_xz=_clamp_mi(H("Y") + H("XZ") - H("XYZ")),
        i_x_y_given_z=_clamp_mi(H("XZ") + H("YZ") - H("Z") - H("XYZ")),
        h_z_given_x=H("XZ") - H("X"),
        h_z_given_y=H("YZ") - H("Y"),
        h_z_given_xy=H("XYZ") - H("XY"),
        h_x_given_y=H("XY") - H("Y"),
        h_x_given_yz=H("XYZ") - H("YZ"),
        h_xz_given_y=H("XYZ") - H("Y"),
        h_y_given_x=H("XY") - H("X"),
        h_y_given_xz=H("XYZ") - H("XZ"),
    )
    # chain rule self-check; violation means a broken summation path
    chain = prof.h("X") + prof.h_y_given_x + prof.h_z_given_xy
    if abs(chain - prof.h("XYZ")) > 1e-10:
        raise AssertionError("entropy chain rule violated beyond 1e-10")
    return prof


def sample(dist: JointDistribution, n: int, seed) -> SourceTriple:
    """Draw n i.i.d. triples. Identical (dist, n, seed) gives identical output.

    seed is a 64-bit integer or a numpy SeedSequence (used for substreams).
    The generator is Philox, a counter-based generator, so draws never depend
    on hidden global state.
    """
    if n < 1:
        raise UsageError("sample requires n >= 1")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    rng = np.random.Generator(np.random.Philox(ss))
    flat = dist.pmf.ravel()
    atoms = rng.choice(len(flat), size=n, p=flat)
    sx, sy, sz = dist.alphabet_sizes
    x = (atoms // (sy * sz)).astype(np.int64)
    y = ((atoms // sz) % sy).astype(np.int64)
    z = (atoms % sz).astype(np.int64)
    return SourceTriple(n, x, y, z)


def load_pmf(path) -> JointDistribution:
    """Read a pmf file: {"alphabet": [|X|,|Y|,|Z|], "pmf": [...]} in row-major
    order with z fastest. Sums within 1e-6 of 1 are rescaled; anything else is
    rejected.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read pmf file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"pmf file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "alphabet" not in doc or "pmf" not in doc:
        raise UsageError(f"pmf file {path} must contain 'alphabet' and 'pmf' fields")
    alphabet = doc["alphabet"]
    if len(alphabet) != 3 or any(int(a) < 1 for a in alphabet):
        raise UsageError(f"'alphabet' must list three sizes >= 1, got {alphabet!r}")
    sizes = tuple(int(a) for a in alphabet)
    flat = np.asarray(doc["pmf"], dtype=np.float64)
    expected = sizes[0] * sizes[1] * sizes[2]
    if flat.ndim != 1 or len(flat) != expected:
        raise UsageError(f"'pmf' must be a flat array of length {expected}, got {flat.shape}")
    if flat.min() < 0:
        raise UsageError(f"pmf entry {flat.min()} is negative")
    total = float(flat.sum())
    if abs(total - 1.0) > 1e-6:
        raise UsageError(f"pmf sums to {total!r}; |sum-1| must be <= 1e-6")
    flat = flat / total
    return JointDistribution.create(sizes, flat.reshape(sizes))


def dump_pmf(dist: JointDistribution, path):
    doc = {"alphabet": list(dist.alphabet_sizes), "pmf": [float(v) for v in dist.pmf.ravel()]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Canonical example distributions used across tests and docs


def xor_triple() -> JointDistribution:
    """X, Y i.i.d. uniform bits, Z = X xor Y."""
    pmf = np.zeros((2, 2, 2))
    for x in range(2):
        for y in range(2):
            pmf[x, y, x ^ y] = 0.25
    return JointDistribution.create((2, 2, 2), pmf)


def noisy_copy_triple(flip_y=0.1, flip_z=0.3) -> JointDistribution:
    """X uniform bit; Y = X xor Bern(flip_y); Z = X xor Bern(flip_z).

    Y and Z are conditionally independent given X.
    """
    pmf = np.zeros((2, 2, 2))
    for x in range(2):
        for y in range(2):
            for z in range(2):
                py = flip_y if y != x else 1 - flip_y
                pz = flip_z if z != x else 1 - flip_z
                pmf[x, y, z] = 0.5 * py * pz
    return JointDistribution.create((2, 2, 2), pmf)


def doubly_symmetric_xz(crossover=0.1) -> JointDistribution:
    """X uniform bit, Z = X xor Bern(crossover), Y a one-letter spectator."""
    pmf = np.zeros((2, 1, 2))
    for x in range(2):
        for z in range(2):
            pmf[x, 0, z] = 0.5 * (crossover if z != x else 1 - crossover)
    return JointDistribution.create((2, 1, 2), pmf)


def identical_bits() -> JointDistribution:
    """X = Y = Z, a single shared uniform bit."""
    pmf = np.zeros((2, 2, 2))
    pmf[0, 0, 0] = pmf[1, 1, 1] = 0.5
    return JointDistribution.create((2, 2, 2), pmf)


def independent_bits() -> JointDistribution:
    """Three mutually independent uniform bits."""
    return JointDistribution.create((2, 2, 2), np.full((2, 2, 2), 1 / 8))


def shared_bit_with_spectator_z() -> JointDistribution:
    """X = Y uniform bit, Z an independent uniform bit."""
    pmf = np.zeros((2, 2, 2))
    for x in range(2):
        for z in range(2):
            pmf[x, x, z] = 0.25
    return JointDistribution.create((2, 2, 2), pmf)
