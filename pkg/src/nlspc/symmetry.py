"""Group actions on grid fields: reflections, plane rotations, orbit averaging.

A group element acts by (g . u)(z) = tau(g) u(g^{-1} z).  Signed axis
permutations (reflections, quarter-turn rotations) map the node set to itself
and are applied exactly as index permutations; other rotation angles fall back
to bilinear resampling and are flagged approximate.

``symmetrize`` projects onto the invariant subspace by orbit averaging.  The
average is written back through a canonical orbit representative, which makes
the output an exact bitwise fixed point of every group element and makes the
projection bitwise idempotent; nodes fixed by a parity-reversing element are
set to exact zero.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.ndimage import map_coordinates

from .grid import Field, GridSpec, integrate


class SymmetryError(ValueError):
    """Constraint incompatible with the grid or with itself."""


class ZeroFieldError(ValueError):
    """Residual undefined on the zero field."""


GROUP_SIZE_CAP = 4096
EXACT_ROTATION_ORDERS = (1, 2, 4)


@dataclass(frozen=True)
class SignedPermutation:
    """Orthogonal map g(e_j) = signs[j] * e_perm[j] (signed axis permutation)."""

    perm: tuple
    signs: tuple

    def __post_init__(self):
        n = len(self.perm)
        if sorted(self.perm) != list(range(n)) or len(self.signs) != n:
            raise SymmetryError("invalid signed permutation")
        if any(s not in (-1, 1) for s in self.signs):
            raise SymmetryError("signs must be +-1")

    @classmethod
    def identity(cls, n: int) -> "SignedPermutation":
        return cls(tuple(range(n)), (1,) * n)

    @classmethod
    def reflection(cls, axis: int, n: int) -> "SignedPermutation":
        signs = tuple(-1 if j == axis else 1 for j in range(n))
        return cls(tuple(range(n)), signs)

    @classmethod
    def quarter_turns(cls, q: int, n: int) -> "SignedPermutation":
        """Rotation by q*pi/2 in the (axis 0, axis 1) plane."""
        q = q % 4
        perm = list(range(n))
        signs = [1] * n
        if q == 1:
            perm[0], perm[1] = 1, 0
            signs[0], signs[1] = 1, -1
        elif q == 2:
            signs[0], signs[1] = -1, -1
        elif q == 3:
            perm[0], perm[1] = 1, 0
            signs[0], signs[1] = -1, 1
        return cls(tuple(perm), tuple(signs))

    def compose(self, other: "SignedPermutation") -> "SignedPermutation":
        """self o other as maps: (self o other)(z) = self(other(z))."""
        perm = tuple(self.perm[other.perm[j]] for j in range(len(self.perm)))
        signs = tuple(other.signs[j] * self.signs[other.perm[j]]
                      for j in range(len(self.perm)))
        return SignedPermutation(perm, signs)

    def inverse(self) -> "SignedPermutation":
        n = len(self.perm)
        perm = [0] * n
        signs = [1] * n
        for j in range(n):
            perm[self.perm[j]] = j
            signs[self.perm[j]] = self.signs[j]
        return SignedPermutation(tuple(perm), tuple(signs))

    @property
    def is_identity(self) -> bool:
        return self.perm == tuple(range(len(self.perm))) and all(
            s == 1 for s in self.signs)


@dataclass(frozen=True)
class PlaneRotation:
    """Rotation by 2 pi power / order in the (x1, x2) plane."""

    order: int
    power: int = 1

    def __post_init__(self):
        if self.order < 1:
            raise SymmetryError(f"rotation order must be >= 1, got {self.order}")

    @property
    def angle(self) -> float:
        return 2.0 * math.pi * self.power / self.order

    def is_grid_exact(self) -> bool:
        return (4 * self.power) % self.order == 0

    def to_signed_permutation(self, n_axes: int) -> SignedPermutation:
        if not self.is_grid_exact():
            raise SymmetryError(
                f"rotation by 2*pi*{self.power}/{self.order} does not map the "
                "grid to itself; use apply_group_element_interp")
        q = (4 * self.power // self.order) % 4
        return SignedPermutation.quarter_turns(q, n_axes)


def _check_axes_compatible(spec: GridSpec, g: SignedPermutation):
    for j, pj in enumerate(g.perm):
        if pj != j and (spec.half_widths[j] != spec.half_widths[pj]
                        or spec.points_per_axis[j] != spec.points_per_axis[pj]):
            raise SymmetryError(
                f"axes {j} and {pj} are exchanged by the group element but "
                "have different extent or resolution")


def _apply_index_op(arr: np.ndarray, g: SignedPermutation) -> np.ndarray:
    """arr resampled so out[i] = arr[index of g^{-1}(node i)]."""
    flip_axes = [j for j, s in enumerate(g.signs) if s < 0]
    x = np.flip(arr, axis=flip_axes) if flip_axes else arr
    x = np.transpose(x, axes=g.perm)
    return np.ascontiguousarray(x)


def apply_group_element(u: Field, g, parity: int = 1) -> Field:
    """Exact action tau * u(g^{-1} z) for a grid-compatible g."""
    if parity not in (-1, 1):
        raise SymmetryError("parity must be +-1")
    if isinstance(g, PlaneRotation):
        g = g.to_signed_permutation(u.spec.total_dims)
    if len(g.perm) != u.spec.total_dims:
        raise SymmetryError("group element dimension does not match the grid")
    _check_axes_compatible(u.spec, g)
    out = _apply_index_op(u.values, g)
    if parity < 0:
        out = -out
    return Field(u.spec, out, validate=False)


def apply_group_element_interp(u: Field, angle: float, parity: int = 1) -> Field:
    """Approximate action for an arbitrary x1x2-plane rotation (bilinear)."""
    if parity not in (-1, 1):
        raise SymmetryError("parity must be +-1")
    out = _rotate_interp(u.values, u.spec, angle)
    if parity < 0:
        out = -out
    return Field(u.spec, out, validate=False)


def _rotate_interp(values: np.ndarray, spec: GridSpec, angle: float) -> np.ndarray:
    cos_t, sin_t = math.cos(angle), math.sin(angle)
    coords = np.meshgrid(*[spec.axis_coords(a) for a in range(spec.total_dims)],
                         indexing="ij", sparse=False)
    w0 = cos_t * coords[0] + sin_t * coords[1]
    w1 = -sin_t * coords[0] + cos_t * coords[1]
    idx = []
    for a in range(spec.total_dims):
        h = spec.spacings[a]
        origin = -spec.half_widths[a] + h
        if a == 0:
            idx.append((w0 - origin) / h)
        elif a == 1:
            idx.append((w1 - origin) / h)
        else:
            idx.append((coords[a] - origin) / h)
    return map_coordinates(values, np.stack(idx), order=1, mode="constant",
                           cval=0.0)


@dataclass(frozen=True)
class SymmetryConstraint:
    """Invariant subspace the descent is confined to.

    kinds: "full" (no constraint), "k_odd" (antisymmetric in the first k
    confined coordinates), "cyclic_odd" (odd in x1 and invariant under the
    2 pi / fold rotation of the x1x2 plane), "g_invariant" (user-supplied
    signed permutations of the confined axes with a parity per generator).
    """

    kind: str
    k: int = 0
    fold: int = 0
    generators: tuple = ()

    @classmethod
    def full_space(cls) -> "SymmetryConstraint":
        return cls("full")

    @classmethod
    def k_odd(cls, k: int) -> "SymmetryConstraint":
        if k < 1:
            raise SymmetryError(f"k must be >= 1, got {k}")
        return cls("k_odd", k=int(k))

    @classmethod
    def cyclic_odd(cls, fold: int) -> "SymmetryConstraint":
        if fold < 1:
            raise SymmetryError(f"rotation order must be >= 1, got {fold}")
        return cls("cyclic_odd", fold=int(fold))

    @classmethod
    def g_invariant(cls, generators) -> "SymmetryConstraint":
        gens = tuple((SignedPermutation(tuple(g.perm), tuple(g.signs)), int(p))
                     for g, p in generators)
        for _, p in gens:
            if p not in (-1, 1):
                raise SymmetryError("generator parity must be +-1")
        return cls("g_invariant", generators=gens)

    def validate_grid(self, spec: GridSpec, require_odd_counts: bool = False):
        m, n = spec.confined_dims, spec.total_dims
        if self.kind == "k_odd":
            if self.k > m:
                raise SymmetryError(f"k_odd needs k <= m, got k={self.k}, m={m}")
            odd_axes = range(self.k)
        elif self.kind == "cyclic_odd":
            if m < 2:
                raise SymmetryError("cyclic_odd needs at least two confined axes")
            if (spec.half_widths[0] != spec.half_widths[1]
                    or spec.points_per_axis[0] != spec.points_per_axis[1]):
                raise SymmetryError("cyclic_odd needs axes x1, x2 with equal "
                                    "extent and resolution")
            odd_axes = range(2)
        elif self.kind == "g_invariant":
            for g, _ in self.generators:
                if len(g.perm) != m:
                    raise SymmetryError("g_invariant generators must act on the "
                                        f"{m} confined axes")
                full = _embed(g, n)
                _check_axes_compatible(spec, full)
            odd_axes = ()
        else:
            odd_axes = ()
        if require_odd_counts:
            for a in odd_axes:
                if spec.points_per_axis[a] % 2 == 0:
                    raise SymmetryError(
                        f"axis {a} needs an odd point count so the hyperplane "
                        "x=0 passes through grid nodes")

    def is_grid_exact(self, spec: GridSpec) -> bool:
        if self.kind == "cyclic_odd":
            return self.fold in EXACT_ROTATION_ORDERS
        return True

    def generator_actions(self, spec: GridSpec) -> list:
        """Generators as (SignedPermutation | PlaneRotation, parity) pairs."""
        n = spec.total_dims
        if self.kind == "full":
            return []
        if self.kind == "k_odd":
            return [(SignedPermutation.reflection(a, n), -1)
                    for a in range(self.k)]
        if self.kind == "cyclic_odd":
            gens = [(SignedPermutation.reflection(0, n), -1)]
            if self.fold > 1:
                gens.append((PlaneRotation(self.fold), 1))
            return gens
        return [(_embed(g, n), p) for g, p in self.generators]


def _embed(g: SignedPermutation, n_total: int) -> SignedPermutation:
    m = len(g.perm)
    perm = tuple(g.perm) + tuple(range(m, n_total))
    signs = tuple(g.signs) + (1,) * (n_total - m)
    return SignedPermutation(perm, signs)


def group_elements(constraint: SymmetryConstraint, spec: GridSpec) -> list:
    """Full generated group as (SignedPermutation, parity), identity first.

    Closure doubles as the parity-homomorphism check: reaching the same
    element with conflicting parities is an error.
    """
    if not constraint.is_grid_exact(spec):
        raise SymmetryError("group is not grid-exact; use the interpolating path")
    constraint.validate_grid(spec)
    n = spec.total_dims
    gens = []
    for g, p in constraint.generator_actions(spec):
        if isinstance(g, PlaneRotation):
            g = g.to_signed_permutation(n)
        gens.append((g, p))

    identity = SignedPermutation.identity(n)
    seen = {identity: 1}
    order = [identity]
    frontier = [identity]
    while frontier:
        nxt = []
        for e in frontier:
            pe = seen[e]
            for g, pg in gens:
                prod = g.compose(e)
                parity = pg * pe
                if prod in seen:
                    if seen[prod] != parity:
                        raise SymmetryError(
                            "parity assignment is not a group homomorphism")
                    continue
                seen[prod] = parity
                order.append(prod)
                nxt.append(prod)
                if len(order) > GROUP_SIZE_CAP:
                    raise SymmetryError(
                        f"generated group exceeds {GROUP_SIZE_CAP} elements")
        frontier = nxt
    return [(e, seen[e]) for e in order]


@lru_cache(maxsize=32)
def _orbit_data(constraint: SymmetryConstraint, spec: GridSpec):
    elements = group_elements(constraint, spec)
    size = spec.size
    node = np.arange(size).reshape(spec.shape)
    source = np.empty((len(elements), size), dtype=np.intp)
    tau = np.empty(len(elements))
    for k, (g, parity) in enumerate(elements):
        _check_axes_compatible(spec, g)
        source[k] = _apply_index_op(node, g).reshape(-1)
        tau[k] = float(parity)
    rep = source.min(axis=0)
    first = source.argmin(axis=0)
    tau_rel = tau[first]
    anti = np.any((source == np.arange(size)) & (tau[:, None] < 0), axis=0)
    return source, tau, rep, tau_rel, anti


def symmetrize(u: Field, constraint: SymmetryConstraint) -> Field:
    """Orbit average (1/|G|) sum tau(g) u(g^{-1} z) over the generated group."""
    if constraint.kind == "full":
        return u
    if not constraint.is_grid_exact(u.spec):
        return _symmetrize_interp(u, constraint)
    source, tau, rep, tau_rel, anti = _orbit_data(constraint, u.spec)
    flat = u.flat
    contrib = tau[:, None] * flat[source]
    all_equal = np.all(contrib == contrib[0], axis=0)
    averaged = np.where(all_equal, contrib[0], contrib.mean(axis=0))
    out = tau_rel * averaged[rep]
    out[anti] = 0.0
    return Field(u.spec, out.reshape(u.spec.shape), validate=False)


def _symmetrize_interp(u: Field, constraint: SymmetryConstraint) -> Field:
    """Approximate projection for non-grid rotation orders (bilinear)."""
    ell = constraint.fold
    constraint.validate_grid(u.spec)
    flipped = -np.flip(u.values, axis=0)
    acc = np.zeros_like(u.values)
    for i in range(ell):
        angle = 2.0 * math.pi * i / ell
        if i == 0:
            acc += u.values
            acc += flipped
        else:
            acc += _rotate_interp(u.values, u.spec, angle)
            acc += _rotate_interp(flipped, u.spec, angle)
    return Field(u.spec, acc / (2.0 * ell), validate=False)


def symmetry_residual(u: Field, constraint: SymmetryConstraint) -> float:
    """max over generators of |tau(g) u(g^{-1} .) - u|_L2 / |u|_L2."""
    norm_sq = integrate(Field(u.spec, u.values ** 2, validate=False))
    if norm_sq == 0.0:
        raise ZeroFieldError("symmetry residual is undefined on the zero field")
    worst = 0.0
    for g, parity in constraint.generator_actions(u.spec):
        if isinstance(g, PlaneRotation) and not g.is_grid_exact():
            moved = apply_group_element_interp(u, g.angle, parity)
        else:
            moved = apply_group_element(u, g, parity)
        diff = moved.values - u.values
        dev = integrate(Field(u.spec, diff * diff, validate=False))
        worst = max(worst, math.sqrt(max(dev, 0.0) / norm_sq))
    return worst


def _sector_masks(spec: GridSpec, fold: int):
    """Half-open and closed node masks of the wedge starting at the positive
    x2 axis; boundary nodes belong to the lower ray only."""
    if fold not in EXACT_ROTATION_ORDERS:
        raise SymmetryError(f"sector fold must be one of {EXACT_ROTATION_ORDERS}")
    if spec.total_dims < 2:
        raise SymmetryError("sector operations need at least two axes")
    grids = spec.coord_grids()
    x1 = grids[0] + np.zeros(spec.shape)
    x2 = grids[1] + np.zeros(spec.shape)
    origin = (x1 == 0) & (x2 == 0)
    if fold == 1:
        half_open = (x1 < 0) | ((x1 == 0) & (x2 >= 0))
        closed = x1 <= 0
    elif fold == 2:
        half_open = ((x1 <= 0) & (x2 > 0)) | origin
        closed = (x1 <= 0) & (x2 >= 0)
    else:
        half_open = ((x1 <= 0) & (x2 > 0) & (-x1 < x2)) | origin
        closed = (x1 <= 0) & (-x1 <= x2)
    return half_open, closed


def fold_sector(u: Field, fold: int) -> Field:
    """Restriction to the pi/fold wedge: zero outside, boundary on the lower ray."""
    half_open, _ = _sector_masks(u.spec, fold)
    return Field(u.spec, np.where(half_open, u.values, 0.0), validate=False)


def unfold_sector(v: Field, fold: int) -> Field:
    """Signed periodic extension of a sector field to the full rotation-odd one.

    Rotated copies keep the sign, reflected copies flip it; each node receives
    exactly one contribution (boundary rays cancel to exact zeros), which makes
    unfold(fold(u)) == u for fields already in the invariant subspace.
    """
    spec = v.spec
    half_open, closed = _sector_masks(spec, fold)
    outside = (~closed) & (v.values != 0.0)
    if np.any(outside):
        raise SymmetryError(
            f"unfold input has {int(np.count_nonzero(outside))} nonzero values "
            "outside the closed sector")
    if (spec.half_widths[0] != spec.half_widths[1]
            or spec.points_per_axis[0] != spec.points_per_axis[1]):
        raise SymmetryError("sector unfolding needs axes x1, x2 with equal "
                            "extent and resolution")
    w = np.where(half_open, v.values, 0.0)
    wf = Field(spec, w, validate=False)
    n = spec.total_dims
    reflect = SignedPermutation.reflection(0, n)
    quarter = 4 // fold
    out = np.zeros(spec.shape)
    for i in range(fold):
        rot_inv = SignedPermutation.quarter_turns((-i * quarter) % 4, n)
        out += _apply_index_op(w, rot_inv)
        out -= _apply_index_op(w, reflect.compose(rot_inv))
    return Field(spec, out, validate=False)


def sector_energy(v: Field, model, V: Field, fold: int) -> float:
    """Wedge energy whose value equals the full energy of the unfolding:
    fold * (dirichlet + potential) - 2 * fold * int F(v)."""
    from .grid import dirichlet_energy
    _, closed = _sector_masks(v.spec, fold)
    if np.any((~closed) & (v.values != 0.0)):
        raise SymmetryError("sector energy input must be supported in the sector")
    quad = dirichlet_energy(v) + v.spec.cell_volume * float(
        np.sum(V.values * v.values ** 2))
    nonlinear = 0.0
    if model is not None:
        nonlinear = v.spec.cell_volume * float(np.sum(model.F(v.values)))
    return fold * quad - 2.0 * fold * nonlinear
