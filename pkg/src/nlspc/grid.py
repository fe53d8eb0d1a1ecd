"""Truncated Dirichlet box and its discrete calculus.

The domain is a tensor-product box [-L_a, L_a] per axis, discretized by n_a
interior points with spacing h_a = 2 L_a / (n_a + 1).  Values outside the
interior are implicitly zero (homogeneous Dirichlet data).  The quadrature,
Laplacian and Dirichlet energy defined here are exact companions: the energy
is the quadratic form of the negative Laplacian, so summation by parts holds
to machine precision.
"""

from dataclasses import InitVar, dataclass
from functools import cached_property

import numpy as np

from . import kernels


class GridError(ValueError):
    """Invalid grid construction or mismatched grids in an operation."""


@dataclass(frozen=True)
class GridSpec:
    """Tensor-product grid over a truncated box with Dirichlet boundary.

    ``confined_dims`` is the number of leading axes the harmonic potential
    acts on.  Direct construction permits degenerate cases (1D toys with
    ``confined_dims=0``) used by the dense oracles; ``build_grid`` enforces
    the full production constraints.
    """

    total_dims: int
    confined_dims: int
    half_widths: tuple
    points_per_axis: tuple

    def __post_init__(self):
        n, m = self.total_dims, self.confined_dims
        if n < 1:
            raise GridError(f"total_dims must be >= 1, got {n}")
        if not (0 <= m <= n):
            raise GridError(f"confined_dims must be in [0, {n}], got {m}")
        if len(self.half_widths) != n or len(self.points_per_axis) != n:
            raise GridError("half_widths and points_per_axis must have one "
                            f"entry per axis ({n})")
        for L in self.half_widths:
            if not (L > 0):
                raise GridError(f"half-width must be positive, got {L}")
        for npts in self.points_per_axis:
            if npts < 1:
                raise GridError(f"points_per_axis must be >= 1, got {npts}")

    @cached_property
    def spacings(self) -> tuple:
        return tuple(2.0 * L / (n + 1)
                     for L, n in zip(self.half_widths, self.points_per_axis))

    @property
    def shape(self) -> tuple:
        return self.points_per_axis

    @property
    def size(self) -> int:
        return int(np.prod(self.points_per_axis))

    @cached_property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    def axis_coords(self, axis: int) -> np.ndarray:
        """Interior coordinates of one axis: -L + (i+1) h."""
        n = self.points_per_axis[axis]
        h = self.spacings[axis]
        return -self.half_widths[axis] + h * np.arange(1, n + 1)

    def coordinate(self, axis: int, index: int) -> float:
        return float(self.axis_coords(axis)[index])

    def coord_grids(self) -> list:
        """Per-axis coordinate arrays broadcastable to ``shape``."""
        return list(np.ix_(*[self.axis_coords(a) for a in range(self.total_dims)]))


def build_grid(total_dims, confined_dims, half_widths, points_per_axis) -> GridSpec:
    """Validated grid for the confined problem (1 <= m < N, n >= 3, L > 0).

    ``half_widths`` and ``points_per_axis`` accept a scalar (shared by all
    axes) or a per-axis sequence.
    """
    n, m = int(total_dims), int(confined_dims)
    if m < 1:
        raise GridError(f"confined_dims must be >= 1, got {m}")
    if m >= n:
        raise GridError(f"m < N required: got m={m}, N={n} "
                        "(partial confinement needs at least one free axis)")
    Ls = _broadcast(half_widths, n, float)
    ns = _broadcast(points_per_axis, n, int)
    for L in Ls:
        if not (L > 0):
            raise GridError(f"half-width must be positive, got {L}")
    for npts in ns:
        if npts < 3:
            raise GridError(f"points_per_axis must be >= 3, got {npts}")
    return GridSpec(n, m, Ls, ns)


def _broadcast(value, n, cast):
    if np.isscalar(value):
        return (cast(value),) * n
    out = tuple(cast(v) for v in value)
    if len(out) != n:
        raise GridError(f"expected {n} per-axis values, got {len(out)}")
    return out


@dataclass(frozen=True, eq=False)
class Field:
    """Real-valued grid function: interior values only, zero outside.

    ``values`` has shape ``spec.shape`` (row-major, axis 0 slowest), which is
    also the serialized layout.
    """

    spec: GridSpec
    values: np.ndarray
    validate: InitVar[bool] = True

    def __post_init__(self, validate):
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        if arr.shape != self.spec.shape:
            if arr.ndim == 1 and arr.size == self.spec.size:
                arr = arr.reshape(self.spec.shape)
            else:
                raise GridError(f"values shape {arr.shape} does not match "
                                f"grid shape {self.spec.shape}")
        if validate and not np.all(np.isfinite(arr)):
            raise GridError("field contains non-finite values")
        object.__setattr__(self, "values", arr)

    @classmethod
    def zeros(cls, spec: GridSpec) -> "Field":
        return cls(spec, np.zeros(spec.shape), validate=False)

    @classmethod
    def from_callable(cls, spec: GridSpec, fn) -> "Field":
        """Sample ``fn(*coords)`` on the interior nodes."""
        return cls(spec, np.asarray(fn(*spec.coord_grids()), dtype=np.float64)
                   * np.ones(spec.shape))

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def copy(self) -> "Field":
        return Field(self.spec, self.values.copy(), validate=False)


def same_grid(*fields) -> GridSpec:
    spec = fields[0].spec
    for f in fields[1:]:
        if f.spec != spec:
            raise GridError("fields live on different grids")
    return spec


def integrate(f: Field) -> float:
    """Midpoint-rule quadrature: cell volume times the sum of values."""
    return f.spec.cell_volume * float(np.sum(f.values))


def _inv_h2(spec: GridSpec) -> tuple:
    return tuple(1.0 / h ** 2 for h in spec.spacings)


def laplacian_apply(f: Field) -> Field:
    """Central-difference Laplacian with implicit zero ghost values."""
    out = kernels.laplacian(f.values, _inv_h2(f.spec))
    return Field(f.spec, out, validate=False)


def dirichlet_energy(f: Field) -> float:
    """Sum of squared forward differences (boundary faces against zero).

    Equals -integrate(f * laplacian_apply(f)) up to roundoff; nonnegative and
    zero only for the zero field.
    """
    raw = kernels.dirichlet_energy(f.values, _inv_h2(f.spec))
    return f.spec.cell_volume * raw
