"""Fourier representation of periodic fields on the 2- and 3-torus.

Fields live on the uniform collocation grid of [0, 2*pi)^N and are stored as
Fourier-series coefficients under the convention

    f_hat(k) = (2*pi)^(-N) * integral over T^N of f(x) exp(-i k.x) dx,

so analytic test fields have exactly representable coefficients (e.g.
sin(x1) -> -+ i/2 at k = +-e1).  Linear operators act mode-wise and are exact
on the retained spectrum; nonlinear products are formed pointwise in physical
space with 2/3-rule dealiasing of both factors and of the result.  The
Nyquist column is zeroed by differentiation to keep real fields real.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import InvalidResolutionError, NonZeroMeanError

MEAN_TOL = 1e-10

_SNAPSHOT_MAGIC = b"QNL1"
_KIND_SCALAR = 1
_KIND_VECTOR = 2


class TorusGrid:
    """Uniform collocation grid on [0, 2*pi)^dims with integer wavenumbers.

    Wavenumbers per axis run through -n/2 ... n/2 - 1 in FFT layout.  The
    grid precomputes broadcastable wavenumber arrays, |k|^2, the inverse
    Laplacian symbol and the 2/3-rule dealiasing mask.
    """

    def __init__(self, dims: int, resolution: int):
        if dims not in (2, 3):
            raise ValueError(f"dims must be 2 or 3, got {dims}")
        if resolution % 2 != 0 or resolution < 8:
            raise InvalidResolutionError(
                f"resolution must be even and >= 8, got {resolution}")
        self.dims = dims
        self.resolution = resolution
        self.shape = (resolution,) * dims

        n = resolution
        k1d = np.fft.fftfreq(n, d=1.0 / n)  # 0, 1, ..., n/2-1, -n/2, ..., -1
        mesh = np.meshgrid(*(k1d,) * dims, indexing="ij")
        self.k = [ki.astype(np.float64) for ki in mesh]
        self.k_sq = sum(ki ** 2 for ki in self.k)
        with np.errstate(divide="ignore"):
            inv = np.where(self.k_sq > 0, 1.0 / np.where(self.k_sq > 0, self.k_sq, 1.0), 0.0)
        self.inv_k_sq = inv

        # Derivative symbols with the unmatched Nyquist mode removed; the
        # projections reuse them so curl(Q u) and div(P u) vanish exactly.
        k1d_deriv = k1d.copy()
        k1d_deriv[n // 2] = 0.0
        mesh_d = np.meshgrid(*(k1d_deriv,) * dims, indexing="ij")
        self.kd = [ki.astype(np.float64) for ki in mesh_d]
        self.ik = [1j * ki for ki in self.kd]
        kd_sq = sum(ki ** 2 for ki in self.kd)
        self.inv_kd_sq = np.where(kd_sq > 0, 1.0 / np.where(kd_sq > 0, kd_sq, 1.0), 0.0)

        cutoff = n // 3
        mask = np.ones(self.shape, dtype=bool)
        for ki in self.k:
            mask &= np.abs(ki) <= cutoff
        self.dealias_mask = mask

    def collocation_points(self):
        """Physical-space coordinate arrays, shape-matched to the fields."""
        x1d = 2.0 * np.pi * np.arange(self.resolution) / self.resolution
        return np.meshgrid(*(x1d,) * self.dims, indexing="ij")

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.resolution

    def __eq__(self, other):
        return (isinstance(other, TorusGrid)
                and self.dims == other.dims
                and self.resolution == other.resolution)

    def __hash__(self):
        return hash((self.dims, self.resolution))

    def __repr__(self):
        return f"TorusGrid(dims={self.dims}, resolution={self.resolution})"


def make_grid(dims: int, resolution: int) -> TorusGrid:
    """Validated grid constructor."""
    return TorusGrid(dims, resolution)


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")


@dataclass(eq=False)
class SpectralScalar:
    """Scalar field as Fourier coefficients on a TorusGrid."""

    grid: TorusGrid
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}")
        if self.coeffs.dtype != np.complex128:
            self.coeffs = self.coeffs.astype(np.complex128)

    @property
    def mean(self) -> float:
        return float(self.coeffs[(0,) * self.grid.dims].real)

    def samples(self) -> np.ndarray:
        return transform_inverse(self)

    def copy(self) -> "SpectralScalar":
        return SpectralScalar(self.grid, self.coeffs.copy())

    def __add__(self, other):
        _check_same_grid(self, other)
        return SpectralScalar(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return SpectralScalar(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, a):
        return SpectralScalar(self.grid, self.coeffs * float(a))

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralScalar(self.grid, -self.coeffs)


@dataclass(eq=False)
class SpectralVector:
    """Vector field with one SpectralScalar per spatial axis."""

    grid: TorusGrid
    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) != self.grid.dims:
            raise ValueError(
                f"expected {self.grid.dims} components, got {len(comps)}")
        for c in comps:
            if c.grid != self.grid:
                raise ValueError("component grid mismatch")
        self.components = comps

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def samples(self):
        return [c.samples() for c in self.components]

    def copy(self) -> "SpectralVector":
        return SpectralVector(self.grid, tuple(c.copy() for c in self.components))

    def __add__(self, other):
        _check_same_grid(self, other)
        return SpectralVector(self.grid, tuple(a + b for a, b in zip(self, other)))

    def __sub__(self, other):
        _check_same_grid(self, other)
        return SpectralVector(self.grid, tuple(a - b for a, b in zip(self, other)))

    def __mul__(self, a):
        return SpectralVector(self.grid, tuple(c * a for c in self.components))

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralVector(self.grid, tuple(-c for c in self.components))


def transform_forward(grid: TorusGrid, samples: np.ndarray) -> SpectralScalar:
    """Collocation samples -> Fourier-series coefficients."""
    samples = np.asarray(samples)
    if samples.shape != grid.shape:
        raise ValueError(
            f"sample shape {samples.shape} does not match grid {grid.shape}")
    coeffs = np.fft.fftn(samples) / samples.size
    return SpectralScalar(grid, coeffs)


def transform_inverse(f: SpectralScalar) -> np.ndarray:
    """Fourier coefficients -> real collocation samples."""
    return np.real(np.fft.ifftn(f.coeffs)) * f.coeffs.size


def scalar_from_function(grid: TorusGrid, fn) -> SpectralScalar:
    """Sample fn(x1, ..., xN) on the collocation grid and transform."""
    return transform_forward(grid, fn(*grid.collocation_points()))


def vector_from_functions(grid: TorusGrid, *fns) -> SpectralVector:
    if len(fns) != grid.dims:
        raise ValueError(f"need {grid.dims} component functions")
    return SpectralVector(grid, tuple(scalar_from_function(grid, fn) for fn in fns))


def zeros_scalar(grid: TorusGrid) -> SpectralScalar:
    return SpectralScalar(grid, np.zeros(grid.shape, dtype=np.complex128))


def zeros_vector(grid: TorusGrid) -> SpectralVector:
    return SpectralVector(grid, tuple(zeros_scalar(grid) for _ in range(grid.dims)))


def constant_scalar(grid: TorusGrid, value: float) -> SpectralScalar:
    f = zeros_scalar(grid)
    f.coeffs[(0,) * grid.dims] = value
    return f


def derivative(f: SpectralScalar, axis: int) -> SpectralScalar:
    """Spectral partial derivative along an axis; Nyquist mode zeroed."""
    if not 0 <= axis < f.grid.dims:
        raise ValueError(f"axis {axis} out of range for dims={f.grid.dims}")
    return SpectralScalar(f.grid, f.coeffs * f.grid.ik[axis])


def gradient(f: SpectralScalar) -> SpectralVector:
    return SpectralVector(f.grid, tuple(derivative(f, a) for a in range(f.grid.dims)))


def divergence(u: SpectralVector) -> SpectralScalar:
    out = derivative(u[0], 0)
    for a in range(1, u.grid.dims):
        out = out + derivative(u[a], a)
    return out


def laplacian(f):
    """Laplacian of a scalar or (componentwise) vector field."""
    if isinstance(f, SpectralVector):
        return SpectralVector(f.grid, tuple(laplacian(c) for c in f.components))
    return SpectralScalar(f.grid, -f.grid.k_sq * f.coeffs)


def inverse_laplacian(f: SpectralScalar, mean_tol: float = MEAN_TOL) -> SpectralScalar:
    """Mean-zero solution g of lap(g) = f; requires mean-zero input."""
    mean = abs(f.coeffs[(0,) * f.grid.dims])
    if mean > mean_tol:
        raise NonZeroMeanError(
            f"inverse Laplacian needs mean-zero input, |f_0| = {mean:.3e}")
    return SpectralScalar(f.grid, -f.grid.inv_k_sq * f.coeffs)


def dealias(f):
    """Truncate a field to the 2/3-rule band."""
    if isinstance(f, SpectralVector):
        return SpectralVector(f.grid, tuple(dealias(c) for c in f.components))
    return SpectralScalar(f.grid, f.coeffs * f.grid.dealias_mask)


def product(f: SpectralScalar, g: SpectralScalar) -> SpectralScalar:
    """Dealiased pointwise product of two scalar fields."""
    _check_same_grid(f, g)
    grid = f.grid
    fp = np.real(np.fft.ifftn(f.coeffs * grid.dealias_mask))
    gp = np.real(np.fft.ifftn(g.coeffs * grid.dealias_mask))
    coeffs = np.fft.fftn(fp * gp) * (fp.size)  # (1/M) fft of M^2-scaled samples
    return SpectralScalar(grid, coeffs * grid.dealias_mask)


def advect(u: SpectralVector, f):
    """Advection u . grad(f) of a scalar, or componentwise of a vector."""
    if isinstance(f, SpectralVector):
        return SpectralVector(f.grid, tuple(advect(u, c) for c in f.components))
    out = product(u[0], derivative(f, 0))
    for a in range(1, f.grid.dims):
        out = out + product(u[a], derivative(f, a))
    return out


def sobolev_norm(f, s: float) -> float:
    """H^s norm (sum over components for vectors and pairs of vectors)."""
    if hasattr(f, "grad_q"):  # GradientPair-like
        return float(np.hypot(sobolev_norm(f.grad_q, s), sobolev_norm(f.grad_psi, s)))
    if isinstance(f, SpectralVector):
        return float(np.sqrt(sum(sobolev_norm(c, s) ** 2 for c in f.components)))
    weight = (1.0 + f.grid.k_sq) ** s
    return float(np.sqrt(np.sum(weight * np.abs(f.coeffs) ** 2)))


def l2_inner(f, g) -> float:
    """Coefficient-space L^2 inner product (real part)."""
    if isinstance(f, SpectralVector):
        return float(sum(l2_inner(a, b) for a, b in zip(f, g)))
    _check_same_grid(f, g)
    return float(np.real(np.sum(np.conj(f.coeffs) * g.coeffs)))


def write_snapshot(path, field) -> None:
    """Write a field to the self-describing little-endian binary format.

    Layout: magic "QNL1", then uint32 dims, resolution and kind (1 = scalar,
    2 = vector), then row-major (re, im) float64 pairs, vector components in
    axis order.
    """
    if isinstance(field, SpectralVector):
        kind, blocks = _KIND_VECTOR, [c.coeffs for c in field.components]
    elif isinstance(field, SpectralScalar):
        kind, blocks = _KIND_SCALAR, [field.coeffs]
    else:
        raise TypeError(f"cannot snapshot object of type {type(field)!r}")
    grid = field.grid
    with open(path, "wb") as fh:
        fh.write(_SNAPSHOT_MAGIC)
        fh.write(struct.pack("<III", grid.dims, grid.resolution, kind))
        for block in blocks:
            flat = np.ascontiguousarray(block, dtype=np.complex128).ravel()
            pairs = np.empty(2 * flat.size, dtype="<f8")
            pairs[0::2] = flat.real
            pairs[1::2] = flat.imag
            fh.write(pairs.tobytes())


def read_snapshot(path):
    """Read a field written by write_snapshot."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _SNAPSHOT_MAGIC:
            raise ValueError(f"bad snapshot magic {magic!r}")
        dims, resolution, kind = struct.unpack("<III", fh.read(12))
        grid = make_grid(dims, resolution)
        count = resolution ** dims
        nblocks = {_KIND_SCALAR: 1, _KIND_VECTOR: dims}.get(kind)
        if nblocks is None:
            raise ValueError(f"unknown snapshot field kind {kind}")
        comps = []
        for _ in range(nblocks):
            raw = np.frombuffer(fh.read(16 * count), dtype="<f8")
            if raw.size != 2 * count:
                raise ValueError("truncated snapshot payload")
            coeffs = (raw[0::2] + 1j * raw[1::2]).reshape(grid.shape)
            comps.append(SpectralScalar(grid, coeffs))
    if kind == _KIND_SCALAR:
        return comps[0]
    return SpectralVector(grid, tuple(comps))
