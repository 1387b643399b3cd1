"""
Differential Operators
Spectral derivatives on periodic grids and MAC stencils on no-slip grids
"""

from functools import lru_cache

import numpy as np
from scipy import fft

from ..core.errors import GridError, GridMismatch
from .grid import GridSpec, ScalarField, VectorField


@lru_cache(maxsize=32)
def wavenumbers(grid: GridSpec) -> tuple[np.ndarray, ...]:
    """
    Angular wavenumbers per axis, broadcastable to the grid shape

    The Nyquist mode of even axes is zeroed so that the spectral gradient
    is exactly skew-adjoint and laplacian = div(grad).
    """
    out = []
    for axis, (n, h) in enumerate(zip(grid.cells, grid.spacing)):
        k = 2.0 * np.pi * fft.fftfreq(n, d=h)
        if n % 2 == 0:
            k[n // 2] = 0.0
        shape = [1] * grid.dim
        shape[axis] = n
        out.append(k.reshape(shape))
    return tuple(out)


def spectral_k2(grid: GridSpec) -> np.ndarray:
    k = wavenumbers(grid)
    return sum(ki**2 for ki in k) * np.ones(grid.shape)


def spectral_derivative(values: np.ndarray, grid: GridSpec, axis: int) -> np.ndarray:
    k = wavenumbers(grid)[axis]
    return fft.ifftn(1j * k * fft.fftn(values)).real


def _require(field, grid: GridSpec | None = None):
    if grid is not None and field.grid != grid:
        raise GridMismatch(f"Operator grid {grid} does not match field grid {field.grid}")
    return field.grid


def grad(phi: ScalarField) -> VectorField:
    """Gradient; no-slip grids evaluate on interior faces and set wall faces to zero"""
    grid = _require(phi)
    if grid.periodic:
        return VectorField(grid, tuple(spectral_derivative(phi.values, grid, a) for a in range(grid.dim)))
    comps = []
    for axis, h in enumerate(grid.spacing):
        inner = np.diff(phi.values, axis=axis) / h
        pad = [(0, 0)] * grid.dim
        pad[axis] = (1, 1)
        comps.append(np.pad(inner, pad))
    return VectorField(grid, tuple(comps))


def div(u: VectorField) -> ScalarField:
    grid = _require(u)
    if grid.periodic:
        return ScalarField(grid, sum(spectral_derivative(c, grid, a) for a, c in enumerate(u.components)))
    total = np.zeros(grid.shape)
    for axis, (comp, h) in enumerate(zip(u.components, grid.spacing)):
        total += np.diff(comp, axis=axis) / h
    return ScalarField(grid, total)


def laplacian(phi: ScalarField) -> ScalarField:
    """div(grad(phi)); homogeneous Neumann data on no-slip grids"""
    grid = _require(phi)
    if grid.periodic:
        return ScalarField(grid, fft.ifftn(-spectral_k2(grid) * fft.fftn(phi.values)).real)
    return div(grad(phi))


def center_gradient(values: np.ndarray, grid: GridSpec, axis: int, wall_value_zero: bool) -> np.ndarray:
    """Centered difference of a cell-centered array along axis with wall ghosts"""
    h = grid.spacing[axis]
    first = np.take(values, [0], axis=axis)
    last = np.take(values, [-1], axis=axis)
    if wall_value_zero:
        lo, hi = -first, -last
    else:
        lo, hi = first, last
    padded = np.concatenate([lo, values, hi], axis=axis)
    n = values.shape[axis]
    plus = np.take(padded, np.arange(2, n + 2), axis=axis)
    minus = np.take(padded, np.arange(0, n), axis=axis)
    return (plus - minus) / (2.0 * h)


def velocity_gradient(u: VectorField) -> np.ndarray:
    """
    Cell-centered velocity gradient G[i, j] = d u_i / d x_j, shape (d, d, *cells)

    On no-slip grids the diagonal is the exact face difference; off-diagonal
    entries use centered differences of the center-averaged components with
    the wall value zero.
    """
    grid = _require(u)
    d = grid.dim
    G = np.empty((d, d) + grid.shape)
    if grid.periodic:
        for i, comp in enumerate(u.components):
            for j in range(d):
                G[i, j] = spectral_derivative(comp, grid, j)
        return G
    centers = u.at_centers()
    for i, comp in enumerate(u.components):
        for j in range(d):
            if i == j:
                G[i, j] = np.diff(comp, axis=i) / grid.spacing[i]
            else:
                G[i, j] = center_gradient(centers[i], grid, j, wall_value_zero=True)
    return G


def curl(u: VectorField):
    """Scalar vorticity in 2D, vector curl in 3D (periodic only)"""
    grid = _require(u)
    if grid.dim == 1:
        raise GridError("curl needs dimension 2 or 3")
    if grid.dim == 2:
        if grid.periodic:
            uy_x = spectral_derivative(u.components[1], grid, 0)
            ux_y = spectral_derivative(u.components[0], grid, 1)
            return ScalarField(grid, uy_x - ux_y)
        G = velocity_gradient(u)
        return ScalarField(grid, G[1, 0] - G[0, 1])
    if not grid.periodic:
        raise GridError("3D curl is only available on periodic grids")
    G = velocity_gradient(u)
    return VectorField(grid, (G[2, 1] - G[1, 2], G[0, 2] - G[2, 0], G[1, 0] - G[0, 1]))


def bulk_factor(dim: int) -> float:
    """Coefficient c of div(u) I in the stress; 1D is the plane-parallel reduction of 3D"""
    return 2.0 / 3.0 if dim == 1 else 2.0 / dim


def stress_tensor(u, mu: float) -> np.ndarray:
    """
    Newtonian stress S = mu (grad u + grad u^T - c div u I) with zero bulk viscosity

    Args:
        u: VectorField or a precomputed gradient array of shape (d, d, ...)
        mu: Shear coefficient

    Returns:
        Array of shape (d, d, ...)
    """
    G = velocity_gradient(u) if isinstance(u, VectorField) else np.asarray(u, dtype=float)
    d = G.shape[0]
    S = G + np.swapaxes(G, 0, 1)
    trace = np.trace(G, axis1=0, axis2=1)
    for i in range(d):
        S[i, i] -= bulk_factor(d) * trace
    return mu * S


def dissipation_density(G: np.ndarray, mu: float) -> np.ndarray:
    """S(grad u) : grad u, pointwise nonnegative"""
    return np.einsum("ij...,ij...->...", stress_tensor(G, mu), G)


def compact_bump(r, radius: float, order: float = 2.0) -> np.ndarray:
    """Smooth profile exp(1 - (1 - (r/radius)^2)^-order) supported in r < radius, 1 at r = 0"""
    r = np.asarray(r, dtype=float)
    x = (r / radius) ** 2
    out = np.zeros_like(r)
    inside = x < 1.0
    out[inside] = np.exp(1.0 - (1.0 - x[inside]) ** (-order))
    return out


def sobolev_norm(values: np.ndarray, grid: GridSpec, k: int, q: float = 2.0) -> float:
    """
    Discrete W^{k,q} norm of cell-centered samples, k in {0, 1, 2}

    Derivatives use second-order centered differences (spectral on periodic grids).
    """
    values = np.asarray(values, dtype=float)
    if values.shape == grid.shape:
        values = values[None]
    layers = [values]
    current = values
    for _ in range(k):
        derived = []
        for comp in current:
            for axis in range(grid.dim):
                if grid.periodic:
                    derived.append(spectral_derivative(comp, grid, axis))
                else:
                    derived.append(np.gradient(comp, grid.spacing[axis], axis=axis))
        current = np.array(derived)
        layers.append(current)
    total = sum(np.sum(np.abs(layer) ** q) for layer in layers) * grid.cell_volume
    return float(total ** (1.0 / q))


def shift_half_cell(values: np.ndarray, grid: GridSpec, axis: int) -> np.ndarray:
    """Samples at x + h/2 along axis from centered periodic samples, by spectral phase shift"""
    n, h = grid.cells[axis], grid.spacing[axis]
    k = 2.0 * np.pi * fft.fftfreq(n, d=h)
    phase = np.exp(0.5j * k * h)
    if n % 2 == 0:
        phase[n // 2] = np.cos(0.5 * k[n // 2] * h)
    shape = [1] * grid.dim
    shape[axis] = n
    return fft.ifft(fft.fft(values, axis=axis) * phase.reshape(shape), axis=axis).real


def crop_offsets(source: GridSpec, target: GridSpec) -> tuple[int, ...]:
    """
    Cell offsets of a centered target box inside a periodic source box of equal spacing

    Raises:
        GridMismatch: If the source is not periodic, spacings differ or the target does not fit
    """
    if not source.periodic or source.dim != target.dim:
        raise GridMismatch(f"Cannot crop {source} onto {target}")
    offsets = []
    for hs, ht, ns, nt in zip(source.spacing, target.spacing, source.cells, target.cells):
        if abs(hs - ht) > 1e-12 * hs or nt > ns or (ns - nt) % 2:
            raise GridMismatch(f"Target {target} is not a centered sub-box of {source}")
        offsets.append((ns - nt) // 2)
    return tuple(offsets)


def crop_scalar(phi: ScalarField, target: GridSpec) -> ScalarField:
    offsets = crop_offsets(phi.grid, target)
    index = tuple(slice(o, o + n) for o, n in zip(offsets, target.cells))
    return ScalarField(target, phi.values[index])


def crop_vector(u: VectorField, target: GridSpec) -> VectorField:
    """
    Restrict a collocated periodic vector field to a centered sub-box

    No-slip targets receive each component on its MAC faces through a
    half-cell phase shift; the wall faces are then set to zero.
    """
    source = u.grid
    offsets = crop_offsets(source, target)
    comps = []
    for axis, comp in enumerate(u.components):
        values = comp
        if not target.periodic:
            values = shift_half_cell(comp, source, axis)
        for b, (o, n) in enumerate(zip(offsets, target.cells)):
            if b == axis and not target.periodic:
                index = np.arange(o - 1, o + n)
            else:
                index = np.arange(o, o + n)
            values = np.take(values, index, axis=b, mode="wrap")
        comps.append(values)
    return VectorField.with_walls(target, comps)
