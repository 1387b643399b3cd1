"""
Poisson, Helmholtz and Biot-Savart
Mean-zero Poisson solves, the Helmholtz projection and velocity recovery from vorticity
"""

import logging

import numpy as np
from scipy import fft
from scipy.sparse.linalg import LinearOperator, cg

from ..core.errors import GridError, MeanError, SolverError
from .grid import GridSpec, ScalarField, VectorField
from .operators import div, grad, laplacian, spectral_derivative, spectral_k2

logger = logging.getLogger(__name__)

POISSON_RTOL = 1e-10
MEAN_TOL = 1e-10


def _check_mean(f: ScalarField, tol: float = MEAN_TOL) -> None:
    # floor of 1 for round-off divergences
    scale = max(float(np.max(np.abs(f.values))), 1.0)
    if abs(f.mean()) > tol * scale:
        raise MeanError(f"Source mean {f.mean():.3e} exceeds {tol:g} x max(|f|, 1) = {tol * scale:.3e}")


def _neumann_eigenvalues(grid: GridSpec) -> np.ndarray:
    """Eigenvalues of the Neumann 5-point Laplacian in the DCT-II basis"""
    total = np.zeros(grid.shape)
    for axis, (n, h) in enumerate(zip(grid.cells, grid.spacing)):
        lam = -4.0 / h**2 * np.sin(np.pi * np.arange(n) / (2.0 * n)) ** 2
        shape = [1] * grid.dim
        shape[axis] = n
        total = total + lam.reshape(shape)
    return total


def _dct_solve(values: np.ndarray, eig: np.ndarray) -> np.ndarray:
    coeffs = fft.dctn(values, type=2, norm="ortho")
    zero = np.zeros_like(coeffs, dtype=bool)
    zero.flat[0] = True
    coeffs = np.where(zero, 0.0, coeffs / np.where(zero, 1.0, eig))
    return fft.idctn(coeffs, type=2, norm="ortho")


def solve_poisson(f: ScalarField, rtol: float = POISSON_RTOL) -> ScalarField:
    """
    Mean-zero solution phi of laplacian(phi) = f

    Periodic grids invert the spectral symbol. No-slip grids use conjugate
    gradients on the Neumann operator, preconditioned with the DCT solve.

    Raises:
        MeanError: If f is not mean-zero
        SolverError: If the iteration misses rtol
    """
    _check_mean(f)
    grid = f.grid
    if grid.periodic:
        k2 = spectral_k2(grid)
        f_hat = fft.fftn(f.values)
        phi_hat = np.where(k2 > 0, -f_hat / np.where(k2 > 0, k2, 1.0), 0.0)
        return ScalarField(grid, fft.ifftn(phi_hat).real)

    shape = grid.shape
    size = int(np.prod(shape))
    eig = _neumann_eigenvalues(grid)

    def apply(x):
        return -laplacian(ScalarField(grid, x.reshape(shape))).values.ravel()

    def precondition(x):
        return -_dct_solve(x.reshape(shape), eig).ravel()

    A = LinearOperator((size, size), matvec=apply, dtype=float)
    M = LinearOperator((size, size), matvec=precondition, dtype=float)
    rhs = -(f.values - f.values.mean()).ravel()
    if not np.any(rhs):
        return ScalarField.zeros(grid)
    x, info = cg(A, rhs, x0=precondition(rhs), rtol=rtol, atol=0.0, M=M, maxiter=200)
    residual = np.linalg.norm(A.matvec(x) - rhs) / np.linalg.norm(rhs)
    if info != 0 and residual > rtol:
        raise SolverError(f"Neumann Poisson CG stopped with info={info}, residual {residual:.3e}")
    x = x - x.mean()
    return ScalarField(grid, x.reshape(shape))


def helmholtz_decompose(u: VectorField) -> tuple[VectorField, ScalarField]:
    """
    Split u = H(u) + grad(phi) with div H(u) = 0

    Returns:
        Tuple (H(u), phi)
    """
    phi = solve_poisson(div(u))
    return u - grad(phi), phi


def helmholtz_project(u: VectorField) -> VectorField:
    """Divergence-free part H(u) of u"""
    projected, _ = helmholtz_decompose(u)
    return projected


def stream_function(omega: ScalarField) -> ScalarField:
    """psi with -laplacian(psi) = omega on a 2D periodic grid"""
    grid = omega.grid
    if not grid.periodic or grid.dim != 2:
        raise GridError(f"Stream function needs a 2D periodic grid, got {grid}")
    _check_mean(omega)
    k2 = spectral_k2(grid)
    w_hat = fft.fftn(omega.values)
    psi_hat = np.where(k2 > 0, w_hat / np.where(k2 > 0, k2, 1.0), 0.0)
    return ScalarField(grid, fft.ifftn(psi_hat).real)


def biot_savart(omega: ScalarField) -> VectorField:
    """
    Velocity v = (d_y psi, -d_x psi) with -laplacian(psi) = omega

    Raises:
        GridError: Unless the grid is 2D periodic
        MeanError: If omega has nonzero mean
    """
    psi = stream_function(omega)
    grid = omega.grid
    return VectorField(
        grid,
        (spectral_derivative(psi.values, grid, 1), -spectral_derivative(psi.values, grid, 0)),
    )
