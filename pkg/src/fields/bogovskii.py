"""
Bogovskii Operator
Right inverse of the divergence with zero wall trace on no-slip box grids
"""

from functools import lru_cache
import logging

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, cg, factorized

from ..core.errors import GridError, SolverError
from .grid import GridSpec, ScalarField, VectorField
from .operators import div, grad, sobolev_norm
from .poisson import _check_mean

logger = logging.getLogger(__name__)

BOGOVSKII_RTOL = 1e-10


def _second_difference(n: int, h: float, staggered_wall: bool) -> sparse.csr_matrix:
    """1D Dirichlet second difference; staggered walls sit half a cell beyond the end points"""
    main = -2.0 * np.ones(n)
    if staggered_wall:
        main[0] = main[-1] = -3.0
    off = np.ones(n - 1)
    return sparse.diags([off, main, off], [-1, 0, 1], format="csr") / h**2


class _VectorLaplacian:
    """Factorized negative Dirichlet Laplacian on the interior faces of every component"""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self.solvers = []
        self.shapes = []
        for comp in range(grid.dim):
            shape, blocks = [], []
            for axis, (n, h) in enumerate(zip(grid.cells, grid.spacing)):
                size = n - 1 if axis == comp else n
                shape.append(size)
                blocks.append(_second_difference(size, h, staggered_wall=axis != comp))
            op = None
            for axis, block in enumerate(blocks):
                eye_left = sparse.identity(int(np.prod(shape[:axis])), format="csr")
                eye_right = sparse.identity(int(np.prod(shape[axis + 1:])), format="csr")
                term = sparse.kron(sparse.kron(eye_left, block), eye_right, format="csc")
                op = term if op is None else op + term
            self.solvers.append(factorized((-op).tocsc()))
            self.shapes.append(tuple(shape))

    def solve(self, comps: tuple[np.ndarray, ...]) -> tuple[np.ndarray, ...]:
        """Apply (-L)^-1 to interior-face data and pad the wall faces with zeros"""
        out = []
        for axis, (solver, shape, comp) in enumerate(zip(self.solvers, self.shapes, comps)):
            index = [slice(None)] * self.grid.dim
            index[axis] = slice(1, -1)
            interior = solver(np.ascontiguousarray(comp[tuple(index)]).ravel()).reshape(shape)
            pad = [(0, 0)] * self.grid.dim
            pad[axis] = (1, 1)
            out.append(np.pad(interior, pad))
        return tuple(out)


@lru_cache(maxsize=8)
def _vector_laplacian(grid: GridSpec) -> _VectorLaplacian:
    logger.debug(f"Factorizing the vector Laplacian on {grid}")
    return _VectorLaplacian(grid)


def bogovskii(f: ScalarField, rtol: float = BOGOVSKII_RTOL) -> VectorField:
    """
    Vector field B with div B = f and B = 0 on the walls

    Among all such fields B minimizes ||grad B||; it solves the discrete
    Stokes problem -Lap B + grad q = 0, div B = f through conjugate
    gradients on the pressure Schur complement. In 1D the solution is
    the running integral of f.

    Args:
        f: Mean-zero source on a no-slip grid
        rtol: Relative residual of the Schur complement iteration

    Returns:
        VectorField B(f)

    Raises:
        GridError: On periodic grids
        MeanError: If f is not mean-zero
        SolverError: If the iteration fails
    """
    grid = f.grid
    if grid.periodic:
        raise GridError("The Bogovskii operator needs a no-slip grid")
    _check_mean(f)
    values = f.values - f.values.mean()
    if not np.any(values):
        return VectorField.zeros(grid)

    if grid.dim == 1:
        faces = np.concatenate([[0.0], np.cumsum(values) * grid.spacing[0]])
        faces[-1] = 0.0
        return VectorField(grid, (faces,))

    laplace = _vector_laplacian(grid)
    shape = grid.shape
    size = int(np.prod(shape))

    def velocity(q: np.ndarray) -> VectorField:
        g = grad(ScalarField(grid, q.reshape(shape)))
        return VectorField(grid, tuple(-c for c in laplace.solve(g.components)))

    def schur(q):
        return div(velocity(q)).values.ravel()

    S = LinearOperator((size, size), matvec=schur, dtype=float)
    rhs = values.ravel()
    q, info = cg(S, rhs, rtol=rtol, atol=0.0, maxiter=2000)
    B = velocity(q)
    residual = np.linalg.norm(div(B).values - values) / np.linalg.norm(values)
    if info != 0 and residual > 10.0 * rtol:
        raise SolverError(f"Bogovskii Schur iteration stopped with info={info}, residual {residual:.3e}")
    logger.debug(f"Bogovskii solve on {grid}: residual {residual:.3e}")
    return B


def norm_ratio(f: ScalarField, B: VectorField, p: float = 2.0) -> float:
    """Realized ||B(f)||_{W^{1,p}} / ||f||_{L^p}"""
    f_norm = f.norm(p)
    if f_norm == 0.0:
        return 0.0
    return sobolev_norm(B.at_centers(), B.grid, 1, p) / f_norm


def divergence_residual(f: ScalarField, B: VectorField) -> float:
    """Discrete L2 norm of div B - f"""
    return (div(B) - f).norm(2)
