"""Per-mode radial operators, the angular transform, and the cubic split.

Each cross-section mode j carries a tridiagonal radial operator: in the
log variable t = -log x the Laplacian acts modewise as
e^(2t) (d_tt - (n-1) d_t + lambda_j), discretized with central
differences (order-2 stencil).  The first and last rows are image
extrapolation rows: the outer row copies its neighbor (Neumann for the
image), the tip row scales its neighbor by exp(-b_j dt) so that the
image decays at the leading admissible tip rate b_j.  The fourth-order
operator is the literal matrix square, so applying it equals applying
the Laplacian twice, including at the ends.

The angular transform oversamples to at least 4 j_max + 5 physical
points so that projecting a product of three band-limited factors back
onto the retained modes is exact (plain 3/2 padding is not enough for
the cubic terms; see notes).
"""

from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .extensions import ExtensionSpec
from .mellin import ConeGrid, FieldState


@dataclass(eq=False)
class ModeOperator:
    """Banded radial matrix for one cross-section mode.

    robin_a and robin_b are the leading admissible tip exponents of the
    fourth-order and second-order domains; constraint rows in implicit
    solves tie the tip node to its neighbor at the matching decay rate.
    """

    grid: ConeGrid
    mode: int
    order: int
    lam: float
    robin_a: float
    robin_b: float
    matrix: sp.csr_matrix

    @property
    def field_exponent(self) -> float:
        """Tip decay rate of fields in this operator's natural domain."""
        return self.robin_a if self.order == 4 else self.robin_b

    @property
    def bandwidth(self) -> int:
        coo = self.matrix.tocoo()
        if coo.nnz == 0:
            return 0
        return int(np.max(np.abs(coo.row - coo.col)))

    def tip_ratio(self, exponent: Optional[float] = None) -> float:
        """exp(-a dt) linking the tip node to its neighbor."""
        a = self.field_exponent if exponent is None else exponent
        return float(np.exp(-a * self.grid.dt))

    def apply(self, arr: np.ndarray) -> np.ndarray:
        return self.matrix @ arr


def _check_pair(grid: ConeGrid, spec: ExtensionSpec):
    if spec.cs is not grid.cs:
        raise ValueError("grid and extension spec must share one cross-section")
    if spec.inner_bc is None:
        raise ValueError("extension spec lacks inner boundary data; "
                         "run build_extension first")


def assemble_laplacian(j: int, grid: ConeGrid, spec: ExtensionSpec) -> ModeOperator:
    """Radial Laplacian for mode j with image extrapolation rows.

    Parameters
    ----------
    j : int
        Mode index, at most grid.j_max.
    grid : ConeGrid
    spec : ExtensionSpec
        Completed spec (window, addons, inner boundary exponents).

    Returns
    -------
    ModeOperator
        Tridiagonal away from the ends; row 0 copies row 1 and row N is
        exp(-b_j dt) times row N-1, so the image of a field satisfies
        the same outer-Neumann / tip-decay pattern as the field itself.
    """
    _check_pair(grid, spec)
    if not 0 <= j <= grid.j_max:
        raise ValueError("mode index outside the grid truncation")
    a_j, b_j = spec.inner_bc[j]
    lam = float(grid.cs.eigenvalue(j))
    n = grid.cs.n
    h = grid.dt
    N = grid.n_radial
    e2t = np.exp(2.0 * grid.t)
    i = np.arange(1, N)
    M = sp.lil_matrix((N + 1, N + 1))
    M[i, i - 1] = e2t[i] * (1.0 / h ** 2 + 0.5 * (n - 1) / h)
    M[i, i] = e2t[i] * (-2.0 / h ** 2 + lam)
    M[i, i + 1] = e2t[i] * (1.0 / h ** 2 - 0.5 * (n - 1) / h)
    M[0, 0] = M[1, 0]
    M[0, 1] = M[1, 1]
    M[0, 2] = M[1, 2]
    ratio = np.exp(-b_j * h)
    M[N, N - 2] = ratio * M[N - 1, N - 2]
    M[N, N - 1] = ratio * M[N - 1, N - 1]
    M[N, N] = ratio * M[N - 1, N]
    return ModeOperator(grid=grid, mode=j, order=2, lam=lam,
                        robin_a=float(a_j), robin_b=float(b_j),
                        matrix=M.tocsr())


def assemble_bilaplacian(j: int, grid: ConeGrid, spec: ExtensionSpec) -> ModeOperator:
    """Fourth-order radial operator as the exact square of the Laplacian."""
    P = assemble_laplacian(j, grid, spec)
    return ModeOperator(grid=grid, mode=j, order=4, lam=P.lam,
                        robin_a=P.robin_a, robin_b=P.robin_b,
                        matrix=(P.matrix @ P.matrix).tocsr())


def laplacian_suite(grid: ConeGrid, spec: ExtensionSpec) -> List[ModeOperator]:
    return [assemble_laplacian(j, grid, spec) for j in range(grid.j_max + 1)]


def bilaplacian_suite(grid: ConeGrid, spec: ExtensionSpec,
                      laplacians: Optional[List[ModeOperator]] = None) -> List[ModeOperator]:
    if laplacians is None:
        laplacians = laplacian_suite(grid, spec)
    out = []
    for P in laplacians:
        out.append(ModeOperator(grid=grid, mode=P.mode, order=4, lam=P.lam,
                                robin_a=P.robin_a, robin_b=P.robin_b,
                                matrix=(P.matrix @ P.matrix).tocsr()))
    return out


def apply_modewise(ops: List[ModeOperator], coeffs: np.ndarray,
                   grid: ConeGrid) -> np.ndarray:
    """Apply one radial operator per mode across all channels."""
    out = np.empty_like(coeffs)
    for j in range(grid.j_max + 1):
        cols = np.nonzero(grid.channel_modes == j)[0]
        if cols.size:
            out[:, cols] = ops[j].matrix @ coeffs[:, cols]
    return out


def apply_operator(u: FieldState, ops: List[ModeOperator]) -> FieldState:
    return u.like(apply_modewise(ops, u.coeffs, u.grid))


def to_banded(mat: sp.spmatrix, kl: int, ku: int) -> np.ndarray:
    """Diagonal-ordered form consumed by scipy.linalg.solve_banded."""
    mat = mat.tocsr()
    m = mat.shape[0]
    ab = np.zeros((kl + ku + 1, m))
    for k in range(-kl, ku + 1):
        d = mat.diagonal(k)
        if k >= 0:
            ab[ku - k, k:] = d
        else:
            ab[ku - k, :m + k] = d
    return ab


@dataclass(eq=False)
class TransformPlan:
    """Uniform-angle synthesis/analysis pair for circle cross-sections.

    Analysis is (L/m) S^T, which inverts synthesis exactly on the
    retained band as long as m exceeds twice the top mode; m is padded
    further so cubic products project back without aliasing.
    """

    grid: ConeGrid
    n_phys: Optional[int] = None

    def __post_init__(self):
        cs = self.grid.cs
        if cs.geometry != "circle":
            raise ValueError("angular transform is implemented for circles only")
        jm = self.grid.j_max
        self.m = self.n_phys or max(4 * jm + 5, 8)
        L = float(cs.circumference)
        self.theta = L * np.arange(self.m) / self.m
        self.S = np.column_stack([cs.evaluate(j, k, self.theta)
                                  for j, k in self.grid.channels])
        nc = self.grid.n_channels
        D = np.zeros((nc, nc))
        for c, (j, k) in enumerate(self.grid.channels):
            if j == 0:
                continue
            w = 2.0 * np.pi * j / L
            partner = self.grid.channel_index(j, 1 - k)
            D[partner, c] = -w if k == 0 else w
        self.Dtheta = D
        self._analysis = (L / self.m) * self.S

    def to_physical(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs @ self.S.T

    def to_modes(self, values: np.ndarray) -> np.ndarray:
        return values @ self._analysis

    def dtheta(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs @ self.Dtheta.T

    def product(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Mode coefficients of the pointwise product of two fields."""
        return self.to_modes(self.to_physical(a) * self.to_physical(b))


def transform_plan(grid: ConeGrid) -> TransformPlan:
    plan = getattr(grid, "_transform_plan", None)
    if plan is None:
        plan = TransformPlan(grid)
        grid._transform_plan = plan
    return plan


def gradient_pairing(u: FieldState, v: FieldState,
                     grid: Optional[ConeGrid] = None) -> FieldState:
    """Metric pairing of gradients, e^(2t) (u_t v_t + u_theta v_theta).

    Both slots must live on the same grid.  The product is formed
    pointwise on the padded physical grid and projected back, so for
    u = v = x cos(theta) the result is the constant 1 up to O(dt^2)
    from the radial stencil.
    """
    grid = grid or u.grid
    if v.grid is not grid or u.grid is not grid:
        raise ValueError("gradient pairing needs both fields on one grid")
    plan = transform_plan(grid)
    D = grid.radial_derivative_matrix()
    rad = plan.to_physical(D @ u.coeffs) * plan.to_physical(D @ v.coeffs)
    ang = plan.to_physical(plan.dtheta(u.coeffs)) * plan.to_physical(plan.dtheta(v.coeffs))
    w = plan.to_modes(rad + ang) * np.exp(2.0 * grid.t)[:, np.newaxis]
    return u.like(w)


def cubic_field(u: FieldState) -> FieldState:
    """Mode coefficients of u^3 via the dealiased physical grid."""
    plan = transform_plan(u.grid)
    vals = plan.to_physical(u.coeffs)
    return u.like(plan.to_modes(vals ** 3))


def flux_divergence(scalar_phys: np.ndarray, z: np.ndarray,
                    grid: ConeGrid) -> np.ndarray:
    """Mode coefficients of div(s grad z) = e^(2t)(d_t(s z_t) + d_y(s z_y)).

    s is given pointwise on the padded physical grid, z in mode
    coefficients.  The radial part differences staggered midpoint fluxes
    s_(i+1/2) (z_(i+1) - z_i)/h, so the weighted radial sum telescopes to
    the two boundary fluxes and the term vanishes identically when z is
    constant; the angular part applies d_y outermost, whose mode-0 row is
    zero, so it never moves mass.  The two boundary rows are left zero
    (zero-flux closure); solvers overwrite them with constraint rows.
    """
    plan = transform_plan(grid)
    h = grid.dt
    phys = plan.to_physical(z)
    smid = 0.5 * (scalar_phys[:-1] + scalar_phys[1:])
    fr = smid * (phys[1:] - phys[:-1]) / h
    divr = np.zeros_like(phys)
    divr[1:-1] = (fr[1:] - fr[:-1]) / h
    ang = plan.dtheta(plan.to_modes(scalar_phys * plan.to_physical(plan.dtheta(z))))
    return (plan.to_modes(divr) + ang) * np.exp(2.0 * grid.t)[:, np.newaxis]


def nonlinearity(u: FieldState, grid: Optional[ConeGrid] = None,
                 spec: Optional[ExtensionSpec] = None
                 ) -> Tuple[Callable[[FieldState], FieldState], FieldState]:
    """Frozen-coefficient principal part and matching lower-order term.

    Splits the quasilinear right-hand side at the state u: the returned
    operator applies w -> Lap^2 w + (1 - 3 u^2) Lap w with u frozen and
    the multiplication done pseudo-spectrally; the returned field is
    F = 6 u (grad u, grad u)_g.  For u = 0 the operator reduces to
    Lap^2 + Lap, for u = 1 to Lap^2 - 2 Lap, with F = 0 in both cases.
    """
    if spec is None:
        raise ValueError("an extension spec is required")
    grid = grid or u.grid
    plan = transform_plan(grid)
    laps = laplacian_suite(grid, spec)
    bils = bilaplacian_suite(grid, spec, laps)
    u_phys = plan.to_physical(u.coeffs)
    u2_phys = u_phys ** 2

    def a_freeze(w: FieldState) -> FieldState:
        lw = apply_modewise(laps, w.coeffs, grid)
        out = apply_modewise(bils, w.coeffs, grid) + lw
        out -= 3.0 * plan.to_modes(u2_phys * plan.to_physical(lw))
        return w.like(out)

    # one pass through the padded grid: projecting the pairing to the
    # retained band before multiplying by u would fold away the high
    # modes that the cubic chain rule needs
    D = grid.radial_derivative_matrix()
    rad = plan.to_physical(D @ u.coeffs)
    ang = plan.to_physical(plan.dtheta(u.coeffs))
    pair_phys = (rad * rad + ang * ang) * np.exp(2.0 * grid.t)[:, np.newaxis]
    F = u.like(6.0 * plan.to_modes(u_phys * pair_phys))
    return a_freeze, F
