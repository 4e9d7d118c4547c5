r"""Nystrom boundary-integral solver for the mixed cavity problem and the
Dirichlet-to-Neumann maps it induces.

Problem: :math:`\Delta u = 0` in :math:`\Omega\setminus\bar D`, zero Neumann
data on every cavity boundary, Dirichlet data ``f`` on the outer boundary.
The solution is represented as a double layer on the outer curve plus single
layers on the cavity curves (all densities real or complex):

.. math::
    u = D_\Omega[\varphi] + \sum_c S_{D_c}[\psi_c],

which yields the second-kind system (with :math:`\Phi = -\tfrac1{2\pi}\ln|x-y|`,
interior double-layer limit :math:`(K - \tfrac12 I)\varphi`, exterior
single-layer normal-derivative limit :math:`(K' - \tfrac12 I)\psi`)

.. math::
    (K_{\Omega\Omega} - \tfrac12 I)\varphi + \textstyle\sum_c S_{\Omega D_c}\psi_c = f,
    \qquad
    N_{D_c\Omega}\varphi + (K'_{D_c D_c} - \tfrac12 I)\psi_c
    + \textstyle\sum_{c'\ne c} N'_{D_c D_{c'}}\psi_{c'} = g_c .

Quadrature is the periodic trapezoid rule (spectrally accurate on analytic
curves); the weakly singular same-curve single layer uses the Kress-
Martensen log-weight rule, and the outer Neumann trace uses the Maue
identity :math:`T\varphi = \partial_s S[\partial_s \varphi]` with spectral
(FFT) arclength derivatives, avoiding any hypersingular kernel.

The unit-disk background map is exact: :math:`\Lambda_0 = \mathrm{diag}(|n|)`
in the Fourier basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import BasisMismatchError, SolverError
from .geometry import Circle, Curve, Geometry2

DEFAULT_NODES = 256
DEFAULT_MODES = 32
TRACE_SAMPLES = 512


@dataclass
class CurveMesh:
    """Trapezoid discretization of a closed curve (nodes, speeds, normals)."""

    curve: Curve
    n: int
    t: np.ndarray = field(init=False)
    pts: np.ndarray = field(init=False)
    speed: np.ndarray = field(init=False)
    normal: np.ndarray = field(init=False)
    dl_diag: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.t = 2 * np.pi * np.arange(self.n) / self.n
        self.pts = self.curve.point(self.t)
        d = self.curve.derivative(self.t)
        dd = self.curve.second_derivative(self.t)
        self.speed = np.linalg.norm(d, axis=1)
        self.normal = np.stack([d[:, 1], -d[:, 0]], axis=1) / self.speed[:, None]
        # shared diagonal limit of the double layer and its adjoint:
        # y''.nu / (4 pi |y'|)
        self.dl_diag = np.einsum("ij,ij->i", dd, self.normal) / (4 * np.pi * self.speed)

    @property
    def h(self) -> float:
        return 2 * np.pi / self.n

    @property
    def weights(self) -> np.ndarray:
        """Arclength quadrature weights (for integrals over the curve)."""
        return self.speed * self.h


def _displacements(tgt: CurveMesh, src: CurveMesh) -> tuple[np.ndarray, np.ndarray]:
    diff = tgt.pts[:, None, :] - src.pts[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", diff, diff)
    return diff, r2


def double_layer(src: CurveMesh, tgt: CurveMesh, same: bool) -> np.ndarray:
    """(K phi)(x_i) ~ sum_j M[i,j] phi_j with kernel dPhi/dnu_y |y'| h."""
    diff, r2 = _displacements(tgt, src)
    with np.errstate(divide="ignore", invalid="ignore"):
        ker = np.einsum("ijk,jk->ij", diff, src.normal) / r2
    m = ker / (2 * np.pi) * src.speed[None, :] * src.h
    if same:
        np.fill_diagonal(m, src.dl_diag * src.h)
    return m


def adjoint_double_layer(src: CurveMesh, tgt: CurveMesh, same: bool) -> np.ndarray:
    """(K' psi)(x_i): kernel dPhi/dnu_x |y'| h."""
    diff, r2 = _displacements(tgt, src)
    with np.errstate(divide="ignore", invalid="ignore"):
        ker = -np.einsum("ijk,ik->ij", diff, tgt.normal) / r2
    m = ker / (2 * np.pi) * src.speed[None, :] * src.h
    if same:
        np.fill_diagonal(m, src.dl_diag * src.h)
    return m


def normal_derivative_double_layer(src: CurveMesh, tgt: CurveMesh) -> np.ndarray:
    """d/dnu_x of the double layer, disjoint curves only (smooth kernel)."""
    diff, r2 = _displacements(tgt, src)
    nx_ny = tgt.normal @ src.normal.T
    dx = np.einsum("ijk,ik->ij", diff, tgt.normal)
    dy = np.einsum("ijk,jk->ij", diff, src.normal)
    ker = (nx_ny / r2 - 2.0 * dx * dy / r2**2) / (2 * np.pi)
    return ker * src.speed[None, :] * src.h


def single_layer_cross(src: CurveMesh, tgt: CurveMesh) -> np.ndarray:
    """Single layer between disjoint curves (smooth log kernel)."""
    _, r2 = _displacements(tgt, src)
    return -np.log(r2) / (4 * np.pi) * src.speed[None, :] * src.h


def _log_weights(n: int) -> np.ndarray:
    """Quadrature weights R_j for int_0^{2pi} ln(4 sin^2((s-t)/2)) f(t) dt at
    equispaced nodes, exact for trigonometric polynomials of degree < n/2."""
    m = n // 2
    j = np.arange(n)
    tj = 2 * np.pi * j / n
    k = np.arange(1, m)
    r = -(4 * np.pi / n) * (np.cos(np.outer(tj, k)) / k).sum(axis=1)
    r -= (2 * np.pi / (n * m)) * np.cos(m * tj)
    return r


def single_layer_same(mesh: CurveMesh) -> np.ndarray:
    """Kress-Martensen rule for the single layer on its own curve."""
    n = mesh.n
    diff, r2 = _displacements(mesh, mesh)
    tdiff = mesh.t[:, None] - mesh.t[None, :]
    sin2 = 4.0 * np.sin(tdiff / 2.0) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        smooth = -np.log(r2 / sin2) / (4 * np.pi)
    np.fill_diagonal(smooth, -np.log(mesh.speed**2) / (4 * np.pi))
    rw = _log_weights(n)
    idx = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))  # circular |i-j|
    idx = np.minimum(idx, n - idx)
    log_part = rw[idx] * (-1.0 / (4 * np.pi))
    return (log_part + smooth * mesh.h) * mesh.speed[None, :]


def _fft_param_derivative(values: np.ndarray) -> np.ndarray:
    """Spectral d/dt of periodic nodal values (complex allowed); axis 0."""
    n = values.shape[0]
    k = np.fft.fftfreq(n, d=1.0 / n) * 1j
    if values.ndim == 1:
        return np.fft.ifft(k * np.fft.fft(values))
    return np.fft.ifft(k[:, None] * np.fft.fft(values, axis=0), axis=0)


@dataclass
class BemSystem:
    """Assembled blocks and LU factorization for one geometry."""

    geom: Geometry2
    outer: CurveMesh
    cavities: list[CurveMesh]
    matrix: np.ndarray
    lu: tuple
    s_outer: np.ndarray  # same-curve single layer on the outer boundary (for Maue)

    @property
    def n_outer(self) -> int:
        return self.outer.n

    def solve(self, f: np.ndarray, cavity_neumann: Sequence[np.ndarray] | None = None):
        """Solve for densities; ``f`` nodal Dirichlet data on the outer curve,
        optional nodal Neumann data per cavity (defaults to zero)."""
        n_tot = self.matrix.shape[0]
        f = np.asarray(f)
        rhs = np.zeros(
            (n_tot,) + f.shape[1:], dtype=complex if np.iscomplexobj(f) else float
        )
        rhs[: self.n_outer] = f
        if cavity_neumann is not None:
            off = self.n_outer
            for mesh, g in zip(self.cavities, cavity_neumann):
                if g is not None:
                    rhs[off : off + mesh.n] = g
                off += mesh.n
        sol = lu_solve(self.lu, rhs)
        residual = np.max(np.abs(self.matrix @ sol - rhs))
        scale = max(1.0, float(np.max(np.abs(rhs))))
        if residual > 1e-10 * scale:
            raise SolverError(f"BEM residual {residual:.2e} above tolerance")
        return BvpSolution(self, sol)


@dataclass
class BvpSolution:
    """Field handle: evaluable inside the domain, with boundary traces."""

    system: BemSystem
    densities: np.ndarray

    def _split(self):
        n0 = self.system.n_outer
        phi = self.densities[:n0]
        psis = []
        off = n0
        for mesh in self.system.cavities:
            psis.append(self.densities[off : off + mesh.n])
            off += mesh.n
        return phi, psis

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """u at interior points (no jump handling near boundaries)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        phi, psis = self._split()
        om = self.system.outer
        diff = pts[:, None, :] - om.pts[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", diff, diff)
        ker = np.einsum("ijk,jk->ij", diff, om.normal) / r2 / (2 * np.pi)
        u = (ker * om.speed[None, :] * om.h) @ phi
        for mesh, psi in zip(self.system.cavities, psis):
            diff = pts[:, None, :] - mesh.pts[None, :, :]
            r2 = np.einsum("ijk,ijk->ij", diff, diff)
            u = u + (-np.log(r2) / (4 * np.pi) * mesh.speed[None, :] * mesh.h) @ psi
        return u

    def neumann_outer(self) -> np.ndarray:
        """du/dnu nodal values on the outer boundary via the Maue identity."""
        phi, psis = self._split()
        om = self.system.outer
        spd = om.speed if phi.ndim == 1 else om.speed[:, None]
        dphi_ds = _fft_param_derivative(phi) / spd
        t_phi = _fft_param_derivative(self.system.s_outer @ dphi_ds) / spd
        g = t_phi
        for mesh, psi in zip(self.system.cavities, psis):
            g = g + adjoint_double_layer(mesh, om, same=False) @ psi
        if not np.iscomplexobj(self.densities):
            g = g.real
        return g

    def dirichlet_on_cavity(self, index: int) -> np.ndarray:
        """Trace of u on cavity ``index`` (single layer is continuous)."""
        phi, psis = self._split()
        mesh = self.system.cavities[index]
        u = double_layer(self.system.outer, mesh, same=False) @ phi
        for j, (other, psi) in enumerate(zip(self.system.cavities, psis)):
            if j == index:
                u = u + single_layer_same(other) @ psi
            else:
                u = u + single_layer_cross(other, mesh) @ psi
        return u


def assemble_system(
    geom: Geometry2, n_outer: int = DEFAULT_NODES, n_cavity: int = DEFAULT_NODES
) -> BemSystem:
    outer = CurveMesh(geom.outer, n_outer)
    cavities = [CurveMesh(c, n_cavity) for c in geom.cavities]
    n_tot = n_outer + sum(m.n for m in cavities)
    a = np.zeros((n_tot, n_tot))
    a[:n_outer, :n_outer] = double_layer(outer, outer, same=True) - 0.5 * np.eye(n_outer)
    off_i = n_outer
    for ci, cmesh in enumerate(cavities):
        a[:n_outer, off_i : off_i + cmesh.n] = single_layer_cross(cmesh, outer)
        a[off_i : off_i + cmesh.n, :n_outer] = normal_derivative_double_layer(outer, cmesh)
        off_j = n_outer
        for cj, other in enumerate(cavities):
            blk = slice(off_i, off_i + cmesh.n)
            blk_j = slice(off_j, off_j + other.n)
            if ci == cj:
                a[blk, blk_j] = adjoint_double_layer(cmesh, cmesh, same=True) - 0.5 * np.eye(
                    cmesh.n
                )
            else:
                a[blk, blk_j] = adjoint_double_layer(other, cmesh, same=False)
            off_j += other.n
        off_i += cmesh.n
    return BemSystem(
        geom=geom,
        outer=outer,
        cavities=cavities,
        matrix=a,
        lu=lu_factor(a),
        s_outer=single_layer_same(outer),
    )


def solve_mixed_bvp(
    geom: Geometry2,
    f: np.ndarray,
    system: BemSystem | None = None,
    cavity_neumann: Sequence[np.ndarray] | None = None,
) -> BvpSolution:
    """Solve the mixed problem for nodal Dirichlet data ``f`` on the outer curve."""
    system = system or assemble_system(geom)
    if np.asarray(f).shape[0] != system.n_outer:
        raise SolverError("Dirichlet data length does not match the outer mesh")
    return system.solve(np.asarray(f), cavity_neumann)


@dataclass
class DtnOperator:
    """Discrete Dirichlet-to-Neumann map in a boundary basis."""

    basis: str  # "fourier" or "collocation"
    order: int  # number of modes M (|n| <= M) or node count
    matrix: np.ndarray

    @property
    def mode_numbers(self) -> np.ndarray:
        if self.basis != "fourier":
            raise BasisMismatchError("mode numbers only exist in the Fourier basis")
        return np.arange(-self.order, self.order + 1)

    def apply(self, coeffs: np.ndarray) -> np.ndarray:
        return self.matrix @ coeffs

    def to_collocation(self, n_nodes: int) -> "DtnOperator":
        """Nodal-values representation on n_nodes equispaced parameter nodes."""
        if self.basis != "fourier":
            return self
        theta = 2 * np.pi * np.arange(n_nodes) / n_nodes
        v = np.exp(1j * np.outer(theta, self.mode_numbers))
        return DtnOperator(
            basis="collocation",
            order=n_nodes,
            matrix=v @ self.matrix @ v.conj().T / n_nodes,
        )


def fourier_coefficients(values: np.ndarray, n_modes: int) -> np.ndarray:
    """Coefficients c_m, |m| <= n_modes, of nodal values on equispaced nodes."""
    n = values.shape[0]
    c = np.fft.fft(values, axis=0) / n
    idx = np.concatenate([np.arange(-n_modes, 0) % n, np.arange(0, n_modes + 1)])
    return c[idx]


def fourier_synthesis(coeffs: np.ndarray, n_nodes: int) -> np.ndarray:
    m = (coeffs.shape[0] - 1) // 2
    theta = 2 * np.pi * np.arange(n_nodes) / n_nodes
    return np.exp(1j * np.outer(theta, np.arange(-m, m + 1))) @ coeffs


def dtn_assemble(
    geom: Geometry2,
    n_modes: int = DEFAULT_MODES,
    n_nodes: int = DEFAULT_NODES,
    system: BemSystem | None = None,
) -> DtnOperator:
    """Fourier-basis DtN matrix.  The empty-cavity unit disk is analytic:
    diag(|n|), assembled without any solve."""
    modes = np.arange(-n_modes, n_modes + 1)
    if not geom.cavities and isinstance(geom.outer, Circle) and geom.outer.r == 1.0 \
            and (geom.outer.cx, geom.outer.cy) == (0.0, 0.0):
        return DtnOperator("fourier", n_modes, np.diag(np.abs(modes)).astype(complex))
    system = system or assemble_system(geom, n_nodes, n_nodes)
    theta = system.outer.t
    f = np.exp(1j * np.outer(theta, modes))
    sol = system.solve(f)
    g = sol.neumann_outer()
    return DtnOperator("fourier", n_modes, fourier_coefficients(g, n_modes))


def energy_gap(lam0: DtnOperator, lam_d: DtnOperator, f_coeffs: np.ndarray) -> complex:
    """The boundary pairing int_dOmega {(Lam0 - LamD) conj(f)} f dS for traces
    on the unit circle, written exactly as stated (operator applied to the
    conjugate trace)."""
    if lam0.basis != lam_d.basis or lam0.order != lam_d.order:
        raise BasisMismatchError("operators do not share a basis")
    if lam0.basis != "fourier":
        raise BasisMismatchError("energy_gap expects the Fourier basis")
    gap = lam0.matrix - lam_d.matrix
    conj_coeffs = np.conj(f_coeffs[::-1])  # coefficients of conj(f)
    h = gap @ conj_coeffs
    return complex(2 * np.pi * np.sum(h * f_coeffs[::-1]))
