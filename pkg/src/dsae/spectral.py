"""Magnetic Laplacian, Hermitian eigendecomposition and heat kernels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import DirectedGraph

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class MagneticLaplacian:
    matrix: np.ndarray
    q: float
    normalized: bool


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs of a Hermitian PSD matrix, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def apply_filter(self, response: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Compute ``U diag(response) U^* x`` without forming the matrix."""
        U = self.eigenvectors
        coeffs = U.conj().T @ x
        if coeffs.ndim == 1:
            return U @ (response * coeffs)
        return U @ (response[:, None] * coeffs)

    def filter_matrix(self, response: np.ndarray) -> np.ndarray:
        U = self.eigenvectors
        return (U * response) @ U.conj().T

    def to_csv(self, path) -> None:
        """Debug dump: one row per eigenpair, ``lambda, re(u_0), im(u_0), ...``."""
        U = self.eigenvectors
        header = ["eigenvalue"] + [f"{part}_{i}" for i in range(self.n) for part in ("re", "im")]
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for k, lam in enumerate(self.eigenvalues):
                vals = [repr(float(lam))]
                for z in U[:, k]:
                    vals += [repr(float(z.real)), repr(float(z.imag))]
                fh.write(",".join(vals) + "\n")


@dataclass(frozen=True)
class HeatKernel:
    matrix: np.ndarray
    t: float


def magnetic_laplacian(g: DirectedGraph, q: float, normalized: bool = True) -> MagneticLaplacian:
    """Build ``L_U = D_s - A_s * exp(i 2 pi q (A - A^T))`` or its normalized form.

    ``A_s`` is the symmetrized adjacency and ``D_s`` its degree matrix. The
    normalized variant is ``D_s^{-1/2} L_U D_s^{-1/2}``, with zero-degree
    vertices contributing a zero row and column.
    """
    if q < 0:
        raise ValueError(f"charge q must be nonnegative, got {q}")
    if g.n_vertices == 0:
        raise ValueError("empty graph")
    A = g.adjacency()
    A_sym = 0.5 * (A + A.T)
    theta = 2.0 * np.pi * q * (A - A.T)
    H = A_sym * np.exp(1j * theta)
    deg = A_sym.sum(axis=1)
    L = np.diag(deg).astype(complex) - H
    if normalized:
        with np.errstate(divide="ignore"):
            d_inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(deg), 0.0)
        L = d_inv_sqrt[:, None] * L * d_inv_sqrt[None, :]
    # exact Hermitian symmetry (removes exp() rounding asymmetry)
    L = 0.5 * (L + L.conj().T)
    return MagneticLaplacian(L, float(q), bool(normalized))


def _fix_phase(U: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-modulus entry is real positive.

    Near-ties in modulus are resolved toward the lowest row index.
    """
    mod = np.abs(U)
    top = mod.max(axis=0)
    idx = np.argmax(mod >= top * (1 - 1e-10), axis=0)
    pivots = U[idx, np.arange(U.shape[1])]
    return U * (np.abs(pivots) / pivots)[None, :]


def eig_hermitian(L) -> SpectralDecomposition:
    """Full eigendecomposition of a Hermitian PSD matrix.

    Round-off negative eigenvalues are clamped to zero and eigenvector phases
    are fixed for determinism (see :func:`_fix_phase`).
    """
    M = L.matrix if isinstance(L, MagneticLaplacian) else np.asarray(L)
    M = M.astype(complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    if np.max(np.abs(M - M.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise ValueError("matrix is not Hermitian")
    lam, U = np.linalg.eigh(M)
    lam = np.maximum(lam, 0.0)
    return SpectralDecomposition(lam, _fix_phase(U))


def heat_kernel(dec: SpectralDecomposition, t: float) -> HeatKernel:
    """``H_t = sum_k exp(-lambda_k t) u_k u_k^*``."""
    if t < 0:
        raise ValueError(f"diffusion time must be nonnegative, got {t}")
    return HeatKernel(dec.filter_matrix(np.exp(-dec.eigenvalues * t)), float(t))
