"""Heat-kernel wavelet frame and directed scattering coefficients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import DirectedGraph
from .spectral import SpectralDecomposition, eig_hermitian, magnetic_laplacian


def _heat(lam: np.ndarray, t: float) -> np.ndarray:
    return np.exp(-lam * t)


@dataclass(frozen=True)
class WaveletFrame:
    """Diffusion wavelets ``W_0 = I - H_1``, ``W_j = H_{2^(j-1)} - H_{2^j}``,
    low-pass ``A_J = H_{2^J}`` and smoother ``H_1``, all diagonal in the
    eigenbasis of ``dec``.
    """

    dec: SpectralDecomposition
    J: int

    def wavelet_response(self, j: int) -> np.ndarray:
        lam = self.dec.eigenvalues
        if j == 0:
            return 1.0 - _heat(lam, 1.0)
        return _heat(lam, 2.0 ** (j - 1)) - _heat(lam, 2.0 ** j)

    def lowpass_response(self) -> np.ndarray:
        return _heat(self.dec.eigenvalues, 2.0 ** self.J)

    def smoother_response(self) -> np.ndarray:
        return _heat(self.dec.eigenvalues, 1.0)

    @property
    def wavelets(self) -> list[np.ndarray]:
        return [self.dec.filter_matrix(self.wavelet_response(j)) for j in range(self.J + 1)]

    @property
    def lowpass(self) -> np.ndarray:
        return self.dec.filter_matrix(self.lowpass_response())

    @property
    def smoother(self) -> np.ndarray:
        return self.dec.filter_matrix(self.smoother_response())


def build_frame(dec: SpectralDecomposition, J: int) -> WaveletFrame:
    if J < 0:
        raise ValueError(f"max scale J must be >= 0, got {J}")
    return WaveletFrame(dec, int(J))


def gaussian_signal(n: int, c: int = 1, seed: int = 0) -> np.ndarray:
    """``n x c`` i.i.d. standard normal signals.

    Drawn with ``numpy.random.default_rng(seed).standard_normal`` (PCG64 bit
    generator, ziggurat normals), which numpy keeps stable across platforms.
    """
    if n < 1:
        raise ValueError("need at least one vertex")
    return np.random.default_rng(seed).standard_normal((n, c))


def n_features(J: int, C: int = 1) -> int:
    return C * (1 + (J + 1) + (J + 1) * (J + 2) // 2)


@dataclass(frozen=True)
class ScatteringFeatures:
    """Per-vertex scattering coefficients, ``N x F``, with column metadata.

    ``index[k]`` is ``(order, j1, j2, signal)`` with ``-1`` for unused scales.
    """

    matrix: np.ndarray
    index: tuple[tuple[int, int, int, int], ...]

    @property
    def column_names(self) -> list[str]:
        names = []
        for order, j1, j2, sig in self.index:
            if order == 0:
                names.append(f"s0_sig{sig}")
            elif order == 1:
                names.append(f"s1_j{j1}_sig{sig}")
            else:
                names.append(f"s2_j{j1}_j{j2}_sig{sig}")
        return names

    def to_csv(self, path, vertex_names=None) -> None:
        with open(path, "w") as fh:
            fh.write(",".join(["vertex"] + self.column_names) + "\n")
            for i, row in enumerate(self.matrix):
                name = vertex_names[i] if vertex_names is not None else str(i)
                fh.write(",".join([name] + [repr(float(x)) for x in row]) + "\n")


def scatter(frame: WaveletFrame, signals: np.ndarray) -> ScatteringFeatures:
    """Zeroth-, first- and second-order directed scattering coefficients.

    For each signal ``x``: ``|H_1 x|``, ``|H_1 |W_j1 x||`` for every scale, and
    ``|H_1 |W_j2 |W_j1 x|||`` for ``j1 <= j2``. Columns are grouped by signal,
    then by order.
    """
    X = np.asarray(signals, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    dec = frame.dec
    if X.shape[0] != dec.n:
        raise ValueError(f"signal has {X.shape[0]} rows, graph has {dec.n} vertices")
    J = frame.J
    smooth = frame.smoother_response()
    wav = [frame.wavelet_response(j) for j in range(J + 1)]

    cols = []
    index = []
    for c in range(X.shape[1]):
        x = X[:, c]
        cols.append(np.abs(dec.apply_filter(smooth, x)))
        index.append((0, -1, -1, c))
        U1 = np.stack([np.abs(dec.apply_filter(w, x)) for w in wav], axis=1)
        S1 = np.abs(dec.apply_filter(smooth, U1))
        for j1 in range(J + 1):
            cols.append(S1[:, j1])
            index.append((1, j1, -1, c))
        for j1 in range(J + 1):
            # all j2 >= j1 at once
            U2 = np.stack([np.abs(dec.apply_filter(wav[j2], U1[:, j1])) for j2 in range(j1, J + 1)],
                          axis=1)
            S2 = np.abs(dec.apply_filter(smooth, U2))
            for k, j2 in enumerate(range(j1, J + 1)):
                cols.append(S2[:, k])
                index.append((2, j1, j2, c))
    return ScatteringFeatures(np.stack(cols, axis=1), tuple(index))


def scattering_features(g: DirectedGraph, q: float, J: int, C: int = 1, seed: int = 0,
                        normalized: bool = True, signals: np.ndarray | None = None
                        ) -> ScatteringFeatures:
    """Graph -> magnetic Laplacian -> frame -> scattering of Gaussian signals."""
    dec = eig_hermitian(magnetic_laplacian(g, q, normalized))
    if signals is None:
        signals = gaussian_signal(g.n_vertices, C, seed)
    return scatter(build_frame(dec, J), signals)
