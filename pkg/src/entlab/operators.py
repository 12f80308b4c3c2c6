"""Dense Hermitian linear algebra primitives.

Everything downstream (rate functionals, searches, spin chains) goes through
the small set of operations here: certified Hermitian/PSD containers,
eigendecomposition, matrix log restricted to the support, partial trace,
Schatten norms and the von Neumann entropy.  All logs are natural logs;
entropies are reported in nats.

Operations are pure functions of their inputs and hold no shared state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-10

__all__ = [
    "HERMITICITY_TOL",
    "PSD_TOL",
    "TRACE_TOL",
    "HermitianOperator",
    "DensityMatrix",
    "Spectrum",
    "hermitian_spectrum",
    "matrix_log_on_support",
    "partial_trace",
    "partial_trace_matrix",
    "trace_norm",
    "von_neumann_entropy",
    "operator_norm",
    "commutator",
]


class NonHermitianError(ValueError):
    """Input matrix deviates from M = M^dag beyond tolerance."""


class NotPositiveError(ValueError):
    """Matrix expected to be positive semidefinite has a negative eigenvalue."""


@dataclass(frozen=True)
class HermitianOperator:
    """Dense complex Hermitian matrix with certified Hermiticity.

    The constructor symmetrizes ``(M + M^dag)/2`` after checking that the
    deviation from Hermiticity is below ``HERMITICITY_TOL`` (max elementwise),
    so ``mat`` is exactly Hermitian in storage.
    """

    mat: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
        scale = max(1.0, float(np.max(np.abs(m))))
        if dev > HERMITICITY_TOL * scale:
            raise NonHermitianError(
                f"matrix is not Hermitian: max |M - M^dag| = {dev:.3e}"
            )
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def to_json(self) -> dict:
        """Serialize as {"dim": n, "re": [[...]], "im": [[...]]}, row-major."""
        return {
            "dim": self.dim,
            "re": self.mat.real.tolist(),
            "im": self.mat.imag.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "HermitianOperator":
        n = int(obj["dim"])
        m = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
        if m.shape != (n, n):
            raise ValueError(f"dim field {n} inconsistent with matrix shape {m.shape}")
        return cls(m)

    @classmethod
    def identity(cls, dim: int) -> "HermitianOperator":
        return cls(np.eye(dim, dtype=complex))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, PSD (within PSD_TOL), unit-trace operator."""

    op: HermitianOperator

    def __post_init__(self):
        ev = np.linalg.eigvalsh(self.op.mat)
        if ev[0] < -PSD_TOL:
            raise NotPositiveError(f"density matrix has eigenvalue {ev[0]:.3e}")
        tr = float(np.trace(self.op.mat).real)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr} != 1")

    @property
    def mat(self) -> np.ndarray:
        return self.op.mat

    @property
    def dim(self) -> int:
        return self.op.dim

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "DensityMatrix":
        return cls(HermitianOperator(m))

    @classmethod
    def from_pure(cls, psi: np.ndarray) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).ravel()
        return cls(HermitianOperator(np.outer(psi, psi.conj())))


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in descending order with the matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if np.any(np.diff(ev) > 0):
            raise ValueError("eigenvalues must be sorted descending")
        object.__setattr__(self, "eigenvalues", ev)
        object.__setattr__(self, "eigenvectors", np.asarray(self.eigenvectors, dtype=complex))


def hermitian_spectrum(M: HermitianOperator) -> Spectrum:
    """Full eigendecomposition, eigenvalues descending.

    Deterministic up to eigenvector phase and the gauge freedom inside
    degenerate subspaces (neither is observable in any quantity computed
    from the spectrum downstream).
    """
    w, v = np.linalg.eigh(M.mat)
    return Spectrum(w[::-1].copy(), v[:, ::-1].copy())


def matrix_log_on_support(Y: HermitianOperator, support_tol: float | None = None) -> HermitianOperator:
    """Natural matrix log restricted to the support of a PSD operator.

    Eigenvalues above ``support_tol`` map to their log; eigenvalues at or
    below it map to 0.  Default cutoff: 1e-12 times the largest eigenvalue.
    """
    w, v = np.linalg.eigh(Y.mat)
    if w[0] < -PSD_TOL:
        raise NotPositiveError(f"operator has eigenvalue {w[0]:.3e}, not PSD")
    if support_tol is None:
        support_tol = 1e-12 * max(float(w[-1]), 0.0)
    elif support_tol <= 0:
        raise ValueError("support_tol must be positive")
    f = np.zeros_like(w)
    on = w > support_tol
    f[on] = np.log(w[on])
    return HermitianOperator((v * f) @ v.conj().T)


def partial_trace(rho: DensityMatrix, dims: list[int], keep: list[int]) -> DensityMatrix:
    """Trace out the tensor factors not listed in ``keep``.

    ``dims`` are the factor dimensions in tensor order; their product must
    equal the dimension of ``rho``.  ``keep`` is a nonempty strict subset of
    factor indices; factor order among the kept indices is preserved.
    """
    m = partial_trace_matrix(rho.mat, dims, keep)
    return DensityMatrix.from_matrix(m)


def partial_trace_matrix(mat: np.ndarray, dims: list[int], keep: list[int]) -> np.ndarray:
    """Partial trace on a raw square matrix (not necessarily unit trace)."""
    dims = [int(d) for d in dims]
    n = len(dims)
    if int(np.prod(dims)) != mat.shape[0]:
        raise ValueError(f"product of dims {dims} != matrix dimension {mat.shape[0]}")
    keep = sorted(set(int(k) for k in keep))
    if not keep or len(keep) >= n or any(k < 0 or k >= n for k in keep):
        raise ValueError(f"keep={keep} must be a nonempty strict subset of 0..{n-1}")
    t = mat.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    for off, i in enumerate(traced):
        ax = i - off
        t = np.trace(t, axis1=ax, axis2=ax + t.ndim // 2)
    d_keep = int(np.prod([dims[k] for k in keep]))
    return t.reshape(d_keep, d_keep)


def trace_norm(M: HermitianOperator) -> float:
    """Schatten-1 norm: sum of absolute eigenvalues."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(M.mat))))


def operator_norm(M: HermitianOperator) -> float:
    """Schatten-inf norm: largest absolute eigenvalue."""
    w = np.linalg.eigvalsh(M.mat)
    return float(max(abs(w[0]), abs(w[-1])))


def von_neumann_entropy(rho: DensityMatrix, support_tol: float | None = None) -> float:
    """-sum lambda ln(lambda) over eigenvalues above the support cutoff; nats."""
    w = np.linalg.eigvalsh(rho.mat)
    if support_tol is None:
        support_tol = 1e-12 * max(float(w[-1]), 0.0)
    lam = w[w > support_tol]
    return float(-np.sum(lam * np.log(lam)))


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A
