"""Entanglement-rate functionals, their closed-form maximization, and the
numerical audit of the interval/rearrangement bound.

The central abstraction is the admissible pair (X, Y, p): X and Y Hermitian,
Tr X = p, Tr Y = 1, 0 <= X <= Y.  The commutator functional

    lam(H; X, Y) = -i Tr(H [X, log Y])

is bounded over unit-norm H in closed form by the trace norm of i[X, log Y],
and for p <= 1/e^2 the interval decomposition of Y's spectrum certifies
lam <= 9 p ln(1/p).  Everything here measures those quantities and margins
numerically; nothing is assumed, bound violations are reported as data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import (
    PSD_TOL,
    TRACE_TOL,
    DensityMatrix,
    HermitianOperator,
    Spectrum,
    commutator,
    matrix_log_on_support,
    partial_trace_matrix,
)

IMAG_RESIDUE_TOL = 1e-8

__all__ = [
    "AdmissiblePair",
    "BipartiteState",
    "IntervalBuckets",
    "DecompositionReport",
    "BOUND_CONSTANTS",
    "BoundConstants",
    "entanglement_rate",
    "admissible_from_state",
    "lambda_functional",
    "lambda_eigenbasis",
    "maximize_over_hamiltonian",
    "extract_contraction",
    "bucket_eigenvalues",
    "proof_decomposition",
    "sie_lambda_bound",
    "sie_rate_bound",
    "sim_bound",
]


class AdmissibilityError(ValueError):
    """(X, Y, p) fails one of Tr X = p, Tr Y = 1, 0 <= X <= Y."""


class NumericalConsistencyError(RuntimeError):
    """A quantity that is real/identical by theory came out otherwise."""


@dataclass(frozen=True)
class BoundConstants:
    """Fixed registry of the bound constants; never silently changed."""

    c_sie: float = 18.0
    c_sim: float = 1.0
    beta: float = 1.9123


BOUND_CONSTANTS = BoundConstants()


@dataclass(frozen=True)
class AdmissiblePair:
    """Operators X, Y with Tr X = p, Tr Y = 1 and 0 <= X <= Y."""

    X: HermitianOperator
    Y: HermitianOperator
    p: float

    def __post_init__(self):
        if not (0.0 < self.p <= 1.0):
            raise AdmissibilityError(f"p = {self.p} outside (0, 1]")
        if self.X.dim != self.Y.dim:
            raise AdmissibilityError("X and Y dimensions differ")
        tx = float(np.trace(self.X.mat).real)
        ty = float(np.trace(self.Y.mat).real)
        if abs(tx - self.p) > TRACE_TOL:
            raise AdmissibilityError(f"Tr X = {tx}, expected p = {self.p}")
        if abs(ty - 1.0) > TRACE_TOL:
            raise AdmissibilityError(f"Tr Y = {ty}, expected 1")
        wx = np.linalg.eigvalsh(self.X.mat)
        if wx[0] < -PSD_TOL:
            raise AdmissibilityError(f"X has eigenvalue {wx[0]:.3e} < 0")
        wyx = np.linalg.eigvalsh(self.Y.mat - self.X.mat)
        if wyx[0] < -PSD_TOL:
            raise AdmissibilityError(f"Y - X has eigenvalue {wyx[0]:.3e} < 0")

    @property
    def dim(self) -> int:
        return self.X.dim

    def to_json(self) -> dict:
        return {"p": self.p, "X": self.X.to_json(), "Y": self.Y.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "AdmissiblePair":
        return cls(
            HermitianOperator.from_json(obj["X"]),
            HermitianOperator.from_json(obj["Y"]),
            float(obj["p"]),
        )


@dataclass(frozen=True)
class BipartiteState:
    """Pure state on a (x) A (x) B (x) b with explicit factor dimensions.

    The non-interacting ancillas a and b may be trivial (dimension 1).
    """

    dims: tuple[int, int, int, int]
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 4 or any(d < 1 for d in dims):
            raise ValueError(f"dims must be four positive integers, got {dims}")
        amp = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amp.size != int(np.prod(dims)):
            raise ValueError(
                f"amplitude length {amp.size} != product of dims {np.prod(dims)}"
            )
        nrm = float(np.linalg.norm(amp))
        if abs(nrm - 1.0) > 1e-12:
            raise ValueError(f"state norm {nrm} != 1")
        amp.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amp)

    def to_json(self) -> dict:
        return {
            "dims": list(self.dims),
            "re": self.amplitudes.real.tolist(),
            "im": self.amplitudes.imag.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BipartiteState":
        amp = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
        return cls(tuple(obj["dims"]), amp)


@dataclass(frozen=True)
class IntervalBuckets:
    """Grouping of Y's support eigenvalues into the intervals [p^k, p^{k-1}).

    ``index_ranges[k-1]`` is the half-open range (lo, hi] ... stored as
    [lo, hi) python-style ... of positions (in the descending-sorted support
    spectrum) whose eigenvalues fall in bucket k; empty buckets have lo == hi.
    ``weights[k-1]`` is p_k = sum of X's diagonal (in Y's eigenbasis) over
    bucket k.  Sum of weights equals Tr X.
    """

    index_ranges: list[tuple[int, int]]
    weights: np.ndarray
    p: float


@dataclass
class DecompositionReport:
    """Per-bracket values and bound margins of the sum rearrangement.

    All "values" carry the overall factor 2 of the functional, so
    ``direct_lambda`` is the plain eigenbasis evaluation 2|sum_{i<j} ...|
    and ``reassembled_total`` must match it exactly (the rearrangement is an
    identity).  ``line3_bound_aggregate`` is p ln(1/p) over all
    single-interval brackets taken together; the per-bracket entries carry
    the alternative accounting p_k ln(1/p) each.
    """

    line1_brackets: list[tuple[float, float]]
    line3_brackets: list[tuple[float, float]]
    line3_bound_aggregate: float
    separated_sum: tuple[float, float]
    reassembled_total: float
    direct_lambda: float
    total_bound: float
    margins: np.ndarray = field(default_factory=lambda: np.zeros(0))
    p: float = 0.0
    dim: int = 0

    def all_bounds_hold(self, rtol: float = 1e-9) -> bool:
        """True when every per-bracket and aggregate bound holds."""
        slack = rtol * max(1.0, self.total_bound)
        for v, b in self.line1_brackets:
            if v > b + slack:
                return False
        if sum(v for v, _ in self.line3_brackets) > self.line3_bound_aggregate + slack:
            return False
        if self.separated_sum[0] > self.separated_sum[1] + slack:
            return False
        return self.direct_lambda <= self.total_bound + slack

    def to_json(self) -> dict:
        return {
            "brackets_line1": [[v, b] for v, b in self.line1_brackets],
            "brackets_line3": [[v, b] for v, b in self.line3_brackets],
            "separated": list(self.separated_sum),
            "total": self.reassembled_total,
            "direct": self.direct_lambda,
            "margins": self.margins.tolist(),
            "p": self.p,
            "dim": self.dim,
        }


# ---------------------------------------------------------------------------
# bound functions


def sie_lambda_bound(p: float) -> float:
    """9 p ln(1/p), valid for 0 < p <= 1/e^2."""
    if not (0.0 < p <= np.exp(-2.0)):
        raise ValueError(f"p = {p} outside (0, 1/e^2]")
    return 9.0 * p * np.log(1.0 / p)


def sie_rate_bound(d: int, H_norm: float) -> float:
    """18 ||H|| ln d: rate ceiling in terms of the smaller interacting dimension."""
    if d < 1:
        raise ValueError(f"d = {d} must be >= 1")
    if H_norm < 0:
        raise ValueError(f"H_norm = {H_norm} must be >= 0")
    return BOUND_CONSTANTS.c_sie * H_norm * np.log(d)


def sim_bound(p: float) -> float:
    """Binary entropy -p ln p - (1-p) ln(1-p), the conjectured sharp envelope."""
    if not (0.0 < p < 1.0):
        raise ValueError(f"p = {p} outside (0, 1)")
    return float(-p * np.log(p) - (1.0 - p) * np.log(1.0 - p))


# ---------------------------------------------------------------------------
# functionals


def _real_with_check(z: complex, context: str) -> float:
    if abs(z.imag) > IMAG_RESIDUE_TOL:
        raise NumericalConsistencyError(
            f"{context}: imaginary residue {z.imag:.3e} exceeds {IMAG_RESIDUE_TOL}"
        )
    return float(z.real)


def entanglement_rate(state: BipartiteState, H_AB: HermitianOperator) -> float:
    """Instantaneous growth rate of the aA|Bb entanglement entropy.

    Evaluates -i Tr(H~ [rho_{aA,B}, log rho_aA (x) I_B]) with
    H~ = I_a (x) H_AB and the b factor traced out first.  The log is taken
    on the support of rho_aA; the result is real up to a checked residue.
    """
    d_a, d_A, d_B, d_b = state.dims
    if H_AB.dim != d_A * d_B:
        raise ValueError(f"H_AB dim {H_AB.dim} != d_A*d_B = {d_A * d_B}")
    rho_full = np.outer(state.amplitudes, state.amplitudes.conj())
    rho_aAB = partial_trace_matrix(rho_full, [d_a, d_A, d_B, d_b], [0, 1, 2])
    rho_aA = partial_trace_matrix(rho_aAB, [d_a * d_A, d_B], [0])
    logr = matrix_log_on_support(HermitianOperator(rho_aA)).mat
    L = np.kron(logr, np.eye(d_B))
    Ht = np.kron(np.eye(d_a), H_AB.mat)
    val = -1j * np.trace(Ht @ commutator(rho_aAB, L))
    return _real_with_check(complex(val), "entanglement_rate")


def admissible_from_state(rho_AB: DensityMatrix, d_A: int, d_B: int) -> AdmissiblePair:
    """Map a bipartite density matrix to its admissible pair.

    X = rho_AB / d_B^2, Y = rho_A (x) I_B / d_B, p = 1/d_B^2.  Admissibility
    encodes the operator inequality rho_AB <= d_B rho_A (x) I_B; a failure
    here would falsify that inequality and raises.
    """
    if rho_AB.dim != d_A * d_B:
        raise ValueError(f"rho dim {rho_AB.dim} != d_A*d_B = {d_A * d_B}")
    rho_A = partial_trace_matrix(rho_AB.mat, [d_A, d_B], [0])
    p = 1.0 / d_B**2
    X = HermitianOperator(rho_AB.mat * p)
    Y = HermitianOperator(np.kron(rho_A, np.eye(d_B)) / d_B)
    try:
        return AdmissiblePair(X, Y, p)
    except AdmissibilityError as exc:
        raise NumericalConsistencyError(
            f"state-derived pair failed admissibility (operator inequality "
            f"rho_AB <= d_B rho_A x I_B violated numerically): {exc}"
        ) from exc


def lambda_functional(H: HermitianOperator, pair: AdmissiblePair) -> float:
    """-i Tr(H [X, log Y]) with the log taken on Y's support."""
    if H.dim != pair.dim:
        raise ValueError(f"H dim {H.dim} != pair dim {pair.dim}")
    logY = matrix_log_on_support(pair.Y).mat
    val = -1j * np.trace(H.mat @ commutator(pair.X.mat, logY))
    return _real_with_check(complex(val), "lambda_functional")


def lambda_eigenbasis(P: HermitianOperator, pair: AdmissiblePair) -> float:
    """Explicit double sum 2|sum_{i<j} ln(y_i/y_j)(X_ij P_ji - X_ji P_ij)|.

    Evaluated in the eigenbasis of Y over its support; P must satisfy
    0 <= P <= I.  Equals 2|Tr(P [X, log Y])| for the same support convention.
    """
    wp = np.linalg.eigvalsh(P.mat)
    if wp[0] < -PSD_TOL or wp[-1] > 1.0 + PSD_TOL:
        raise ValueError(f"P eigenvalues [{wp[0]:.3e}, {wp[-1]:.3e}] outside [0, 1]")
    y, Xb, Pb = _support_eigenbasis(pair, pair.X.mat, P.mat)
    logy = np.log(y)
    L = logy[:, None] - logy[None, :]  # L[i,j] = ln(y_i / y_j)
    s = np.sum(np.triu(L * (Xb * Pb.T - Xb.conj() * Pb.conj().T), k=1))
    return 2.0 * abs(_real_with_check_imagfree(s))


def _real_with_check_imagfree(z: complex) -> float:
    # sum_{i<j} c_{ij} - conj(c_{ij}) is purely imaginary; the functional
    # value is 2|Im part|, carried here as |z| after a realness sanity check
    if abs(z.real) > IMAG_RESIDUE_TOL:
        raise NumericalConsistencyError(
            f"eigenbasis sum has real residue {z.real:.3e}"
        )
    return float(z.imag)


def _support_eigenbasis(pair: AdmissiblePair, *mats: np.ndarray, support_tol: float | None = None):
    """Descending support eigenvalues of Y and the given matrices rotated
    into that basis (support block only)."""
    w, v = np.linalg.eigh(pair.Y.mat)
    w = w[::-1]
    v = v[:, ::-1]
    if support_tol is None:
        support_tol = 1e-12 * max(float(w[0]), 0.0)
    n = int(np.sum(w > support_tol))
    vs = v[:, :n]
    rotated = tuple(vs.conj().T @ m @ vs for m in mats)
    return (w[:n],) + rotated


def maximize_over_hamiltonian(pair: AdmissiblePair) -> tuple[float, HermitianOperator]:
    """Closed-form maximum of |lambda| over unit-operator-norm Hermitian H.

    The optimum is the trace norm of C = i[X, log Y] (Hermitian), attained by
    H_opt = -sign(C) from C's eigendecomposition.  When C = 0 the optimum is 0
    and H_opt = I by convention (any unit-norm H attains it).
    """
    logY = matrix_log_on_support(pair.Y).mat
    C = 1j * commutator(pair.X.mat, logY)
    C = HermitianOperator(C)
    w, v = np.linalg.eigh(C.mat)
    lam_max = float(np.sum(np.abs(w)))
    if lam_max <= 1e-15:
        return 0.0, HermitianOperator.identity(pair.dim)
    # lam(H) = -Tr(H C); maximized by H = -sign(C)
    s = -np.sign(w)
    s[s == 0] = 1.0
    H_opt = HermitianOperator((v * s) @ v.conj().T)
    return lam_max, H_opt


def extract_contraction(pair: AdmissiblePair) -> HermitianOperator:
    """Factor X = Y^{1/2} Z Y^{1/2} with 0 <= Z <= I on the support of Y.

    Uses pseudo-inverse square roots on the support; rejects X with weight
    off the support beyond tolerance (that would break admissibility).
    """
    w, v = np.linalg.eigh(pair.Y.mat)
    support_tol = 1e-12 * max(float(w[-1]), 0.0)
    on = w > support_tol
    inv_sqrt = np.zeros_like(w)
    inv_sqrt[on] = 1.0 / np.sqrt(w[on])
    Xb = v.conj().T @ pair.X.mat @ v
    # off-support block of X must vanish: 0 <= X <= Y forces supp(X) in supp(Y)
    if (~on).any():
        off_norm = float(np.max(np.abs(Xb[~on, :])))
        if off_norm > 1e-9:
            raise AdmissibilityError(
                f"X has weight {off_norm:.3e} outside the support of Y"
            )
    Zb = (inv_sqrt[:, None] * Xb) * inv_sqrt[None, :]
    Z = (v @ Zb) @ v.conj().T
    return HermitianOperator(Z)


# ---------------------------------------------------------------------------
# interval decomposition


def _bucket_index(y: float, p: float) -> int:
    """Bucket k with p^k <= y < p^{k-1}; y >= 1 maps to bucket 1, exact
    boundary y = p^k to bucket k (closed lower bound)."""
    if y >= 1.0:
        return 1
    k = max(1, int(np.ceil(np.log(y) / np.log(p) - 1e-12)))
    while y < p**k * (1.0 - 1e-15):
        k += 1
    while k > 1 and y >= p ** (k - 1):
        k -= 1
    return k


def bucket_eigenvalues(spectrum, X: HermitianOperator, p: float) -> IntervalBuckets:
    """Group Y's support eigenvalues into the intervals [p^k, p^{k-1}).

    ``spectrum`` is the descending support Spectrum of Y (zero modes removed).
    Weights are p_k = sum over bucket k of X's diagonal in Y's eigenbasis;
    they add up to Tr X.
    """
    if not (0.0 < p <= 0.5):
        raise ValueError(f"p = {p} outside (0, 1/2]")
    y = np.asarray(spectrum.eigenvalues, dtype=float)
    if y.size and y[-1] <= 0:
        raise ValueError("spectrum must be restricted to the support (all y > 0)")
    v = np.asarray(spectrum.eigenvectors, dtype=complex)
    xdiag = np.einsum("ij,jk,ki->i", v.conj().T, X.mat, v).real
    ks = [_bucket_index(float(val), p) for val in y]
    k_max = max(ks) if ks else 1
    ranges: list[tuple[int, int]] = []
    weights = np.zeros(k_max)
    pos = 0
    for k in range(1, k_max + 1):
        lo = pos
        while pos < len(ks) and ks[pos] == k:
            pos += 1
        ranges.append((lo, pos))
        weights[k - 1] = float(np.sum(xdiag[lo:pos]))
    if pos != len(ks):
        raise NumericalConsistencyError("bucket assignment not monotone in k")
    return IntervalBuckets(ranges, weights, p)


def proof_decomposition(pair: AdmissiblePair, P: HermitianOperator) -> DecompositionReport:
    """Audit the rearrangement of the eigenbasis double sum bucket by bucket.

    Splits sum_{i<j} into consecutive-two-interval brackets, subtracted
    single-interval brackets, and the separated-pairs remainder, evaluates
    each alongside its bound (2(p_k+p_{k+1}) ln(1/p) per line-one bracket,
    p ln(1/p) aggregate for line three, 4p ln(1/p) for the separated sum),
    and checks that the signed reassembly reproduces the direct value, which
    it must: the rearrangement is an exact identity.

    Requires p <= 1/e^2 (the regime of the separated-sum bound).
    """
    if pair.p > np.exp(-2.0) + 1e-15:
        raise ValueError(f"p = {pair.p} > 1/e^2; decomposition bound regime violated")
    wp = np.linalg.eigvalsh(P.mat)
    if wp[0] < -PSD_TOL or wp[-1] > 1.0 + PSD_TOL:
        raise ValueError(f"P eigenvalues [{wp[0]:.3e}, {wp[-1]:.3e}] outside [0, 1]")
    p = pair.p
    y, Xb, Pb = _support_eigenbasis(pair, pair.X.mat, P.mat)
    logy = np.log(y)
    L = logy[:, None] - logy[None, :]
    # signed term matrix: t[i,j] contributes for i<j; total = sum_{i<j} t[i,j]
    T = L * (Xb * Pb.T - Xb.conj() * Pb.conj().T)
    iu = np.triu(np.ones_like(L, dtype=bool), k=1)

    def part(rows: slice, cols: slice) -> complex:
        mask = np.zeros_like(iu)
        mask[rows, cols] = True
        mask &= iu
        return complex(np.sum(T[mask]))

    ln1p = np.log(1.0 / p)
    w_full, v_full = np.linalg.eigh(pair.Y.mat)
    w_full = w_full[::-1]
    v_full = v_full[:, ::-1]
    n = y.size
    support_spec = Spectrum(w_full[:n].copy(), v_full[:, :n].copy())
    buckets = bucket_eigenvalues(support_spec, pair.X, p)
    ranges = buckets.index_ranges
    pk = buckets.weights
    K = len(ranges)

    line1: list[tuple[float, float]] = []
    line1_signed = 0.0 + 0.0j
    if K == 1:
        lo, hi = ranges[0]
        val = part(slice(lo, hi), slice(lo, hi))
        line1.append((2.0 * abs(val), 2.0 * pk[0] * ln1p))
        line1_signed += val
    else:
        for k in range(K - 1):
            lo = ranges[k][0]
            hi = ranges[k + 1][1]
            val = part(slice(lo, hi), slice(lo, hi))
            line1.append((2.0 * abs(val), 2.0 * (pk[k] + pk[k + 1]) * ln1p))
            line1_signed += val

    line3: list[tuple[float, float]] = []
    line3_signed = 0.0 + 0.0j
    for k in range(1, K - 1):
        lo, hi = ranges[k]
        val = part(slice(lo, hi), slice(lo, hi))
        line3.append((2.0 * abs(val), pk[k] * ln1p))
        line3_signed += val

    sep_signed = 0.0 + 0.0j
    for k in range(K):
        for m in range(k + 2, K):
            sep_signed += part(slice(*ranges[k]), slice(*ranges[m]))
    sep = (2.0 * abs(sep_signed), 4.0 * p * ln1p)

    direct_signed = complex(np.sum(T[iu]))
    reassembled_signed = line1_signed - line3_signed + sep_signed
    direct = 2.0 * abs(_imag_of(direct_signed))
    reassembled = 2.0 * abs(_imag_of(reassembled_signed))
    if abs(reassembled_signed - direct_signed) > 1e-9 * max(1.0, abs(direct_signed)):
        raise NumericalConsistencyError(
            f"rearrangement identity failed: |{reassembled_signed} - {direct_signed}|"
        )

    total_bound = 9.0 * p * ln1p
    line3_total = sum(v for v, _ in line3)
    margins = np.array(
        [b - v for v, b in line1]
        + [p * ln1p - line3_total]
        + [sep[1] - sep[0]]
        + [total_bound - direct]
    )
    return DecompositionReport(
        line1_brackets=line1,
        line3_brackets=line3,
        line3_bound_aggregate=p * ln1p,
        separated_sum=sep,
        reassembled_total=reassembled,
        direct_lambda=direct,
        total_bound=total_bound,
        margins=margins,
        p=p,
        dim=pair.dim,
    )


def _imag_of(z: complex) -> float:
    if abs(z.real) > IMAG_RESIDUE_TOL:
        raise NumericalConsistencyError(f"real residue {z.real:.3e} in signed sum")
    return z.imag
