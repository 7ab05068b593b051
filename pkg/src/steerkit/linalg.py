"""Dense complex linear algebra primitives with an explicit tolerance policy.

All operators in the package are plain ``numpy.ndarray`` objects of dtype
``complex128`` in row-major order; the helpers here validate them and
implement the handful of spectral operations everything else is built on.
Equality is always judged entrywise in max-abs norm, and positivity by the
minimum eigenvalue, so that violations come with a quantitative magnitude.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, NotHermitianError, NotPsdError, ValidationError

# Eigenvalues closer than this are treated as one degenerate cluster when
# canonicalizing eigenbases.
DEGENERACY_GAP = 1e-8


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical tolerances used by validators and spectral helpers.

    Attributes
    ----------
    hermiticity_tol : max-abs deviation from ``M == M^dag`` accepted as Hermitian.
    psd_tol : minimum admissible eigenvalue is ``-psd_tol``.
    equality_tol : max-abs entrywise tolerance for equality assertions.
    support_tol : eigenvalues at or below this count as kernel.
    """

    hermiticity_tol: float = 1e-9
    psd_tol: float = 1e-9
    equality_tol: float = 1e-10
    support_tol: float = 1e-10

    def __post_init__(self):
        for name in ("hermiticity_tol", "psd_tol", "equality_tol", "support_tol"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be strictly positive")


DEFAULT_TOLERANCES = ToleranceConfig()


def as_complex_matrix(a, *, square: bool = False) -> np.ndarray:
    """Validate and return ``a`` as a 2-D finite complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValidationError("matrix has non-finite entries")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    return m


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return m.conj().T


def max_abs(m: np.ndarray) -> float:
    """Max-abs entry, the package-wide deviation measure."""
    return float(np.max(np.abs(m))) if m.size else 0.0


def max_abs_diff(a: np.ndarray, b: np.ndarray) -> float:
    """Max-abs entrywise difference."""
    return max_abs(np.asarray(a) - np.asarray(b))


def hermitian_deviation(m: np.ndarray) -> float:
    """Max-abs deviation of ``m`` from its Hermitian part."""
    return max_abs(m - dagger(m))


def assert_hermitian(m: np.ndarray, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """Return the symmetrized matrix, raising if ``m`` is not Hermitian within tolerance."""
    dev = hermitian_deviation(m)
    if dev > cfg.hermiticity_tol:
        raise NotHermitianError(dev, cfg.hermiticity_tol)
    return (m + dagger(m)) / 2


def min_eigenvalue(m: np.ndarray) -> float:
    """Smallest eigenvalue of a (symmetrized) Hermitian matrix."""
    return float(np.linalg.eigvalsh((m + dagger(m)) / 2)[0])


def assert_psd(
    m: np.ndarray, cfg: ToleranceConfig = DEFAULT_TOLERANCES, context: str = "matrix"
) -> np.ndarray:
    """Assert ``m`` Hermitian and PSD within tolerance; return its Hermitian part."""
    h = assert_hermitian(m, cfg)
    lo = min_eigenvalue(h)
    if lo < -cfg.psd_tol:
        raise NotPsdError(lo, cfg.psd_tol, context)
    return h


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product ``a (x) b``."""
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def partial_trace(m: np.ndarray, dims: tuple[int, int], keep: str) -> np.ndarray:
    """Trace out one tensor factor of a square matrix on ``dims[0] * dims[1]``.

    Parameters
    ----------
    m : square matrix on the composite space ``A (x) B``.
    dims : ``(d_A, d_B)``.
    keep : ``"A"`` or ``"B"``, the factor to keep.

    Returns
    -------
    The reduced matrix on the kept factor; the trace is preserved.
    """
    d_a, d_b = dims
    m = as_complex_matrix(m, square=True)
    if m.shape[0] != d_a * d_b:
        raise DimensionMismatchError(
            f"matrix dimension {m.shape[0]} does not factor as {d_a}*{d_b}"
        )
    t = m.reshape(d_a, d_b, d_a, d_b)
    if keep in ("B", "b", 1):
        return np.trace(t, axis1=0, axis2=2)
    if keep in ("A", "a", 0):
        return np.trace(t, axis1=1, axis2=3)
    raise ValidationError(f"keep must be 'A' or 'B', got {keep!r}")


def _cluster_degenerate(values: np.ndarray) -> list[slice]:
    """Slices of consecutive (descending) eigenvalues closer than DEGENERACY_GAP."""
    slices = []
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i - 1] - values[i] > DEGENERACY_GAP:
            slices.append(slice(start, i))
            start = i
    return slices


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude component is real positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        k = int(np.argmax(np.abs(col)))
        pivot = col[k]
        if abs(pivot) > 0:
            out[:, j] = col * (np.conj(pivot) / abs(pivot))
    return out


def eig_hermitian(
    m: np.ndarray, cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix with a deterministic basis.

    Returns eigenvalues sorted descending and orthonormal eigenvectors as
    columns. Within each degenerate cluster (gap below ``DEGENERACY_GAP``)
    the basis is re-derived from the cluster projector by Gram-Schmidt over
    the computational basis in index order, and every column is phase-fixed
    so its largest-magnitude component is real positive. The output therefore
    depends only on the matrix, not on LAPACK's arbitrary choices.
    """
    h = assert_hermitian(m, cfg)
    vals, vecs = np.linalg.eigh(h)
    vals, vecs = vals[::-1].copy(), vecs[:, ::-1].copy()
    d = h.shape[0]
    for cluster in _cluster_degenerate(vals):
        if cluster.stop - cluster.start <= 1:
            continue
        block = vecs[:, cluster]
        proj = block @ dagger(block)
        basis: list[np.ndarray] = []
        for i in range(d):
            cand = proj @ np.eye(d, dtype=np.complex128)[:, i]
            for prev in basis:
                cand = cand - prev * (np.vdot(prev, cand))
            norm = np.linalg.norm(cand)
            if norm > 1e-6:
                basis.append(cand / norm)
            if len(basis) == cluster.stop - cluster.start:
                break
        vecs[:, cluster] = np.column_stack(basis)
    return vals, _fix_phases(vecs)


def _spectral_map(m: np.ndarray, fn, cfg: ToleranceConfig) -> np.ndarray:
    vals, vecs = eig_hermitian(m, cfg)
    mapped = (vecs * fn(vals)) @ dagger(vecs)
    return (mapped + dagger(mapped)) / 2


def sqrt_psd(m: np.ndarray, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """Hermitian PSD square root; negative eigenvalues are clamped to zero.

    Raises ``NotHermitianError`` / ``NotPsdError`` when ``m`` violates the
    tolerances, so silent clamping only ever absorbs round-off below
    ``psd_tol``.
    """
    assert_psd(m, cfg)
    return _spectral_map(m, lambda w: np.sqrt(np.clip(w, 0.0, None)), cfg)


def pinv_sqrt_on_support(m: np.ndarray, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """Moore-Penrose inverse square root: ``w -> w**-0.5`` on the support, 0 on the kernel."""
    assert_psd(m, cfg)
    return _spectral_map(
        m, lambda w: np.where(w > cfg.support_tol, 1.0 / np.sqrt(np.clip(w, cfg.support_tol, None)), 0.0), cfg
    )


def support_projector(m: np.ndarray, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """Projector onto the span of eigenvectors with eigenvalue above ``support_tol``."""
    assert_psd(m, cfg)
    return _spectral_map(m, lambda w: (w > cfg.support_tol).astype(float), cfg)


def transpose_in_basis(m: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Transpose ``m`` in the given orthonormal basis (columns).

    The coefficient matrix ``U^dag m U`` is transposed and mapped back, so the
    operation is involutive and reduces to the plain transpose when ``basis``
    is the identity.
    """
    m = as_complex_matrix(m, square=True)
    u = as_complex_matrix(basis)
    if u.shape != m.shape:
        raise DimensionMismatchError(f"basis shape {u.shape} does not match matrix {m.shape}")
    ortho_dev = max_abs_diff(dagger(u) @ u, np.eye(u.shape[1]))
    if ortho_dev > 1e-8:
        raise ValidationError(f"basis columns are not orthonormal (deviation {ortho_dev:.3e})")
    return u @ (dagger(u) @ m @ u).T @ dagger(u)
