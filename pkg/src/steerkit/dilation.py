"""Minimal Stinespring dilations and the dummy-POVM correspondence.

A channel ``L(rho) = sum_k K_k rho K_k^dag`` dilates to an isometry
``V|psi> = sum_k |phi_k> (x) K_k|psi>`` into dummy (x) output, with
``L(rho) = tr_dummy[V rho V^dag]``. When the Kraus family is linearly
independent the dummy dimension equals the Choi rank and is minimal; a
non-signalling instrument set with that total channel is then in one-to-one
correspondence with a family of POVMs on the dummy space, via

    I(rho) = sum_{k,l} <phi_l| A~ |phi_k>  K_k rho K_l^dag.

This module constructs minimal dilations, extracts the dummy POVMs from
instruments by solving the Hilbert-Schmidt Gram system of the Kraus family,
and rebuilds instruments from dummy POVMs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import (
    ChannelMismatchError,
    DimensionMismatchError,
    NotMinimalError,
    NotPsdError,
    SignallingInstrumentsError,
)
from .linalg import DEFAULT_TOLERANCES, ToleranceConfig
from .qobjects import (
    DensityMatrix,
    InstrumentSet,
    Isometry,
    KrausChannel,
    MeasurementAssemblage,
    Povm,
)

NONSIGNALLING_TOL = 1e-9
GRAM_CONDITION_REPORT = 1e8


def vec(k: np.ndarray) -> np.ndarray:
    """Vectorize a ``d_out x d_in`` operator as ``sum_i |i> (x) K|i>``."""
    return np.asarray(k, dtype=np.complex128).T.reshape(-1)


def unvec(v: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(v, dtype=np.complex128).reshape(d_in, d_out).T


def choi_matrix(kraus, d_in: int, d_out: int) -> np.ndarray:
    """Choi matrix ``sum_ij |i><j| (x) M(|i><j|)`` of a CP map in Kraus form."""
    c = np.zeros((d_in * d_out, d_in * d_out), dtype=np.complex128)
    for k in kraus:
        v = vec(k)
        c += np.outer(v, v.conj())
    return c


def channel_choi(ch: KrausChannel) -> np.ndarray:
    return choi_matrix(ch.kraus, ch.d_in, ch.d_out)


def cp_map_choi(ins: InstrumentSet, x: str, a: str) -> np.ndarray:
    return choi_matrix(ins.cp_map(x, a), ins.d_in, ins.d_out)


def total_choi(ins: InstrumentSet, x: str) -> np.ndarray:
    """Choi matrix of the summed map of setting ``x``."""
    return sum(cp_map_choi(ins, x, a) for a in ins.outcome_labels(x))


def common_channel_choi(
    ins: InstrumentSet, tol: float = NONSIGNALLING_TOL
) -> np.ndarray:
    """Setting-averaged total Choi matrix; raises when settings disagree."""
    chois = [total_choi(ins, x) for x in ins.setting_labels]
    worst = 0.0
    for i in range(len(chois)):
        for j in range(i + 1, len(chois)):
            worst = max(worst, linalg.max_abs_diff(chois[i], chois[j]))
    if worst > tol:
        raise SignallingInstrumentsError(worst, tol)
    return sum(chois) / len(chois)


def minimal_kraus_from_choi(
    choi: np.ndarray, d_in: int, d_out: int, cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> KrausChannel:
    """Canonical minimal Kraus family from the Choi eigendecomposition.

    The resulting operators are pairwise orthogonal in the Hilbert-Schmidt
    inner product and inherit the deterministic eigenbasis of
    :func:`steerkit.linalg.eig_hermitian`, so repeated runs produce the same
    dummy basis.
    """
    vals, vecs = linalg.eig_hermitian(choi, cfg)
    kraus = [
        np.sqrt(vals[i]) * unvec(vecs[:, i], d_in, d_out)
        for i in range(len(vals))
        if vals[i] > cfg.support_tol
    ]
    return KrausChannel(kraus, cfg)


def minimal_kraus(ch: KrausChannel, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> KrausChannel:
    """Reduce a channel to its canonical minimal Kraus form (same action)."""
    return minimal_kraus_from_choi(channel_choi(ch), ch.d_in, ch.d_out, cfg)


def kraus_gram(kraus) -> np.ndarray:
    """Hilbert-Schmidt Gram matrix ``G_mk = tr[K_m^dag K_k]``."""
    n = len(kraus)
    g = np.zeros((n, n), dtype=np.complex128)
    for m in range(n):
        for k in range(n):
            g[m, k] = np.trace(linalg.dagger(kraus[m]) @ kraus[k])
    return g


def _assert_independent(kraus, cfg: ToleranceConfig) -> np.ndarray:
    g = kraus_gram(kraus)
    rank = int(np.sum(np.linalg.eigvalsh((g + linalg.dagger(g)) / 2) > cfg.support_tol))
    if rank < len(kraus):
        raise NotMinimalError(
            f"Kraus operators are linearly dependent: Gram rank {rank} < {len(kraus)}"
        )
    return g


def build_isometry(ch: KrausChannel, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Isometry:
    """Stack a minimal Kraus family into the dilation isometry.

    Raises ``NotMinimalError`` when the Kraus operators are linearly
    dependent (Gram matrix rank below the Kraus count).
    """
    _assert_independent(ch.kraus, cfg)
    v = np.vstack([k for k in ch.kraus])
    return Isometry(v, dummy_dim=len(ch.kraus), cfg=cfg)


@dataclass(frozen=True)
class MinimalDilation:
    """A channel in minimal Kraus form together with its dilation isometry."""

    channel: KrausChannel
    isometry: Isometry
    dummy_dim: int

    @classmethod
    def of_channel(
        cls, ch: KrausChannel, cfg: ToleranceConfig = DEFAULT_TOLERANCES
    ) -> "MinimalDilation":
        """Canonicalize an arbitrary channel presentation and dilate it."""
        minimal = minimal_kraus(ch, cfg)
        return cls(minimal, build_isometry(minimal, cfg), len(minimal.kraus))

    @classmethod
    def from_minimal(
        cls, ch: KrausChannel, cfg: ToleranceConfig = DEFAULT_TOLERANCES
    ) -> "MinimalDilation":
        """Dilate a channel whose given Kraus list is already independent.

        Unlike :meth:`of_channel` this keeps the supplied operators (and
        hence the dummy basis pairing) exactly, which matters when a target
        state on the dilation space is specified entrywise.
        """
        iso = build_isometry(ch, cfg)
        return cls(ch, iso, len(ch.kraus))

    @classmethod
    def from_choi(
        cls, choi: np.ndarray, d_in: int, d_out: int, cfg: ToleranceConfig = DEFAULT_TOLERANCES
    ) -> "MinimalDilation":
        ch = minimal_kraus_from_choi(choi, d_in, d_out, cfg)
        return cls(ch, build_isometry(ch, cfg), len(ch.kraus))


def _coeff_matrix_from_choi(
    choi: np.ndarray,
    dil: MinimalDilation,
    gram_inv: np.ndarray,
    kvec: np.ndarray,
) -> tuple[np.ndarray, float]:
    """Solve ``choi = sum_kl c_kl |K_k>><<K_l|`` for ``c`` via the Gram system.

    ``gram_inv`` is the explicit inverse of the r^2 x r^2 Gram matrix of the
    operators ``|K_m>><<K_n|``; ``kvec`` holds the vectorized Kraus family as
    columns. Returns the coefficient matrix and the residual of the expansion.
    """
    r = dil.dummy_dim
    t = (linalg.dagger(kvec) @ choi @ kvec).reshape(-1)
    c = (gram_inv @ t).reshape(r, r)
    residual = linalg.max_abs_diff(kvec @ c @ linalg.dagger(kvec), choi)
    return c, residual


def dummy_povms_from_instruments(
    ins: InstrumentSet,
    dil: MinimalDilation,
    cfg: ToleranceConfig = DEFAULT_TOLERANCES,
) -> MeasurementAssemblage:
    """Extract the dummy POVMs of a non-signalling instrument set.

    The instrument set must have a common total channel matching
    ``dil.channel``; each CP map's Choi matrix is then expanded in the rank-one
    operator basis built from the minimal Kraus family, which is a full-rank
    linear system at minimality.

    Raises
    ------
    SignallingInstrumentsError : settings have different total channels.
    ChannelMismatchError : the common total differs from ``dil.channel``,
        or a CP map lies outside the span of the minimal Kraus family.
    NotPsdError : an extracted operator has a negative eigenvalue beyond
        tolerance, signalling an inconsistent instrument set.
    """
    if ins.d_in != dil.channel.d_in or ins.d_out != dil.channel.d_out:
        raise DimensionMismatchError("instrument set and dilation dimensions differ")
    common = common_channel_choi(ins)
    dev = linalg.max_abs_diff(common, channel_choi(dil.channel))
    if dev > NONSIGNALLING_TOL:
        raise ChannelMismatchError(
            f"instrument total channel differs from the dilated channel by {dev:.3e}"
        )

    kraus = dil.channel.kraus
    r = dil.dummy_dim
    kvec = np.column_stack([vec(k) for k in kraus])
    g = kraus_gram(kraus)
    # Gram matrix of the r^2 operators |K_m>><<K_n| under <A, B> = tr[A^dag B].
    big_gram = np.kron(g, g.T)
    cond = np.linalg.cond(big_gram)
    if cond > GRAM_CONDITION_REPORT:
        warnings.warn(
            f"Gram system condition number {cond:.3e} exceeds {GRAM_CONDITION_REPORT:.0e}; "
            "extracted dummy POVMs may be inaccurate",
            stacklevel=2,
        )
    gram_inv = np.linalg.inv(big_gram)

    povms: dict[str, dict[str, np.ndarray]] = {}
    for x, a, ops in ins.items():
        choi = choi_matrix(ops, ins.d_in, ins.d_out)
        c, residual = _coeff_matrix_from_choi(choi, dil, gram_inv, kvec)
        if residual > NONSIGNALLING_TOL:
            raise ChannelMismatchError(
                f"CP map ({x!r}, {a!r}) lies outside the Kraus span (residual {residual:.3e})"
            )
        # I(rho) = sum_kl <phi_l|A~|phi_k> K_k rho K_l^dag, so c = A~^T.
        a_tilde = c.T
        herm_dev = linalg.hermitian_deviation(a_tilde)
        if herm_dev > cfg.hermiticity_tol:
            warnings.warn(
                f"dummy POVM ({x!r}, {a!r}) symmetrized; Hermiticity deviation {herm_dev:.3e}",
                stacklevel=2,
            )
        a_tilde = (a_tilde + linalg.dagger(a_tilde)) / 2
        lo = linalg.min_eigenvalue(a_tilde)
        if lo < -cfg.psd_tol:
            raise NotPsdError(lo, cfg.psd_tol, context=f"dummy POVM ({x!r}, {a!r})")
        povms.setdefault(x, {})[a] = a_tilde

    cert_cfg = ToleranceConfig(
        hermiticity_tol=cfg.hermiticity_tol,
        psd_tol=cfg.psd_tol,
        equality_tol=max(cfg.equality_tol, 1e-9),
        support_tol=cfg.support_tol,
    )
    return MeasurementAssemblage(
        {x: Povm({a: eff for a, eff in outcome.items()}, cert_cfg) for x, outcome in povms.items()}
    )


def instruments_from_dummy_povms(
    m: MeasurementAssemblage,
    dil: MinimalDilation,
    cfg: ToleranceConfig = DEFAULT_TOLERANCES,
) -> InstrumentSet:
    """Instantiate the instruments defined by POVMs on the dummy space.

    Each CP map gets a Kraus list from the PSD square-root factorization of
    the coefficient matrix ``A~^T``: with ``A~^T = S S^dag`` the operators are
    ``L_j = sum_k S_kj K_k``.
    """
    if m.dim != dil.dummy_dim:
        raise DimensionMismatchError(
            f"POVM dimension {m.dim} does not match dummy dimension {dil.dummy_dim}"
        )
    kraus = dil.channel.kraus
    settings: dict[str, dict[str, list[np.ndarray]]] = {}
    for x, povm in m:
        for a, eff in povm:
            s = linalg.sqrt_psd(eff.T, cfg)
            ops = []
            for j in range(dil.dummy_dim):
                op = sum(s[k, j] * kraus[k] for k in range(dil.dummy_dim))
                if linalg.max_abs(op) > 1e-14:
                    ops.append(op)
            if not ops:
                # Zero CP map: keep a single zero Kraus so the outcome exists.
                ops.append(np.zeros_like(kraus[0]))
            settings.setdefault(x, {})[a] = ops
    return InstrumentSet(settings, cfg)


def canonical_purification(
    rho_b: DensityMatrix, cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> tuple[np.ndarray, np.ndarray]:
    """Minimal-dummy purification ``|psi> = sum_i sqrt(l_i) |i> (x) |v_i>``.

    The dummy factor (first tensor slot) has dimension equal to the support
    rank; ``v_i`` are the eigenvectors of ``rho_b`` in its deterministic
    eigenbasis. Returns the unit vector and the kept eigenvector columns.
    """
    vals, vecs = linalg.eig_hermitian(rho_b.mat, cfg)
    keep = vals > cfg.support_tol
    lam = vals[keep]
    basis = vecs[:, keep]
    d = rho_b.dim
    r = int(lam.size)
    psi = np.zeros(r * d, dtype=np.complex128)
    for i in range(r):
        psi += np.sqrt(lam[i]) * np.kron(np.eye(r)[:, i], basis[:, i])
    return psi / np.linalg.norm(psi), basis
