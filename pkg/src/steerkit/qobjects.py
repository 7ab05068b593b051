"""Domain types for states, POVMs, assemblages, channels and instruments.

Constructors validate their invariants against a :class:`ToleranceConfig`
and freeze the underlying arrays, so instances are immutable values that
can be shared freely. Setting and outcome labels are opaque strings kept
in lexicographic order, which makes serialization deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from . import linalg
from .errors import DimensionMismatchError, ValidationError
from .linalg import DEFAULT_TOLERANCES, ToleranceConfig

TRACE_TOL = 1e-9


def _freeze(m: np.ndarray) -> np.ndarray:
    out = np.array(m, dtype=np.complex128, copy=True)
    out.setflags(write=False)
    return out


def _sorted_items(mapping) -> list[tuple[str, object]]:
    items = [(str(k), v) for k, v in dict(mapping).items()]
    return sorted(items, key=lambda kv: kv[0])


@dataclass(frozen=True)
class DensityMatrix:
    """A quantum state: Hermitian PSD matrix with unit trace.

    With ``subnormalized=True`` the trace requirement is relaxed to
    ``0 < tr <= 1``, the validation mode used for assemblage members.
    """

    mat: np.ndarray
    dim: int = field(init=False)

    def __init__(
        self,
        mat,
        *,
        subnormalized: bool = False,
        cfg: ToleranceConfig = DEFAULT_TOLERANCES,
    ):
        m = linalg.as_complex_matrix(mat, square=True)
        linalg.assert_psd(m, cfg, context="density matrix")
        tr = float(np.trace(m).real)
        if subnormalized:
            if not (0.0 < tr <= 1.0 + TRACE_TOL):
                raise ValidationError(f"subnormalized state trace {tr} outside (0, 1]")
        elif abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"density matrix trace {tr} deviates from 1 beyond {TRACE_TOL}")
        object.__setattr__(self, "mat", _freeze(m))
        object.__setattr__(self, "dim", m.shape[0])

    @classmethod
    def pure(cls, vector, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> "DensityMatrix":
        """State ``|v><v|`` from a (normalized) vector."""
        v = np.asarray(vector, dtype=np.complex128).reshape(-1)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValidationError("cannot normalize the zero vector")
        v = v / norm
        return cls(np.outer(v, v.conj()), cfg=cfg)

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityMatrix":
        return cls(np.eye(d) / d)


@dataclass(frozen=True)
class Povm:
    """Positive operator valued measure: labeled effects summing to identity."""

    effects: tuple[tuple[str, np.ndarray], ...]
    dim: int = field(init=False)

    def __init__(self, effects, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
        items = _sorted_items(effects)
        if not items:
            raise ValidationError("POVM needs at least one outcome")
        validated = []
        dim = None
        for label, eff in items:
            m = linalg.as_complex_matrix(eff, square=True)
            linalg.assert_psd(m, cfg, context=f"effect {label!r}")
            if dim is None:
                dim = m.shape[0]
            elif m.shape[0] != dim:
                raise DimensionMismatchError("POVM effects have mixed dimensions")
            validated.append((label, _freeze(m)))
        total = sum(m for _, m in validated)
        dev = linalg.max_abs_diff(total, np.eye(dim))
        if dev > cfg.equality_tol:
            raise ValidationError(f"POVM effects sum to identity only within {dev:.3e}")
        object.__setattr__(self, "effects", tuple(validated))
        object.__setattr__(self, "dim", dim)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.effects)

    def effect(self, label: str) -> np.ndarray:
        for lab, eff in self.effects:
            if lab == label:
                return eff
        raise KeyError(label)

    def __iter__(self) -> Iterator[tuple[str, np.ndarray]]:
        return iter(self.effects)

    def __len__(self) -> int:
        return len(self.effects)


@dataclass(frozen=True)
class MeasurementAssemblage:
    """A family of POVMs of equal dimension, indexed by setting labels."""

    settings: tuple[tuple[str, Povm], ...]
    dim: int = field(init=False)

    def __init__(self, settings):
        items = _sorted_items(settings)
        if not items:
            raise ValidationError("measurement assemblage needs at least one setting")
        dim = None
        for label, povm in items:
            if not isinstance(povm, Povm):
                raise ValidationError(f"setting {label!r} is not a Povm")
            if dim is None:
                dim = povm.dim
            elif povm.dim != dim:
                raise DimensionMismatchError("settings have mixed dimensions")
        object.__setattr__(self, "settings", tuple(items))
        object.__setattr__(self, "dim", dim)

    @property
    def setting_labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.settings)

    def povm(self, label: str) -> Povm:
        for lab, p in self.settings:
            if lab == label:
                return p
        raise KeyError(label)

    def __iter__(self) -> Iterator[tuple[str, Povm]]:
        return iter(self.settings)

    def __len__(self) -> int:
        return len(self.settings)


@dataclass(frozen=True)
class StateAssemblage:
    """Subnormalized states indexed by (setting, outcome)."""

    members: tuple[tuple[str, tuple[tuple[str, np.ndarray], ...]], ...]
    dim: int = field(init=False)

    def __init__(self, members, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
        settings = []
        dim = None
        for x, outcome_map in _sorted_items(members):
            outcomes = []
            total_trace = 0.0
            for a, mat in _sorted_items(outcome_map):
                m = linalg.as_complex_matrix(mat, square=True)
                linalg.assert_psd(m, cfg, context=f"member ({x!r}, {a!r})")
                if dim is None:
                    dim = m.shape[0]
                elif m.shape[0] != dim:
                    raise DimensionMismatchError("assemblage members have mixed dimensions")
                total_trace += float(np.trace(m).real)
                outcomes.append((a, _freeze(m)))
            if not outcomes:
                raise ValidationError(f"setting {x!r} has no outcomes")
            if total_trace > 1.0 + TRACE_TOL:
                raise ValidationError(
                    f"setting {x!r}: outcome traces sum to {total_trace} > 1"
                )
            settings.append((x, tuple(outcomes)))
        if not settings:
            raise ValidationError("state assemblage needs at least one setting")
        object.__setattr__(self, "members", tuple(settings))
        object.__setattr__(self, "dim", dim)

    @property
    def setting_labels(self) -> tuple[str, ...]:
        return tuple(x for x, _ in self.members)

    def outcome_labels(self, x: str) -> tuple[str, ...]:
        return tuple(a for a, _ in self._setting(x))

    def member(self, x: str, a: str) -> np.ndarray:
        for lab, m in self._setting(x):
            if lab == a:
                return m
        raise KeyError((x, a))

    def marginal(self, x: str) -> np.ndarray:
        """Sum of members over outcomes of setting ``x``."""
        return sum(m for _, m in self._setting(x))

    def average_marginal(self) -> np.ndarray:
        """Setting-averaged marginal; equals each marginal when non-signalling."""
        return sum(self.marginal(x) for x in self.setting_labels) / len(self.members)

    def _setting(self, x: str):
        for lab, outcomes in self.members:
            if lab == x:
                return outcomes
        raise KeyError(x)

    def items(self) -> Iterator[tuple[str, str, np.ndarray]]:
        for x, outcomes in self.members:
            for a, m in outcomes:
                yield x, a, m


@dataclass(frozen=True)
class KrausChannel:
    """Completely positive trace-preserving map in Kraus form."""

    kraus: tuple[np.ndarray, ...]
    d_in: int = field(init=False)
    d_out: int = field(init=False)

    def __init__(self, kraus, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
        ops = [linalg.as_complex_matrix(k) for k in kraus]
        if not ops:
            raise ValidationError("channel needs at least one Kraus operator")
        d_out, d_in = ops[0].shape
        for k in ops:
            if k.shape != (d_out, d_in):
                raise DimensionMismatchError("Kraus operators have mixed shapes")
        total = sum(linalg.dagger(k) @ k for k in ops)
        dev = linalg.max_abs_diff(total, np.eye(d_in))
        if dev > cfg.equality_tol:
            raise ValidationError(f"channel is trace preserving only within {dev:.3e}")
        object.__setattr__(self, "kraus", tuple(_freeze(k) for k in ops))
        object.__setattr__(self, "d_in", d_in)
        object.__setattr__(self, "d_out", d_out)

    @classmethod
    def identity(cls, d: int) -> "KrausChannel":
        return cls([np.eye(d)])


@dataclass(frozen=True)
class InstrumentSet:
    """CP maps indexed by (setting, outcome), trace preserving per setting.

    Each CP map is stored directly as a Kraus collection; complete
    positivity is automatic in this form.
    """

    settings: tuple[tuple[str, tuple[tuple[str, tuple[np.ndarray, ...]], ...]], ...]
    d_in: int = field(init=False)
    d_out: int = field(init=False)

    def __init__(self, settings, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
        validated = []
        d_in = d_out = None
        for x, outcome_map in _sorted_items(settings):
            outcomes = []
            total = None
            for a, kraus_list in _sorted_items(outcome_map):
                ops = [linalg.as_complex_matrix(k) for k in kraus_list]
                for k in ops:
                    if d_in is None:
                        d_out, d_in = k.shape
                    elif k.shape != (d_out, d_in):
                        raise DimensionMismatchError("CP map Kraus shapes are inconsistent")
                    contrib = linalg.dagger(k) @ k
                    total = contrib if total is None else total + contrib
                outcomes.append((a, tuple(_freeze(k) for k in ops)))
            if total is None:
                raise ValidationError(f"setting {x!r} has no Kraus operators")
            dev = linalg.max_abs_diff(total, np.eye(d_in))
            if dev > cfg.equality_tol:
                raise ValidationError(
                    f"setting {x!r}: summed map is trace preserving only within {dev:.3e}"
                )
            validated.append((x, tuple(outcomes)))
        if not validated:
            raise ValidationError("instrument set needs at least one setting")
        object.__setattr__(self, "settings", tuple(validated))
        object.__setattr__(self, "d_in", d_in)
        object.__setattr__(self, "d_out", d_out)

    @property
    def setting_labels(self) -> tuple[str, ...]:
        return tuple(x for x, _ in self.settings)

    def outcome_labels(self, x: str) -> tuple[str, ...]:
        return tuple(a for a, _ in self._setting(x))

    def cp_map(self, x: str, a: str) -> tuple[np.ndarray, ...]:
        for lab, ops in self._setting(x):
            if lab == a:
                return ops
        raise KeyError((x, a))

    def _setting(self, x: str):
        for lab, outcomes in self.settings:
            if lab == x:
                return outcomes
        raise KeyError(x)

    def items(self) -> Iterator[tuple[str, str, tuple[np.ndarray, ...]]]:
        for x, outcomes in self.settings:
            for a, ops in outcomes:
                yield x, a, ops


@dataclass(frozen=True)
class Isometry:
    """Isometry ``V: input -> dummy (x) output`` with the dummy factor first.

    Rows are indexed as ``k * d_out + i`` with ``k`` the dummy (computational)
    basis index and ``i`` the output index.
    """

    v: np.ndarray
    dummy_dim: int
    d_in: int = field(init=False)
    d_out: int = field(init=False)

    def __init__(self, v, dummy_dim: int, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
        m = linalg.as_complex_matrix(v)
        rows, d_in = m.shape
        if rows % dummy_dim != 0:
            raise DimensionMismatchError(
                f"row count {rows} is not a multiple of dummy dimension {dummy_dim}"
            )
        dev = linalg.max_abs_diff(linalg.dagger(m) @ m, np.eye(d_in))
        if dev > cfg.equality_tol:
            raise ValidationError(f"V^dag V deviates from identity by {dev:.3e}")
        object.__setattr__(self, "v", _freeze(m))
        object.__setattr__(self, "dummy_dim", dummy_dim)
        object.__setattr__(self, "d_in", d_in)
        object.__setattr__(self, "d_out", rows // dummy_dim)

    def conjugate(self, rho: np.ndarray) -> np.ndarray:
        """``V rho V^dag`` on the dummy (x) output space."""
        return self.v @ rho @ linalg.dagger(self.v)


class NonSignallingVerdict(NamedTuple):
    ok: bool
    max_deviation: float


def apply_channel(ch: KrausChannel, rho: DensityMatrix) -> DensityMatrix:
    """Apply a Kraus channel to a state."""
    if rho.dim != ch.d_in:
        raise DimensionMismatchError(
            f"state dimension {rho.dim} does not match channel input {ch.d_in}"
        )
    out = sum(k @ rho.mat @ linalg.dagger(k) for k in ch.kraus)
    return DensityMatrix(out)


def apply_instrument(ins: InstrumentSet, rho: DensityMatrix) -> StateAssemblage:
    """Act with every CP map on ``rho``, producing a state assemblage."""
    if rho.dim != ins.d_in:
        raise DimensionMismatchError(
            f"state dimension {rho.dim} does not match instrument input {ins.d_in}"
        )
    members: dict[str, dict[str, np.ndarray]] = {}
    for x, a, ops in ins.items():
        out = sum(k @ rho.mat @ linalg.dagger(k) for k in ops)
        members.setdefault(x, {})[a] = out
    return StateAssemblage(members)


def luders_instruments(
    m: MeasurementAssemblage, cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> InstrumentSet:
    """Square-root instruments ``rho -> sqrt(A) rho sqrt(A)`` of an assemblage."""
    settings = {
        x: {a: [linalg.sqrt_psd(eff, cfg)] for a, eff in povm}
        for x, povm in m
    }
    return InstrumentSet(settings, cfg)


def is_nonsignalling(sa: StateAssemblage, tol: float = 1e-9) -> NonSignallingVerdict:
    """Check that all settings share the same marginal, reporting the deviation."""
    labels = sa.setting_labels
    worst = 0.0
    for i, x in enumerate(labels):
        for y in labels[i + 1 :]:
            worst = max(worst, linalg.max_abs_diff(sa.marginal(x), sa.marginal(y)))
    return NonSignallingVerdict(worst <= tol, worst)
