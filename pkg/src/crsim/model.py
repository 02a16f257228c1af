"""Device description and bare-basis Hamiltonian construction.

Two fixed-frequency transmons (Duffing oscillators) share a direct exchange
coupling and any number of harmonic bus modes, each bus coupled to both
transmons. All energies are linear frequencies in GHz (h = 1), so dressed
energy differences read directly in GHz. Couplings enter through the full
quadrature products (a + a^dag)(b + b^dag); no rotating-wave approximation
is made at the Hamiltonian level.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "TransmonSpec",
    "BusModeSpec",
    "DeviceModel",
    "HamiltonianMatrix",
    "build_bare_basis",
    "build_hamiltonian",
    "validate_model",
    "destroy",
]

HERMITICITY_TOL = 1e-12  # GHz, elementwise


@dataclass(frozen=True)
class TransmonSpec:
    """One transmon: 0-1 frequency, anharmonicity (negative), truncation."""

    frequency_ghz: float
    anharmonicity_ghz: float
    levels: int = 5


@dataclass(frozen=True)
class BusModeSpec:
    """One harmonic bus mode with its couplings (g to transmon 0, 1) in GHz."""

    frequency_ghz: float
    g_ghz: tuple[float, float]
    levels: int = 3


@dataclass(frozen=True)
class DeviceModel:
    """Full circuit description.

    Mode ordering is fixed as (transmon 0, transmon 1, bus 0, bus 1, ...).
    With no buses this is the canonical two-transmon Hamiltonian with a
    single exchange coupling ``j0_ghz``.
    """

    transmons: tuple[TransmonSpec, TransmonSpec]
    j0_ghz: float = 0.0
    buses: tuple[BusModeSpec, ...] = field(default_factory=tuple)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(t.levels for t in self.transmons) + tuple(b.levels for b in self.buses)

    @property
    def detuning_ghz(self) -> float:
        """Qubit-qubit detuning, transmon 0 minus transmon 1."""
        return self.transmons[0].frequency_ghz - self.transmons[1].frequency_ghz

    def with_frequencies(self, f0: float, f1: float) -> "DeviceModel":
        """Copy with both transmon frequencies replaced (GHz)."""
        q0 = replace(self.transmons[0], frequency_ghz=f0)
        q1 = replace(self.transmons[1], frequency_ghz=f1)
        return replace(self, transmons=(q0, q1))

    def with_j0(self, j0_ghz: float) -> "DeviceModel":
        return replace(self, j0_ghz=j0_ghz)


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Dense Hermitian matrix in GHz plus the ordered bare product basis."""

    matrix: np.ndarray
    basis: tuple[tuple[int, ...], ...]

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def index_of(self, label: tuple[int, ...]) -> int:
        return self.basis.index(label)


def destroy(levels: int) -> np.ndarray:
    """Harmonic-oscillator annihilation operator, sqrt(n) ladder elements."""
    a = np.zeros((levels, levels))
    for n in range(1, levels):
        a[n - 1, n] = np.sqrt(n)
    return a


def build_bare_basis(model: DeviceModel) -> tuple[tuple[int, ...], ...]:
    """Lexicographic occupation labels, transmon 0 slowest."""
    return tuple(itertools.product(*[range(d) for d in model.dims]))


def _mode_operator(dims: tuple[int, ...], mode: int, op: np.ndarray) -> np.ndarray:
    mats = [np.eye(d) for d in dims]
    mats[mode] = op
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def build_hamiltonian(model: DeviceModel) -> HamiltonianMatrix:
    """Assemble the device Hamiltonian in the bare product basis.

    Diagonal: sum of w*n + (alpha/2)*n*(n-1) per transmon and w*n per bus.
    Off-diagonal: j0*(x0 x1) and g_ij*(x_i x_bj) with x = a + a^dag.
    """
    violations = validate_model(model)
    if violations:
        raise ValueError("invalid model: " + "; ".join(violations))
    dims = model.dims
    size = int(np.prod(dims))
    h = np.zeros((size, size))
    xs = []
    for i, q in enumerate(model.transmons):
        a = destroy(q.levels)
        n = a.T @ a
        h += q.frequency_ghz * _mode_operator(dims, i, n)
        h += 0.5 * q.anharmonicity_ghz * _mode_operator(dims, i, n @ (n - np.eye(q.levels)))
        xs.append(_mode_operator(dims, i, a + a.T))
    h += model.j0_ghz * (xs[0] @ xs[1])
    for bi, bus in enumerate(model.buses):
        mode = 2 + bi
        b = destroy(bus.levels)
        h += bus.frequency_ghz * _mode_operator(dims, mode, b.T @ b)
        xb = _mode_operator(dims, mode, b + b.T)
        h += bus.g_ghz[0] * (xs[0] @ xb) + bus.g_ghz[1] * (xs[1] @ xb)
    asym = np.max(np.abs(h - h.T))
    if asym >= HERMITICITY_TOL:
        raise AssertionError(f"Hamiltonian asymmetry {asym:g} exceeds {HERMITICITY_TOL:g}")
    return HamiltonianMatrix(matrix=h, basis=build_bare_basis(model))


def validate_model(model: DeviceModel) -> list[str]:
    """Check all type invariants; empty list means valid."""
    out: list[str] = []
    for i, q in enumerate(model.transmons):
        if not q.frequency_ghz > 0:
            out.append(f"transmons[{i}].frequency_ghz: must be > 0, got {q.frequency_ghz}")
        if q.levels < 2:
            out.append(f"transmons[{i}].levels: must be >= 2, got {q.levels}")
        if q.anharmonicity_ghz == 0:
            out.append(f"transmons[{i}].anharmonicity_ghz: must be nonzero")
    for j, b in enumerate(model.buses):
        if not b.frequency_ghz > 0:
            out.append(f"buses[{j}].frequency_ghz: must be > 0, got {b.frequency_ghz}")
        if b.levels < 2:
            out.append(f"buses[{j}].levels: must be >= 2, got {b.levels}")
        if len(b.g_ghz) != 2:
            out.append(f"buses[{j}].g_ghz: must be a pair, got {len(b.g_ghz)} values")
    return out
