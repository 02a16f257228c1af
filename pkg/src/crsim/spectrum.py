"""Dressed spectrum and static interaction rates.

Diagonalizes the device Hamiltonian, labels eigenstates by the bare product
states they track, and derives the always-on quantities: exact and
perturbative ZZ, the conditional drive matrix element mu, the equivalent
single-coupler exchange J_eff, qubit-bus dispersive shifts, and frequency
sweeps of all of the above.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .model import DeviceModel, HamiltonianMatrix, build_hamiltonian, destroy

__all__ = [
    "DressedSpectrum",
    "StaticRates",
    "SweepRow",
    "AssignmentWarning",
    "diagonalize",
    "assign_dressed_labels",
    "zz_exact",
    "zz_perturbative",
    "mu_matrix_element",
    "j_eff",
    "dispersive_shift",
    "static_rates",
    "fit_j0_to_zz",
    "sweep_static",
]

EIGEN_RESIDUAL_TOL = 1e-9  # GHz
OVERLAP_WARN = 1.0 / np.sqrt(2.0)


class AssignmentWarning(UserWarning):
    """Hybridization too strong for an unambiguous bare-state labeling."""


@dataclass(frozen=True)
class DressedSpectrum:
    """Eigendecomposition with a bare-label assignment.

    ``assignment[i]`` is the eigenindex tracking bare basis state i. Each
    eigenvector is gauge-fixed so its assigned bare component is positive,
    which makes dressed matrix elements well defined.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    basis: tuple[tuple[int, ...], ...]
    assignment: dict[int, int]
    weak_overlaps: tuple[tuple[tuple[int, ...], float], ...] = field(default_factory=tuple)

    def _bare_index(self, label: tuple[int, ...]) -> int:
        try:
            return self.basis.index(label)
        except ValueError:
            raise KeyError(f"label {label} not in basis") from None

    def energy(self, label: tuple[int, ...]) -> float:
        """Dressed energy (GHz) of the state tracking a bare label."""
        return float(self.eigenvalues[self.assignment[self._bare_index(label)]])

    def state(self, label: tuple[int, ...]) -> np.ndarray:
        """Gauge-fixed dressed eigenvector tracking a bare label."""
        return self.eigenvectors[:, self.assignment[self._bare_index(label)]]

    @property
    def clean(self) -> bool:
        return not self.weak_overlaps


def assign_dressed_labels(
    eigenvectors: np.ndarray, basis: tuple[tuple[int, ...], ...]
) -> tuple[dict[int, int], list[tuple[tuple[int, ...], float]]]:
    """Greedy maximum-overlap bijection bare label -> eigenindex.

    Pairs are processed in descending overlap magnitude; ties break toward
    the lower eigenindex. Returns the assignment and any assigned pairs whose
    overlap magnitude falls below 1/sqrt(2).
    """
    d = len(basis)
    ov = np.abs(eigenvectors)
    # sort by (-overlap, bare index, eigenindex) for deterministic tie-breaks
    flat = np.argsort(-ov, axis=None, kind="stable")
    assignment: dict[int, int] = {}
    taken: set[int] = set()
    for f in flat:
        l, k = divmod(int(f), d)
        if l not in assignment and k not in taken:
            assignment[l] = k
            taken.add(k)
            if len(assignment) == d:
                break
    weak = [(basis[l], float(ov[l, k])) for l, k in assignment.items() if ov[l, k] < OVERLAP_WARN]
    weak.sort(key=lambda pair: pair[1])
    return assignment, weak


def diagonalize(h: HamiltonianMatrix) -> DressedSpectrum:
    """Eigensolve with ascending eigenvalues and label assignment."""
    m = h.matrix
    if np.max(np.abs(m - m.conj().T)) > 1e-10:
        raise ValueError("Hamiltonian is not Hermitian")
    evals, evecs = np.linalg.eigh(m)
    ortho = np.max(np.abs(evecs.conj().T @ evecs - np.eye(h.dim)))
    if ortho > EIGEN_RESIDUAL_TOL:
        raise AssertionError(f"eigenvector orthonormality defect {ortho:g}")
    assignment, weak = assign_dressed_labels(evecs, h.basis)
    evecs = evecs.copy()
    for l, k in assignment.items():
        if np.real(evecs[l, k]) < 0:
            evecs[:, k] = -evecs[:, k]
    if weak:
        worst = ", ".join(f"{lab}:{o:.3f}" for lab, o in weak[:3])
        warnings.warn(
            f"{len(weak)} dressed states have assignment overlap < 1/sqrt(2) ({worst})",
            AssignmentWarning,
            stacklevel=2,
        )
    return DressedSpectrum(
        eigenvalues=evals,
        eigenvectors=evecs,
        basis=h.basis,
        assignment=assignment,
        weak_overlaps=tuple(weak),
    )


def _pad(spec: DressedSpectrum, occ: tuple[int, ...]) -> tuple[int, ...]:
    nmodes = len(spec.basis[0])
    return tuple(occ) + (0,) * (nmodes - len(occ))


def zz_exact(spectrum: DressedSpectrum) -> float:
    """Static ZZ in Hz: E11 + E00 - E01 - E10 of the dressed levels."""
    e = lambda occ: spectrum.energy(_pad(spectrum, occ))
    return (e((1, 1)) + e((0, 0)) - e((0, 1)) - e((1, 0))) * 1e9


def zz_perturbative(j_mhz: float, delta_mhz: float, alpha0_mhz: float, alpha1_mhz: float) -> float:
    """Second-order single-coupler ZZ in kHz: 2 J^2 (a0+a1)/((D+a0)(D-a1)).

    Raises near the straddling-regime poles instead of returning huge values.
    """
    d1 = delta_mhz + alpha0_mhz
    d2 = delta_mhz - alpha1_mhz
    if abs(d1) < 1e-3 or abs(d2) < 1e-3:  # 1 kHz pole guard
        raise ZeroDivisionError(
            f"perturbative ZZ pole: (Delta+alpha0)={d1:g} MHz, (Delta-alpha1)={d2:g} MHz"
        )
    return 2.0 * j_mhz**2 * (alpha0_mhz + alpha1_mhz) / (d1 * d2) * 1e3


def _control_raising(model: DeviceModel, control: int) -> np.ndarray:
    dims = model.dims
    mats = [np.eye(d) for d in dims]
    mats[control] = destroy(dims[control]).T
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def mu_matrix_element(spectrum: DressedSpectrum, model: DeviceModel, control: int = 0) -> float:
    """Conditional drive matrix element: the ZX rate per unit drive amplitude.

    Computed from the bare raising operator of the control between dressed
    computational states, halved to express it as the half-difference of the
    conditional target drive rates (the same convention the tomography ZX
    uses, so ZX(Omega)/Omega -> mu at low drive).
    """
    adag = _control_raising(model, control)
    target = 1 - control

    def vec(c: int, t: int) -> np.ndarray:
        occ = [0, 0]
        occ[control], occ[target] = c, t
        return spectrum.state(_pad(spectrum, tuple(occ)))

    raw = vec(1, 1) @ adag @ vec(1, 0) - vec(0, 1) @ adag @ vec(0, 0)
    return float(np.real(raw)) / 2.0


def j_eff(mu: float, delta_mhz: float, alpha_mhz: float) -> float:
    """Equivalent single-coupler exchange in MHz: mu (alpha+Delta) Delta / alpha."""
    if alpha_mhz == 0:
        raise ZeroDivisionError("alpha must be nonzero")
    return mu * (alpha_mhz + delta_mhz) * delta_mhz / alpha_mhz


def dispersive_shift(spectrum: DressedSpectrum, qubit: int, bus: int) -> float:
    """Single-photon dispersive shift chi (Hz) of a qubit from one bus photon.

    chi = [E(q=1,b=1) - E(q=1,b=0)] - [E(q=0,b=1) - E(q=0,b=0)], all other
    modes in their ground states.
    """
    nmodes = len(spectrum.basis[0])
    if nmodes < 3 + bus:
        raise KeyError(f"bus index {bus} not present in this model")

    def e(q: int, b: int) -> float:
        occ = [0] * nmodes
        occ[qubit] = q
        occ[2 + bus] = b
        return spectrum.energy(tuple(occ))

    return ((e(1, 1) - e(1, 0)) - (e(0, 1) - e(0, 0))) * 1e9


@dataclass(frozen=True)
class StaticRates:
    """Point summary of the static interactions at a device working point."""

    zz_hz: float
    mu: float
    jeff_mhz: float
    chi_hz: tuple[tuple[int, int, float], ...]  # (qubit, bus, chi)

    @property
    def ratio(self) -> float:
        """|J_eff| / |ZZ| with both expressed in the same units."""
        if self.zz_hz == 0:
            return float("inf")
        return abs(self.jeff_mhz) * 1e6 / abs(self.zz_hz)


def static_rates(model: DeviceModel, control: int = 0) -> StaticRates:
    """Diagonalize once and collect ZZ, mu, J_eff and chi for a model."""
    spec = diagonalize(build_hamiltonian(model))
    mu = mu_matrix_element(spec, model, control)
    target = 1 - control
    delta = (
        model.transmons[control].frequency_ghz - model.transmons[target].frequency_ghz
    ) * 1e3
    alpha = model.transmons[control].anharmonicity_ghz * 1e3
    chi = tuple(
        (q, b, dispersive_shift(spec, q, b))
        for q in (0, 1)
        for b in range(len(model.buses))
    )
    return StaticRates(
        zz_hz=zz_exact(spec),
        mu=mu,
        jeff_mhz=j_eff(mu, delta, alpha),
        chi_hz=chi,
    )


def fit_j0_to_zz(
    model: DeviceModel,
    zz_target_hz: float,
    bracket_mhz: tuple[float, float] = (0.0, 8.0),
    residual_tol_hz: float = 100.0,
) -> float:
    """Direct-coupling J0 (MHz) that reproduces a measured static ZZ.

    Root of zz_exact(model with J0) - target by Brent's method. The ZZ must
    be monotone in J0 over the bracket (checked numerically) and change sign
    there; the default bracket covers the cancellation branch below the ZZ
    turning point for bus-coupler devices.
    """

    def f(j0_mhz: float) -> float:
        m = model.with_j0(j0_mhz * 1e-3)
        return zz_exact(diagonalize(build_hamiltonian(m))) - zz_target_hz

    lo, hi = bracket_mhz
    probes = np.linspace(lo, hi, 7)
    values = [f(x) for x in probes]
    diffs = np.diff(values)
    if not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ValueError(
            f"ZZ is not monotone in J0 over bracket [{lo}, {hi}] MHz; narrow the bracket"
        )
    if values[0] * values[-1] > 0:
        raise ValueError(
            f"no ZZ sign change over J0 bracket [{lo}, {hi}] MHz "
            f"(f(lo)={values[0]:.1f} Hz, f(hi)={values[-1]:.1f} Hz)"
        )
    j0 = brentq(f, lo, hi, xtol=1e-6)
    resid = abs(f(j0))
    if resid > residual_tol_hz:
        raise ArithmeticError(f"fit residual {resid:.1f} Hz exceeds {residual_tol_hz} Hz")
    return float(j0)


@dataclass(frozen=True)
class SweepRow:
    mean_freq_ghz: float
    detuning_mhz: float
    zz_khz: float
    jeff_mhz: float
    ratio: float
    flagged: bool = False


def sweep_static(
    model: DeviceModel,
    mean_freqs_ghz: np.ndarray,
    detunings_mhz: list[float],
    control: int = 0,
) -> list[SweepRow]:
    """ZZ / J_eff / ratio over a symmetric qubit-frequency sweep.

    Both qubit frequencies move symmetrically about each grid mean at fixed
    detuning; every other Hamiltonian parameter is held fixed. Rows where the
    dressed labeling becomes ambiguous are flagged and carry NaNs rather than
    being dropped.
    """
    mean_freqs_ghz = np.asarray(mean_freqs_ghz, dtype=float)
    if mean_freqs_ghz.size == 0 or not detunings_mhz:
        raise ValueError("sweep grid and detuning list must be non-empty")
    rows: list[SweepRow] = []
    for det in detunings_mhz:
        for fbar in mean_freqs_ghz:
            m = model.with_frequencies(fbar + det * 5e-4, fbar - det * 5e-4)
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("error", AssignmentWarning)
                    rates = static_rates(m, control=control)
            except AssignmentWarning:
                rows.append(
                    SweepRow(float(fbar), det, float("nan"), float("nan"), float("nan"), True)
                )
                continue
            zz_khz = rates.zz_hz * 1e-3
            jeff = rates.jeff_mhz
            ratio = jeff * 1e3 / zz_khz if zz_khz != 0 else float("inf")
            rows.append(SweepRow(float(fbar), det, zz_khz, jeff, ratio))
    return rows


SWEEP_CSV_HEADER = "mean_freq_ghz,detuning_mhz,zz_khz,jeff_mhz,ratio"


def sweep_rows_to_csv(rows: list[SweepRow], extra_header: str = "", extra_cols=None) -> str:
    """Render sweep rows deterministically; NaN cells print as 'nan'."""
    lines = [SWEEP_CSV_HEADER + extra_header]
    for i, r in enumerate(rows):
        cells = [
            f"{r.mean_freq_ghz:.9g}",
            f"{r.detuning_mhz:.9g}",
            f"{r.zz_khz:.9g}",
            f"{r.jeff_mhz:.9g}",
            f"{r.ratio:.9g}",
        ]
        if extra_cols is not None:
            cells.extend(f"{v:.9g}" for v in extra_cols[i])
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
