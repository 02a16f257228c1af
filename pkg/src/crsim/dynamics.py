"""Driven dynamics in the rotating frame at the target frequency.

The full device is diagonalized once; the dressed computational manifold
(up to 3 levels per transmon, buses in vacuum) defines the simulation space.
In the frame rotating at the target's dressed frequency for both transmon
excitation numbers, the statics are diagonal and a resonant drive becomes a
static coupling through the dressed, excitation-raising part of the control
ladder operator. Counter-rotating drive components are removed with the
carrier by the frame construction.

Time evolution is classical fixed-step fourth-order Runge-Kutta; for
constant spans the one-step matrix is applied by matrix powers, which is
algebraically the same scheme. Step size is validated by halving until the
final-state fidelity moves by less than the tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .model import DeviceModel, build_hamiltonian, destroy
from .pulses import DriveTone, FlatTopGaussian, sample_envelope
from .spectrum import DressedSpectrum, diagonalize

__all__ = [
    "RotatingFrameSystem",
    "Trajectory",
    "ConditionalRates",
    "StepConvergenceError",
    "RateFitError",
    "build_cr_system",
    "evolve",
    "propagator",
    "cr_hamiltonian_tomography",
    "stark_shift_zi",
    "zx_vs_drive_curve",
    "curve_rows_to_csv",
]

NORM_TOL = 1e-8
STEP_FIDELITY_TOL = 1e-9
MAX_STEP_HALVINGS = 10


class StepConvergenceError(RuntimeError):
    """Step halving failed to reach the requested final-state fidelity."""


class RateFitError(RuntimeError):
    """A rate fit did not converge; carries the residual for diagnosis."""


@dataclass(frozen=True)
class RotatingFrameSystem:
    """Dressed-projected system in the target rotating frame.

    ``energies`` is the diagonal static part (dressed energies minus the
    frame frequency times the label excitation number, midpoint-shifted for
    conditioning). ``drive_operator`` is the Hermitized secular control
    coupling scaled per unit drive; the baked constant CR amplitude is
    ``omega_mhz`` with phase ``cr_phase_rad``.
    """

    energies: np.ndarray
    drive_operator: np.ndarray
    raising: tuple[np.ndarray, np.ndarray]
    labels: tuple[tuple[int, int], ...]
    excitation: np.ndarray
    frame_ghz: float
    control: int
    omega_mhz: float = 0.0
    cr_phase_rad: float = 0.0

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def target(self) -> int:
        return 1 - self.control

    def label_index(self, control_level: int, target_level: int) -> int:
        occ = [0, 0]
        occ[self.control] = control_level
        occ[self.target] = target_level
        return self.labels.index(tuple(occ))

    def static_hamiltonian(self) -> np.ndarray:
        h = np.diag(self.energies.astype(complex))
        if self.omega_mhz != 0.0:
            r = np.exp(-1j * self.cr_phase_rad) * self.raising[self.control]
            h = h + 0.5 * self.omega_mhz * 1e-3 * (r + r.conj().T)
        return h

    def with_drive(self, omega_mhz: float, cr_phase_rad: float | None = None) -> "RotatingFrameSystem":
        return RotatingFrameSystem(
            energies=self.energies,
            drive_operator=self.drive_operator,
            raising=self.raising,
            labels=self.labels,
            excitation=self.excitation,
            frame_ghz=self.frame_ghz,
            control=self.control,
            omega_mhz=omega_mhz,
            cr_phase_rad=self.cr_phase_rad if cr_phase_rad is None else cr_phase_rad,
        )


def _projected_raising(
    spectrum: DressedSpectrum, model: DeviceModel, qubit: int, labels, excitation
) -> np.ndarray:
    dims = model.dims
    mats = [np.eye(d) for d in dims]
    mats[qubit] = destroy(dims[qubit]).T
    adag = mats[0]
    for m in mats[1:]:
        adag = np.kron(adag, m)
    nmodes = len(dims)
    cols = np.stack(
        [spectrum.state(lab + (0,) * (nmodes - 2)) for lab in labels], axis=1
    )
    proj = cols.T @ adag @ cols
    mask = (excitation[:, None] - excitation[None, :]) == 1
    return proj * mask


def build_cr_system(
    model: DeviceModel,
    control: int = 0,
    omega_mhz: float = 0.0,
    cr_phase_rad: float = 0.0,
    transmon_levels: int = 3,
) -> RotatingFrameSystem:
    """Project the dressed device onto the driven-transmon manifold.

    The drive operator is the control-ladder coupling between dressed
    eigenstates, Hermitized by adding the conjugate transpose of its
    excitation-raising block; dressed components that do not change the
    label excitation number rotate at the carrier and are dropped with it.
    """
    spectrum = diagonalize(build_hamiltonian(model))
    n0 = min(transmon_levels, model.transmons[0].levels)
    n1 = min(transmon_levels, model.transmons[1].levels)
    labels = tuple((i, j) for i in range(n0) for j in range(n1))
    excitation = np.array([i + j for i, j in labels])
    nmodes = len(model.dims)
    energies = np.array(
        [spectrum.energy(lab + (0,) * (nmodes - 2)) for lab in labels]
    )
    target = 1 - control
    ground = (0,) * nmodes
    tgt1 = [0, 0]
    tgt1[target] = 1
    frame = spectrum.energy(tuple(tgt1) + (0,) * (nmodes - 2)) - spectrum.energy(ground)
    e_frame = energies - frame * excitation
    e_frame = e_frame - (e_frame.max() + e_frame.min()) / 2.0
    r0 = _projected_raising(spectrum, model, 0, labels, excitation)
    r1 = _projected_raising(spectrum, model, 1, labels, excitation)
    rc = (r0, r1)[control]
    return RotatingFrameSystem(
        energies=e_frame,
        drive_operator=rc + rc.conj().T,
        raising=(r0, r1),
        labels=labels,
        excitation=excitation,
        frame_ghz=frame,
        control=control,
        omega_mhz=omega_mhz,
        cr_phase_rad=cr_phase_rad,
    )


@dataclass(frozen=True)
class Trajectory:
    """Sampled state evolution with per-sample norms."""

    times_ns: np.ndarray
    states: np.ndarray  # (n_samples, dim) complex
    labels: tuple[tuple[int, int], ...]
    control: int
    step_ns: float = 0.0

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def target_bloch(self, control_level: int) -> np.ndarray:
        """(3, n) array of target <X>,<Y>,<Z> in the given control branch."""
        c = control_level
        occ0, occ1 = [0, 0], [0, 0]
        occ0[self.control] = c
        occ1[self.control] = c
        occ1[1 - self.control] = 1
        i0 = self.labels.index(tuple(occ0))
        i1 = self.labels.index(tuple(occ1))
        a0 = self.states[:, i0]
        a1 = self.states[:, i1]
        x = 2.0 * np.real(np.conj(a0) * a1)
        y = 2.0 * np.imag(np.conj(a0) * a1)
        z = np.abs(a0) ** 2 - np.abs(a1) ** 2
        return np.stack([x, y, z])


def _rk4_step_matrix(h_ghz: np.ndarray, step_ns: float) -> np.ndarray:
    """One fixed step of RK4 for psi' = -2i pi H psi as a matrix."""
    z = (-2j * np.pi * step_ns) * h_ghz
    m = np.eye(h_ghz.shape[0], dtype=complex)
    term = np.eye(h_ghz.shape[0], dtype=complex)
    for k in (1, 2, 3, 4):
        term = term @ z / k
        m = m + term
    return m


def _tone_coefficients(system: RotatingFrameSystem, tone: DriveTone, times_ns: np.ndarray):
    """Rotating-frame coefficient of the raising operator for one tone, GHz."""
    amps = np.asarray(sample_envelope(tone.envelope, times_ns), dtype=complex) * 1e-3
    delta = tone.carrier_ghz - system.frame_ghz
    phase = 2.0 * np.pi * delta * times_ns + tone.phase_rad
    return 0.5 * np.conj(amps) * np.exp(-1j * phase)


def _segments(system, tones, duration_ns):
    """Split [0, T] into shaped/constant spans where possible.

    Flat-top tones sharing the same plateau window and sitting exactly at the
    frame frequency give a constant Hamiltonian on the plateau.
    """
    if not tones:
        return [(0.0, duration_ns, "constant")]
    flat_ok = all(
        isinstance(t.envelope, FlatTopGaussian)
        and abs(t.carrier_ghz - system.frame_ghz) < 1e-12
        for t in tones
    )
    if flat_ok:
        rises = {4.0 * t.envelope.sigma_ns / 2.0 for t in tones}
        widths = {t.envelope.flat_width_ns for t in tones}
        durs = {t.envelope.duration_ns for t in tones}
        if len(rises) == 1 and len(widths) == 1 and len(durs) == 1:
            rise = rises.pop()
            width = widths.pop()
            if width > 0 and abs(durs.pop() - duration_ns) < 1e-9:
                return [
                    (0.0, rise, "shaped"),
                    (rise, rise + width, "constant"),
                    (rise + width, duration_ns, "shaped"),
                ]
    return [(0.0, duration_ns, "shaped")]


def _evolve_once(system, tones, duration_ns, psi0, step_ns, n_samples):
    """Fixed-step RK4 pass; returns (times, states) with uniform samples."""
    dim = system.dim
    h_static = system.static_hamiltonian()
    total_steps = max(1, int(np.ceil(duration_ns / step_ns)))
    h = duration_ns / total_steps
    stride = max(1, total_steps // max(n_samples, 1))
    psi = np.array(psi0, dtype=complex)
    out_t = [0.0]
    out_s = [psi.copy()]
    segments = _segments(system, tones, duration_ns)
    step_index = 0

    def record(t, psi):
        out_t.append(t)
        out_s.append(psi.copy() if psi.ndim == 1 else psi.copy())

    for t0, t1, kind in segments:
        n_seg = int(round((t1 - t0) / h))
        if n_seg <= 0:
            continue
        if kind == "constant":
            if tones:
                mid = 0.5 * (t0 + t1)
                h_eff = h_static.copy()
                for tone in tones:
                    c = _tone_coefficients(system, tone, np.array([mid]))[0]
                    r = system.raising[tone.qubit]
                    h_eff += c * r + np.conj(c) * r.conj().T
            else:
                h_eff = h_static
            m = _rk4_step_matrix(h_eff, h)
            m_stride = np.linalg.matrix_power(m, stride)
            done = 0
            while done < n_seg:
                k = min(stride, n_seg - done)
                psi = (m_stride if k == stride else np.linalg.matrix_power(m, k)) @ psi
                done += k
                step_index += k
                record(t0 + done * h, psi)
        else:
            # precompute tone coefficients on the substep grid
            ts = t0 + h * np.arange(n_seg + 1)
            half = t0 + h * (np.arange(n_seg) + 0.5)
            coefs = []
            for tone in tones:
                c_full = _tone_coefficients(system, tone, ts)
                c_half = _tone_coefficients(system, tone, half)
                coefs.append((c_full, c_half, system.raising[tone.qubit]))

            def h_at(idx_full=None, idx_half=None):
                m = h_static.copy()
                for c_full, c_half, r in coefs:
                    c = c_full[idx_full] if idx_full is not None else c_half[idx_half]
                    m += c * r + np.conj(c) * r.conj().T
                return m

            for j in range(n_seg):
                h_a = h_at(idx_full=j)
                h_b = h_at(idx_half=j)
                h_c = h_at(idx_full=j + 1)
                k1 = -2j * np.pi * (h_a @ psi)
                k2 = -2j * np.pi * (h_b @ (psi + 0.5 * h * k1))
                k3 = -2j * np.pi * (h_b @ (psi + 0.5 * h * k2))
                k4 = -2j * np.pi * (h_c @ (psi + h * k3))
                psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                step_index += 1
                if step_index % stride == 0 or j == n_seg - 1:
                    record(t0 + (j + 1) * h, psi)
    return np.array(out_t), np.stack(out_s)


def _auto_step(system, tones, duration_ns, tol):
    drive = abs(system.omega_mhz) * 1e-3
    for tone in tones:
        drive += abs(tone.envelope.amplitude_mhz) * 1e-3
    scale = float(np.max(np.abs(system.energies)) + drive)
    scale = max(scale, 1e-3)
    # RK4 global phase error ~ T (2 pi E)^5 h^4 / 120
    h = (120.0 * tol / (max(duration_ns, 1.0) * (2.0 * np.pi * scale) ** 5)) ** 0.25
    return min(h, duration_ns)


def evolve(
    system: RotatingFrameSystem,
    tones: list[DriveTone],
    duration_ns: float,
    initial,
    n_samples: int = 200,
    step_ns: float | None = None,
    fidelity_tol: float = STEP_FIDELITY_TOL,
    validate_step: bool = True,
) -> Trajectory:
    """Integrate the driven Schrodinger equation with fixed-step RK4.

    The step is halved until the final-state fidelity changes by less than
    ``fidelity_tol``; failure to converge raises StepConvergenceError.
    """
    psi0 = np.asarray(initial, dtype=complex)
    if psi0.shape[-1] != system.dim and psi0.shape[0] != system.dim:
        raise ValueError(f"initial state has wrong dimension for {system.dim}-state system")
    h = step_ns if step_ns is not None else _auto_step(system, tones, duration_ns, fidelity_tol)
    times, states = _evolve_once(system, tones, duration_ns, psi0, h, n_samples)
    if validate_step:
        for _ in range(MAX_STEP_HALVINGS):
            _, states2 = _evolve_once(system, tones, duration_ns, psi0, h / 2.0, 1)
            a, b = states[-1].ravel(), states2[-1].ravel()
            fid_gap = abs(1.0 - abs(np.vdot(a, b)) / max(np.linalg.norm(a) * np.linalg.norm(b), 1e-300))
            if fid_gap < fidelity_tol:
                break
            h /= 2.0
            times, states = _evolve_once(system, tones, duration_ns, psi0, h, n_samples)
        else:
            raise StepConvergenceError(
                f"step halving did not converge below {fidelity_tol:g} (last gap {fid_gap:g})"
            )
    return Trajectory(
        times_ns=times,
        states=states,
        labels=system.labels,
        control=system.control,
        step_ns=float(duration_ns / max(1, int(np.ceil(duration_ns / h)))),
    )


def propagator(
    system: RotatingFrameSystem,
    tones: list[DriveTone],
    duration_ns: float,
    step_ns: float | None = None,
    fidelity_tol: float = STEP_FIDELITY_TOL,
    validate_step: bool = False,
) -> np.ndarray:
    """Full propagator over [0, T] by evolving the identity matrix."""
    traj = evolve(
        system,
        tones,
        duration_ns,
        np.eye(system.dim, dtype=complex),
        n_samples=1,
        step_ns=step_ns,
        fidelity_tol=fidelity_tol,
        validate_step=validate_step,
    )
    return traj.states[-1]


@dataclass(frozen=True)
class ConditionalRates:
    """Six Hamiltonian-tomography coefficients, MHz.

    zx/zy/ix/iy come from the conditional target drive vectors; iz and zi
    are the half-sum and half-difference of the conditional z rates (the
    half-difference reduces to half the static ZZ at zero drive). The
    drive-induced control shift is measured separately (stark_shift_zi).
    """

    zx: float
    zy: float
    zi: float
    ix: float
    iy: float
    iz: float
    fit_residual: float = 0.0
    qubit_subspace_norm: float = 1.0


def _bloch_model(omega_mhz: np.ndarray, times_ns: np.ndarray) -> np.ndarray:
    """Generalized-Rabi trajectory of r0 = +z: precession about omega."""
    w = np.asarray(omega_mhz, dtype=float) * 1e-3
    norm = np.linalg.norm(w)
    if norm < 1e-300:
        out = np.zeros((3, times_ns.size))
        out[2] = 1.0
        return out
    n = w / norm
    ang = 2.0 * np.pi * norm * times_ns
    r0 = np.array([0.0, 0.0, 1.0])
    para = np.outer(n, np.full_like(times_ns, n @ r0))
    perp = r0 - n * (n @ r0)
    cross = np.cross(n, r0)
    return para + np.outer(perp, np.cos(ang)) + np.outer(cross, np.sin(ang))


def _fit_conditional_rate(times_ns: np.ndarray, bloch: np.ndarray) -> tuple[np.ndarray, float]:
    """Fit (wx, wy, wz) in MHz from a sampled target Bloch trajectory."""
    dt = np.diff(times_ns)
    dr = (bloch[:, 1:] - bloch[:, :-1]) / dt
    rm = 0.5 * (bloch[:, 1:] + bloch[:, :-1])
    # dr/dt = 2 pi (w x r): linear least squares for the initial guess
    zeros = np.zeros_like(rm[0])
    a = np.concatenate(
        [
            np.stack([zeros, rm[2], -rm[1]], axis=1),
            np.stack([-rm[2], zeros, rm[0]], axis=1),
            np.stack([rm[1], -rm[0], zeros], axis=1),
        ]
    )
    b = np.concatenate([dr[0], dr[1], dr[2]]) / (2.0 * np.pi)
    guess, *_ = np.linalg.lstsq(a, b, rcond=None)
    guess_mhz = guess * 1e3

    def resid(w):
        return (_bloch_model(w, times_ns) - bloch).ravel()

    sol = least_squares(resid, guess_mhz, method="lm", xtol=1e-14, ftol=1e-14)
    residual = float(np.sqrt(np.mean(sol.fun**2)))
    if residual > 0.05:
        raise RateFitError(f"generalized-Rabi fit residual {residual:.3g} too large")
    return sol.x, residual


def _conditional_drive_scale(system: RotatingFrameSystem, omega_mhz: float, control_level: int) -> float:
    i0 = system.label_index(control_level, 0)
    i1 = system.label_index(control_level, 1)
    d = abs(system.drive_operator[i0, i1])
    return max(abs(omega_mhz) * d, 1e-6)


def cr_hamiltonian_tomography(
    model_or_system,
    control: int = 0,
    omega_mhz: float = 0.0,
    max_time_ns: float | None = None,
    cr_phase_rad: float = 0.0,
    n_cycles: float = 3.0,
    n_samples: int = 400,
) -> ConditionalRates:
    """Conditional interaction rates from target trajectories.

    The target Bloch vector is evolved under a constant-amplitude CR tone
    with the control prepared in each basis state and fit to generalized-Rabi
    precession; the six coefficients are the half-sums and half-differences
    of the fitted conditional drive vectors.
    """
    system = _as_system(model_or_system, control, omega_mhz, cr_phase_rad)
    rates = {}
    resid = 0.0
    min_norm = 1.0
    for c in (0, 1):
        scale = _conditional_drive_scale(system, system.omega_mhz, c)
        horizon = n_cycles / (scale * 1e-3)
        if max_time_ns is not None:
            horizon = min(horizon, max_time_ns)
        psi0 = np.zeros(system.dim, dtype=complex)
        psi0[system.label_index(c, 0)] = 1.0
        traj = evolve(system, [], horizon, psi0, n_samples=n_samples)
        bloch = traj.target_bloch(c)
        qnorm = np.sqrt(np.sum(bloch**2, axis=0) + 1e-300)
        # qubit-subspace norm: population retained in the two tracked levels
        i0 = system.label_index(c, 0)
        i1 = system.label_index(c, 1)
        pop = np.abs(traj.states[:, i0]) ** 2 + np.abs(traj.states[:, i1]) ** 2
        min_norm = min(min_norm, float(np.min(pop)))
        w, r = _fit_conditional_rate(traj.times_ns, bloch)
        rates[c] = w
        resid = max(resid, r)
    w0, w1 = rates[0], rates[1]
    return ConditionalRates(
        zx=float((w0[0] - w1[0]) / 2),
        zy=float((w0[1] - w1[1]) / 2),
        zi=float((w0[2] - w1[2]) / 2),
        ix=float((w0[0] + w1[0]) / 2),
        iy=float((w0[1] + w1[1]) / 2),
        iz=float((w0[2] + w1[2]) / 2),
        fit_residual=resid,
        qubit_subspace_norm=min_norm,
    )


def _as_system(model_or_system, control, omega_mhz, cr_phase_rad) -> RotatingFrameSystem:
    if isinstance(model_or_system, RotatingFrameSystem):
        sys_ = model_or_system
        if omega_mhz or cr_phase_rad != sys_.cr_phase_rad:
            sys_ = sys_.with_drive(omega_mhz or sys_.omega_mhz, cr_phase_rad)
        return sys_
    return build_cr_system(model_or_system, control, omega_mhz, cr_phase_rad)


def _ramsey_signal(system: RotatingFrameSystem, n_wobble: float, samples_per_wobble: int):
    """Control-coherence signal under the baked constant CR drive."""
    d0 = _conditional_drive_scale(system, system.omega_mhz, 0)
    d1 = _conditional_drive_scale(system, system.omega_mhz, 1)
    wobble = max(d0, d1) * 1e-3  # GHz
    horizon = n_wobble / wobble
    n_samples = int(n_wobble * samples_per_wobble)
    i00 = system.label_index(0, 0)
    i10 = system.label_index(1, 0)
    psi0 = np.zeros(system.dim, dtype=complex)
    psi0[i00] = 1.0 / np.sqrt(2.0)
    psi0[i10] = 1.0 / np.sqrt(2.0)
    traj = evolve(system, [], horizon, psi0, n_samples=n_samples)
    n_target = max(j for _, j in [(0, lab[system.target]) for lab in system.labels]) + 1
    pairs = [(system.label_index(0, t), system.label_index(1, t)) for t in range(n_target)]
    sig = np.zeros(traj.times_ns.size, dtype=complex)
    for p0, p1 in pairs:
        sig += np.conj(traj.states[:, p0]) * traj.states[:, p1]
    return traj.times_ns, sig


def _fit_line_spectrum(times_ns, signal, guesses_ghz):
    """Variable-projection fit of signal ~ sum_k A_k exp(2i pi f_k t)."""

    def amplitudes(freqs):
        basis = np.exp(2j * np.pi * np.outer(times_ns, freqs))
        coef, *_ = np.linalg.lstsq(basis, signal, rcond=None)
        return coef, basis

    def resid(freqs):
        coef, basis = amplitudes(freqs)
        r = basis @ coef - signal
        return np.concatenate([r.real, r.imag])

    scale = max(np.max(np.abs(signal)), 1e-12)
    sol = least_squares(resid, np.asarray(guesses_ghz, dtype=float), method="lm", xtol=1e-15, ftol=1e-15)
    rms = float(np.sqrt(np.mean(sol.fun**2))) / scale
    coef, _ = amplitudes(sol.x)
    return sol.x, coef, rms


def _ramsey_line_structure(system: RotatingFrameSystem, amp_floor: float = 1e-3):
    """Predicted line frequencies and weights of the Ramsey coherence signal.

    The driven Hamiltonian is constant, so the coherence is an exact sum of
    exponentials at driven-eigenvalue differences. Returns (freqs, comp_mask)
    where freqs collects the four computational conditional lines plus every
    other pair whose predicted amplitude clears the floor; frequencies in GHz
    with the coherence sign convention exp(-2i pi f t).
    """
    from .spectrum import assign_dressed_labels

    h = system.static_hamiltonian()
    evals, evecs = np.linalg.eigh(h)
    assignment, _ = assign_dressed_labels(evecs, system.labels)
    i00 = system.label_index(0, 0)
    i10 = system.label_index(1, 0)
    psi0 = np.zeros(system.dim, dtype=complex)
    psi0[i00] = 1.0 / np.sqrt(2.0)
    psi0[i10] = 1.0 / np.sqrt(2.0)
    c = evecs.conj().T @ psi0
    n_target = max(lab[system.target] for lab in system.labels) + 1
    rows0 = [system.label_index(0, t) for t in range(n_target)]
    rows1 = [system.label_index(1, t) for t in range(n_target)]
    m0 = evecs[rows0, :]  # overlap of frame (0,t) with driven levels
    m1 = evecs[rows1, :]
    # amplitude of the (j, k) line: sum_t conj(<0t|Dj> c_j) <1t|Dk> c_k
    amp = np.einsum("tj,tk->jk", np.conj(m0 * c[None, :]), m1 * c[None, :])
    comp_pairs = {
        (assignment[system.label_index(0, ti)], assignment[system.label_index(1, tj)])
        for ti in (0, 1)
        for tj in (0, 1)
    }
    freqs, comps = [], []
    floor = amp_floor * np.max(np.abs(amp))
    for j in range(system.dim):
        for k in range(system.dim):
            pair = (j, k)
            is_comp = pair in comp_pairs
            if not is_comp and np.abs(amp[j, k]) < floor:
                continue
            freqs.append(evals[k] - evals[j])
            comps.append(is_comp)
    return np.array(freqs), np.array(comps)


def stark_shift_zi(
    model_or_system,
    control: int = 0,
    omega_mhz: float = 0.0,
    n_wobble: float = 60.0,
    samples_per_wobble: int = 48,
) -> float:
    """Drive-induced control frequency shift (signed, MHz) by simulated Ramsey.

    The control is prepared in superposition, the constant CR tone applied
    for a span of many conditional-rotation periods, and the accumulated
    phase rate of the control coherence fitted. The conditional target
    precession splits the coherence into a four-line spectrum symmetric
    about the carrier, so the fit tracks the four lines (seeded from the
    driven level structure) and reads the carrier off as their mean; the
    undriven rate is subtracted.
    """
    system = _as_system(model_or_system, control, omega_mhz, 0.0)
    if system.omega_mhz == 0.0:
        return 0.0
    times, sig = _ramsey_signal(system, n_wobble, samples_per_wobble)
    # remove the static mean control frequency before fitting
    i = system.label_index
    static_mean = 0.5 * (
        (system.energies[i(1, 0)] - system.energies[i(0, 0)])
        + (system.energies[i(1, 1)] - system.energies[i(0, 1)])
    )
    sig = sig * np.exp(2j * np.pi * static_mean * times)
    grid, comp = _ramsey_line_structure(system)
    guesses = -(grid - static_mean)
    # fold into the sampling band (exact for uniformly sampled exponentials)
    dt = times[1] - times[0]
    band = 1.0 / dt
    guesses = (guesses + band / 2.0) % band - band / 2.0
    # drop non-computational lines that nearly duplicate a kept line
    df = 1.0 / times[-1]
    order = np.concatenate([np.flatnonzero(comp), np.flatnonzero(~comp)])
    kept: list[int] = []
    for idx in order:
        if comp[idx] or all(abs(guesses[idx] - guesses[k]) > 2.5 * df for k in kept):
            kept.append(int(idx))
    kept = sorted(kept)
    freqs, coef, rms = _fit_line_spectrum(times, sig, guesses[kept])
    if rms > 0.05:
        raise RateFitError(f"Ramsey line fit residual {rms:.3g} too large")
    # the four computational lines form {carrier +- u +- v}: plain mean
    carrier = float(np.mean(freqs[[kept.index(i) for i in np.flatnonzero(comp)]]))
    return -carrier * 1e3


def zx_vs_drive_curve(
    model: DeviceModel,
    control: int,
    omegas_mhz: list[float],
    cr_phase_rad: float = 0.0,
) -> list[dict]:
    """Tomography plus Stark shift per drive amplitude, CSV-ready rows.

    The zi column holds the Ramsey-measured control Stark shift; the other
    five coefficients come from target Hamiltonian tomography.
    """
    system = build_cr_system(model, control)
    rows = []
    for om in omegas_mhz:
        if om == 0.0:
            rows.append(
                dict(omega_mhz=0.0, zx_mhz=0.0, zy_mhz=0.0, zi_mhz=0.0, ix_mhz=0.0, iy_mhz=0.0, iz_mhz=0.0)
            )
            continue
        sys_om = system.with_drive(om, cr_phase_rad)
        rates = cr_hamiltonian_tomography(sys_om)
        zi = stark_shift_zi(sys_om)
        rows.append(
            dict(
                omega_mhz=float(om),
                zx_mhz=rates.zx,
                zy_mhz=rates.zy,
                zi_mhz=zi,
                ix_mhz=rates.ix,
                iy_mhz=rates.iy,
                iz_mhz=rates.iz,
            )
        )
    return rows


CURVE_CSV_HEADER = "omega_mhz,zx_mhz,zy_mhz,zi_mhz,ix_mhz,iy_mhz,iz_mhz"


def curve_rows_to_csv(rows: list[dict]) -> str:
    lines = [CURVE_CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                f"{r[k]:.9g}"
                for k in ("omega_mhz", "zx_mhz", "zy_mhz", "zi_mhz", "ix_mhz", "iy_mhz", "iz_mhz")
            )
        )
    return "\n".join(lines) + "\n"
