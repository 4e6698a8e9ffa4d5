"""Two-stage nonlinear least-squares range estimation.

Stage one locates the principal tone of the envelope-weighted observation
with a zero-padded FFT and recovers the matching phase in closed form;
stage two polishes (frequency, phase) with a safeguarded Newton ascent of
the amplitude-eliminated objective.  A block generalization handles several
simultaneous echoes; a dechirp-based path covers the classic receiver.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c

from atomsense.errors import EstimationError, ValidationError
from atomsense.signal import ClassicRecord, ReceivedRecord

ZERO_PAD = 8
DENOM_FLOOR = 1e-30


@dataclass
class NewtonOptions:
    rel_tol: float = 1e-9
    max_iter: int = 50
    max_backtracks: int = 12


@dataclass
class RangeEstimate:
    """Single-target estimate with solver diagnostics."""

    h_hat: float
    omega_hat: float
    phi_hat: float
    tau_hat: float
    range_hat: float
    q_value: float
    q_coarse: float
    iterations: int
    converged: bool

    def __post_init__(self):
        if self.q_value < self.q_coarse * (1.0 - 1e-12) - 1e-300:
            raise ValidationError("refined objective fell below its initialization")

    def to_dict(self, record: ReceivedRecord | None = None):
        out = {
            "tau_hat": self.tau_hat,
            "range_hat": self.range_hat,
            "h_hat": self.h_hat,
            "q_value": self.q_value,
            "iterations": self.iterations,
            "converged": self.converged,
        }
        if record is not None:
            out["seed"] = record.seed
            out["truth_tau"] = record.primary_truth.tau
        return out


@dataclass
class MultiTargetEstimate:
    """Per-target tuples plus a flag for unresolvable requests."""

    targets: list
    partial: bool = False
    diagnostics: dict = field(default_factory=dict)


class _Sums:
    """Dot-product workspace for the objective and its derivatives."""

    def __init__(self, record: ReceivedRecord):
        t = record.t_grid
        dt = record.delta_t
        w = record.y_norm * record.envelope * dt
        v = record.envelope**2 * dt
        self.t = t
        self.dt = dt
        self.w0, self.w1, self.w2 = w, w * t, w * t * t
        self.v0, self.v1, self.v2 = v, v * t, v * t * t

    def trig(self, omega, phi):
        arg = omega * self.t + phi
        c1 = np.cos(arg)
        s1 = np.sin(arg)
        c2 = 1.0 - 2.0 * s1 * s1
        s2 = 2.0 * s1 * c1
        return c1, s1, c2, s2


def _q_parts(sums: _Sums, omega, phi):
    c1, s1, c2, s2 = sums.trig(omega, phi)
    a = sums.w0 @ c1
    d = 0.5 * (sums.v0.sum() + sums.v0 @ c2)
    return a, d, (c1, s1, c2, s2)


def objective_q(omega_hat, phi_hat, record: ReceivedRecord):
    """Amplitude-eliminated NLS objective at (omega, phi)."""
    sums = _Sums(record)
    a, d, _ = _q_parts(sums, omega_hat, phi_hat)
    if d < DENOM_FLOOR:
        raise EstimationError("degenerate template energy; envelope vanishes")
    return a * a / d


def weighted_spectrum(record: ReceivedRecord, zero_pad=ZERO_PAD):
    """Zero-padded spectrum of the envelope-weighted observation.

    Returns the angular bin spacing and the one-sided spectrum scaled to
    approximate the continuous correlation integral.
    """
    from scipy.fft import rfft

    x = record.y_norm * record.envelope
    n = x.size * zero_pad
    spec = rfft(x, n=n) * record.delta_t
    bin_w = 2.0 * np.pi / (n * record.delta_t)
    return bin_w, spec


def _parabolic(mag, idx):
    if idx <= 0 or idx >= mag.size - 1:
        return 0.0
    m0, m1, m2 = mag[idx - 1], mag[idx], mag[idx + 1]
    denom = m0 - 2.0 * m1 + m2
    if denom == 0.0:
        return 0.0
    return float(np.clip(0.5 * (m0 - m2) / denom, -0.5, 0.5))


def coarse_estimate(record: ReceivedRecord, zero_pad=ZERO_PAD):
    """FFT peak of the weighted observation plus closed-form phase.

    Returns ``(omega0, phi0, diagnostics)``; the phase is the four-quadrant
    angle that maximizes the correlation against the cosine template.  Equal
    peak magnitudes resolve to the lowest frequency and are counted in the
    diagnostics.
    """
    if record.t_grid.size == 0:
        raise EstimationError("empty record")
    bin_w, spec = weighted_spectrum(record, zero_pad)
    mag = np.abs(spec)
    search = mag[1:-1]
    idx = int(np.argmax(search)) + 1
    ties = int(np.count_nonzero(search == search[idx - 1])) - 1
    shift = _parabolic(mag, idx)
    omega0 = (idx + shift) * bin_w
    # Re-evaluate the correlation at the interpolated frequency.
    w = record.y_norm * record.envelope * record.delta_t
    arg = omega0 * record.t_grid
    z = complex(w @ np.cos(arg), w @ np.sin(arg))
    phi0 = float(-np.angle(z))
    return float(omega0), phi0, {"peak_ties": ties, "bin_width": bin_w}


def amplitude_estimate(record: ReceivedRecord, omega_hat, phi_hat):
    """Closed-form least-squares amplitude at fixed (omega, phi)."""
    sums = _Sums(record)
    a, d, _ = _q_parts(sums, omega_hat, phi_hat)
    if d < DENOM_FLOOR:
        raise EstimationError("degenerate template energy; envelope vanishes")
    return a / d


def _q_only(sums: _Sums, omega, phi):
    arg = omega * sums.t + phi
    c1 = np.cos(arg)
    a = sums.w0 @ c1
    d = 0.5 * (sums.v0.sum() + sums.v0 @ (2.0 * c1 * c1 - 1.0))
    return a * a / d if d > DENOM_FLOOR else np.nan


def _grad_hess(sums: _Sums, omega, phi):
    a, d, (c1, s1, c2, s2) = _q_parts(sums, omega, phi)
    a_w = -(sums.w1 @ s1)
    a_p = -(sums.w0 @ s1)
    a_ww = -(sums.w2 @ c1)
    a_wp = -(sums.w1 @ c1)
    a_pp = -a
    d_w = -0.5 * (sums.v1 @ s2) * 2.0
    d_p = -0.5 * (sums.v0 @ s2) * 2.0
    d_ww = -(sums.v2 @ c2) * 2.0
    d_wp = -(sums.v1 @ c2) * 2.0
    d_pp = -(sums.v0 @ c2) * 2.0
    q = a * a / d
    g = np.array([
        2.0 * a * a_w / d - q * d_w / d,
        2.0 * a * a_p / d - q * d_p / d,
    ])

    def hess(ax, ay, axy, dx, dy, dxy):
        return (
            2.0 * (ax * ay + a * axy) / d
            - 2.0 * a * (ax * dy + ay * dx) / d**2
            - a * a * dxy / d**2
            + 2.0 * a * a * dx * dy / d**3
        )

    h = np.array([
        [hess(a_w, a_w, a_ww, d_w, d_w, d_ww), hess(a_w, a_p, a_wp, d_w, d_p, d_wp)],
        [hess(a_w, a_p, a_wp, d_w, d_p, d_wp), hess(a_p, a_p, a_pp, d_p, d_p, d_pp)],
    ])
    return q, g, h, d


def _stationarity_polish(sums, x, q, g, h, rounds=3):
    """Drive the gradient to machine level after the ascent loop stops.

    Objective comparisons saturate near sqrt(eps) relative, which leaves a
    ~1e-8 rad phase floor; the Newton decrement keeps resolving below that,
    so accept a few extra steps while it strictly shrinks.
    """

    def decrement(gv, hv):
        return abs(gv[0]) / np.sqrt(max(abs(hv[0, 0]), DENOM_FLOOR)) + abs(
            gv[1]
        ) / np.sqrt(max(abs(hv[1, 1]), DENOM_FLOOR))

    dec = decrement(g, h)
    for _ in range(rounds):
        if not (h[0, 0] < 0.0 and np.linalg.det(h) > 0.0):
            break
        cand = x - np.linalg.solve(h, g)
        qc, gc, hc, _ = _grad_hess(sums, cand[0], cand[1])
        if not (np.isfinite(qc) and np.all(np.isfinite(gc))):
            break
        dec_c = decrement(gc, hc)
        if dec_c < 0.5 * dec:
            x, q, g, h, dec = cand, qc, gc, hc, dec_c
        else:
            break
    return x, q, g, h


def newton_refine(record: ReceivedRecord, omega_hat0, phi_hat0,
                  opts: NewtonOptions | None = None) -> RangeEstimate:
    """Safeguarded Newton ascent of the objective from the coarse point.

    Newton steps are taken only where the Hessian is negative definite;
    otherwise a diagonally scaled gradient step is used.  Candidate steps
    are backtracked and accepted only on a relative objective improvement.
    """
    opts = opts or NewtonOptions()
    sums = _Sums(record)
    x = np.array([float(omega_hat0), float(phi_hat0)])
    q, g, h, d = _grad_hess(sums, x[0], x[1])
    if d < DENOM_FLOOR:
        raise EstimationError("degenerate template energy; envelope vanishes")
    q_coarse = q
    accepted = 0
    converged = False
    for _ in range(opts.max_iter):
        if not (np.isfinite(q) and np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
            raise EstimationError(
                "non-finite objective during refinement",
                state={"x": x.copy(), "q": q, "grad": g.copy()},
            )
        neg_def = h[0, 0] < 0.0 and np.linalg.det(h) > 0.0
        if neg_def:
            step = -np.linalg.solve(h, g)
        else:
            scale = np.array([max(abs(h[0, 0]), DENOM_FLOOR), max(abs(h[1, 1]), DENOM_FLOOR)])
            step = g / scale
        improved = False
        for bt in range(opts.max_backtracks):
            cand = x + step
            qc = _q_only(sums, cand[0], cand[1])
            if np.isfinite(qc) and qc >= q + opts.rel_tol * abs(q):
                x = cand
                q, g, h, _ = _grad_hess(sums, x[0], x[1])
                accepted += 1
                improved = True
                break
            if neg_def and bt == 0 and np.isfinite(qc) and qc >= q:
                # Near a quadratic maximum any fractional Newton step gains
                # less than the full step; no point backtracking further.
                break
            step = 0.5 * step
        if not improved:
            converged = True
            break
    if accepted:
        x, q, g, h = _stationarity_polish(sums, x, q, g, h)
    omega, phi = float(x[0]), float(np.mod(x[1], 2.0 * np.pi))
    a, d, _ = _q_parts(sums, omega, phi)
    h_hat = a / d
    tau_hat = omega / record.sweep_slope + record.tau_ref
    q = max(q, q_coarse)
    return RangeEstimate(
        h_hat=h_hat,
        omega_hat=omega,
        phi_hat=phi,
        tau_hat=tau_hat,
        range_hat=0.5 * c * tau_hat,
        q_value=q,
        q_coarse=q_coarse,
        iterations=accepted,
        converged=converged,
    )


def estimate_range(record: ReceivedRecord, opts: NewtonOptions | None = None,
                   zero_pad=ZERO_PAD) -> RangeEstimate:
    """Coarse stage plus Newton refinement."""
    omega0, phi0, _ = coarse_estimate(record, zero_pad)
    return newton_refine(record, omega0, phi0, opts)


# ---------------------------------------------------------------------------
# Multi-target generalization


def _multi_design(record: ReceivedRecord, omegas, phis):
    t = record.t_grid
    dt = record.delta_t
    m = len(omegas)
    basis = [record.envelope * np.cos(omegas[i] * t + phis[i]) for i in range(m)]
    gram = np.empty((m, m))
    b = np.empty(m)
    for i in range(m):
        b[i] = (record.y_norm @ basis[i]) * dt
        for j in range(i, m):
            gram[i, j] = gram[j, i] = (basis[i] @ basis[j]) * dt
    return gram, b


def multi_objective(record: ReceivedRecord, omegas, phis):
    """Explained energy with all amplitudes eliminated in closed form."""
    gram, b = _multi_design(record, omegas, phis)
    try:
        sol = np.linalg.solve(gram, b)
    except np.linalg.LinAlgError as exc:
        raise EstimationError("singular multi-target design") from exc
    return float(b @ sol)


def _multi_grad(record: ReceivedRecord, x):
    m = x.size // 2
    omegas, phis = x[:m], x[m:]
    t = record.t_grid
    dt = record.delta_t
    basis = [record.envelope * np.cos(omegas[i] * t + phis[i]) for i in range(m)]
    dw = [-record.envelope * t * np.sin(omegas[i] * t + phis[i]) for i in range(m)]
    dp = [-record.envelope * np.sin(omegas[i] * t + phis[i]) for i in range(m)]
    gram = np.empty((m, m))
    b = np.empty(m)
    for i in range(m):
        b[i] = (record.y_norm @ basis[i]) * dt
        for j in range(i, m):
            gram[i, j] = gram[j, i] = (basis[i] @ basis[j]) * dt
    sol = np.linalg.solve(gram, b)
    grad = np.empty(2 * m)
    for kind, dbasis in ((0, dw), (1, dp)):
        for i in range(m):
            db = np.zeros(m)
            dg = np.zeros((m, m))
            db[i] = (record.y_norm @ dbasis[i]) * dt
            for j in range(m):
                dg[i, j] += (dbasis[i] @ basis[j]) * dt
                dg[j, i] = dg[i, j] if j != i else dg[i, j]
            dg[i, i] = 2.0 * (dbasis[i] @ basis[i]) * dt
            grad[kind * m + i] = 2.0 * db @ sol - sol @ dg @ sol
    return float(b @ sol), grad, sol


def coarse_multi(record: ReceivedRecord, m_targets, zero_pad=ZERO_PAD,
                 exclusion_bins=4):
    """Greedy top-M spectral peaks with a neighborhood exclusion window."""
    bin_w, spec = weighted_spectrum(record, zero_pad)
    mag = np.abs(spec)
    mag[0] = 0.0
    mag[-1] = 0.0
    floor = np.median(mag[1:-1])
    peaks = []
    work = mag.copy()
    for _ in range(m_targets):
        idx = int(np.argmax(work))
        if work[idx] <= 0.0:
            break
        peaks.append((idx, mag[idx]))
        lo = max(0, idx - exclusion_bins)
        hi = min(work.size, idx + exclusion_bins + 1)
        work[lo:hi] = 0.0
    resolved = [(i, v) for (i, v) in peaks if v > 10.0 * floor]
    partial = len(resolved) < m_targets
    use = resolved if resolved else peaks[:1]
    omegas, phis = [], []
    wvec = record.y_norm * record.envelope * record.delta_t
    for idx, _v in use:
        shift = _parabolic(mag, idx)
        w0 = (idx + shift) * bin_w
        arg = w0 * record.t_grid
        z = complex(wvec @ np.cos(arg), wvec @ np.sin(arg))
        omegas.append(float(w0))
        phis.append(float(-np.angle(z)))
    return omegas, phis, partial


def estimate_multi(record: ReceivedRecord, m_targets, opts: NewtonOptions | None = None,
                   zero_pad=ZERO_PAD) -> MultiTargetEstimate:
    """Joint estimation of ``m_targets`` echoes.

    The single-target request delegates to the scalar pipeline so both
    paths stay numerically identical; for several targets the Newton stage
    runs on the stacked (frequencies, phases) vector with amplitudes
    eliminated through the Gram system.
    """
    if m_targets < 1:
        raise ValidationError("m_targets must be at least 1")
    opts = opts or NewtonOptions()
    if m_targets == 1:
        est = estimate_range(record, opts, zero_pad)
        return MultiTargetEstimate(
            targets=[(est.h_hat, est.omega_hat, est.phi_hat, est.range_hat)],
            partial=False,
            diagnostics={"single": est},
        )
    omegas, phis, partial = coarse_multi(record, m_targets, zero_pad)
    x = np.array(omegas + phis)
    q, grad, _ = _multi_grad(record, x)
    eps_w = 1e-7 * max(abs(v) for v in omegas)
    for _ in range(opts.max_iter):
        m = len(omegas)
        hess = np.empty((2 * m, 2 * m))
        for j in range(2 * m):
            step = eps_w if j < m else 1e-6
            xp = x.copy(); xp[j] += step
            xm = x.copy(); xm[j] -= step
            _, gp, _ = _multi_grad(record, xp)
            _, gm, _ = _multi_grad(record, xm)
            hess[:, j] = (gp - gm) / (2.0 * step)
        hess = 0.5 * (hess + hess.T)
        try:
            step_vec = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step_vec = grad / np.maximum(np.abs(np.diag(hess)), DENOM_FLOOR)
        improved = False
        for _bt in range(opts.max_backtracks):
            cand = x + step_vec
            qc, gc, _ = _multi_grad(record, cand)
            if np.isfinite(qc) and qc >= q + opts.rel_tol * abs(q):
                x, q, grad = cand, qc, gc
                improved = True
                break
            step_vec = 0.5 * step_vec
        if not improved:
            break
    m = len(omegas)
    _, _, amps = _multi_grad(record, x)
    targets = []
    for i in range(m):
        h_i, w_i, p_i = float(amps[i]), float(x[i]), float(np.mod(x[m + i], 2 * np.pi))
        if h_i < 0.0:
            h_i, p_i = -h_i, float(np.mod(p_i + np.pi, 2 * np.pi))
        tau_i = w_i / record.sweep_slope + record.tau_ref
        targets.append((h_i, w_i, p_i, 0.5 * c * tau_i))
    targets.sort(key=lambda tt: tt[1])
    return MultiTargetEstimate(targets=targets, partial=partial)


# ---------------------------------------------------------------------------
# Classic-receiver baseline


@dataclass
class ClassicEstimate:
    tau_hat: float
    range_hat: float
    amp_hat: float
    iterations: int


def estimate_classic(record: ClassicRecord, zero_pad=ZERO_PAD, max_iter=20) -> ClassicEstimate:
    """Dechirp the coherent record and refine the residual tone frequency.

    Multiplying by the conjugate transmit chirp leaves a single tone at
    ``-slope * tau``; its frequency is found by a zero-padded FFT peak with
    parabolic interpolation and polished by 1-d Newton on the periodogram.
    """
    t = record.t_grid
    dt = record.delta_t
    ref_phase = 0.5 * record.sweep_slope * t * t + record.omega0 * t
    z = record.y0 * np.exp(-1j * ref_phase)
    n = t.size * zero_pad
    spec = np.fft.fft(z, n=n)
    freqs = 2.0 * np.pi * np.fft.fftfreq(n, dt)
    mag = np.abs(spec)
    idx = int(np.argmax(mag))
    left, right = (idx - 1) % n, (idx + 1) % n
    denom = mag[left] - 2.0 * mag[idx] + mag[right]
    shift = 0.0 if denom == 0.0 else float(np.clip(0.5 * (mag[left] - mag[right]) / denom, -0.5, 0.5))
    omega = freqs[idx] + shift * (freqs[1] - freqs[0])
    zt = z * dt
    iters = 0
    for _ in range(max_iter):
        ph = np.exp(-1j * omega * t)
        z0 = zt @ ph
        z1 = -1j * ((zt * t) @ ph)
        z2 = -((zt * t * t) @ ph)
        g = 2.0 * np.real(np.conj(z0) * z1)
        hh = 2.0 * (np.real(np.conj(z0) * z2) + abs(z1) ** 2)
        if hh >= 0.0 or not np.isfinite(g):
            break
        step = -g / hh
        omega += step
        iters += 1
        if abs(step) < 1e-12 * max(abs(omega), 1.0):
            break
    tau_hat = -omega / record.sweep_slope
    amp = abs(zt @ np.exp(-1j * omega * t)) / (t.size * dt)
    return ClassicEstimate(tau_hat=float(tau_hat), range_hat=float(0.5 * c * tau_hat),
                           amp_hat=float(amp), iterations=iters)


def estimates_to_jsonl(estimates, records, path):
    """Serialize (estimate, record) pairs as one JSON object per line."""
    with open(path, "w") as fh:
        for est, rec in zip(estimates, records):
            fh.write(json.dumps(est.to_dict(rec), sort_keys=True) + "\n")
