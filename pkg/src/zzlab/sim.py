"""Pseudospectral integration of the planar Swift-Hohenberg equation.

Integrates u_t = -(1+Laplacian)^2 u + eps^2 u - u^3 on a periodic rectangle
holding an integer number of roll periods in x, with an ETD1 scheme: the
linear part is applied exactly through its spectral multiplier and the cubic
term enters through the phi1 weight, so steady states of the truncated system
are exact fixed points of the stepper and the pure linear flow is reproduced
to machine precision per mode.

The decay experiment perturbs an embedded roll with a small random field
localized in both x and y (localization is what produces the algebraic decay:
the transverse quartic dispersion contributes t^{-1/4} and the longitudinal
diffusion t^{-1/2}, combining to the t^{-3/4} law on the zigzag boundary and
t^{-1} above it), then fits the decay exponent of ||v||_inf on the
intermediate-asymptotics window before finite-domain saturation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bloch import SigmaPoint
from .errors import BlowUp, BranchMismatch, ValidationError, WindowNotFound
from .roll import RollSolution, solve_roll

DEFAULT_DELTA_FACTOR = 1e-3
SLOPE_TOL = 0.1


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class PerturbationSpec:
    """Localized random initial perturbation.

    amplitude: sup-norm of the perturbation (defaults to 1e-3*a1 downstream).
    x_width / y_width: Gaussian envelope widths in physical length units.
    The envelopes must be narrow (O(1)) for the algebraic decay to start
    inside the observation window: longitudinal diffusion spreads the bump
    only after t ~ width^2 and the transverse quartic diffusion after
    t ~ width^4.
    sigma_cutoff: spectral low-pass (|wavenumber| below cutoff kept) applied
    to the random modulation before enveloping.
    """

    amplitude: float
    x_width: float = 3.0
    y_width: float = 3.0
    sigma_cutoff: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValidationError(["perturbation amplitude must be >= 0"])
        if not (self.x_width > 0 and self.y_width > 0):
            raise ValidationError(["envelope widths must be positive"])


@dataclass(frozen=True)
class SimConfig:
    """Full configuration of a decay run (kappa already resolved in params)."""

    params: object  # roll.Params
    m_x: int  # roll periods in x
    l_y: float
    n_x: int
    n_y: int
    dt: float
    t_end: float
    perturbation: PerturbationSpec
    n_samples: int = 60
    n_modes: int = 32

    def __post_init__(self):
        problems = []
        if not _is_power_of_two(self.n_x):
            problems.append(f"n_x = {self.n_x} is not a power of two")
        if not _is_power_of_two(self.n_y):
            problems.append(f"n_y = {self.n_y} is not a power of two")
        if self.m_x < 1:
            problems.append("m_x must be >= 1")
        if self.l_y <= 0:
            problems.append("l_y must be positive")
        if self.dt <= 0 or self.t_end <= 0:
            problems.append("dt and t_end must be positive")
        if self.n_x % self.m_x != 0:
            problems.append("n_x must be a multiple of m_x")
        if problems:
            raise ValidationError(problems)


@dataclass
class SimState:
    """Time and the rfft2 spectral array of the (real) field u."""

    t: float
    u_hat: np.ndarray


@dataclass(frozen=True)
class DecayReport:
    times: np.ndarray
    v_inf_norms: np.ndarray
    fitted_exponent: float
    window: tuple
    h_norm_components: dict = field(default_factory=dict)


class Stepper:
    """ETD1 stepper on a fixed grid; precomputes multipliers and dealiasing."""

    def __init__(self, config: SimConfig, nonlinear: bool = True):
        self.config = config
        p = config.params
        k = p.wavenumber
        self.l_x = config.m_x * 2.0 * math.pi / k
        self.x = self.l_x * np.arange(config.n_x) / config.n_x
        self.y = config.l_y * np.arange(config.n_y) / config.n_y
        kx = 2.0 * math.pi * np.fft.fftfreq(config.n_x, d=self.l_x / config.n_x)
        ky = 2.0 * math.pi * np.fft.rfftfreq(config.n_y, d=config.l_y / config.n_y)
        KX, KY = np.meshgrid(kx, ky, indexing="ij")
        q2 = KX**2 + KY**2
        self.symbol = -((1.0 - q2) ** 2) + p.eps**2
        z = self.symbol * config.dt
        self.lin_factor = np.exp(z)
        # phi1(z) = (e^z - 1)/z, phi1(0) = 1
        with np.errstate(divide="ignore", invalid="ignore"):
            phi1 = np.expm1(z) / z
        phi1 = np.where(np.abs(z) < 1e-12, 1.0, phi1)
        self.phi1_dt = phi1 * config.dt
        # 2/3-rule dealiasing mask
        cut_x = config.n_x // 3
        cut_y = config.n_y // 3
        ix = np.abs(np.fft.fftfreq(config.n_x) * config.n_x)
        iy = np.abs(np.fft.rfftfreq(config.n_y) * config.n_y)
        IX, IY = np.meshgrid(ix, iy, indexing="ij")
        self.dealias = (IX <= cut_x) & (IY <= cut_y)
        self.nonlinear = nonlinear
        self.blowup_ref = None

    def to_spectral(self, u: np.ndarray) -> np.ndarray:
        return np.fft.rfft2(u)

    def to_physical(self, u_hat: np.ndarray) -> np.ndarray:
        return np.fft.irfft2(u_hat, s=(self.config.n_x, self.config.n_y))

    def _symmetrize(self, u_hat: np.ndarray) -> np.ndarray:
        """Project onto the real-field constraint set.

        In the rfft2 layout the columns ky = 0 and ky = Nyquist must satisfy
        u_hat[m] = conj(u_hat[-m]) in the x index; the anti-Hermitian part is
        invisible to irfft2, hence never damped by the physical-space
        nonlinearity, and would otherwise grow at the linear rate eps^2 from
        rounding noise.
        """
        for col in (0, -1):
            c = u_hat[:, col]
            flipped = np.conj(np.roll(c[::-1], 1))
            u_hat[:, col] = 0.5 * (c + flipped)
        return u_hat

    def step(self, state: SimState) -> SimState:
        u_hat = state.u_hat
        if self.nonlinear:
            # Galerkin truncation: masked modes are zeroed rather than evolved
            # linearly-only — a linearly unstable mode (|wavevector| near 1)
            # outside the mask would grow at rate eps^2 with nothing to
            # saturate it.
            u_hat = u_hat * self.dealias
            u = self.to_physical(u_hat)
            n_hat = self.to_spectral(-(u**3)) * self.dealias
            u_hat = self.lin_factor * u_hat + self.phi1_dt * n_hat
            u_hat = self._symmetrize(u_hat * self.dealias)
        else:
            u_hat = self.lin_factor * u_hat
        new = SimState(t=state.t + self.config.dt, u_hat=u_hat)
        if not np.all(np.isfinite(u_hat)):
            raise BlowUp(f"non-finite spectral data at t = {new.t:.3f}")
        return new

    def sup_norm(self, state: SimState) -> float:
        return float(np.abs(self.to_physical(state.u_hat)).max())

    def check_blowup(self, state: SimState):
        sup = self.sup_norm(state)
        if self.blowup_ref is None:
            self.blowup_ref = max(sup, 1e-300)
        elif sup > 10.0 * self.blowup_ref:
            raise BlowUp(
                f"||u||_inf = {sup:.3e} exceeds 10x initial "
                f"{self.blowup_ref:.3e} at t = {state.t:.3f}"
            )


def embed_roll(stepper: Stepper, roll: RollSolution) -> np.ndarray:
    """Roll field u_p(k x) replicated along y (physical space)."""
    k = roll.params.wavenumber
    up_x = roll.evaluate(k * stepper.x)
    return np.tile(up_x[:, None], (1, stepper.config.n_y))


def make_perturbation(stepper: Stepper, roll: RollSolution, spec: PerturbationSpec) -> np.ndarray:
    """Random field localized in x and y, shaped like the translation mode.

    White noise low-passed below sigma_cutoff modulates a deterministic
    Gaussian-envelope x Gaussian-envelope x u_p'(k x) profile; the result is
    rescaled to sup norm = amplitude.
    """
    cfg = stepper.config
    rng = np.random.default_rng(spec.seed)
    noise = rng.standard_normal((cfg.n_x, cfg.n_y))
    noise_hat = np.fft.rfft2(noise)
    kx = 2.0 * math.pi * np.fft.fftfreq(cfg.n_x, d=stepper.l_x / cfg.n_x)
    ky = 2.0 * math.pi * np.fft.rfftfreq(cfg.n_y, d=cfg.l_y / cfg.n_y)
    KX, KY = np.meshgrid(kx, ky, indexing="ij")
    keep = (np.abs(KX) <= spec.sigma_cutoff) & (np.abs(KY) <= spec.sigma_cutoff)
    smooth = np.fft.irfft2(noise_hat * keep, s=(cfg.n_x, cfg.n_y))
    smooth /= max(np.abs(smooth).max(), 1e-300)

    x0, y0 = stepper.l_x / 2.0, cfg.l_y / 2.0
    wx, wy = spec.x_width, spec.y_width
    env_x = np.exp(-(((stepper.x - x0) / wx) ** 2))
    env_y = np.exp(-(((stepper.y - y0) / wy) ** 2))
    k = roll.params.wavenumber
    carrier = roll.evaluate_derivative(k * stepper.x)
    profile = (env_x * carrier)[:, None] * env_y[None, :] * (1.0 + 0.3 * smooth)
    sup = np.abs(profile).max()
    if sup == 0 or spec.amplitude == 0:
        return np.zeros_like(profile)
    return spec.amplitude * profile / sup


def _log_schedule(dt: float, t_end: float, n_samples: int) -> np.ndarray:
    """Log-spaced sample times rounded to step multiples, strictly increasing."""
    raw = np.geomspace(max(dt, 1.0), t_end, n_samples)
    steps = np.unique(np.round(raw / dt).astype(int))
    steps = steps[steps >= 1]
    return steps


def detect_window(times, values, slope_tol: float = SLOPE_TOL, burn_in: float = 50.0):
    """Longest log-t stretch where the local log-log slope varies < slope_tol.

    Samples before burn_in are discarded: the stable-mode transient decays
    exponentially at the spectral-gap rate and pollutes the early slopes.
    Returns (t_lo, t_hi, slope). Raises WindowNotFound if no qualifying
    stretch spans at least one decade in t.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    good = (values > 0) & (times >= burn_in)
    times, values = times[good], values[good]
    if times.size < 5:
        raise WindowNotFound("too few positive samples for window detection")
    lt, lv = np.log(times), np.log(values)
    # local slopes by centered differences
    slopes = np.gradient(lv, lt)
    best = None  # (extent, i0, i1)
    i = 0
    n = slopes.size
    while i < n:
        j = i
        lo = hi = slopes[i]
        while j + 1 < n:
            lo2, hi2 = min(lo, slopes[j + 1]), max(hi, slopes[j + 1])
            if hi2 - lo2 >= slope_tol:
                break
            lo, hi = lo2, hi2
            j += 1
        extent = lt[j] - lt[i]
        if best is None or extent > best[0]:
            best = (extent, i, j)
        i = j + 1 if j > i else i + 1
    extent, i0, i1 = best
    if extent < math.log(10.0):
        raise WindowNotFound(
            f"longest clean stretch spans factor {math.exp(extent):.2f} < 10 in t"
        )
    sl = np.polyfit(lt[i0 : i1 + 1], lv[i0 : i1 + 1], 1)[0]
    return float(times[i0]), float(times[i1]), float(sl)


def run_decay_experiment(
    config: SimConfig,
    diagnostics: "HNormDiagnostics" = None,
    n_diag_samples: int = 12,
    burn_in: float = 50.0,
) -> DecayReport:
    """Integrate roll + perturbation and fit the ||v||_inf decay exponent."""
    roll = solve_roll(config.params, n_modes=config.n_modes)
    stepper = Stepper(config)
    up = embed_roll(stepper, roll)
    v0 = make_perturbation(stepper, roll, config.perturbation)
    u = up + v0
    cfl = config.dt * 3.0 * float(np.abs(u).max()) ** 2
    if cfl > 0.5:
        raise ValidationError(
            [f"dt*3*||u||_inf^2 = {cfl:.2f} > 0.5; reduce dt"]
        )
    state = SimState(t=0.0, u_hat=stepper.to_spectral(u))
    stepper.check_blowup(state)
    up_hat = stepper.to_spectral(up)

    sample_steps = _log_schedule(config.dt, config.t_end, config.n_samples)
    if diagnostics is not None:
        diag_set = set(
            sample_steps[
                np.unique(
                    np.linspace(0, sample_steps.size - 1, n_diag_samples).astype(int)
                )
            ].tolist()
        )
    else:
        diag_set = set()
    times, norms = [0.0], [float(np.abs(v0).max())]
    h_components = {"times": [], "a_l1": [], "sigma1a_l1": [], "vs_l1": []}
    if diagnostics is not None:
        comp = diagnostics.components(stepper, state.u_hat - up_hat)
        h_components["times"].append(0.0)
        for key in ("a_l1", "sigma1a_l1", "vs_l1"):
            h_components[key].append(comp[key])

    n_steps = int(round(config.t_end / config.dt))
    targets = set(sample_steps.tolist())
    for n in range(1, n_steps + 1):
        state = stepper.step(state)
        if n in targets:
            v_hat = state.u_hat - up_hat
            v = stepper.to_physical(v_hat)
            times.append(state.t)
            norms.append(float(np.abs(v).max()))
            stepper.check_blowup(state)
            if n in diag_set:
                comp = diagnostics.components(stepper, v_hat)
                h_components["times"].append(state.t)
                for key in ("a_l1", "sigma1a_l1", "vs_l1"):
                    h_components[key].append(comp[key])

    times = np.asarray(times)
    norms = np.asarray(norms)
    if norms.max() == 0.0:
        raise WindowNotFound("zero perturbation: all norms vanish")
    t_lo, t_hi, slope = detect_window(times[1:], norms[1:], burn_in=burn_in)
    return DecayReport(
        times=times,
        v_inf_norms=norms,
        fitted_exponent=-slope,
        window=(t_lo, t_hi),
        h_norm_components={k: np.asarray(v) for k, v in h_components.items()},
    )


def bloch_project(stepper: Stepper, interp, v_hat: np.ndarray, keep: str = "stable",
                  cutoff: float = 0.2) -> np.ndarray:
    """Remove or retain the critical-branch component of a perturbation.

    Splits v into Bloch cells sigma = (r/m_x, ky), subtracts (keep="stable")
    or retains only (keep="critical") the projection onto the critical
    eigenvector inside the cutoff.  Returns the filtered rfft2 array.
    """
    cfg = stepper.config
    m_x, n_x, n_y = cfg.m_x, cfg.n_x, cfg.n_y
    J = interp.J
    v = np.fft.irfft2(v_hat, s=(n_x, n_y))
    full = np.fft.fft2(v)
    m_signed = np.fft.fftfreq(n_x, d=1.0 / n_x).astype(int)
    r_arr = ((m_signed + m_x // 2) % m_x) - m_x // 2
    j_arr = (m_signed - r_arr) // m_x
    ky = 2.0 * math.pi * np.fft.fftfreq(n_y, d=cfg.l_y / n_y)
    out = full.copy() if keep == "stable" else np.zeros_like(full)
    rows_of = {}
    for row, (r, j) in enumerate(zip(r_arr, j_arr)):
        if abs(j) <= J:
            rows_of.setdefault(int(r), []).append((int(j), row))
    for r, pairs in rows_of.items():
        s1 = r / m_x
        if abs(s1) > cutoff:
            continue
        js = np.array([p[0] for p in pairs])
        rows = np.array([p[1] for p in pairs])
        for iy in np.nonzero(np.abs(ky) <= cutoff)[0]:
            e = interp.eigvec(SigmaPoint(s1, ky[iy]))
            vj = np.zeros(2 * J + 1, dtype=complex)
            vj[js + J] = full[rows, iy]
            a = complex(np.vdot(e, vj))
            crit = a * e[js + J]
            if keep == "stable":
                out[rows, iy] -= crit
            else:
                out[rows, iy] = crit
    u = np.real(np.fft.ifft2(out))
    return np.fft.rfft2(u)


class HNormDiagnostics:
    """Bloch-split diagnostics of a perturbation snapshot.

    Splits v(x, y) into quasi-periodic modes sigma = (r/m_x, q_y) (sigma1 in
    roll-wavenumber units, sigma2 the physical y-frequency), projects each onto
    the critical eigenvector from a precomputed branch interpolant, and
    reports the integrated amplitudes ||a||_1, ||sigma1*a||_1 and the stable
    remainder ||V_s||_1 (l2 in the mode index, L1 in sigma).
    """

    def __init__(self, interp, cutoff: float = 0.2):
        self.interp = interp
        self.cutoff = cutoff

    def components(self, stepper: Stepper, v_hat: np.ndarray) -> dict:
        cfg = stepper.config
        m_x, n_x, n_y = cfg.m_x, cfg.n_x, cfg.n_y
        if n_x % m_x:
            raise BranchMismatch("n_x not divisible by m_x")
        (a1c, b1c), (a2c, b2c) = self.interp.coverage
        if self.cutoff > min(b1c, b2c, -a1c, -a2c):
            raise BranchMismatch(
                f"cutoff {self.cutoff} exceeds branch grid coverage"
            )
        J = self.interp.J
        # full complex Fourier coefficients of v
        v = np.fft.irfft2(v_hat, s=(n_x, n_y))
        full = np.fft.fft2(v) / (n_x * n_y)
        m_signed = np.fft.fftfreq(n_x, d=1.0 / n_x).astype(int)
        # x wavenumber m = j*m_x + r with r in [-m_x/2, m_x/2)
        r_arr = ((m_signed + m_x // 2) % m_x) - m_x // 2
        j_arr = (m_signed - r_arr) // m_x
        ky = 2.0 * math.pi * np.fft.fftfreq(n_y, d=cfg.l_y / n_y)

        # per-(r, ky) squared l2 norms over the harmonic index j
        r_pos = r_arr + m_x // 2  # 0 .. m_x-1
        abs2 = np.abs(full) ** 2
        norm_sq = np.zeros((m_x, n_y))
        np.add.at(norm_sq, r_pos, abs2)
        vs_l1 = float(np.sqrt(norm_sq).sum())
        a_l1 = s1a_l1 = 0.0

        # correct the inside-cutoff cells by projecting onto the branch
        rows_of = {}
        for row, (r, j) in enumerate(zip(r_arr, j_arr)):
            if abs(j) <= J:
                rows_of.setdefault(int(r), []).append((int(j), row))
        for r, pairs in rows_of.items():
            s1 = r / m_x
            if abs(s1) > self.cutoff:
                continue
            js = np.array([p[0] for p in pairs])
            rows = np.array([p[1] for p in pairs])
            for iy in np.nonzero(np.abs(ky) <= self.cutoff)[0]:
                s2 = ky[iy]
                vj = np.zeros(2 * J + 1, dtype=complex)
                vj[js + J] = full[rows, iy]
                e = self.interp.eigvec(SigmaPoint(s1, s2))
                a = complex(np.vdot(e, vj))
                nsq = norm_sq[r + m_x // 2, iy]
                vs_norm = math.sqrt(max(nsq - abs(a) ** 2, 0.0))
                vs_l1 += vs_norm - math.sqrt(nsq)
                a_l1 += abs(a)
                s1a_l1 += abs(s1) * abs(a)
        scale = (1.0 / m_x) * (2.0 * math.pi / cfg.l_y)
        return {
            "a_l1": a_l1 * scale,
            "sigma1a_l1": s1a_l1 * scale,
            "vs_l1": vs_l1 * scale,
        }
