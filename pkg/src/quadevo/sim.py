"""End-to-end Monte Carlo pipeline, m-sweeps and figure emission.

Signal model
------------
Every single carrier ``z_j`` is spread over the ``m`` sub-channels of the
user's logical channel: the length-``m`` vector ``a * z_j * e_0`` is taken to
the subcarrier domain with the unitary inverse DFT, where
``a = sqrt(m / Omega)`` makes each subcarrier carry quadrature variance
``sigma_w_sq``.  After transmission and heterodyne measurement the unitary
DFT brings the block back and bin 0, divided by ``a`` and de-rotated by the
phase of the aggregate transmittance, gives ``kappa_j``.  Its noise variance is
``Omega * mean(sigma_N_i^2) / m`` per quadrature.

Random draws
------------
Trial ``t`` owns the stream :func:`~quadevo.core.trial_stream` ``(seed, t)``
and draws, in order, the ``(d, 2)`` carrier quadratures, the ``(d, m, 2)``
channel noise and (only when the detection variance is positive) the
``(d, m, 2)`` detection noise.  Trials are then processed in vectorised
chunks, which changes nothing in the output.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.fft
import scipy.stats

from .channel import (LogicalChannel, aggregate_coefficient, apply_channel, channel_noise,
                      g_function, measure)
from .config import config_to_dict
from .core import CovMode, ParameterError, SimConfig, sample_complex_carrier, trial_stream
from .gqi import dgqi_estimate
from .io import emit_csv
from .keyrate import KeyRateReport, monotonicity_violations, secret_key_rate
from .qe import (EstimatorBundle, auto_ridge, build_bundle, build_cov_kk, build_cov_xk,
                 build_cov_xx, derive_tau, empirical_covariances, error_stats, estimate)
from .spectral import (AutocorrSequence, SpectralDensity, autocorr_to_spectrum,
                       spectrum_to_autocorr, unitary_dft, unitary_idft)

__all__ = [
    "StageError",
    "TrialData",
    "PipelineResult",
    "SimReport",
    "SweepRow",
    "SweepResult",
    "spreading_gain",
    "simulate_trials",
    "simulate_trial_reference",
    "analytic_bundle",
    "estimate_spectrum",
    "keyrate_from_samples",
    "evaluate",
    "run_pipeline",
    "sweep_m",
    "monotonicity_sweep",
    "run_keyrate",
]

FIGURES = ("fig_s1a", "fig_s1b", "fig_s2", "fig_s3a", "fig_s3b",
           "fig_s4a", "fig_s4b", "fig_s5")
_CHUNK_ELEMENTS = 1 << 21


class StageError(RuntimeError):
    """A pipeline stage failed; ``cause`` holds the original exception."""

    def __init__(self, stage: str, cause: BaseException, config: SimConfig):
        super().__init__(f"stage {stage!r} failed: {cause} [config: {config_to_dict(config)}]")
        self.stage = stage
        self.cause = cause
        self.config = config


@dataclass
class TrialData:
    """Per-trial samples plus the trial-0 snapshots used for the figures.

    :param x: Alice's x quadratures, ``trials x d``
    :param kappa_x: x quadrature of the demodulated vector, ``trials x d``
    """

    x: np.ndarray
    kappa_x: np.ndarray
    kappa0: np.ndarray
    delta0: np.ndarray
    measured0: np.ndarray
    gqi0: np.ndarray
    gqi_power: float


@dataclass
class PipelineResult:
    config: SimConfig
    data: TrialData
    bundle: EstimatorBundle
    x_est: np.ndarray
    errors: np.ndarray
    mse_per_j: np.ndarray
    mean_err_per_j: np.ndarray
    keyrate: KeyRateReport

    @property
    def mean_abs_err(self) -> float:
        return float(np.mean(np.abs(self.errors)))

    @property
    def err_var(self) -> float:
        """Expected error variance, averaged over the ``d`` elements."""
        return float(self.mse_per_j.mean())


@dataclass
class SimReport:
    config_echo: SimConfig
    per_figure_paths: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    wallclock: float = 0.0


@dataclass(frozen=True)
class SweepRow:
    m: int
    mean_err: float
    err_var: float
    trace_ee: float
    keyrate: float
    report: KeyRateReport
    min_eig_ee: float = 0.0
    trace_xx: float = 0.0


@dataclass
class SweepResult:
    rows: list
    spearman: float
    paths: dict = field(default_factory=dict)
    wallclock: float = 0.0

    @property
    def violations(self) -> int:
        return sum(r.report.violation for r in self.rows)


def spreading_gain(cfg: SimConfig) -> float:
    return math.sqrt(cfg.m / cfg.omega)


def _derotation(chan: LogicalChannel) -> complex:
    A = aggregate_coefficient(chan)
    if abs(A) == 0:
        raise ParameterError("aggregate transmittance is zero; nothing reaches the receiver")
    return abs(A) / A


def _stage(name, cfg, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except (ValueError, ArithmeticError, np.linalg.LinAlgError, OSError) as exc:
        raise StageError(name, exc, cfg) from exc


def _fill_draws(cfg: SimConfig, start: int, stop: int):
    k, d, m = stop - start, cfg.d, cfg.m
    zq = np.empty((k, d, 2))
    nq = np.empty((k, d, m, 2))
    dq = np.empty((k, d, m, 2)) if cfg.detection_variance > 0 else None
    for r in range(k):
        stream = trial_stream(cfg.seed, start + r)
        stream.standard_normal(out=zq[r])
        stream.standard_normal(out=nq[r])
        if dq is not None:
            stream.standard_normal(out=dq[r])
    return zq, nq, dq


def simulate_trials(cfg: SimConfig, chan: LogicalChannel | None = None,
                    chunk: int | None = None) -> TrialData:
    """Run the sampling, channel and demodulation stages for every trial."""
    chan = LogicalChannel.from_config(cfg) if chan is None else chan
    if chan.m != cfg.m:
        raise ParameterError(f"channel has {chan.m} sub-channels, config says m={cfg.m}")
    d, m, n = cfg.d, cfg.m, cfg.trials
    a = spreading_gain(cfg)
    rot = _derotation(chan)
    noise_scale = np.sqrt(chan.noise_variances)
    det_scale = math.sqrt(cfg.detection_variance)
    if chunk is None:
        chunk = max(1, _CHUNK_ELEMENTS // (d * m))
    x = np.empty((n, d))
    kappa_x = np.empty((n, d))
    snap = {}
    power = 0.0
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        zq, nq, dq = _fill_draws(cfg, start, stop)
        z = (zq[..., 0] + 1j * zq[..., 1]) * math.sqrt(cfg.sigma_w0_sq)
        spread = np.zeros(z.shape + (m,), dtype=complex)
        spread[..., 0] = a * z
        sub = unitary_idft(spread)
        delta = (nq[..., 0] + 1j * nq[..., 1]) * noise_scale
        y = apply_channel(sub, chan, delta)
        if dq is not None:
            y += (dq[..., 0] + 1j * dq[..., 1]) * det_scale
        kappa = unitary_dft(y)[..., 0] * (rot / a)
        gqi = dgqi_estimate(y, cfg.window).values
        power += float(np.sum(gqi.real ** 2 + gqi.imag ** 2))
        x[start:stop] = z.real
        kappa_x[start:stop] = kappa.real
        if start == 0:
            snap = dict(kappa0=kappa[0].copy(), delta0=delta[0, 0].copy(),
                        measured0=y[0, 0].copy(), gqi0=gqi[0, 0].copy())
    return TrialData(x=x, kappa_x=kappa_x, gqi_power=power / (n * d * m), **snap)


def simulate_trial_reference(cfg: SimConfig, trial: int,
                             chan: LogicalChannel | None = None) -> dict:
    """Single-trial pipeline written with the per-stage library functions.

    It consumes the trial stream in the documented order and is the oracle
    for the vectorised :func:`simulate_trials`.
    """
    chan = LogicalChannel.from_config(cfg) if chan is None else chan
    stream = trial_stream(cfg.seed, trial)
    z = sample_complex_carrier(cfg.d, cfg.sigma_w0_sq, stream)
    a = spreading_gain(cfg)
    spread = np.zeros((cfg.d, cfg.m), dtype=complex)
    spread[:, 0] = a * z.values
    sub = unitary_idft(spread)
    delta = channel_noise(sub.shape, chan, stream)
    y = measure(apply_channel(sub, chan, delta), "heterodyne",
                cfg.detection_variance, stream)
    kappa = unitary_dft(y)[:, 0] * (_derotation(chan) / a)
    return dict(z=z.values, sub=sub, delta=delta, measured=y, kappa=kappa)


def analytic_bundle(cfg: SimConfig, chan: LogicalChannel | None = None) -> EstimatorBundle:
    """Covariances built from the white input spectrum ``sigma_w0_sq``.

    After de-spreading the demodulated vector lives on the single-carrier
    lag grid, so the gate is full band and the gain is ``|mean(T)|^2``.
    """
    chan = LogicalChannel.from_config(cfg) if chan is None else chan
    d = cfg.d
    P = SpectralDensity.constant(cfg.sigma_w0_sq, cfg.theta_points)
    floor = (float(chan.noise_variances.mean()) + cfg.detection_variance) * cfg.omega / cfg.m
    cov_xx = build_cov_xx(P, d)
    cov_kk = build_cov_kk(P, chan, 1.0, d, noise_floor=floor)
    ridge = auto_ridge(cov_kk) if cfg.reg_eps is None else cfg.reg_eps
    cov_kk[np.diag_indices(d)] += ridge
    gated = SpectralDensity(P.values * g_function(P.grid, aggregate_coefficient(chan), 1.0))
    tau = derive_tau(spectrum_to_autocorr(gated, d - 1), spectrum_to_autocorr(P, d - 1),
                     cfg.theta_points)
    cov_xk = build_cov_xk(P, tau, 1.0, d)
    return build_bundle(cov_xx, cov_kk, cov_xk)


def estimate_spectrum(samples, lags: int, theta_points: int) -> SpectralDensity:
    """Spectrum from the trial-averaged biased autocorrelation of ``trials x d`` rows."""
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    n, d = X.shape
    Z = min(int(lags), d - 1)
    nfft = scipy.fft.next_fast_len(2 * d)
    acc = np.zeros(Z + 1)
    step = max(1, (1 << 22) // nfft)
    for s in range(0, n, step):
        F = scipy.fft.rfft(X[s:s + step], nfft, axis=1)
        acc += scipy.fft.irfft(F.real ** 2 + F.imag ** 2, nfft, axis=1)[:, :Z + 1].sum(axis=0)
    acf = acc / (n * d)
    return autocorr_to_spectrum(AutocorrSequence.from_nonnegative(acf), theta_points)


def _rate(x, k, cfg: SimConfig, lags: int) -> KeyRateReport:
    P_a = estimate_spectrum(x, lags, cfg.theta_points)
    P_b = estimate_spectrum(k, lags, cfg.theta_points)
    P_e = SpectralDensity(P_b.values + cfg.eve_excess)
    return secret_key_rate(P_b, P_a, P_e, m=cfg.m)


def keyrate_from_samples(x, kappa_x, cfg: SimConfig, lags: int | None = None) -> KeyRateReport:
    """Key rate from sample spectra with a batch-means standard error on ``rate_raw``."""
    if lags is None:
        lags = cfg.d - 1 if cfg.key_lags is None else cfg.key_lags
    rep = _rate(x, kappa_x, cfg, lags)
    n = x.shape[0]
    B = min(cfg.key_batches, n)
    se = ent_se = 0.0
    if B >= 2:
        parts = np.array_split(np.arange(n), B)
        reps = [_rate(x[p], kappa_x[p], cfg, lags) for p in parts]
        se = float(np.std([r.rate_raw for r in reps], ddof=1) / math.sqrt(B))
        ent_se = float(np.std([r.entropy_bob for r in reps], ddof=1) / math.sqrt(B))
    return replace(rep, rate_se=se, entropy_se=ent_se)


def evaluate(cfg: SimConfig, chan: LogicalChannel | None = None) -> PipelineResult:
    """Run every stage in memory; no files are written."""
    chan = _stage("channel", cfg, lambda: LogicalChannel.from_config(cfg) if chan is None else chan)
    data = _stage("simulate", cfg, simulate_trials, cfg, chan)
    if cfg.cov_mode is CovMode.ANALYTIC:
        bundle = _stage("covariance", cfg, analytic_bundle, cfg, chan)
    else:
        covs = _stage("covariance", cfg, empirical_covariances, data.x, data.kappa_x, cfg.reg_eps)
        bundle = _stage("solve", cfg, build_bundle, *covs)
    x_est = _stage("estimate", cfg, estimate, bundle.xi, data.kappa_x)
    e, mse, mean_e = _stage("estimate", cfg, error_stats, data.x, x_est)
    if not (np.all(np.isfinite(x_est)) and np.all(np.isfinite(bundle.cov_ee))):
        raise StageError("estimate", FloatingPointError("non-finite estimate"), cfg)
    kr = _stage("keyrate", cfg, keyrate_from_samples, data.x, data.kappa_x, cfg)
    return PipelineResult(cfg, data, bundle, x_est, e, mse, mean_e, kr)


def _summary(res: PipelineResult) -> dict:
    kr = res.keyrate
    return {
        "trials": res.config.trials,
        "mean_error": float(res.errors.mean()),
        "mean_abs_error": res.mean_abs_err,
        "error_variance_per_j": np.diag(res.bundle.cov_ee).tolist(),
        "empirical_mse_per_j": res.mse_per_j.tolist(),
        "trace_ee": res.bundle.trace_ee,
        "trace_xx": float(np.trace(res.bundle.cov_xx)),
        "kappa_variance": float(res.data.kappa_x.var(ddof=1)),
        "gqi_power": res.data.gqi_power,
        "keyrate": {"d_ab": kr.d_ab, "d_be": kr.d_be, "rate_raw": kr.rate_raw,
                    "rate": kr.rate, "rate_se": kr.rate_se,
                    "entropy_bob": kr.entropy_bob, "entropy_se": kr.entropy_se},
    }


def _keyrate_row(r: KeyRateReport):
    return (r.m, r.d_ab, r.d_be, r.rate_raw, r.rate, r.rate_se, r.entropy_bob,
            r.entropy_se, int(r.violation))


def _write_json(path: Path, payload: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def write_figures(res: PipelineResult, out) -> dict:
    """Emit the eight single-run figure tables for trial 0."""
    d = res.data
    j = np.arange(res.config.d)
    i = np.arange(res.config.m)
    tables = {
        "fig_s1a": zip(j, d.x[0]),
        "fig_s1b": zip(i, d.delta0.real),
        "fig_s2": zip(i, d.measured0.real),
        "fig_s3a": zip(i, d.gqi0.real, d.gqi0.imag),
        "fig_s3b": zip(j, d.kappa0.real, d.kappa0.imag),
        "fig_s4a": zip(j, res.x_est[0]),
        "fig_s4b": zip(j, res.errors[0]),
        "fig_s5": zip(j, np.diag(res.bundle.cov_ee)),
    }
    return {k: str(emit_csv(k, rows, out)) for k, rows in tables.items()}


def run_pipeline(cfg: SimConfig, out=None) -> tuple[SimReport, PipelineResult]:
    """Full run; writes the figure tables and ``report.json`` when ``out`` is given."""
    t0 = time.perf_counter()
    res = evaluate(cfg)
    report = SimReport(cfg, summary=_summary(res))
    if out is not None:
        out = Path(out)
        report.per_figure_paths = _stage("emit", cfg, write_figures, res, out)
        report.per_figure_paths["keyrate"] = str(
            _stage("emit", cfg, emit_csv, "keyrate", [_keyrate_row(res.keyrate)], out))
    report.wallclock = time.perf_counter() - t0
    if out is not None:
        _stage("emit", cfg, _write_json, Path(out) / "report.json", {
            "config": config_to_dict(cfg), "paths": report.per_figure_paths,
            "summary": report.summary, "wallclock": report.wallclock})
    return report, res


def sweep_m(cfg: SimConfig, m_min: int, m_max: int, out=None) -> SweepResult:
    """Run the pipeline for every ``m`` in ``[m_min, m_max]`` with shared trial seeds.

    The transmittance profile must be uniform so it can be re-broadcast to
    each ``m``.  Writes ``fig_s6.csv``, ``keyrate.csv`` and ``report.json``
    when ``out`` is given.
    """
    if m_min > m_max or m_min < 1:
        raise ParameterError(f"invalid m range [{m_min}, {m_max}]")
    t0 = time.perf_counter()
    results = [evaluate(cfg.with_m(m)) for m in range(m_min, m_max + 1)]
    flags = monotonicity_violations([r.keyrate.rate_raw for r in results],
                                    [r.keyrate.rate_se for r in results])
    rows = []
    for res, flag in zip(results, flags):
        kr = res.keyrate
        kr = replace(kr, violation=flag)
        rows.append(SweepRow(res.config.m, res.mean_abs_err, res.err_var,
                             res.bundle.trace_ee, kr.rate, kr,
                             float(np.linalg.eigvalsh(res.bundle.cov_ee).min()),
                             float(np.trace(res.bundle.cov_xx))))
    if len(rows) > 1:
        rho = float(scipy.stats.spearmanr([r.m for r in rows], [r.err_var for r in rows])[0])
    else:
        rho = float("nan")
    result = SweepResult(rows, rho)
    if out is not None:
        out = Path(out)
        result.paths["fig_s6"] = str(_stage("emit", cfg, emit_csv, "fig_s6",
                                            [(r.m, r.mean_err, r.err_var, r.trace_ee, r.keyrate)
                                             for r in rows], out))
        result.paths["keyrate"] = str(_stage("emit", cfg, emit_csv, "keyrate",
                                             [_keyrate_row(r.report) for r in rows], out))
    result.wallclock = time.perf_counter() - t0
    if out is not None:
        _stage("emit", cfg, _write_json, Path(out) / "report.json", {
            "config": config_to_dict(cfg), "m_min": m_min, "m_max": m_max,
            "paths": result.paths, "spearman_err_var_vs_m": rho,
            "violations": result.violations, "wallclock": result.wallclock})
    return result


def monotonicity_sweep(cfg: SimConfig, m_range) -> list[KeyRateReport]:
    """Key-rate reports for each ``m`` (ascending) with 3-SE violation flags."""
    m_range = [int(m) for m in m_range]
    if m_range != sorted(m_range):
        raise ParameterError("m_range must be sorted ascending")
    reports = [evaluate(cfg.with_m(m)).keyrate for m in m_range]
    flags = monotonicity_violations([r.rate_raw for r in reports], [r.rate_se for r in reports])
    return [replace(r, violation=f) for r, f in zip(reports, flags)]


def run_keyrate(cfg: SimConfig, out=None) -> dict:
    """Key rate at the configured ``m`` plus its value at half the lag count."""
    t0 = time.perf_counter()
    res = evaluate(cfg)
    lags = cfg.d - 1 if cfg.key_lags is None else cfg.key_lags
    half = _stage("keyrate", cfg, _rate, res.data.x, res.data.kappa_x, cfg, max(0, lags // 2))
    payload = {"config": config_to_dict(cfg), "lags": lags,
               "keyrate": _summary(res)["keyrate"],
               "rate_raw_half_lags": half.rate_raw}
    if out is not None:
        out = Path(out)
        payload["paths"] = {"keyrate": str(_stage("emit", cfg, emit_csv, "keyrate",
                                                  [_keyrate_row(res.keyrate)], out))}
    payload["wallclock"] = time.perf_counter() - t0
    if out is not None:
        _stage("emit", cfg, _write_json, out / "report.json", payload)
    return payload
