"""Monte Carlo estimator of chain output variances.

Vacuum quadratures are sampled at every entry port and pushed through the
optical chain one element at a time (rotate, cavity, rotate back,
beamsplitter). The estimator shares no code with the matrix assembly in
:mod:`sqzamp.chain`. That makes it an independent check of the closed
forms and of the assembled transfer functions.

Random streams
--------------
Sample ``i`` belongs to batch ``i // batch_size``. Every (stream id,
batch) pair gets its own Philox generator seeded by
``SeedSequence(seed, spawn_key=(stream_id, batch))``. Stream ids are the
entries of :data:`STREAM_IDS`. Batches can therefore be evaluated in any
order or on any number of workers. Per-batch moment sums are combined with
:func:`math.fsum`, which is exactly rounded, so the final estimate does
not depend on the evaluation order.
"""

import math
import numbers
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .chain import PhaseNoiseMode
from .errors import ConfigError, MisuseError

MIN_SAMPLES = 10_000

STREAM_IDS = {
    "in": 0,
    "lo": 1,
    "prop": 2,
    "la": 3,
    "det": 4,
    "theta_opo": 5,
    "theta_opa": 6,
}


@dataclass(frozen=True)
class OracleConfig:
    """Sampling configuration.

    ``phase_noise_mode`` left as ``None`` uses the mode stored in the setup.
    ``workers`` only affects speed, never the result.
    """

    n_samples: int = 1_000_000
    seed: int = 0
    phase_noise_mode: PhaseNoiseMode | None = None
    batch_size: int = 1 << 16
    workers: int = 1

    def __post_init__(self):
        checks = (
            ("n_samples", MIN_SAMPLES, None, f"an integer >= {MIN_SAMPLES}"),
            ("seed", 0, 2**64 - 1, "an unsigned 64-bit integer"),
            ("batch_size", 1, None, "a positive integer"),
            ("workers", 1, None, "a positive integer"),
        )
        for name, lo, hi, what in checks:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, numbers.Integral) or v < lo or (hi is not None and v > hi):
                raise ConfigError(name, f"must be {what}, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.phase_noise_mode is not None:
            object.__setattr__(self, "phase_noise_mode", PhaseNoiseMode(self.phase_noise_mode))


@dataclass(frozen=True)
class OracleEstimate:
    v_minus_hat: float
    v_plus_hat: float
    stderr_minus: float
    stderr_plus: float
    n_used: int

    def z_scores(self, v_minus, v_plus):
        """Standardized deviations of reference values from the estimate."""
        return (
            (self.v_minus_hat - v_minus) / self.stderr_minus,
            (self.v_plus_hat - v_plus) / self.stderr_plus,
        )


def _generator(seed, stream, batch):
    ss = np.random.SeedSequence(int(seed), spawn_key=(STREAM_IDS[stream], batch))
    return np.random.Generator(np.random.Philox(ss))


def _rotate(v, theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def _cavity(eta, x, amplify_phase):
    # reflection and loss-port transmission per quadrature at zero frequency,
    # for kappa = 1, kappa_in = eta, |q| = x
    denom = np.array([1.0 - x, 1.0 + x]) if amplify_phase else np.array([1.0 + x, 1.0 - x])
    reflect = 2.0 * eta / denom - 1.0
    transmit = 2.0 * math.sqrt(eta * (1.0 - eta)) / denom
    return reflect[:, None], transmit[:, None]


def _angles(setup, mode, name, theta, seed, batch, m):
    if theta == 0.0:
        return 0.0
    if mode is PhaseNoiseMode.DETERMINISTIC:
        return theta
    return theta * _generator(seed, name, batch).standard_normal(m)


def _propagate(setup, mode, seed, batch, m):
    """Detected quadratures (2, m) for one batch of ``m`` samples."""

    def vacuum(port):
        # one (X-, X+) pair per sample, so any prefix of a batch is a valid shorter run
        return _generator(seed, port, batch).standard_normal((m, 2)).T

    eta_det = setup.eta_det
    th_o = _angles(setup, mode, "theta_opo", setup.theta_opo, seed, batch, m)
    r_o, t_o = _cavity(setup.opo.escape_efficiency, setup.opo.pump, amplify_phase=False)
    x_in, x_lo = vacuum("in"), vacuum("lo")

    if not setup.amplified:
        out = _rotate(r_o * _rotate(x_in, -th_o) + t_o * _rotate(x_lo, -th_o), th_o)
        return math.sqrt(eta_det) * out + math.sqrt(1.0 - eta_det) * vacuum("det")

    eta_prop = setup.eta_prop
    th_a = _angles(setup, mode, "theta_opa", setup.theta_opa, seed, batch, m)
    r_a, t_a = _cavity(setup.opa.escape_efficiency, setup.opa.pump, amplify_phase=True)
    # squeezer stage seen through the amplifier's rotated frame
    x_in, x_lo = _rotate(x_in, -th_a), _rotate(x_lo, -th_a)
    squeezed = _rotate(r_o * _rotate(x_in, -th_o) + t_o * _rotate(x_lo, -th_o), th_o)
    seed_field = math.sqrt(eta_prop) * squeezed + math.sqrt(1.0 - eta_prop) * _rotate(vacuum("prop"), -th_a)
    amplified = _rotate(r_a * seed_field + t_a * _rotate(vacuum("la"), -th_a), th_a)
    return math.sqrt(eta_det) * amplified + math.sqrt(1.0 - eta_det) * vacuum("det")


def _moments(samples):
    # power sums S1..S4 per quadrature, shape (2, 4)
    return np.stack([np.sum(samples**k, axis=1) for k in range(1, 5)], axis=1)


def _batch_segments(setup, mode, seed, batch, start, stop, cuts):
    out = _propagate(setup, mode, seed, batch, stop - start)
    edges = [start, *cuts, stop]
    return [(b - a, _moments(out[:, a - start : b - start])) for a, b in zip(edges[:-1], edges[1:])]


def _estimate(count, sums):
    n = count
    est = []
    for q in range(2):
        s1, s2, s3, s4 = (math.fsum(s[q, k] for s in sums) for k in range(4))
        mean = s1 / n
        var = (s2 - n * mean * mean) / (n - 1)
        m2 = s2 / n - mean * mean
        m4 = s4 / n - 4.0 * mean * s3 / n + 6.0 * mean * mean * s2 / n - 3.0 * mean**4
        est.append((var, math.sqrt(max(m4 - m2 * m2, 0.0) / n)))
    (vm, sm), (vp, sp) = est
    return OracleEstimate(vm, vp, sm, sp, n)


def convergence_report(setup, cfg, checkpoints):
    """Estimates after each of ``checkpoints`` samples, all from one stream.

    The estimate at checkpoint ``k`` uses exactly the first ``k`` samples of
    the stream that :func:`estimate_variance` would use.
    """
    checkpoints = [int(c) for c in checkpoints]
    if not checkpoints:
        raise MisuseError("checkpoints must not be empty")
    if any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise MisuseError(f"checkpoints must be strictly ascending, got {checkpoints}")
    if checkpoints[0] < 2 or checkpoints[-1] > cfg.n_samples:
        raise MisuseError(f"checkpoints must lie in [2, n_samples={cfg.n_samples}]")
    mode = cfg.phase_noise_mode or setup.phase_noise_mode
    total = checkpoints[-1]
    size = cfg.batch_size
    jobs = []
    for batch in range(-(-total // size)):
        start, stop = batch * size, min((batch + 1) * size, total)
        cuts = [c for c in checkpoints if start < c < stop]
        jobs.append((batch, start, stop, cuts))

    def run(job):
        return _batch_segments(setup, mode, cfg.seed, *job)

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]

    reports, sums, count = [], [], 0
    pending = iter(checkpoints)
    target = next(pending)
    for segments in results:
        for n, moments in segments:
            count += n
            sums.append(moments)
            if count == target:
                reports.append(_estimate(count, sums))
                target = next(pending, None)
    return reports


def estimate_variance(setup, cfg):
    """Sample-variance estimate of both detected quadratures with standard errors.

    The standard errors come from the empirical fourth moment, so they stay
    valid when phase jitter makes the output non-Gaussian.
    """
    return convergence_report(setup, cfg, [cfg.n_samples])[0]
