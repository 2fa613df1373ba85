"""Seeded Monte Carlo sweeps over SNR and CSV output of the resulting curves."""

from __future__ import annotations

import ast
import enum
import logging
import os
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from . import __version__
from .analog import AnalogStage, JapcConfig, effective_channel, japc
from .channel import ArrayGeometry, ChannelSet, sample_channel
from .codebook import Codebook, QuantizerSpec, build_osc, load_codebook, save_codebook
from .config import SystemConfig, config_to_flat, validate_config
from .digital import DigitalStage, design_digital, smse_trace, zero_forcing_digital
from .errors import ConfigError, PrecodingError, TrialError
from .evaluation import QAM16, MetricCurve, SnrGrid, ber, sse

log = logging.getLogger(__name__)

__all__ = [
    "Scheme",
    "CodebookCache",
    "trial_rng",
    "run_trials",
    "run_experiment",
    "write_curve_csv",
    "read_curve_csv",
    "METRICS",
]

METRICS = ("sse", "ber", "smse")

AnalogFn = Callable[[SystemConfig, ChannelSet, "CodebookCache"], AnalogStage]
DigitalFn = Callable[[SystemConfig, ChannelSet, AnalogStage, float], DigitalStage]


class Scheme(str, enum.Enum):
    PROPOSED_FULL = "proposed"
    PROPOSED_ANALOG_ONLY = "analog-only"
    PROPOSED_DIGITAL_ONLY = "digital-only"
    FULL_DIGITAL_BASELINE = "full-digital"


class CodebookCache:
    """Memoizes OSC construction, optionally persisting to a directory."""

    def __init__(self, directory: Optional[os.PathLike] = None):
        self.directory = Path(directory) if directory is not None else None
        self._mem: Dict[Tuple, Codebook] = {}

    def get(self, geometry: ArrayGeometry, rho: int, bits: int) -> Codebook:
        key = (geometry, int(rho), int(bits))
        cb = self._mem.get(key)
        if cb is not None:
            return cb
        path = None
        if self.directory is not None:
            path = self.directory / (f"osc_{geometry.n_y}x{geometry.n_z}"
                                     f"_d{geometry.spacing_over_wavelength:g}_rho{rho}_q{bits}.csv")
            if path.exists():
                cb = load_codebook(path)
        if cb is None:
            cb = build_osc(geometry, rho, QuantizerSpec(bits) if bits else None)
            if path is not None:
                self.directory.mkdir(parents=True, exist_ok=True)
                save_codebook(path, cb)
        self._mem[key] = cb
        return cb


def trial_rng(seed: int, trial: int, *stream: int) -> np.random.Generator:
    """Independent generator for (seed, trial, stream...), order-free."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,) + stream))


def japc_analog(config: SystemConfig, channels: ChannelSet, cache: CodebookCache,
                rho: Optional[int] = None) -> AnalogStage:
    rho = config.rho if rho is None else rho
    bs = cache.get(config.bs_geometry, rho, config.bits_t)
    ue = cache.get(config.user_geometry, rho, config.bits_r)
    return japc(channels, bs, [ue] * len(channels), JapcConfig(config.beta), config.m_r)


def dft_japc_analog(config, channels, cache) -> AnalogStage:
    """Stand-in analog stage for the digital-only scheme: JAPC on 2D-DFT codebooks."""
    return japc_analog(config, channels, cache, rho=1)


def unconstrained_analog(config, channels, cache=None) -> AnalogStage:
    """Analog stage without the constant-modulus constraint.

    Each user combines onto its ``M_r`` dominant left singular vectors; the
    precoder spans the dominant right singular subspace of the stacked
    combined channels, which leaves a square, invertible effective channel.
    """
    combiners = [np.linalg.svd(H)[0][:, :config.m_r] for H in channels.per_user]
    stacked = np.vstack([M.conj().T @ H for M, H in zip(combiners, channels.per_user)])
    F = np.linalg.svd(stacked)[2].conj().T[:, :config.m_t]
    return AnalogStage(F, combiners)


def min_smse_digital(config, channels, analog, sigma2) -> DigitalStage:
    blocks = [effective_channel(channels[k], analog.F, analog.combiners[k])
              for k in range(len(channels))]
    return design_digital(blocks, analog.F, analog.combiners, config.n_streams, config.p_t, sigma2)


def zf_digital(config, channels, analog, sigma2) -> DigitalStage:
    """Stand-in digital stage for the analog-only scheme."""
    blocks = [effective_channel(channels[k], analog.F, analog.combiners[k])
              for k in range(len(channels))]
    return zero_forcing_digital(blocks, analog.F, config.n_streams, config.p_t, sigma2)


_DEFAULT_STAGES: Dict[Scheme, Tuple[AnalogFn, DigitalFn]] = {
    Scheme.PROPOSED_FULL: (japc_analog, min_smse_digital),
    Scheme.PROPOSED_ANALOG_ONLY: (japc_analog, zf_digital),
    Scheme.PROPOSED_DIGITAL_ONLY: (dft_japc_analog, min_smse_digital),
    Scheme.FULL_DIGITAL_BASELINE: (unconstrained_analog, min_smse_digital),
}


def _evaluate(metric, config, channels, analog, digital, rng) -> float:
    if metric == "sse":
        return sse(channels, analog, digital)
    if metric == "ber":
        return ber(channels, analog, digital, QAM16, config.ber_bits, rng).value
    if metric == "smse":
        blocks = [effective_channel(channels[k], analog.F, analog.combiners[k])
                  for k in range(len(channels))]
        return smse_trace(blocks, digital.W, digital.combiners, analog.combiners,
                          digital.gamma, digital.sigma2)
    raise ValueError(f"unknown metric {metric!r}")


def run_trials(config: SystemConfig, scheme: Scheme, snr_grid: SnrGrid, metric: str,
               cache: Optional[CodebookCache] = None, analog_fn: AnalogFn = None,
               digital_fn: DigitalFn = None, progress: Callable[[int], None] = None) -> np.ndarray:
    """Per-trial metric values, shape ``(trials, len(snr_grid))``.

    Trial ``t`` draws its channel from ``trial_rng(seed, t, 0)`` and the
    evaluation randomness of SNR point ``i`` from ``trial_rng(seed, t, 1, i)``,
    so results do not depend on loop order and the same seed gives the same
    channels to every scheme. The analog stage does not depend on the noise
    level and is computed once per trial.
    """
    violations = validate_config(config)
    if violations:
        raise ConfigError(violations)
    scheme = Scheme(scheme)
    default_analog, default_digital = _DEFAULT_STAGES[scheme]
    analog_fn = analog_fn or default_analog
    digital_fn = digital_fn or default_digital
    cache = cache or CodebookCache()
    sigma2s = snr_grid.sigma2(config.p_t)
    spec = config.cluster_spec
    out = np.empty((config.trials, len(snr_grid)))
    for t in range(config.trials):
        try:
            channels = sample_channel(config, spec, trial_rng(config.seed, t, 0))
            analog = analog_fn(config, channels, cache)
            for i, s2 in enumerate(sigma2s):
                digital = digital_fn(config, channels, analog, float(s2))
                out[t, i] = _evaluate(metric, config, channels, analog, digital,
                                      trial_rng(config.seed, t, 1, i))
        except PrecodingError as exc:
            raise TrialError(config.seed, t, exc) from exc
        if progress is not None:
            progress(t)
    return out


def _summarize(values: np.ndarray):
    n = values.shape[0]
    mean = values.mean(axis=0)
    se = values.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.full(values.shape[1], np.nan)
    return mean, se


def curve_label(config: SystemConfig, scheme: Scheme) -> str:
    return f"{Scheme(scheme).value} rho={config.rho} beta={config.beta:g}"


def run_experiment(config: SystemConfig, scheme: Scheme, snr_grid: SnrGrid, output_path,
                   metric: str = "sse", cache: Optional[CodebookCache] = None,
                   analog_fn: AnalogFn = None, digital_fn: DigitalFn = None,
                   progress=None) -> MetricCurve:
    """Sweep ``snr_grid``, write the curve CSV plus a plotting stub, return the curve."""
    values = run_trials(config, scheme, snr_grid, metric, cache, analog_fn, digital_fn, progress)
    mean, se = _summarize(values)
    curve = MetricCurve(
        label=curve_label(config, scheme),
        metric=metric,
        params={"scheme": Scheme(scheme).value, "rho": config.rho, "beta": config.beta,
                "bt": config.bits_t, "br": config.bits_r},
        x=list(snr_grid.points),
        y=[float(v) for v in mean],
        stderr=[float(v) for v in se],
        trials=[config.trials] * len(snr_grid),
    )
    if output_path is not None:
        write_curve_csv(output_path, curve, config)
        write_plot_stub(output_path, curve)
    return curve


def version_string() -> str:
    try:
        rev = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True,
                             text=True, timeout=5, cwd=Path(__file__).parent)
        if rev.returncode == 0 and rev.stdout.strip():
            return f"{__version__}+g{rev.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def write_curve_csv(path, curve: MetricCurve, config: Optional[SystemConfig] = None) -> None:
    """``# key=value`` header (curve identity, params, config echo), then data rows."""
    lines = [f"# label={curve.label}", f"# metric={curve.metric}"]
    lines += [f"# param.{k}={v!r}" for k, v in curve.params.items()]
    if config is not None:
        lines += [f"# config.{k}={v!r}" for k, v in config_to_flat(config).items()]
        lines.append(f"# seed={config.seed}")
    lines.append(f"# version={version_string()}")
    lines.append("snr_db,value,stderr,trials")
    lines += [f"{x!r},{y!r},{s!r},{n}" for x, y, s, n in
              zip(curve.x, curve.y, curve.stderr, curve.trials)]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n")


def read_curve_csv(path) -> MetricCurve:
    label, metric, params = "", "", {}
    x, y, se, n = [], [], [], []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            if key == "label":
                label = value
            elif key == "metric":
                metric = value
            elif key.startswith("param."):
                params[key[len("param."):]] = ast.literal_eval(value)
            continue
        if not line.strip() or line.startswith("snr_db"):
            continue
        a, b, c, d = line.split(",")
        x.append(float(a))
        y.append(float(b))
        se.append(float(c))
        n.append(int(d))
    return MetricCurve(label, metric, params, x, y, se, n)


def csv_body(path) -> str:
    """Data rows of a curve CSV (header comments stripped)."""
    return "".join(line + "\n" for line in Path(path).read_text().splitlines()
                   if not line.startswith("#"))


_PLOT_STUB = '''"""Plot {csv_name}."""
import csv
import matplotlib.pyplot as plt

rows = [r for r in csv.reader(l for l in open({csv_name!r}) if not l.startswith("#"))][1:]
x = [float(r[0]) for r in rows]
y = [float(r[1]) for r in rows]
err = [float(r[2]) for r in rows]
plt.errorbar(x, y, yerr=err, marker="o", capsize=3, label={label!r})
{yscale}plt.xlabel("SNR (dB)")
plt.ylabel({ylabel!r})
plt.grid(True, which="both", alpha=0.3)
plt.legend()
plt.savefig({png_name!r}, dpi=150)
'''


def write_plot_stub(csv_path, curve: MetricCurve) -> Path:
    csv_path = Path(csv_path)
    stub = csv_path.with_name(csv_path.stem + "_plot.py")
    ylabel = {"sse": "SSE (bits/s/Hz)", "ber": "BER", "smse": "SMSE"}.get(curve.metric, curve.metric)
    stub.write_text(_PLOT_STUB.format(
        csv_name=csv_path.name, label=curve.label, ylabel=ylabel,
        png_name=csv_path.stem + ".png",
        yscale='plt.yscale("log")\n' if curve.metric == "ber" else ""))
    return stub
