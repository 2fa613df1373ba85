"""System configuration, validation and the flat ``key = value`` config format.

Config file schema (one ``key = value`` per line, ``#`` starts a comment)::

    bs_ny, bs_nz        BS array grid                  (8, 8)
    ue_ny, ue_nz        user array grid                (4, 4)
    spacing             element spacing / wavelength   0.5
    users               K                              2
    mt, mr, ns          RF chains at BS / user, streams per user (4, 2, 2)
    pt                  transmit power                 1.0
    bt, br              phase-shifter bits, 0 = ideal (3, 2)
    rho                 codebook oversampling          8
    beta                JAPC correlation threshold     0.15
    seed                master seed                    0
    trials              channel realizations per point 1000
    ber_bits            bits simulated per trial       2048
    clusters, paths     N_c, N_p                       (8, 10)
    spread_deg          angle spread (std, degrees)    7.5
    snr_min, snr_max, snr_step   SNR grid in dB        (-10, 20, 5)
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from typing import Dict, List, Optional

from .channel import ArrayGeometry, ClusterSpec
from .codebook import QuantizerSpec
from .errors import ConfigError

__all__ = ["SystemConfig", "validate_config", "parse_config_text", "load_config",
           "config_to_flat", "config_from_flat", "SINGLE_STREAM_CONFIG", "MULTI_STREAM_CONFIG"]


@dataclass(frozen=True)
class SystemConfig:
    bs_geometry: ArrayGeometry = field(default_factory=lambda: ArrayGeometry(8, 8))
    user_geometry: ArrayGeometry = field(default_factory=lambda: ArrayGeometry(4, 4))
    n_users: int = 2
    m_t: int = 4
    m_r: int = 2
    n_streams: int = 2
    p_t: float = 1.0
    sigma2: float = 1.0
    bits_t: int = 3
    bits_r: int = 2
    rho: int = 8
    beta: float = 0.15
    seed: int = 0
    trials: int = 1000
    ber_bits: int = 2048
    n_clusters: int = 8
    n_paths: int = 10
    spread_deg: float = 7.5
    snr_min: float = -10.0
    snr_max: float = 20.0
    snr_step: float = 5.0

    @property
    def n_t(self) -> int:
        return self.bs_geometry.n_elements

    @property
    def n_r(self) -> int:
        return self.user_geometry.n_elements

    @property
    def cluster_spec(self) -> ClusterSpec:
        return ClusterSpec.with_spread(self.spread_deg, n_clusters=self.n_clusters,
                                       n_paths=self.n_paths)

    @property
    def bs_quantizer(self) -> Optional[QuantizerSpec]:
        return QuantizerSpec(self.bits_t) if self.bits_t else None

    @property
    def user_quantizer(self) -> Optional[QuantizerSpec]:
        return QuantizerSpec(self.bits_r) if self.bits_r else None

    def with_(self, **changes) -> "SystemConfig":
        return replace(self, **changes)


# 8 users with one RF chain and one stream each
SINGLE_STREAM_CONFIG = SystemConfig(n_users=8, m_t=8, m_r=1, n_streams=1)
# 2 users with two RF chains and two streams each
MULTI_STREAM_CONFIG = SystemConfig(n_users=2, m_t=4, m_r=2, n_streams=2)


def validate_config(config: SystemConfig) -> List[str]:
    """Return one message per violated invariant (empty when valid)."""
    c = config
    out = []
    for name in ("n_users", "m_t", "m_r", "n_streams", "rho", "trials", "n_clusters", "n_paths"):
        if getattr(c, name) < 1:
            out.append(f"{name} >= 1 (got {name}={getattr(c, name)})")
    if c.n_users * c.m_r != c.m_t:
        out.append(f"K·M_r = M_t (got K={c.n_users}, M_r={c.m_r}, M_t={c.m_t})")
    if c.n_streams > c.m_r:
        out.append(f"N_s ≤ M_r (got N_s={c.n_streams}, M_r={c.m_r})")
    if c.n_users * c.n_streams > c.m_t:
        out.append(f"K·N_s ≤ M_t (got K={c.n_users}, N_s={c.n_streams}, M_t={c.m_t})")
    if c.m_t > c.n_t:
        out.append(f"M_t ≤ N_t (got M_t={c.m_t}, N_t={c.n_t})")
    if c.m_r > c.n_r:
        out.append(f"M_r ≤ N_r (got M_r={c.m_r}, N_r={c.n_r})")
    if not 0 < c.beta <= 1:
        out.append(f"0 < beta ≤ 1 (got beta={c.beta})")
    if c.bits_t < 0 or c.bits_r < 0:
        out.append(f"phase bits ≥ 0 (got B_t={c.bits_t}, B_r={c.bits_r})")
    if not c.p_t > 0:
        out.append(f"P_t > 0 (got P_t={c.p_t})")
    if c.sigma2 < 0:
        out.append(f"sigma2 ≥ 0 (got sigma2={c.sigma2})")
    if c.spread_deg < 0:
        out.append(f"angle spread ≥ 0 (got spread_deg={c.spread_deg})")
    if c.snr_step <= 0 or c.snr_max < c.snr_min:
        out.append(f"SNR grid snr_min ≤ snr_max, snr_step > 0 "
                   f"(got {c.snr_min}, {c.snr_max}, {c.snr_step})")
    per_vec = 4 * c.n_users * c.n_streams
    if c.ber_bits < per_vec or c.ber_bits % per_vec:
        out.append(f"ber_bits multiple of 4·K·N_s={per_vec} (got {c.ber_bits})")
    return out


# flat key -> (SystemConfig attribute or geometry slot, type)
_FLAT_KEYS = {
    "bs_ny": int, "bs_nz": int, "ue_ny": int, "ue_nz": int, "spacing": float,
    "users": int, "mt": int, "mr": int, "ns": int, "pt": float, "sigma2": float,
    "bt": int, "br": int, "rho": int, "beta": float, "seed": int, "trials": int,
    "ber_bits": int, "clusters": int, "paths": int, "spread_deg": float,
    "snr_min": float, "snr_max": float, "snr_step": float,
}
_ATTR = {
    "users": "n_users", "mt": "m_t", "mr": "m_r", "ns": "n_streams", "pt": "p_t",
    "bt": "bits_t", "br": "bits_r", "clusters": "n_clusters", "paths": "n_paths",
}


def config_to_flat(config: SystemConfig) -> Dict[str, object]:
    flat = {
        "bs_ny": config.bs_geometry.n_y, "bs_nz": config.bs_geometry.n_z,
        "ue_ny": config.user_geometry.n_y, "ue_nz": config.user_geometry.n_z,
        "spacing": config.bs_geometry.spacing_over_wavelength,
    }
    attrs = {f.name: getattr(config, f.name) for f in fields(config)}
    for key in _FLAT_KEYS:
        attr = _ATTR.get(key, key)
        if attr in attrs and key not in flat:
            flat[key] = attrs[attr]
    return flat


def config_from_flat(values: Dict[str, object], base: SystemConfig = None) -> SystemConfig:
    """Build a config from flat keys, starting from ``base`` (defaults if None)."""
    base = SystemConfig() if base is None else base
    flat = config_to_flat(base)
    for key, raw in values.items():
        if key not in _FLAT_KEYS:
            raise ConfigError([f"unknown config key {key!r}"])
        try:
            flat[key] = _FLAT_KEYS[key](raw)
        except (TypeError, ValueError):
            raise ConfigError([f"config key {key!r}: cannot parse {raw!r}"]) from None
    kwargs = {_ATTR.get(k, k): v for k, v in flat.items()
              if k not in ("bs_ny", "bs_nz", "ue_ny", "ue_nz", "spacing")}
    try:
        kwargs["bs_geometry"] = ArrayGeometry(flat["bs_ny"], flat["bs_nz"], flat["spacing"])
        kwargs["user_geometry"] = ArrayGeometry(flat["ue_ny"], flat["ue_nz"], flat["spacing"])
    except ValueError as exc:
        raise ConfigError([str(exc)]) from None
    return SystemConfig(**kwargs)


def parse_config_text(text: str) -> Dict[str, str]:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError([f"line {lineno}: expected 'key = value', got {line!r}"])
        values[key.strip()] = value.strip()
    return values


def load_config(path, base: SystemConfig = None) -> SystemConfig:
    with open(path) as fh:
        return config_from_flat(parse_config_text(fh.read()), base)


def as_dict(config: SystemConfig) -> Dict[str, object]:
    return asdict(config)
