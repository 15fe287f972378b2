"""
Experiment configuration: INI files under configs/ plus command-line overrides.

    [experiment]  name, trials, seed, attacker
    [grid]        comma-separated lists: n, beta, p_obs, alpha, m, k, m_check
    [simulation]  slots, delivered_target, alpha_flow2, interleave_depth
    [linear]      l_sym, fq, matrices, theta
    [field]       poly_<w> = reduction polynomial for GF(2^w), e.g. poly_8 = 0x11D
"""

import configparser
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from core.errors import ConfigError
from defaults.experiments import EXPERIMENTS

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "WATCHLAB_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "results"

GRID_KEYS = {
    'n': int,
    'beta': float,
    'p_obs': float,
    'alpha': float,
    'm': int,
    'k': int,
    'm_check': int,
}

ATTACKERS = ('min-weight-forgery', 'raw-corruption')
EXPERIMENT_KEYS = ('name', 'trials', 'seed', 'attacker')


@dataclass
class ExperimentConfig:
    name: str
    trials: int = 10000
    seed: int = 42
    attacker: str = 'min-weight-forgery'
    # --- grid ---
    n: List[int] = field(default_factory=list)
    beta: List[float] = field(default_factory=list)
    p_obs: List[float] = field(default_factory=list)
    alpha: List[float] = field(default_factory=list)
    m: List[int] = field(default_factory=list)
    k: List[int] = field(default_factory=list)
    m_check: List[int] = field(default_factory=list)
    # --- simulation ---
    slots: int = 0                      # 0: derived from delivered_target
    delivered_target: int = 100000
    alpha_flow2: Optional[float] = None
    interleave_depth: int = 1
    # --- linear checkers ---
    l_sym: int = 8
    fq: int = 2
    matrices: int = 20
    theta: float = 0.01
    # --- fields ---
    polynomials: Dict[int, int] = field(default_factory=dict)
    source: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d['polynomials'] = {str(w): hex(p) for w, p in sorted(self.polynomials.items())}
        return d


# ============================================================================
# PARSING
# ============================================================================

def _parse_list(key: str, raw: str) -> List:
    cast = GRID_KEYS[key]
    try:
        return [cast(v.strip()) for v in raw.split(',') if v.strip()]
    except ValueError as e:
        raise ConfigError(f"[grid] {key}: {e}") from None


def _get(parser: configparser.ConfigParser, section: str, key: str, cast, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key).strip()
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid {cast.__name__}") from None


def load_config(path: Optional[str] = None, name: Optional[str] = None,
                overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Read an INI file (or start from an empty one when path is None), apply
    overrides for keys whose value is not None, then validate.
    """
    parser = configparser.ConfigParser()
    if path is not None:
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from None
        except configparser.Error as e:
            raise ConfigError(f"{path}: {e}") from None

    file_name = _get(parser, 'experiment', 'name', str, None)
    if name and file_name and name != file_name:
        raise ConfigError(f"{path} configures '{file_name}', not '{name}'")
    cfg = ExperimentConfig(name=name or file_name or '', source=str(path) if path else None)

    if parser.has_section('experiment'):
        unknown = sorted(set(parser.options('experiment')) - set(EXPERIMENT_KEYS))
        if unknown:
            raise ConfigError(f"unknown [experiment] key(s) {', '.join(unknown)} "
                              f"(known: {', '.join(EXPERIMENT_KEYS)})")

    cfg.trials = _get(parser, 'experiment', 'trials', int, cfg.trials)
    cfg.seed = _get(parser, 'experiment', 'seed', int, cfg.seed)
    cfg.attacker = _get(parser, 'experiment', 'attacker', str, cfg.attacker)

    if parser.has_section('grid'):
        for key, raw in parser.items('grid'):
            if key not in GRID_KEYS:
                raise ConfigError(f"unknown [grid] key '{key}' (known: {', '.join(sorted(GRID_KEYS))})")
            setattr(cfg, key, _parse_list(key, raw))

    cfg.slots = _get(parser, 'simulation', 'slots', int, cfg.slots)
    cfg.delivered_target = _get(parser, 'simulation', 'delivered_target', int, cfg.delivered_target)
    cfg.alpha_flow2 = _get(parser, 'simulation', 'alpha_flow2', float, cfg.alpha_flow2)
    cfg.interleave_depth = _get(parser, 'simulation', 'interleave_depth', int, cfg.interleave_depth)

    cfg.l_sym = _get(parser, 'linear', 'l_sym', int, cfg.l_sym)
    cfg.fq = _get(parser, 'linear', 'fq', int, cfg.fq)
    cfg.matrices = _get(parser, 'linear', 'matrices', int, cfg.matrices)
    cfg.theta = _get(parser, 'linear', 'theta', float, cfg.theta)

    if parser.has_section('field'):
        for key, raw in parser.items('field'):
            if not key.startswith('poly_'):
                raise ConfigError(f"unknown [field] key '{key}'")
            try:
                cfg.polynomials[int(key[5:])] = int(raw, 0)
            except ValueError:
                raise ConfigError(f"[field] {key} = {raw!r} is not a polynomial") from None

    for key, value in (overrides or {}).items():
        if value is not None:
            setattr(cfg, key, value)

    validate(cfg)
    logger.debug("loaded config %s", cfg.to_dict())
    return cfg


# ============================================================================
# VALIDATION
# ============================================================================

REQUIRED_GRIDS = {
    'single-flow': ('n', 'p_obs'),
    'two-flows': ('alpha', 'n', 'beta'),
    'hamming': ('m',),
    'linear-limitation': ('m_check',),
}


def validate(cfg: ExperimentConfig) -> None:
    if cfg.name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment '{cfg.name}' (known: {', '.join(EXPERIMENTS)})")
    if cfg.trials < 1:
        raise ConfigError(f"trials must be >= 1, got {cfg.trials}")
    if cfg.attacker not in ATTACKERS:
        raise ConfigError(f"attacker must be one of {ATTACKERS}, got '{cfg.attacker}'")
    for key in REQUIRED_GRIDS[cfg.name]:
        if not getattr(cfg, key):
            raise ConfigError(f"{cfg.name}: [grid] {key} must not be empty")

    if any(not 0 <= p <= 1 for p in cfg.p_obs):
        raise ConfigError(f"p_obs values must lie in [0, 1]: {cfg.p_obs}")
    if any(b <= 0 for b in cfg.beta):
        raise ConfigError(f"beta values must be positive: {cfg.beta}")
    if any(n < 2 for n in cfg.n):
        raise ConfigError(f"n values must be >= 2: {cfg.n}")
    if cfg.interleave_depth < 1:
        raise ConfigError(f"interleave_depth must be >= 1, got {cfg.interleave_depth}")
    if cfg.alpha_flow2 is not None and not 0 <= cfg.alpha_flow2 <= 1:
        raise ConfigError(f"alpha_flow2 must lie in [0, 1], got {cfg.alpha_flow2}")

    if cfg.name == 'single-flow':
        if not cfg.beta and not cfg.k:
            raise ConfigError("single-flow needs [grid] beta (select k) or k (fixed)")
        if not cfg.k and any(p <= 0 for p in cfg.p_obs):
            raise ConfigError(f"selecting k needs p_obs in (0, 1]: {cfg.p_obs}")
    if cfg.name == 'two-flows':
        if any(not 0 < a <= 0.5 for a in cfg.alpha):
            raise ConfigError(f"two-flows alpha values must lie in (0, 0.5]: {cfg.alpha}")
        if cfg.delivered_target < 1 and cfg.slots < 1:
            raise ConfigError("two-flows needs slots or delivered_target >= 1")
    if cfg.name == 'hamming':
        if not cfg.p_obs and not cfg.alpha:
            raise ConfigError("hamming needs [grid] p_obs or alpha")
        if any(not 2 <= m <= 10 for m in cfg.m):
            raise ConfigError(f"hamming m values must lie in [2, 10]: {cfg.m}")
        if any(not 0 < a < 1 for a in cfg.alpha):
            raise ConfigError(f"hamming alpha values must lie in (0, 1): {cfg.alpha}")
    if cfg.name == 'linear-limitation':
        if cfg.l_sym < 1 or cfg.matrices < 1:
            raise ConfigError("linear-limitation needs l_sym >= 1 and matrices >= 1")
        if any(not 0 <= m <= cfg.l_sym for m in cfg.m_check):
            raise ConfigError(f"m_check values must lie in [0, l_sym={cfg.l_sym}]: {cfg.m_check}")
        if not 0 < cfg.theta < 1:
            raise ConfigError(f"theta must lie in (0, 1), got {cfg.theta}")


def default_config_path(name: str) -> Path:
    return Path(__file__).resolve().parent.parent / EXPERIMENTS[name].default_config


def output_dir(flag: Optional[str] = None) -> Path:
    return Path(flag or os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)
