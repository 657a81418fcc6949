"""Reproducible Monte Carlo campaigns over the estimators.

Each campaign maps a sweep parameter (cell size, crossing lag, window size,
shape) to replicate statistics.  Replicate seeds are derived from
(base seed, sweep index, replicate index) through a SeedSequence hash, so any
replicate can run on any thread at any time and the aggregated output is byte
identical regardless of the thread count.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict, field, fields, replace

import numpy as np
from scipy import stats

from .densities import (
    CovarianceModel,
    beta_d,
    chisq_surface_density,
    chisq_volume_density,
    gaussian_surface_density,
    gaussian_volume_density,
)
from .sampling import (
    GridSpec,
    sample_chi_square,
    sample_gaussian_grid,
    sample_gaussian_points,
    sample_poisson_process,
)
from .tessellation import Box, hexagonal_honeycomb, hypercubic_honeycomb, voronoi_honeycomb_2d
from .estimators import (
    ExcursionIndicator,
    corrected_surface,
    crossing_frequency,
    exceedance_indicator,
    hypercubic_surface_fast,
    surface_estimate,
    volume_estimate,
)
from .crofton import circle_shape, crofton_measure_mc, square_shape

KINDS = ("bias-sweep", "crossing", "clt", "crofton-demo", "volume-check")
FAMILIES = ("hypercubic", "hexagonal", "voronoi")
MODELS = ("gaussian", "chi-square")

# fields that do not influence the computed numbers and are therefore
# excluded from the config hash echoed on every output row
_NON_SEMANTIC_FIELDS = ("threads", "out", "summary")


class ConfigError(ValueError):
    """Invalid campaign configuration (bad key, value, or combination)."""


@dataclass
class CampaignConfig:
    kind: str
    d: int = 2
    family: str = "hypercubic"
    model: str = "gaussian"
    ell: float = 1.0
    k: int = 2
    u: float = 0.0
    half_width: float = 8.0
    deltas: tuple = (0.5, 0.25, 0.125, 0.0625)
    qs: tuple = (0.4, 0.2, 0.1, 0.05, 0.02)
    windows: tuple = (40, 80, 160)
    levels: tuple = (0.0, 1.0)
    reps: int = 200
    n_pairs: int = 1_000_000
    n_lines: int = 100_000
    shape: str = "both"
    circle_radius: float = 1.0
    square_side: float = 1.0
    bounding_radius: float = 1.5
    guard: float = 1.5
    point_cap: int = 32768
    seed: int = 20260823
    threads: int = 1
    out: str | None = None
    summary: str | None = None

    def config_hash(self) -> str:
        payload = {
            k: v for k, v in asdict(self).items() if k not in _NON_SEMANTIC_FIELDS
        }
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


_FLOAT_TUPLE_KEYS = {"deltas", "qs", "levels"}
_INT_TUPLE_KEYS = {"windows"}


def default_config(kind: str) -> CampaignConfig:
    """Per-campaign defaults at desk scale."""
    if kind not in KINDS:
        raise ConfigError(f"unknown campaign kind {kind!r}; expected one of {KINDS}")
    cfg = CampaignConfig(kind=kind)
    if kind == "volume-check":
        cfg = replace(cfg, half_width=4.0, deltas=(0.25,))
    elif kind == "clt":
        cfg = replace(cfg, deltas=(0.1,), reps=500)
    elif kind == "crossing":
        cfg = replace(cfg, reps=20)
    elif kind == "crofton-demo":
        cfg = replace(cfg, reps=20)
    return cfg


def apply_config_file(cfg: CampaignConfig, path) -> CampaignConfig:
    """Merge a flat key=value file into a config.

    Lines are ``key = value``; blank lines and '#' comments are ignored.
    List-valued keys take comma-separated entries.
    """
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    valid = {f.name: f for f in fields(CampaignConfig)}
    updates = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw_line!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if key == "kind":
            raise ConfigError(f"{path}:{lineno}: the campaign kind is set by the subcommand")
        if key not in valid:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        updates[key] = _parse_value(key, value, path, lineno)
    return replace(cfg, **updates)


def _parse_value(key, value, path, lineno):
    try:
        if key in _FLOAT_TUPLE_KEYS:
            return tuple(float(v) for v in value.split(","))
        if key in _INT_TUPLE_KEYS:
            return tuple(int(v) for v in value.split(","))
        current = getattr(CampaignConfig(kind="bias-sweep"), key)
        if isinstance(current, bool):
            return value.lower() in ("1", "true", "yes")
        if isinstance(current, int):
            return int(value)
        if isinstance(current, float):
            return float(value)
        return value
    except ValueError as exc:
        raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {value!r}") from exc


def validate_config(cfg: CampaignConfig) -> CampaignConfig:
    """Normalize sweep ordering and reject inconsistent configurations."""
    if cfg.kind not in KINDS:
        raise ConfigError(f"unknown campaign kind {cfg.kind!r}")
    if cfg.d < 2:
        raise ConfigError(f"dimension must be >= 2, got {cfg.d}")
    if cfg.family not in FAMILIES:
        raise ConfigError(f"unknown honeycomb family {cfg.family!r}")
    if cfg.model not in MODELS:
        raise ConfigError(f"unknown model {cfg.model!r}")
    if cfg.ell <= 0:
        raise ConfigError(f"length scale must be positive, got {cfg.ell}")
    if cfg.k < 1:
        raise ConfigError(f"chi-square degrees must be >= 1, got {cfg.k}")
    if cfg.reps < 2:
        raise ConfigError(f"stderr needs at least 2 replicates, got {cfg.reps}")
    if cfg.seed < 0:
        raise ConfigError(f"seed must be nonnegative, got {cfg.seed}")
    if cfg.threads < 1:
        raise ConfigError(f"thread count must be >= 1, got {cfg.threads}")
    if cfg.half_width <= 0:
        raise ConfigError(f"window half width must be positive, got {cfg.half_width}")
    for name in ("deltas", "qs", "levels"):
        if not getattr(cfg, name):
            raise ConfigError(f"{name} must be nonempty")
    if min(cfg.deltas) <= 0 or min(cfg.qs) <= 0:
        raise ConfigError("sweep values must be strictly positive")
    if len(set(cfg.deltas)) != len(cfg.deltas) or len(set(cfg.qs)) != len(cfg.qs):
        raise ConfigError("sweep values must be distinct")
    if not cfg.windows or min(cfg.windows) < 1:
        raise ConfigError("window list must contain positive lattice half extents")
    cfg = replace(
        cfg,
        deltas=tuple(sorted(cfg.deltas, reverse=True)),
        qs=tuple(sorted(cfg.qs, reverse=True)),
        windows=tuple(sorted(set(cfg.windows))),
    )
    if cfg.family == "voronoi" and cfg.d != 2:
        raise ConfigError("the voronoi family is only available in dimension 2")
    if cfg.family == "hexagonal" and cfg.d != 2:
        raise ConfigError("the hexagonal family is only available in dimension 2")
    if cfg.kind == "crossing" and cfg.model != "gaussian":
        raise ConfigError("the crossing campaign supports the gaussian model only")
    if cfg.kind in ("bias-sweep", "volume-check") and cfg.family == "hypercubic":
        for delta in cfg.deltas:
            _lattice_half_extent(cfg.half_width, delta)
    if cfg.kind == "crossing" and cfg.n_pairs < cfg.reps:
        raise ConfigError("n_pairs must be at least the replicate count")
    if cfg.kind == "crofton-demo":
        if cfg.n_lines < cfg.reps:
            raise ConfigError("n_lines must be at least the replicate count")
        if cfg.shape not in ("circle", "square", "both"):
            raise ConfigError(f"unknown crofton shape {cfg.shape!r}")
    return cfg


def _lattice_half_extent(half_width: float, delta: float) -> int:
    n = half_width / delta
    n_int = round(n)
    if abs(n - n_int) > 1e-9 or n_int < 1:
        raise ConfigError(
            f"spacing {delta} does not divide the window half width {half_width}"
        )
    return int(n_int)


@dataclass(eq=False)
class McCampaignResult:
    kind: str
    rows: list
    raw: list
    config: CampaignConfig
    config_hash: str
    wall_clock_s: float

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(_csv_text(self.rows, self.config_hash))

    def raw_csv_text(self) -> str:
        return _csv_text(self.raw, self.config_hash)

    def write_json(self, path) -> None:
        payload = {
            "kind": self.kind,
            "config": {
                k: v
                for k, v in asdict(self.config).items()
                if k not in _NON_SEMANTIC_FIELDS
            },
            "config_hash": self.config_hash,
            "wall_clock_s": self.wall_clock_s,
            "rows": self.rows,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _csv_text(rows, config_hash) -> str:
    if not rows:
        return "config_hash\n"
    names = list(rows[0].keys()) + ["config_hash"]
    lines = [",".join(names)]
    for row in rows:
        lines.append(",".join([_fmt(row[k]) for k in rows[0].keys()] + [config_hash]))
    return "\n".join(lines) + "\n"


def _rep_seed(base: int, *indices) -> tuple:
    return (int(base),) + tuple(int(i) for i in indices)


def _parallel(fn, count: int, threads: int) -> list:
    if threads <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def _mean_stderr(values: np.ndarray) -> tuple:
    values = np.asarray(values, dtype=float)
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


def run_campaign(cfg: CampaignConfig) -> McCampaignResult:
    cfg = validate_config(cfg)
    runners = {
        "bias-sweep": run_bias_sweep,
        "crossing": run_crossing_convergence,
        "clt": run_clt,
        "crofton-demo": run_crofton_demo,
        "volume-check": run_volume_check,
    }
    return runners[cfg.kind](cfg)


# ---------------------------------------------------------------------------
# bias sweep
# ---------------------------------------------------------------------------

def _reference_surface_density(cfg: CampaignConfig) -> float:
    lam = 1.0 / (cfg.ell * cfg.ell)
    if cfg.model == "gaussian":
        return gaussian_surface_density(cfg.u, lam, cfg.d)
    return chisq_surface_density(cfg.u, lam, cfg.d, cfg.k)


def _reference_volume_density(cfg: CampaignConfig, u: float) -> float:
    if cfg.model == "gaussian":
        return gaussian_volume_density(u)
    return chisq_volume_density(u, cfg.k)


def _grid_values(cfg: CampaignConfig, model: CovarianceModel, grid: GridSpec, seed_key):
    if cfg.model == "gaussian":
        return sample_gaussian_grid(model, grid, seed_key).values
    return sample_chi_square(model, cfg.k, grid, seed_key).values


def _point_values(cfg: CampaignConfig, model: CovarianceModel, points, seed_key):
    if cfg.model == "gaussian":
        return sample_gaussian_points(model, points, seed_key, max_points=cfg.point_cap)
    return sample_chi_square(model, cfg.k, points, seed_key, max_points=cfg.point_cap)


def run_bias_sweep(cfg: CampaignConfig) -> McCampaignResult:
    """Replicated surface estimates over shrinking cells, as ratios to the
    analytic surface density; the mean ratio approaches 2d/beta_d from below."""
    cfg = validate_config(cfg)
    start = time.perf_counter()
    model = CovarianceModel(cfg.ell)
    denom = _reference_surface_density(cfg)
    window = Box(np.full(cfg.d, -cfg.half_width), np.full(cfg.d, cfg.half_width))
    rows, raw = [], []
    for si, delta in enumerate(cfg.deltas):
        if cfg.family == "hypercubic":
            grid = GridSpec(cfg.d, _lattice_half_extent(cfg.half_width, delta), delta)

            def one(rep, _grid=grid, _si=si):
                values = _grid_values(cfg, model, _grid, _rep_seed(cfg.seed, _si, rep))
                return hypercubic_surface_fast(values, _grid, cfg.u)

        elif cfg.family == "hexagonal":
            wh = hexagonal_honeycomb(delta, window)
            refs = wh.ref_points_inside

            def one(rep, _wh=wh, _refs=refs, _si=si):
                sample = _point_values(cfg, model, _refs, _rep_seed(cfg.seed, _si, rep))
                return surface_estimate(_wh, exceedance_indicator(sample, cfg.u))

        else:  # voronoi: fresh unit-rate cloud per replicate, scaled by delta
            def one(rep, _delta=delta, _si=si):
                unit_half = cfg.half_width / _delta + cfg.guard
                unit_box = Box(np.full(2, -unit_half), np.full(2, unit_half))
                pts = _delta * sample_poisson_process(
                    1.0, unit_box, _rep_seed(cfg.seed, _si, rep, 0)
                )
                if pts.shape[0] < 2:
                    return 0.0
                wh = voronoi_honeycomb_2d(pts, window, cfg.guard * _delta)
                sample = _point_values(
                    cfg, model, wh.ref_points_inside, _rep_seed(cfg.seed, _si, rep, 1)
                )
                return surface_estimate(wh, exceedance_indicator(sample, cfg.u))

        surfaces = np.array(_parallel(one, cfg.reps, cfg.threads))
        ratios = surfaces / denom
        corrected = np.array([corrected_surface(r, cfg.d) for r in ratios])
        mean_ratio, se_ratio = _mean_stderr(ratios)
        mean_corr, se_corr = _mean_stderr(corrected)
        rows.append(
            {
                "delta": delta,
                "mean_ratio": mean_ratio,
                "stderr_ratio": se_ratio,
                "mean_ratio_corrected": mean_corr,
                "stderr_ratio_corrected": se_corr,
                "mean_surface_raw": float(surfaces.mean()),
                "target_bias": 2.0 * cfg.d / beta_d(cfg.d),
                "reps": cfg.reps,
            }
        )
        for rep, (s, r) in enumerate(zip(surfaces, ratios)):
            raw.append({"delta": delta, "replicate": rep, "surface_raw": float(s), "ratio": float(r)})
    return McCampaignResult(
        kind=cfg.kind,
        rows=rows,
        raw=raw,
        config=cfg,
        config_hash=cfg.config_hash(),
        wall_clock_s=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# crossing-rate convergence
# ---------------------------------------------------------------------------

def run_crossing_convergence(cfg: CampaignConfig) -> McCampaignResult:
    """beta_d * p_hat / q over a descending lag sweep; the estimate approaches
    the surface density from below as q -> 0."""
    cfg = validate_config(cfg)
    start = time.perf_counter()
    model = CovarianceModel(cfg.ell)
    target = _reference_surface_density(cfg)
    batch = cfg.n_pairs // cfg.reps
    factor = beta_d(cfg.d)
    rows, raw = [], []
    for qi, q in enumerate(cfg.qs):

        def one(rep, _q=q, _qi=qi):
            return crossing_frequency(model, cfg.u, _q, batch, _rep_seed(cfg.seed, _qi, rep))

        freqs = np.array(_parallel(one, cfg.reps, cfg.threads))
        estimates = factor * freqs / q
        est, se = _mean_stderr(estimates)
        rows.append(
            {
                "q": q,
                "p_hat": float(freqs.mean()),
                "estimate": est,
                "stderr": se,
                "below_limit": bool(est <= target + 3.0 * se),
                "target": target,
                "pairs_per_rep": batch,
                "reps": cfg.reps,
            }
        )
        for rep, (p, e) in enumerate(zip(freqs, estimates)):
            raw.append({"q": q, "replicate": rep, "p_hat": float(p), "estimate": float(e)})
    return McCampaignResult(
        kind=cfg.kind,
        rows=rows,
        raw=raw,
        config=cfg,
        config_hash=cfg.config_hash(),
        wall_clock_s=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# joint scaling / normality diagnostics
# ---------------------------------------------------------------------------

def run_clt(cfg: CampaignConfig) -> McCampaignResult:
    """Window sweep of the (volume, surface) estimator pair: scaled variances,
    scaled covariance, and standardized skewness/kurtosis per window."""
    cfg = validate_config(cfg)
    start = time.perf_counter()
    model = CovarianceModel(cfg.ell)
    delta = cfg.deltas[0]
    rows, raw = [], []
    for wi, half_extent in enumerate(cfg.windows):
        grid = GridSpec(cfg.d, int(half_extent), delta)

        def one(rep, _grid=grid, _wi=wi):
            values = _grid_values(cfg, model, _grid, _rep_seed(cfg.seed, _wi, rep))
            vol = float(np.count_nonzero(values >= cfg.u) / _grid.n_nodes)
            surf = hypercubic_surface_fast(values, _grid, cfg.u)
            return vol, surf

        pairs = np.array(_parallel(one, cfg.reps, cfg.threads))
        vol, surf = pairs[:, 0], pairs[:, 1]
        sigma_t = grid.window_volume
        rows.append(
            {
                "window_half_extent": int(half_extent),
                "sigma_T": sigma_t,
                "mean_volume": float(vol.mean()),
                "mean_surface": float(surf.mean()),
                "var_volume_scaled": float(sigma_t * vol.var(ddof=1)),
                "var_surface_scaled": float(sigma_t * surf.var(ddof=1)),
                "cov_scaled": float(sigma_t * np.cov(vol, surf, ddof=1)[0, 1]),
                "skew_volume": float(stats.skew(vol)),
                "kurt_volume": float(stats.kurtosis(vol)),
                "skew_surface": float(stats.skew(surf)),
                "kurt_surface": float(stats.kurtosis(surf)),
                "reps": cfg.reps,
            }
        )
        for rep, (v, s) in enumerate(pairs):
            raw.append(
                {
                    "window_half_extent": int(half_extent),
                    "replicate": rep,
                    "volume": float(v),
                    "surface_raw": float(s),
                }
            )
    return McCampaignResult(
        kind=cfg.kind,
        rows=rows,
        raw=raw,
        config=cfg,
        config_hash=cfg.config_hash(),
        wall_clock_s=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# crofton demo and volume check
# ---------------------------------------------------------------------------

def run_crofton_demo(cfg: CampaignConfig) -> McCampaignResult:
    """Random-line measures of analytic shapes against their closed forms."""
    cfg = validate_config(cfg)
    start = time.perf_counter()
    shapes = []
    if cfg.shape in ("circle", "both"):
        shapes.append(
            ("circle", cfg.circle_radius, circle_shape(cfg.circle_radius), 2.0 * np.pi * cfg.circle_radius)
        )
    if cfg.shape in ("square", "both"):
        shapes.append(("square", cfg.square_side, square_shape(cfg.square_side), 4.0 * cfg.square_side))
    batch = cfg.n_lines // cfg.reps
    rows, raw = [], []
    for si, (name, param, oracle, truth) in enumerate(shapes):

        def one(rep, _oracle=oracle, _si=si):
            est = crofton_measure_mc(_oracle, 2, batch, cfg.bounding_radius, _rep_seed(cfg.seed, _si, rep))
            return est.value

        values = np.array(_parallel(one, cfg.reps, cfg.threads))
        est, se = _mean_stderr(values)
        rows.append(
            {
                "shape": name,
                "size": param,
                "estimate": est,
                "stderr": se,
                "truth": truth,
                "rel_error": abs(est - truth) / truth,
                "lines_total": batch * cfg.reps,
                "reps": cfg.reps,
            }
        )
        for rep, v in enumerate(values):
            raw.append({"shape": name, "replicate": rep, "estimate": float(v)})
    return McCampaignResult(
        kind=cfg.kind,
        rows=rows,
        raw=raw,
        config=cfg,
        config_hash=cfg.config_hash(),
        wall_clock_s=time.perf_counter() - start,
    )


def run_volume_check(cfg: CampaignConfig) -> McCampaignResult:
    """Mean lattice volume estimates against the analytic volume density."""
    cfg = validate_config(cfg)
    if cfg.family != "hypercubic":
        raise ConfigError("the volume check runs on the hypercubic family only")
    start = time.perf_counter()
    model = CovarianceModel(cfg.ell)
    delta = cfg.deltas[0]
    half_extent = _lattice_half_extent(cfg.half_width, delta)
    grid = GridSpec(cfg.d, half_extent, delta)
    wh = hypercubic_honeycomb(delta, half_extent, cfg.d)
    rows, raw = [], []
    for ui, u in enumerate(cfg.levels):
        target = _reference_volume_density(cfg, u)

        def one(rep, _u=u, _ui=ui):
            values = _grid_values(cfg, model, grid, _rep_seed(cfg.seed, _ui, rep))
            ind = ExcursionIndicator(flags=values >= _u, u=_u, source_tag=cfg.model)
            return volume_estimate(wh, ind)

        vols = np.array(_parallel(one, cfg.reps, cfg.threads))
        mean, se = _mean_stderr(vols)
        rows.append(
            {
                "u": u,
                "mean_volume": mean,
                "stderr": se,
                "target": target,
                "abs_error": abs(mean - target),
                "reps": cfg.reps,
            }
        )
        for rep, v in enumerate(vols):
            raw.append({"u": u, "replicate": rep, "volume": float(v)})
    return McCampaignResult(
        kind=cfg.kind,
        rows=rows,
        raw=raw,
        config=cfg,
        config_hash=cfg.config_hash(),
        wall_clock_s=time.perf_counter() - start,
    )
