"""Parameter sweeps over photon flux: run estimator ensembles per grid point
and persist tidy CSV rows alongside the analytic predictions.

The sweep spec is a flat INI file (section [sweep], key = value). The grid is
given in units of (N/kappa)^((p-1)/p), the natural abscissa on which every
exponent's asymptotic MSE is the same power of the grid value.
"""

from __future__ import annotations

import configparser
import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bounds import filter_mse_power_law, qcrb_power_law
from .errors import ValidationError
from .lg import build_lg_system, lg_filter_mse
from .phase_process import PhaseModel
from .simulation import default_config, run_abc_trials, simulate_filter_trials

__all__ = ["SweepSpec", "parse_sweep_spec", "run_sweep", "CSV_HEADER", "derive_seed"]

CSV_HEADER = [
    "p",
    "N_over_kappa",
    "estimator",
    "mse",
    "stderr",
    "n_trials",
    "dt",
    "duration",
    "seed",
    "lg_filter_mse",
    "qcrb",
    "wiener_filter_mse",
]

_KNOWN_ESTIMATORS = ("filter", "smoother", "abc")


@dataclass(frozen=True)
class SweepSpec:
    """Validated sweep description."""

    p_values: tuple[int, ...]
    kappa: float
    grid: tuple[float, ...]  # values of (N/kappa)^((p-1)/p)
    estimators: tuple[str, ...]
    trials: int
    seed: int
    linearized: bool = False
    abc_chi: Optional[float] = None
    abc_cutoff: Optional[float] = None
    dt_factor: float = 0.01
    duration_factor: float = 1000.0
    burn_in_factor: float = 20.0
    wrap_errors: bool = False

    def __post_init__(self):
        if not self.p_values:
            raise ValidationError("sweep spec field 'p' must list at least one even exponent")
        for p in self.p_values:
            if p % 2 != 0 or p < 2:
                raise ValidationError(f"sweep spec field 'p' must hold even integers >= 2, got {p}")
        if not self.kappa > 0:
            raise ValidationError("sweep spec field 'kappa' must be positive")
        if not self.grid or any(g <= 0 for g in self.grid):
            raise ValidationError("sweep spec field 'grid' must list positive values")
        if not self.estimators:
            raise ValidationError("sweep spec field 'estimators' must not be empty")
        for est in self.estimators:
            if est not in _KNOWN_ESTIMATORS:
                raise ValidationError(
                    f"sweep spec field 'estimators' has unknown entry {est!r} "
                    f"(choose from {_KNOWN_ESTIMATORS})"
                )
        if self.trials < 2:
            raise ValidationError("sweep spec field 'trials' must be >= 2")
        if self.abc_chi is not None and not self.abc_chi > 0:
            raise ValidationError("sweep spec field 'abc_chi' must be positive")
        if self.abc_cutoff is not None and not self.abc_cutoff > 0:
            raise ValidationError("sweep spec field 'abc_cutoff' must be positive")


def _get(section, key, cast, default=None, required=False):
    if key not in section:
        if required:
            raise ValidationError(f"sweep spec is missing required field '{key}'")
        return default
    raw = section[key].strip()
    try:
        return cast(raw)
    except (ValueError, TypeError) as exc:
        raise ValidationError(f"sweep spec field '{key}' is invalid: {raw!r}") from exc


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.replace(",", " ").split())


def _ints(raw: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in raw.replace(",", " ").split())


def _words(raw: str) -> tuple[str, ...]:
    return tuple(tok for tok in raw.replace(",", " ").split())


def _bool(raw: str) -> bool:
    val = raw.strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def parse_sweep_spec(path) -> SweepSpec:
    """Read and validate an INI sweep spec; errors name the offending field."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ValidationError(f"cannot read sweep spec file {path!r}")
    if "sweep" not in parser:
        raise ValidationError("sweep spec needs a [sweep] section")
    sec = parser["sweep"]

    if "grid" in sec:
        grid = _get(sec, "grid", _floats, required=True)
    else:
        gmin = _get(sec, "grid_min", float, required=True)
        gmax = _get(sec, "grid_max", float, required=True)
        gnum = _get(sec, "grid_points", int, required=True)
        if gnum < 1 or gmin <= 0 or gmax < gmin:
            raise ValidationError("sweep spec fields 'grid_min'/'grid_max'/'grid_points' are inconsistent")
        grid = tuple(np.logspace(math.log10(gmin), math.log10(gmax), gnum))

    return SweepSpec(
        p_values=_get(sec, "p", _ints, required=True),
        kappa=_get(sec, "kappa", float, default=1.0),
        grid=grid,
        estimators=_get(sec, "estimators", _words, required=True),
        trials=_get(sec, "trials", int, default=64),
        seed=_get(sec, "seed", int, required=True),
        linearized=_get(sec, "linearized", _bool, default=False),
        abc_chi=_get(sec, "abc_chi", float),
        abc_cutoff=_get(sec, "abc_cutoff", float),
        dt_factor=_get(sec, "dt_factor", float, default=0.01),
        duration_factor=_get(sec, "duration_factor", float, default=1000.0),
        burn_in_factor=_get(sec, "burn_in_factor", float, default=20.0),
        wrap_errors=_get(sec, "wrap_errors", _bool, default=False),
    )


def derive_seed(*parts: int) -> int:
    """Collapse (master seed, indices...) into one reproducible integer seed."""
    state = np.random.SeedSequence(list(parts)).generate_state(2)
    return int(state[0]) << 32 | int(state[1])


def _point_rows(spec: SweepSpec, p_idx: int, g_idx: int) -> list[dict]:
    """All estimator rows for one (p, grid) sweep point."""
    p = spec.p_values[p_idx]
    grid_val = spec.grid[g_idx]
    n_over_kappa = grid_val ** (p / (p - 1.0))
    flux = spec.kappa * n_over_kappa
    system = build_lg_system(p, spec.kappa, flux)
    analytic = {
        "lg_filter_mse": lg_filter_mse(system),
        "qcrb": qcrb_power_law(p, spec.kappa, flux),
        "wiener_filter_mse": filter_mse_power_law(p, spec.kappa, flux),
    }

    def base_row(estimator, mse, stderr, config):
        return {
            "p": p,
            "N_over_kappa": n_over_kappa,
            "estimator": estimator,
            "mse": mse,
            "stderr": stderr,
            "n_trials": spec.trials,
            "dt": config.dt,
            "duration": config.duration,
            "seed": spec.seed,
            **analytic,
        }

    rows = []
    want_filter = "filter" in spec.estimators
    want_smoother = "smoother" in spec.estimators
    if want_filter or want_smoother:
        model = PhaseModel(p, spec.kappa)
        config = default_config(
            system,
            seed=derive_seed(spec.seed, p_idx, g_idx, 0),
            duration_factor=spec.duration_factor,
            dt_factor=spec.dt_factor,
            burn_in_factor=spec.burn_in_factor,
            linearized=spec.linearized,
        )
        res = simulate_filter_trials(
            model, system, config, spec.trials, smoother=want_smoother, wrap_errors=spec.wrap_errors
        )
        if want_filter:
            rows.append(base_row("filter", res.filter_mse, res.filter_stderr, config))
        if want_smoother:
            rows.append(base_row("smoother", res.smoother_mse, res.smoother_stderr, config))

    if "abc" in spec.estimators:
        if spec.abc_chi is not None:
            chi = spec.abc_chi
        elif p == 2:
            chi = math.sqrt(system.mu)  # known optimum for the random-walk phase
        else:
            raise ValidationError(f"sweep spec field 'abc_chi' is required for p={p}")
        if spec.abc_cutoff is not None:
            dampings = (spec.abc_cutoff,) + (0.0,) * (p // 2 - 1)
            model = PhaseModel(p, spec.kappa, dampings)
        else:
            model = PhaseModel(p, spec.kappa)
        config = default_config(
            system,
            seed=derive_seed(spec.seed, p_idx, g_idx, 1),
            duration_factor=spec.duration_factor,
            dt_factor=spec.dt_factor,
            burn_in_factor=spec.burn_in_factor,
            linearized=spec.linearized,
        )
        res = run_abc_trials(model, system, config, spec.trials, chi, wrap_errors=spec.wrap_errors)
        name = "abc:diverged" if res.diverged else "abc"
        rows.append(base_row(name, res.mse, res.stderr, config))
    return rows


def _point_task(args):
    spec, p_idx, g_idx = args
    return _point_rows(spec, p_idx, g_idx)


def run_sweep(spec: SweepSpec, output_path, workers: int = 1) -> list[dict]:
    """Execute every (p, grid) point and stream rows to CSV.

    Points are dispatched to a process pool when workers > 1; rows are
    written in deterministic point order and flushed per point, so an
    interrupted sweep leaves a valid prefix of the full file.
    """
    points = [(spec, pi, gi) for pi in range(len(spec.p_values)) for gi in range(len(spec.grid))]
    all_rows: list[dict] = []
    with open(output_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_HEADER)
        writer.writeheader()
        fh.flush()
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for rows in pool.map(_point_task, points, chunksize=1):
                    writer.writerows(rows)
                    fh.flush()
                    all_rows.extend(rows)
        else:
            for task in points:
                rows = _point_task(task)
                writer.writerows(rows)
                fh.flush()
                all_rows.extend(rows)
    return all_rows
