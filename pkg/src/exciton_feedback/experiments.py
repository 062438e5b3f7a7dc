"""Seeded parameter sweeps over chain settings.

A :class:`ChainSettings` is a scalar recipe; :meth:`ChainSettings.model`
turns it into a concrete :class:`ChainModel`, drawing site-energy disorder
from the supplied seed.  Sweeps vary one recipe field (optionally a second
one as a series) and collect per-channel conductances, averaged over an
ensemble when disorder is on.
"""

from __future__ import annotations

import dataclasses
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import model as _model
from .dynamics import SolverError
from .model import ChainModel, chain_model, sample_disorder
from .observables import ALL_CHANNELS, Channel, NumericalInconsistencyError, channel_conductance

log = logging.getLogger(__name__)

UNITS = {
    "omega_rabi": "eV",
    "n_molecules": "",
    "feedback_lambda": "",
    "detector_efficiency": "",
    "feedback_target": "",
    "disorder_q": "eV",
    "spacing": "nm",
}
SWEEPABLE = ("omega_rabi", "n_molecules", "feedback_lambda", "detector_efficiency", "feedback_target", "disorder_q")
INTEGER_PARAMETERS = ("n_molecules", "feedback_target")

DEFAULT_OMEGA_GRID = tuple(np.round(np.linspace(0.0, 1.0, 21), 12))
DEFAULT_ENSEMBLE = 100
FEEDBACK_TARGETS = (1, 30, 50, 60)
FEEDBACK_LAMBDAS = tuple(np.round(np.arange(0.0, 1.0001, 0.1), 12))
FEEDBACK_ETAS = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class ChainSettings:
    n_molecules: int = 10
    omega_rabi: float = 0.0
    site_energy: float = _model.DISORDER_MEAN
    omega_cavity: Optional[float] = None
    delta: Optional[float] = None
    spacing: float = _model.SPACING
    dipole_moment: float = _model.DIPOLE_MOMENT
    dipole_orientation: tuple = _model.PERPENDICULAR
    gamma_r: float = _model.GAMMA_R
    gamma_nr: float = _model.GAMMA_NR
    gamma_phi: float = _model.GAMMA_PHI
    kappa: float = _model.KAPPA
    gamma_p: float = _model.GAMMA_P
    hopping_enabled: bool = True
    cavity_coupling_enabled: bool = True
    nearest_neighbor_only: bool = False
    feedback_target: Optional[int] = None
    feedback_lambda: float = 0.0
    detector_efficiency: float = 1.0
    disorder_q: float = 0.0
    fix_ends: bool = True

    def replace(self, **changes) -> "ChainSettings":
        return dataclasses.replace(self, **changes)

    def model(self, seed=None) -> ChainModel:
        energies = None
        if self.disorder_q > 0:
            energies = sample_disorder(self.site_energy, self.disorder_q, self.n_molecules, self.fix_ends, seed)
        elif self.disorder_q < 0:
            raise ValueError(f"disorder_q must be >= 0, got {self.disorder_q}")
        params = {
            f.name: getattr(self, f.name)
            for f in dataclasses.fields(self)
            if f.name not in ("n_molecules", "omega_rabi", "disorder_q", "fix_ends")
        }
        return chain_model(self.n_molecules, self.omega_rabi, omega_molecule=energies, **params)


@dataclass(frozen=True)
class SweepSpec:
    base: ChainSettings
    parameter: str
    grid: tuple
    channels: tuple = (Channel.FULL,)
    ensemble: int = 1
    seed: int = 0
    series_parameter: Optional[str] = None
    series: tuple = ()

    def __post_init__(self):
        for name in filter(None, (self.parameter, self.series_parameter)):
            if name not in SWEEPABLE:
                raise ValueError(f"cannot sweep {name!r}; choose from {', '.join(SWEEPABLE)}")
        grid = tuple(_coerce(self.parameter, v) for v in self.grid)
        if not grid:
            raise ValueError("sweep grid is empty")
        steps = np.diff(np.asarray(grid, dtype=float))
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError("sweep grid must be strictly monotone")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "channels", tuple(Channel.parse(c) for c in self.channels))
        if not self.channels:
            raise ValueError("no channels requested")
        if self.ensemble < 1:
            raise ValueError(f"ensemble size must be >= 1, got {self.ensemble}")
        if self.series_parameter is None and self.series:
            raise ValueError("series values given without series_parameter")
        if self.series_parameter is not None:
            if not self.series:
                raise ValueError("series_parameter given without values")
            object.__setattr__(self, "series", tuple(_coerce(self.series_parameter, v) for v in self.series))

    @property
    def coord_names(self) -> tuple:
        if self.series_parameter is None:
            return (self.parameter,)
        return (self.series_parameter, self.parameter)


def _coerce(name, value):
    if name in INTEGER_PARAMETERS:
        if float(value) != int(value):
            raise ValueError(f"{name} must be an integer, got {value}")
        return int(value)
    return float(value)


@dataclass(frozen=True)
class EnsembleStat:
    mean: float
    stderr: float
    count: int

    @classmethod
    def of(cls, values: Sequence[float]) -> "EnsembleStat":
        values = np.asarray(values, dtype=float)
        n = values.size
        if n == 0:
            return cls(float("nan"), float("nan"), 0)
        if np.all(values == values[0]):
            # summing n copies and dividing can move the last bit
            return cls(float(values[0]), 0.0, n)
        stderr = float(np.std(values, ddof=1) / np.sqrt(n))
        return cls(float(np.mean(values)), stderr, n)


@dataclass(frozen=True)
class SweepRow:
    coords: tuple
    channel: Channel
    mean: float
    stderr: float = 0.0
    count: int = 1
    error: str = ""


@dataclass
class SweepTable:
    coord_names: tuple
    rows: list = field(default_factory=list)
    ensemble: int = 1
    meta: dict = field(default_factory=dict)

    @property
    def x_name(self) -> str:
        return self.coord_names[-1]

    def select(self, channel=None, **fixed) -> list:
        out = []
        for row in self.rows:
            if channel is not None and row.channel != Channel.parse(channel):
                continue
            coords = dict(zip(self.coord_names, row.coords))
            if all(coords[k] == v for k, v in fixed.items()):
                out.append(row)
        return out

    def values(self, channel=Channel.FULL, **fixed) -> np.ndarray:
        return np.array([row.mean for row in self.select(channel, **fixed)])

    def errors(self) -> list:
        return [row for row in self.rows if row.error]


def _evaluate(settings: ChainSettings, channels: tuple, seed) -> list:
    """Conductances of one ensemble member; errors come back as strings."""
    try:
        model = settings.model(seed)
    except ValueError as exc:
        return [(c, None, f"invalid model: {exc}") for c in channels]
    out = []
    for c in channels:
        try:
            out.append((c, channel_conductance(model, c).sigma_e, ""))
        except (SolverError, NumericalInconsistencyError, np.linalg.LinAlgError) as exc:
            out.append((c, None, f"{type(exc).__name__}: {exc}"))
    return out


def member_seeds(seed: int, ensemble: int) -> list:
    """Independent per-member seeds; member k reuses its draw at every grid point."""
    return np.random.SeedSequence(seed).spawn(ensemble)


def _run_tasks(tasks, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_evaluate, *zip(*tasks)))
    return [_evaluate(*t) for t in tasks]


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepTable:
    """Evaluate every grid point (x series) x ensemble member.

    Results are assembled in grid order whatever the completion order, and a
    point with any failed member becomes an error row.
    """
    seeds = member_seeds(spec.seed, spec.ensemble) if spec.ensemble > 1 or spec.base.disorder_q > 0 else [None]
    series = spec.series if spec.series_parameter else (None,)
    points = []
    for s_value, x in itertools.product(series, spec.grid):
        changes = {spec.parameter: x}
        if spec.series_parameter:
            changes[spec.series_parameter] = s_value
        coords = (x,) if spec.series_parameter is None else (s_value, x)
        points.append((coords, spec.base.replace(**changes)))
    tasks = [(settings, spec.channels, seed) for _, settings in points for seed in seeds]
    results = _run_tasks(tasks, workers)
    table = SweepTable(spec.coord_names, ensemble=spec.ensemble)
    k = 0
    for coords, _ in points:
        members = results[k : k + len(seeds)]
        k += len(seeds)
        for i, channel in enumerate(spec.channels):
            outcomes = [m[i] for m in members]
            failures = [err for _, _, err in outcomes if err]
            if failures:
                log.warning("sweep point %s (%s) failed: %s", coords, channel.value, failures[0])
                table.rows.append(SweepRow(coords, channel, float("nan"), float("nan"), len(outcomes) - len(failures), failures[0]))
                continue
            stat = EnsembleStat.of([v for _, v, _ in outcomes])
            table.rows.append(SweepRow(coords, channel, stat.mean, stat.stderr, stat.count))
    return table


class NoCrossoverError(RuntimeError):
    def __init__(self, message, n_values, sigma_nh, sigma_wc):
        super().__init__(message)
        self.n_values = n_values
        self.sigma_nh = sigma_nh
        self.sigma_wc = sigma_wc


@dataclass(frozen=True)
class CrossoverResult:
    n_star: int
    n_values: np.ndarray
    sigma_nh: np.ndarray
    sigma_wc: np.ndarray

    @property
    def sign_changes(self) -> int:
        d = np.sign(self.sigma_nh - self.sigma_wc)
        return int(np.count_nonzero(d[1:] != d[:-1]))


def crossover_curves(settings: ChainSettings, n_range=(5, 40), omega_rabi: float = 1.0, workers: int = 1):
    lo, hi = n_range
    ns = np.arange(lo, hi + 1)
    spec = SweepSpec(
        settings.replace(omega_rabi=omega_rabi),
        "n_molecules",
        tuple(int(n) for n in ns),
        channels=(Channel.NH, Channel.WC),
    )
    table = run_sweep(spec, workers)
    if table.errors():
        raise SolverError(f"crossover sweep failed: {table.errors()[0].error}")
    return ns, table.values(Channel.NH), table.values(Channel.WC)


def find_crossover(settings: ChainSettings, n_range=(5, 40), omega_rabi: float = 1.0, workers: int = 1) -> CrossoverResult:
    """Smallest chain length at which the cavity-only channel catches up with hopping.

    That is the first ``N`` with ``sigma_NH(N) >= sigma_WC(N)`` while
    ``sigma_NH(N-1) < sigma_WC(N-1)``.
    """
    ns, nh, wc = crossover_curves(settings, n_range, omega_rabi, workers)
    ahead = nh >= wc
    for i in range(1, ns.size):
        if ahead[i] and not ahead[i - 1]:
            return CrossoverResult(int(ns[i]), ns, nh, wc)
    raise NoCrossoverError(f"no crossover of sigma_NH and sigma_WC for N in {tuple(n_range)}", ns, nh, wc)


def omega_sweep(settings: ChainSettings, n_values=(5, 10, 40, 60), grid=DEFAULT_OMEGA_GRID, channels=(Channel.FULL,), workers=1):
    spec = SweepSpec(settings, "omega_rabi", tuple(grid), channels, series_parameter="n_molecules", series=tuple(n_values))
    return run_sweep(spec, workers)


def disorder_study(
    settings: ChainSettings,
    q: float = _model.DISORDER_STD,
    ensemble: int = DEFAULT_ENSEMBLE,
    seed: int = 0,
    grid=DEFAULT_OMEGA_GRID,
    channels=ALL_CHANNELS,
    workers: int = 1,
) -> SweepTable:
    """Ensemble-averaged conductances with Normal(site_energy, q^2) site energies."""
    if q < 0:
        raise ValueError(f"disorder width must be >= 0, got {q}")
    spec = SweepSpec(settings.replace(disorder_q=q), "omega_rabi", tuple(grid), tuple(channels), ensemble, seed)
    table = run_sweep(spec, workers)
    table.meta.update(disorder_q=q, disorder_mean=settings.site_energy, ensemble=ensemble, seed=seed)
    return table


def feedback_study(
    settings: ChainSettings,
    targets: Optional[Sequence[int]] = None,
    lambda_grid: Sequence[float] = FEEDBACK_LAMBDAS,
    eta_grid: Sequence[float] = (1.0,),
    workers: int = 1,
) -> SweepTable:
    """Full-channel conductance over targets x efficiencies x feedback amplitudes."""
    n = settings.n_molecules
    targets = (n,) if targets is None else tuple(targets)
    for t in targets:
        if not 1 <= t <= n:
            raise ValueError(f"feedback target {t} outside 1..{n}")
    points = list(itertools.product(targets, eta_grid, lambda_grid))
    tasks = [
        (settings.replace(feedback_target=int(t), detector_efficiency=float(e), feedback_lambda=float(l)), (Channel.FULL,), None)
        for t, e, l in points
    ]
    results = _run_tasks(tasks, workers)
    table = SweepTable(("feedback_target", "detector_efficiency", "feedback_lambda"))
    for (t, e, l), [(channel, value, err)] in zip(points, results):
        coords = (int(t), float(e), float(l))
        if err:
            table.rows.append(SweepRow(coords, channel, float("nan"), float("nan"), 0, err))
        else:
            table.rows.append(SweepRow(coords, channel, value, 0.0, 1))
    return table


def feedback_panels(settings: ChainSettings, targets=FEEDBACK_TARGETS, grid=DEFAULT_OMEGA_GRID, lambda_grid=FEEDBACK_LAMBDAS, eta_grid=FEEDBACK_ETAS, lam=0.5, workers=1) -> dict:
    """The four feedback panels: targets vs coupling, amplitudes vs coupling, amplitude scan, efficiency scan."""
    n = settings.n_molecules
    targets = tuple(t for t in targets if t <= n) or (n,)
    fb = settings.replace(feedback_lambda=lam, detector_efficiency=1.0)
    return {
        "targets": run_sweep(SweepSpec(fb, "omega_rabi", tuple(grid), series_parameter="feedback_target", series=targets), workers),
        "amplitudes": run_sweep(
            SweepSpec(fb.replace(feedback_target=n), "omega_rabi", tuple(grid), series_parameter="feedback_lambda", series=(0.0, 0.25, 0.5)),
            workers,
        ),
        "lambda": run_sweep(SweepSpec(fb.replace(feedback_target=n), "feedback_lambda", tuple(lambda_grid)), workers),
        "eta": run_sweep(SweepSpec(fb.replace(feedback_target=n), "detector_efficiency", tuple(eta_grid)), workers),
    }
