"""Figure experiments: per-trial pipelines and the deterministic reducer.

Random streams are keyed so that every number a scheme sees depends only on
``(seed, trial, ...)`` and never on which other schemes run or on the worker
count:

* ``(trial, 0)``                      channel realization (shared by all schemes and sweep points)
* ``(trial, 1, crc32(label), sweep)`` scheme-internal randomness (randomization, random phases)
* ``(trial, 2)``                      CN(0, 1) noise samples for the rate expectation
* ``(trial, 3, G)``                   pilot noise for grouping ``G``
"""
from __future__ import annotations

import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .. import __version__
from ..beamform import (
    alternating_optimize_instantaneous,
    alternating_optimize_statistical,
    onoff_stats_pbit,
    onoff_stats_rpm,
    random_phases,
    solve_w_given_phi,
)
from ..channel import ChannelSet, ScenarioConfig, sample_channels
from ..numkit import ValidationError, complex_normal, substream
from ..outage import OutageQuery, outage_closed_form, outage_monte_carlo, outage_unit_phase
from ..pilots import ChannelEstimate, estimate_channels, run_pilot_phase
from ..rate import (
    ComboIndex,
    Constellation,
    all_onoff_states,
    combo_index_set,
    effective_channels,
    combined_gains,
    instantaneous_gains,
    mutual_information,
)
from .config import SCHEMA_VERSION, ExperimentSpec, SchemeSpec, parse_scheme, scenario_at, spec_to_dict

METRICS = {
    "fig2_outage_vs_snr": "outage",
    "fig3_power_vs_dy": "power",
    "fig4_outage_vs_pt": "outage",
    "fig5_rate_vs_dy": "rate",
    "fig6_rate_vs_kbar": "rate",
    "fig7_rate_vs_grouping": "rate",
}
FIG2_CHUNK = 50_000


class TrialError(RuntimeError):
    """A trial failed; the message names the trial and sweep point."""


@dataclass
class ResultTable:
    columns: dict[str, list]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValidationError(f"columns have unequal lengths {sorted(lengths)}")

    @property
    def name(self) -> str:
        return self.metadata["spec"]["experiment"]["name"]


def _label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def _resolve(s: SchemeSpec, cfg: ScenarioConfig) -> tuple[ScenarioConfig, int]:
    """Scenario seen by scheme ``s`` and its number of ON groups."""
    G = s.groups if s.groups is not None else cfg.G
    if s.kbar is not None:
        K = s.kbar
    elif s.groups is not None:
        K = G // 2
    else:
        K = cfg.Kbar
    if not 0 <= K <= G:
        raise ValidationError(f"scheme {s.label}: Kbar = {K} outside [0, G = {G}]")
    kw = {"G": G, "Kbar": K}
    if s.pt_dbm is not None:
        kw["pt_dbm"] = s.pt_dbm
    return replace(cfg, **kw), K


def scheme_gains(
    base: str,
    K: int,
    est: ChannelEstimate,
    true: ChannelSet,
    rng: np.random.Generator,
    spec: ExperimentSpec,
) -> np.ndarray:
    """Combined channels ``(theta_j^T H + hd^H) w`` over the equiprobable states of a scheme.

    Designs use the estimate; gains are evaluated on the true channels.
    """
    G = true.G
    if base in ("rpm", "pbit"):
        stats = onoff_stats_rpm(G, K) if base == "rpm" else onoff_stats_pbit(G)
        sol = alternating_optimize_statistical(
            est.H_hat, est.hd_hat, stats, spec.eps, spec.max_iter, rng, spec.randomization_samples
        )
        combos = combo_index_set(G, K) if base == "rpm" else all_onoff_states(G)
        return combined_gains(effective_channels(sol.w, sol.phi, true.H, true.hd), combos)
    if base == "random":
        phi = random_phases(G, rng)
        w, _ = solve_w_given_phi(phi, est.H_hat, est.hd_hat, onoff_stats_rpm(G, K))
        return combined_gains(effective_channels(w, phi, true.H, true.hd), combo_index_set(G, K))
    if base == "ub":
        return instantaneous_gains(true.H, true.hd, combo_index_set(G, K), est.H_hat, est.hd_hat)
    if base == "no_it":
        sol = alternating_optimize_instantaneous(est.H_hat, est.hd_hat)
        return np.array([(sol.theta_I @ true.H + true.hd.conj()) @ sol.w])
    if base == "no_ris":
        nd = np.linalg.norm(est.hd_hat)
        w = est.hd_hat / nd if nd > 0 else np.eye(true.N, dtype=complex)[0]
        return np.array([np.vdot(true.hd, w)])
    raise ValidationError(f"scheme base {base!r} is not available for {spec.name}")


def _metric(kind: str, base: str, gains: np.ndarray, cfg: ScenarioConfig, spec: ExperimentSpec, noise) -> float:
    power = cfg.Pt * np.abs(gains) ** 2
    if kind == "power":
        return float(np.mean(power))
    if kind == "outage":
        return float(np.mean(power / cfg.sigma2 < 2.0**spec.R - 1.0))
    const = Constellation.psk(cfg.M)
    r = mutual_information(gains, const, cfg.Pt / cfg.sigma2, noise).mean_bits
    if spec.overhead:
        pilots = 1 if base == "no_ris" else cfg.G + 1
        r *= 1.0 - pilots / cfg.Tc
    return r


def run_trial(spec: ExperimentSpec, sweep_idx: int, trial: int) -> list[float]:
    """Metric of every scheme for one channel realization at one sweep point."""
    value = spec.sweep_values[sweep_idx]
    try:
        cfg = scenario_at(spec, value)
        kind = METRICS[spec.name]
        noise = complex_normal(substream(spec.seed, (trial, 2)), spec.noise_samples) if kind == "rate" else None
        cache: dict[int, tuple[ChannelSet, ChannelEstimate]] = {}
        out = []
        for label in spec.schemes:
            s = parse_scheme(label)
            cfg_s, K = _resolve(s, cfg)
            if cfg_s.G not in cache:
                true = sample_channels(cfg_s, substream(spec.seed, (trial, 0)))
                if spec.csi == "perfect":
                    est = ChannelEstimate(true.hd, true.H)
                else:
                    block = run_pilot_phase(true, cfg_s, substream(spec.seed, (trial, 3, cfg_s.G)))
                    est = estimate_channels(block, cfg_s.Pp)
                cache[cfg_s.G] = (true, est)
            true, est = cache[cfg_s.G]
            rng = substream(spec.seed, (trial, 1, _label_key(label), sweep_idx))
            gains = scheme_gains(s.base, K, est, true, rng, spec)
            out.append(_metric(kind, s.base, gains, cfg_s, spec, noise))
        return out
    except Exception as exc:
        raise TrialError(f"trial {trial} at {spec.sweep_param}={value}: {exc}") from exc


def _fig2_chunk(spec: ExperimentSpec, sweep_idx: int, label: str, chunk: int) -> tuple[float, float, int]:
    s = parse_scheme(label)
    if s.base not in ("rpm", "unit"):
        raise ValidationError(f"{spec.name} supports rpm_k<n> and unit_k<n> schemes, got {label!r}")
    K = s.kbar if s.kbar is not None else spec.scenario.Kbar
    gamma = 10.0 ** (spec.sweep_values[sweep_idx] / 10.0)
    q = OutageQuery(K, spec.R, gamma, "optimal" if s.base == "rpm" else "unit")
    n = min(FIG2_CHUNK, spec.trials - chunk * FIG2_CHUNK)
    rng = substream(spec.seed, (chunk, 1, _label_key(label), sweep_idx))
    p, se = outage_monte_carlo(q, spec.scenario.G, n, rng, spec.outage_method)
    return p, se, n


def _call(args):
    fn, rest = args[0], args[1:]
    return fn(*rest)


def _map(tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [_call(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_call, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _stderr(vals: np.ndarray) -> float:
    return float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else float("nan")


def _metadata(spec: ExperimentSpec, metric: str) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "seed": spec.seed,
        "metric": metric,
        "sweep_column": spec.sweep_column,
        "spec": spec_to_dict(spec),
    }


def _run_fig2(spec: ExperimentSpec, workers: int) -> ResultTable:
    n_chunks = -(-spec.trials // FIG2_CHUNK)
    tasks = [
        (_fig2_chunk, spec, i, label, c)
        for i in range(len(spec.sweep_values))
        for label in spec.schemes
        for c in range(n_chunks)
    ]
    res = iter(_map(tasks, workers))
    cols: dict[str, list] = {spec.sweep_column: list(spec.sweep_values)}
    for label in spec.schemes:
        cols[f"outage_{label}"] = []
        cols[f"stderr_{label}"] = []
        cols[f"closed_form_{label}"] = []
    for i, snr_db in enumerate(spec.sweep_values):
        gamma = 10.0 ** (snr_db / 10.0)
        for label in spec.schemes:
            parts = [next(res) for _ in range(n_chunks)]
            p = sum(pc * nc for pc, _, nc in parts) / spec.trials
            se = math.sqrt(sum((sc * nc) ** 2 for _, sc, nc in parts)) / spec.trials
            s = parse_scheme(label)
            K = s.kbar if s.kbar is not None else spec.scenario.Kbar
            if s.base == "rpm":
                cf = outage_closed_form(OutageQuery(K, spec.R, gamma)).p
            else:
                cf = outage_unit_phase(OutageQuery(K, spec.R, gamma, "unit")).p
            cols[f"outage_{label}"].append(p)
            cols[f"stderr_{label}"].append(se)
            cols[f"closed_form_{label}"].append(cf)
    return ResultTable(cols, _metadata(spec, "outage"))


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> ResultTable:
    """Run every (sweep value, trial) pair and reduce in fixed order."""
    metric = METRICS[spec.name]
    if spec.name == "fig2_outage_vs_snr":
        return _run_fig2(spec, workers)
    tasks = [(run_trial, spec, i, t) for i in range(len(spec.sweep_values)) for t in range(spec.trials)]
    res = np.array(_map(tasks, workers), dtype=float).reshape(len(spec.sweep_values), spec.trials, len(spec.schemes))
    cols: dict[str, list] = {spec.sweep_column: list(spec.sweep_values)}
    for k, label in enumerate(spec.schemes):
        cols[f"{metric}_{label}"] = [float(np.mean(res[i, :, k])) for i in range(res.shape[0])]
        cols[f"stderr_{label}"] = [_stderr(res[i, :, k]) for i in range(res.shape[0])]
    return ResultTable(cols, _metadata(spec, metric))
