"""Monte Carlo experiment driver: trials, PUPE estimation, Eb/N0 sweeps.

A trial samples K_a uniform messages, runs the full encoder/channel/decoder
pipeline and counts a transmitted message as served only when its exact
(w_p, w_c) pair appears in the decoded list (false alarms never affect the
per-user error probability).
"""

from __future__ import annotations

import json
import math
import time
from collections import Counter
from dataclasses import dataclass, field, asdict

import numpy as np

from . import presets
from .joint_decoder import build_joint_graph, decode_joint
from .sensing import build_sensing_matrix, cs_detect
from .txchain import (FrameLayout, Message, RepetitionDD, apply_channel,
                      encode_user, powers_for_ebn0, rep_factor)


@dataclass
class SimConfig:
    """Everything needed to reproduce an operating point."""

    K_a: int
    B: int = 100
    B_p: int = 15
    N_t: int = 30000
    N_p: int = 2000
    P1: float = 1.0
    P2: float = 1.0
    K_tot: int | None = None  # nominal only; never enters the computation
    K_b: int | None = None  # default ceil(1.1 * K_a)
    epsilon: float = 0.05
    rate: float | None = None  # default from the per-K_a schedule
    nu: tuple | None = None  # default x^2
    channel: str = "awgn"
    preset: str = "sparse"  # sparse | idma75
    master_seed: int = 0
    trials: int = 200
    max_iters: int = 100
    clip: float = 30.0
    dp_max_degree: int = 16
    split_ratios: tuple = (1.0, 2.0, 4.0)
    cache_dir: str | None = None

    def __post_init__(self):
        if self.K_b is None:
            # round first: 1.1 * 100 is 110.00000000000001 in floats
            self.K_b = (math.ceil(round(1.1 * self.K_a, 9))
                        if self.K_a > 0 else 5)
        if self.preset == "idma75":
            self.rate = 0.25
            self.nu = tuple(presets.NU_IDMA_75.nu)
        if self.rate is None:
            self.rate = presets.rate_for_users(self.K_a)
        if self.nu is None:
            self.nu = tuple(presets.nu_for_users(self.K_a).nu)
        if self.K_tot is not None and self.K_a > self.K_tot:
            raise ValueError("K_a exceeds K_tot")
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError("epsilon must lie in (0, 1]")

    @property
    def layout(self):
        return FrameLayout(B=self.B, B_p=self.B_p, N_t=self.N_t,
                           N_p=self.N_p, P1=self.P1, P2=self.P2)

    @property
    def repetition(self):
        return RepetitionDD(nu=self.nu)

    def with_powers(self, P1, P2):
        d = asdict(self)
        d["P1"], d["P2"] = float(P1), float(P2)
        return SimConfig(**d)

    def to_json(self):
        return json.dumps(asdict(self), indent=2)

    @staticmethod
    def from_json(text):
        d = json.loads(text)
        for key in ("nu", "split_ratios"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return SimConfig(**d)

    @staticmethod
    def load(path):
        with open(path) as fh:
            return SimConfig.from_json(fh.read())

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())


class SimContext:
    """Shared per-config state: the lifted code and the sensing matrix."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.code = presets.code_for_rate(config.rate,
                                          cache_dir=config.cache_dir)
        self.sensing = build_sensing_matrix(
            config.B_p, config.N_p, config.P1, seed=config.master_seed,
            mode=config.channel)
        layout = config.layout
        if self.code.N * config.repetition.L > layout.N_c:
            raise ValueError("repetition overflow: N*L exceeds N_c")


@dataclass
class TrialOutcome:
    transmitted: list  # full message indices
    decoded: set  # decoded full message indices (deduplicated)
    misses: int
    collisions: int  # users sharing a preamble with another user
    missed_detections: int  # transmitted preambles absent from the CS list
    false_alarms: int
    decoder_iterations: int

    @property
    def K_a(self):
        return len(self.transmitted)


def run_trial(ctx: SimContext, trial_index: int) -> TrialOutcome:
    """One end-to-end trial with a seed stream derived from (master, index)."""
    cfg = ctx.config
    layout = cfg.layout
    dd = cfg.repetition
    rng = np.random.default_rng([cfg.master_seed, trial_index])

    messages = []
    for _ in range(cfg.K_a):
        bits = rng.integers(0, 2, size=cfg.B)
        w = 0
        for i, b in enumerate(bits):
            if b:
                w |= 1 << i
        messages.append(Message.from_index(w, layout))

    signals = [
        encode_user(m, layout, dd, ctx.code, ctx.sensing,
                    global_seed=cfg.master_seed)
        for m in messages
    ]
    if cfg.K_a > 0:
        y, gains = apply_channel(signals, mode=cfg.channel, rng=rng)
    else:
        from .txchain import apply_channel_empty

        y = apply_channel_empty(layout.N_t, mode=cfg.channel, rng=rng)
        gains = np.zeros(0)

    y_p = y[: layout.N_p]
    if cfg.channel == "rayleigh":
        y_p = y_p[: layout.N_p // 2]
    detection = cs_detect(y_p, ctx.sensing, cfg.K_b)

    y_c = y[layout.N_p :]
    graph = build_joint_graph(detection, layout, dd, ctx.code, y_c,
                              global_seed=cfg.master_seed, mode=cfg.channel)
    result = decode_joint(graph, max_iters=cfg.max_iters, clip=cfg.clip,
                          dp_max_degree=cfg.dp_max_degree)
    decoded = result.message_set(layout)

    transmitted = [m.w for m in messages]
    misses = sum(1 for w in transmitted if w not in decoded)
    preamble_counts = Counter(m.w_p for m in messages)
    collisions = sum(1 for m in messages if preamble_counts[m.w_p] > 1)
    detected_set = set(int(i) for i in detection.indices)
    missed_det = sum(1 for m in messages if m.w_p not in detected_set)
    false_alarms = sum(1 for w in decoded if w not in set(transmitted))
    return TrialOutcome(
        transmitted=transmitted, decoded=decoded, misses=misses,
        collisions=collisions, missed_detections=missed_det,
        false_alarms=false_alarms,
        decoder_iterations=result.total_iterations)


def wilson_interval(k, n, z=1.959963984540054):
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass
class PupeEstimate:
    pe: float
    ci_low: float
    ci_high: float
    trials: int
    total_users: int
    total_misses: int
    outcomes: list = field(repr=False, default_factory=list)


def estimate_pupe(config: SimConfig, trials=None, ctx=None,
                  keep_outcomes=False, stop_when_hopeless=None) -> PupeEstimate:
    """PUPE estimate with a 95% Wilson interval pooled over users.

    `stop_when_hopeless`: optional Pe target; sampling stops early once the
    lower confidence bound exceeds it (saves time during sweeps).
    """
    if trials is None:
        trials = config.trials
    if trials < 1:
        raise ValueError("need at least one trial")
    if ctx is None:
        ctx = SimContext(config)
    total_users = 0
    total_misses = 0
    outcomes = []
    for t in range(trials):
        out = run_trial(ctx, t)
        total_users += out.K_a
        total_misses += out.misses
        if keep_outcomes:
            outcomes.append(out)
        if stop_when_hopeless is not None and (t + 1) >= 20:
            lo, _hi = wilson_interval(total_misses, total_users)
            if lo > stop_when_hopeless:
                trials = t + 1
                break
    pe = total_misses / total_users if total_users else 0.0
    lo, hi = wilson_interval(total_misses, total_users)
    return PupeEstimate(pe=pe, ci_low=lo, ci_high=hi, trials=trials,
                        total_users=total_users, total_misses=total_misses,
                        outcomes=outcomes)


@dataclass
class SweepPoint:
    ebn0_db: float
    split_ratio: float
    P1: float
    P2: float
    pe: float
    ci_low: float
    ci_high: float
    trials: int
    wall_time_s: float


@dataclass
class SweepResult:
    feasible: bool
    ebn0_db: float | None
    P1: float | None
    P2: float | None
    split_ratio: float | None
    pe: float | None
    best_pe: float
    points: list


def find_min_ebn0(config: SimConfig, lo_db, hi_db, coarse_step=0.5,
                  fine_step=0.25, trials=None, split_ratios=None,
                  verbose=False) -> SweepResult:
    """Smallest grid Eb/N0 whose PUPE upper confidence bound is <= epsilon.

    Coarse ascending scan (default 0.5 dB) over the configured split ratios,
    then a single refinement step (default 0.25 dB) below the first feasible
    point.  Returns an infeasible result (with the best Pe seen) when no grid
    point passes.
    """
    if trials is None:
        trials = config.trials
    if split_ratios is None:
        split_ratios = config.split_ratios
    eps = config.epsilon
    points = []
    best_pe = math.inf
    layout0 = config.layout

    def evaluate(ebn0_db, ratio):
        P1, P2 = powers_for_ebn0(layout0, ebn0_db, ratio)
        cfg = config.with_powers(P1, P2)
        t0 = time.time()
        est = estimate_pupe(cfg, trials=trials, stop_when_hopeless=eps)
        pt = SweepPoint(ebn0_db=ebn0_db, split_ratio=ratio, P1=P1, P2=P2,
                        pe=est.pe, ci_low=est.ci_low, ci_high=est.ci_high,
                        trials=est.trials, wall_time_s=time.time() - t0)
        points.append(pt)
        if verbose:
            print(f"  ebn0={ebn0_db:+.2f} dB split={ratio:g} "
                  f"Pe={est.pe:.4f} [{est.ci_low:.4f},{est.ci_high:.4f}]")
        return pt

    feasible_pt = None
    n_coarse = int(round((hi_db - lo_db) / coarse_step)) + 1
    for i in range(n_coarse):
        e = lo_db + i * coarse_step
        for ratio in split_ratios:
            pt = evaluate(e, ratio)
            best_pe = min(best_pe, pt.pe)
            if pt.ci_high <= eps:
                feasible_pt = pt
                break
        if feasible_pt is not None:
            break
    if feasible_pt is None:
        return SweepResult(feasible=False, ebn0_db=None, P1=None, P2=None,
                           split_ratio=None, pe=None, best_pe=best_pe,
                           points=points)
    # refine: try the fine-grid point just below the coarse solution
    e_fine = feasible_pt.ebn0_db - fine_step
    if e_fine >= lo_db - 1e-9:
        for ratio in split_ratios:
            pt = evaluate(e_fine, ratio)
            best_pe = min(best_pe, pt.pe)
            if pt.ci_high <= eps:
                feasible_pt = pt
                break
    return SweepResult(feasible=True, ebn0_db=feasible_pt.ebn0_db,
                       P1=feasible_pt.P1, P2=feasible_pt.P2,
                       split_ratio=feasible_pt.split_ratio,
                       pe=feasible_pt.pe, best_pe=best_pe, points=points)


REPORT_HEADER = ["K_a", "rate", "nu", "channel", "ebn0_db", "pe", "ci_low",
                 "ci_high", "trials", "wall_time_s"]


def emit_report(results, csv_path, plot_path=None):
    """Write result rows as CSV plus an optional K_a-vs-Eb/N0 curve file.

    Each result is a dict with the REPORT_HEADER keys.  Returns the rows
    written (useful for the monotone-trend sanity check).
    """
    import csv

    rows = []
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_HEADER)
        for r in results:
            row = [r[k] for k in REPORT_HEADER]
            w.writerow(row)
            rows.append(row)
    if plot_path is not None:
        with open(plot_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["K_a", "required_ebn0_db"])
            for r in results:
                w.writerow([r["K_a"], r["ebn0_db"]])
    return rows


def required_ebn0_is_monotone(results):
    """Sanity flag: required Eb/N0 non-decreasing along a K_a sweep."""
    ordered = sorted(results, key=lambda r: r["K_a"])
    vals = [r["ebn0_db"] for r in ordered]
    return all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))
