"""Microbenchmarks: fill a queue, drain it under wall-clock timing.

Rows come out with a fixed CSV schema so downstream plotting stays dumb:
queue, buckets, fill_mode, fill_value, seed, mops, mops_min, mops_max,
mean_abs_err, p99_abs_err, mean_search_len. Error columns are only nonzero
for the approximate queue and are measured on a separate instrumented pass
so they never distort the timed drain.
"""

from __future__ import annotations

import csv
import io
import random
import statistics
import time
from dataclasses import dataclass, field

from .baselines import BhQueue, HeapQueue, TimingWheel
from .bitmap_pq import FfsQueue
from .circular_pq import CffsQueue
from .errors import ConfigError
from .gradient_pq import ApproxGradientQueue, ApproxRange

CSV_COLUMNS = ["queue", "buckets", "fill_mode", "fill_value", "seed", "mops",
               "mops_min", "mops_max", "mean_abs_err", "p99_abs_err",
               "mean_search_len"]

QUEUE_KINDS = ("cffs", "hffs", "approx", "bh", "heap", "tw")


@dataclass
class BenchConfig:
    queue: str = "cffs"
    num_buckets: int = 10_000
    pkts_per_bucket: float | None = 1.0  # exactly one fill mode may be set
    occupancy: float | None = None
    repetitions: int = 10
    warmup: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.queue not in QUEUE_KINDS:
            raise ConfigError(f"unknown queue kind {self.queue!r}")
        if (self.pkts_per_bucket is None) == (self.occupancy is None):
            raise ConfigError(
                "set exactly one of pkts_per_bucket / occupancy")
        if self.occupancy is not None and not 0 < self.occupancy <= 1:
            raise ConfigError("occupancy must be in (0, 1]")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")

    @property
    def fill_mode(self) -> str:
        return "occupancy" if self.occupancy is not None else "pkts_per_bucket"

    @property
    def fill_value(self) -> float:
        return self.occupancy if self.occupancy is not None else self.pkts_per_bucket


def _fill_ranks(cfg: BenchConfig, rng: random.Random, num_buckets: int) -> list[int]:
    if cfg.occupancy is not None:
        nonempty = max(1, round(cfg.occupancy * num_buckets))
        buckets = rng.sample(range(num_buckets), nonempty)
        return sorted(buckets)  # one item per chosen bucket
    total = max(1, round(cfg.pkts_per_bucket * num_buckets))
    return [rng.randrange(num_buckets) for _ in range(total)]


def _make_queue(kind: str, num_buckets: int):
    if kind == "hffs":
        return FfsQueue(num_buckets)
    if kind == "cffs":
        return CffsQueue(num_buckets)
    if kind == "bh":
        return BhQueue(num_buckets)
    if kind == "heap":
        return HeapQueue()
    if kind == "tw":
        gran = 100_000
        return TimingWheel(horizon_ns=num_buckets * gran, num_slots=num_buckets)
    raise ConfigError(f"unknown queue kind {kind!r}")


def _drain_once(kind: str, num_buckets: int, ranks: list[int],
                record_errors: bool = False):
    """Fill then fully drain; returns (elapsed_seconds, approx_stats|None)."""
    if kind == "approx":
        rng_spec = ApproxRange.calibrate()
        q = ApproxGradientQueue(rng_spec)
        q.record_errors = record_errors
        span = rng_spec.capacity + 1
        base = rng_spec.i0
        for r in ranks:
            q.insert(base + (r * span) // num_buckets, r)
        t0 = time.perf_counter()
        while len(q):
            q.pop_max()
        elapsed = time.perf_counter() - t0
        stats = None
        if record_errors:
            errs = [abs(e) for e in q.errors]
            errs.sort()
            stats = {
                "mean_abs_err": sum(errs) / len(errs),
                "p99_abs_err": errs[min(len(errs) - 1, int(0.99 * len(errs)))],
                "mean_search_len": q.search_steps / max(q.pops, 1),
            }
        return elapsed, stats
    if kind == "tw":
        q = _make_queue(kind, num_buckets)
        for r in ranks:
            q.insert(r * q.granularity, r)
        t0 = time.perf_counter()
        q.advance(num_buckets * q.granularity)
        return time.perf_counter() - t0, None
    q = _make_queue(kind, num_buckets)
    for r in ranks:
        q.insert(r, r)
    t0 = time.perf_counter()
    while True:
        if q.pop_min() is None:
            break
    return time.perf_counter() - t0, None


def run_bench(cfg: BenchConfig) -> dict:
    """One CSV row: median drain throughput over the timed repetitions."""
    rng = random.Random(cfg.seed)
    ranks = _fill_ranks(cfg, rng, cfg.num_buckets)
    n = len(ranks)
    for _ in range(cfg.warmup):
        _drain_once(cfg.queue, cfg.num_buckets, ranks)
    rates = []
    for _ in range(cfg.repetitions):
        elapsed, _ = _drain_once(cfg.queue, cfg.num_buckets, ranks)
        rates.append(n / elapsed / 1e6)
    stats = {"mean_abs_err": 0.0, "p99_abs_err": 0.0, "mean_search_len": 0.0}
    if cfg.queue == "approx":
        _, approx_stats = _drain_once(cfg.queue, cfg.num_buckets, ranks,
                                      record_errors=True)
        stats = approx_stats
    return {
        "queue": cfg.queue,
        "buckets": cfg.num_buckets,
        "fill_mode": cfg.fill_mode,
        "fill_value": cfg.fill_value,
        "seed": cfg.seed,
        "mops": statistics.median(rates),
        "mops_min": min(rates),
        "mops_max": max(rates),
        **stats,
    }


# -- error sweep --------------------------------------------------------------

ERROR_PRESETS = ("even_spacing", "half_plus_outlier", "all_full")


def _preset_indices(preset: str, rng_spec: ApproxRange) -> list[int]:
    i0, imax, alpha = rng_spec.i0, rng_spec.imax, rng_spec.alpha
    if preset == "even_spacing":
        return list(range(i0, imax + 1, alpha))
    if preset == "all_full":
        return list(range(i0, imax + 1))
    if preset == "half_plus_outlier":
        # a dense bottom half pulls the estimate below a lone outlier at the
        # 3/4 mark; the pull only wins while the pattern spans less than
        # ~18*alpha buckets, so scope it to 16*alpha
        span = min(imax - i0, 16 * alpha)
        dense = list(range(i0, i0 + span // 2 + 1))
        return dense + [i0 + (3 * span) // 4]
    raise ConfigError(f"unknown preset {preset!r}")


def run_error_preset(preset: str, alpha: int = 16) -> dict:
    """Signed error of one pop_max on a named occupancy pattern."""
    rng_spec = ApproxRange.calibrate(alpha)
    q = ApproxGradientQueue(rng_spec)
    for i in _preset_indices(preset, rng_spec):
        q.insert(i, i)
    q.pop_max()
    return {"preset": preset, "alpha": alpha, "error": q.errors[-1],
            "estimate_hit": q.estimate_hits == 1}


def run_error_sweep(alpha: int = 16, occupancies=None, seeds=range(10),
                    trials: int = 200) -> list[dict]:
    """Mean absolute fetch error and search length per occupancy ratio.

    The nonempty ratio is HELD constant and the occupancy pattern stays a
    uniform random sample of that ratio: each trial fetches the maximum
    (recording its signed index error), puts the fetched item straight back,
    then moves one uniformly chosen occupied bucket to a uniformly chosen
    empty one. Draining instead would slide the pattern down through every
    ratio and bias the top of the range empty.
    """
    if occupancies is None:
        occupancies = [round(0.3 + 0.1 * i, 1) for i in range(8)]
    rng_spec = ApproxRange.calibrate(alpha)
    span = rng_spec.capacity + 1
    rows = []
    for occ in occupancies:
        abs_errs = []
        search = []
        for seed in seeds:
            rng = random.Random(seed)
            q = ApproxGradientQueue(rng_spec)
            nonempty = max(1, round(occ * span))
            occupied = rng.sample(range(rng_spec.i0, rng_spec.imax + 1), nonempty)
            handles = {i: q.insert(i, i) for i in occupied}
            for _ in range(trials):
                index, item = q.pop_max()
                handles[index] = q.insert(index, item)
                if nonempty < span:
                    pos = rng.randrange(nonempty)
                    src = occupied[pos]
                    while True:
                        dst = rng.randrange(rng_spec.i0, rng_spec.imax + 1)
                        if dst not in handles:
                            break
                    q.remove(handles.pop(src))
                    handles[dst] = q.insert(dst, dst)
                    occupied[pos] = dst
            abs_errs.extend(abs(e) for e in q.errors)
            search.append(q.search_steps / max(q.pops, 1))
        rows.append({
            "alpha": alpha,
            "occupancy": occ,
            "mean_abs_err": sum(abs_errs) / len(abs_errs),
            "max_abs_err": max(abs_errs),
            "mean_search_len": sum(search) / len(search),
        })
    return rows


# -- selection guide -----------------------------------------------------------

LEVEL_THRESHOLD = 1_000


def select_queue_guide(levels: int, range_kind: str, occupancy: str) -> str:
    """Decision tree for picking a queue implementation.

    range_kind: 'fixed' | 'moving'; occupancy: 'sparse' | 'dense'.
    """
    if range_kind not in ("fixed", "moving"):
        raise ConfigError("range_kind must be 'fixed' or 'moving'")
    if occupancy not in ("sparse", "dense"):
        raise ConfigError("occupancy must be 'sparse' or 'dense'")
    if levels < LEVEL_THRESHOLD:
        return "comparison queue acceptable"
    if range_kind == "fixed":
        return "hierarchical FFS queue"
    if occupancy == "dense":
        return "approximate gradient queue"
    return "circular hierarchical FFS queue (cFFS)"


# -- CSV / SVG emission ---------------------------------------------------------

def rows_to_csv(rows: list[dict], columns=None) -> str:
    if columns is None:
        columns = CSV_COLUMNS if rows and "queue" in rows[0] else list(rows[0])
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns)
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row.get(k, "") for k in columns})
    return buf.getvalue()


def emit_plot(csv_path: str, svg_path: str, x_col: str | None = None,
              y_col: str = "mops", series_col: str = "queue") -> str:
    """Minimal line chart of a benchmark CSV; purely presentational."""
    with open(csv_path) as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"{csv_path}: empty or headerless CSV")
    if x_col is None:
        x_col = "fill_value" if "fill_value" in rows[0] else "occupancy"
    for col in (x_col, y_col):
        if col not in rows[0]:
            raise ConfigError(f"{csv_path}: missing column {col!r}")
    series: dict[str, list[tuple[float, float]]] = {}
    for row in rows:
        try:
            x, y = float(row[x_col]), float(row[y_col])
        except ValueError as exc:
            raise ConfigError(f"{csv_path}: non-numeric data: {exc}") from exc
        series.setdefault(row.get(series_col, y_col), []).append((x, y))
    width, height, pad = 640, 400, 50
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = 0.0, max(ys) or 1.0
    x_span = (x_hi - x_lo) or 1.0

    def sx(x):
        return pad + (x - x_lo) / x_span * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y_lo) / (y_hi - y_lo or 1.0) * (height - 2 * pad)

    palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height-pad}" x2="{width-pad}" y2="{height-pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height-pad}" stroke="black"/>',
        f'<text x="{width//2}" y="{height-12}" text-anchor="middle" font-size="12">{x_col}</text>',
        f'<text x="16" y="{height//2}" font-size="12" transform="rotate(-90 16 {height//2})" text-anchor="middle">{y_col}</text>',
    ]
    for i, (name, pts) in enumerate(sorted(series.items())):
        pts.sort()
        color = palette[i % len(palette)]
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{width-pad+4}" y="{pad+14*i+10}" font-size="11" fill="{color}">{name}</text>')
    parts.append("</svg>")
    with open(svg_path, "w") as fh:
        fh.write("\n".join(parts))
    return svg_path
