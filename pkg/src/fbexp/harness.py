"""Monte Carlo experiment runner, error breakdowns and constraint audits."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

from .errors import InvalidParameterError
from .schemes.config import SchemeConfig, Variant
from .schemes.partition import expected_collision_probability, sample_equal_partition, sample_partition_batch
from .schemes.pilot import resolve_config
from .schemes.protocols import EventClass, TrialOutcome, make_scheme
from .streams import TRIAL_BLOCK, derive_rng, trial_block

Z95 = 1.959963984540054
CLASS_NAMES = [c.name for c in EventClass]
BRANCH_FLAGS = ("initial_error", "alarm_sent", "alarm_detected", "retx_correct", "bin_collision")
_BRANCH_BLOCK = 65536
AUDIT_MIN_TRIALS = 1000
# slack for float rounding in sphere-normalized energies (|err| ~ 1e-16 relative)
_POWER_RTOL = 1e-12
_FEEDBACK_ATOL = 1e-9


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


def exact_sum(values) -> Fraction:
    """Exact rational sum of float64 values, independent of their order."""
    v = np.asarray(values, dtype=np.float64).ravel()
    v = v[v != 0]
    if v.size == 0:
        return Fraction(0)
    if not np.all(np.isfinite(v)):
        raise InvalidParameterError("cannot sum non-finite values exactly")
    mant, expo = np.frexp(v)
    ints = (mant * float(1 << 53)).astype(np.int64)
    expo = expo.astype(np.int64) - 53
    emin = int(expo.min())
    total = 0
    for e in np.unique(expo):
        sel = ints[expo == e]
        # split so partial sums stay far from int64 overflow
        hi, lo = sel >> 26, sel & ((1 << 26) - 1)
        part = (int(hi.sum()) << 26) + int(lo.sum())
        total += part << (int(e) - emin)
    return Fraction(total) * Fraction(2) ** emin


@dataclass(frozen=True)
class CountRecord:
    """Additive summary of a set of trials; :meth:`merge` is associative and commutative."""

    trials: int = 0
    failed: int = 0
    classes: tuple = (0,) * len(EventClass)
    subblocks: tuple = ()
    """Sorted ``(chunk, count)`` pairs for SUBBLOCK_ERROR."""
    branch: tuple = (0,) * len(BRANCH_FLAGS)
    branch_units: int = 0
    energy: Fraction = Fraction(0)
    energy_sq: Fraction = Fraction(0)
    fb_total: Fraction = Fraction(0)
    fb_total_max: float = 0.0
    fb_use_max: float = 0.0

    def merge(self, other: "CountRecord") -> "CountRecord":
        subs = dict(self.subblocks)
        for j, c in other.subblocks:
            subs[j] = subs.get(j, 0) + c
        return CountRecord(
            trials=self.trials + other.trials,
            failed=self.failed + other.failed,
            classes=tuple(a + b for a, b in zip(self.classes, other.classes)),
            subblocks=tuple(sorted(subs.items())),
            branch=tuple(a + b for a, b in zip(self.branch, other.branch)),
            branch_units=self.branch_units + other.branch_units,
            energy=self.energy + other.energy,
            energy_sq=self.energy_sq + other.energy_sq,
            fb_total=self.fb_total + other.fb_total,
            fb_total_max=max(self.fb_total_max, other.fb_total_max),
            fb_use_max=max(self.fb_use_max, other.fb_use_max),
        )

    @classmethod
    def from_result(cls, result) -> "CountRecord":
        B = len(result)
        classes = np.bincount(result.event_class, minlength=len(EventClass))
        subs = ()
        if result.subblock is not None:
            js, counts = np.unique(result.subblock[result.subblock > 0], return_counts=True)
            subs = tuple((int(j), int(c)) for j, c in zip(js, counts))
        flags = result.flags
        branch = []
        for name in BRANCH_FLAGS:
            if name == "initial_error":
                arr = ~np.asarray(flags["initial_correct"])
            else:
                arr = np.asarray(flags.get(name, np.zeros(B, dtype=bool)))
            branch.append(int(np.count_nonzero(arr)))
        units = int(np.asarray(flags["initial_correct"]).size)
        energy = result.energy
        total, per_use = result.feedback_nats
        return cls(
            trials=B,
            classes=tuple(int(c) for c in classes),
            subblocks=subs,
            branch=tuple(branch),
            branch_units=units,
            energy=exact_sum(energy),
            energy_sq=exact_sum(energy * energy),
            fb_total=Fraction(total) * B,
            fb_total_max=total if B else 0.0,
            fb_use_max=per_use if B else 0.0,
        )

    @classmethod
    def from_outcomes(cls, outcomes) -> "CountRecord":
        """Record built trial by trial from sealed outcomes (order-free by construction)."""
        from .channel import feedback_usage, power_usage

        records = []
        for o in outcomes:
            classes = [0] * len(EventClass)
            classes[o.event_class] += 1
            p = power_usage(o.transcript)
            total, per_use = feedback_usage(o.transcript)
            flags = o.branch_flags
            branch = []
            for name in BRANCH_FLAGS:
                if name == "initial_error":
                    val = np.logical_not(flags["initial_correct"])
                else:
                    val = flags.get(name, False)
                branch.append(int(np.count_nonzero(val)))
            records.append(cls(
                trials=1,
                classes=tuple(classes),
                subblocks=((o.subblock, 1),) if o.subblock else (),
                branch=tuple(branch),
                branch_units=int(np.size(flags["initial_correct"])),
                energy=Fraction(p),
                energy_sq=Fraction(p * p),
                fb_total=Fraction(total),
                fb_total_max=total,
                fb_use_max=per_use,
            ))
        return reduce(CountRecord.merge, records, cls())


def _encode_number(x):
    if x is None:
        return None
    x = float(x)
    if math.isfinite(x):
        return x
    return {"nonfinite": "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")}


def _decode_number(x):
    if isinstance(x, dict):
        return float(x["nonfinite"])
    return x


@dataclass(frozen=True)
class ErrorBreakdown:
    trials: int
    failed: int
    counts: dict
    subblock_counts: dict
    branch_counts: dict
    branch_units: int
    mean_power: float
    power_sd: float
    feedback_mean_total: float
    feedback_max_total: float
    feedback_max_per_use: float
    config: dict = field(default_factory=dict)
    master_seed: int | None = None
    notes: tuple = ()
    branch_estimate: dict | None = None

    @classmethod
    def from_record(cls, rec: CountRecord, cfg: SchemeConfig, master_seed=None, notes=()):
        N = rec.trials - rec.failed
        if N > 0:
            mean = rec.energy / N
            var = (rec.energy_sq - rec.energy * rec.energy / N) / (N - 1) if N > 1 else Fraction(0)
            sd = math.sqrt(max(float(var), 0.0))
            fb_mean = float(rec.fb_total / N)
        else:
            mean, sd, fb_mean = Fraction(0), 0.0, 0.0
        return cls(
            trials=rec.trials,
            failed=rec.failed,
            counts={name: rec.classes[i] for i, name in enumerate(CLASS_NAMES)},
            subblock_counts={str(j): c for j, c in rec.subblocks},
            branch_counts=dict(zip(BRANCH_FLAGS, rec.branch)),
            branch_units=rec.branch_units,
            mean_power=float(mean),
            power_sd=sd,
            feedback_mean_total=fb_mean,
            feedback_max_total=rec.fb_total_max,
            feedback_max_per_use=rec.fb_use_max,
            config=cfg.to_dict(),
            master_seed=master_seed,
            notes=tuple(notes),
        )

    @property
    def valid_trials(self) -> int:
        return self.trials - self.failed

    def frequency(self, name: str) -> float:
        return self.counts[name] / self.valid_trials if self.valid_trials else 0.0

    def interval(self, name: str) -> tuple[float, float]:
        return wilson_interval(self.counts[name], self.valid_trials)

    @property
    def error_count(self) -> int:
        return self.valid_trials - self.counts["OK"]

    @property
    def total_error(self) -> float:
        return 1.0 - self.frequency("OK") if self.valid_trials else 0.0

    @property
    def total_error_interval(self) -> tuple[float, float]:
        return wilson_interval(self.error_count, self.valid_trials)

    @property
    def power_se(self) -> float:
        return self.power_sd / math.sqrt(self.valid_trials) if self.valid_trials else math.inf

    def to_dict(self) -> dict:
        classes = {}
        for name in CLASS_NAMES:
            lo, hi = self.interval(name)
            classes[name] = {"count": self.counts[name], "frequency": self.frequency(name),
                             "ci95": [lo, hi]}
        lo, hi = self.total_error_interval
        se = self.power_se
        return {
            "trials": self.trials,
            "failed_trials": self.failed,
            "master_seed": self.master_seed,
            "config": self.config,
            "classes": classes,
            "subblock_errors": self.subblock_counts,
            "total_error": {"count": self.error_count, "frequency": self.total_error, "ci95": [lo, hi]},
            "power": {"mean": self.mean_power, "sd": self.power_sd, "se": _encode_number(se),
                      "ci95": [_encode_number(self.mean_power - Z95 * se),
                               _encode_number(self.mean_power + Z95 * se)]},
            "feedback": {"mean_total_nats": self.feedback_mean_total,
                         "max_total_nats": self.feedback_max_total,
                         "max_per_use_nats": self.feedback_max_per_use},
            "branches": {"counts": self.branch_counts, "units": self.branch_units},
            "notes": list(self.notes),
            "branch_estimate": _encode_tree(self.branch_estimate),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ErrorBreakdown":
        d = json.loads(text)
        return cls(
            trials=d["trials"],
            failed=d["failed_trials"],
            counts={k: v["count"] for k, v in d["classes"].items()},
            subblock_counts=d["subblock_errors"],
            branch_counts=d["branches"]["counts"],
            branch_units=d["branches"]["units"],
            mean_power=d["power"]["mean"],
            power_sd=d["power"]["sd"],
            feedback_mean_total=d["feedback"]["mean_total_nats"],
            feedback_max_total=d["feedback"]["max_total_nats"],
            feedback_max_per_use=d["feedback"]["max_per_use_nats"],
            config=d["config"],
            master_seed=d["master_seed"],
            notes=tuple(d["notes"]),
            branch_estimate=_decode_tree(d["branch_estimate"]),
        )

    # flat CSV row for concatenating sweeps
    CSV_COLUMNS = (
        ["variant", "n", "num_messages", "P", "R_FB", "gamma", "trials", "failed_trials"]
        + [f"{name}_{col}" for name in CLASS_NAMES for col in ("count", "freq", "lo", "hi")]
        + ["total_error", "total_error_lo", "total_error_hi", "mean_power", "power_se",
           "fb_mean_total_nats", "fb_max_per_use_nats"]
    )

    def csv_row(self) -> list:
        cfg = self.config
        gamma = cfg.get("gamma", cfg.get("gammas", ""))
        if isinstance(gamma, list):
            gamma = ";".join(repr(g) for g in gamma)
        row = [cfg.get("variant", ""), cfg.get("n", ""), cfg.get("num_messages", ""),
               cfg.get("P", ""), cfg.get("R_FB", ""), gamma, self.trials, self.failed]
        for name in CLASS_NAMES:
            lo, hi = self.interval(name)
            row += [self.counts[name], self.frequency(name), lo, hi]
        lo, hi = self.total_error_interval
        row += [self.total_error, lo, hi, self.mean_power, self.power_se,
                self.feedback_mean_total, self.feedback_max_per_use]
        return row


def _encode_tree(obj):
    if isinstance(obj, dict):
        return {k: _encode_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode_tree(v) for v in obj]
    if isinstance(obj, float):
        return _encode_number(obj)
    return obj


def _decode_tree(obj):
    if isinstance(obj, dict):
        if set(obj) == {"nonfinite"}:
            return _decode_number(obj)
        return {k: _decode_tree(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode_tree(v) for v in obj]
    return obj


# ---- trial draws ------------------------------------------------------------------


def _fixed_partition(cfg: SchemeConfig):
    if cfg.variant is Variant.COMPRESSED_FB and cfg.partition == "fixed":
        return sample_equal_partition(cfg.num_messages, cfg.num_bins,
                                      derive_rng(cfg.seed, "partition", "fixed"))
    return None


def draw_block(cfg: SchemeConfig, master_seed: int, block: int):
    """Messages, noise and (per-trial) partitions for one block of TRIAL_BLOCK trials."""
    messages = derive_rng(master_seed, "message", block).integers(cfg.num_messages, size=TRIAL_BLOCK)
    noise = derive_rng(master_seed, "noise", block).standard_normal((TRIAL_BLOCK, cfg.n))
    partitions = None
    if cfg.variant is Variant.COMPRESSED_FB and cfg.partition == "per-trial":
        partitions = sample_partition_batch(TRIAL_BLOCK, cfg.num_messages, cfg.num_bins,
                                            derive_rng(master_seed, "partition", block))
    return messages, noise, partitions


def simulate_trial(cfg: SchemeConfig, master_seed: int, trial: int, books=None) -> TrialOutcome:
    """Reproduce trial ``trial`` of :func:`estimate` on its own."""
    cfg = resolve_config(cfg)
    block, row = trial_block(trial)
    messages, noise, partitions = draw_block(cfg, master_seed, block)
    scheme = make_scheme(cfg, books, _fixed_partition(cfg))
    parts = None if partitions is None else partitions[row:row + 1]
    result = scheme.run_batch(messages[row:row + 1], noise[row:row + 1], parts)
    return result.outcome(0, master_seed=master_seed, trial=trial)


def _workers(workers):
    if workers is None:
        workers = int(os.environ.get("FBEXP_THREADS", "1") or 1)
    cap = os.environ.get("FBEXP_THREADS")
    if cap:
        workers = min(workers, int(cap))
    return max(1, workers)


def regime_notes(cfg: SchemeConfig) -> list[str]:
    """Warnings where a desk-scale config sits outside the asymptotic regime."""
    from .exponents import capacity, rate_validity_threshold

    notes = []
    if cfg.rate >= capacity(cfg.P):
        notes.append(f"forward rate {cfg.rate:.4g} >= capacity {capacity(cfg.P):.4g}")
    if cfg.variant in (Variant.TWO_PHASE, Variant.COMPRESSED_FB, Variant.MULTI_PHASE):
        n1, r = cfg.multi_phase_split if cfg.variant is Variant.MULTI_PHASE else cfg.two_phase_split
        for i, power in enumerate(cfg.round_powers()):
            rate = math.log(cfg.num_messages) / r
            if rate >= rate_validity_threshold(power):
                notes.append(
                    f"round {i + 1} code rate {rate:.4g} exceeds the exponent-bound validity "
                    f"threshold {rate_validity_threshold(power):.4g} at power {power:.4g}"
                )
    return notes


def estimate(cfg: SchemeConfig, trials: int, master_seed: int, *, noise=None, workers=None,
             books=None) -> ErrorBreakdown:
    """Run ``trials`` independent trials and summarise their error events.

    Trial t always uses the same draws for a given master seed (see
    :func:`draw_block`), so the breakdown is deterministic. ``noise`` replaces
    the channel noise with a stub source (tests only).
    """
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    cfg = resolve_config(cfg).validate()
    scheme = make_scheme(cfg, books, _fixed_partition(cfg))

    def run(block):
        count = min(TRIAL_BLOCK, trials - block * TRIAL_BLOCK)
        messages, z, partitions = draw_block(cfg, master_seed, block)
        parts = None if partitions is None else partitions[:count]
        try:
            z = noise.draw((count, cfg.n)) if noise is not None else z[:count]
            result = scheme.run_batch(messages[:count], z, parts)
        except Exception:  # noqa: BLE001 - failures are counted, not raised
            return CountRecord(trials=count, failed=count)
        return CountRecord.from_result(result)

    blocks = range(math.ceil(trials / TRIAL_BLOCK))
    n_workers = _workers(workers)
    if n_workers > 1 and noise is None:
        with ThreadPoolExecutor(n_workers) as pool:
            records = list(pool.map(run, blocks))
    else:
        records = [run(b) for b in blocks]
    record = reduce(CountRecord.merge, records, CountRecord())
    return ErrorBreakdown.from_record(record, cfg, master_seed, regime_notes(cfg))


# ---- conditional (product-form) estimation --------------------------------------------


@dataclass(frozen=True)
class Factor:
    name: str
    events: int
    samples: int

    @property
    def starved(self) -> bool:
        return self.samples == 0

    @property
    def value(self) -> float:
        return self.events / self.samples if self.samples else math.nan

    @property
    def se(self) -> float:
        if not self.samples:
            return math.nan
        p = self.value
        return math.sqrt(p * (1 - p) / self.samples)

    @property
    def ci95(self) -> tuple[float, float]:
        return wilson_interval(self.events, self.samples) if self.samples else (math.nan, math.nan)

    def to_dict(self):
        lo, hi = self.ci95
        return {"events": self.events, "samples": self.samples, "value": self.value,
                "se": self.se, "ci95": [lo, hi], "starved": self.starved}


@dataclass(frozen=True)
class BranchEstimate:
    factors: dict
    products: dict
    """class name -> (value, se); includes ``TOTAL``."""
    flagged: tuple = ()

    def to_dict(self):
        prods = {}
        for k, (v, se) in self.products.items():
            prods[k] = {"value": v, "se": se,
                        "ci95": [max(0.0, v - Z95 * se), min(1.0, v + Z95 * se)]}
        return {"factors": {k: f.to_dict() for k, f in self.factors.items()},
                "products": prods, "flagged": list(self.flagged)}


def _run_branch_blocks(scheme, cfg, master_seed, stage, trials, noise):
    """Yield BatchResults of fresh unconditioned trials for one estimation stage."""
    done, block = 0, 0
    M = cfg.num_messages
    while done < trials:
        b = min(_BRANCH_BLOCK, trials - done)
        rng = derive_rng(master_seed, f"branch-{stage}", block)
        messages = rng.integers(M, size=b)
        z = noise.draw((b, cfg.n)) if noise is not None else rng.standard_normal((b, cfg.n))
        parts = None
        if scheme.compressed and cfg.partition == "per-trial":
            parts = sample_partition_batch(b, M, cfg.num_bins, rng)
        yield scheme.run_batch(messages, z, parts)
        done += b
        block += 1


def branch_estimate(cfg: SchemeConfig, trials_per_branch: int, master_seed: int, *,
                    max_trials: int | None = None, noise=None) -> BranchEstimate:
    """Estimate each error class as a product of separately measured factors.

    Factors: the initial error rate gamma-hat (unconditioned trials); then,
    by rejection on the initial decision, the false-alarm and false-negative
    rates given a correct initial decision, and the bin-collision, missed-alarm,
    retransmission-error and mis-detection rates given a wrong one. Rejection
    stops after ``max_trials`` raw trials per stage; branches that collected no
    samples are flagged instead of reported as zero.
    """
    cfg = resolve_config(cfg).validate()
    if cfg.variant not in (Variant.TWO_PHASE, Variant.COMPRESSED_FB):
        raise InvalidParameterError("branch estimates need TWO_PHASE or COMPRESSED_FB")
    if trials_per_branch < 1:
        raise InvalidParameterError("trials_per_branch must be >= 1")
    max_trials = max_trials or 1000 * trials_per_branch
    scheme = make_scheme(cfg, None, _fixed_partition(cfg))

    initial_errors = 0
    for res in _run_branch_blocks(scheme, cfg, master_seed, "gamma", trials_per_branch, noise):
        initial_errors += int(np.count_nonzero(~res.flags["initial_correct"]))

    def conditioned(stage, want_correct):
        # generator: each block is dropped once counted, so long rejection runs stay small
        need = trials_per_branch
        for res in _run_branch_blocks(scheme, cfg, master_seed, stage, max_trials, noise):
            keep = res.flags["initial_correct"] == want_correct
            idx = np.flatnonzero(keep)[:need]
            yield res, idx
            need -= idx.size
            if need <= 0:
                break

    fa = fn = n_ok = 0
    for res, idx in conditioned("correct", True):
        n_ok += idx.size
        fa += int(np.count_nonzero(res.flags["alarm_detected"][idx]))
        fn += int(np.count_nonzero(res.decoded[idx] != res.messages[idx]))

    n_wrong = coll = missed = sent = detected = retx_wrong = mis_wrong = 0
    for res, idx in conditioned("wrong", False):
        n_wrong += idx.size
        c = res.flags["bin_collision"][idx]
        s = ~c
        det = res.flags["alarm_detected"][idx]
        final_wrong = res.decoded[idx] != res.messages[idx]
        coll += int(np.count_nonzero(c))
        sent += int(np.count_nonzero(s))
        missed += int(np.count_nonzero(s & ~det))
        detected += int(np.count_nonzero(s & det))
        retx_wrong += int(np.count_nonzero(s & det & final_wrong))
        mis_wrong += int(np.count_nonzero(c & final_wrong))

    factors = {
        "initial_error": Factor("initial_error", initial_errors, trials_per_branch),
        "false_alarm_given_correct": Factor("false_alarm_given_correct", fa, n_ok),
        "error_given_correct": Factor("error_given_correct", fn, n_ok),
        "collision_given_wrong": Factor("collision_given_wrong", coll, n_wrong),
        "alarm_miss_given_sent": Factor("alarm_miss_given_sent", missed, sent),
        "retx_error_given_detected": Factor("retx_error_given_detected", retx_wrong, detected),
        "error_given_collision": Factor("error_given_collision", mis_wrong, coll),
    }
    flagged = tuple(k for k, f in factors.items() if f.starved)
    products = _assemble_products(factors)
    return BranchEstimate(factors, products, flagged)


def _assemble_products(f: dict) -> dict:
    def val(k):
        return f[k].value, f[k].se

    g, sg = val("initial_error")
    e, se_ = val("error_given_correct")
    c, sc = val("collision_given_wrong")
    m, sm = val("alarm_miss_given_sent")
    r, sr = val("retx_error_given_detected")
    w, sw = val("error_given_collision")
    # a branch that never occurs contributes exactly zero when its gate is zero
    if c == 0 and f["collision_given_wrong"].samples:
        w, sw = 0.0, 0.0
    if m == 1 and f["alarm_miss_given_sent"].samples:
        r, sr = 0.0, 0.0
    if f["alarm_miss_given_sent"].starved and c == 1:
        m, sm, r, sr = 0.0, 0.0, 0.0, 0.0

    def combine(value, grads):
        var = sum(dv * dv * s * s for dv, s in grads)
        return value, math.sqrt(var)

    fn = combine((1 - g) * e, [(-e, sg), (1 - g, se_)])
    fp = combine(g * (1 - c) * m, [((1 - c) * m, sg), (-g * m, sc), (g * (1 - c), sm)])
    wd = combine(g * (1 - c) * (1 - m) * r,
                 [((1 - c) * (1 - m) * r, sg), (-g * (1 - m) * r, sc),
                  (-g * (1 - c) * r, sm), (g * (1 - c) * (1 - m), sr)])
    mis = combine(g * c * w, [(c * w, sg), (g * w, sc), (g * c, sw)])
    total_value = fn[0] + fp[0] + wd[0] + mis[0]
    grads = [
        (-e + (1 - c) * m + (1 - c) * (1 - m) * r + c * w, sg),
        (1 - g, se_),
        (-g * m - g * (1 - m) * r + g * w, sc),
        (g * (1 - c) - g * (1 - c) * r, sm),
        (g * (1 - c) * (1 - m), sr),
        (g * c, sw),
    ]
    total = combine(total_value, grads)
    return {
        "FALSE_NEGATIVE": fn,
        "FALSE_POSITIVE": fp,
        "WRONG_DECODING": wd,
        "ERROR_MISDETECTION": mis,
        "TOTAL": total,
    }


# ---- audits ------------------------------------------------------------------------


@dataclass(frozen=True)
class AuditResult:
    name: str
    passed: bool
    value: float
    limit: float

    @property
    def margin(self) -> float:
        return self.limit - self.value

    def to_dict(self):
        return {"audit": self.name, "passed": self.passed, "value": self.value,
                "limit": self.limit, "margin": self.margin}


def power_audit(breakdown: ErrorBreakdown, cfg: SchemeConfig) -> AuditResult:
    """Pass iff mean power <= P + 3 standard errors (alarm slots included)."""
    if breakdown.valid_trials < AUDIT_MIN_TRIALS:
        raise InvalidParameterError(
            f"power audit needs >= {AUDIT_MIN_TRIALS} trials, got {breakdown.valid_trials}"
        )
    limit = cfg.P + 3.0 * breakdown.power_se
    passed = breakdown.mean_power <= limit + _POWER_RTOL * cfg.P
    return AuditResult("power", passed, breakdown.mean_power, limit)


def feedback_audit(breakdown: ErrorBreakdown, cfg: SchemeConfig) -> list[AuditResult]:
    """Average-rate cap ``n R_FB`` for all variants; per-use cap ``R_FB`` for BLOCK_MARKOV."""
    r_fb = cfg.feedback_rate
    out = [AuditResult("feedback-total", breakdown.feedback_max_total <= cfg.n * r_fb + _FEEDBACK_ATOL,
                       breakdown.feedback_max_total, cfg.n * r_fb)]
    if cfg.variant is Variant.BLOCK_MARKOV:
        out.append(AuditResult("feedback-per-use",
                               breakdown.feedback_max_per_use <= r_fb + _FEEDBACK_ATOL,
                               breakdown.feedback_max_per_use, r_fb))
    return out


def collision_column(cfg: SchemeConfig) -> float | None:
    if cfg.variant is Variant.COMPRESSED_FB:
        return expected_collision_probability(cfg.num_messages, cfg.num_bins)
    return None


def iter_outcomes(cfg: SchemeConfig, master_seed: int, trials: int, books=None):
    """Sealed per-trial outcomes for trials ``0..trials-1``; identical to :func:`estimate`'s draws."""
    cfg = resolve_config(cfg).validate()
    scheme = make_scheme(cfg, books, _fixed_partition(cfg))
    for block in range(math.ceil(trials / TRIAL_BLOCK)):
        count = min(TRIAL_BLOCK, trials - block * TRIAL_BLOCK)
        messages, z, partitions = draw_block(cfg, master_seed, block)
        parts = None if partitions is None else partitions[:count]
        result = scheme.run_batch(messages[:count], z[:count], parts)
        for i in range(count):
            yield result.outcome(i, master_seed=master_seed, trial=block * TRIAL_BLOCK + i)
