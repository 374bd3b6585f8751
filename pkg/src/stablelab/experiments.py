"""Runners behind each experiment kind. Each returns metrics plus JSON detail."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from stablelab.config import ConfigError, ExperimentConfig
from stablelab.core import (
    Hypothesis,
    class_loss,
    derive_seed,
    mix_with_point_mass,
    population_loss,
)
from stablelab.dims import DeskScaleError, dimension_report
from stablelab.harness import (
    OutputFrequencyTable,
    empirical_list,
    empirical_stability,
    jump_probe,
    output_distribution,
)
from stablelab.learners import (
    ClassErrorWrapper,
    ListFromStable,
    MajorityBoost,
    RandomThresholdStable,
    StabilityParams,
    ThreeWayRule,
    agnostic_rho,
)


@dataclass
class ExperimentResult:
    metrics: list[tuple[str, object]]
    trials: int
    detail: dict = field(default_factory=dict)
    extra_csv: dict[str, list[list[object]]] = field(default_factory=dict)


def _table_detail(table: OutputFrequencyTable) -> dict:
    return {"trials": table.trials, "counts": table.counts, "failed_counts": table.failed_counts}


def _sample_size(cfg: ExperimentConfig, learner, epsilon, name="n") -> int:
    if cfg.has(name):
        return cfg.integer(name, minimum=1)
    if learner.sample_size:
        return learner.sample_size
    try:
        return learner.sample_complexity(epsilon)
    except NotImplementedError:
        raise ConfigError(cfg.experiment_id, name, "required for this learner") from None


def run_dims(cfg: ExperimentConfig, include_failures: bool) -> ExperimentResult:
    H = cfg.hypothesis_class()
    try:
        rep = dimension_report(H)
    except DeskScaleError as exc:
        raise ConfigError(cfg.experiment_id, "class", str(exc)) from None
    metrics = [
        ("vc", rep.vc),
        ("littlestone", rep.littlestone),
        ("threshold", rep.threshold),
        ("bound_holds", rep.bound_holds),
    ]
    row = [[k for k, _ in metrics], [v for _, v in metrics]]
    return ExperimentResult(metrics, 0, {"class_size": len(H)}, {"dims": row})


def _constant_metrics(table, D):
    freq = table.frequencies(include_failures=True)
    best = 0.0
    for label in (0, 1):
        h = Hypothesis.constant(D.domain_size, label)
        if population_loss(h, D) <= 0.5:
            best = max(best, freq.get(h.string, 0.0))
    return best


def run_stability(cfg: ExperimentConfig, include_failures: bool) -> ExperimentResult:
    H = cfg.hypothesis_class()
    D = cfg.distribution(H.domain_size)
    eps = cfg.epsilon
    A = cfg.learner(H, eps)
    n = _sample_size(cfg, A, eps)
    trials = cfg.trials
    table = output_distribution(A, D, n, trials, cfg.seed)
    rep = empirical_stability(table, D, H, eps, include_failures)
    metrics = [
        ("sample_size", n),
        ("class_loss", rep.class_loss),
        ("best_frequency", rep.best_frequency),
        ("best_excess_loss", rep.excess_loss if rep.best_hypothesis else math.nan),
        ("distinct_outputs", len(table.counts)),
        ("failure_rate", table.failure_rate),
        ("rho_contract", 1.0 / (4 * len(H))),
    ]
    if isinstance(A, ThreeWayRule):
        metrics.append(("constant_frequency", _constant_metrics(table, D)))
    detail = {"best_hypothesis": str(rep.best_hypothesis), "table": _table_detail(table)}
    return ExperimentResult(metrics, trials, detail)


def measured_rho(cfg: ExperimentConfig, H, D, eps) -> float:
    """Best frequency of the stable learner at ``eps``, as a stability run would report."""
    A = RandomThresholdStable(H, eps)
    trials = cfg.integer("rho_trials", default=2000, minimum=1)
    seed = cfg.integer("rho_seed", default=cfg.seed, minimum=0)
    table = output_distribution(A, D, A.sample_size, trials, seed)
    return empirical_stability(table, D, H, eps).best_frequency


def run_listrep(cfg: ExperimentConfig, include_failures: bool) -> ExperimentResult:
    H = cfg.hypothesis_class()
    D = cfg.distribution(H.domain_size)
    eps = cfg.epsilon
    delta = cfg.real("delta", low=0.0, high=1.0)
    base = cfg.learner(H, eps / 4)
    n0 = cfg.integer("n0", minimum=1) if cfg.has("n0") else base.sample_size
    if not n0:
        raise ConfigError(cfg.experiment_id, "n0", "required for this learner")
    if cfg.text("rho", "measure") == "measure":
        rho = measured_rho(cfg, H, D, eps)
        if rho <= 0:
            raise ConfigError(cfg.experiment_id, "rho", "measured stability is zero")
    else:
        rho = cfg.real("rho", low=0.0, high=1.0, high_open=False)
    params = StabilityParams.derive(
        rho,
        eps,
        n0,
        delta,
        len(H),
        t=cfg.integer("t", minimum=1) if cfg.has("t") else None,
        n1=cfg.integer("n1", minimum=1) if cfg.has("n1") else None,
    )
    A = ListFromStable(base.with_sample_size(n0), params, H, delta)
    trials = cfg.trials
    table = output_distribution(A, D, A.sample_size, trials, cfg.seed)
    rep = empirical_list(table, D, H, eps, delta, include_failures)
    opt = class_loss(H, D)
    excess = max((population_loss(h, D) - opt for h in rep.hypotheses), default=0.0)
    top = max(rep.frequencies, default=0.0)
    pigeon = rep.covered_mass / params.L - 0.02
    metrics = [
        ("rho", params.rho_value),
        ("L", params.L),
        ("alpha", params.alpha),
        ("t", params.t),
        ("n0", params.n0),
        ("n1", params.n1),
        ("failure_rate", table.failure_rate),
        ("list_length", len(rep)),
        ("list_within_L", len(rep) <= params.L),
        ("covered_mass", rep.covered_mass),
        ("list_success", rep.success),
        ("max_excess_loss", excess),
        ("max_list_frequency", top),
        ("pigeonhole_bound", pigeon),
        ("pigeonhole_holds", top >= pigeon),
    ]
    detail = {"list": [str(h) for h in rep.hypotheses], "table": _table_detail(table)}
    return ExperimentResult(metrics, trials, detail)


def run_boost(cfg: ExperimentConfig, include_failures: bool) -> ExperimentResult:
    H = cfg.hypothesis_class()
    D = cfg.distribution(H.domain_size)
    eps = cfg.epsilon
    base = cfg.learner(H, eps)
    n0 = cfg.integer("n0", minimum=1) if cfg.has("n0") else base.sample_size
    if not n0:
        raise ConfigError(cfg.experiment_id, "n0", "required for this learner")
    base = base.with_sample_size(n0)
    ks = cfg.integers("k")
    if min(ks) < 1:
        raise ConfigError(cfg.experiment_id, "k", "every k must be at least 1")
    trials = cfg.trials
    opt = class_loss(H, D)
    rates, detail = [], {}
    for k in ks:
        A = MajorityBoost(base, k)
        table = output_distribution(A, D, A.sample_size, trials, derive_seed(cfg.seed, "boost", k))
        freq = table.frequencies(include_failures)
        bad = sum(f for key, f in freq.items() if population_loss(Hypothesis.from_string(key), D) > opt + eps + 1e-12)
        rates.append(bad)
        detail[f"k{k}"] = _table_detail(table)
    metrics = [(f"out_of_list_k{k}", r) for k, r in zip(ks, rates)]
    metrics.append(("nonincreasing", all(a >= b for a, b in zip(rates, rates[1:]))))
    metrics.append(("last_at_most_half_first", rates[-1] <= rates[0] / 2))
    return ExperimentResult(metrics, trials, detail)


def _tv(a: OutputFrequencyTable, b: OutputFrequencyTable) -> float:
    fa, fb = a.frequencies(True), b.frequencies(True)
    return 0.5 * math.fsum(abs(fa.get(k, 0.0) - fb.get(k, 0.0)) for k in set(fa) | set(fb))


def run_reduction(cfg: ExperimentConfig, include_failures: bool) -> ExperimentResult:
    mode = cfg.text("mode", "class_error")
    if mode == "agnostic":
        return _run_agnostic(cfg)
    if mode != "class_error":
        raise ConfigError(cfg.experiment_id, "mode", f"expected class_error or agnostic, got {mode!r}")
    H = cfg.hypothesis_class()
    D = cfg.distribution(H.domain_size)
    eps = cfg.epsilon
    gp = cfg.real("gamma_prime", low=0.0, high=1.0, high_open=False)
    x_star = cfg.integer("x_star", minimum=0)
    b_star = cfg.integer("b_star", minimum=0)
    if x_star >= H.domain_size:
        raise ConfigError(cfg.experiment_id, "x_star", "outside the domain")
    if b_star > 1:
        raise ConfigError(cfg.experiment_id, "b_star", "must be 0 or 1")
    inner = cfg.learner(H, eps * gp)
    n = _sample_size(cfg, inner, eps * gp)
    wrapped = ClassErrorWrapper(inner, x_star, b_star, gp)
    mixed = mix_with_point_mass(D, x_star, b_star, gp)
    trials = cfg.trials
    seed = cfg.seed
    table = output_distribution(wrapped, D, n, trials, seed)
    direct = output_distribution(inner, mixed, n, trials, derive_seed(seed, "direct"))
    rep = empirical_stability(table, mixed, H, eps * gp, include_failures)
    matches = rep.best_hypothesis is not None and rep.best_hypothesis(x_star) == b_star
    metrics = [
        ("sample_size", n),
        ("tv_distance", _tv(table, direct)),
        ("class_loss_mixed", rep.class_loss),
        ("best_frequency", rep.best_frequency),
        ("best_matches_point_mass", matches),
    ]
    detail = {
        "best_hypothesis": str(rep.best_hypothesis),
        "wrapped": _table_detail(table),
        "direct": _table_detail(direct),
    }
    return ExperimentResult(metrics, trials, detail)


def _run_agnostic(cfg: ExperimentConfig) -> ExperimentResult:
    metrics, detail = [], {}
    for tok in cfg.text("pairs").replace(",", " ").split():
        try:
            d, n = (int(v) for v in tok.split(":"))
            rho = agnostic_rho(d, n)
        except ValueError:
            raise ConfigError(cfg.experiment_id, "pairs", f"bad pair {tok!r}") from None
        metrics.append((f"rho_d{d}_n{n}", float(rho)))
        detail[f"d{d}_n{n}"] = str(rho)
    return ExperimentResult(metrics, 0, detail)


def run_jumpprobe(cfg: ExperimentConfig, include_failures: bool) -> ExperimentResult:
    H = cfg.hypothesis_class()
    eps = cfg.real("epsilon", default=0.1, low=0.0, high=1.0)
    A = cfg.learner(H, eps)
    m = cfg.integer("m", default=H.domain_size, minimum=2)
    if m != H.domain_size:
        raise ConfigError(cfg.experiment_id, "m", f"must equal the class domain size {H.domain_size}")
    n = cfg.integer("n", minimum=2)
    if n % 2:
        raise ConfigError(cfg.experiment_id, "n", "must be even")
    if m < n + 1:
        raise ConfigError(cfg.experiment_id, "m", "too small for n sample points")
    trials = cfg.trials
    rep = jump_probe(A, m, n, trials, cfg.seed)
    drops = [rep.p[k] - rep.p[k + 1] for k in range(n) if not math.isnan(rep.p[k] - rep.p[k + 1])]
    metrics = [(f"p_{k + 1}", float(v)) for k, v in enumerate(rep.p)]
    metrics += [
        ("t0", rep.t0),
        ("max_adjacent_gap", rep.max_adjacent_gap),
        ("gap_location", rep.gap_location),
        ("max_decrease", max(max(drops, default=0.0), 0.0)),
        ("skipped_cells", rep.skipped),
        ("undersized", rep.undersized),
    ]
    return ExperimentResult(metrics, trials, {"probes": rep.probes.tolist()})


RUNNERS = {
    "dims": run_dims,
    "stability": run_stability,
    "listrep": run_listrep,
    "boost": run_boost,
    "reduction": run_reduction,
    "jumpprobe": run_jumpprobe,
}
