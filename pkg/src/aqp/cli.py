"""Command-line entry point: ``aqp <subcommand> ...``.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

from .adviser import DEFAULT_ADVISE_THRESHOLD, DEFAULT_FRESH_COST, DEFAULT_PREPARED_COST, advise
from .exceptions import AQPError, DomainError
from .ga import EvaluationSet, GaConfig, run_ga
from .profile import FeedbackType, LearnConfig, learn
from .simulation import SimConfig, generate, run, trend_slope
from .store import (ProfileStore, RunManifest, canonical_json, export_metrics, load_store,
                    metrics_csv, save_manifest, save_store)
from .vector import QueryTemplate, QueryVector, RawCounts, build_vector, observe

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _add_learn_flags(p):
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.75)
    p.add_argument("--lambda", dest="lambda_", type=float, default=0.15)
    p.add_argument("--alpha", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aqp", description="Adaptive query-processing profiles and simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="replay a synthetic multi-user workload")
    sim.add_argument("--users", type=int, default=160)
    sim.add_argument("--queries", type=int, default=8400)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--drift-at", type=int, default=None)
    sim.add_argument("--baseline", action="store_true", help="always optimize afresh")
    sim.add_argument("--window", type=int, default=None)
    sim.add_argument("--threshold", type=float, default=None, help="advise threshold")
    sim.add_argument("--ga-every", type=int, default=None)
    sim.add_argument("--out", type=Path, default=None, help="metrics CSV (stdout if omitted)")
    sim.add_argument("--manifest", type=Path, default=None)

    lrn = sub.add_parser("learn", help="fold a JSON-lines query file into a store")
    lrn.add_argument("--store", type=Path, required=True)
    lrn.add_argument("--queries", type=Path, required=True)
    lrn.add_argument("--prepared-cost", type=float, default=DEFAULT_PREPARED_COST)
    lrn.add_argument("--fresh-cost", type=float, default=DEFAULT_FRESH_COST)
    _add_learn_flags(lrn)

    adv = sub.add_parser("advise", help="recommend a plan for queries against a store")
    adv.add_argument("--store", type=Path, required=True)
    src = adv.add_mutually_exclusive_group(required=True)
    src.add_argument("--query", help="one query as a JSON object")
    src.add_argument("--queries", type=Path, help="JSON-lines query file")
    adv.add_argument("--user", type=int, default=None)
    adv.add_argument("--threshold", type=float, default=DEFAULT_ADVISE_THRESHOLD)

    ga = sub.add_parser("ga-optimize", help="evolve a category's positive descriptor")
    ga.add_argument("--store", type=Path, required=True)
    ga.add_argument("--user", type=int, required=True)
    ga.add_argument("--category", type=int, required=True)
    ga.add_argument("--generations", type=int, default=50)
    ga.add_argument("--pop", type=int, default=20)
    ga.add_argument("--seed", type=int, default=0)
    ga.add_argument("--queries", type=Path, default=None,
                    help="evaluation sample (defaults to the category's own descriptor)")
    ga.add_argument("--apply", action="store_true", help="write the result back into the store")

    prof = sub.add_parser("profiles", help="inspect stored profiles")
    prof_sub = prof.add_subparsers(dest="action", required=True, parser_class=_Parser)
    show = prof_sub.add_parser("show", help="dump a user's categories")
    show.add_argument("--store", type=Path, required=True)
    show.add_argument("--user", type=int, required=True)
    return parser


def _read_records(path: Path) -> list[dict]:
    records = []
    for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DomainError(f"{path}:{n}: invalid JSON: {exc}") from exc
        if not isinstance(rec, dict):
            raise DomainError(f"{path}:{n}: expected a JSON object")
        records.append(rec)
    return records


def _raw_counts(store: ProfileStore, rec: dict, grow: bool) -> RawCounts:
    """Features of a query record; unseen features are dropped when not growing."""
    if "features" in rec:
        counts = {int(k): int(v) for k, v in rec["features"].items()}
    else:
        template = QueryTemplate(rec["command"], tuple(rec.get("relations", ())),
                                 tuple(rec.get("predicates", ())))
        if grow:
            return store.vocabulary.featurize(template)
        counts = {}
        for name in template.feature_names():
            if name in store.vocabulary:
                fid = store.vocabulary.id_of(name)
                counts[fid] = counts.get(fid, 0) + 1
    if not grow:
        counts = {k: v for k, v in counts.items() if store.corpus.n(k) >= 1}
    return RawCounts(counts)


def _query_vector(store: ProfileStore, rec: dict) -> QueryVector:
    return build_vector(_raw_counts(store, rec, grow=False), store.corpus)


def _cmd_simulate(args) -> int:
    cfg = SimConfig(num_users=args.users, num_queries=args.queries, seed=args.seed,
                    drift_at=args.drift_at, window_size=args.window, ga_every=args.ga_every)
    if args.threshold is not None:
        cfg = replace(cfg, advise_threshold=args.threshold)
    events = generate(cfg)
    metrics = run(events, cfg, adaptive=not args.baseline)
    if args.out is None:
        sys.stdout.write(metrics_csv(metrics))
    else:
        export_metrics(metrics, args.out)
        warm = int(len(metrics.proficiency) * cfg.warmup_fraction)
        print(f"windows={metrics.num_windows} plan_hit_rate={metrics.plan_hit_rate:.4f} "
              f"categories={metrics.categories_created} "
              f"slope={trend_slope(metrics.proficiency):.5f} "
              f"post_warmup_min={min(metrics.proficiency[warm:], default=0.0):.4f} "
              f"cost={metrics.total_cost_adaptive:.1f}/{metrics.total_cost_baseline:.1f}")
    manifest_path = args.manifest
    if manifest_path is None and args.out is not None:
        manifest_path = args.out.with_suffix(args.out.suffix + ".manifest.json")
    if manifest_path is not None:
        config = asdict(cfg)
        config["mode"] = "baseline" if args.baseline else "adaptive"
        outputs = {"metrics": str(args.out) if args.out else "-"}
        save_manifest(RunManifest(config, cfg.seed, 0, len(events), outputs), manifest_path)
    return EXIT_OK


def _load_or_new(path: Path, fresh_cost: float) -> ProfileStore:
    if path.exists():
        return load_store(path)
    store = ProfileStore()
    store.registry.default_fresh_cost = fresh_cost
    return store


def _cmd_learn(args) -> int:
    cfg = LearnConfig(theta=args.theta, gamma=args.gamma, beta=args.beta,
                      lambda_=args.lambda_, alpha=args.alpha)
    store = _load_or_new(args.store, args.fresh_cost)
    created = updated = 0
    for rec in _read_records(args.queries):
        raw = _raw_counts(store, rec, grow=True)
        store.corpus = observe(store.corpus, raw.features)
        q = build_vector(raw, store.corpus)
        user = int(rec.get("user", 0))
        profile = store.profile(user)
        forced = rec.get("category")
        after = learn(profile, q, FeedbackType(rec.get("feedback", "positive")), cfg,
                      sample_provided=forced is None, forced_category=forced,
                      event_index=store.corpus.total_queries - 1)
        if len(after) > len(profile):
            new = after.categories[-1]
            plan = store.registry.register(user, new.id, args.prepared_cost, args.fresh_cost)
            after = after.replace_category(replace(new, linked_plan=plan.plan_id))
            created += 1
        elif after != profile:
            updated += 1
        store.put_profile(after)
    save_store(store, args.store)
    print(f"categories created={created} updated={updated} "
          f"queries observed={store.corpus.total_queries}")
    return EXIT_OK


def _cmd_advise(args) -> int:
    store = load_store(args.store)
    records = [json.loads(args.query)] if args.query else _read_records(args.queries)
    for rec in records:
        user = args.user if args.user is not None else int(rec.get("user", 0))
        rec_out = advise(_query_vector(store, rec), store.profile(user), store.registry,
                         args.threshold)
        print(canonical_json({
            "user": user,
            "plan_id": rec_out.plan_id,
            "category_id": rec_out.category_id,
            "score": rec_out.score,
            "fallback": rec_out.fallback,
            "estimated_cost": rec_out.estimated_cost,
        }))
    return EXIT_OK


def _cmd_ga(args) -> int:
    store = load_store(args.store)
    profile = store.profile(args.user)
    category = profile.get(args.category)
    if args.queries is not None:
        sample = [_query_vector(store, rec) for rec in _read_records(args.queries)]
    else:
        sample = [category.desc_pos]
    cfg = GaConfig(population_size=args.pop, generations=args.generations, seed=args.seed)
    best, history = run_ga(category, EvaluationSet(tuple(sample)), cfg)
    print(canonical_json({
        "user": args.user,
        "category": args.category,
        "initial_fitness": history[0],
        "best_fitness": best.fitness,
        "chromosome": [[k, w] for k, w in best.chromosome.sorted_items()],
    }))
    if args.apply and not best.chromosome.is_zero:
        store.put_profile(profile.replace_category(replace(category, desc_pos=best.chromosome)))
        save_store(store, args.store)
    return EXIT_OK


def _cmd_profiles(args) -> int:
    store = load_store(args.store)
    profile = store.profile(args.user)
    names = store.vocabulary.names

    def named(v: QueryVector):
        return [[names[k] if k < len(names) else k, w] for k, w in v.sorted_items()]

    print(canonical_json({
        "user": profile.user_id,
        "categories": [
            {
                "id": c.id,
                "usage_count": c.usage_count,
                "linked_plan": c.linked_plan,
                "created_at": c.created_at,
                "desc_pos": named(c.desc_pos),
                "desc_neg": named(c.desc_neg),
            }
            for c in profile.categories
        ],
    }))
    return EXIT_OK


COMMANDS = {
    "simulate": _cmd_simulate,
    "learn": _cmd_learn,
    "advise": _cmd_advise,
    "ga-optimize": _cmd_ga,
    "profiles": _cmd_profiles,
}


def cli_dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help exits 0 through argparse
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (AQPError, OSError, KeyError, ValueError) as exc:
        print(f"aqp: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
