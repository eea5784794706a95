"""Command-line entry points: synth, mix-preview, train, eval, ablate."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import metrics, model, report
from .data import SynthConfig, gen_synthetic, load_dataset, pad_batch, save_dataset
from .errors import PronmixError
from .mixup import MixupConfig, filter_valid, mix_candidates

MIX_CHOICES = ("none", "static", "dynamic", "reversed-dynamic")
ER_CHOICES = ("none", "cer", "mer", "both")
ABLATE_MIXES = ("no-mix", "static", "static-fixed", "dynamic", "reversed-dynamic")
ABLATE_ERS = {"no-er": "none", "cer": "cer", "mer": "mer", "cer+mer": "both"}


def _mixup_from_args(args) -> MixupConfig | None:
    if args.mode == "none":
        return None
    mode = args.mode.replace("-", "_")
    return MixupConfig(mode=mode, lambda_source=args.lambda_source, alpha=args.alpha,
                       fixed_lambda=getattr(args, "lambda"), seed=args.seed)


def _add_mix_flags(parser):
    parser.add_argument("--mode", choices=MIX_CHOICES, default="none")
    parser.add_argument("--lambda-source", choices=("beta", "fixed"), default="beta")
    parser.add_argument("--alpha", type=float, default=1.0)
    parser.add_argument("--lambda", type=float, default=0.3)
    parser.add_argument("--seed", type=int, default=0)


def _add_train_flags(parser):
    parser.add_argument("--er", choices=ER_CHOICES, default="none")
    parser.add_argument("--epochs", type=int, default=100)
    parser.add_argument("--lr", type=float, default=1e-3)
    parser.add_argument("--batch-size", type=int, default=25)


def cmd_synth(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if args.seed is not None:
        obj["seed"] = args.seed
    cfg = SynthConfig.from_dict(obj)
    records = gen_synthetic(cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(records, out)
    totals = [rec.scores.utt[-1] for rec in records]
    counts = report.label_histogram(totals)
    print(f"wrote {len(records)} utterances to {out}")
    print("utterance-total distribution:")
    print(report.render_text_histogram(report.DEFAULT_EDGES, counts))
    return 0


def cmd_mix_preview(args) -> int:
    records = load_dataset(args.dataset)
    cfg = _mixup_from_args(args)
    if cfg is None:
        raise PronmixError("mix-preview needs --mode static|dynamic|reversed-dynamic")
    rng = np.random.default_rng(cfg.seed)
    original, mixed = [], []
    accepted_n = rejected_n = 0
    for start in range(0, len(records), args.batch_size):
        batch = pad_batch(records[start:start + args.batch_size])
        candidates = mix_candidates(batch, cfg, rng)
        ok = filter_valid(candidates, *cfg.label_range)
        accepted_n += int(ok.sum())
        rejected_n += int((~ok).sum())
        original.extend(batch.y_utt[:, -1])
        mixed.extend(candidates.y_utt[ok, -1])
    edges = report.DEFAULT_EDGES
    series = {"original": report.label_histogram(original, edges),
              "mixed": report.label_histogram(mixed, edges)}
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "histogram.csv").write_text(report.histogram_csv(edges, series), encoding="utf-8")
    title = f"utterance-total shift, {args.mode} ({args.lambda_source})"
    (outdir / "histogram.svg").write_text(report.histogram_svg(edges, series, title), encoding="utf-8")
    stats = {
        "mode": args.mode, "lambda_source": args.lambda_source, "alpha": args.alpha,
        "fixed_lambda": getattr(args, "lambda"), "seed": args.seed,
        "candidates": accepted_n + rejected_n, "accepted": accepted_n, "rejected": rejected_n,
    }
    (outdir / "stats.json").write_text(json.dumps(stats, indent=2) + "\n", encoding="utf-8")
    print(f"accepted {accepted_n}/{accepted_n + rejected_n} mixed candidates")
    print(f"artifacts in {outdir}")
    return 0


def cmd_train(args) -> int:
    records = load_dataset(args.dataset)
    tcfg = model.TrainConfig(lr=args.lr, batch_size=args.batch_size, epochs=args.epochs,
                             seed=args.seed, mixup=_mixup_from_args(args), er_mode=args.er)
    params, history = model.train(records, tcfg)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    model.save_checkpoint(params, outdir / "checkpoint.json", er_mode=args.er)
    model.write_history_csv(history, outdir / "history.csv")
    if history:
        print(f"epoch {history[-1][0]}: total loss {history[-1][1]:.6f}")
    print(f"artifacts in {outdir}")
    return 0


def cmd_eval(args) -> int:
    params, er_mode = model.load_checkpoint(args.checkpoint)
    records = load_dataset(args.dataset)
    rep = metrics.evaluate(params, records, er_mode=er_mode, batch_size=args.batch_size)
    print(metrics.render_table(rep))
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(rep.to_dict(), indent=2) + "\n", encoding="utf-8")
        print(f"report written to {out}")
    return 0


def _parse_plan(plan: str) -> list[tuple[str, str]]:
    entries = []
    for token in plan.split(","):
        token = token.strip().lower()
        if not token:
            continue
        if ":" not in token:
            raise PronmixError(f"plan entry {token!r} must look like mix:er")
        mix, er = token.split(":", 1)
        if mix not in ABLATE_MIXES:
            raise PronmixError(f"unknown mix policy {mix!r} (choose from {ABLATE_MIXES})")
        if er not in ABLATE_ERS:
            raise PronmixError(f"unknown er setting {er!r} (choose from {tuple(ABLATE_ERS)})")
        entries.append((mix, er))
    if not entries:
        raise PronmixError("empty ablation plan")
    return entries


def _mixup_for_plan(mix: str, seed: int) -> MixupConfig | None:
    if mix == "no-mix":
        return None
    if mix == "static-fixed":
        return MixupConfig(mode="static", lambda_source="fixed", seed=seed)
    mode = mix.replace("-", "_")
    return MixupConfig(mode=mode, lambda_source="beta", seed=seed)


def cmd_ablate(args) -> int:
    entries = _parse_plan(args.plan)
    records = load_dataset(args.dataset)
    eval_records = load_dataset(args.eval_dataset) if args.eval_dataset else records
    rows = []
    for mix, er_name in entries:
        er_mode = ABLATE_ERS[er_name]
        reports = []
        for run in range(args.runs):
            seed = args.seed + run  # shared seed list across configurations
            tcfg = model.TrainConfig(lr=args.lr, batch_size=args.batch_size, epochs=args.epochs,
                                     seed=seed, mixup=_mixup_for_plan(mix, seed), er_mode=er_mode)
            params, _ = model.train(records, tcfg)
            reports.append(metrics.evaluate(params, eval_records, er_mode=er_mode))
        agg = metrics.aggregate_runs(reports)
        rows.append({
            "mix": mix, "er": er_name,
            "levels": [r.level_averages() for r in reports],
            "aggregate": agg.to_dict(),
        })
        avg = rows[-1]["levels"][0]
        print(f"{mix:16s} {er_name:8s} phone_mse={avg['phone_mse']:.4f} "
              f"word_avg_pcc={avg['word_avg_pcc']} utt_avg_pcc={avg['utt_avg_pcc']}")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    payload = {"seed": args.seed, "runs": args.runs, "rows": rows}
    (outdir / "comparison.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(f"comparison written to {outdir / 'comparison.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pronmix",
                                     description="Mixup policies and a desk-scale pronunciation scorer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("mix-preview", help="histograms and acceptance stats for a mixup policy")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--batch-size", type=int, default=25)
    _add_mix_flags(p)
    p.set_defaults(func=cmd_mix_preview)

    p = sub.add_parser("train", help="train the scorer")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    _add_mix_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--batch-size", type=int, default=25)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="train/evaluate a plan of mixup x error-rate configs")
    p.add_argument("--dataset", required=True)
    p.add_argument("--eval-dataset", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--plan", required=True,
                   help="comma list of mix:er entries, e.g. no-mix:no-er,dynamic:cer+mer")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=25)
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PronmixError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
