"""Command-line interface.

Subcommands: gen-synth, train-sentiment, score-tweets, train-forecaster,
predict, evaluate, compare. Exit codes: 0 success, 1 validation error,
2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import date
from pathlib import Path

from .bundle import ModelBundle, load_bundle, save_bundle
from .config import PipelineConfig, load_config
from .data import load_candles, load_tweets
from .pipeline import (
    build_daily_index,
    compare,
    evaluate_network,
    train_forecaster,
    train_sentiment,
)
from .synth import SynthSpec, generate_synthetic


def _load_cfg(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    if getattr(args, "seed", None) is not None:
        cfg = PipelineConfig(**{**cfg.as_dict(), "seed": args.seed,
                                "sentiment": cfg.sentiment, "network": cfg.network})
        cfg.validate()
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_index(path: str | None) -> dict[date, int]:
    if not path:
        return {}
    index: dict[date, int] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["date", "index"]:
            raise ValueError(f"bad daily index header: {header}")
        for row in reader:
            if row:
                index[date.fromisoformat(row[0])] = int(row[1])
    return index


def _write_predictions(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "actual", "predicted"])
        for d, actual, predicted in rows:
            writer.writerow([d.isoformat(), repr(actual), repr(predicted)])


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_gen_synth(args) -> int:
    out = _out_dir(args)
    spec = SynthSpec(
        n_days=args.days,
        shock_prob=args.shock_prob,
        shock_magnitude=args.shock_magnitude,
        noise=args.noise,
    )
    candles, tweets = generate_synthetic(spec, seed=args.seed or 0)
    with open(out / "candles.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "open", "high", "low", "close"])
        for c in candles:
            writer.writerow([c.date.isoformat(), repr(c.open), repr(c.high),
                             repr(c.low), repr(c.close)])
    with open(out / "tweets.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "text", "label"])
        for t in tweets:
            writer.writerow([t.date.isoformat(), t.text,
                             "" if t.label is None else t.label])
    print(f"wrote {len(candles)} candles and {len(tweets)} tweets to {out}")
    return 0


def cmd_train_sentiment(args) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args)
    tweets = load_tweets(args.tweets or cfg.tweets)
    model = train_sentiment(tweets, cfg)
    save_bundle(out / "model.bundle",
                ModelBundle(config=cfg.as_dict(), vectorizer=model.vectorizer,
                            forest=model.forest))
    _write_json(out / "metrics.json",
                {"confusion": model.confusion.as_dict(), **model.report.as_dict()})
    print(f"holdout accuracy {model.report.accuracy:.3f}; bundle written to {out}")
    return 0


def cmd_score_tweets(args) -> int:
    out = _out_dir(args)
    bundle = load_bundle(args.model)
    if bundle.vectorizer is None or bundle.forest is None:
        raise ValueError("bundle has no sentiment model")
    tweets = load_tweets(args.tweets)
    index = build_daily_index(bundle.vectorizer, bundle.forest, tweets)
    with open(out / "daily_index.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "index"])
        for d in sorted(index):
            writer.writerow([d.isoformat(), index[d]])
    print(f"scored {len(tweets)} tweets over {len(index)} days")
    return 0


def cmd_train_forecaster(args) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args)
    candles = load_candles(args.candles or cfg.candles)
    index = _load_index(args.index)
    artifacts = train_forecaster(candles, index, cfg, variant=args.variant)
    config_echo = dict(cfg.as_dict(), variant=args.variant)
    save_bundle(out / "model.bundle",
                ModelBundle(config=config_echo, scaler=artifacts.scaler,
                            network=artifacts.network))
    _write_json(out / "metrics.json", {"loss_history": artifacts.loss_history})
    print(f"final training loss {artifacts.loss_history[-1]:.6f}; bundle written to {out}")
    return 0


def _evaluate(args, with_metrics: bool) -> int:
    out = _out_dir(args)
    bundle = load_bundle(args.model)
    if bundle.network is None or bundle.scaler is None:
        raise ValueError("bundle has no forecaster")
    candles = load_candles(args.candles)
    index = _load_index(args.index)
    from .data import align_daily

    nc = bundle.config["network"]
    result = evaluate_network(
        bundle.network, bundle.scaler, align_daily(candles, index),
        bundle.config.get("variant", "with_nlp"),
        nc["window_length"], nc["horizon"], with_metrics=with_metrics,
    )
    _write_predictions(out / "predictions.csv", result.rows)
    if with_metrics:
        _write_json(out / "metrics.json", result.report.as_dict())
        print(f"mse {result.report.mse:.6f} rmse {result.report.rmse:.6f} "
              f"over {result.report.n} windows")
    else:
        print(f"wrote {len(result.rows)} predictions")
    return 0


def cmd_evaluate(args) -> int:
    return _evaluate(args, with_metrics=True)


def cmd_predict(args) -> int:
    return _evaluate(args, with_metrics=False)


def cmd_compare(args) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args)
    candles = load_candles(args.candles or cfg.candles)
    tweets = load_tweets(args.tweets or cfg.tweets)
    report = compare(candles, tweets, cfg)
    _write_json(out / "comparison.json", report)
    for variant, data in report["variants"].items():
        m = data["metrics"]
        print(f"{variant}: mse {m['mse']:.6f} rmse {m['rmse']:.6f} "
              f"r2 {m['r_squared']} msle {m['msle']:.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stocksense",
        description="Tweet-sentiment-augmented OHLC forecasting pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON pipeline config")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("gen-synth", help="generate synthetic candles + tweets")
    common(p)
    p.add_argument("--days", type=int, default=400)
    p.add_argument("--shock-prob", type=float, default=0.15)
    p.add_argument("--shock-magnitude", type=float, default=0.02)
    p.add_argument("--noise", type=float, default=0.005)
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("train-sentiment", help="fit the tweet sentiment classifier")
    common(p)
    p.add_argument("--tweets", help="labeled tweets CSV")
    p.set_defaults(func=cmd_train_sentiment)

    p = sub.add_parser("score-tweets", help="score tweets into a daily index")
    common(p)
    p.add_argument("--model", required=True, help="sentiment model bundle")
    p.add_argument("--tweets", required=True)
    p.set_defaults(func=cmd_score_tweets)

    p = sub.add_parser("train-forecaster", help="train the fusion network")
    common(p)
    p.add_argument("--candles", help="candles CSV")
    p.add_argument("--index", help="daily sentiment index CSV")
    p.add_argument("--variant", choices=("with_nlp", "without_nlp"), default="with_nlp")
    p.set_defaults(func=cmd_train_forecaster)

    p = sub.add_parser("evaluate", help="predict and report metrics")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--candles", required=True)
    p.add_argument("--index", help="daily sentiment index CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="predict without metrics")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--candles", required=True)
    p.add_argument("--index", help="daily sentiment index CSV")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("compare", help="with/without-sentiment ablation")
    common(p)
    p.add_argument("--candles")
    p.add_argument("--tweets")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
