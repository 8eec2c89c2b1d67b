#!/usr/bin/env python3
# auxi/stats.py – summary figures for training logs

"""
Answers, for every (variant, seed) in a training log CSV:

1) final eval : mean test reward over the last `window` logged steps
2) best eval  : best logged test reward
3) pruning    : masked fraction of the denoiser at the last step
4) losses     : last finite actor / critic loss

Usage:  python3 -m auxi.stats data/train_log.csv [--window 10]
"""

from __future__ import annotations

import argparse
import sys

import numpy as np
import pandas as pd

from Utils.csv_out import read_csv

SUMMARY_COLUMNS = ["variant", "seed", "steps", "final_eval", "best_eval",
                   "final_masked_fraction", "final_actor_loss", "final_critic_loss"]


def _last_finite(series: pd.Series) -> float:
    values = series.to_numpy(dtype=np.float64)
    values = values[np.isfinite(values)]
    return float(values[-1]) if values.size else float("nan")


def summarize_log(df: pd.DataFrame, window: int = 10) -> pd.DataFrame:
    if window < 1:
        raise ValueError(f"window must be ≥ 1, got {window}")
    rows = []
    for (variant, seed), group in df.sort_values("step").groupby(["variant", "seed"], sort=True):
        rows.append({
            "variant": variant,
            "seed": int(seed),
            "steps": int(group["step"].max()),
            "final_eval": float(group["eval_reward_mean"].tail(window).mean()),
            "best_eval": float(group["eval_reward_mean"].max()),
            "final_masked_fraction": float(group["masked_fraction"].iloc[-1]),
            "final_actor_loss": _last_finite(group["actor_loss"]),
            "final_critic_loss": _last_finite(group["critic_loss"]),
        })
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def main(argv: list[str] | None = None) -> None:
    p = argparse.ArgumentParser(description="summarise a training log CSV")
    p.add_argument("log_csv")
    p.add_argument("--window", type=int, default=10)
    ns = p.parse_args(argv)

    summary = summarize_log(read_csv(ns.log_csv), ns.window)
    for row in summary.itertuples(index=False):
        print(f"── {row.variant} / seed {row.seed}  ({row.steps} steps)")
        print(f"1) final eval : {row.final_eval:.4f}  (last {ns.window} points)")
        print(f"2) best eval  : {row.best_eval:.4f}")
        print(f"3) pruning    : {row.final_masked_fraction:.1%} rows masked")
        print(f"4) losses     : actor {row.final_actor_loss:.4g}, critic {row.final_critic_loss:.4g}")


if __name__ == "__main__":
    main(sys.argv[1:])
