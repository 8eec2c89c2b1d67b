#!/usr/bin/env python3
# main.py ────────────────────────────────────────────────────────────────
# Unified CLI that drives every stage of the contract workbench.
#
#   ┌─────────────── General help ────────────────┐
#   │  python3 main.py -h                         │
#   │                                             │
#   │  python3 main.py <sub-cmd> -h               │
#   │      → help for a particular sub-command    │
#   └─────────────────────────────────────────────┘
#
# Boolean switches come in --flag / --no-flag pairs.
#
# -----------------------------------------------------------------------
# positional arguments (sub-commands)
#   solve     oracle contract for the configured market + constraint report
#   train     train edmsac | dmsac | gsac, write log CSVs and a checkpoint
#   eval      score a checkpoint on a states file
#   compare   dynamic / static / random oracle schemes vs trained policies
#   sweep     oracle profit against N, α or β
#   tune      final test reward against ϱ, M or the learning-rate group
#   report    oracle contracts over sampled markets, one row per item
#
# exit codes
#   0 success · 2 bad config / input / grid · 3 training diverged
# -----------------------------------------------------------------------
# Example
#   python3 main.py compare --seeds 0 1 2 --steps 2000
# -----------------------------------------------------------------------

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

# ── internal modules ────────────────────────────────────────────────
from AI.AiOps import (
    TrainingDivergence,
    eval_states,
    evaluate_outcomes,
    load_checkpoint,
    save_checkpoint,
    seed_streams,
    train,
)
from Contracts.ContractOps import (
    es_expected_utility,
    period2_rents,
    verify_all_constraints,
)
from Contracts.ContractTypes import MarketState, TwoPeriodContract
from Contracts.Oracle import scheme_profits, solve_state
from Market.MarketEnv import EnvState, market_from_vector, state_dim
from Parameters.ConfigParams import ConfigError, WorkbenchConfig, default_out_dir, load_config
from Parameters.simulation import (
    BETA_CHOICES,
    DENOISE_STEPS,
    LR_GROUPS,
    N_CHOICES,
    PRUNE_RATES,
    SCHEMES,
    SWEEP_AXES,
    TUNE_AXES,
    VARIANTS,
)
from Utils.csv_out import frame_vectors, read_csv, vector_columns, write_csv
from Utils.logs import setup_logging
from auxi.stats import summarize_log

log = logging.getLogger("main")

ORACLE_SCHEMES = ("dynamic", "static", "random")


# ===================================================================
# helpers
def _config(ns: argparse.Namespace) -> WorkbenchConfig:
    cfg = load_config(ns.config)
    oracle_over = {k: v for k, v in (("grid_points", getattr(ns, "grid_points", None)),
                                     ("workers", getattr(ns, "workers", None)),
                                     ("integer_rounds", getattr(ns, "integer_rounds", None)))
                   if v is not None}
    if oracle_over:
        cfg = replace(cfg, oracle=replace(cfg.oracle, **oracle_over))
    if getattr(ns, "action_mode", None):
        cfg = replace(cfg, env=replace(cfg.env, action_mode=ns.action_mode))
    if getattr(ns, "steps", None) is not None:
        cfg = replace(cfg, trainer=replace(cfg.trainer, steps=ns.steps))
    return cfg


def _out(ns: argparse.Namespace) -> Path:
    out = Path(ns.out_dir) if ns.out_dir else default_out_dir()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _contract_rows(contract: TwoPeriodContract, state: MarketState) -> list[dict]:
    """One row per contract item: period 1 items, then every period-2 menu."""
    ladder, costs = state.ladder, state.costs
    rows = []
    for k in range(ladder.k_types):
        rows.append({"period": 1, "first_type": k, "type": k,
                     "rounds": contract.t1[k], "reward": contract.r1[k],
                     "es_utility": es_expected_utility(k, contract, ladder, costs, state.beta)})
    for k in range(ladder.k_types):
        rents = period2_rents(contract.t2[k], contract.r2[k], ladder.theta2, costs)
        for j in range(ladder.k_types):
            rows.append({"period": 2, "first_type": k, "type": j,
                         "rounds": contract.t2[k, j], "reward": contract.r2[k, j],
                         "es_utility": rents[j]})
    return rows


def _monotone(values: np.ndarray) -> bool:
    return bool(np.all(np.diff(values) >= -1e-9))


# ===================================================================
# sub-command functions
# -------------------------------------------------------------------
def cmd_solve(ns: argparse.Namespace) -> None:
    cfg = _config(ns)
    state = cfg.market_state()
    result = solve_state(state, cfg.oracle)
    contract, profit = result
    report = verify_all_constraints(contract, state.ladder, state.costs, state.beta)
    out = _out(ns)

    write_csv(pd.DataFrame(_contract_rows(contract, state)), out / "contract.csv")
    summary = {"u1": profit.u1, "u2": profit.u2, "beta": profit.beta,
               "beta_u2": profit.beta * profit.u2, "total": profit.total,
               "scale": report.scale, "feasible": float(report.passed())}
    summary.update({f"min_slack_{k}": v for k, v in report.min_slack.items()})
    summary.update({f"residual_{k}": v for k, v in report.residuals.items()})
    write_csv(pd.DataFrame({"metric": list(summary), "value": list(summary.values())}),
              out / "summary.csv")

    print(f"[Solve] K={state.k_types}  N={state.n_servers}  α={state.alpha}  β={state.beta}")
    print(f"  T¹ = {np.round(contract.t1, 4).tolist()}   R¹ = {np.round(contract.r1, 4).tolist()}")
    for k in range(state.k_types):
        print(f"  T²(θ¹_{k}) = {np.round(contract.t2[k], 4).tolist()}"
              f"   R²(θ¹_{k}) = {np.round(contract.r2[k], 4).tolist()}")
    print(f"  profit: U¹={profit.u1:.4f}  U²={profit.u2:.4f}  βU²={profit.beta * profit.u2:.4f}"
          f"  total={profit.total:.4f}")
    print("  constraint slack (min): " + "  ".join(
        f"{k}={v:.3e}" for k, v in report.min_slack.items()))
    print(f"  feasible: {'yes' if report.passed() else 'NO'}   → {out}")


def _write_train_outputs(out: Path, variant: str, seed: int,
                         log_df: pd.DataFrame, mask_df: pd.DataFrame) -> Path:
    tag = f"{variant}_s{seed}"
    write_csv(mask_df, out / f"mask_log_{tag}.csv")
    return write_csv(log_df, out / f"train_log_{tag}.csv")


def _states_frame(states: list[EnvState]) -> pd.DataFrame:
    k = states[0].market.k_types
    df = pd.DataFrame(np.stack([s.vector for s in states]), columns=vector_columns(state_dim(k)))
    df["alpha"] = [s.market.alpha for s in states]
    df["beta"] = [s.market.beta for s in states]
    return df


def cmd_train(ns: argparse.Namespace) -> None:
    cfg = _config(ns)
    tcfg = replace(cfg.trainer, variant=ns.variant or cfg.trainer.variant,
                   seed=cfg.trainer.seed if ns.seed is None else ns.seed)
    out = _out(ns)
    try:
        result = train(tcfg, cfg.sampling, cfg.env_settings, edge=cfg.edge, hyper=cfg.quality)
    except TrainingDivergence as exc:
        path = _write_train_outputs(out, tcfg.variant, tcfg.seed, exc.log, exc.mask_log)
        print(f"[Train] diverged: {exc}  (partial log → {path})", file=sys.stderr)
        raise

    path = _write_train_outputs(out, tcfg.variant, tcfg.seed, result.log, result.mask_log)
    ckpt = save_checkpoint(out / f"actor_{tcfg.variant}_s{tcfg.seed}.npz", result.compact_actor,
                           tcfg, cfg.env_settings, cfg.sampling.k_types)
    if result.eval_states:
        write_csv(_states_frame(result.eval_states), out / f"eval_states_s{tcfg.seed}.csv")
    print(f"[Train] {tcfg.variant} seed {tcfg.seed}: log → {path}, checkpoint → {ckpt}")
    if not result.log.empty:
        print(summarize_log(result.log).to_string(index=False))


def cmd_eval(ns: argparse.Namespace) -> None:
    cfg = _config(ns)
    actor, meta = load_checkpoint(ns.checkpoint)
    df = read_csv(ns.states)
    vectors = frame_vectors(df)
    if vectors.shape[1] != meta["state_dim"]:
        raise ConfigError("states", f"checkpoint expects {meta['state_dim']} state entries, "
                                    f"file has {vectors.shape[1]}")
    states = []
    for i, vector in enumerate(vectors):
        alpha = float(df["alpha"].iloc[i]) if "alpha" in df else cfg.market.alpha
        beta = float(df["beta"].iloc[i]) if "beta" in df else cfg.market.beta
        states.append(EnvState.of(market_from_vector(vector, alpha=alpha, beta=beta,
                                                     edge=cfg.edge, hyper=cfg.quality)))
    settings = replace(cfg.env_settings, action_mode=meta["action_mode"], t_min=meta["t_min"],
                       t_max=meta["t_max"], penalty=meta["penalty"])
    outcomes = evaluate_outcomes(actor, states, settings, seed_streams(meta["seed"])["eval_noise"])
    rows = [{"state": i, "state_hash": s.digest, "reward": o.reward, "profit": o.profit.total,
             "u1": o.profit.u1, "u2": o.profit.u2, "penalty": o.penalty}
            for i, (s, o) in enumerate(zip(states, outcomes))]
    path = write_csv(pd.DataFrame(rows), _out(ns) / f"eval_{Path(ns.checkpoint).stem}.csv")
    rewards = np.array([r["reward"] for r in rows])
    print(f"[Eval] {len(rows)} states: mean reward {rewards.mean():.4f} ± {rewards.std():.4f} → {path}")


def _compare_seed(cfg: WorkbenchConfig, schemes: list[str], seed: int,
                  n_states: int) -> tuple[list[dict], list[pd.DataFrame]]:
    states = eval_states(cfg.sampling, seed, n_states, edge=cfg.edge, hyper=cfg.quality)
    rows: list[dict] = []
    logs: list[pd.DataFrame] = []
    if any(s in ORACLE_SCHEMES for s in schemes):
        rng = np.random.default_rng(seed)
        for i, st in enumerate(states):
            profits = scheme_profits(st.market, rng, cfg.oracle)
            for scheme in ORACLE_SCHEMES:
                if scheme in schemes:
                    total = profits[scheme].total
                    rows.append({"scheme": scheme, "seed": seed, "state": i,
                                 "profit": total, "reward": total})
            log.debug("[Compare] seed %d state %d: %s", seed, i,
                      {k: round(v.total, 3) for k, v in profits.items()})
    for variant in (s for s in schemes if s in VARIANTS):
        tcfg = replace(cfg.trainer, variant=variant, seed=seed)
        env = replace(cfg.env_settings, eval_states=n_states)
        result = train(tcfg, cfg.sampling, env, edge=cfg.edge, hyper=cfg.quality)
        logs.append(result.log)
        outcomes = evaluate_outcomes(result.actor, states, env, seed_streams(seed)["eval_noise"])
        rows.extend({"scheme": variant, "seed": seed, "state": i, "profit": o.profit.total,
                     "reward": o.reward} for i, o in enumerate(outcomes))
    return rows, logs


def cmd_compare(ns: argparse.Namespace) -> None:
    cfg = _config(ns)
    n_states = ns.states or cfg.env.eval_states
    rows: list[dict] = []
    logs: list[pd.DataFrame] = []
    for seed in ns.seeds:
        seed_rows, seed_logs = _compare_seed(cfg, ns.schemes, seed, n_states)
        rows.extend(seed_rows)
        logs.extend(seed_logs)
    out = _out(ns)
    df = pd.DataFrame(rows, columns=["scheme", "seed", "state", "profit", "reward"])
    path = write_csv(df, out / "comparison.csv")
    if logs:
        write_csv(pd.concat(logs, ignore_index=True), out / "compare_train_log.csv")
    means = df.groupby("scheme", sort=False)["profit"].mean()
    print(f"[Compare] {len(ns.seeds)} seed(s) × {n_states} states → {path}")
    for scheme, value in means.items():
        print(f"  {scheme:<8} mean profit {value:.4f}")


def _sweep_value(axis: str, raw: str) -> float:
    return float(int(raw)) if axis == "N" else float(raw)


def _with_axis(state: MarketState, axis: str, value: float) -> MarketState:
    field_name = {"N": "n_servers", "alpha": "alpha", "beta": "beta"}[axis]
    return replace(state, **{field_name: int(value) if axis == "N" else value})


def cmd_sweep(ns: argparse.Namespace) -> None:
    cfg = _config(ns)
    defaults = {"N": N_CHOICES, "alpha": cfg.sampling.alpha_choices, "beta": BETA_CHOICES}
    values = [_sweep_value(ns.axis, v) for v in ns.values] if ns.values else list(defaults[ns.axis])
    rows = []
    for seed in ns.seeds:
        for i, st in enumerate(eval_states(cfg.sampling, seed, ns.states,
                                           edge=cfg.edge, hyper=cfg.quality)):
            previous = None
            for value in values:
                state = _with_axis(st.market, ns.axis, value)
                init = [previous] if previous is not None else None
                contract, profit = solve_state(state, cfg.oracle, init=init)
                previous = contract
                rows.append({"axis": ns.axis, "value": value, "seed": seed, "state": i,
                             "total": profit.total, "u1": profit.u1, "u2": profit.u2})
    df = pd.DataFrame(rows)
    path = write_csv(df, _out(ns) / f"sweep_{ns.axis}.csv")
    print(f"[Sweep] {ns.axis} over {values} → {path}")
    print(df.groupby("value")["total"].mean().to_string())


def _tune_override(axis: str, raw: str) -> dict:
    if axis == "prune_rate":
        return {"prune_rate": float(raw)}
    if axis == "denoise_steps":
        return {"denoise_steps": int(raw)}
    if raw not in LR_GROUPS:
        raise ConfigError("lr_group", f"unknown group {raw!r}, choose from {sorted(LR_GROUPS)}")
    actor_lr, critic_lr = LR_GROUPS[raw]
    return {"actor_lr": actor_lr, "critic_lr": critic_lr}


def cmd_tune(ns: argparse.Namespace) -> None:
    cfg = _config(ns)
    defaults = {"prune_rate": PRUNE_RATES, "denoise_steps": DENOISE_STEPS, "lr_group": tuple(LR_GROUPS)}
    values = ns.values or [str(v) for v in defaults[ns.axis]]
    rows, logs = [], []
    for value in values:
        for seed in ns.seeds:
            tcfg = replace(cfg.trainer, seed=seed, **_tune_override(ns.axis, value))
            result = train(tcfg, cfg.sampling, cfg.env_settings, edge=cfg.edge, hyper=cfg.quality)
            summary = summarize_log(result.log, ns.window)
            final = float(summary["final_eval"].iloc[0]) if not summary.empty else float("nan")
            logs.append(result.log.assign(axis=ns.axis, value=value))
            rows.append({"axis": ns.axis, "value": value, "seed": seed, "final_eval_reward": final})
    out = _out(ns)
    df = pd.DataFrame(rows, columns=["axis", "value", "seed", "final_eval_reward"])
    path = write_csv(df, out / f"tune_{ns.axis}.csv")
    if logs:
        write_csv(pd.concat(logs, ignore_index=True), out / f"tune_{ns.axis}_log.csv")
    print(f"[Tune] {ns.axis} → {path}")
    print(df.groupby("value", sort=False)["final_eval_reward"].mean().to_string())


def cmd_report(ns: argparse.Namespace) -> None:
    cfg = _config(ns)
    rows = []
    for seed in ns.seeds:
        for i, st in enumerate(eval_states(cfg.sampling, seed, ns.states,
                                           edge=cfg.edge, hyper=cfg.quality)):
            contract, _ = solve_state(st.market, cfg.oracle)
            flags = {
                "rounds_monotone": _monotone(contract.t1)
                and all(_monotone(row) for row in contract.t2),
                "reward_monotone": _monotone(contract.r1)
                and all(_monotone(row) for row in contract.r2),
            }
            for item in _contract_rows(contract, st.market):
                rows.append({"seed": seed, "state": i, "state_hash": st.digest, **item, **flags})
    df = pd.DataFrame(rows)
    path = write_csv(df, _out(ns) / "contract_report.csv")
    n = df.groupby(["seed", "state"]).ngroups if not df.empty else 0
    ok = df.groupby(["seed", "state"])["reward_monotone"].first().sum() if n else 0
    print(f"[Report] {n} markets, {ok} with monotone rewards → {path}")


# ===================================================================
# build the argparse tree
# -------------------------------------------------------------------
def _common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", type=Path, default=None,
                    help="workbench config (dotenv); default Parameters/workbench.env")
    sp.add_argument("--out-dir", type=Path, default=None,
                    help="output folder (default $CONTRACTS_OUT_DIR or ./data)")


def _oracle_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--grid-points", type=int, default=None, help="oracle grid size")
    sp.add_argument("--workers", type=int, default=None, help="oracle worker processes")
    group = sp.add_mutually_exclusive_group()
    group.add_argument("--integer-rounds", dest="integer_rounds", action="store_true",
                       default=None, help="restrict rounds to integers")
    group.add_argument("--no-integer-rounds", dest="integer_rounds", action="store_false",
                       help="allow fractional rounds")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        description="Two-period contract workbench – master CLI",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="cmd", required=True)

    # --- solve -----------------------------------------------------
    sp = sub.add_parser("solve", help="oracle contract for the configured market")
    _common(sp)
    _oracle_flags(sp)
    sp.set_defaults(func=cmd_solve)

    # --- train -----------------------------------------------------
    sp = sub.add_parser("train", help="train a contract-generating policy")
    _common(sp)
    sp.add_argument("--variant", choices=VARIANTS, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--steps", type=int, default=None, help="training steps V")
    sp.add_argument("--action-mode", choices=("full", "shared"), default=None)
    sp.set_defaults(func=cmd_train)

    # --- eval ------------------------------------------------------
    sp = sub.add_parser("eval", help="score a checkpoint on a states file")
    _common(sp)
    sp.add_argument("--checkpoint", type=Path, required=True)
    sp.add_argument("--states", type=Path, required=True,
                    help="CSV with s0…sN columns (optional alpha, beta)")
    sp.set_defaults(func=cmd_eval)

    # --- compare ---------------------------------------------------
    sp = sub.add_parser("compare", help="oracle schemes vs trained policies")
    _common(sp)
    _oracle_flags(sp)
    sp.add_argument("--schemes", nargs="+", choices=SCHEMES, default=list(SCHEMES))
    sp.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2])
    sp.add_argument("--states", type=int, default=None, help="states per seed")
    sp.add_argument("--steps", type=int, default=None, help="training steps V")
    sp.add_argument("--action-mode", choices=("full", "shared"), default=None)
    sp.set_defaults(func=cmd_compare)

    # --- sweep -----------------------------------------------------
    sp = sub.add_parser("sweep", help="oracle profit against N, α or β")
    _common(sp)
    _oracle_flags(sp)
    sp.add_argument("--axis", choices=SWEEP_AXES, required=True)
    sp.add_argument("--values", nargs="+", default=None)
    sp.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2])
    sp.add_argument("--states", type=int, default=5, help="markets per seed")
    sp.set_defaults(func=cmd_sweep)

    # --- tune ------------------------------------------------------
    sp = sub.add_parser("tune", help="final test reward against a trainer setting")
    _common(sp)
    sp.add_argument("--axis", choices=TUNE_AXES, required=True)
    sp.add_argument("--values", nargs="+", default=None)
    sp.add_argument("--seeds", nargs="+", type=int, default=[0])
    sp.add_argument("--steps", type=int, default=None, help="training steps V")
    sp.add_argument("--window", type=int, default=10, help="points averaged for the final reward")
    sp.set_defaults(func=cmd_tune)

    # --- report ----------------------------------------------------
    sp = sub.add_parser("report", help="oracle contracts over sampled markets")
    _common(sp)
    _oracle_flags(sp)
    sp.add_argument("--seeds", nargs="+", type=int, default=[0])
    sp.add_argument("--states", type=int, default=10, help="markets per seed")
    sp.set_defaults(func=cmd_report)

    return p


# ===================================================================
def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    setup_logging(ns.verbose)
    try:
        ns.func(ns)
    except ConfigError as exc:
        print(f"[Config] {exc}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError) as exc:
        print(f"[Error] {exc}", file=sys.stderr)
        return 2
    except TrainingDivergence:
        return 3
    return 0


# ===================================================================
if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
