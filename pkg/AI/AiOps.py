#!/usr/bin/env  python3
# AI/AiOps.py
# ======================================================================
# Off-policy training loop for the contract generator.
#
#   edmsac   diffusion actor, dynamic pruning at rate ϱ
#   dmsac    same loop, ϱ = 0 (all-ones masks)
#   gsac     tanh-Gaussian actor, no pruning
#
# One step:  collect Z transitions → rebuild masks (online + target actor)
#            → critic update → actor update through the masks
#            → soft target updates → evaluate on the frozen state set.
# ======================================================================

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import pandas as pd

from AI.AiParams import TrainerConfig
from AI.Diffusion import DiffusionPolicy, vp_schedule
from AI.GaussianActor import GaussianActor
from AI.Pruning import MaskSet, apply_masks, build_masks, compact_export, mask_stats
from AI.ReplayBuffer import ReplayBuffer
from AI.SacOps import TwinCritic, actor_update, critic_update, soft_update
from Economics.EconModel import EdgeProfile, QualityHyper
from Market.MarketEnv import (ContractEnv, EnvSettings, EnvState, StepOutcome, action_dim,
                              sample_state, state_dim, step)
from Market.Sampler import SamplingRanges
from NN.Autodiff import NonFiniteError
from NN.Optim import Adam
from NN.Persistence import load_params, save_params

log = logging.getLogger(__name__)

LOG_COLUMNS = ["step", "variant", "seed", "eval_reward_mean", "eval_reward_std",
               "actor_loss", "critic_loss", "masked_fraction"]
MASK_COLUMNS = ["step", "layer", "survivors", "importance_p10", "importance_p50",
                "importance_p90"]
STREAMS = ("init", "env", "noise", "replay", "eval_states", "eval_noise")


class TrainingDivergence(RuntimeError):
    """Training hit a non-finite value; carries everything logged so far."""

    def __init__(self, message: str, log_df: pd.DataFrame, mask_df: pd.DataFrame) -> None:
        super().__init__(message)
        self.log = log_df
        self.mask_log = mask_df


@dataclass
class TrainResult:
    log: pd.DataFrame
    mask_log: pd.DataFrame
    actor: DiffusionPolicy | GaussianActor
    compact_actor: DiffusionPolicy | GaussianActor
    masks: MaskSet | None
    eval_states: list[EnvState]


# ────────── seeding / evaluation ─────────────────────────────────────
def seed_streams(seed: int) -> dict[str, np.random.SeedSequence]:
    return dict(zip(STREAMS, np.random.SeedSequence(seed).spawn(len(STREAMS))))


def eval_states(ranges: SamplingRanges, seed: int, count: int, *,
                edge: EdgeProfile = EdgeProfile(),
                hyper: QualityHyper = QualityHyper()) -> list[EnvState]:
    rng = np.random.default_rng(seed_streams(seed)["eval_states"])
    return [sample_state(rng, ranges, edge, hyper) for _ in range(count)]


def evaluate_outcomes(actor, states: Sequence[EnvState], settings: EnvSettings,
                      noise_seed: np.random.SeedSequence | int) -> list[StepOutcome]:
    """Score deterministic actions (ξ = 0) of `actor` on every state."""
    if not states:
        return []
    rng = np.random.default_rng(noise_seed)
    features = np.stack([s.features for s in states])
    actions = actor.act(features, rng, noise=False)
    return [step(s, a, settings.penalty, t_min=settings.t_min, t_max=settings.t_max,
                 mode=settings.action_mode)
            for s, a in zip(states, actions)]


def evaluate(actor, states: Sequence[EnvState], settings: EnvSettings,
             noise_seed: np.random.SeedSequence | int) -> np.ndarray:
    return np.array([o.reward for o in evaluate_outcomes(actor, states, settings, noise_seed)])


# ────────── construction ─────────────────────────────────────────────
def make_actor(cfg: TrainerConfig, s_dim: int, a_dim: int, rng: np.random.Generator):
    if cfg.diffusion:
        schedule = vp_schedule(cfg.denoise_steps, cfg.eps_min, cfg.eps_max)
        return DiffusionPolicy(s_dim, a_dim, schedule, rng, hidden=cfg.hidden, depth=cfg.depth,
                               time_dim=cfg.time_dim, clip_denoised=cfg.clip_denoised)
    return GaussianActor(s_dim, a_dim, rng, hidden=cfg.hidden, depth=cfg.depth)


def collect(env: ContractEnv, actor, count: int, buffer: ReplayBuffer, state: EnvState,
            rng: np.random.Generator) -> EnvState:
    """Push `count` exploratory transitions; returns the state to continue from."""
    for _ in range(count):
        action = actor.act(state.features[None, :], rng, noise=True)[0]
        next_state, reward, done, _ = env.step(action)
        buffer.push(state.features, action, next_state.features, reward, done)
        state = next_state
    return state


def _refresh_masks(cfg: TrainerConfig, actor, target) -> MaskSet | None:
    if not cfg.diffusion:
        return None
    masks = build_masks(actor, cfg.effective_prune_rate)
    apply_masks(actor, masks)
    apply_masks(target, build_masks(target, cfg.effective_prune_rate))
    return masks


def _frames(rows: list[dict], mask_rows: list[dict]) -> tuple[pd.DataFrame, pd.DataFrame]:
    return pd.DataFrame(rows, columns=LOG_COLUMNS), pd.DataFrame(mask_rows, columns=MASK_COLUMNS)


# ────────── training loop ────────────────────────────────────────────
def train(cfg: TrainerConfig, ranges: SamplingRanges, env_settings: EnvSettings = EnvSettings(),
          *, edge: EdgeProfile = EdgeProfile(), hyper: QualityHyper = QualityHyper(),
          on_step: Callable[[dict], None] | None = None) -> TrainResult:
    settings = replace(env_settings, penalty=cfg.penalty)
    streams = seed_streams(cfg.seed)
    init_rng = np.random.default_rng(streams["init"])
    noise_rng = np.random.default_rng(streams["noise"])
    replay_rng = np.random.default_rng(streams["replay"])

    env = ContractEnv(ranges, settings, np.random.default_rng(streams["env"]), edge=edge, hyper=hyper)
    s_dim, a_dim = state_dim(ranges.k_types), action_dim(ranges.k_types, settings.action_mode)
    frozen = eval_states(ranges, cfg.seed, settings.eval_states, edge=edge, hyper=hyper)

    actor = make_actor(cfg, s_dim, a_dim, init_rng)
    critic = TwinCritic(s_dim, a_dim, init_rng, hidden=cfg.hidden, depth=cfg.depth)
    target_actor = actor.clone("target_actor")
    target_critic = critic.clone("target_critic")
    actor_lr, critic_lr = cfg.learning_rates
    actor_opt = Adam(actor.parameters(), actor_lr, weight_decay=cfg.weight_decay)
    critic_opt = Adam(critic.parameters(), critic_lr, weight_decay=cfg.weight_decay)
    buffer = ReplayBuffer(cfg.buffer_capacity, s_dim, a_dim)

    rows: list[dict] = []
    mask_rows: list[dict] = []
    masks: MaskSet | None = None
    state = env.state
    log.info("[Train] %s seed=%d: V=%d, K=%d, d=%d, ϱ=%.2f", cfg.variant, cfg.seed, cfg.steps,
             ranges.k_types, a_dim, cfg.effective_prune_rate)

    try:
        for t in range(1, cfg.steps + 1):
            state = collect(env, actor, cfg.per_step, buffer, state, noise_rng)

            masks = _refresh_masks(cfg, actor, target_actor)

            actor_loss = critic_loss = float("nan")
            if len(buffer) >= cfg.warmup:
                batch = buffer.sample(cfg.batch_size, replay_rng)
                critic_loss = critic_update(batch, critic, target_critic, target_actor, critic_opt,
                                            gamma=cfg.gamma, kappa=cfg.kappa, rng=noise_rng,
                                            reward_scale=cfg.reward_scale)
                actor_loss = actor_update(batch.states, actor, critic.min_q, actor_opt,
                                          kappa=cfg.kappa, rng=noise_rng, sign=cfg.actor_sign,
                                          row_masks=None if masks is None else masks.row_masks(actor))
                soft_update(actor, target_actor, cfg.tau)
                soft_update(critic, target_critic, cfg.tau)

            if t % cfg.eval_every == 0 or t == cfg.steps:
                rewards = evaluate(actor, frozen, settings, streams["eval_noise"])
                if not np.isfinite(rewards).all():
                    raise NonFiniteError(f"non-finite evaluation reward at step {t}")
                row = {
                    "step": t, "variant": cfg.variant, "seed": cfg.seed,
                    "eval_reward_mean": float(rewards.mean()),
                    "eval_reward_std": float(rewards.std()),
                    "actor_loss": actor_loss, "critic_loss": critic_loss,
                    "masked_fraction": 0.0 if masks is None else masks.masked_fraction(),
                }
                rows.append(row)
                if masks is not None:
                    mask_rows.extend(mask_stats(actor, masks, t))
                if on_step is not None:
                    on_step(row)
                log.debug("[Train] step %d eval=%.4f actor=%.4g critic=%.4g", t,
                          row["eval_reward_mean"], actor_loss, critic_loss)
    except NonFiniteError as exc:
        log_df, mask_df = _frames(rows, mask_rows)
        raise TrainingDivergence(f"{cfg.variant} seed {cfg.seed}: {exc}", log_df, mask_df) from exc

    log_df, mask_df = _frames(rows, mask_rows)
    if rows:
        log.info("[Train] %s seed=%d done: final eval %.4f", cfg.variant, cfg.seed,
                 rows[-1]["eval_reward_mean"])
    compact = compact_export(actor, masks) if masks is not None else actor
    return TrainResult(log_df, mask_df, actor, compact, masks, frozen)


# ────────── checkpoints ──────────────────────────────────────────────
def save_checkpoint(path: Path | str, actor, cfg: TrainerConfig, settings: EnvSettings,
                    k_types: int) -> Path:
    meta = {
        "variant": cfg.variant, "seed": cfg.seed, "k_types": k_types,
        "state_dim": actor.state_dim, "action_dim": actor.action_dim,
        "action_mode": settings.action_mode, "t_min": settings.t_min, "t_max": settings.t_max,
        "penalty": cfg.penalty, "denoise_steps": cfg.denoise_steps, "eps_min": cfg.eps_min,
        "eps_max": cfg.eps_max, "clip_denoised": cfg.clip_denoised, "hidden": cfg.hidden,
        "depth": cfg.depth, "name": actor.name,
    }
    return save_params(path, actor.state_dict(), meta)


def load_checkpoint(path: Path | str):
    """(actor, meta) from a checkpoint written by `save_checkpoint`."""
    arrays, meta = load_params(path)
    if meta.get("variant") == "gsac":
        actor = GaussianActor(meta["state_dim"], meta["action_dim"], np.random.default_rng(0),
                              hidden=meta["hidden"], depth=meta["depth"], name=meta["name"])
        actor.load_state_dict(arrays)
    else:
        schedule = vp_schedule(meta["denoise_steps"], meta["eps_min"], meta["eps_max"])
        actor = DiffusionPolicy.from_arrays(arrays, state_dim=meta["state_dim"],
                                            action_dim=meta["action_dim"], schedule=schedule,
                                            clip_denoised=meta["clip_denoised"], name=meta["name"])
    return actor, meta
