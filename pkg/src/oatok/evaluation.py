"""Evaluation harness: reconstruction-vs-prefix curves, decode-failure
audits, spectral-shift demonstrations, closed-loop rollouts on the
point-mass task, and the ordering/codebook/horizon study sweeps.

Every report is a pure function of (checkpoints, dataset, seed list);
re-running with the same inputs reproduces it bit-exactly. Rollout stderr
follows the across-seed convention: the standard error of per-seed mean
success rates.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass

import numpy as np

from .binning import BinConfig, bin_detokenize, bin_tokenize
from .data import NormStats, denormalize, normalize
from .env import ToyEnv, ToyEnvConfig, scripted_expert
from .errors import ConfigError, NotApplicableError, StateError
from .fast import DecodeError, FastTokenizer
from .fsq import codebook_size
from .oat import NestedDropoutDist, OatConfig, OatTokenizer, train_oat
from .policy import PolicyNet, config_for_oat, make_training_pairs, policy_infer, policy_train


@dataclass
class ReconReport:
    scheme: str
    ks: list[int]
    mse_mean: list[float]
    mse_stderr: list[float]
    n_chunks: int
    token_count: float
    decode_failure_rate: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RolloutReport:
    method: str
    prefix: int
    success_mean: float
    success_stderr: float
    per_seed_success: list[float]
    steps_per_inference: float
    n_seeds: int
    n_episodes: int

    def to_dict(self) -> dict:
        return asdict(self)


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=np.float64)
    if values.size <= 1:
        return float(values.mean()) if values.size else 0.0, 0.0
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


def recon_curve(tokenizer, heldout_chunks: np.ndarray) -> ReconReport:
    """Per-prefix reconstruction error for the ordered tokenizer; a single
    full-length figure for the binning and frequency schemes."""
    held = np.asarray(heldout_chunks, dtype=np.float64)

    if isinstance(tokenizer, OatTokenizer):
        h_l = tokenizer.config.h_l
        ids = tokenizer.tokenize_many(held)
        means, errs = [], []
        for k in range(1, h_l + 1):
            per_chunk = ((tokenizer.detokenize_many(ids[:, :k]) - held) ** 2).mean(axis=(1, 2))
            m, s = _mean_stderr(per_chunk)
            means.append(m)
            errs.append(s)
        return ReconReport("oat", list(range(1, h_l + 1)), means, errs, len(held), float(h_l))

    if isinstance(tokenizer, FastTokenizer):
        per_chunk, lengths = [], []
        for chunk in held:
            ids = tokenizer.tokenize(chunk)
            lengths.append(len(ids))
            recon = tokenizer.detokenize(ids)
            per_chunk.append(((recon - chunk) ** 2).mean())
        m, s = _mean_stderr(np.array(per_chunk))
        return ReconReport("fast", [0], [m], [s], len(held), float(np.mean(lengths)))

    if isinstance(tokenizer, tuple) and isinstance(tokenizer[0], BinConfig):
        cfg, h_a, d_a = tokenizer
        per_chunk = []
        for chunk in held:
            recon = bin_detokenize(bin_tokenize(chunk, cfg), h_a, d_a, cfg)
            per_chunk.append(((recon - chunk) ** 2).mean())
        m, s = _mean_stderr(np.array(per_chunk))
        return ReconReport("bin", [0], [m], [s], len(held), float(h_a * d_a))

    raise StateError(f"unsupported tokenizer object {type(tokenizer).__name__}")


def decode_failure_audit(tokenizer, n_samples: int, rng: np.random.Generator) -> float:
    """Monte-Carlo failure rate under uniformly random valid token ids.

    Frequency-domain sequences draw their lengths from the empirical
    encoded-length distribution recorded at fit time; the ordered tokenizer
    is audited with uniformly random prefix lengths and must never fail.
    """
    if isinstance(tokenizer, FastTokenizer):
        if not tokenizer.vocab.merges:
            raise NotApplicableError("vocabulary has no merges; every expansion has length 1")
        ids_pool = np.array(tokenizer.vocab.token_ids)
        lengths = np.array(sorted(tokenizer.length_counts))
        counts = np.array([tokenizer.length_counts[int(k)] for k in lengths], dtype=np.float64)
        probs = counts / counts.sum()
        failures = 0
        for _ in range(n_samples):
            n = int(rng.choice(lengths, p=probs))
            sample = ids_pool[rng.integers(0, len(ids_pool), size=n)].tolist()
            if isinstance(tokenizer.detokenize(sample), DecodeError):
                failures += 1
        return failures / n_samples

    if isinstance(tokenizer, OatTokenizer):
        cfg = tokenizer.config
        failures = 0
        for _ in range(n_samples):
            k = int(rng.integers(1, cfg.h_l + 1))
            ids = rng.integers(0, cfg.vocab_size, size=k)
            chunk = tokenizer.detokenize(ids)
            if not (chunk.shape == (cfg.h_a, cfg.d_a) and np.all(np.isfinite(chunk))):
                failures += 1
        return failures / n_samples

    if isinstance(tokenizer, tuple) and isinstance(tokenizer[0], BinConfig):
        cfg, h_a, d_a = tokenizer
        failures = 0
        for _ in range(n_samples):
            ids = rng.integers(0, cfg.n_bins, size=h_a * d_a)
            chunk = bin_detokenize(ids, h_a, d_a, cfg)
            if not np.all(np.isfinite(chunk)):
                failures += 1
        return failures / n_samples

    raise StateError(f"unsupported tokenizer object {type(tokenizer).__name__}")


def spectral_shift_study(
    tokenizer: FastTokenizer,
    chunks: np.ndarray,
    n_mutations: int,
    rng: np.random.Generator,
    displace_content: bool = True,
) -> dict:
    """Sample random length-changing single-token mutations and record how
    often the force-fit repair is at least 10x worse than honest decoding.

    With displace_content=True (the spectral-shift demonstration proper),
    mutations are sampled among those whose shifted region, strictly after
    the mutated token, still holds a nonzero coefficient; a mutation that
    only slides trailing zeros around cannot corrupt the spectrum and its
    repair error is merely >= the honest one.
    """
    from .bpe import bpe_decode

    lengths = {t: tokenizer.vocab.expansion_length(t) for t in tokenizer.vocab.token_ids}
    ids_pool = np.array(tokenizer.vocab.token_ids)
    zero_symbol = -tokenizer.offset
    ratios = []
    attempts = 0
    while len(ratios) < n_mutations and attempts < 200 * n_mutations:
        attempts += 1
        chunk = chunks[rng.integers(0, len(chunks))]
        ids = tokenizer.tokenize(chunk)
        pos = int(rng.integers(0, len(ids)))
        replacement = int(ids_pool[rng.integers(0, len(ids_pool))])
        if lengths[replacement] == lengths[ids[pos]]:
            continue
        if displace_content:
            after = sum(lengths[t] for t in ids[: pos + 1])
            stream = bpe_decode(tokenizer.vocab, ids)
            if all(s == zero_symbol for s in stream[after:]):
                continue
        res = tokenizer.spectral_shift_demo(chunk, pos, replacement)
        ratios.append(res.repaired_mse / max(res.honest_mse, 1e-300))
    ratios = np.array(ratios)
    return {
        "n_mutations": int(len(ratios)),
        "displace_content": displace_content,
        "median_ratio": float(np.median(ratios)),
        "min_ratio": float(ratios.min()),
        "frac_at_least_10x": float((ratios >= 10.0).mean()),
    }


# -- closed-loop rollouts -------------------------------------------------------


def run_episode(
    env: ToyEnv,
    net: PolicyNet,
    tokenizer,
    stats: NormStats,
    rng: np.random.Generator,
    prefix: int,
    execute_steps: int,
    max_steps: int | None = None,
) -> bool:
    """Receding-horizon rollout: infer a chunk, execute its head, repeat."""
    cfg = net.config
    max_steps = max_steps or env.config.max_steps
    obs = env.reset(rng)
    history = [obs, obs][-cfg.h_o :]
    while len(history) < cfg.h_o:
        history.insert(0, history[0])
    last_norm_action = None
    steps = 0
    while steps < max_steps:
        chunk_norm = policy_infer(
            np.stack(history), prefix, net, tokenizer, last_action=last_norm_action
        )
        chunk = denormalize(chunk_norm, stats)
        for i in range(min(execute_steps, chunk.shape[0])):
            obs, success = env.step(chunk[i])
            history = history[1:] + [obs]
            last_norm_action = chunk_norm[i]
            steps += 1
            if success:
                return True
            if steps >= max_steps:
                return False
    return False


def closed_loop_eval(
    net: PolicyNet,
    tokenizer,
    stats: NormStats,
    env_config: ToyEnvConfig,
    n_seeds: int,
    n_episodes: int,
    prefix: int,
    execute_steps: int | None = None,
    method: str | None = None,
) -> RolloutReport:
    cfg = net.config
    execute_steps = execute_steps or cfg.execute_steps
    if execute_steps > cfg.h_a:
        raise ConfigError("execute_steps cannot exceed the chunk horizon")
    per_seed = []
    for seed in range(n_seeds):
        wins = 0
        for episode in range(n_episodes):
            env = ToyEnv(env_config)
            rng = np.random.default_rng([seed, episode])
            wins += run_episode(env, net, tokenizer, stats, rng, prefix, execute_steps)
        per_seed.append(wins / n_episodes)
    mean, stderr = _mean_stderr(np.array(per_seed))
    steps_per_inference = prefix if cfg.binding == "oat" else cfg.token_horizon
    return RolloutReport(
        method=method or f"{cfg.binding}[{prefix}]",
        prefix=prefix,
        success_mean=mean,
        success_stderr=stderr,
        per_seed_success=per_seed,
        steps_per_inference=float(steps_per_inference),
        n_seeds=n_seeds,
        n_episodes=n_episodes,
    )


def expert_rollout_success(env_config: ToyEnvConfig, n_episodes: int, seed: int = 0) -> float:
    """Sanity anchor: the scripted expert replayed through the environment."""
    wins = 0
    for episode in range(n_episodes):
        env = ToyEnv(env_config)
        rng = np.random.default_rng([seed, episode])
        obs = env.reset(rng)
        for _ in range(env_config.max_steps):
            obs, success = env.step(scripted_expert(obs, env_config))
            if success:
                wins += 1
                break
    return wins / n_episodes


# -- studies ---------------------------------------------------------------------


@dataclass
class AblationPair:
    seed: int
    ordered: ReconReport
    unordered: ReconReport


def ablation_no_ordering(
    train_chunks: np.ndarray,
    heldout_chunks: np.ndarray,
    config: OatConfig,
    seeds: list[int],
    steps: int,
    batch_size: int = 64,
) -> list[AblationPair]:
    """Paired trainings differing only in nested dropout (K ~ p vs K = H_l)."""
    pairs = []
    for seed in seeds:
        ordered_model, _ = train_oat(train_chunks, config, seed, steps, batch_size, ordered=True)
        unordered_model, _ = train_oat(train_chunks, config, seed, steps, batch_size, ordered=False)
        pairs.append(
            AblationPair(
                seed=seed,
                ordered=recon_curve(ordered_model, heldout_chunks),
                unordered=recon_curve(unordered_model, heldout_chunks),
            )
        )
    return pairs


def codebook_sweep(
    levels_list: list[tuple[int, ...]],
    train_chunks: np.ndarray,
    heldout_chunks: np.ndarray,
    base_config: OatConfig,
    seed: int,
    steps: int,
    batch_size: int = 64,
) -> list[dict]:
    """One tokenizer per FSQ level set; reports induced vocabulary size and
    held-out reconstruction error at every prefix length."""
    rows = []
    for levels in levels_list:
        config = OatConfig(
            h_a=base_config.h_a,
            d_a=base_config.d_a,
            h_l=base_config.h_l,
            d_l=len(levels),
            levels=tuple(levels),
            enc_layers=base_config.enc_layers,
            dec_layers=base_config.dec_layers,
            model_dim=base_config.model_dim,
            head_dim=base_config.head_dim,
            ffn_ratio=base_config.ffn_ratio,
            dropout_dist=base_config.dropout_dist,
        )
        model, _ = train_oat(train_chunks, config, seed, steps, batch_size)
        report = recon_curve(model, heldout_chunks)
        rows.append(
            {
                "levels": list(levels),
                "induced_vocab": codebook_size(levels),
                "mse_full": report.mse_mean[-1],
                "mse_by_k": report.mse_mean,
            }
        )
    return rows


@dataclass
class HorizonCell:
    h_a: int
    h_l: int
    regime: str
    execute_steps: int
    success_mean: float
    success_stderr: float


def horizon_sweep(
    episodes: list[tuple[np.ndarray, np.ndarray]],
    stats: NormStats,
    h_a_values: list[int],
    h_l_values: list[int],
    env_config: ToyEnvConfig,
    seed: int,
    tokenizer_steps: int,
    policy_steps: int,
    n_seeds: int,
    n_episodes: int,
    base_config: OatConfig | None = None,
    batch_size: int = 64,
    fixed_execute: int = 8,
) -> list[HorizonCell]:
    """Grid of tokenizer+policy trainings over action and token horizons,
    rolled out under both execution regimes (half the chunk, and a fixed
    step count)."""
    base = base_config or OatConfig()
    obs_dim = episodes[0][0].shape[1]
    cells = []
    for h_a in h_a_values:
        for h_l in h_l_values:
            if h_l > h_a:
                raise ConfigError(f"token horizon {h_l} exceeds action horizon {h_a}")
            config = OatConfig(
                h_a=h_a,
                d_a=base.d_a,
                h_l=h_l,
                d_l=base.d_l,
                levels=base.levels,
                enc_layers=base.enc_layers,
                dec_layers=base.dec_layers,
                model_dim=base.model_dim,
                head_dim=base.head_dim,
                ffn_ratio=base.ffn_ratio,
            )
            chunks = []
            for _, actions in episodes:
                for t in range(0, len(actions) - h_a + 1, max(1, h_a // 2)):
                    chunks.append(normalize(actions[t : t + h_a], stats))
            tokenizer, _ = train_oat(np.stack(chunks), config, seed, tokenizer_steps, batch_size)
            obs_hist, targets = make_training_pairs(
                episodes, lambda c: tokenizer.tokenize(normalize(c, stats)), 2, h_a
            )
            pcfg = config_for_oat(
                tokenizer, obs_dim,
                model_dim=base.model_dim, head_dim=base.head_dim, ffn_ratio=base.ffn_ratio,
            )
            net, _ = policy_train(obs_hist, targets, pcfg, seed, policy_steps, batch_size)
            for regime, execute in (("half-h_a", max(1, h_a // 2)), ("fixed-8", min(fixed_execute, h_a))):
                report = closed_loop_eval(
                    net, tokenizer, stats, env_config, n_seeds, n_episodes,
                    prefix=h_l, execute_steps=execute,
                )
                cells.append(
                    HorizonCell(
                        h_a=h_a,
                        h_l=h_l,
                        regime=regime,
                        execute_steps=execute,
                        success_mean=report.success_mean,
                        success_stderr=report.success_stderr,
                    )
                )
    return cells


def step_count_report(
    entries: list[dict],
    sample_chunks: np.ndarray | None = None,
    include_timing: bool = False,
) -> list[dict]:
    """Token/step accounting per method; wall-clock is informational and
    off by default so reports stay byte-reproducible."""
    rows = []
    for entry in entries:
        scheme = entry["scheme"]
        if scheme == "bin":
            cfg, h_a, d_a = entry["config"], entry["h_a"], entry["d_a"]
            row = {"method": "bin", "tokens": float(h_a * d_a), "steps": float(h_a * d_a)}
            if include_timing and sample_chunks is not None:
                t0 = time.perf_counter()
                for chunk in sample_chunks:
                    bin_detokenize(bin_tokenize(chunk, cfg), *chunk.shape, cfg)
                row["roundtrip_ms"] = (time.perf_counter() - t0) / len(sample_chunks) * 1e3
        elif scheme == "fast":
            tok: FastTokenizer = entry["tokenizer"]
            if sample_chunks is not None:
                lengths = [len(tok.tokenize(c)) for c in sample_chunks]
                mean_tokens = float(np.mean(lengths))
            else:
                mean_tokens = tok.mean_token_count()
            row = {"method": "fast", "tokens": mean_tokens, "steps": mean_tokens}
            if include_timing and sample_chunks is not None:
                t0 = time.perf_counter()
                for chunk in sample_chunks:
                    tok.detokenize(tok.tokenize(chunk))
                row["roundtrip_ms"] = (time.perf_counter() - t0) / len(sample_chunks) * 1e3
        elif scheme == "oat":
            k = entry["prefix"]
            row = {"method": f"oat[{k}]", "tokens": float(k), "steps": float(k)}
            if include_timing and sample_chunks is not None:
                model: OatTokenizer = entry["tokenizer"]
                t0 = time.perf_counter()
                ids = model.tokenize_many(sample_chunks)
                model.detokenize_many(ids[:, :k])
                row["roundtrip_ms"] = (time.perf_counter() - t0) / len(sample_chunks) * 1e3
        else:
            raise ConfigError(f"unknown scheme {scheme!r}")
        rows.append(row)
    return rows


# -- formatting -------------------------------------------------------------------


def format_table(headers: list[str], rows: list[list]) -> str:
    cells = [[str(h) for h in headers]] + [
        [f"{v:.4f}" if isinstance(v, float) else str(v) for v in row] for row in rows
    ]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = []
    for i, row in enumerate(cells):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def report_to_json(payload) -> str:
    def default(obj):
        if isinstance(obj, (ReconReport, RolloutReport)):
            return obj.to_dict()
        if hasattr(obj, "__dataclass_fields__"):
            return asdict(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, (np.integer,)):
            return int(obj)
        if isinstance(obj, (np.floating,)):
            return float(obj)
        raise TypeError(f"cannot serialize {type(obj)}")

    return json.dumps(payload, sort_keys=True, indent=2, default=default) + "\n"
