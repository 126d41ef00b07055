"""Command-line surface tying the toolkit into reproducible pipelines.

Every command accepts --seed (falling back to the OATOK_SEED environment
variable, then 0), reads numeric settings from a single JSON config file
with --set key=value overrides, and writes a manifest next to its outputs
recording everything needed to re-run it bit-identically.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np

from . import evaluation
from .binning import BinConfig, bin_detokenize, bin_tokenize
from .data import (
    DatasetConfig,
    dataset_chunks,
    fit_normalizer,
    generate_synthetic_dataset,
    load_dataset,
    load_norm_stats,
    normalize,
    denormalize,
    save_dataset,
    save_norm_stats,
)
from .env import OBS_DIM, ToyEnvConfig, scripted_episode
from .errors import OatokError
from .fast import FastConfig, fast_fit, load_fast, save_fast
from .fsq import codebook_size
from .oat import NestedDropoutDist, OatConfig, load_oat, save_oat, train_oat
from .policy import (
    config_for_bin,
    config_for_fast,
    config_for_oat,
    load_policy,
    make_training_pairs,
    policy_train,
    save_policy,
)

FORMAT_VERSION = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=10,
        )
        return out.stdout.strip() or "unknown"
    except Exception:
        return "unknown"


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("OATOK_SEED")
    return int(env) if env else 0


def _load_config(args) -> dict:
    cfg = {}
    if args.config:
        cfg.update(json.loads(Path(args.config).read_text()))
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            cfg[key] = json.loads(raw)
        except json.JSONDecodeError:
            cfg[key] = raw
    return cfg


def _write_manifest(out: Path, command: str, seed: int, config: dict,
                    inputs: dict, outputs: list[str]) -> None:
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "seed": seed,
        "config": config,
        "inputs": inputs,
        "outputs": outputs,
        "git_describe": _git_describe(),
        "format_version": FORMAT_VERSION,
    }
    target = out / "manifest.json" if out.is_dir() else out.with_suffix(out.suffix + ".manifest.json")
    target.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _out_dir(path_str: str) -> Path:
    out = Path(path_str)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_chunk(path: str) -> np.ndarray:
    return np.asarray(json.loads(Path(path).read_text())["values"], dtype=np.float64)


def _write_json(path: Path, payload) -> None:
    path.write_text(evaluation.report_to_json(payload))


def _load_chunks(data_dir: str, stats, h_a: int, stride: int | None = None) -> np.ndarray:
    ds = load_dataset(data_dir)
    chunks = dataset_chunks(ds, h_a, stride)
    return np.stack([normalize(c, stats) for c in chunks])


def _oat_config_from(cfg: dict, d_a: int, ordered_dist=None) -> OatConfig:
    return OatConfig(
        h_a=cfg.get("H_a", 32),
        d_a=d_a,
        h_l=cfg.get("H_l", 8),
        d_l=len(cfg.get("levels", [8, 5, 5, 5])),
        levels=tuple(cfg.get("levels", [8, 5, 5, 5])),
        enc_layers=cfg.get("enc_layers", 2),
        dec_layers=cfg.get("dec_layers", 4),
        model_dim=cfg.get("model_dim", 256),
        head_dim=cfg.get("head_dim", 64),
        ffn_ratio=cfg.get("ffn_ratio", 2),
        dropout_dist=ordered_dist or NestedDropoutDist(
            keep_all_prob=cfg.get("keep_all_prob", 0.0)
        ),
    )


# -- subcommands ------------------------------------------------------------------


def cmd_generate_data(args) -> int:
    seed = _resolve_seed(args)
    cfg = _load_config(args)
    ds_config = DatasetConfig(
        n_trajectories=cfg.get("n_trajectories", 100),
        T=cfg.get("T", 128),
        D_a=cfg.get("D_a", 2),
        family=cfg.get("family", "smooth-fourier"),
        noise_std=cfg.get("noise_std", 0.0),
    )
    dataset = generate_synthetic_dataset(ds_config, seed)
    out = _out_dir(args.out)
    save_dataset(dataset, out)
    _write_manifest(out, "generate-data", seed, cfg, {}, ["dataset.jsonl", "metadata.json"])
    print(f"wrote {len(dataset)} trajectories to {out}")
    return 0


def cmd_fit_normalizer(args) -> int:
    seed = _resolve_seed(args)
    stats = fit_normalizer(load_dataset(args.data))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_norm_stats(stats, out)
    _write_manifest(out, "fit-normalizer", seed, {}, {"data": args.data}, [out.name])
    print(f"wrote stats for {stats.min.size} dims to {out}")
    return 0


def cmd_train_tokenizer(args) -> int:
    seed = _resolve_seed(args)
    cfg = _load_config(args)
    stats = load_norm_stats(args.stats)
    h_a = cfg.get("H_a", 32)
    out = _out_dir(args.out)
    inputs = {"data": args.data, "stats": args.stats}

    if args.scheme == "bin":
        payload = {
            "scheme": "bin",
            "N": cfg.get("N", 256),
            "H_a": h_a,
            "D_a": stats.min.size,
            "format_version": FORMAT_VERSION,
        }
        (out / "tokenizer.json").write_text(json.dumps(payload, sort_keys=True) + "\n")
        _write_manifest(out, "train-tokenizer", seed, cfg, inputs, ["tokenizer.json"])
        print(f"wrote bin tokenizer (N={payload['N']}) to {out}")
        return 0

    chunks = _load_chunks(args.data, stats, h_a, cfg.get("stride"))
    if args.scheme == "fast":
        tokenizer = fast_fit(
            chunks,
            FastConfig(
                h_a=h_a,
                d_a=chunks.shape[2],
                gamma=cfg.get("gamma", 10.0),
                vocab_size=cfg.get("vocab_size", 1024),
            ),
        )
        save_fast(tokenizer, out / "tokenizer.json")
        _write_manifest(out, "train-tokenizer", seed, cfg, inputs, ["tokenizer.json"])
        print(f"fitted fast tokenizer ({len(tokenizer.vocab)} tokens) to {out}")
        return 0

    ordered = not args.no_nested_dropout
    config = _oat_config_from(cfg, chunks.shape[2])
    model, losses = train_oat(
        chunks, config, seed,
        steps=cfg.get("steps", 800),
        batch_size=cfg.get("batch_size", 64),
        lr=cfg.get("lr", 5e-5),
        ordered=ordered,
    )
    save_oat(model, out / "tokenizer.ckpt", seed=seed, ordered=ordered)
    np.savetxt(out / "loss_curve.txt", losses)
    _write_manifest(out, "train-tokenizer", seed, cfg, inputs, ["tokenizer.ckpt", "loss_curve.txt"])
    print(f"trained oat tokenizer (ordered={ordered}) final loss {losses[-20:].mean():.5f}")
    return 0


def _load_any_tokenizer(path: str):
    p = Path(path)
    ckpt = p / "tokenizer.ckpt" if p.is_dir() else p
    js = p / "tokenizer.json" if p.is_dir() else p
    if ckpt.exists() and ckpt.suffix == ".ckpt":
        model, header = load_oat(ckpt)
        return "oat", model, header
    payload = json.loads(js.read_text().split("\n", 1)[0]) if js.suffix == ".ckpt" else json.loads(js.read_text())
    if payload["scheme"] == "bin":
        return "bin", (BinConfig(payload["N"]), payload["H_a"], payload["D_a"]), payload
    if payload["scheme"] == "fast":
        return "fast", load_fast(js), payload
    raise UsageError(f"unrecognized tokenizer at {path}")


def cmd_tokenize(args) -> int:
    seed = _resolve_seed(args)
    scheme, tokenizer, _ = _load_any_tokenizer(args.tokenizer)
    chunk = _read_chunk(args.input)
    if args.stats:
        chunk = normalize(chunk, load_norm_stats(args.stats))
    if scheme == "oat":
        tokens = tokenizer.tokenize(chunk).tolist()
        meta = {"scheme": "oat", "H_l": tokenizer.config.h_l}
    elif scheme == "bin":
        cfg, h_a, d_a = tokenizer
        tokens = bin_tokenize(chunk, cfg).tolist()
        meta = {"scheme": "bin", "N": cfg.n_bins, "H_a": h_a, "D_a": d_a}
    else:
        tokens = [int(t) for t in tokenizer.tokenize(chunk)]
        meta = {"scheme": "fast"}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps({**meta, "tokens": tokens}, sort_keys=True) + "\n")
    _write_manifest(out, "tokenize", seed, {},
                    {"tokenizer": args.tokenizer, "input": args.input}, [out.name])
    print(f"wrote {len(tokens)} tokens to {out}")
    return 0


def cmd_detokenize(args) -> int:
    seed = _resolve_seed(args)
    scheme, tokenizer, _ = _load_any_tokenizer(args.tokenizer)
    payload = json.loads(Path(args.tokens).read_text())
    tokens = payload["tokens"]
    if scheme == "oat":
        prefix = args.prefix or len(tokens)
        if not 1 <= prefix <= tokenizer.config.h_l:
            raise UsageError(f"--prefix must lie in [1, {tokenizer.config.h_l}]")
        chunk = tokenizer.detokenize(np.asarray(tokens[:prefix]))
    elif scheme == "bin":
        cfg, h_a, d_a = tokenizer
        chunk = bin_detokenize(np.asarray(tokens), h_a, d_a, cfg)
    else:
        result = tokenizer.detokenize(tokens)
        if not isinstance(result, np.ndarray):
            raise OatokError(
                f"undecodable token sequence: expected {result.expected} "
                f"coefficients, got {result.got}"
            )
        chunk = result
    if args.stats:
        chunk = denormalize(chunk, load_norm_stats(args.stats))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps({"values": chunk.tolist()}, sort_keys=True) + "\n")
    _write_manifest(out, "detokenize", seed, {},
                    {"tokenizer": args.tokenizer, "tokens": args.tokens}, [out.name])
    print(f"wrote chunk {chunk.shape} to {out}")
    return 0


def cmd_eval_recon(args) -> int:
    seed = _resolve_seed(args)
    cfg = _load_config(args)
    scheme, tokenizer, header = _load_any_tokenizer(args.tokenizer)
    stats = load_norm_stats(args.stats)
    h_a = header.get("H_a", cfg.get("H_a", 32))
    held = _load_chunks(args.data, stats, h_a, cfg.get("stride"))
    report = evaluation.recon_curve(tokenizer, held)
    out = _out_dir(args.out)
    _write_json(out / "recon_report.json", report)
    rows = [[report.scheme, k, m, s] for k, m, s in zip(report.ks, report.mse_mean, report.mse_stderr)]
    (out / "recon_report.txt").write_text(
        evaluation.format_table(["scheme", "K", "mse", "stderr"], rows)
    )
    _write_manifest(out, "eval-recon", seed, cfg,
                    {"tokenizer": args.tokenizer, "data": args.data, "stats": args.stats},
                    ["recon_report.json", "recon_report.txt"])
    print((out / "recon_report.txt").read_text())
    return 0


def cmd_audit_decode(args) -> int:
    seed = _resolve_seed(args)
    scheme, tokenizer, _ = _load_any_tokenizer(args.tokenizer)
    rate = evaluation.decode_failure_audit(tokenizer, args.n, np.random.default_rng(seed))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_json(out, {"scheme": scheme, "n_samples": args.n, "failure_rate": rate})
    _write_manifest(out, "audit-decode", seed, {}, {"tokenizer": args.tokenizer}, [out.name])
    print(f"{scheme} decode failure rate over {args.n} samples: {rate:.4f}")
    return 0


def cmd_train_policy(args) -> int:
    seed = _resolve_seed(args)
    cfg = _load_config(args)
    stats = load_norm_stats(args.stats)
    scheme, tokenizer, header = _load_any_tokenizer(args.tokenizer)
    if scheme != args.binding:
        raise UsageError(f"tokenizer scheme {scheme!r} does not match binding {args.binding!r}")

    ds = load_dataset(args.data)
    if ds.metadata.get("family") != "point-mass-expert":
        raise UsageError("policy training expects a point-mass-expert dataset")
    # observations are reconstructed by replaying the deterministic expert
    rng = np.random.default_rng(ds.seed)
    episodes = []
    for traj in ds.trajectories:
        observations, actions, _ = scripted_episode(rng, traj.shape[0])
        episodes.append((observations, actions))

    h_a = header.get("H_a", cfg.get("H_a", 32))
    if scheme == "oat":
        tokenize_fn = lambda c: tokenizer.tokenize(normalize(c, stats))
        pconfig = config_for_oat(tokenizer, OBS_DIM)
    elif scheme == "bin":
        bin_cfg, h_a, d_a = tokenizer
        tokenize_fn = lambda c: bin_tokenize(normalize(c, stats), bin_cfg)
        pconfig = config_for_bin(bin_cfg, h_a, d_a, OBS_DIM)
    else:
        tokenize_fn = lambda c: tokenizer.tokenize(normalize(c, stats))
        pconfig = config_for_fast(tokenizer, OBS_DIM)
    pconfig.model_dim = cfg.get("policy_model_dim", pconfig.model_dim)
    pconfig.head_dim = cfg.get("policy_head_dim", pconfig.head_dim)
    pconfig.n_layers = cfg.get("policy_layers", pconfig.n_layers)
    pconfig.ffn_ratio = cfg.get("ffn_ratio", pconfig.ffn_ratio)

    obs_hist, targets = make_training_pairs(episodes, tokenize_fn, pconfig.h_o, h_a,
                                            cfg.get("stride"))
    net, losses = policy_train(
        obs_hist, targets, pconfig, seed,
        steps=cfg.get("policy_steps", 1500),
        batch_size=cfg.get("batch_size", 64),
        lr=cfg.get("lr", 5e-5),
    )
    out = _out_dir(args.out)
    save_policy(net, out / "policy.ckpt", seed=seed)
    np.savetxt(out / "loss_curve.txt", losses)
    _write_manifest(out, "train-policy", seed, cfg,
                    {"tokenizer": args.tokenizer, "data": args.data, "stats": args.stats},
                    ["policy.ckpt", "loss_curve.txt"])
    print(f"trained {args.binding} policy, final loss {losses[-20:].mean():.4f}")
    return 0


def cmd_rollout(args) -> int:
    seed = _resolve_seed(args)
    cfg = _load_config(args)
    net, _ = load_policy(Path(args.policy) / "policy.ckpt" if Path(args.policy).is_dir() else args.policy)
    scheme, tokenizer, _ = _load_any_tokenizer(args.tokenizer)
    stats = load_norm_stats(args.stats)
    prefix = args.prefix or net.config.token_horizon
    if net.config.binding == "oat" and not 1 <= prefix <= net.config.token_horizon:
        raise UsageError(f"--prefix must lie in [1, {net.config.token_horizon}]")
    env_config = ToyEnvConfig(max_steps=cfg.get("max_steps", 200))
    report = evaluation.closed_loop_eval(
        net, tokenizer if scheme != "bin" else None, stats, env_config,
        n_seeds=args.seeds, n_episodes=args.episodes, prefix=prefix,
        execute_steps=args.execute_steps,
    )
    out = _out_dir(args.out)
    _write_json(out / "rollout_report.json", report)
    _write_manifest(out, "rollout", seed, cfg,
                    {"policy": args.policy, "tokenizer": args.tokenizer, "stats": args.stats},
                    ["rollout_report.json"])
    print(f"{report.method}: success {report.success_mean:.3f} +- {report.success_stderr:.3f}")
    return 0


def cmd_sweep(args) -> int:
    seed = _resolve_seed(args)
    cfg = _load_config(args)
    stats = load_norm_stats(args.stats)
    out = _out_dir(args.out)

    if args.kind == "codebook":
        held = _load_chunks(args.heldout, stats, cfg.get("H_a", 32), cfg.get("stride"))
        chunks = _load_chunks(args.data, stats, cfg.get("H_a", 32), cfg.get("stride"))
        levels_list = [tuple(v) for v in cfg.get(
            "levels_list", [[8, 6, 5], [8, 8, 8], [8, 5, 5, 5], [8, 8, 6, 5], [7, 5, 5, 5, 5]]
        )]
        base = _oat_config_from(cfg, chunks.shape[2])
        rows = evaluation.codebook_sweep(
            levels_list, chunks, held, base, seed,
            steps=cfg.get("steps", 300), batch_size=cfg.get("batch_size", 64),
        )
        _write_json(out / "codebook_sweep.json", rows)
        table = evaluation.format_table(
            ["levels", "induced_V", "mse_full"],
            [[str(r["levels"]), r["induced_vocab"], r["mse_full"]] for r in rows],
        )
        (out / "codebook_sweep.txt").write_text(table)
        csv_lines = ["levels,induced_V,mse_full"] + [
            f"\"{r['levels']}\",{r['induced_vocab']},{r['mse_full']:.8f}" for r in rows
        ]
        (out / "codebook_sweep.csv").write_text("\n".join(csv_lines) + "\n")
        outputs = ["codebook_sweep.json", "codebook_sweep.txt", "codebook_sweep.csv"]
    else:
        ds = load_dataset(args.data)
        rng = np.random.default_rng(ds.seed)
        episodes = [scripted_episode(rng, t.shape[0])[:2] for t in ds.trajectories]
        base = _oat_config_from(cfg, 3)
        cells = evaluation.horizon_sweep(
            episodes, stats,
            h_a_values=cfg.get("H_a_values", [8, 16, 32, 64]),
            h_l_values=cfg.get("H_l_values", [1, 2, 4, 8]),
            env_config=ToyEnvConfig(max_steps=cfg.get("max_steps", 200)),
            seed=seed,
            tokenizer_steps=cfg.get("steps", 300),
            policy_steps=cfg.get("policy_steps", 500),
            n_seeds=cfg.get("n_seeds", 2),
            n_episodes=cfg.get("n_episodes", 10),
            base_config=base,
            batch_size=cfg.get("batch_size", 64),
        )
        _write_json(out / "horizon_sweep.json", cells)
        table = evaluation.format_table(
            ["H_a", "H_l", "regime", "execute", "success", "stderr"],
            [[c.h_a, c.h_l, c.regime, c.execute_steps, c.success_mean, c.success_stderr]
             for c in cells],
        )
        (out / "horizon_sweep.txt").write_text(table)
        csv_lines = ["H_a,H_l,regime,execute_steps,success_mean,success_stderr"] + [
            f"{c.h_a},{c.h_l},{c.regime},{c.execute_steps},{c.success_mean:.6f},{c.success_stderr:.6f}"
            for c in cells
        ]
        (out / "horizon_sweep.csv").write_text("\n".join(csv_lines) + "\n")
        outputs = ["horizon_sweep.json", "horizon_sweep.txt", "horizon_sweep.csv"]

    _write_manifest(out, f"sweep {args.kind}", seed, cfg,
                    {"data": args.data, "stats": args.stats}, outputs)
    print((out / outputs[1]).read_text())
    return 0


def cmd_report(args) -> int:
    seed = _resolve_seed(args)
    merged = {}
    for path in args.inputs:
        merged[Path(path).stem] = json.loads(Path(path).read_text())
    out = _out_dir(args.out)
    _write_json(out / "combined_report.json", merged)
    _write_manifest(out, "report", seed, {}, {"inputs": args.inputs}, ["combined_report.json"])
    print(f"merged {len(args.inputs)} reports into {out / 'combined_report.json'}")
    return 0


def cmd_codebook_sizes(args) -> int:
    rows = [[str(list(lv)), codebook_size(lv)] for lv in
            [(8, 6, 5), (8, 8, 8), (8, 5, 5, 5), (8, 8, 6, 5), (7, 5, 5, 5, 5)]]
    print(evaluation.format_table(["levels", "induced_V"], rows), end="")
    return 0


# -- dispatch -----------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="oatok", description=__doc__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p, config=True):
        p.add_argument("--seed", type=int, default=None)
        if config:
            p.add_argument("--config", default=None, help="JSON config file")
            p.add_argument("--set", action="append", metavar="KEY=VALUE",
                           help="override a config entry")

    p = sub.add_parser("generate-data", help="write a synthetic trajectory dataset")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_generate_data)

    p = sub.add_parser("fit-normalizer", help="fit per-dimension min/max stats")
    common(p, config=False)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_fit_normalizer)

    p = sub.add_parser("train-tokenizer", help="train/fit a tokenizer")
    common(p)
    p.add_argument("--scheme", choices=["oat", "bin", "fast"], required=True)
    p.add_argument("--no-nested-dropout", action="store_true")
    p.add_argument("--data", required=True)
    p.add_argument("--stats", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train_tokenizer)

    p = sub.add_parser("tokenize", help="tokenize one chunk file")
    common(p, config=False)
    p.add_argument("--tokenizer", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--stats", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_tokenize)

    p = sub.add_parser("detokenize", help="decode a token file back to a chunk")
    common(p, config=False)
    p.add_argument("--tokenizer", required=True)
    p.add_argument("--tokens", required=True)
    p.add_argument("--prefix", type=int, default=None)
    p.add_argument("--stats", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_detokenize)

    p = sub.add_parser("eval-recon", help="reconstruction-vs-prefix report")
    common(p)
    p.add_argument("--tokenizer", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--stats", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval_recon)

    p = sub.add_parser("audit-decode", help="Monte-Carlo decode failure audit")
    common(p, config=False)
    p.add_argument("--tokenizer", required=True)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_audit_decode)

    p = sub.add_parser("train-policy", help="behavior-clone a token policy")
    common(p)
    p.add_argument("--binding", choices=["oat", "bin", "fast"], required=True)
    p.add_argument("--tokenizer", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--stats", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train_policy)

    p = sub.add_parser("rollout", help="closed-loop evaluation on the point-mass task")
    common(p)
    p.add_argument("--policy", required=True)
    p.add_argument("--tokenizer", required=True)
    p.add_argument("--stats", required=True)
    p.add_argument("--prefix", type=int, default=None)
    p.add_argument("--execute-steps", type=int, default=None)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--episodes", type=int, default=50)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_rollout)

    p = sub.add_parser("sweep", help="codebook or horizon study")
    common(p)
    p.add_argument("kind", choices=["codebook", "horizon"])
    p.add_argument("--data", required=True)
    p.add_argument("--heldout", default=None)
    p.add_argument("--stats", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("report", help="merge report JSON files")
    common(p, config=False)
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("codebook-sizes", help="print the FSQ level table")
    p.set_defaults(fn=cmd_codebook_sizes, seed=None)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (OatokError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
