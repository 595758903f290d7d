"""Command-line entry point.

Subcommands: gen-layouts, expert-data, pretrain, train, eval, ablate,
gradcheck, inspect. Every subcommand reads the config file (when given) plus
flag overrides; unknown config keys and train/test overlap are hard errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import Config, VARIANTS
from .layout import generate_suite, load_layout, load_suite

log = logging.getLogger(__name__)


def _load_config(args) -> Config:
    cfg = Config.from_file(args.config) if args.config else Config()
    overrides = {}
    for key in ("seed", "variant", "workers", "a3c_episodes",
                "eval_episodes", "expert_episodes_per_layout",
                "pretrain_epochs", "policy_bc_epochs"):
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "sync", None):
        overrides["sync"] = True
    if overrides:
        cfg = cfg.replace(**overrides)
    return cfg.validate()


def _add_common(p, with_variant=True):
    p.add_argument("--config", help="config JSON file")
    p.add_argument("--seed", type=int, default=None)
    if with_variant:
        p.add_argument("--variant", choices=VARIANTS, default=None)


def cmd_gen_layouts(args) -> int:
    cfg = _load_config(args)
    manifest = generate_suite(
        args.out, args.train, args.test, seed=cfg.seed,
        width=cfg.grid_width, height=cfg.grid_height,
        num_categories=cfg.num_categories,
        target_categories=cfg.target_categories)
    cfg.to_file(Path(args.out) / "config.json")
    print(f"wrote {len(manifest['train'])} train / {len(manifest['test'])} "
          f"test layouts to {args.out}")
    return 0


def cmd_expert_data(args) -> int:
    from .expert import generate_expert_dataset
    cfg = _load_config(args)
    train, _, targets = load_suite(args.layouts)
    dataset = generate_expert_dataset(train, targets,
                                      cfg.expert_episodes_per_layout,
                                      cfg.seed, cfg)
    dataset.save(args.out)
    print(f"wrote {len(dataset)} expert samples "
          f"({dataset.num_episodes()} trajectories) to {args.out}")
    return 0


def cmd_pretrain(args) -> int:
    from .checkpoint import save_params
    from .expert import ExpertDataset
    from .imitation import pretrain_imitation
    from .network import NavModel
    cfg = _load_config(args)
    dataset = ExpertDataset.load(args.data)
    model = NavModel(cfg, np.random.default_rng(cfg.seed))
    report = pretrain_imitation(model, dataset, cfg.pretrain_epochs,
                                cfg.pretrain_lr, cfg.pretrain_batch,
                                seed=cfg.seed,
                                holdout_frac=cfg.pretrain_holdout)
    save_params(args.out, model.params,
                meta={"config_fingerprint": cfg.fingerprint(),
                      "stage": "pretrain"})
    print(json.dumps({"initial_loss": report["initial_loss"],
                      "final_loss": report["epoch_loss"][-1],
                      "holdout_accuracy": report["holdout_accuracy"][-1]},
                     indent=2))
    return 0


def cmd_train(args) -> int:
    from .train import run_training
    cfg = _load_config(args)
    train_layouts, test_layouts, targets = load_suite(args.layouts)
    cfg = cfg.replace(target_categories=targets)
    dataset = None
    if args.expert_data:
        from .expert import ExpertDataset
        dataset = ExpertDataset.load(args.expert_data)
    result = run_training(cfg, train_layouts, test_layouts, out_dir=args.out,
                          dataset=dataset, skip_pretrain=args.no_pretrain)
    summary = result["summary"]
    print(json.dumps({k: v for k, v in summary.items()
                      if k in ("eval", "a3c_episodes", "a3c_success_tail",
                               "wall_seconds", "skip_pretrain")}, indent=2))
    return 0


def cmd_eval(args) -> int:
    from .metrics import format_table
    from .runner import evaluate, make_policy
    from .world import TrajectoryLog
    cfg = _load_config(args)
    train_layouts, test_layouts, targets = load_suite(args.layouts)
    cfg = cfg.replace(target_categories=targets)
    layouts = train_layouts if args.split == "train" else test_layouts
    model = None
    if args.policy == "trained":
        if not args.checkpoint:
            print("error: --policy trained requires --checkpoint",
                  file=sys.stderr)
            return 2
        from .train import load_model
        model = load_model(cfg, args.checkpoint)
    policy = make_policy(args.policy, cfg, model=model, seed=cfg.seed)
    step_log = None
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        step_log = TrajectoryLog(Path(args.out) / "steps.jsonl")
    episodes = args.episodes or cfg.eval_episodes
    report = evaluate(policy, layouts, targets, episodes, cfg.seed, cfg,
                      step_log=step_log)
    if step_log:
        step_log.close()
    if args.out:
        report.save(args.out, label=f"eval_{args.policy}")
    print(format_table({args.policy: report}))
    print(json.dumps(report.summary(), indent=2))
    return 0


def cmd_ablate(args) -> int:
    from .expert import generate_expert_dataset
    from .metrics import format_table
    from .runner import ModelPolicy, evaluate
    from .train import run_training
    cfg = _load_config(args)
    train_layouts, test_layouts, targets = load_suite(args.layouts)
    cfg = cfg.replace(target_categories=targets)
    seeds = [int(s) for s in args.seeds.split(",")]
    variants = args.variants.split(",")
    unknown = set(variants) - set(VARIANTS)
    if unknown:
        print(f"error: unknown variants {sorted(unknown)}", file=sys.stderr)
        return 2
    rows = {}
    detail = []
    for variant in variants:
        per_seed = []
        for seed in seeds:
            vcfg = cfg.replace(variant=variant, seed=seed)
            dataset = generate_expert_dataset(
                train_layouts, targets, vcfg.expert_episodes_per_layout,
                seed, vcfg)
            result = run_training(vcfg, train_layouts, test_layouts,
                                  out_dir=None, dataset=dataset)
            rep = evaluate(ModelPolicy(result["model"]), test_layouts,
                           targets, cfg.eval_episodes, seed + 999, vcfg)
            per_seed.append(rep)
            detail.append({"variant": variant, "seed": seed,
                           **rep.summary()})
        best = max(range(len(per_seed)), key=lambda i: per_seed[i].success)
        rows[variant] = per_seed[best]
        mean_succ = float(np.mean([r.success for r in per_seed]))
        detail.append({"variant": variant, "mean_success": mean_succ})
    print(format_table(rows))
    if args.out:
        Path(args.out).write_text(json.dumps(detail, indent=2) + "\n")
    return 0


def cmd_gradcheck(args) -> int:
    from .gradcheck import report, run_suite
    cfg = _load_config(args)
    results = run_suite(seed=args.seed if args.seed is not None else 0,
                        cfg=cfg)
    print(report(results))
    return 0 if all(r.ok for r in results) else 1


def cmd_inspect(args) -> int:
    from .network import NavModel
    from .train import load_model
    from .world import GridWorld, Pose
    cfg = _load_config(args)
    layout = load_layout(args.layout)
    if args.checkpoint:
        model = load_model(cfg, args.checkpoint)
    else:
        model = NavModel(cfg, np.random.default_rng(cfg.seed))
    env = GridWorld(layout, args.target, cfg)
    if args.pose:
        x, y, h, p = (int(v) for v in args.pose.split(","))
        obs = env.place(Pose(x, y, h, p))
    else:
        obs = env.reset(seed=cfg.seed)
    trace = {}
    state = model.representation(obs, args.target, trace=trace)
    logits, value, _ = model.policy_step(state, None, model.initial_lstm())
    dump = {
        "pose": list(env.pose.as_tuple()),
        "target": args.target,
        "visible": obs.visible.tolist(),
        "horizontal_adjacency": trace.get("horizontal_adjacency",
                                          np.zeros(0)).tolist(),
        "depth_adjacency": trace.get("depth_adjacency", np.zeros(0)).tolist(),
        "map_attention": trace["map_attention"].tolist(),
        "token_attention_row0": trace["token_attention"][0].tolist(),
        "logits": logits.values[0].tolist(),
        "value": value.item(),
    }
    text = json.dumps(dump, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acrgnav",
        description="relation-graph object navigation: simulator, training, "
                    "and SPL evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-layouts", help="generate a layout suite")
    _add_common(p, with_variant=False)
    p.add_argument("--out", required=True)
    p.add_argument("--train", type=int, default=10)
    p.add_argument("--test", type=int, default=5)
    p.set_defaults(func=cmd_gen_layouts)

    p = sub.add_parser("expert-data", help="generate expert demonstrations")
    _add_common(p, with_variant=False)
    p.add_argument("--layouts", required=True, help="suite directory")
    p.add_argument("--episodes-per-layout", dest="expert_episodes_per_layout",
                   type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_expert_data)

    p = sub.add_parser("pretrain", help="imitation pretraining only")
    _add_common(p)
    p.add_argument("--data", required=True, help="expert dataset .npz")
    p.add_argument("--epochs", dest="pretrain_epochs", type=int, default=None)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("train", help="full pipeline: pretrain + actor-critic")
    _add_common(p)
    p.add_argument("--layouts", required=True, help="suite directory")
    p.add_argument("--expert-data", help="reuse an existing dataset")
    p.add_argument("--episodes", dest="a3c_episodes", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--sync", action="store_true",
                   help="deterministic synchronous mode")
    p.add_argument("--no-pretrain", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run evaluation episodes")
    _add_common(p)
    p.add_argument("--layouts", required=True)
    p.add_argument("--split", choices=("train", "test"), default="test")
    p.add_argument("--policy", choices=("trained", "random", "expert"),
                   default="trained")
    p.add_argument("--checkpoint")
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="train and compare ablation variants")
    _add_common(p, with_variant=False)
    p.add_argument("--layouts", required=True)
    p.add_argument("--variants", default="acrg,ohrg,atdrg,multidepth,vertical")
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    _add_common(p)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("inspect", help="dump adjacency and attention rows")
    _add_common(p)
    p.add_argument("--layout", required=True, help="layout file")
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--pose", help="x,y,heading,pitch")
    p.add_argument("--out")
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
