"""Command-line front end: generation, remapping, training, diagnostics.

Every subcommand resolves its options with precedence CLI flag > JSON config
file (--config) > built-in default, then writes a RunManifest JSON next to
its outputs recording the resolved values, input digests, and a
deterministic run id.  Identical (argv, input files, seeds) produce
byte-identical outputs; nothing here depends on time or environment.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corpora import (
    CorpusSpec,
    Vocab,
    apply_to_dataset,
    apply_to_lines,
    gen_motif_task,
    gen_parens,
    gen_uniform,
    inject_tokens,
    load_corpus,
    load_dataset,
    load_mapping,
    make_random_mapping,
    make_shift_mapping,
    save_corpus,
    save_dataset,
    save_mapping,
    split_dataset,
    wrap_sequence,
)
from .diagnostics import (
    attention_match,
    collect_representations,
    gradient_confusion,
    jacobian_singular_values,
    perturbation_variance,
    pwcca_report,
)
from .errors import XferError
from .model import ModelConfig, load_checkpoint, save_checkpoint
from .training import TrainConfig, finetune, pretrain_mlm

# ---------------------------------------------------------------------------
# option resolution and manifests


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """flags > config file > defaults; every option ends up with one value."""
    explicit = {k: v for k, v in vars(args).items()
                if k not in ("func", "config") and v is not None}
    overlay = {}
    config_path = getattr(args, "config", None)
    if config_path:
        overlay = json.loads(Path(config_path).read_text(encoding="utf-8"))
        unknown = set(overlay) - set(defaults)
        if unknown:
            raise XferError(f"unknown config keys: {sorted(unknown)}")
    return {**defaults, **overlay, **explicit}


def _write_manifest(out_path, subcommand: str, resolved: dict, inputs: dict):
    body = {
        "subcommand": subcommand,
        "tool_version": __version__,
        "resolved": {k: v for k, v in sorted(resolved.items())},
        "input_digests": {k: _digest(v) for k, v in sorted(inputs.items()) if v},
    }
    run_id = hashlib.sha256(
        json.dumps(body, sort_keys=True).encode("utf-8")).hexdigest()[:16]
    body["run_id"] = run_id
    path = Path(str(out_path) + ".manifest.json")
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return run_id


def _write_csv(path, header: str, rows):
    with open(path, "w", encoding="utf-8") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_corpus(args):
    d = _resolve(args, dict(kind="nesting", vocab_size=64, min_len=10, max_len=16,
                            lines=1000, bracket_types=10, close_prob=0.4, seed=0,
                            out="corpus.txt", vocab_out=None))
    spec = CorpusSpec(kind=d["kind"], vocab_size=d["vocab_size"],
                      min_len=d["min_len"], max_len=d["max_len"],
                      num_lines=d["lines"], bracket_types=d["bracket_types"],
                      close_prob=d["close_prob"], seed=d["seed"])
    if d["kind"] == "uniform":
        vocab, lines = gen_uniform(spec)
    else:
        vocab, lines = gen_parens(spec)
    save_corpus(lines, d["out"])
    vocab_out = d["vocab_out"] or str(Path(d["out"]).with_suffix(".vocab.txt"))
    vocab.save(vocab_out)
    d["vocab_out"] = vocab_out
    _write_manifest(d["out"], "gen-corpus", d, {})
    print(f"wrote {len(lines)} lines to {d['out']} (vocab: {vocab_out})")


def cmd_gen_task(args):
    d = _resolve(args, dict(alphabet=6, min_len=10, max_len=16, examples=1000,
                            motif="a c b a", seed=0, out="task.tsv",
                            vocab_out=None))
    spec = CorpusSpec(kind="motif", vocab_size=5 + d["alphabet"],
                      min_len=d["min_len"], max_len=d["max_len"],
                      num_lines=d["examples"], motif=d["motif"], seed=d["seed"])
    ds = gen_motif_task(spec)
    save_dataset(ds, d["out"])
    vocab_out = d["vocab_out"] or str(Path(d["out"]).with_suffix(".vocab.txt"))
    ds.vocab.save(vocab_out)
    d["vocab_out"] = vocab_out
    _write_manifest(d["out"], "gen-task", d, {})
    print(f"wrote {len(ds)} examples to {d['out']} (vocab: {vocab_out})")


def cmd_make_map(args):
    d = _resolve(args, dict(kind="shift", vocab=None, model_vocab=None, offset=1000,
                            seed=0, avoid_unused=True, out="map.tsv"))
    if d["vocab"] is None:
        raise XferError("make-map requires --vocab")
    vocab = Vocab.load(d["vocab"])
    inputs = {"vocab": d["vocab"]}
    if d["kind"] == "shift":
        mapping = make_shift_mapping(vocab, d["offset"])
    elif d["kind"] == "random":
        mapping = make_random_mapping(vocab, d["seed"])
    elif d["kind"] == "inject":
        if d["model_vocab"] is None:
            raise XferError("inject mappings require --model-vocab")
        model_vocab = Vocab.load(d["model_vocab"])
        mapping = inject_tokens(vocab, model_vocab, d["seed"],
                                avoid_unused=d["avoid_unused"])
        inputs["model_vocab"] = d["model_vocab"]
    else:
        raise XferError(f"unknown mapping kind {d['kind']!r}")
    save_mapping(mapping, d["out"])
    _write_manifest(d["out"], "make-map", d, inputs)
    print(f"wrote {mapping.domain_size}-entry {d['kind']} mapping to {d['out']}")


def cmd_remap(args):
    d = _resolve(args, dict(data=None, corpus=None, mapping=None,
                            mapping_kind="file", vocab=None, target_vocab=None,
                            out="remapped.out"))
    if d["mapping"] is None or d["vocab"] is None:
        raise XferError("remap requires --mapping and --vocab")
    if (d["data"] is None) == (d["corpus"] is None):
        raise XferError("remap needs exactly one of --data / --corpus")
    mapping = load_mapping(d["mapping"], kind=d["mapping_kind"])
    vocab = Vocab.load(d["vocab"])
    target = Vocab.load(d["target_vocab"]) if d["target_vocab"] else vocab
    inputs = {"mapping": d["mapping"], "vocab": d["vocab"]}
    if d["target_vocab"]:
        inputs["target_vocab"] = d["target_vocab"]
    if d["data"]:
        ds = load_dataset(d["data"], vocab)
        save_dataset(apply_to_dataset(ds, mapping, target_vocab=target), d["out"])
        inputs["data"] = d["data"]
        n = len(ds)
    else:
        lines = load_corpus(d["corpus"])
        save_corpus(apply_to_lines(lines, mapping, vocab, target), d["out"])
        inputs["corpus"] = d["corpus"]
        n = len(lines)
    _write_manifest(d["out"], "remap", d, inputs)
    print(f"remapped {n} records to {d['out']}")


_MODEL_DEFAULTS = dict(layers=4, hidden=128, heads=4, ffn=512, max_len=64,
                       dropout=0.1)


def _model_config(d, vocab_size, num_classes=2, regression=False) -> ModelConfig:
    return ModelConfig(num_layers=d["layers"], hidden_dim=d["hidden"],
                       num_heads=d["heads"], ffn_dim=d["ffn"],
                       vocab_size=vocab_size, max_len=d["max_len"],
                       dropout_prob=d["dropout"], num_classes=num_classes,
                       regression=regression)


def cmd_pretrain(args):
    d = _resolve(args, dict(corpus=None, vocab=None, steps=1000, lr=1e-5,
                            batch_size=32, seed=0, mask_ratio=0.15, log_every=50,
                            out="model.ck", curve_out=None, **_MODEL_DEFAULTS))
    if d["corpus"] is None or d["vocab"] is None:
        raise XferError("pretrain requires --corpus and --vocab")
    vocab = Vocab.load(d["vocab"])
    lines = load_corpus(d["corpus"])
    lines_ids = [wrap_sequence(vocab.ids_of(l)) for l in lines]
    config = _model_config(d, vocab.size)
    tc = TrainConfig(total_steps=d["steps"], lr=d["lr"], batch_size=d["batch_size"],
                     seed=d["seed"], mask_ratio=d["mask_ratio"],
                     log_every=d["log_every"])
    params, curve = pretrain_mlm(lines_ids, vocab, config, tc)
    provenance = {"kind": "pretrain_mlm", "corpus_sha256": _digest(d["corpus"]),
                  "train_config": tc.to_dict()}
    save_checkpoint(params, config, d["out"], vocab_sha256=vocab.sha256(),
                    provenance=provenance)
    curve_out = d["curve_out"] or str(Path(d["out"]).with_suffix(".curve.csv"))
    curve.save(curve_out)
    d["curve_out"] = curve_out
    _write_manifest(d["out"], "pretrain",
                    d, {"corpus": d["corpus"], "vocab": d["vocab"]})
    print(f"pretrained {d['steps']} steps; final loss {curve.final_loss():.4f}; "
          f"checkpoint: {d['out']}")


def cmd_finetune(args):
    d = _resolve(args, dict(data=None, vocab=None, ckpt=None, init_mode="scratch",
                            steps=1000, lr=1e-5, batch_size=32, seed=0,
                            subset_fraction=1.0, selection="final",
                            split="0.9,0.05,0.05", split_seed=0, metric="auto",
                            log_every=50, eval_every=0, task_name=None,
                            out_dir="run", **_MODEL_DEFAULTS))
    if d["data"] is None or d["vocab"] is None:
        raise XferError("finetune requires --data and --vocab")
    vocab = Vocab.load(d["vocab"])
    ds = load_dataset(d["data"], vocab, max_len=d["max_len"])
    fractions = tuple(float(x) for x in d["split"].split(","))
    splits = split_dataset(ds, fractions=fractions, seed=d["split_seed"])

    regression = ds.label_kind == "scalar"
    num_classes = ds.num_classes if not regression else 2
    inputs = {"data": d["data"], "vocab": d["vocab"]}
    checkpoint = None
    if d["init_mode"] in ("checkpoint", "re-emb"):
        if d["ckpt"] is None:
            raise XferError(f"init_mode={d['init_mode']} requires --ckpt")
        params, manifest = load_checkpoint(d["ckpt"])
        saved = dict(manifest["config"])
        config = ModelConfig(**{**saved, "num_classes": num_classes,
                                "regression": regression})
        checkpoint = (params, manifest)
        inputs["ckpt"] = d["ckpt"]
    else:
        config = _model_config(d, vocab.size, num_classes, regression)

    tc = TrainConfig(total_steps=d["steps"], lr=d["lr"], batch_size=d["batch_size"],
                     seed=d["seed"], subset_fraction=d["subset_fraction"],
                     init_mode=d["init_mode"], checkpoint_selection=d["selection"],
                     log_every=d["log_every"], eval_every=d["eval_every"])
    metric = None if d["metric"] == "auto" else d["metric"]
    result = finetune(splits, config, tc, checkpoint=checkpoint, metric=metric)

    out_dir = Path(d["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    task = d["task_name"] or Path(d["data"]).stem
    d["task_name"] = task
    run_id = _write_manifest(out_dir / "run", "finetune", d, inputs)
    rep = result.report
    _write_csv(out_dir / "metrics.csv", "run_id,init_mode,seed,metric,value,n",
               [(run_id, rep.init_mode, rep.seed, rep.metric, rep.value, rep.n)])
    result.curve.save(out_dir / "curve.csv")
    result.curve.save_valid(out_dir / "valid.csv")
    save_checkpoint(result.params, config, out_dir / "model.ck",
                    vocab_sha256=vocab.sha256(),
                    provenance={"kind": "finetune", "init_mode": d["init_mode"],
                                "task": task, "train_config": tc.to_dict(),
                                "selected_step": result.selected_step})
    print(f"{task} [{d['init_mode']} seed {d['seed']}] "
          f"{rep.metric}={rep.value:.4f} (n={rep.n}) -> {out_dir}")


def _load_eval_dataset(d):
    vocab = Vocab.load(d["vocab"])
    ds = load_dataset(d["data"], vocab, max_len=d.get("max_len", 512))
    return vocab, ds


def _load_ckpt_model(path, ds):
    params, manifest = load_checkpoint(path)
    regression = ds.label_kind == "scalar"
    num_classes = ds.num_classes if not regression else 2
    config = ModelConfig(**{**manifest["config"], "num_classes": num_classes,
                            "regression": regression})
    return params, config


def cmd_diagnose(args):
    which = args.which
    if which == "pwcca":
        d = _resolve(args, dict(ckpt_a=None, ckpt_b=None, data=None, vocab=None,
                                layer=0, n_points=512, seed=0, out="pwcca.csv"))
        _require(d, "ckpt_a", "ckpt_b", "data", "vocab")
        vocab, ds = _load_eval_dataset(d)
        pa, ca = _load_ckpt_model(d["ckpt_a"], ds)
        pb, cb = _load_ckpt_model(d["ckpt_b"], ds)
        layer = d["layer"] or ca.num_layers
        ra = collect_representations(pa, ca, ds, layer, d["n_points"], d["seed"],
                                     checkpoint_id=d["ckpt_a"])
        rb = collect_representations(pb, cb, ds, layer, d["n_points"], d["seed"],
                                     checkpoint_id=d["ckpt_b"])
        rep = pwcca_report(ra, rb)
        _write_csv(d["out"], "dir,layer,value",
                   [("xy", layer, rep.xy), ("yx", layer, rep.yx),
                    ("mean", layer, rep.mean)])
        inputs = {k: d[k] for k in ("ckpt_a", "ckpt_b", "data", "vocab")}
    elif which == "attention":
        d = _resolve(args, dict(ckpt_a=None, ckpt_b=None, data=None, vocab=None,
                                n_inputs=16, out="attention.csv"))
        _require(d, "ckpt_a", "ckpt_b", "data", "vocab")
        vocab, ds = _load_eval_dataset(d)
        pa, ca = _load_ckpt_model(d["ckpt_a"], ds)
        pb, cb = _load_ckpt_model(d["ckpt_b"], ds)
        rep = attention_match(pa, ca, pb, cb, ds, d["n_inputs"])
        _write_csv(d["out"], "layer,mean_l1,n_inputs",
                   [(i + 1, v, rep.n_inputs) for i, v in enumerate(rep.mean_l1)])
        inputs = {k: d[k] for k in ("ckpt_a", "ckpt_b", "data", "vocab")}
    elif which == "isometry":
        d = _resolve(args, dict(ckpt=None, data=None, vocab=None, index=0,
                                out="isometry.csv"))
        _require(d, "ckpt", "data", "vocab")
        vocab, ds = _load_eval_dataset(d)
        params, config = _load_ckpt_model(d["ckpt"], ds)
        spec = jacobian_singular_values(params, config, ds.sequences[d["index"]])
        _write_csv(d["out"], "rank,sigma",
                   [(i, float(s)) for i, s in enumerate(spec.values)])
        inputs = {k: d[k] for k in ("ckpt", "data", "vocab")}
    elif which == "confusion":
        d = _resolve(args, dict(ckpt=None, data=None, vocab=None, pairs=50,
                                seed=0, out="confusion.csv"))
        _require(d, "ckpt", "data", "vocab")
        vocab, ds = _load_eval_dataset(d)
        params, config = _load_ckpt_model(d["ckpt"], ds)
        stats = gradient_confusion(params, config, ds, d["pairs"], d["seed"])
        rows = [(i, float(c)) for i, c in enumerate(stats.cosines)]
        rows += [("mean", stats.mean), ("median", stats.median),
                 ("min", stats.min)]
        _write_csv(d["out"], "pair_id,cosine", rows)
        inputs = {k: d[k] for k in ("ckpt", "data", "vocab")}
    elif which == "perturb":
        d = _resolve(args, dict(ckpt=None, data=None, vocab=None,
                                sigmas="1e-8,1e-6,1e-4,1e-2", draws=20, seed=0,
                                site="last-hidden-cls", out="perturb.csv"))
        _require(d, "ckpt", "data", "vocab")
        vocab, ds = _load_eval_dataset(d)
        params, config = _load_ckpt_model(d["ckpt"], ds)
        sigmas = tuple(float(s) for s in d["sigmas"].split(","))
        rep = perturbation_variance(params, config, ds, sigmas=sigmas,
                                    n_draws=d["draws"], seed=d["seed"],
                                    output_site=d["site"])
        _write_csv(d["out"], "sigma,mean_dist,std_dist,n_draws",
                   [(r.sigma, r.mean_dist, r.std_dist, r.n_draws)
                    for r in rep.rows])
        inputs = {k: d[k] for k in ("ckpt", "data", "vocab")}
    else:  # pragma: no cover - argparse restricts choices
        raise XferError(f"unknown diagnostic {which!r}")
    _write_manifest(d["out"], f"diagnose-{which}", d, inputs)
    print(f"wrote {d['out']}")


def _require(d, *keys):
    missing = [k for k in keys if d[k] is None]
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise XferError(f"missing required options: {flags}")


def cmd_report(args):
    d = _resolve(args, dict(runs=None, out="summary.csv"))
    run_dirs = d["runs"]
    if not run_dirs:
        raise XferError("report requires at least one run directory")
    rows = []
    for rd in run_dirs:
        rd = Path(rd)
        metrics = rd / "metrics.csv"
        manifest = rd / "run.manifest.json"
        if not metrics.exists() or not manifest.exists():
            continue
        meta = json.loads(manifest.read_text(encoding="utf-8"))
        task = meta["resolved"].get("task_name", "unknown")
        lines = metrics.read_text(encoding="utf-8").splitlines()[1:]
        for line in lines:
            run_id, init_mode, seed, metric, value, n = line.split(",")
            rows.append((task, init_mode, metric, int(seed), float(value)))
    if not rows:
        raise XferError("no completed runs found")
    groups = {}
    for task, init_mode, metric, seed, value in rows:
        groups.setdefault((task, init_mode, metric), []).append(value)
    out_rows = []
    for (task, init_mode, metric), values in sorted(groups.items()):
        arr = np.array(values)
        out_rows.append((task, init_mode, metric, float(arr.mean()),
                         float(arr.std()), len(values)))
    _write_csv(d["out"], "task,init_mode,metric,mean,std,n_seeds", out_rows)
    _write_manifest(d["out"], "report", {**d, "runs": [str(r) for r in run_dirs]},
                    {})
    print(f"wrote {len(out_rows)} summary rows to {d['out']}")


# ---------------------------------------------------------------------------
# parser wiring


def _add(p, *names, **kw):
    kw.setdefault("default", None)
    p.add_argument(*names, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xferlab",
        description="Desk-scale MLM transfer testbed: synthetic corpora, "
                    "token remapping, fine-tuning, diagnostics.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("gen-corpus", help="generate a pretraining corpus")
    _add(p, "--kind", choices=["uniform", "flat", "nesting"])
    for flag, typ in [("--vocab-size", int), ("--min-len", int), ("--max-len", int),
                      ("--lines", int), ("--bracket-types", int),
                      ("--close-prob", float), ("--seed", int)]:
        _add(p, flag, type=typ)
    _add(p, "--out"); _add(p, "--vocab-out"); _add(p, "--config")
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("gen-task", help="generate a motif classification task")
    for flag, typ in [("--alphabet", int), ("--min-len", int), ("--max-len", int),
                      ("--examples", int), ("--seed", int)]:
        _add(p, flag, type=typ)
    _add(p, "--motif"); _add(p, "--out"); _add(p, "--vocab-out"); _add(p, "--config")
    p.set_defaults(func=cmd_gen_task)

    p = sub.add_parser("make-map", help="create a token-id mapping")
    _add(p, "--kind", choices=["shift", "random", "inject"])
    _add(p, "--vocab"); _add(p, "--model-vocab")
    _add(p, "--offset", type=int); _add(p, "--seed", type=int)
    _add(p, "--no-avoid-unused", dest="avoid_unused", action="store_const",
         const=False)
    _add(p, "--out"); _add(p, "--config")
    p.set_defaults(func=cmd_make_map)

    p = sub.add_parser("remap", help="apply a mapping to a dataset or corpus")
    _add(p, "--data"); _add(p, "--corpus"); _add(p, "--mapping")
    _add(p, "--mapping-kind", choices=["file", "inject"])
    _add(p, "--vocab"); _add(p, "--target-vocab"); _add(p, "--out")
    _add(p, "--config")
    p.set_defaults(func=cmd_remap)

    def model_flags(p):
        for flag, typ in [("--layers", int), ("--hidden", int), ("--heads", int),
                          ("--ffn", int), ("--max-len", int), ("--dropout", float)]:
            _add(p, flag, type=typ)

    p = sub.add_parser("pretrain", help="masked-LM pretraining")
    _add(p, "--corpus"); _add(p, "--vocab")
    for flag, typ in [("--steps", int), ("--lr", float), ("--batch-size", int),
                      ("--seed", int), ("--mask-ratio", float),
                      ("--log-every", int)]:
        _add(p, flag, type=typ)
    model_flags(p)
    _add(p, "--out"); _add(p, "--curve-out"); _add(p, "--config")
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("finetune", help="fine-tune on a labeled dataset")
    _add(p, "--data"); _add(p, "--vocab"); _add(p, "--ckpt")
    _add(p, "--init-mode", choices=["scratch", "checkpoint", "re-emb"])
    for flag, typ in [("--steps", int), ("--lr", float), ("--batch-size", int),
                      ("--seed", int), ("--subset-fraction", float),
                      ("--split-seed", int), ("--log-every", int),
                      ("--eval-every", int)]:
        _add(p, flag, type=typ)
    _add(p, "--selection", choices=["final", "best-valid"])
    _add(p, "--split"); _add(p, "--metric")
    _add(p, "--task-name"); _add(p, "--out-dir")
    model_flags(p)
    _add(p, "--config")
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("diagnose", help="run one diagnostic")
    p.add_argument("which", choices=["pwcca", "attention", "isometry",
                                     "confusion", "perturb"])
    _add(p, "--ckpt"); _add(p, "--ckpt-a"); _add(p, "--ckpt-b")
    _add(p, "--data"); _add(p, "--vocab")
    for flag, typ in [("--layer", int), ("--n-points", int), ("--n-inputs", int),
                      ("--index", int), ("--pairs", int), ("--draws", int),
                      ("--seed", int)]:
        _add(p, flag, type=typ)
    _add(p, "--sigmas"); _add(p, "--site", choices=["last-hidden-cls", "logits"])
    _add(p, "--out"); _add(p, "--config")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("report", help="summarize fine-tune runs (mean/std over seeds)")
    p.add_argument("runs", nargs="*")
    _add(p, "--out"); _add(p, "--config")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except XferError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
