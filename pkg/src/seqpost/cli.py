"""Command-line surface tying the pipeline together.

Subcommands: stats, ensemble, refine (alias: pipeline), train, eval, synth.
All inter-stage formats are line-delimited JSON; every command is seeded and
writes a run manifest with the digests of its inputs and outputs, so any
published number is reproducible from the files alone.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

import numpy as np

from . import __version__
from .cooc import CoocStats, IndicatorMode, SmoothingConfig, build_stats
from .decoder import MultiHeadDecoder, TrainConfig, load_train_dataset, train
from .ensemble import (
    EnsembleWeights,
    combine_logits,
    dump_logits,
    load_logits,
    softmax_rows,
)
from .metric import evaluate_corpus
from .refine import (
    PredictionConfig,
    PredictionSet,
    dump_predictions,
    generate_patterns,
    load_predictions,
)
from .synth import (
    SynthConfig,
    corrupt_to_logits_sized,
    gen_markov_corpus,
    make_vocabularies,
    run_refinement_experiment,
)
from .vocab import Vocabulary, dump_corpus, load_corpus, validate_sequence


class CliError(Exception):
    pass


def _sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(path, command, seed, inputs, config, outputs):
    manifest = {
        "tool": f"seqpost {__version__}",
        "command": command,
        "seed": seed,
        "inputs": {p: _sha256_file(p) for p in inputs},
        "config": config,
        "outputs": {p: _sha256_file(p) for p in outputs},
    }
    with open(path, "w") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _say(args, message):
    if not args.quiet:
        print(message)


def _load_vocab(path: str) -> Vocabulary:
    with open(path) as handle:
        return Vocabulary.from_json(handle.read())


def _indicator_mode(name: str) -> IndicatorMode:
    return IndicatorMode(name)


# ---------------------------------------------------------------------------
# stats


def cmd_stats(args) -> int:
    verb_vocab = _load_vocab(args.verb_vocab)
    noun_vocab = _load_vocab(args.noun_vocab)
    corpus = load_corpus(args.train)
    if args.val:
        corpus = corpus + load_corpus(args.val)
    for seq in corpus:
        violations = validate_sequence(seq, verb_vocab, noun_vocab)
        if violations:
            raise CliError(f"episode {seq.episode_id!r}: {violations[0].message}")
    cfg = SmoothingConfig(
        add_k=args.add_k,
        prob_clamp_min=args.prob_clamp_min,
        prob_clamp_max=args.prob_clamp_max,
    )
    stats = build_stats(corpus, verb_vocab, noun_vocab, cfg)
    with open(args.out, "w") as handle:
        handle.write(stats.to_json() + "\n")
    n_bigrams = sum(len(seq.actions) - 1 for seq in corpus)
    _say(args, f"vocab sizes: {len(verb_vocab)} verbs, {len(noun_vocab)} nouns")
    _say(args, f"{len(corpus)} sequences, {n_bigrams} bigrams -> {args.out}")
    inputs = [args.train, args.verb_vocab, args.noun_vocab] + ([args.val] if args.val else [])
    _write_manifest(
        args.manifest or args.out + ".manifest.json",
        ["stats"],
        None,
        inputs,
        {"add_k": cfg.add_k, "prob_clamp_min": cfg.prob_clamp_min,
         "prob_clamp_max": cfg.prob_clamp_max},
        [args.out],
    )
    return 0


# ---------------------------------------------------------------------------
# ensemble


def cmd_ensemble(args) -> int:
    a_list = load_logits(args.logits_a)
    b_list = load_logits(args.logits_b)
    if len(a_list) != len(b_list):
        raise CliError(f"logits files differ in length: {len(a_list)} vs {len(b_list)}")
    weights = EnsembleWeights(alpha=args.alpha, beta=args.beta)

    if args.sweep:
        return _sweep(args, a_list, b_list)

    if not args.out:
        raise CliError("--out is required unless --sweep is given")
    combined = [combine_logits(a, b, weights) for a, b in zip(a_list, b_list)]
    dump_logits(combined, args.out)
    _say(args, f"{len(combined)} examples combined (alpha={args.alpha}, beta={args.beta}) -> {args.out}")
    _write_manifest(
        args.manifest or args.out + ".manifest.json",
        ["ensemble"],
        None,
        [args.logits_a, args.logits_b],
        {"alpha": args.alpha, "beta": args.beta},
        [args.out],
    )
    return 0


def _sweep(args, a_list, b_list) -> int:
    """Grid search over (alpha, beta) scored by raw-argmax action ED."""
    if not args.truth:
        raise CliError("--sweep requires --truth")
    truths = load_corpus(args.truth)
    grid = [round(0.1 * i, 1) for i in range(0, 21)]
    best = None
    for alpha in grid:
        for beta in grid:
            if alpha == 0.0 and beta == 0.0:
                continue
            weights = EnsembleWeights(alpha=alpha, beta=beta)
            preds = []
            for a, b in zip(a_list, b_list):
                dists = softmax_rows(combine_logits(a, b, weights))
                pattern = tuple(
                    _argmax_action(dists, z) for z in range(dists.num_steps)
                )
                preds.append(
                    PredictionSet(example_id=a.example_id, patterns=(pattern,), tiers=("raw_argmax",))
                )
            report = evaluate_corpus(preds, truths)
            key = (report.ed_action, report.ed_verb, report.ed_noun)
            if best is None or key < best[0]:
                best = (key, alpha, beta)
    _, alpha, beta = best
    _say(args, f"best weights by action ED: alpha={alpha} beta={beta} (ed_action={best[0][0]:.4f})")
    print(json.dumps({"alpha": alpha, "beta": beta, "ed_action": best[0][0]}))
    return 0


def _argmax_action(dists, z):
    from .vocab import Action

    return Action(int(np.argmax(dists.verb_probs[z])), int(np.argmax(dists.noun_probs[z])))


# ---------------------------------------------------------------------------
# refine / pipeline


def cmd_refine(args) -> int:
    tensors = load_logits(args.logits)
    config = {
        "z": args.z, "k": args.k, "seed": args.seed, "mode": args.mode,
        "alpha": None, "beta": None,
    }
    if args.logits_b:
        b_list = load_logits(args.logits_b)
        if len(tensors) != len(b_list):
            raise CliError(f"logits files differ in length: {len(tensors)} vs {len(b_list)}")
        weights = EnsembleWeights(alpha=args.alpha, beta=args.beta)
        tensors = [combine_logits(a, b, weights) for a, b in zip(tensors, b_list)]
        config["alpha"], config["beta"] = args.alpha, args.beta

    refining = args.k >= 2
    if refining and not args.stats:
        raise CliError("refinement (k >= 2) requires --stats")
    stats = None
    if args.stats:
        with open(args.stats) as handle:
            stats = CoocStats.from_json(handle.read())

    pred_cfg = PredictionConfig(
        num_steps=args.z,
        num_patterns=args.k,
        rng_seed=args.seed,
        mode=_indicator_mode(args.mode),
    )
    pred_sets = []
    for i, tensor in enumerate(tensors):
        if tensor.num_steps != args.z:
            raise CliError(
                f"example {tensor.example_id!r} has {tensor.num_steps} steps, expected {args.z}"
            )
        dists = softmax_rows(tensor)
        pred_sets.append(generate_patterns(dists, stats, pred_cfg, stream=i))
    dump_predictions(pred_sets, args.out)
    _say(args, f"{len(pred_sets)} examples -> {args.out} (Z={args.z}, K={args.k}, seed={args.seed})")
    inputs = [args.logits] + ([args.logits_b] if args.logits_b else []) + ([args.stats] if args.stats else [])
    _write_manifest(
        args.manifest or args.out + ".manifest.json",
        ["refine"],
        args.seed,
        inputs,
        config,
        [args.out],
    )
    return 0


# ---------------------------------------------------------------------------
# train


def cmd_train(args) -> int:
    dataset = load_train_dataset(args.data)
    if not dataset:
        raise CliError("empty training dataset")
    feature_dim = dataset[0][0].shape[0]
    c_verb = args.c_verb or (max(a.verb_id for _, s in dataset for a in s.actions) + 1)
    c_noun = args.c_noun or (max(a.noun_id for _, s in dataset for a in s.actions) + 1)
    dec = MultiHeadDecoder.init(feature_dim, args.z, c_verb, c_noun, seed=args.seed)
    cfg = TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        use_label_smoothing=(args.smooth == "on"),
        rng_seed=args.seed,
    )
    trained, history = train(dec, dataset, cfg)
    with open(args.out, "w") as handle:
        handle.write(trained.to_json() + "\n")
    _say(args, f"trained {len(dataset)} examples for {cfg.epochs} epochs; "
               f"loss {history[0]:.4f} -> {history[-1]:.4f} -> {args.out}")
    _write_manifest(
        args.manifest or args.out + ".manifest.json",
        ["train"],
        args.seed,
        [args.data],
        {"z": args.z, "smooth": args.smooth, "lr": args.lr,
         "epochs": args.epochs, "batch_size": args.batch_size},
        [args.out],
    )
    return 0


# ---------------------------------------------------------------------------
# eval


def cmd_eval(args) -> int:
    preds = load_predictions(args.preds)
    truths = load_corpus(args.truth)
    try:
        report = evaluate_corpus(
            preds,
            truths,
            allow_transposition=not args.no_transposition,
            keep_per_example=args.per_example,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    with open(args.out, "w") as handle:
        handle.write(report.to_json() + "\n")
    _say(args, f"Verb {report.ed_verb:.4f}  Noun {report.ed_noun:.4f}  Action {report.ed_action:.4f}"
               f"  ({report.n_examples} examples, {report.unmatched} unmatched)")
    _write_manifest(
        args.manifest or args.out + ".manifest.json",
        ["eval"],
        None,
        [args.preds, args.truth],
        {"no_transposition": args.no_transposition, "per_example": args.per_example},
        [args.out],
    )
    return 0


# ---------------------------------------------------------------------------
# synth


def _load_synth_config(path: str, seed_override) -> tuple[SynthConfig, dict]:
    with open(path) as handle:
        obj = json.load(handle)
    fields = {k: obj[k] for k in (
        "c_verb", "c_noun", "num_sequences", "seq_len",
        "transition_sharpness", "verb_noun_coupling", "logit_noise_sigma", "rng_seed",
    ) if k in obj}
    if seed_override is not None:
        fields["rng_seed"] = seed_override
    return SynthConfig(**fields), obj


def cmd_synth_gen(args) -> int:
    cfg, raw = _load_synth_config(args.config, args.seed)
    corpus, _ = gen_markov_corpus(cfg)
    dump_corpus(corpus, args.out_corpus)
    outputs = [args.out_corpus]
    if args.out_logits:
        tensors = [
            corrupt_to_logits_sized(
                seq, cfg.logit_noise_sigma, raw.get("logit_scale", 1.0),
                cfg.rng_seed, cfg.c_verb, cfg.c_noun, stream=cfg.num_sequences + i,
            )
            for i, seq in enumerate(corpus)
        ]
        dump_logits(tensors, args.out_logits)
        outputs.append(args.out_logits)
    if args.out_vocab_prefix:
        verb_vocab, noun_vocab = make_vocabularies(cfg)
        for vocab, suffix in ((verb_vocab, "verb"), (noun_vocab, "noun")):
            path = f"{args.out_vocab_prefix}.{suffix}.json"
            with open(path, "w") as handle:
                handle.write(vocab.to_json() + "\n")
            outputs.append(path)
    _say(args, f"{len(corpus)} sequences -> {args.out_corpus}")
    _write_manifest(
        args.manifest or args.out_corpus + ".manifest.json",
        ["synth", "gen"],
        cfg.rng_seed,
        [args.config],
        raw,
        outputs,
    )
    return 0


def cmd_synth_experiment(args) -> int:
    cfg, raw = _load_synth_config(args.config, args.seed)
    pred_cfg = PredictionConfig(
        num_steps=cfg.seq_len,
        num_patterns=raw.get("num_patterns", 5),
        rng_seed=cfg.rng_seed,
        mode=_indicator_mode(raw.get("mode", "as_written")),
    )
    report = run_refinement_experiment(cfg, pred_cfg, logit_scale=raw.get("logit_scale", 1.0))
    if not args.per_example:
        report.pop("per_example")
    with open(args.out, "w") as handle:
        json.dump(report, handle, indent=2, sort_keys=True)
        handle.write("\n")
    raw_ed = report["raw"]["ed_action"]
    ref_ed = report["refined"]["ed_action"]
    _say(args, f"action ED raw {raw_ed:.4f} vs refined {ref_ed:.4f} "
               f"(delta {raw_ed - ref_ed:+.4f}) over {report['n_eval']} episodes")
    _write_manifest(
        args.manifest or args.out + ".manifest.json",
        ["synth", "experiment"],
        cfg.rng_seed,
        [args.config],
        raw,
        [args.out],
    )
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqpost", description=__doc__)
    parser.add_argument("--version", action="version", version=f"seqpost {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
        p.add_argument("--manifest", help="run manifest path (default: <out>.manifest.json)")

    p = sub.add_parser("stats", help="build co-occurrence statistics from a label corpus")
    p.add_argument("--train", required=True, help="training corpus (JSONL)")
    p.add_argument("--val", help="optional validation corpus, concatenated with --train")
    p.add_argument("--verb-vocab", required=True)
    p.add_argument("--noun-vocab", required=True)
    p.add_argument("--add-k", type=float, default=1.0)
    p.add_argument("--prob-clamp-min", type=float, default=1e-6)
    p.add_argument("--prob-clamp-max", type=float, default=1.0 - 1e-6)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("ensemble", help="weighted logit combination of two models")
    p.add_argument("--logits-a", required=True)
    p.add_argument("--logits-b", required=True)
    p.add_argument("--alpha", type=float, default=0.6)
    p.add_argument("--beta", type=float, default=1.4)
    p.add_argument("--out", help="combined logits output (JSONL)")
    p.add_argument("--sweep", action="store_true",
                   help="grid-search weights over [0,2] step 0.1 against --truth")
    p.add_argument("--truth", help="truth corpus for --sweep scoring")
    common(p)
    p.set_defaults(func=cmd_ensemble)

    for name in ("refine", "pipeline"):
        p = sub.add_parser(name, help="optional ensemble -> softmax -> refine -> predictions")
        p.add_argument("--stats", help="statistics file (required when k >= 2)")
        p.add_argument("--logits", required=True)
        p.add_argument("--logits-b", help="second model's logits; enables the ensemble stage")
        p.add_argument("--alpha", type=float, default=0.6)
        p.add_argument("--beta", type=float, default=1.4)
        p.add_argument("--z", type=int, default=20, help="steps per pattern")
        p.add_argument("--k", type=int, default=5, help="patterns per example")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--mode", choices=["as_written", "standard_npmi"], default="as_written")
        p.add_argument("--out", required=True)
        common(p)
        p.set_defaults(func=cmd_refine)

    p = sub.add_parser("train", help="train the toy multi-head decoder")
    p.add_argument("--data", required=True, help="JSONL of {features, actions}")
    p.add_argument("--z", type=int, required=True)
    p.add_argument("--smooth", choices=["on", "off"], default="off")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--c-verb", type=int, help="verb class count (default: inferred)")
    p.add_argument("--c-noun", type=int, help="noun class count (default: inferred)")
    p.add_argument("--out", required=True, help="decoder checkpoint (JSON)")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="min-over-K normalized edit-distance report")
    p.add_argument("--preds", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--no-transposition", action="store_true",
                   help="plain Levenshtein instead of restricted Damerau-Levenshtein")
    p.add_argument("--per-example", action="store_true")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="synthetic corpora and the refinement experiment")
    synth_sub = p.add_subparsers(dest="synth_command", required=True)

    g = synth_sub.add_parser("gen", help="generate a corpus (and optional logits/vocabs)")
    g.add_argument("--config", required=True, help="SynthConfig JSON")
    g.add_argument("--seed", type=int, help="override rng_seed from the config")
    g.add_argument("--out-corpus", required=True)
    g.add_argument("--out-logits")
    g.add_argument("--out-vocab-prefix")
    common(g)
    g.set_defaults(func=cmd_synth_gen)

    e = synth_sub.add_parser("experiment", help="raw vs refined decoding experiment")
    e.add_argument("--config", required=True, help="SynthConfig JSON (+ num_patterns, mode)")
    e.add_argument("--seed", type=int, help="override rng_seed from the config")
    e.add_argument("--per-example", action="store_true")
    e.add_argument("--out", required=True)
    common(e)
    e.set_defaults(func=cmd_synth_experiment)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
