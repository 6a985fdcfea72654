"""Command line interface.

Subcommands: align (audio + transcript -> TextGrid), pron (show
pronunciation variants), train (build a model from a corpus), eval
(score alignments against references), validate (check that inputs are
alignable without touching audio).

Exit codes: 0 success, 1 processing failure (bad audio, text the rules
cannot handle, model mismatch), 2 usage or configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from . import decoder as dec
from . import features as feat
from . import g2p
from . import model as am
from . import textgrid as tg
from .config import Config, load_config
from .errors import ConfigError, PrakError
from .evaluation import EvalReport, score
from .phones import PhoneInventory
from .textnorm import ExceptionRuleSet, clean_text
from .training import ingest_manifest, run_training

MODEL_ENV = "PRAK_MODEL"


def _load_inventory(cfg: Config) -> PhoneInventory:
    if cfg.paths.inventory:
        return PhoneInventory.from_file(cfg.paths.inventory)
    return PhoneInventory.default()


def _load_rules(args, cfg: Config) -> ExceptionRuleSet:
    path = getattr(args, "rules", None) or cfg.paths.rules
    if path:
        return ExceptionRuleSet.from_file(path)
    return ExceptionRuleSet.empty()


def _model_path(args, cfg: Config) -> str:
    path = getattr(args, "model", None) or cfg.paths.model or os.environ.get(MODEL_ENV)
    if not path:
        raise ConfigError(
            f"no model given: use --model, [paths] model, or ${MODEL_ENV}")
    return path


def _align_one(audio_path: str, text: str, inventory: PhoneInventory,
               rules: ExceptionRuleSet, mf: am.ModelFile, cfg: Config,
               out_dir: Path) -> Path:
    audio = feat.load_audio(audio_path)
    mfcc = feat.compute_mfcc(audio, dither=cfg.mfcc.dither)
    if len(mfcc) == 0:
        raise PrakError(f"{audio_path}: audio is shorter than one analysis frame")
    spk = feat.speaker_vector(mfcc)
    windows = feat.window_matrix(mfcc, spk)

    sausage = g2p.pron_generate(clean_text(text), inventory, rules)
    graph = dec.build_graph(sausage, inventory, cfg.decoder.min_duration)
    post = am.forward(mf.params, windows)
    priors = dec.PhonePrior(counts=mf.priors) if mf.priors is not None \
        else dec.PhonePrior.uniform(len(inventory))
    alignment, _ = dec.viterbi(post, graph, priors, alpha=cfg.decoder.alpha)

    grid = tg.grid_from_alignment(alignment, inventory, xmax=audio.duration)
    out_path = out_dir / (Path(audio_path).stem + ".TextGrid")
    tg.write_textgrid(grid, out_path)
    return out_path


_WORKER: dict = {}


def _worker_init(model_path, cfg, inventory_path, rules_path):
    inventory = (PhoneInventory.from_file(inventory_path)
                 if inventory_path else PhoneInventory.default())
    rules = (ExceptionRuleSet.from_file(rules_path)
             if rules_path else ExceptionRuleSet.empty())
    _WORKER.update(
        inventory=inventory,
        rules=rules,
        mf=am.load_model(model_path, inventory),
        cfg=cfg,
    )


def _worker_align(job) -> str:
    audio_path, text, out_dir = job
    out = _align_one(audio_path, text, _WORKER["inventory"], _WORKER["rules"],
                     _WORKER["mf"], _WORKER["cfg"], Path(out_dir))
    return str(out)


def cmd_align(args) -> int:
    cfg = load_config(args.config)
    if args.alpha is not None:
        cfg.decoder.alpha = args.alpha
    if args.min_duration is not None:
        cfg.decoder.min_duration = args.min_duration
    if args.verbose:
        print(cfg.describe(), file=sys.stderr)
    inventory = _load_inventory(cfg)
    rules = _load_rules(args, cfg)
    model_path = _model_path(args, cfg)
    missing = [p for p in [args.text, *args.audio] if not Path(p).is_file()]
    if missing:
        raise ConfigError("input file not found: " + ", ".join(missing))
    if args.out_dir:
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)

    text = Path(args.text).read_bytes().decode("utf-8")
    jobs = [(audio, text, args.out_dir or str(Path(audio).parent))
            for audio in args.audio]

    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(
                max_workers=args.jobs, initializer=_worker_init,
                initargs=(model_path, cfg, cfg.paths.inventory or None,
                          (args.rules or cfg.paths.rules) or None)) as pool:
            for out in pool.map(_worker_align, jobs):
                print(out)
    else:
        mf = am.load_model(model_path, inventory)
        for audio, text, out in jobs:
            print(_align_one(audio, text, inventory, rules, mf, cfg, Path(out)))
    return 0


def cmd_pron(args) -> int:
    cfg = load_config(args.config)
    inventory = _load_inventory(cfg)
    rules = _load_rules(args, cfg)
    text = Path(args.text).read_bytes() if args.text else sys.stdin.buffer.read()
    sausage = g2p.pron_generate(clean_text(text), inventory, rules)
    if not sausage.words:
        return 0
    if args.dump:
        print(g2p.dump_sausage(sausage))
    else:
        print(g2p.render_pron(sausage, inventory, sampa=args.sampa))
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.verbose:
        print(cfg.describe(), file=sys.stderr)
    inventory = _load_inventory(cfg)
    rules = _load_rules(args, cfg)
    manifest = ingest_manifest(args.manifest, fmt=args.format)
    result = run_training(
        manifest, cfg, args.out, inventory, rules,
        resume=args.resume, log=lambda msg: print(msg, file=sys.stderr))
    print(result.model_path)
    return 0


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    inventory = _load_inventory(cfg)
    if len(args.ref) != len(args.hyp):
        raise ConfigError(
            f"got {len(args.ref)} references but {len(args.hyp)} hypotheses")
    report: EvalReport | None = None
    for ref_path, hyp_path in zip(args.ref, args.hyp):
        pair = score(
            _alignment_from_grid(ref_path, inventory),
            _alignment_from_grid(hyp_path, inventory),
            inventory,
            include_silence=args.include_silence,
        )
        report = pair if report is None else report.merged_with(pair)
    print(report.as_table())
    if args.json:
        Path(args.json).write_text(report.as_json() + "\n", encoding="utf-8")
    return 0


def _alignment_from_grid(path: str, inventory: PhoneInventory) -> dec.Alignment:
    """Phone tier of a TextGrid -> alignment; labels are SAMPA, blank = silence."""
    grid = tg.parse_textgrid(path)
    try:
        tier = grid.tier("phone")
    except PrakError:
        tier = grid.tiers[-1]
    entries = []
    for iv in tier.intervals:
        label = iv.text.strip()
        code = inventory.silence if label == "" else inventory.by_sampa(label).code
        entries.append(dec.AlignEntry(
            code=code,
            start_frame=int(round(iv.xmin / feat.FRAME_SHIFT_S)),
            end_frame=max(int(round(iv.xmax / feat.FRAME_SHIFT_S)),
                          int(round(iv.xmin / feat.FRAME_SHIFT_S)) + 1),
        ))
    return dec.Alignment(entries=tuple(entries),
                         num_frames=entries[-1].end_frame if entries else 0)


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    inventory = _load_inventory(cfg)
    rules = _load_rules(args, cfg)
    raw = Path(args.text).read_bytes()
    clean = clean_text(raw)
    sausage = g2p.pron_generate(clean, inventory, rules)
    graph = dec.build_graph(sausage, inventory, cfg.decoder.min_duration)
    print(f"{len(clean.words)} words, {len(sausage.canonical_path())} canonical phones, "
          f"{sausage.path_count()} pronunciation paths, "
          f"needs at least {graph.min_frames * feat.FRAME_SHIFT_S:.2f} s of audio")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prak",
        description="Czech forced phonetic alignment",
    )
    parser.add_argument("--version", action="version", version=f"prak {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="align audio with its transcript")
    p.add_argument("--audio", action="append", required=True,
                   help="WAV file; repeat for several recordings of the same text")
    p.add_argument("--text", required=True, help="transcript text file")
    p.add_argument("--model", help=f"acoustic model (default ${MODEL_ENV})")
    p.add_argument("--out-dir", default=None,
                   help="where TextGrids go (default: next to each audio file)")
    p.add_argument("--rules", help="exception rules file")
    p.add_argument("--config", help="INI config file")
    p.add_argument("--alpha", type=float, help="rare-phone boost exponent")
    p.add_argument("--min-dur", type=int, dest="min_duration",
                   help="minimum phone duration in frames")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="parallel worker processes (default: all cores)")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("pron", help="print pronunciation variants")
    p.add_argument("--text", help="text file (default: stdin)")
    p.add_argument("--rules", help="exception rules file")
    p.add_argument("--config", help="INI config file")
    p.add_argument("--sampa", action="store_true", help="SAMPA instead of IPA")
    p.add_argument("--dump", action="store_true",
                   help="machine-readable sausage dump (phone codes)")
    p.set_defaults(func=cmd_pron)

    p = sub.add_parser("train", help="train an acoustic model")
    p.add_argument("--manifest", required=True,
                   help="corpus: directory of wav+txt pairs, or a TSV file")
    p.add_argument("--format", choices=("dir-pairs", "tsv"), default="dir-pairs")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="INI config file")
    p.add_argument("--resume", action="store_true",
                   help="continue from the last checkpoint in --out")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score alignments against references")
    p.add_argument("--ref", action="append", required=True, help="reference TextGrid")
    p.add_argument("--hyp", action="append", required=True, help="hypothesis TextGrid")
    p.add_argument("--json", help="also write the report as JSON here")
    p.add_argument("--include-silence", action="store_true",
                   help="score silence intervals too")
    p.add_argument("--config", help="INI config file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("validate", help="check a transcript without audio")
    p.add_argument("--text", required=True, help="transcript text file")
    p.add_argument("--rules", help="exception rules file")
    p.add_argument("--config", help="INI config file")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"prak: {e}", file=sys.stderr)
        return 2
    except PrakError as e:
        print(f"prak: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"prak: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
