"""Self-supervised acoustic model training.

No hand-labeled segmentation exists, so training pulls itself up by the
bootstraps: every utterance starts from a crude flat alignment (30 ms per
phone in the middle of the recording, silence around), the network trains
on those labels, realigns the corpus with itself, and repeats.  Each epoch
trains on the previous epoch's alignments, shuffling all frames of the
whole corpus globally so batches mix speakers and phones.  Phone priors are
recounted every epoch and used by the Viterbi pass to keep rare phones
alive.  The loop stops early once realignment moves almost no frames.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import decoder as dec
from . import features as feat
from . import g2p
from . import model as am
from .config import Config
from .errors import ManifestError, PrakError
from .phones import PhoneInventory
from .textnorm import ExceptionRuleSet, clean_text


@dataclass
class ManifestEntry:
    audio: Path
    text: str


@dataclass
class CorpusManifest:
    entries: list[ManifestEntry]
    missing: list[str] = field(default_factory=list)


def ingest_manifest(path: str | Path, fmt: str = "dir-pairs") -> CorpusManifest:
    """Collect (audio, transcript) pairs.

    "dir-pairs": a directory of .wav files with .txt files of the same stem
    next to them.  "tsv": a file of audio<TAB>transcript-text lines, paths
    relative to the file's directory.  Pairs with a missing half are
    reported, not silently dropped.
    """
    path = Path(path)
    entries: list[ManifestEntry] = []
    missing: list[str] = []
    if fmt == "dir-pairs":
        if not path.is_dir():
            raise ManifestError(f"{path} is not a directory")
        wavs = sorted(path.glob("*.wav"))
        if not wavs:
            raise ManifestError(f"no .wav files in {path}")
        for wav in wavs:
            txt = wav.with_suffix(".txt")
            if not txt.is_file():
                missing.append(f"{wav.name}: no transcript {txt.name}")
                continue
            entries.append(ManifestEntry(audio=wav, text=txt.read_text(encoding="utf-8")))
    elif fmt == "tsv":
        if not path.is_file():
            raise ManifestError(f"manifest file not found: {path}")
        base = path.parent
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            if "\t" not in line:
                raise ManifestError(f"{path}:{lineno}: expected audio<TAB>text")
            audio, text = line.split("\t", 1)
            wav = base / audio
            if not wav.is_file():
                missing.append(f"{path}:{lineno}: audio not found: {audio}")
                continue
            entries.append(ManifestEntry(audio=wav, text=text))
    else:
        raise ManifestError(f"unknown manifest format {fmt!r}")
    if not entries:
        raise ManifestError(f"manifest {path} yields no usable utterances")
    return CorpusManifest(entries=entries, missing=missing)


@dataclass
class Utterance:
    name: str
    windows: np.ndarray       # (T, input_dim) float32
    graph: dec.AlignGraph
    canonical: str
    num_frames: int


def prepare_utterances(manifest: CorpusManifest, inventory: PhoneInventory,
                       rules: ExceptionRuleSet, cfg: Config,
                       log=print) -> list[Utterance]:
    """Features, pronunciation graphs and sanity checks for the corpus.

    Utterances whose audio is too short for their text are skipped with a
    warning; an empty result is an error.
    """
    utts: list[Utterance] = []
    for entry in manifest.entries:
        audio = feat.load_audio(entry.audio)
        mfcc = feat.compute_mfcc(audio, dither=cfg.mfcc.dither)
        if len(mfcc) == 0:
            log(f"skipping {entry.audio.name}: audio shorter than one frame")
            continue
        spk = feat.speaker_vector(mfcc)
        windows = feat.window_matrix(mfcc, spk)
        sausage = g2p.pron_generate(clean_text(entry.text), inventory, rules)
        canonical = sausage.canonical_path()
        if not canonical:
            log(f"skipping {entry.audio.name}: empty transcript")
            continue
        graph = dec.build_graph(sausage, inventory, cfg.decoder.min_duration)
        if len(canonical) > len(mfcc) or graph.min_frames > len(mfcc):
            log(f"skipping {entry.audio.name}: transcript too long for "
                f"{len(mfcc)} frames of audio")
            continue
        utts.append(Utterance(
            name=entry.audio.stem,
            windows=windows,
            graph=graph,
            canonical=canonical,
            num_frames=len(mfcc),
        ))
    if not utts:
        raise PrakError("no trainable utterances left after preparation")
    return utts


def recount_priors(label_arrays: list[np.ndarray], num_phones: int) -> dec.PhonePrior:
    """Frame counts per phone over the whole corpus."""
    counts = np.zeros(num_phones, dtype=np.float64)
    for labels in label_arrays:
        counts += np.bincount(labels, minlength=num_phones)
    return dec.PhonePrior(counts=counts)


@dataclass
class EpochStats:
    epoch: int
    loss: float
    change_fraction: float
    seconds: float


@dataclass
class TrainResult:
    model_path: Path
    log_path: Path
    history: list[EpochStats]
    alignments: list[dec.Alignment]


def _dump_alignments(path: Path, utts: list[Utterance], alignments) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for utt, ali in zip(utts, alignments):
            f.write(json.dumps({
                "utterance": utt.name,
                "entries": [[e.code, e.start_frame, e.end_frame] for e in ali.entries],
            }, ensure_ascii=False) + "\n")


def _load_alignments(path: Path, utts: list[Utterance]) -> list[dec.Alignment]:
    by_name = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        rec = json.loads(line)
        entries = tuple(dec.AlignEntry(code, start, end)
                        for code, start, end in rec["entries"])
        by_name[rec["utterance"]] = entries
    out = []
    for u in utts:
        if u.name not in by_name:
            raise PrakError(f"checkpoint has no alignment for utterance {u.name!r}")
        out.append(dec.Alignment(entries=by_name[u.name], num_frames=u.num_frames))
    return out


def _last_checkpoint(out: Path) -> tuple[int, Path] | None:
    best = None
    for p in out.glob("epoch_*.model"):
        try:
            epoch = int(p.stem.split("_")[1])
        except (IndexError, ValueError):
            continue
        if best is None or epoch > best[0]:
            best = (epoch, p)
    return best


def run_training(manifest: CorpusManifest, cfg: Config, out_dir: str | Path,
                 inventory: PhoneInventory, rules: ExceptionRuleSet | None = None,
                 resume: bool = False, log=print) -> TrainResult:
    """The alternating train/realign loop.  Writes per-epoch checkpoints
    (model + alignments + a JSON log line) into out_dir and returns the
    final model path.

    With resume=True the latest epoch checkpoint in out_dir is picked up
    and training continues after it (with a fresh optimizer state, which
    perturbs the very next updates but converges to the same place).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rules = rules if rules is not None else ExceptionRuleSet.empty()
    for line in manifest.missing:
        log(f"manifest: {line}")

    utts = prepare_utterances(manifest, inventory, rules, cfg, log=log)
    log(f"training on {len(utts)} utterances, "
        f"{sum(u.num_frames for u in utts)} frames")

    am_cfg = am.AmConfig(
        input_dim=feat.INPUT_DIM,
        hidden_dims=tuple(cfg.am.hidden_dims),
        output_dim=len(inventory),
        seed=cfg.am.seed,
    )
    start_epoch = 1
    checkpoint = _last_checkpoint(out) if resume else None
    if checkpoint is not None:
        last_epoch, model_path = checkpoint
        loaded = am.load_model(model_path, inventory)
        params = loaded.params
        am_cfg = loaded.cfg
        alignments = _load_alignments(
            out / f"epoch_{last_epoch:03d}.align.jsonl", utts)
        start_epoch = last_epoch + 1
        log(f"resuming after epoch {last_epoch} from {model_path.name}")
    else:
        params = am.init_params(am_cfg)
        alignments = [dec.bootstrap_alignment(u.canonical, u.num_frames, inventory)
                      for u in utts]
    labels = [a.frame_labels(inventory) for a in alignments]
    opt = am.AdamState.for_params(params)
    rng = np.random.default_rng(cfg.trainer.seed)

    log_path = out / "train_log.jsonl"
    history: list[EpochStats] = []
    with open(log_path, "a" if checkpoint else "w", encoding="utf-8") as log_file:
        for epoch in range(start_epoch, cfg.trainer.epochs + 1):
            t0 = time.monotonic()
            x_all = np.concatenate([u.windows for u in utts])
            y_all = np.concatenate(labels)

            losses = []
            for _ in range(cfg.trainer.passes_per_epoch):
                order = rng.permutation(len(y_all))
                for lo in range(0, len(order), cfg.trainer.batch_size):
                    sel = order[lo:lo + cfg.trainer.batch_size]
                    losses.append(am.train_step(
                        params, x_all[sel], y_all[sel], opt,
                        lr=cfg.trainer.learning_rate))
            mean_loss = float(np.mean(losses))

            priors = recount_priors(labels, len(inventory))
            new_alignments = []
            new_labels = []
            for u in utts:
                post = am.forward(params, u.windows)
                ali, _ = dec.viterbi(post, u.graph, priors, alpha=cfg.decoder.alpha)
                new_alignments.append(ali)
                new_labels.append(ali.frame_labels(inventory))

            moved = sum(int((a != b).sum()) for a, b in zip(labels, new_labels))
            total = sum(len(a) for a in labels)
            change = moved / total
            alignments, labels = new_alignments, new_labels

            model_path = out / f"epoch_{epoch:03d}.model"
            am.save_model(model_path, params, am_cfg, inventory,
                          priors=priors.counts)
            _dump_alignments(out / f"epoch_{epoch:03d}.align.jsonl", utts, alignments)
            stats = EpochStats(
                epoch=epoch,
                loss=mean_loss,
                change_fraction=change,
                seconds=time.monotonic() - t0,
            )
            history.append(stats)
            log_file.write(json.dumps({
                "epoch": epoch,
                "loss": mean_loss,
                "change_fraction": change,
                "seconds": stats.seconds,
                "phone_counts": priors.counts.astype(int).tolist(),
            }) + "\n")
            log_file.flush()
            log(f"epoch {epoch}: loss {mean_loss:.4f}, "
                f"{100 * change:.2f}% of frames moved, {stats.seconds:.1f} s")
            if change < cfg.trainer.change_threshold:
                log("alignment settled, stopping early")
                break

    final_priors = recount_priors(labels, len(inventory))
    final_path = out / "final.model"
    am.save_model(final_path, params, am_cfg, inventory, priors=final_priors.counts)
    _dump_alignments(out / "final.align.jsonl", utts, alignments)
    return TrainResult(
        model_path=final_path,
        log_path=log_path,
        history=history,
        alignments=alignments,
    )
