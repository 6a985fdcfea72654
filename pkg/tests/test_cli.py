import io
import json
from types import SimpleNamespace

import numpy as np
import pytest
from scipy.io import wavfile

from prak import __version__
from prak.cli import main
from prak.decoder import AlignEntry, Alignment
from prak.model import AmConfig, init_params, save_model
from prak.phones import PhoneInventory
from prak.textgrid import grid_from_alignment, parse_textgrid, write_textgrid


@pytest.fixture(scope="module")
def default_model(tmp_path_factory):
    """An untrained model in the default shape; alignment still works, the
    boundaries are just arbitrary."""
    path = tmp_path_factory.mktemp("model") / "untrained.prakam"
    cfg = AmConfig()
    save_model(path, init_params(cfg), cfg, PhoneInventory.default())
    return str(path)


def write_tone_wav(path, seconds=0.6):
    t = np.arange(int(16000 * seconds)) / 16000
    data = (0.3 * np.sin(2 * np.pi * 330 * t) * 32767).astype(np.int16)
    wavfile.write(path, 16000, data)
    return path


# ---------------------------------------------------------------------------
# pron


def test_pron_from_file(tmp_path, capsys):
    text = tmp_path / "t.txt"
    text.write_text("oběd", encoding="utf-8")
    assert main(["pron", "--text", str(text)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "[|]"
    assert out[1] == "objɛt / ʔobjɛt"
    assert out[2] == "[|]"


def test_pron_from_stdin(monkeypatch, capsys):
    monkeypatch.setattr("sys.stdin", SimpleNamespace(buffer=io.BytesIO("máma".encode())))
    assert main(["pron"]) == 0
    assert "maːma" in capsys.readouterr().out


def test_pron_sampa_and_dump(tmp_path, capsys):
    text = tmp_path / "t.txt"
    text.write_text("dítě", encoding="utf-8")
    assert main(["pron", "--text", str(text), "--sampa"]) == 0
    assert "J\\i:cE" in capsys.readouterr().out
    assert main(["pron", "--text", str(text), "--dump"]) == 0
    dump = capsys.readouterr().out
    assert dump.splitlines() == ["∅\t_", "ďíťe", "∅\t_"]


def test_pron_empty_input_is_silent(tmp_path, capsys):
    text = tmp_path / "t.txt"
    text.write_text("  \n", encoding="utf-8")
    assert main(["pron", "--text", str(text)]) == 0
    assert capsys.readouterr().out == ""


def test_pron_rejects_digits(tmp_path, capsys):
    text = tmp_path / "t.txt"
    text.write_text("mám 3 děti", encoding="utf-8")
    assert main(["pron", "--text", str(text)]) == 1
    assert "words" in capsys.readouterr().err


def test_pron_applies_rules_file(tmp_path, capsys):
    text = tmp_path / "t.txt"
    text.write_text("washingtonu", encoding="utf-8")
    rules = tmp_path / "rules.txt"
    rules.write_text("washington vošingtn\n", encoding="utf-8")
    assert main(["pron", "--text", str(text), "--rules", str(rules)]) == 0
    assert "vošiŋktnu" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# align


def test_align_writes_textgrid_next_to_audio(tmp_path, capsys, default_model):
    wav = write_tone_wav(tmp_path / "utt.wav")
    text = tmp_path / "utt.txt"
    text.write_text("ahoj", encoding="utf-8")
    assert main(["align", "--audio", str(wav), "--text", str(text),
                 "--model", default_model, "--jobs", "1"]) == 0
    out_path = tmp_path / "utt.TextGrid"
    assert capsys.readouterr().out.strip() == str(out_path)
    grid = parse_textgrid(out_path)
    assert [t.name for t in grid.tiers] == ["word", "phone"]
    assert grid.xmax == pytest.approx(0.6)
    labels = [iv.text for iv in grid.tier("word").intervals]
    assert "ahoj" in labels


def test_align_out_dir_override(tmp_path, capsys, default_model):
    wav = write_tone_wav(tmp_path / "utt.wav")
    text = tmp_path / "utt.txt"
    text.write_text("ano", encoding="utf-8")
    out_dir = tmp_path / "grids"
    assert main(["align", "--audio", str(wav), "--text", str(text),
                 "--model", default_model, "--out-dir", str(out_dir),
                 "--jobs", "1"]) == 0
    assert (out_dir / "utt.TextGrid").is_file()
    capsys.readouterr()


def test_align_two_takes_of_one_text(tmp_path, capsys, default_model):
    wav1 = write_tone_wav(tmp_path / "take1.wav")
    wav2 = write_tone_wav(tmp_path / "take2.wav", seconds=0.8)
    text = tmp_path / "prompt.txt"
    text.write_text("ahoj světe", encoding="utf-8")
    assert main(["align", "--audio", str(wav1), "--audio", str(wav2),
                 "--text", str(text), "--model", default_model,
                 "--jobs", "1"]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert printed == [str(tmp_path / "take1.TextGrid"),
                       str(tmp_path / "take2.TextGrid")]
    for name in ("take1.TextGrid", "take2.TextGrid"):
        assert (tmp_path / name).is_file()


def test_align_parallel_jobs(tmp_path, capsys, default_model):
    wavs = [write_tone_wav(tmp_path / f"p{i}.wav") for i in range(2)]
    text = tmp_path / "t.txt"
    text.write_text("ano", encoding="utf-8")
    assert main(["align", "--audio", str(wavs[0]), "--audio", str(wavs[1]),
                 "--text", str(text), "--model", default_model,
                 "--jobs", "2"]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert printed == [str(tmp_path / "p0.TextGrid"), str(tmp_path / "p1.TextGrid")]


def test_align_model_from_environment(tmp_path, capsys, monkeypatch, default_model):
    wav = write_tone_wav(tmp_path / "utt.wav")
    text = tmp_path / "utt.txt"
    text.write_text("ano", encoding="utf-8")
    monkeypatch.setenv("PRAK_MODEL", default_model)
    assert main(["align", "--audio", str(wav), "--text", str(text),
                 "--jobs", "1"]) == 0
    capsys.readouterr()


def test_align_without_model_is_usage_error(tmp_path, capsys):
    wav = write_tone_wav(tmp_path / "utt.wav")
    text = tmp_path / "utt.txt"
    text.write_text("ano", encoding="utf-8")
    assert main(["align", "--audio", str(wav), "--text", str(text),
                 "--jobs", "1"]) == 2
    assert "no model given" in capsys.readouterr().err


def test_align_missing_input_is_usage_error(tmp_path, capsys, default_model):
    text = tmp_path / "utt.txt"
    text.write_text("ano", encoding="utf-8")
    assert main(["align", "--audio", str(tmp_path / "none.wav"),
                 "--text", str(text), "--model", default_model,
                 "--jobs", "1"]) == 2
    assert "none.wav" in capsys.readouterr().err


def test_align_rejects_bad_transcript(tmp_path, capsys, default_model):
    wav = write_tone_wav(tmp_path / "utt.wav")
    text = tmp_path / "utt.txt"
    text.write_text("v roce 1918", encoding="utf-8")
    assert main(["align", "--audio", str(wav), "--text", str(text),
                 "--model", default_model, "--jobs", "1"]) == 1
    capsys.readouterr()


# ---------------------------------------------------------------------------
# eval


def sample_grids(tmp_path, inv):
    ali = Alignment(entries=(AlignEntry("_", 0, 20), AlignEntry("a", 20, 50),
                             AlignEntry("_", 50, 98)), num_frames=98)
    ref = tmp_path / "ref.TextGrid"
    hyp = tmp_path / "hyp.TextGrid"
    write_textgrid(grid_from_alignment(ali, inv), ref)
    write_textgrid(grid_from_alignment(ali, inv), hyp)
    return ref, hyp


def test_eval_identical_grids_score_zero(tmp_path, capsys, inv):
    ref, hyp = sample_grids(tmp_path, inv)
    assert main(["eval", "--ref", str(ref), "--hyp", str(hyp)]) == 0
    out = capsys.readouterr().out
    assert "phone mismatch %" in out
    assert "combined error %" in out
    assert out.count("0.00") == 4


def test_eval_json_report(tmp_path, capsys, inv):
    ref, hyp = sample_grids(tmp_path, inv)
    json_path = tmp_path / "report.json"
    assert main(["eval", "--ref", str(ref), "--hyp", str(hyp),
                 "--json", str(json_path)]) == 0
    capsys.readouterr()
    blob = json.loads(json_path.read_text(encoding="utf-8"))
    assert blob["ref_phones"] == 1
    assert blob["combined_pct"] == 0.0


def test_eval_mismatched_pair_counts(tmp_path, capsys, inv):
    ref, hyp = sample_grids(tmp_path, inv)
    assert main(["eval", "--ref", str(ref), "--hyp", str(hyp),
                 "--hyp", str(hyp)]) == 2
    assert "1 references but 2 hypotheses" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# train


def test_train_and_resume(tmp_path, capsys, mini_corpus):
    cfg = tmp_path / "train.ini"
    cfg.write_text(
        "[trainer]\n"
        "epochs = 2\n"
        "change_threshold = 0\n"
        "[paths]\n"
        f"inventory = {mini_corpus.inventory_path}\n",
        encoding="utf-8")
    out_dir = tmp_path / "run"
    assert main(["train", "--manifest", str(mini_corpus.root),
                 "--out", str(out_dir), "--config", str(cfg)]) == 0
    captured = capsys.readouterr()
    assert captured.out.strip() == str(out_dir / "final.model")
    assert (out_dir / "epoch_002.model").is_file()
    assert "epoch 2:" in captured.err

    cfg.write_text(
        "[trainer]\n"
        "epochs = 3\n"
        "change_threshold = 0\n"
        "[paths]\n"
        f"inventory = {mini_corpus.inventory_path}\n",
        encoding="utf-8")
    assert main(["train", "--manifest", str(mini_corpus.root),
                 "--out", str(out_dir), "--config", str(cfg), "--resume"]) == 0
    captured = capsys.readouterr()
    assert "resuming after epoch 2" in captured.err
    assert (out_dir / "epoch_003.model").is_file()


def test_train_missing_manifest_is_usage_error(tmp_path, capsys):
    assert main(["train", "--manifest", str(tmp_path / "nope"),
                 "--out", str(tmp_path / "out")]) == 2
    assert "not a directory" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# validate and parser behavior


def test_validate_reports_counts(tmp_path, capsys):
    text = tmp_path / "t.txt"
    text.write_text("oběd ano", encoding="utf-8")
    assert main(["validate", "--text", str(text)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("2 words, ")
    assert "pronunciation paths" in out
    assert "needs at least" in out


def test_validate_rejects_digits(tmp_path, capsys):
    text = tmp_path / "t.txt"
    text.write_text("rok 1989", encoding="utf-8")
    assert main(["validate", "--text", str(text)]) == 1
    capsys.readouterr()


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip() == f"prak {__version__}"


def test_missing_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
    capsys.readouterr()


def test_bad_config_is_usage_error(tmp_path, capsys):
    text = tmp_path / "t.txt"
    text.write_text("ano", encoding="utf-8")
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[nonsense]\nkey = 1\n", encoding="utf-8")
    assert main(["validate", "--text", str(text), "--config", str(cfg)]) == 2
    assert "unknown config section" in capsys.readouterr().err
