import struct
import subprocess
import sys

import pytest

from textensemble import archive
from textensemble.cli import main
from textensemble.ensemble import KINDS, TrainConfig, train
from textensemble.errors import ArchiveError
from textensemble.text_pipeline import write_corpus

SMALL = TrainConfig(n_trees=10, iterations=40, units=16)
PROBES = ["come ricarico il mio cellulare", "Come attivo offerta", "zzz", "router wifi guasto internet"]


@pytest.fixture(scope="module")
def corpus_file(tmp_path_factory, small_synth):
    path = tmp_path_factory.mktemp("data") / "corpus.tsv"
    write_corpus(small_synth, path)
    return path


@pytest.mark.parametrize("kind", KINDS + ("ensemble",))
def test_round_trip_is_bit_identical(kind, small_synth, tmp_path):
    model = train(kind, small_synth, SMALL)
    path = tmp_path / "m.bin"
    archive.save(model, path)
    loaded = archive.load(path)
    assert loaded.kind == kind and loaded.config == model.config
    assert loaded.vocabulary == model.vocabulary and loaded.label_set == model.label_set
    for text in PROBES + [p.text for p in small_synth[::41]]:
        assert model.predict_proba(text).tobytes() == loaded.predict_proba(text).tobytes()
    assert archive.dumps(loaded) == path.read_bytes()


def _nb_blob(small_synth):
    return archive.dumps(train("nb", small_synth, SMALL))


def test_version_mismatch_rejected(small_synth):
    blob = bytearray(_nb_blob(small_synth))
    struct.pack_into("<I", blob, 8, 99)
    with pytest.raises(ArchiveError, match="version 99"):
        archive.loads(bytes(blob))


def test_corruption_rejected(small_synth):
    blob = _nb_blob(small_synth)
    flipped = bytearray(blob)
    flipped[-3] ^= 0xFF
    for bad in (b"", b"NOTANARC" + blob[8:], blob[:40], bytes(flipped)):
        with pytest.raises(ArchiveError):
            archive.loads(bad)


def test_member_kind_mismatch_rejected(small_synth):
    blob = _nb_blob(small_synth)
    head_len = struct.unpack_from("<Q", blob, 12)[0]
    head = blob[20:20 + head_len].replace(b'"model_kind":"nb"', b'"model_kind":"rf"')
    with pytest.raises(ArchiveError):
        archive.loads(blob[:12] + struct.pack("<Q", len(head)) + head + blob[20 + head_len:])


def run(capsys, *argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        import io
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def ensemble_archive(tmp_path_factory, synth_corpus):
    d = tmp_path_factory.mktemp("cli")
    corpus = d / "synth.tsv"
    write_corpus(synth_corpus, corpus)
    out = d / "m.bin"
    assert main(["train", "--algo", "ensemble", "--input", str(corpus), "--out", str(out),
                 "--seed", "42", "--partitions", "8", "--trees", "30"]) == 0
    return out


def test_cli_predict_ric(ensemble_archive, capsys):
    code, out, _ = run(capsys, "predict", "--model", ensemble_archive, "--text", "come ricarico il mio cellulare")
    assert code == 0
    label, cells = out.rstrip("\n").split("\t")
    assert label == "RIC"
    assert len(cells.split()) == 10 and all(c.split("=")[1].count(".") == 1 for c in cells.split())


def test_cli_predict_stdin(ensemble_archive, capsys, monkeypatch):
    code, out, _ = run(capsys, "predict", "--model", ensemble_archive, stdin="", monkeypatch=monkeypatch)
    assert (code, out) == (0, "")
    code, out, _ = run(capsys, "predict", "--model", ensemble_archive,
                       stdin="ricarica credito\nofferta promozione\n", monkeypatch=monkeypatch)
    assert [line.split("\t")[0] for line in out.splitlines()] == ["RIC", "OFF"]


def test_cli_table(ensemble_archive, capsys):
    code, out, _ = run(capsys, "table", "--model", ensemble_archive, "--text", "Come attivo offerta")
    lines = out.splitlines()
    assert code == 0 and lines[0] == 'Accuracy "Come attivo offerta"'
    assert [line.split()[0] for line in lines[2:]] == ["NaiveBayes", "RandomForest", "DNN", "SVM", "KNN", "ENSEMBLE"]
    code, out, _ = run(capsys, "table", "--model", ensemble_archive, "--format", "csv",
                       "--text", "a", "--text", "b")
    assert out.startswith("phrase,model,ATT,CONFIG")
    assert out.count("\r\n") == 13


def test_cli_table_needs_ensemble(corpus_file, tmp_path, capsys):
    out = tmp_path / "nb.bin"
    assert main(["train", "--algo", "nb", "--input", str(corpus_file), "--out", str(out)]) == 0
    code, _, err = run(capsys, "table", "--model", out, "--text", "x")
    assert code == 1 and "ensemble" in err


def test_cli_missing_file(tmp_path, capsys):
    missing = tmp_path / "nope.tsv"
    code, out, err = run(capsys, "train", "--algo", "nb", "--input", missing, "--out", tmp_path / "m.bin")
    assert code == 1 and out == "" and str(missing) in err
    code, _, err = run(capsys, "predict", "--model", tmp_path / "nope.bin", "--text", "x")
    assert code == 1


def test_cli_corrupted_archive(tmp_path, capsys):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"garbage" * 10)
    code, _, err = run(capsys, "predict", "--model", bad, "--text", "x")
    assert code == 1 and "ArchiveError" in err


def test_cli_evaluate(corpus_file, capsys):
    argv = ("evaluate", "--algo", "nb", "--input", corpus_file, "--folds", "5", "--seed", "3")
    code, first, _ = run(capsys, *argv)
    assert code == 0
    assert "mean accuracy: " in first and first.count("fold ") == 5
    mean_line = next(line for line in first.splitlines() if line.startswith("mean accuracy"))
    assert len(mean_line.split(": ")[1].split(".")[1]) == 4
    assert run(capsys, *argv)[1] == first
    code, _, err = run(capsys, "evaluate", "--algo", "nb", "--input", corpus_file, "--folds", "21")
    assert code == 1 and "InsufficientClassCount" in err


def test_cli_generate(tmp_path, capsys):
    a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    assert main(["generate", "--out", str(a), "--phrases-per-class", "5"]) == 0
    assert main(["generate", "--out", str(b), "--phrases-per-class", "5"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text(encoding="utf-8").splitlines()) == 50
    code, out, _ = run(capsys, "generate", "--phrases-per-class", "5")
    assert out == a.read_text(encoding="utf-8")
    code, _, err = run(capsys, "generate", "--noise-rate", "1.5")
    assert code == 1 and "InvalidSpec" in err


def test_cli_train_is_deterministic(corpus_file, tmp_path):
    outs = []
    for name in ("x.bin", "y.bin"):
        path = tmp_path / name
        assert main(["train", "--algo", "ensemble", "--input", str(corpus_file), "--out", str(path),
                     "--trees", "8", "--iters", "30", "--units", "8", "--threads", "3"]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_console_script_entry(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "textensemble.cli", "generate", "--phrases-per-class", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and len(proc.stdout.splitlines()) == 10
