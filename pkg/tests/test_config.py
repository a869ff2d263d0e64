import pytest

from jetqcnn.config import load_config, parse_config
from jetqcnn.errors import ConfigurationError


def test_parses_typed_values(tmp_path):
    (tmp_path / "f.csv").write_text("split,label\n")
    text = """
    # experiment
    data.features = f.csv
    model.circuit = SU4      # trailing comment
    model.ring = true
    train.epochs = 5
    train.lr = 0.01
    """
    cfg = parse_config(text, tmp_path)
    assert cfg.get("train.epochs") == 5
    assert cfg.get("train.lr") == 0.01
    assert cfg.get("model.ring") is True
    assert cfg.get("data.features") == str(tmp_path / "f.csv")
    assert cfg.section("train") == {"epochs": 5, "lr": 0.01}


@pytest.mark.parametrize("text, message", [
    ("train.speed = 3", "unknown key"),
    ("train.epochs = many", "bad value"),
    ("just words", "expected"),
    ("data.jets = missing.jsonl", "does not exist"),
    ("model.ring = maybe", "bad value"),
])
def test_rejects_bad_lines(tmp_path, text, message):
    with pytest.raises(ConfigurationError, match=message):
        parse_config(text, tmp_path)


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "nope.cfg")


def test_paths_resolve_against_config_dir(tmp_path):
    sub = tmp_path / "exp"
    sub.mkdir()
    (sub / "jets.jsonl").write_text("")
    (sub / "run.cfg").write_text("data.jets = jets.jsonl\n")
    assert load_config(sub / "run.cfg").get("data.jets") == str(sub / "jets.jsonl")
