import os

import pytest

from butterfly_stft.config import RunConfig, load_config, parse_config
from butterfly_stft.errors import ConfigError
from butterfly_stft.model import ARMS

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def test_defaults():
    cfg = parse_config("")
    assert cfg.train.n == 256 and cfg.train.hop is None and cfg.train.d == 60
    assert cfg.loss.alpha == 0.3 and cfg.loss.lam == 0.1
    assert cfg.ssnr.frame_len == 256 and cfg.checkpoint == "model.bfly"
    assert cfg.train.trainable_flags == {k: True for k in cfg.train.trainable_flags}


def test_parse_values_and_comments():
    text = """
    # comment
    n = 64        # trailing comment
    hop = 16
    learning_rate = 5e-4
    train_fft_forward = false
    snr_db = 0, 5
    lambda = 0.2
    ssnr_ceil_db = 30
    eval_snr_db = 1.5, 2.5
    """
    cfg = parse_config(text)
    assert cfg.train.n == 64 and cfg.train.hop == 16
    assert cfg.train.learning_rate == 5e-4
    assert cfg.train.train_fft_forward is False
    assert cfg.train.snr_db == (0.0, 5.0)
    assert cfg.loss.lam == 0.2 and cfg.ssnr.ceil_db == 30.0
    assert cfg.eval_snr_db == (1.5, 2.5)


def test_paths_are_relative_to_config(tmp_path):
    path = tmp_path / "sub" / "run.cfg"
    path.parent.mkdir()
    path.write_text("manifest = ../data/m.tsv\ncheckpoint = out.bfly\n")
    cfg = load_config(path)
    assert cfg.manifest == str(tmp_path / "data" / "m.tsv")
    assert cfg.checkpoint == str(tmp_path / "sub" / "out.bfly")


@pytest.mark.parametrize("text, line", [
    ("n = 64\nbogus = 1\n", 2),
    ("\n\nn = sixty\n", 3),
    ("just words\n", 1),
    ("arm = nope\n", 1),
    ("train_fft_forward = maybe\n", 1),
])
def test_errors_carry_line_number(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_invalid_loss_value():
    with pytest.raises(ConfigError):
        parse_config("alpha = 2\n")


def test_arm_sets_flags():
    for arm, (window, fft) in ARMS.items():
        flags = parse_config(f"arm = {arm}\n").train.trainable_flags
        assert flags == {"window_analysis": window, "window_synthesis": window,
                         "fft_forward": fft, "fft_inverse": fft}


def test_committed_arm_configs():
    files = sorted(f for f in os.listdir(CONFIG_DIR) if f.endswith(".cfg"))
    assert len(files) == 4
    arms = set()
    for f in files:
        cfg = load_config(os.path.join(CONFIG_DIR, f))
        assert isinstance(cfg, RunConfig)
        arms.add(cfg.arm)
        assert cfg.train.max_steps == 2000 and cfg.train.n == 256 and cfg.train.hop == 128
    assert arms == set(ARMS)
