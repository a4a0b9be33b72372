import json
import subprocess
import sys

import numpy as np
import pytest

from jengan.cli import main
from jengan.metrics import MelConfig
from jengan.signal_io import write_wav
from jengan.sinc_filters import Signal
from jengan.vocoder import GeneratorConfig, TrainConfig


def small_config_dict() -> dict:
    return TrainConfig(
        segment_length=1024,
        steps=3,
        mel=MelConfig(sample_rate=22050.0, fft_size=256, hop=64, win_length=128,
                      n_mels=32, fmax=11025.0, center=True),
        generator=GeneratorConfig(n_mels=32, base_channels=8,
                                  upsample_rates=(4, 4, 2, 2)),
    ).to_dict()


@pytest.fixture
def small_config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(small_config_dict()))
    return str(path)


def write_tone(path, freq=441.0, n=8192, amp=0.4):
    t = np.arange(n) / 22050.0
    write_wav(path, Signal(amp * np.sin(2 * np.pi * freq * t), sample_rate=22050.0))


class TestDesignFilter:
    def test_zero_delta_taps(self, tmp_path):
        out = tmp_path / "o"
        assert main(["design-filter", "--delta", "0", "--out", str(out),
                     "--no-figures"]) == 0
        lines = (out / "taps.csv").read_text().strip().split("\n")
        taps = [float(line.split(",")[1]) for line in lines[1:]]
        expected = [0.0] * 12 + [1.0] + [0.0] * 12
        assert taps == expected

    def test_half_delta_matches_fixture(self, tmp_path):
        out = tmp_path / "o"
        assert main(["design-filter", "--delta", "0.5", "--out", str(out)]) == 0
        lines = (out / "taps.csv").read_text().strip().split("\n")
        taps = {int(line.split(",")[0]): float(line.split(",")[1])
                for line in lines[1:]}
        assert taps[0] == pytest.approx(0.6366197723675814, abs=1e-12)
        assert taps[-1] == pytest.approx(0.6366197723675814, abs=1e-12)
        assert (out / "filter.png").exists()
        assert (out / "response.csv").exists()

    def test_invalid_delta_exit_code(self, tmp_path):
        assert main(["design-filter", "--delta", "20", "--out",
                     str(tmp_path / "x")]) == 2


class TestWrapCheck:
    def test_passes_cleanly(self, small_config_path, capsys):
        code = main(["wrap-check", "--config", small_config_path, "--inputs", "2"])
        out = capsys.readouterr().out
        assert code == 0
        assert "PASS  overall" in out
        assert "FAIL" not in out

    def test_injected_fault_fails(self, small_config_path, capsys):
        code = main(["wrap-check", "--config", small_config_path, "--inputs", "1",
                     "--inject-fault"])
        assert code == 1
        assert "FAIL" in capsys.readouterr().out

    def test_json_report(self, small_config_path, tmp_path):
        out = tmp_path / "rep"
        main(["wrap-check", "--config", small_config_path, "--inputs", "1",
              "--out", str(out)])
        rows = json.loads((out / "wrap_check.json").read_text())
        assert all(r["pass"] for r in rows)


class TestTrain:
    def test_writes_artifacts(self, small_config_path, tmp_path):
        out = tmp_path / "run"
        assert main(["train", "--config", small_config_path, "--steps", "2",
                     "--out", str(out)]) == 0
        assert (out / "losses.csv").exists()
        assert (out / "config.json").exists()
        assert (out / "checkpoints" / "final.jgn").exists()
        assert (out / "loss_curves.png").exists()

    def test_zero_steps_initial_checkpoint_only(self, small_config_path, tmp_path):
        out = tmp_path / "run0"
        assert main(["train", "--config", small_config_path, "--steps", "0",
                     "--out", str(out)]) == 0
        assert (out / "checkpoints" / "initial.jgn").exists()
        assert not (out / "checkpoints" / "final.jgn").exists()

    def test_same_seed_byte_identical_checkpoints(self, small_config_path, tmp_path):
        for name in ("a", "b"):
            main(["train", "--config", small_config_path, "--steps", "2",
                  "--seed", "9", "--out", str(tmp_path / name), "--no-figures"])
        a = (tmp_path / "a" / "checkpoints" / "final.jgn").read_bytes()
        b = (tmp_path / "b" / "checkpoints" / "final.jgn").read_bytes()
        assert a == b

    def test_force_zero_delta_reproduces_off_csv(self, small_config_path, tmp_path):
        main(["train", "--config", small_config_path, "--steps", "20",
              "--jengan", "off", "--out", str(tmp_path / "off"), "--no-figures"])
        main(["train", "--config", small_config_path, "--steps", "20",
              "--jengan", "both", "--force-zero-delta",
              "--out", str(tmp_path / "fz"), "--no-figures"])
        off_csv = (tmp_path / "off" / "losses.csv").read_bytes()
        fz_csv = (tmp_path / "fz" / "losses.csv").read_bytes()
        assert off_csv == fz_csv

    def test_flags_override_config(self, small_config_path, tmp_path):
        out = tmp_path / "run"
        main(["train", "--config", small_config_path, "--steps", "1",
              "--jengan", "gen", "--sampling", "normal", "--async",
              "--out", str(out), "--no-figures"])
        cfg = json.loads((out / "config.json").read_text())
        assert cfg["jengan"]["mode"] == "gen"
        assert cfg["jengan"]["sampling"] == "normal"
        assert cfg["jengan"]["sync"] is False


class TestEval:
    def test_melmae_identical_pair_is_zero(self, tmp_path, capsys):
        wav = tmp_path / "t.wav"
        write_tone(wav)
        out = tmp_path / "rep"
        assert main(["eval", "--metric", "melmae", "--input", str(wav),
                     "--ref", str(wav), "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["mel_mae"] == 0.0

    def test_mstft_identical_pair_is_zero(self, tmp_path):
        wav = tmp_path / "t.wav"
        write_tone(wav)
        out = tmp_path / "rep"
        assert main(["eval", "--metric", "mstft", "--input", str(wav),
                     "--ref", str(wav), "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["mstft"] == 0.0

    def test_equivariance_with_delay_dummy_checkpoint(self, tmp_path):
        ckpt_dir = tmp_path / "dummy"
        ckpt_dir.mkdir()
        (ckpt_dir / "config.json").write_text(
            json.dumps({"model_kind": "delay", "delay_samples": 3}))
        (ckpt_dir / "model.jgn").write_bytes(b"JGN1" + b"\x00" * 8)
        wav = tmp_path / "t.wav"
        write_tone(wav)
        out = tmp_path / "rep"
        assert main(["eval", "--metric", "equivariance",
                     "--checkpoint", str(ckpt_dir / "model.jgn"),
                     "--input", str(wav), "--margin", "64",
                     "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["mean_error"] < 1e-10
        assert (out / "equivariance.csv").exists()

    def test_equivariance_and_alias_on_trained_checkpoint(
            self, small_config_path, tmp_path):
        run = tmp_path / "run"
        main(["train", "--config", small_config_path, "--steps", "2",
              "--out", str(run), "--no-figures"])
        wav = tmp_path / "t.wav"
        write_tone(wav)
        out_eq = tmp_path / "eq"
        assert main(["eval", "--metric", "equivariance",
                     "--checkpoint", str(run / "checkpoints" / "final.jgn"),
                     "--input", str(wav), "--deltas", "0.5,-0.5",
                     "--out", str(out_eq)]) == 0
        report = json.loads((out_eq / "report.json").read_text())
        assert report["deltas"] == [0.5, -0.5]
        assert (out_eq / "equivariance.png").exists()

        out_al = tmp_path / "alias"
        assert main(["eval", "--metric", "alias",
                     "--checkpoint", str(run / "checkpoints" / "final.jgn"),
                     "--input", str(wav), "--out", str(out_al)]) == 0
        report = json.loads((out_al / "report.json").read_text())
        assert 0.0 <= report["ratio"] <= 1.0

    def test_missing_ref_is_usage_error(self, tmp_path):
        wav = tmp_path / "t.wav"
        write_tone(wav)
        assert main(["eval", "--metric", "melmae", "--input", str(wav),
                     "--out", str(tmp_path / "o")]) == 2


class TestSpectrogram:
    def test_silence_all_floor(self, tmp_path):
        wav = tmp_path / "s.wav"
        write_wav(wav, Signal(np.zeros(4096), sample_rate=22050.0))
        out = tmp_path / "spec"
        assert main(["spectrogram", "--input", str(wav), "--out", str(out)]) == 0
        lines = (out / "mel.csv").read_text().strip().split("\n")
        header = lines[0].split(",")
        assert header[0] == "frame" and header[1] == "mel_0"
        values = [float(v) for v in lines[1].split(",")[1:]]
        assert all(v == pytest.approx(np.log(1e-5)) for v in values)
        assert (out / "spectrogram.png").exists()

    def test_tone_has_single_dominant_band(self, tmp_path):
        wav = tmp_path / "t.wav"
        write_tone(wav, freq=441.0)
        out = tmp_path / "spec"
        assert main(["spectrogram", "--input", str(wav), "--out", str(out),
                     "--no-figures"]) == 0
        lines = (out / "mel.csv").read_text().strip().split("\n")
        row = np.array([float(v) for v in lines[3].split(",")[1:]])
        # energy concentrates in one mel neighborhood
        peak = int(np.argmax(row))
        others = np.delete(row, range(max(0, peak - 3), min(len(row), peak + 4)))
        assert row[peak] > others.max() + 1.0

    def test_malformed_wav_exit_code(self, tmp_path):
        bad = tmp_path / "bad.wav"
        bad.write_bytes(b"not a wav at all")
        assert main(["spectrogram", "--input", str(bad),
                     "--out", str(tmp_path / "o")]) == 2


class TestEntryPoints:
    def test_module_invocation(self):
        proc = subprocess.run([sys.executable, "-m", "jengan", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "design-filter" in proc.stdout

    def test_unknown_command_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["no-such-command"])
        assert exc.value.code == 2
