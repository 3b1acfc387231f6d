"""Command-line surface: file formats, verdicts, exit codes."""

import json

import pytest

from mcusentry.cli import EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, main
from mcusentry.isa import HALT, LOAD, assemble
from mcusentry.layout import default_layout, format_layout
from mcusentry.programs import boot_rom, window_for
from mcusentry.protocol import AuthorizationMessage
from mcusentry.referee import DEFAULT_KEY

LAYOUT = default_layout()


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "key.bin").write_bytes(DEFAULT_KEY)
    binary = assemble([LOAD(0, LAYOUT.gpio.start), HALT()])
    (tmp_path / "s.bin").write_bytes(binary)
    (tmp_path / "layout.cfg").write_text(format_layout(LAYOUT))
    image = bytearray(0x4000 + len(binary))
    image[0x4000:0x4000 + len(binary)] = binary
    (tmp_path / "image.bin").write_bytes(bytes(image))
    (tmp_path / "rom.bin").write_bytes(boot_rom(0xEFFE))
    return tmp_path, binary


def _authorize(tmp, out="msg.bin"):
    return main([
        "authorize", "--key", str(tmp / "key.bin"),
        "--binary", str(tmp / "s.bin"),
        "--counter", str(tmp / "counter.txt"),
        "--out", str(tmp / out)])


def test_authorize_writes_message_and_bumps_counter(workdir, capsys):
    tmp, binary = workdir
    assert _authorize(tmp) == EXIT_OK
    msg = AuthorizationMessage.from_wire((tmp / "msg.bin").read_bytes())
    assert msg.binary == binary and msg.chal == 1
    assert (tmp / "counter.txt").read_text().strip() == "1"
    assert _authorize(tmp, "msg2.bin") == EXIT_OK
    msg2 = AuthorizationMessage.from_wire((tmp / "msg2.bin").read_bytes())
    assert msg2.chal == 2 and msg2.token != msg.token


def test_authorize_rejects_corrupt_counter(workdir, capsys):
    tmp, _ = workdir
    (tmp / "counter.txt").write_text("not-a-number")
    assert _authorize(tmp) == EXIT_USAGE
    assert not (tmp / "msg.bin").exists()


def test_authorize_rejects_short_key(workdir):
    tmp, _ = workdir
    (tmp / "key.bin").write_bytes(b"short")
    assert _authorize(tmp) == EXIT_USAGE


def _run_args(tmp, er, extra=()):
    return ["run",
            "--layout", str(tmp / "layout.cfg"),
            "--image", str(tmp / "image.bin"),
            "--rom", str(tmp / "rom.bin"),
            "--er", f"0x{er.er_min:04x}:0x{er.er_max:04x}",
            "--message", str(tmp / "msg.bin"),
            "--key", str(tmp / "key.bin"),
            "--sensor-const", "0x1234",
            *extra]


def test_run_accepts_emitted_message(workdir, capsys):
    tmp, binary = workdir
    _authorize(tmp)
    er = window_for(binary, 0x4000)
    code = main(_run_args(tmp, er, ["--trace-out", str(tmp / "trace.tsv")]))
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "verify=top" in out and "xsensing=top" in out
    dump1 = (tmp / "trace.tsv").read_text()
    assert "READ(GPIO)" in dump1
    main(_run_args(tmp, er, ["--trace-out", str(tmp / "trace2.tsv")]))
    assert (tmp / "trace2.tsv").read_text() == dump1  # bit-exact reruns


def test_run_skip_verify_denies_sensing(workdir, capsys):
    tmp, binary = workdir
    _authorize(tmp)
    er = window_for(binary, 0x4000)
    code = main(_run_args(tmp, er, ["--skip-verify"]))
    assert code == EXIT_VIOLATION
    assert "xsensing=bottom" in capsys.readouterr().out
    code = main(_run_args(tmp, er, ["--skip-verify", "--expect", "bottom"]))
    assert code == EXIT_OK


def test_run_tampered_message_rejected(workdir, capsys):
    tmp, binary = workdir
    _authorize(tmp)
    blob = bytearray((tmp / "msg.bin").read_bytes())
    blob[13] ^= 0x40  # inside the token
    (tmp / "msg.bin").write_bytes(bytes(blob))
    er = window_for(binary, 0x4000)
    code = main(_run_args(tmp, er, ["--expect", "bottom"]))
    out = capsys.readouterr().out
    assert "verify=bottom" in out and "xsensing=bottom" in out
    assert code == EXIT_OK


def test_check_single_formula(capsys):
    assert main(["check", "--formula", "mon-gpio-read-in-er",
                 "--width", "5"]) == EXIT_OK
    assert "holds" in capsys.readouterr().out


def test_check_formula_text(capsys):
    assert main(["check", "--formula", "(G true)", "--width", "5"]) == EXIT_OK


def test_check_mutant_is_convicted(tmp_path, capsys):
    ce = tmp_path / "ce.tsv"
    assert main(["check", "--mutate", "irq-dma-ignored", "--width", "5",
                 "--counterexample-out", str(ce)]) == EXIT_OK
    assert "violates" in capsys.readouterr().out
    dump = ce.read_text()
    assert "#loop_start=" in dump and "\t" in dump


def test_check_usage_error_on_bad_formula(capsys):
    assert main(["check", "--formula", "(G (-> p", "--width", "5"]) == EXIT_USAGE


def test_attack_single_scenario(capsys):
    assert main(["attack", "--name", "happy-path"]) == EXIT_OK
    assert "0 adversary wins" in capsys.readouterr().out


def test_attack_report_file(tmp_path, capsys):
    report = tmp_path / "report.jsonl"
    code = main(["attack", "--name", "irq-mid-er", "--random", "5",
                 "--seed", "3", "--report", str(report)])
    assert code == EXIT_OK
    lines = [json.loads(line) for line in report.read_text().splitlines()]
    assert len(lines) == 6
    assert all(not entry["adversary_wins"] for entry in lines)


def test_attack_deterministic_digests(tmp_path):
    reports = []
    for i in range(2):
        path = tmp_path / f"r{i}.jsonl"
        main(["attack", "--name", "dma-gpio-snoop", "--seed", "9",
              "--random", "3", "--report", str(path)])
        reports.append(path.read_text())
    assert reports[0] == reports[1]
