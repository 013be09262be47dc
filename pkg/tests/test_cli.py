import subprocess
import sys

import pytest

from eqls.cli import build_parser, main
from eqls.gates import builtin_catalog


def test_list_gates(capsys):
    assert main(["list-gates", "--radix", "3"]) == 0
    out = capsys.readouterr().out
    ids = {ln.split("\t")[0] for ln in out.splitlines()}
    assert {g.id for g in builtin_catalog() if g.radix == 3} <= ids
    assert "CNOT" not in ids


def test_verify(tmp_path):
    report = tmp_path / "verify.txt"
    assert main(["verify", "--report", str(report)]) == 0
    text = report.read_text()
    assert "FAIL" not in text and text.count("PASS") >= 9
    assert "Miller" in text


def test_run_identity_like_target(tmp_path):
    target = tmp_path / "id.txt"
    target.write_text("00 00\n01 01\n10 10\n11 11\n")
    report = tmp_path / "r.txt"
    code = main(["run", "--target", str(target), "--pool", "Wire", "--pop", "4", "--report", str(report)])
    assert code == 0
    text = report.read_text()
    assert "success: true" in text and "generations_used: 0" in text


def test_run_benchmark_report_is_deterministic(tmp_path):
    args = ["run", "--target", "SWAP3", "--pop", "10", "--gens", "3", "--seed", "7"]
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    main(args + ["--report", str(a)])
    main(args + ["--report", str(b)])
    assert a.read_text() == b.read_text()
    assert "restrictions: H3=1;[0-2]=1;[1-2]=1" in a.read_text()


def test_restrict_none_clears_defaults(tmp_path):
    r = tmp_path / "r.txt"
    main(["run", "--target", "SWAP3", "--pop", "6", "--gens", "1", "--restrict", "none", "--report", str(r)])
    assert "restrictions: -" in r.read_text()


def test_dump_merges(tmp_path):
    target = tmp_path / "id.txt"
    target.write_text("00 00\n01 01\n10 10\n11 11\n")
    merges = tmp_path / "m.txt"
    main(["run", "--target", str(target), "--pool", "Wire", "--pop", "4", "--report", str(tmp_path / "r"), "--dump-merges", str(merges)])
    assert merges.exists()


def test_bench_table(tmp_path):
    out = tmp_path / "bench.txt"
    reports = tmp_path / "reports"
    code = main(["bench", "SWAP3", "--compare", "fitness", "--runs", "2", "--pop", "8", "--gens", "2", "--report", str(out), "--reports-dir", str(reports)])
    assert code == 0
    text = out.read_text()
    assert "Gate\tf0 (Gen/Corr)\tf1 (Gen/Corr)\truns" in text
    assert "# runs" in text and "# aggregates" in text
    assert len(list(reports.iterdir())) == 4


def test_config_file(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# defaults\npop = 6\ngens=1\nseed=3\n")
    r = tmp_path / "r.txt"
    main(["run", "--target", "SWAP3", "--config", str(cfg), "--report", str(r)])
    text = r.read_text()
    assert "population: 6" in text and "rng_seed: 3" in text
    main(["run", "--target", "SWAP3", "--config", str(cfg), "--pop", "8", "--report", str(r)])
    assert "population: 8" in r.read_text()


def test_config_file_unknown_key(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("colour=blue\n")
    with pytest.raises(SystemExit):
        main(["run", "--target", "SWAP3", "--config", str(cfg)])


def test_unknown_target():
    with pytest.raises(SystemExit):
        main(["run", "--target", "no-such-thing"])


def test_parser_rejects_bad_mode():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["run", "--target", "SWAP3", "--mode", "darwinian"])


def test_console_script_entry():
    out = subprocess.run([sys.executable, "-m", "eqls.cli", "list-gates"], capture_output=True, text=True, check=True)
    assert "CNOT3" in out.stdout
