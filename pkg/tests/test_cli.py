import hashlib
import json
import subprocess
import sys

import pytest

from singcalc import cli
from singcalc.models import ConstantMismatchError


def run(capsys, *argv):
    status = cli.main(list(argv))
    out, err = capsys.readouterr()
    return status, out, err


def test_analyze_text(capsys):
    status, out, _ = run(capsys, "analyze", "--model", "bst", "--toll", "power:1", "--order", "4", "--digits", "30")
    assert status == 0
    assert "f_n ~ 2·n·log n - 1.8455686701969342788·n + 2·log n" in out


def test_analyze_catalan_log_constant(capsys):
    status, out, _ = run(capsys, "analyze", "--model", "catalan", "--toll", "log", "--order", "2",
                         "--digits", "30", "--format", "json")
    assert status == 0
    d = json.loads(out)
    assert d["asymptotics"]["terms"][0]["npow"] in ("1", 1)
    assert any(c["value"].startswith("2.02543846777657388771") for c in d["constants"])


@pytest.mark.parametrize("argv", [
    ["analyze", "--model", "bst", "--toll", "power:0"],
    ["analyze", "--model", "bst", "--toll", "cube"],
    ["analyze", "--model", "bst", "--toll", "log", "--digits", "10"],
    ["polya", "--dim", "4", "--digits", "20"],
    ["constants", "nonsense", "--no-cache"],
    ["hadamard", "--a", "x", "--b", "1/2"],
])
def test_invalid_input_exits_2(capsys, argv):
    status, _, err = run(capsys, *argv)
    assert status == 2 and err.startswith("error:")


def test_unknown_model_is_rejected_by_parser(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["analyze", "--model", "quadtree", "--toll", "log"])
    assert exc.value.code == 2


def test_validate_exit_codes(capsys):
    status, out, _ = run(capsys, "validate", "--model", "unionfind", "--toll", "log", "--nmax", "3000", "--digits", "20")
    assert status == 0 and out.rstrip().splitlines()[-1].startswith("PASS")
    status, out, _ = run(capsys, "validate", "--model", "bst", "--toll", "power:2", "--nmax", "500",
                         "--ratio-factor", "1e-6", "--digits", "20")
    assert status == 1 and "FAIL" in out


def test_precision_failure_exits_3(capsys, monkeypatch):
    def broken(*args, **kwargs):
        raise ConstantMismatchError("routes disagree")
    monkeypatch.setattr(cli, "analyze", broken)
    status, _, err = run(capsys, "analyze", "--model", "bst", "--toll", "log")
    assert status == 3 and "precision failure" in err


def test_hadamard_two_routes(capsys):
    status, out, _ = run(capsys, "hadamard", "--a", "-1/3", "--b", "-1/3", "--order", "4")
    assert status == 0 and out.rstrip().endswith("max Δ < 1e-40")
    status, out, _ = run(capsys, "hadamard", "--a", "-1/3", "--b", "-1/3", "--tolerance", "0", "--digits", "20")
    assert status == 3


def test_hadamard_integer_sum(capsys):
    status, out, _ = run(capsys, "hadamard", "--a", "-1/2", "--b", "-1/2", "--digits", "20")
    assert status == 0 and "closed law unavailable" in out


@pytest.mark.parametrize("argv", [
    ["analyze", "--model", "unionfind", "--toll", "power:2", "--digits", "20"],
    ["validate", "--model", "catalan", "--toll", "power:1/2", "--nmax", "1000", "--digits", "20"],
    ["stirling", "--kind", "superfactorial", "--n", "20", "--digits", "25"],
    ["polya", "--dim", "1", "--nmax", "200", "--digits", "20"],
    ["hadamard", "--a", "-3/4", "--b", "1/3", "--digits", "20"],
    ["constants", "K'_0", "--digits", "20", "--no-cache"],
])
def test_json_round_trip_is_byte_identical(capsys, argv):
    status, out, _ = run(capsys, *argv, "--format", "json")
    assert status == 0
    assert cli.dump_json(json.loads(out)) == out


def test_csv_output(capsys):
    status, out, _ = run(capsys, "oracle", "--model", "bst", "--toll", "power:1", "--nmax", "3", "--mode", "exact")
    assert status == 0
    assert out.splitlines() == ["n,value", "0,0", "1,1", "2,3", "3,17/3"]
    status, out, _ = run(capsys, "validate", "--model", "bst", "--toll", "power:1", "--nmax", "200",
                         "--digits", "20", "--format", "csv")
    header, *rows = out.splitlines()
    assert header == "n,exact,predicted,rel_error,expected_ratio"
    assert rows[-1].startswith("200,")


def test_polya_table(capsys):
    status, out, _ = run(capsys, "polya", "--dim", "3", "--nmax", "5000", "--digits", "20", "--format", "json")
    d = json.loads(out)
    last = d["table"][-1]
    assert status == 0 and last["n"] == 5000
    assert abs(last["ratio"] - 1) < 0.01


def test_constants_line_and_cache(capsys, tmp_path):
    cache = tmp_path / "c" / "constants.json"
    argv = ["constants", "K'_0", "--digits", "50", "--cache", str(cache)]
    status, first, _ = run(capsys, *argv)
    assert status == 0
    assert first.startswith("K'_0 = 1.20356491674961033428628333814873131775552838577096")
    digest = hashlib.md5(cache.read_bytes()).hexdigest()
    stamp = cache.stat().st_mtime_ns
    status, second, _ = run(capsys, *argv)
    assert second == first
    assert hashlib.md5(cache.read_bytes()).hexdigest() == digest
    assert cache.stat().st_mtime_ns == stamp


def test_cache_is_write_once(tmp_path):
    c = cli.ConstantsCache(tmp_path / "k.json")
    c.put({"name": "x", "digits": 20, "value": "1", "provenance": "series"})
    c.put({"name": "x", "digits": 20, "value": "2", "provenance": "series"})
    c.save()
    again = cli.ConstantsCache(tmp_path / "k.json")
    assert again.get("x", 20)["value"] == "1"


def test_settings_precedence(tmp_path):
    conf = tmp_path / "singcalc.conf"
    conf.write_text("# defaults for this project\ndigits = 40\nformat=csv\n")
    parser = cli.build_parser()
    args = parser.parse_args(["constants", "--config", str(conf)])
    cfg = cli.resolve_config(args, {})
    assert (cfg.digits, cfg.format) == (40, "csv")
    cfg = cli.resolve_config(args, {"SINGCALC_DIGITS": "35"})
    assert cfg.digits == 35
    args = parser.parse_args(["constants", "--config", str(conf), "--digits", "25"])
    assert cli.resolve_config(args, {"SINGCALC_DIGITS": "35"}).digits == 25
    args = parser.parse_args(["constants"])
    env = {"SINGCALC_CONFIG": str(conf), "SINGCALC_CACHE": str(tmp_path / "x.json")}
    cfg = cli.resolve_config(args, env)
    assert cfg.digits == 40 and cfg.cache_path == tmp_path / "x.json"
    assert cli.resolve_config(parser.parse_args(["constants"]), {}).digits == 50


def test_bad_config_file(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("colour = blue\n")
    args = cli.build_parser().parse_args(["constants", "--config", str(conf)])
    with pytest.raises(cli.UsageError):
        cli.resolve_config(args, {})


def test_negative_exponent_arguments():
    assert cli._join_negative_values(["hadamard", "--a", "-1/3", "--b", "-2"]) == ["hadamard", "--a=-1/3", "--b=-2"]


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "singcalc", "stirling", "--digits", "20"],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0
    assert "log sqrt(2 pi) = 0.918938533204672741" in proc.stdout
