import csv
import io
import json
import subprocess
import sys

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdiqss.cli import main, sweep_cells, table_agreement
from mdiqss.protocol import SessionConfig, Transcript, run_session
from mdiqss.report import RunReport, dumps_record, loads_record, to_csv
from mdiqss.streams import SeedStreams, derive_seed

SMALL = ["--k1", "30", "--k2", "30"]


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestRun:
    def test_same_seed_byte_identical(self, capsys):
        a = run_cli(capsys, "run", "--seed", "42", *SMALL)
        b = run_cli(capsys, "run", "--seed", "42", *SMALL)
        assert a == b and a[0] == 0

    def test_different_seed_differs(self, capsys):
        _, a, _ = run_cli(capsys, "run", "--seed", "1", *SMALL)
        _, b, _ = run_cli(capsys, "run", "--seed", "2", *SMALL)
        assert a != b

    def test_report_fields(self, capsys):
        _, out, _ = run_cli(capsys, "run", "--seed", "3", "--message", "101", *SMALL)
        rec = loads_record(out)
        assert rec["kind"] == "run"
        assert rec["config"]["message"] == "101"
        assert rec["wall_time"] is None
        RunReport.from_dict(rec)

    def test_timing_flag(self, capsys):
        _, out, _ = run_cli(capsys, "run", "--timing", *SMALL)
        assert loads_record(out)["wall_time"] >= 0

    def test_transcript_record(self, capsys):
        _, out, _ = run_cli(capsys, "run", "--transcript", "--seed", "9", *SMALL)
        lines = out.splitlines()
        t = Transcript.from_dict(loads_record(lines[1]))
        assert dumps_record(t.to_dict()) == lines[1]

    def test_config_file_and_override(self, capsys, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text('[session]\nk1 = 20\nk2 = 10\nattack = "teleport"\n[session.noise]\ndepolarizing_p = 0.02\n')
        _, out, _ = run_cli(capsys, "run", "--config", str(cfg), "--k2", "40")
        conf = loads_record(out)["config"]
        assert (conf["k1"], conf["k2"], conf["attack"]) == (20, 40, "teleport")
        assert conf["noise"]["depolarizing_p"] == 0.02

    def test_flat_config_file(self, capsys, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text("k1 = 12\nk2 = 8\n")
        _, out, _ = run_cli(capsys, "run", "--config", str(cfg))
        assert loads_record(out)["config"]["k1"] == 12

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "r.jsonl"
        code, out, _ = run_cli(capsys, "run", "--out", str(target), *SMALL)
        assert code == 0 and out == ""
        assert loads_record(target.read_text())["kind"] == "run"


class TestErrors:
    @pytest.mark.parametrize("argv", [
        ["run", "--k1", "0"],
        ["run", "--attack", "pns"],
        ["run", "--receivers", "two"],
        ["run", "--noise-p", "2"],
        ["decompose", "+z", "+x"],
        ["detect", "--trials", "0"],
    ])
    def test_config_errors_exit_one(self, capsys, argv):
        code, out, err = run_cli(capsys, *argv)
        assert code == 1 and out == ""
        assert "config error" in err

    def test_unknown_flag_exits_one(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["run", "--bogus"])
        assert exc.value.code == 1

    def test_malformed_config(self, capsys, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("k1 = \n")
        code, _, err = run_cli(capsys, "run", "--config", str(bad))
        assert code == 1 and "malformed" in err

    def test_unknown_config_key(self, capsys, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("k3 = 1\n")
        assert run_cli(capsys, "run", "--config", str(bad))[0] == 1


class TestDecompose:
    def test_plus_x_cubed(self, capsys):
        code, out, _ = run_cli(capsys, "decompose", "+x", "+x", "+x")
        rec = loads_record(out)
        assert code == 0
        assert rec["entries"] == {lab: [0.5, 0.0] for lab in ("000", "010", "100", "110")}

    def test_leading_minus_token(self, capsys):
        code, out, _ = run_cli(capsys, "decompose", "-x", "-x", "-x")
        assert code == 0
        assert set(loads_record(out)["entries"]) == {"001", "011", "101", "111"}

    def test_all_flag(self, capsys):
        _, out, _ = run_cli(capsys, "decompose", "--all", "+x", "+x")
        assert len(loads_record(out)["entries"]) == 4


class TestCheckTables:
    def test_all_agree(self, capsys):
        code, out, _ = run_cli(capsys, "check-tables")
        rec = loads_record(out)
        assert code == 0
        assert (rec["agreements"], rec["cases"]) == (32, 32)

    def test_mismatch_exits_two(self, capsys, monkeypatch):
        import mdiqss.cli as cli

        monkeypatch.setattr(cli, "table_agreement", lambda: (31, 32, ["forced"]))
        assert run_cli(capsys, "check-tables")[0] == 2

    def test_agreement_helper(self):
        assert table_agreement()[:2] == (32, 32)


class TestSweep:
    def test_cell_count_is_cartesian_product(self, capsys):
        code, out, _ = run_cli(
            capsys, "sweep", "--attack", "none,intercept-resend,teleport", "--noise-p", "0,0.02",
            "--receivers", "2,3", *SMALL,
        )
        recs = [loads_record(line) for line in out.splitlines()]
        assert code == 0
        assert len(recs) == 12
        assert [r["cell"] for r in recs] == list(range(12))
        combos = {(r["axes"]["attack"], r["axes"]["noise_p"], r["axes"]["receivers"]) for r in recs}
        assert len(combos) == 12

    def test_cell_seeds(self):
        base = SessionConfig(k1=5, k2=5, master_seed=77)
        cells = sweep_cells(base, {"attack": ["none"], "noise_p": [0.0, 0.1], "receivers": [2]})
        assert [c.master_seed for _, _, c in cells] == [derive_seed(77, "sweep", i) for i in range(2)]

    def test_parallel_matches_serial(self, capsys):
        argv = ["sweep", "--attack", "none,teleport", "--receivers", "2,3", "--seed", "5", *SMALL]
        _, serial, _ = run_cli(capsys, *argv)
        _, parallel, _ = run_cli(capsys, *argv, "--jobs", "2")
        assert serial == parallel

    def test_csv(self, capsys):
        _, out, _ = run_cli(capsys, "sweep", "--receivers", "2,3", "--format", "csv", *SMALL)
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 2
        assert rows[1]["axes.receivers"] == "3"

    def test_sweep_axes_from_file(self, capsys, tmp_path):
        cfg = tmp_path / "s.toml"
        cfg.write_text("[session]\nk1 = 10\nk2 = 10\n[sweep]\nreceivers = [2, 3, 4]\n")
        _, out, _ = run_cli(capsys, "sweep", "--config", str(cfg))
        assert len(out.splitlines()) == 3


class TestDetect:
    def test_detect_record(self, capsys):
        code, out, _ = run_cli(capsys, "detect", "--attack", "intercept-resend", "--trials", "5",
                               "--k1", "5", "--k2", "100", "--check-rounds", "4")
        rec = loads_record(out)
        assert code == 0 and rec["kind"] == "detection" and rec["sessions"] == 5


class TestRecords:
    def test_run_report_round_trip(self):
        t = run_session(SessionConfig(k1=20, k2=20, master_seed=1))
        rep = RunReport.from_transcript(t)
        line = dumps_record(rep.to_dict())
        assert RunReport.from_dict(loads_record(line)) == rep
        assert dumps_record(loads_record(line)) == line

    def test_needs_kind(self):
        with pytest.raises(ValueError):
            dumps_record({"a": 1})
        with pytest.raises(ValueError):
            loads_record("[1, 2]")

    def test_fraction_validation(self):
        with pytest.raises(ValueError):
            RunReport({}, "proceed", 1.5, 0, 0.2, 0, None, None)

    @given(st.dictionaries(st.text(min_size=1), st.one_of(st.integers(), st.text(), st.booleans(), st.none())))
    def test_generic_record_round_trip(self, body):
        rec = {"kind": "x", **{k: v for k, v in body.items() if k != "kind"}}
        assert loads_record(dumps_record(rec)) == rec

    def test_csv_flattening(self):
        text = to_csv([{"kind": "a", "n": {"x": 1}}, {"kind": "a", "n": {"y": None}}])
        assert text.splitlines()[0] == "kind,n.x,n.y"


class TestStreams:
    def test_named_streams_independent_of_order(self):
        a = SeedStreams(3)
        b = SeedStreams(3)
        a("x").random()
        assert a("y").random() == b("y").random()

    def test_derive_seed_distinct(self):
        seeds = {derive_seed(1, "detect", i) for i in range(1000)}
        assert len(seeds) == 1000
        assert all(0 <= s < 2**64 for s in seeds)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mdiqss", "decompose", "+x", "+y", "+y"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["kind"] == "decomposition"
