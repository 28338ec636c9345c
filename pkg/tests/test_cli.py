"""Command-line interface: parsing, config files, CSV output, exit codes."""

import pytest

from coopoutage.cli import load_config, main


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestConfigFile:
    def test_parses_keys_and_comments(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# experiment manifest\n"
            "snr_db = 20      # transmit SNR\n"
            "rate = 0.5\n"
            "omega = 1,1,1\n"
            "\n"
            "normalize = block\n"
            "fm_t = 1e-3\n"
        )
        cfg = load_config(path)
        assert cfg == {
            "snr_db": "20",
            "rate": "0.5",
            "omega": "1,1,1",
            "normalize": "block",
            "fm_t": "1e-3",
        }

    def test_rejects_malformed_lines(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("snr_db : 20\n")
        with pytest.raises(ValueError):
            load_config(path)

    def test_config_drives_run_and_flags_override(self, tmp_path, capsys):
        path = tmp_path / "run.cfg"
        path.write_text("snr_db = 20\nnormalize = block\nfm_t = 1e-3\nprotocols = df\n")
        code, out, _ = run_cli(["metrics", "--config", str(path)], capsys)
        assert code == 0
        row = [ln for ln in out.splitlines() if ln.startswith("df")][0]
        assert float(row.split()[3]) == pytest.approx(28.21, abs=0.02)
        # override the normalisation from the command line
        code, out, _ = run_cli(["metrics", "--config", str(path), "--normalize", "hz"], capsys)
        row = [ln for ln in out.splitlines() if ln.startswith("df")][0]
        assert float(row.split()[3]) == pytest.approx(0.0282, abs=1e-4)

    def test_unknown_config_key_is_usage_error(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("snr = 20\n")
        with pytest.raises(SystemExit) as info:
            main(["metrics", "--config", str(path)])
        assert info.value.code == 2


class TestMetricsCommand:
    def test_block_normalised_durations(self, capsys):
        code, out, _ = run_cli(
            ["metrics", "--snr-db", "20", "--normalize", "block", "--fm-t", "1e-3"], capsys
        )
        assert code == 0
        values = {ln.split()[0]: ln.split() for ln in out.splitlines()[2:]}
        assert float(values["df"][3]) == pytest.approx(28.21, abs=0.02)
        assert float(values["sr"][3]) == pytest.approx(12.83, abs=0.02)

    def test_strong_direct_link_spacing_in_coherence_times(self, capsys):
        code, out, _ = run_cli(
            [
                "metrics",
                "--snr-db", "20",
                "--omega", "10,1,1",
                "--protocols", "sr",
                "--normalize", "fm",
            ],
            capsys,
        )
        assert code == 0
        row = [ln for ln in out.splitlines() if ln.startswith("sr")][0]
        spacing = float(row.split()[7])
        assert spacing == pytest.approx(569.7, rel=1e-3)

    def test_zero_rate_flags_duration(self, capsys):
        code, out, _ = run_cli(["metrics", "--snr-db", "10", "--rate", "0"], capsys)
        assert code == 0
        row = [ln for ln in out.splitlines() if ln.startswith("direct")][0]
        assert row.split()[1] == "0" and row.split()[3] == "nan"

    def test_requires_an_snr(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["metrics"])
        assert info.value.code == 2

    def test_mc_columns(self, capsys):
        code, out, _ = run_cli(
            [
                "metrics",
                "--snr-db", "10",
                "--protocols", "df",
                "--mc",
                "--samples", "400000",
                "--seed", "3",
            ],
            capsys,
        )
        assert code == 0
        header = out.splitlines()[1].split()
        assert header[-3:] == ["p_out_mc", "aor_mc", "aod_mc"]
        row = [ln for ln in out.splitlines() if ln.startswith("df")][0].split()
        assert float(row[-3]) == pytest.approx(float(row[1]), rel=0.10)


class TestSweepCommand:
    def test_csv_structure_and_byte_stability(self, tmp_path, capsys):
        args = [
            "sweep",
            "--snr-db-range", "0:20:10",
            "--protocols", "sr,direct",
            "--out", str(tmp_path / "a.csv"),
        ]
        assert main(args) == 0
        again = args[:-1] + [str(tmp_path / "b.csv")]
        assert main(again) == 0
        a = (tmp_path / "a.csv").read_text()
        assert a == (tmp_path / "b.csv").read_text()
        lines = a.strip().splitlines()
        assert lines[0] == "snr_db,protocol,p_out_exact,aor_exact,aod_exact,p_out_asym,aor_asym,aod_asym"
        assert len(lines) == 1 + 3 * 2
        # deterministic (snr, protocol) ordering
        assert [ln.split(",")[1] for ln in lines[1:3]] == ["direct", "sr"]
        capsys.readouterr()

    def test_normalisation_is_pure_relabeling(self, tmp_path, capsys):
        base = ["sweep", "--snr-db-range", "10:20:5", "--doppler", "2,2,2"]
        main(base + ["--normalize", "hz", "--out", str(tmp_path / "hz.csv")])
        main(base + ["--normalize", "fm", "--out", str(tmp_path / "fm.csv")])
        capsys.readouterr()
        rows_hz = (tmp_path / "hz.csv").read_text().strip().splitlines()[1:]
        rows_fm = (tmp_path / "fm.csv").read_text().strip().splitlines()[1:]
        for hz, fm in zip(rows_hz, rows_fm):
            # the factors are exact internally; 1e-8 is the print-parse floor
            # of the 9-significant-digit CSV representation
            hz_v, fm_v = hz.split(","), fm.split(",")
            assert float(fm_v[3]) * 2.0 == pytest.approx(float(hz_v[3]), rel=1e-8)
            assert float(fm_v[4]) / 2.0 == pytest.approx(float(hz_v[4]), rel=1e-8)
            assert fm_v[2] == hz_v[2]

    def test_empty_protocol_list_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["sweep", "--snr-db-range", "0:10:5", "--protocols", ""])
        assert info.value.code == 2

    def test_unwritable_path(self, capsys):
        code, _, err = run_cli(
            ["sweep", "--snr-db-range", "0:10:5", "--out", "/nosuchdir/x.csv"], capsys
        )
        assert code == 2
        assert "cannot write" in err

    def test_stdout_mode(self, capsys):
        code, out, _ = run_cli(
            ["sweep", "--snr-db-range", "0:6:3", "--protocols", "df"], capsys
        )
        assert code == 0
        assert out.startswith("snr_db,")

    def test_rates_decay_monotonically_past_the_crossing_peak(self, capsys):
        # the outage rate peaks where the threshold meets the crossing-rate
        # maximum (a few dB here); past that every curve decays monotonically
        code, out, _ = run_cli(
            ["sweep", "--snr-db-range", "10:40:5", "--normalize", "fm"], capsys
        )
        assert code == 0
        series = {}
        for line in out.strip().splitlines()[1:]:
            v = line.split(",")
            series.setdefault(v[1], []).append(float(v[3]))
        assert len(series) == 4
        for name, aors in series.items():
            assert all(b < a for a, b in zip(aors, aors[1:])), name


class TestValidateCommand:
    def test_passes_and_exit_zero(self, capsys):
        code, out, _ = run_cli(
            [
                "validate",
                "--snr-db", "10",
                "--protocols", "df",
                "--samples", "2000000",
                "--seed", "4",
            ],
            capsys,
        )
        assert code == 0
        assert "pass" in out

    def test_tolerance_failure_exit_one(self, capsys):
        code, out, _ = run_cli(
            [
                "validate",
                "--snr-db", "10",
                "--protocols", "direct",
                "--samples", "200000",
                "--tol-op", "1e-9",
            ],
            capsys,
        )
        assert code == 1
        assert "FAIL" in out


class TestSlopeCommand:
    def test_reports_diversity_exponents(self, capsys):
        code, out, _ = run_cli(
            ["slope", "--snr-db-range", "30:40:2", "--protocols", "direct,af,df,sr"], capsys
        )
        assert code == 0
        got = {}
        for line in out.splitlines()[1:]:
            parts = line.split()
            got[(parts[0], parts[1])] = float(parts[2])
        for name, d in [("direct", 1), ("af", 2), ("df", 1), ("sr", 2)]:
            assert got[(name, "aor")] == pytest.approx(-(d - 0.5), abs=0.05)
            assert got[(name, "aod")] == pytest.approx(-0.5, abs=0.05)
            assert got[(name, "op")] == pytest.approx(-d, abs=0.1)

    def test_narrow_window_refused(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["slope", "--snr-db-range", "30:34:2"])
        assert info.value.code == 2


class TestTable1Command:
    def test_symmetric_rows(self, capsys):
        code, out, _ = run_cli(
            ["table1", "--snr-db", "20", "--normalize", "block", "--fm-t", "1e-3"], capsys
        )
        assert code == 0
        rows = {ln.split()[0]: ln.split() for ln in out.splitlines()[2:]}
        assert float(rows["sr"][3]) == pytest.approx(12.78, abs=0.01)
        assert float(rows["af"][3]) == pytest.approx(14.10, abs=0.01)
        assert float(rows["simo-1x2"][3]) == pytest.approx(float(rows["af"][3]), rel=1e-9)
        assert float(rows["direct"][3]) == pytest.approx(18.16, abs=0.01)

    def test_asymmetric_network_rejected(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["table1", "--snr-db", "20", "--omega", "2,1,1"])
        assert info.value.code == 2


class TestNormalisationGuards:
    def test_block_mode_needs_fm_t_in_unit_interval(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["metrics", "--snr-db", "10", "--normalize", "block", "--fm-t", "1.5"])
        assert info.value.code == 2
        with pytest.raises(SystemExit) as info:
            main(["metrics", "--snr-db", "10", "--normalize", "block"])
        assert info.value.code == 2
