"""Command-line contract: flags, exit codes, CSV/manifest reproducibility."""

import json

import pytest

from memlang import cli


def run(argv):
    return cli.main(argv)


def read_csv(path):
    meta, header, rows = {}, None, []
    for line in path.read_text().splitlines():
        if line.startswith("# "):
            k, v = line[2:].split("=", 1)
            meta[k] = v
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return meta, header, rows


class TestHelp:
    @pytest.mark.parametrize("sub", ["kernels", "validate-fdt", "simulate",
                                     "oracle", "analytic", "figures"])
    def test_subcommand_help(self, sub, capsys):
        with pytest.raises(SystemExit) as exc:
            run([sub, "--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        assert "--out" in out

    def test_help_documents_units(self, capsys):
        with pytest.raises(SystemExit):
            run(["simulate", "--help"])
        out = capsys.readouterr().out
        for unit in ("(1/time)", "(mass/time)", "(energy)", "(time)"):
            assert unit in out

    def test_missing_subcommand_is_config_error(self, capsys):
        assert run([]) == 1
        assert "memlang: error: config:" in capsys.readouterr().err


class TestExitCodes:
    def test_invalid_kernel_names_valid_set(self, tmp_path, capsys):
        code = run(["kernels", "--kernel", "triangular",
                    "--out", str(tmp_path / "k.csv")])
        assert code == 1
        err = capsys.readouterr().err
        for kind in ("sharp", "exponential", "gaussian", "lorentzian"):
            assert kind in err

    def test_incompatible_integrator_kernel_pair(self, tmp_path, capsys):
        code = run(["simulate", "--integrator", "truncated:2",
                    "--kernel", "sharp", "--n-traj", "4",
                    "--out", str(tmp_path / "s.csv")])
        assert code == 1
        assert "config" in capsys.readouterr().err

    def test_unknown_integrator(self, tmp_path, capsys):
        code = run(["simulate", "--integrator", "leapfrog",
                    "--out", str(tmp_path / "s.csv")])
        assert code == 1
        assert "truncated:N" in capsys.readouterr().err

    def test_nonpositive_parameter(self, tmp_path):
        assert run(["kernels", "--omega", "-1",
                    "--out", str(tmp_path / "k.csv")]) == 1

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"omege": 2.0}))
        assert run(["--config", str(cfg), "kernels",
                    "--out", str(tmp_path / "k.csv")]) == 1
        assert "omege" in capsys.readouterr().err

    def test_malformed_config_json(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text("{not json")
        assert run(["--config", str(cfg), "kernels",
                    "--out", str(tmp_path / "k.csv")]) == 1

    def test_config_subcommand_mismatch(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"subcommand": "simulate"}))
        assert run(["--config", str(cfg), "kernels",
                    "--out", str(tmp_path / "k.csv")]) == 1
        assert "simulate" in capsys.readouterr().err

    def test_bad_figure_number(self, tmp_path):
        assert run(["figures", "--fig", "3",
                    "--out", str(tmp_path / "f.csv")]) == 1


class TestOutputs:
    def test_kernels_csv(self, tmp_path):
        out = tmp_path / "k.csv"
        assert run(["kernels", "--kernel", "gaussian", "--omega", "3",
                    "--out", str(out)]) == 0
        meta, header, rows = read_csv(out)
        assert header == ["kind", "omega", "quantity", "arg", "value"]
        assert {r[2] for r in rows} >= {"kernel", "j0", "j4", "laplace"}
        assert "delta" in meta and "eta" in meta

    def test_analytic_csv(self, tmp_path):
        out = tmp_path / "a.csv"
        assert run(["analytic", "--delta", "0.3", "--tau-max", "2",
                    "--n-points", "5", "--out", str(out)]) == 0
        _, header, rows = read_csv(out)
        assert header == ["curve_id", "delta", "tau", "q2_normalized"]
        assert {r[0] for r in rows} == {"markov", "trunc1", "trunc2",
                                        "trunc3", "exact"}
        # full precision survives the text round-trip
        for r in rows:
            assert float(r[3]) == float(format(float(r[3]), ".17g"))

    def test_validate_fdt_csv(self, tmp_path):
        out = tmp_path / "v.csv"
        assert run(["validate-fdt", "--n-paths", "200", "--n-steps", "100",
                    "--dt", "0.05", "--seed", "3", "--out", str(out)]) == 0
        _, header, rows = read_csv(out)
        assert header[-1] == "z_score"
        assert len(rows) == 3
        assert all(abs(float(r[-1])) < 6.0 for r in rows)

    def test_simulate_manifest_round_trip(self, tmp_path):
        out1 = tmp_path / "run1.csv"
        assert run(["simulate", "--integrator", "embed", "--n-traj", "20",
                    "--t-end", "1", "--seed", "11", "--out", str(out1)]) == 0
        manifest = json.loads((tmp_path / "run1.csv.manifest.json").read_text())
        assert manifest["seed"] == 11
        assert set(manifest["versions"]) == {"python", "numpy", "scipy",
                                             "memlang"}
        assert manifest["outputs"] == [str(out1)]

        # feeding the manifest's effective config back reproduces the CSV
        cfg = tmp_path / "replay.json"
        replay_cfg = dict(manifest["config"])
        out2 = tmp_path / "run2.csv"
        replay_cfg["out"] = str(out2)
        cfg.write_text(json.dumps(replay_cfg))
        assert run(["--config", str(cfg), "simulate"]) == 0
        assert out2.read_bytes() == out1.read_bytes()

    def test_flags_override_config_file(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"delta": 0.1, "n_points": 3,
                                   "tau_max": 1.0}))
        out = tmp_path / "a.csv"
        assert run(["--config", str(cfg), "analytic", "--delta", "0.4",
                    "--out", str(out)]) == 0
        _, _, rows = read_csv(out)
        assert {r[1] for r in rows} == {"0", "0.40000000000000002"}

    def test_threads_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MEMLANG_THREADS", "2")
        out = tmp_path / "s.csv"
        assert run(["simulate", "--integrator", "markov", "--n-traj", "10",
                    "--t-end", "0.5", "--record-stride", "50",
                    "--out", str(out)]) == 0

    def test_oracle_smoke(self, tmp_path):
        out = tmp_path / "o.csv"
        assert run(["oracle", "--n-traj", "8", "--n-modes", "128",
                    "--dt", "0.001", "--t-end", "0.5",
                    "--record-stride", "100", "--out", str(out)]) == 0
        _, header, rows = read_csv(out)
        assert header == list(cli._SIM_COLUMNS)
        assert len(rows) == 6

    def test_figures_smoke(self, tmp_path):
        out = tmp_path / "f.csv"
        assert run(["figures", "--fig", "2", "--out", str(out)]) == 0
        _, header, rows = read_csv(out)
        assert header == ["curve_id", "delta", "tau", "value", "stderr"]
        assert {r[0] for r in rows} == {"markov", "trunc3", "exact"}
