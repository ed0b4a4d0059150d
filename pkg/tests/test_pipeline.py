import csv
import json
import subprocess
import sys

import pytest

from pairqmc.pipeline import (
    PipelineConfig,
    PipelineError,
    run_curve,
    run_pipeline,
)
from pairqmc.qsci import fci_oracle

from conftest import fixture_path, load_fixture


def h4_config(**overrides):
    data = {
        "fcidump": str(fixture_path("h4_1.00")),
        "sampler": {"shots": 20000, "seed": 11, "source": "surrogate"},
        "selection": {"epsilon": 0.0, "max_enlargement_rounds": 0},
        "afqmc": {"n_blocks": 10, "n_walkers": 8, "steps_per_block": 5, "seed": 2,
                  "equilibration_blocks": 2},
    }
    data.update(overrides)
    return PipelineConfig.from_dict(data)


def test_fixed_qsci_only_record_shape():
    record = run_pipeline(h4_config())
    assert record.status == "ok"
    assert record.energies["qsci"] is not None
    assert record.energies["afqmc"] is None
    assert record.energies["afqmc_stderr"] is None
    assert record.spaces["pool_size"] >= 1
    assert record.spaces["cartesian"] == record.spaces["pool_size"] ** 2
    assert record.shots["total"] == 20000
    assert record.space_checksum
    assert record.qsci_residual <= 1e-8


def test_enlarged_epsilon_zero_reaches_fci():
    config = h4_config(
        selection={"epsilon": 0.0, "max_enlargement_rounds": 8},
        variant_space="enlarged",
    )
    record = run_pipeline(config)
    assert record.energies["fci"] is not None
    assert abs(record.energies["qsci"] - record.energies["fci"]) <= 1e-10


def test_missing_fcidump_tags_integrals_stage(tmp_path):
    config = h4_config(fcidump=str(tmp_path / "missing.fcidump"))
    with pytest.raises(PipelineError) as info:
        run_pipeline(config)
    assert info.value.stage == "integrals"
    assert info.value.record.status == "failed"
    assert info.value.record.failed_stage == "integrals"


def test_partial_record_written_on_failure(tmp_path):
    out = tmp_path / "failed.json"
    config = h4_config(fcidump=str(tmp_path / "missing.fcidump"), output=str(out))
    with pytest.raises(PipelineError):
        run_pipeline(config)
    payload = json.loads(out.read_text())
    assert payload["status"] == "failed"
    assert payload["failed_stage"] == "integrals"


def test_enlarged_requires_rounds():
    with pytest.raises(ValueError, match="enlarged"):
        h4_config(variant_space="enlarged")


def test_rerun_from_echoed_config_is_bit_identical():
    record = run_pipeline(h4_config())
    echoed = dict(record.config)
    echoed.pop("geometry", None)
    rerun = run_pipeline(PipelineConfig.from_dict(echoed))
    assert rerun.energies["qsci"] == record.energies["qsci"]
    assert rerun.space_checksum == record.space_checksum
    assert rerun.shots == record.shots


def test_afqmc_variant_records_sigma_and_trace(tmp_path):
    out = tmp_path / "res.json"
    config = h4_config(variant_method="qsci-afqmc", output=str(out))
    record = run_pipeline(config)
    assert record.energies["afqmc"] is not None
    assert record.energies["afqmc_stderr"] is not None
    trace = (tmp_path / "res.json.trace").read_text().splitlines()
    assert len(trace) == 10
    payload = json.loads(out.read_text())
    assert payload["schema"] == 1
    assert payload["rng"]["algorithm"] == "numpy-PCG64"


def test_afqmc_traces_reproduce_exactly(tmp_path):
    config = h4_config(variant_method="qsci-afqmc", trace=str(tmp_path / "a.trace"))
    run_pipeline(config)
    config2 = h4_config(variant_method="qsci-afqmc", trace=str(tmp_path / "b.trace"))
    run_pipeline(config2)
    assert (tmp_path / "a.trace").read_text() == (tmp_path / "b.trace").read_text()


def test_curve_three_points(tmp_path):
    base = PipelineConfig.from_dict(
        {
            "fcidump": str(fixture_path("h6_1.00")),
            "sampler": {"shots": 50000, "seed": 5},
        }
    )
    points = [(r, str(fixture_path(f"h6_{r:.2f}"))) for r in (0.8, 1.5, 2.4)]
    csv_path = tmp_path / "curve.csv"
    records = run_curve(base, points, csv_path)
    assert len(records) == 3
    with open(csv_path) as handle:
        rows = list(csv.DictReader(handle))
    geometries = [float(row["geometry"]) for row in rows]
    assert geometries == sorted(geometries)
    for name in ("e_doci", "e_qsci", "e_fci"):
        relative = [float(row[f"rel_{name[2:]}"]) for row in rows]
        assert min(relative) == 0.0
    assert all(row["status"] == "ok" for row in rows)


def test_curve_continues_past_point_failure(tmp_path):
    base = PipelineConfig.from_dict({"fcidump": str(fixture_path("h4_1.00"))})
    points = [(1.0, str(fixture_path("h4_1.00"))), (2.0, str(tmp_path / "none.fcidump"))]
    records = run_curve(base, points, tmp_path / "c.csv")
    assert records[0].status == "ok"
    assert records[1].status == "failed"


def test_curve_h6_enlarged_matches_fci_at_every_point(tmp_path):
    geometries = (0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0, 2.2, 2.4)
    base = PipelineConfig.from_dict(
        {
            "fcidump": str(fixture_path("h6_1.00")),
            "sampler": {"shots": 100000, "seed": 17},
            "selection": {"epsilon": 0.0, "max_enlargement_rounds": 10},
            "variant_space": "enlarged",
        }
    )
    points = [(r, str(fixture_path(f"h6_{r:.2f}"))) for r in geometries]
    records = run_curve(base, points, tmp_path / "h6.csv")
    for record in records:
        assert record.status == "ok"
        assert abs(record.energies["qsci"] - record.energies["fci"]) <= 1e-8


CLI = [sys.executable, "-m", "pairqmc.cli"]


def run_cli(*args):
    return subprocess.run(CLI + list(args), capture_output=True, text=True)


def test_cli_fci_and_doci_subcommands():
    proc = run_cli("fci", "--fcidump", str(fixture_path("h2_0.74")))
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["energy"] == pytest.approx(fci_oracle(load_fixture("h2_0.74")), abs=1e-12)
    proc = run_cli("doci", "--fcidump", str(fixture_path("h2_0.74")), "--top", "1")
    assert json.loads(proc.stdout)["dimension"] == 2


def test_cli_qsci_record_fields():
    proc = run_cli(
        "qsci",
        "--fcidump", str(fixture_path("h4_1.00")),
        "--sampler.shots", "20000",
        "--sampler.seed", "11",
    )
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert set(payload) >= {"energy", "subspace_size", "residual", "space_checksum"}


def test_cli_sample_counts_roundtrip(tmp_path):
    counts = tmp_path / "h4.counts"
    proc = run_cli(
        "sample",
        "--fcidump", str(fixture_path("h4_1.00")),
        "--sampler.shots", "5000",
        "--sampler.seed", "1",
        "--counts-out", str(counts),
    )
    assert proc.returncode == 0
    stats = json.loads(proc.stdout)
    assert stats["shots"]["total"] == 5000
    proc = run_cli(
        "qsci",
        "--fcidump", str(fixture_path("h4_1.00")),
        "--sampler.source", str(counts),
    )
    assert proc.returncode == 0


def test_cli_pipeline_config_and_override(tmp_path):
    config = tmp_path / "run.toml"
    config.write_text(
        f"""
fcidump = "{fixture_path('h4_1.00')}"
variant_space = "enlarged"
variant_method = "qsci-only"

[sampler]
shots = 10000
seed = 3

[selection]
epsilon = 1e-6
max_enlargement_rounds = 8
"""
    )
    proc = run_cli("pipeline", "--config", str(config), "--selection.epsilon", "0.0")
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["config"]["selection"]["epsilon"] == 0.0
    assert abs(payload["energies"]["qsci"] - payload["energies"]["fci"]) <= 1e-10


def test_cli_pipeline_missing_file_exit_code(tmp_path):
    proc = run_cli("pipeline", "--fcidump", str(tmp_path / "nope.fcidump"))
    assert proc.returncode == 1
    payload = json.loads(proc.stdout)
    assert payload["failed_stage"] == "integrals"


def test_cli_afqmc_space_checkpoint(tmp_path, h4):
    from pairqmc.selection import cartesian_product

    space = cartesian_product([0b0011, 0b0101], [0b0011, 0b0101], 4)
    space_path = tmp_path / "space.dets"
    space.save(space_path)
    proc = run_cli(
        "afqmc",
        "--fcidump", str(fixture_path("h4_1.00")),
        "--space", str(space_path),
        "--afqmc.n_blocks", "8",
        "--afqmc.n_walkers", "6",
        "--afqmc.steps_per_block", "4",
        "--afqmc.seed", "5",
        "--afqmc.equilibration_blocks", "2",
    )
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["subspace_size"] == 4
    assert payload["blocks"] == 8
    assert payload["mean_energy"] is not None


def test_cli_curve(tmp_path):
    config = tmp_path / "curve.toml"
    csv_path = tmp_path / "out.csv"
    config.write_text(
        f"""
fcidump = "{fixture_path('h4_1.00')}"

[sampler]
shots = 5000
seed = 2

[curve]
points = [[1.0, "{fixture_path('h4_1.00')}"], [2.0, "{fixture_path('h4_2.00')}"]]
csv = "{csv_path}"
"""
    )
    proc = run_cli("curve", "--config", str(config))
    assert proc.returncode == 0
    rows = list(csv.DictReader(open(csv_path)))
    assert len(rows) == 2
    assert float(rows[0]["geometry"]) == 1.0
