import numpy as np
import pytest

from crt import (
    DecileRow,
    DecileTable,
    PowerRow,
    PowerTable,
    ProcedureSpec,
    SchemaError,
    StudyConfig,
    read_config,
    read_decile_csv,
    read_power_csv,
    run_conditional_validity_study,
    run_power_study,
    write_results,
)
from crt.simlab import DECILE_COLUMNS, POWER_COLUMNS

TINY_PROCS = (
    ProcedureSpec(name="uncond-sd", sampler="complete", statistic="sd"),
    ProcedureSpec(name="cond-T1", sampler="conditional", statistic="sd", tiers=1, acceptance=0.5),
    ProcedureSpec(name="cem-G2", sampler="cem", statistic="sd", groups=2),
)


def tiny_config(**overrides):
    base = dict(
        models=("main_linear",),
        betas=(1.5,),
        taus=(0.0, 0.5),
        designs=((10, 10),),
        procedures=TINY_PROCS,
        replications=6,
        draws=60,
        reference_draws=40,
        alpha=0.05,
        seed=3,
        n_jobs=1,
    )
    base.update(overrides)
    return StudyConfig(**base)


class TestRunPowerStudy:
    def test_produces_one_row_per_cell_and_procedure(self):
        table = run_power_study(tiny_config())
        assert len(table.rows) == 2 * len(TINY_PROCS)
        for row in table.rows:
            assert 0.0 <= row.reject_rate <= 1.0
            assert row.design == "10/10"
            assert row.R <= 6 and row.M == 60

    def test_thread_count_determinism(self):
        serial = run_power_study(tiny_config())
        parallel = run_power_study(tiny_config(n_jobs=2))
        assert serial == parallel

    def test_param_columns(self):
        table = run_power_study(tiny_config(taus=(0.0,)))
        by_name = {r.procedure: r for r in table.rows}
        assert by_name["cond-T1"].param_T == 1
        assert by_name["cond-T1"].param_pa == 0.5
        assert by_name["uncond-sd"].param_T == ""
        assert by_name["cem-G2"].param_G == 2


class TestValidityStudy:
    def test_decile_structure(self):
        cfg = tiny_config(taus=(0.0,), n_assignments=40)
        table = run_conditional_validity_study(cfg)
        by_proc = {}
        for row in table.rows:
            by_proc.setdefault(row.procedure, []).append(row)
        for rows in by_proc.values():
            assert [r.decile for r in rows] == list(range(1, 11))
            assert sum(r.R for r in rows) == 40
            assert all(r.binning == "raw" for r in rows)

    def test_requires_sharp_null(self):
        with pytest.raises(ValueError):
            run_conditional_validity_study(tiny_config(taus=(0.5,)))

    def test_transformed_binning(self):
        cfg = tiny_config(
            models=("misspec_moderate",), taus=(0.0,), n_assignments=30, binning="transformed"
        )
        table = run_conditional_validity_study(cfg)
        assert all(r.binning == "transformed" for r in table.rows)


class TestResultIO:
    def test_power_round_trip(self, tmp_path):
        table = run_power_study(tiny_config(taus=(0.5,)))
        path = tmp_path / "power.csv"
        write_results(table, path)
        assert path.read_text().splitlines()[0] == POWER_COLUMNS
        back = read_power_csv(path)
        assert back == table

    def test_decile_round_trip(self, tmp_path):
        table = run_conditional_validity_study(tiny_config(taus=(0.0,), n_assignments=30))
        path = tmp_path / "deciles.csv"
        write_results(table, path)
        assert path.read_text().splitlines()[0] == DECILE_COLUMNS
        assert read_decile_csv(path) == table

    def test_schema_rejected_on_read(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(SchemaError):
            read_power_csv(path)
        with pytest.raises(SchemaError):
            read_decile_csv(path)

    def test_write_rejects_unknown_table(self, tmp_path):
        with pytest.raises(TypeError):
            write_results([1, 2, 3], tmp_path / "x.csv")


CONFIG_TEXT = """
models = ["main_linear"]
betas = [0.0, 3.0]
taus = [0.0, 0.5]
designs = [[10, 10]]
replications = 4
draws = 50
alpha = 0.05
seed = 1

[[procedures]]
name = "uncond-sd"
sampler = "complete"
statistic = "sd"

[[procedures]]
name = "cond-T2"
sampler = "conditional"
statistic = "sd"
tiers = 2
acceptance = 0.25
"""


class TestReadConfig:
    def test_valid_config(self, tmp_path):
        path = tmp_path / "study.cfg"
        path.write_text(CONFIG_TEXT)
        cfg = read_config(path)
        assert cfg.betas == (0.0, 3.0)
        assert cfg.designs == ((10, 10),)
        assert cfg.procedures[1].tiers == 2
        assert cfg.procedures[1].acceptance == 0.25

    def test_missing_alpha_names_key(self, tmp_path):
        path = tmp_path / "study.cfg"
        path.write_text(CONFIG_TEXT.replace("alpha = 0.05\n", ""))
        with pytest.raises(SchemaError, match="alpha"):
            read_config(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "study.cfg"
        path.write_text(CONFIG_TEXT + "\nbogus_key = 3\n")
        with pytest.raises(SchemaError, match="bogus_key"):
            read_config(path)

    def test_bad_procedure_named(self, tmp_path):
        path = tmp_path / "study.cfg"
        path.write_text(CONFIG_TEXT + "\n[[procedures]]\nname = \"x\"\nsampler = \"nope\"\n")
        with pytest.raises(SchemaError, match="x"):
            read_config(path)


class TestRowTypes:
    def test_tables_are_value_objects(self):
        row = PowerRow(
            model="main_linear", beta=1.0, tau=0.0, design="10/10", procedure="p",
            param_T="", param_pa="", param_G="", statistic="sd", R=5, M=10,
            reject_rate=0.2, mc_se=0.1,
        )
        assert PowerTable(rows=(row,)) == PowerTable(rows=(row,))
        drow = DecileRow(
            model="main_linear", beta=3.0, procedure="p", decile=1, R=10,
            reject_rate=0.1, mc_se=0.05, binning="raw",
        )
        assert DecileTable(rows=(drow,)) == DecileTable(rows=(drow,))
