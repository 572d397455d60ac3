import json

import pytest

from rsma_mgm.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, main
from rsma_mgm.experiment import CampaignSpec
from rsma_mgm.experiment.config import dumps_campaign
from rsma_mgm.precoding import SolverConfig

FAST = SolverConfig(multistart=("mrt-weakest", "sdma", "noma"))


@pytest.fixture(scope="module")
def cases_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cases")
    assert main(["gen-cases", str(out), "--runs", "2"]) == EXIT_OK
    return out


@pytest.fixture
def small_campaign(cases_dir, nine_cases, tmp_path):
    spec = CampaignSpec(nine_cases[0], runs=2, seed=5, case_index=1, solver=FAST,
                        mcs_search_space={"common": [0, 9], "private1": [0, 9], "private2": [0, 9]})
    path = tmp_path / "campaign.json"
    path.write_text(dumps_campaign(spec))
    return path


def test_gen_cases_writes_files(cases_dir, capsys):
    names = {p.name for p in cases_dir.iterdir()}
    assert {f"case{i}.json" for i in range(1, 10)} <= names
    assert {f"campaign{i}.json" for i in range(1, 10)} <= names
    assert (cases_dir / "preview.txt").read_text().startswith("case")
    assert json.loads((cases_dir / "campaign3.json").read_text())["scenario"] == "case3.json"


def test_solve_prints_and_writes(cases_dir, tmp_path, capsys):
    out = tmp_path / "sol.json"
    code = main(["solve", str(cases_dir / "case1.json"), "--scheme", "sdma", "--out", str(out)])
    assert code == EXIT_OK
    text = capsys.readouterr().out
    assert "objective" in text and "powers" in text
    doc = json.loads(out.read_text())
    assert doc["objective"] > 0 and doc["status"] == "converged"


def test_run_counts(cases_dir, tmp_path, capsys):
    out = tmp_path / "run.json"
    code = main(["run", str(cases_dir / "campaign1.json"), "--scheme", "SDMA", "--mcs=-,0,0", "--runs", "2",
                 "--out", str(out)])
    assert code == EXIT_OK
    assert "D_1=2 D_2=2 of 2" in capsys.readouterr().out
    assert json.loads(out.read_text())["counts"]["d_1"] == 2


@pytest.mark.parametrize("mcs", ["1,2", "1,1,1", "x,1,1", "12,1,1"])
def test_run_bad_triple_is_config_error(cases_dir, mcs, capsys):
    code = main(["run", str(cases_dir / "campaign1.json"), "--scheme", "SDMA", "--mcs", mcs, "--runs", "1"])
    assert code == EXIT_CONFIG
    assert capsys.readouterr().err.startswith("error:")


def test_missing_file_is_io_error(tmp_path, capsys):
    assert main(["solve", str(tmp_path / "nope.json")]) == EXIT_IO
    assert main(["run", str(tmp_path / "nope.json"), "--scheme", "RSMA", "--mcs", "0,0,0"]) == EXIT_IO
    assert "not found" in capsys.readouterr().err


def test_unknown_field_is_config_error(cases_dir, tmp_path, capsys):
    doc = json.loads((cases_dir / "case1.json").read_text())
    doc["colour"] = "red"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["solve", str(bad)]) == EXIT_CONFIG
    assert "colour" in capsys.readouterr().err


def test_sweep_compare_report(small_campaign, tmp_path, capsys):
    sweep = tmp_path / "sweep"
    assert main(["sweep", str(small_campaign), "--out", str(sweep), "--workers", "1"]) == EXIT_OK
    assert (sweep / "case1" / "case_result.json").exists()
    rep = tmp_path / "rep"
    assert main(["compare", str(sweep), "--out", str(rep)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "RSMA min-throughput" in text
    assert (rep / "results.json").exists() and (rep / "scatter.csv").exists()
    again = tmp_path / "again"
    assert main(["report", str(rep / "results.json"), "--out", str(again)]) == EXIT_OK
    assert (again / "results.json").read_text() == (rep / "results.json").read_text()


def test_compare_without_sweep_is_io_error(tmp_path):
    assert main(["compare", str(tmp_path), "--out", str(tmp_path / "r")]) == EXIT_IO


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "rsma-mgm" in capsys.readouterr().out
