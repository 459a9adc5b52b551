import json
import os

import numpy as np
import pytest

from lszwalk.cli import EXIT_INVALID_INPUT, EXIT_OK, EXIT_PROPERTY_FAILED, main
from lszwalk.formats import dump_canonical, dump_davies, load_instance
from lszwalk.davies import davies_instance
from lszwalk.lindblad import CanonicalLindbladian, canonical_term
from lszwalk.matrix_core import eig_hermitian, matrix_to_json

from conftest import PAULI_X


def write_instance(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.fixture()
def qubit1_file(tmp_path, qubit1):
    return write_instance(tmp_path, "qubit1.json", dump_davies(qubit1))


def run(*argv):
    return main(list(argv))


class TestRandomCommand:
    def test_deterministic(self, tmp_path, capsys):
        a = str(tmp_path / "a.json")
        b = str(tmp_path / "b.json")
        assert run("random", "--kind", "davies", "--d", "3", "--seed", "7", "--out", a) == EXIT_OK
        assert run("random", "--kind", "davies", "--d", "3", "--seed", "7", "--out", b) == EXIT_OK
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_all_kinds_load_back(self, tmp_path):
        for kind in ("davies", "canonical", "channel"):
            path = str(tmp_path / f"{kind}.json")
            assert run("random", "--kind", kind, "--d", "3", "--seed", "1", "--out", path) == EXIT_OK
            loaded = load_instance(path)
            assert loaded.kind == kind

    def test_dimension_cap(self, tmp_path):
        assert run("random", "--d", "12", "--seed", "0") == EXIT_INVALID_INPUT
        assert run("random", "--d", "12", "--max-dim", "12", "--out", str(tmp_path / "x.json")) == EXIT_OK


class TestAnalyzeCommand:
    def test_qubit1_report(self, qubit1_file, tmp_path):
        out = str(tmp_path / "report.json")
        assert run("analyze", qubit1_file, "--out", out) == EXIT_OK
        report = json.load(open(out))
        assert all(c["passed"] for c in report["checks"])
        assert report["gaps"]["delta"] == pytest.approx((1 + np.exp(-1)) / 2, abs=1e-5)
        assert report["gaps"]["theta"] == pytest.approx(np.arccos((1 - np.exp(-1)) / 2), abs=1e-5)
        assert report["gaps"]["sqrt_two_delta"] == pytest.approx(1.16957, abs=1e-5)
        names = [c["name"] for c in report["checks"]]
        assert "keystone_TRT_equals_Q" in names
        assert all("residual" in c and "tolerance" in c for c in report["checks"])

    def test_paper_theta_mode(self, qubit1_file, tmp_path):
        out = str(tmp_path / "report.json")
        assert run("analyze", qubit1_file, "--combine-mode", "paper-theta", "--out", out) == EXIT_OK
        report = json.load(open(out))
        assert report["encoding_scale"] == pytest.approx(1.0)

    def test_identity_channel_degenerate_gap(self, tmp_path):
        payload = {
            "schema_version": "1",
            "kind": "channel",
            "dimension": 2,
            "payload": {"kraus": [matrix_to_json(np.eye(2))]},
        }
        path = write_instance(tmp_path, "ident.json", payload)
        out = str(tmp_path / "report.json")
        assert run("analyze", path, "--out", out) == EXIT_OK
        report = json.load(open(out))
        assert any("degenerate" in note for note in report["notes"])

    def test_not_detailed_balanced_exits_3(self, tmp_path, qubit1_canonical):
        # break the rate ratio: G(1) = G(-1) = 1 is not a KMS pair at beta=1
        ref = qubit1_canonical.reference
        bad = CanonicalLindbladian(
            reference=ref,
            terms=(
                canonical_term(1.0, [(1.0, np.array([[0, 0], [1, 0]], dtype=complex), 1.0, 1.0)]),
            ),
        )
        path = write_instance(tmp_path, "bad.json", dump_canonical(bad))
        assert run("analyze", path) == EXIT_PROPERTY_FAILED

    def test_schema_error_exits_2(self, tmp_path):
        path = write_instance(tmp_path, "junk.json", {"schema_version": "1", "kind": "davies"})
        assert run("analyze", path) == EXIT_INVALID_INPUT

    def test_dimension_cap_env(self, tmp_path, qubit1, monkeypatch):
        path = write_instance(tmp_path, "q.json", dump_davies(qubit1))
        monkeypatch.setenv("LSZ_MAX_DIM", "1")
        assert run("analyze", path) == EXIT_INVALID_INPUT
        monkeypatch.delenv("LSZ_MAX_DIM")
        assert run("analyze", path, "--out", str(tmp_path / "r.json")) == EXIT_OK

    def test_missing_file_exits_2(self):
        assert run("analyze", "/nonexistent/instance.json") == EXIT_INVALID_INPUT

    def test_f_function_subset(self, qubit1_file, tmp_path):
        out = str(tmp_path / "report.json")
        assert run("analyze", qubit1_file, "--f-functions", "kms", "--out", out) == EXIT_OK
        report = json.load(open(out))
        names = [c["name"] for c in report["checks"]]
        assert "detailed_balance[kms]" in names
        assert not any("one" in n for n in names if n.startswith("detailed_balance"))

    def test_deterministic_reports(self, qubit1_file, tmp_path):
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        run("analyze", qubit1_file, "--out", a)
        run("analyze", qubit1_file, "--out", b)
        assert open(a).read() == open(b).read()


class TestRoundCommand:
    def test_example_instance(self, tmp_path):
        h = eig_hermitian(np.diag([0.3, 0.7]).astype(complex))
        inst = davies_instance(h, 1.0, [(PAULI_X, 1.0)], "metropolis")
        path = write_instance(tmp_path, "h37.json", dump_davies(inst))
        out = str(tmp_path / "round.json")
        assert run("round", path, "--r", "2", "--alpha", "0.4", "--out", out) == EXIT_OK
        report = json.load(open(out))
        assert report["rounding"]["promise_holds"] is True
        assert report["overlap"]["exact"] >= 0.75
        assert report["overlap"]["bound"] == pytest.approx(0.75)
        assert report["query_cost"] > 0

    def test_on_grid_verdict_false(self, tmp_path):
        h = eig_hermitian(np.diag([0.25, 0.7]).astype(complex))
        inst = davies_instance(h, 1.0, [(PAULI_X, 1.0)], "metropolis")
        path = write_instance(tmp_path, "grid.json", dump_davies(inst))
        out = str(tmp_path / "round.json")
        assert run("round", path, "--r", "2", "--alpha", "0.4", "--out", out) == EXIT_OK
        assert json.load(open(out))["rounding"]["promise_holds"] is False

    def test_eigenvalue_at_one_rejected(self, qubit1_file):
        # qubit1 has eigenvalue 1.0, outside [0, 1)
        assert run("round", qubit1_file, "--r", "2", "--alpha", "0.4") == EXIT_PROPERTY_FAILED

    def test_needs_davies_kind(self, tmp_path):
        assert (
            run("random", "--kind", "canonical", "--d", "2", "--seed", "3", "--out", str(tmp_path / "c.json"))
            == EXIT_OK
        )
        assert run("round", str(tmp_path / "c.json"), "--r", "2", "--alpha", "0.4") == EXIT_INVALID_INPUT


class TestReduceCommand:
    def test_random_canonical(self, tmp_path):
        path = str(tmp_path / "c.json")
        assert run("random", "--kind", "canonical", "--d", "3", "--seed", "5", "--out", path) == EXIT_OK
        out = str(tmp_path / "red.json")
        assert run("reduce", path, "--out", out) == EXIT_OK
        report = json.load(open(out))
        assert all(c["passed"] for c in report["checks"])
        assert report["reduction"]["enlarged_system_dim"] == 6
        assert report["reduction"]["walk_space_dim"] > 0

    def test_davies_round_trip(self, qubit1_file, tmp_path):
        out = str(tmp_path / "red.json")
        assert run("reduce", qubit1_file, "--out", out) == EXIT_OK
        report = json.load(open(out))
        assert all(c["passed"] for c in report["checks"])


class TestSpectrumCommand:
    def test_csv_outputs(self, qubit1_file, tmp_path):
        out_dir = str(tmp_path / "spectra")
        assert run("spectrum", qubit1_file, "--out-dir", out_dir) == EXIT_OK
        disc = open(os.path.join(out_dir, "discriminant.csv")).read().splitlines()
        assert disc[0] == "index,eigenvalue"
        assert len(disc) == 5
        phases = open(os.path.join(out_dir, "walk_phases.csv")).read().splitlines()
        assert phases[0] == "eigenphase,subspace"
        assert sum(1 for line in phases[1:] if line.endswith(",B")) == 7
        assert sum(1 for line in phases[1:] if line.endswith(",Bperp")) == 48 - 7
