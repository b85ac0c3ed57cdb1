import json
import subprocess
import sys

import numpy as np
import pytest

from compactent import io
from compactent.cli import EXIT_INPUT, EXIT_INVARIANT, EXIT_OK, main
from compactent.schmidt import compact_decomposition
from compactent.states import PureState, haar_random_density, haar_random_state
from compactent.threequbit import make_named_state


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def named_file(tmp_path):
    def make(name):
        path = tmp_path / f"{name}.json"
        io.save_state(make_named_state(name), path)
        return path
    return make


class TestIO:
    def test_pure_round_trip_is_bit_identical(self, tmp_path):
        psi = haar_random_state([2, 3, 2], 1)
        io.save_state(psi, tmp_path / "s.json")
        back = io.load_state(tmp_path / "s.json")
        assert np.array_equal(back.amplitudes, psi.amplitudes)
        assert back.layout == psi.layout

    def test_density_round_trip(self, tmp_path):
        rho = haar_random_density([2, 2], rank=2, seed=3)
        io.save_state(rho, tmp_path / "r.json")
        assert np.array_equal(io.load_state(tmp_path / "r.json").matrix, rho.matrix)

    def test_labels_optional(self):
        s = io.state_from_dict({"dims": [2], "amplitudes": [[1, 0], [0, 0]]})
        assert s.layout.labels == ("A",)

    @pytest.mark.parametrize("doc", [
        {"amplitudes": [[1, 0]]},
        {"dims": [2]},
        {"dims": [2], "amplitudes": [1, 0]},
        {"dims": [2, 2], "amplitudes": [[1, 0], [0, 0]]},
        {"dims": "x", "amplitudes": [[1, 0]]},
    ])
    def test_malformed(self, doc):
        with pytest.raises(ValueError):
            io.state_from_dict(doc)

    def test_non_finite_serialized_as_strings(self):
        assert json.loads(io.dumps({"a": float("inf"), "b": np.nan})) == {"a": "inf", "b": "nan"}

    def test_tree_document(self):
        doc = io.tree_to_dict(compact_decomposition(make_named_state("ghz")))
        assert doc["ordering"] == ["A", "B", "C"]
        assert doc["root"]["party"] == "A"
        final = doc["root"]["branches"][0]["children"]
        assert final["party"] == ["B", "C"]
        assert len(final["branches"][0]["kets"]) == 2


class TestCLI:
    def test_measure_ghz(self, capsys, named_file):
        code, out, _ = run(capsys, "measure", named_file("ghz"))
        doc = json.loads(out)
        assert code == EXIT_OK
        assert doc["Ec_bits"] == pytest.approx(1.0, abs=1e-12)
        assert doc["base"] == "2"
        assert "tolerances" in doc

    def test_measure_four_term_maximal(self, capsys, named_file):
        _, out, _ = run(capsys, "measure", named_file("eq8_max"))
        assert json.loads(out)["Ec_bits"] == pytest.approx(2.0, abs=1e-12)

    def test_measure_base_e(self, capsys, named_file):
        _, out, _ = run(capsys, "measure", named_file("ghz"), "--base", "e")
        doc = json.loads(out)
        assert doc["Ec"] == pytest.approx(np.log(2)) and doc["Ec_bits"] == pytest.approx(1.0)

    def test_classify_product(self, capsys, named_file):
        code, out, _ = run(capsys, "classify", named_file("product"))
        assert code == EXIT_OK and json.loads(out)["class"] == "I"

    def test_decompose_and_verify(self, capsys, named_file):
        code, out, _ = run(capsys, "decompose", named_file("w"), "--ordering", "B,A,C")
        doc = json.loads(out)
        assert code == EXIT_OK and len(doc["decompositions"]) == 1
        code, out, _ = run(capsys, "verify", named_file("w"))
        assert code == EXIT_OK and len(json.loads(out)["memberships"]) == 3

    def test_roof(self, capsys, tmp_path):
        path = tmp_path / "rho.json"
        io.save_state(haar_random_density([2, 2], rank=2, seed=0), path)
        code, out, _ = run(capsys, "roof", path, "--restarts", "4")
        doc = json.loads(out)
        assert code == EXIT_OK
        assert doc["value"] == pytest.approx(doc["wootters_ef"], abs=5e-3)

    def test_random_round_trip(self, capsys, tmp_path):
        code, out, _ = run(capsys, "random", "--dims", "2,2,2", "--seed", "3")
        assert code == EXIT_OK
        doc = json.loads(out)
        psi = io.state_from_dict(doc)
        assert json.loads(io.dumps(io.state_to_dict(psi))) == doc
        assert np.array_equal(psi.amplitudes, haar_random_state([2, 2, 2], np.random.default_rng(3)).amplitudes)

    def test_random_directory(self, capsys, tmp_path):
        code, out, _ = run(capsys, "random", "--dims", "2,2", "--rank", "2", "--count", "3", "-o", tmp_path / "d")
        assert code == EXIT_OK and len(json.loads(out)["written"]) == 3

    def test_deterministic_reports(self, capsys, named_file):
        path = named_file("w")
        first = run(capsys, "verify", path, "--estimate-er", "--seed", "4")[1]
        second = run(capsys, "verify", path, "--estimate-er", "--seed", "4")[1]
        assert first == second

    def test_text_format(self, capsys, named_file):
        code, out, _ = run(capsys, "measure", named_file("ghz"), "--format", "text")
        assert code == EXIT_OK and "Ec_bits: 1.0" in out

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "measure", tmp_path / "nope.json")
        assert code == EXIT_INPUT and "file not found" in err

    def test_parse_error(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code, _, err = run(capsys, "measure", bad)
        assert code == EXIT_INPUT and "cannot parse" in err

    def test_dimension_cap(self, capsys, tmp_path):
        path = tmp_path / "big.json"
        io.save_state(haar_random_state([2] * 7, 0), path)
        code, _, err = run(capsys, "verify", path)
        assert code == EXIT_INPUT and "dimension cap" in err

    def test_unnormalized_is_invariant_failure(self, capsys, tmp_path):
        path = tmp_path / "u.json"
        io.save_state(PureState.from_vector([1, 1, 0, 0], [2, 2]), path)
        code, _, err = run(capsys, "measure", path)
        assert code == EXIT_INVARIANT and "norm" in err

    def test_unknown_flag(self, capsys, named_file):
        assert run(capsys, "measure", named_file("ghz"), "--bogus")[0] == EXIT_INPUT

    def test_bad_ordering(self, capsys, named_file):
        code, _, err = run(capsys, "measure", named_file("ghz"), "--ordering", "A,B,Q")
        assert code == EXIT_INPUT and "permutation" in err

    def test_module_entry_point(self, named_file):
        proc = subprocess.run([sys.executable, "-m", "compactent", "measure", str(named_file("ghz"))],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["Ec_bits"] == pytest.approx(1.0)
