import json
import math
import subprocess
import sys

import numpy as np
import pytest

from lossupdate.cli import EXIT_CONTRACT, EXIT_INPUT, EXIT_OK, Config, run
from lossupdate.losses import QuadraticLoss, RestrictionLoss, SumLoss, TabularLoss
from lossupdate.measures import GridMeasure, make_discrete, make_grid
from lossupdate.serialization import (
    InputError,
    joint_from_json,
    loss_from_json,
    loss_to_json,
    measure_from_json,
    measure_to_json,
    read_json,
    write_json,
)

DIE = {"type": "discrete", "points": [1, 2, 3, 4, 5, 6], "weights": [1, 1, 1, 1, 1, 1]}


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def files(tmp_path):
    def make(name, obj):
        return _write(tmp_path / name, obj)

    make.dir = tmp_path
    return make


class TestMeasureFiles:
    def test_round_trip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(40)
        for i in range(50):
            n = int(rng.integers(1, 40))
            m = make_discrete([f"o{j}" for j in range(n)], rng.exponential(size=n))
            path = tmp_path / f"m{i}.json"
            write_json(path, measure_to_json(m))
            back = measure_from_json(read_json(path))
            assert back.points == m.points
            np.testing.assert_array_equal(back.weights, m.weights)

    def test_grid_round_trip_is_bit_exact(self, tmp_path):
        g = make_grid(-3.0, 3.0, 301, np.exp(-np.linspace(-3, 3, 301) ** 2))
        write_json(tmp_path / "g.json", measure_to_json(g))
        back = measure_from_json(read_json(tmp_path / "g.json"))
        assert isinstance(back, GridMeasure)
        np.testing.assert_array_equal(back.density, g.density)

    def test_unnormalized_input(self):
        m = measure_from_json({"type": "discrete", "points": ["a", "b"], "weights": [1, 3]})
        np.testing.assert_array_equal(m.weights, [0.25, 0.75])

    @pytest.mark.parametrize(
        "obj, field",
        [
            ({"points": [1], "weights": [1]}, "measure.type"),
            ({"type": "discrete", "weights": [1]}, "measure.points"),
            ({"type": "discrete", "points": [1, 2], "weights": [1, "x"]}, "measure.weights[1]"),
            ({"type": "discrete", "points": [[1], 2], "weights": [1, 1]}, "measure.points[0]"),
            ({"type": "grid", "lo": 0, "hi": 1, "n": 2.5, "density": [1, 1]}, "measure.n"),
            ({"type": "simplex"}, "measure.type"),
        ],
    )
    def test_errors_name_the_field(self, obj, field):
        with pytest.raises(InputError) as err:
            measure_from_json(obj)
        assert err.value.field == field

    def test_validation_errors_wrapped(self):
        with pytest.raises(InputError, match="NegativeWeight|negative"):
            measure_from_json({"type": "discrete", "points": [1, 2], "weights": [1, -1]})


class TestLossFiles:
    def test_variants(self):
        assert loss_from_json({"variant": "quadratic", "w": 2})(3) == 18.0
        r = loss_from_json({"variant": "restriction", "B": [1, 2]}, points=[1, 2, 3])
        assert r(1) == 0.0 and r(3) == math.inf
        t = loss_from_json({"variant": "tabular", "values": {"a": 1.5, "b": "inf"}}, points=["a", "b"])
        assert t("a") == 1.5 and t("b") == math.inf
        s = loss_from_json({"variant": "sum", "terms": [{"variant": "quadratic", "w": 1}, {"variant": "tabular", "values": {"3": 0.5}, "default": 0}]}, points=[1, 2, 3])
        assert s(3) == 9.5

    def test_string_keys_match_numeric_labels(self):
        t = loss_from_json({"variant": "tabular", "values": {"1": 0.5, "2": 1.0}}, points=[1, 2])
        assert t(1) == 0.5 and t(2) == 1.0

    def test_scale(self):
        assert loss_from_json({"variant": "quadratic", "w": 2, "k": 4})(2) == 2.0

    def test_inf_spellings(self):
        for s in ("inf", "+inf", "Infinity"):
            assert loss_from_json({"variant": "tabular", "values": {"a": s}})("a") == math.inf

    @pytest.mark.parametrize(
        "obj, field",
        [
            ({"values": {}}, "loss.variant"),
            ({"variant": "quadratic"}, "loss.w"),
            ({"variant": "quadratic", "w": "big"}, "loss.w"),
            ({"variant": "tabular", "values": {"a": "-inf"}}, "loss.values.a"),
            ({"variant": "tabular", "values": [1, 2]}, "loss.values"),
            ({"variant": "sum", "terms": [{"variant": "cubic"}]}, "loss.terms[0].variant"),
        ],
    )
    def test_errors_name_the_field(self, obj, field):
        with pytest.raises(InputError) as err:
            loss_from_json(obj)
        assert err.value.field == field

    @pytest.mark.parametrize(
        "h, outcomes",
        [
            (TabularLoss({"a": 1.0, "b": math.inf}, default=2.0), ["a", "b", "c"]),
            (QuadraticLoss(0.5, k=2.0), [-2.0, 0.0, 3.0]),
            (RestrictionLoss(frozenset({"a", "c"})), ["a", "b", "c"]),
            (SumLoss((QuadraticLoss(1.0), TabularLoss({}, default=0.5))), [-1.0, 2.0]),
        ],
        ids=["tabular", "quadratic", "restriction", "sum"],
    )
    def test_round_trip(self, h, outcomes):
        back = loss_from_json(json.loads(json.dumps(loss_to_json(h))))
        assert [back(y) for y in outcomes] == [h(y) for y in outcomes]

    def test_joint_file(self):
        j = joint_from_json({"type": "joint", "x_labels": ["a"], "y_labels": [0, 1], "mass": [[1, 3]]})
        np.testing.assert_array_equal(j.mass, [[0.25, 0.75]])
        with pytest.raises(InputError) as err:
            joint_from_json({"type": "joint", "x_labels": ["a"], "y_labels": [0, 1], "mass": [[1, "q"]]})
        assert err.value.field == "joint.mass[0][1]"


class TestConfig:
    def test_seed_defaults_to_zero(self):
        assert Config("coherence", g="kl").seed == 0

    @pytest.mark.parametrize("kwargs", [{"g": "tv"}, {"out": " "}, {"trials": 0}, {"tol": 0.0}])
    def test_invalid(self, kwargs):
        with pytest.raises(InputError):
            Config("update", **kwargs)


class TestUpdateCommand:
    def test_restriction_on_a_die(self, files, capsys):
        prior = files("prior.json", DIE)
        loss = files("loss.json", {"variant": "restriction", "B": [1, 2, 3]})
        out, rep = str(files.dir / "post.json"), str(files.dir / "rep.json")
        assert run(["update", "--prior", prior, "--loss", loss, "--out", out, "--report", rep]) == EXIT_OK
        post = read_json(out)
        assert post["points"] == [1, 2, 3, 4, 5, 6]
        np.testing.assert_allclose(post["weights"], [1 / 3, 1 / 3, 1 / 3, 0, 0, 0], atol=1e-15)
        report = read_json(rep)
        assert report["log_normalizer"] == pytest.approx(math.log(0.5), abs=1e-15)
        assert report["integrable"] is True
        assert "log_normalizer=" in capsys.readouterr().out

    def test_support_mismatch(self, files):
        prior = files("prior.json", DIE)
        loss = files("loss.json", {"variant": "tabular", "values": {"1": 0, "9": 1}})
        assert run(["update", "--prior", prior, "--loss", loss, "--out", str(files.dir / "o.json")]) == EXIT_INPUT

    def test_incomplete_table(self, files):
        prior = files("prior.json", DIE)
        loss = files("loss.json", {"variant": "tabular", "values": {"1": 0}})
        assert run(["update", "--prior", prior, "--loss", loss, "--out", str(files.dir / "o.json")]) == EXIT_INPUT

    def test_malformed_json_names_the_field(self, files, capsys):
        bad = files.dir / "bad.json"
        bad.write_text('{"type": "discrete", "points": [1], "weights": [null]}')
        loss = files("loss.json", {"variant": "quadratic", "w": 1})
        assert run(["update", "--prior", str(bad), "--loss", loss, "--out", str(files.dir / "o.json")]) == EXIT_INPUT
        assert "prior.weights[0]" in capsys.readouterr().err

    def test_unparseable_file(self, files):
        bad = files.dir / "bad.json"
        bad.write_text("{oops")
        loss = files("loss.json", {"variant": "quadratic", "w": 1})
        assert run(["update", "--prior", str(bad), "--loss", loss, "--out", str(files.dir / "o.json")]) == EXIT_INPUT

    def test_missing_flag(self):
        assert run(["update", "--prior", "p.json"]) == EXIT_INPUT

    def test_not_integrable(self, files):
        prior = files("prior.json", DIE)
        loss = files("loss.json", {"variant": "restriction", "B": [8]})
        assert run(["update", "--prior", prior, "--loss", loss, "--out", str(files.dir / "o.json")]) == EXIT_CONTRACT

    def test_output_normalized_and_chains_coherently(self, files):
        prior = files("prior.json", {"type": "discrete", "points": ["a", "b", "c"], "weights": [2, 5, 3]})
        h1 = files("h1.json", {"variant": "tabular", "values": {"a": 0.3, "b": 1.2, "c": 0.0}})
        h2 = files("h2.json", {"variant": "tabular", "values": {"a": 2.0, "b": 0.1, "c": 0.7}})
        both = files("h12.json", {"variant": "sum", "terms": [read_json(h1), read_json(h2)]})
        d = files.dir
        assert run(["update", "--prior", prior, "--loss", h1, "--out", str(d / "mid.json")]) == EXIT_OK
        assert run(["update", "--prior", str(d / "mid.json"), "--loss", h2, "--out", str(d / "seq.json")]) == EXIT_OK
        assert run(["update", "--prior", prior, "--loss", both, "--out", str(d / "joint.json")]) == EXIT_OK
        seq, joint = read_json(d / "seq.json")["weights"], read_json(d / "joint.json")["weights"]
        assert abs(sum(seq) - 1) <= 1e-12
        np.testing.assert_allclose(seq, joint, rtol=0, atol=1e-12)

    def test_grid_prior(self, files):
        y = np.linspace(-5, 5, 101)
        prior = files("g.json", {"type": "grid", "lo": -5.05, "hi": 5.05, "n": 101, "density": np.exp(-0.5 * y * y).tolist()})
        loss = files("q.json", {"variant": "quadratic", "w": 0.5})
        out = str(files.dir / "o.json")
        assert run(["update", "--prior", prior, "--loss", loss, "--out", out]) == EXIT_OK
        post = measure_from_json(read_json(out))
        assert isinstance(post, GridMeasure)
        assert post.variance() == pytest.approx(0.5, abs=2e-3)

    def test_deterministic(self, files):
        prior = files("prior.json", DIE)
        loss = files("loss.json", {"variant": "tabular", "values": {str(i): i / 7 for i in range(1, 7)}})
        outs = []
        for i in range(2):
            out = files.dir / f"o{i}.json"
            run(["update", "--prior", prior, "--loss", loss, "--out", str(out)])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestOtherCommands:
    def test_bayes(self, files):
        joint = files("j.json", {"type": "joint", "x_labels": ["x0", "x1"], "y_labels": ["y1", "y2"], "mass": [[0.1, 0.2], [0.3, 0.4]]})
        out = str(files.dir / "o.json")
        assert run(["bayes", "--joint", joint, "--x", "x0", "--out", out]) == EXIT_OK
        np.testing.assert_allclose(read_json(out)["weights"], [1 / 3, 2 / 3], rtol=1e-14)

    def test_bayes_unknown_label(self, files):
        joint = files("j.json", {"type": "joint", "x_labels": ["x0"], "y_labels": ["y"], "mass": [[1]]})
        assert run(["bayes", "--joint", joint, "--x", "x9", "--out", str(files.dir / "o.json")]) == EXIT_INPUT

    def test_bayes_zero_marginal(self, files):
        joint = files("j.json", {"type": "joint", "x_labels": ["x0", "x1"], "y_labels": ["y"], "mass": [[0], [1]]})
        assert run(["bayes", "--joint", joint, "--x", "x0", "--out", str(files.dir / "o.json")]) == EXIT_INPUT

    def test_constrain(self, files):
        prior = files("p.json", {"type": "discrete", "points": [-1, 0, 1], "weights": [1, 1, 1]})
        moment = files("m.json", {"variant": "tabular", "values": {"-1": -1, "0": 0, "1": 1}})
        out, rep = str(files.dir / "o.json"), str(files.dir / "r.json")
        assert run(["constrain", "--prior", prior, "--moment", moment, "--bound", "0.5", "--out", out, "--report", rep]) == EXIT_OK
        w = np.array(read_json(out)["weights"])
        assert abs(w @ np.array([-1, 0, 1]) - 0.5) <= 1e-10
        assert read_json(rep)["beta"] == pytest.approx(math.log((1 + math.sqrt(13)) / 2), abs=1e-12)

    def test_constrain_infeasible(self, files):
        prior = files("p.json", {"type": "discrete", "points": [-1, 0, 1], "weights": [1, 1, 1]})
        moment = files("m.json", {"variant": "tabular", "values": {"-1": -1, "0": 0, "1": 1}})
        assert run(["constrain", "--prior", prior, "--moment", moment, "--bound", "2", "--out", str(files.dir / "o.json")]) == EXIT_CONTRACT

    def test_minimize(self, files):
        prior = files("p.json", {"type": "discrete", "points": [0, 1], "weights": [1, 1]})
        loss = files("l.json", {"variant": "tabular", "values": {"0": 0, "1": 1}})
        out = str(files.dir / "o.json")
        assert run(["minimize", "--prior", prior, "--loss", loss, "--g", "chi2", "--out", out]) == EXIT_OK
        np.testing.assert_allclose(read_json(out)["weights"], [0.625, 0.375], atol=1e-12)

    def test_minimize_unknown_generator(self, files):
        prior = files("p.json", DIE)
        loss = files("l.json", {"variant": "quadratic", "w": 1})
        assert run(["minimize", "--prior", prior, "--loss", loss, "--g", "tv", "--out", str(files.dir / "o.json")]) == EXIT_INPUT

    def test_minimize_no_convergence(self, files):
        prior = files("p.json", {"type": "discrete", "points": [0, 1, 2], "weights": [1, 2, 3]})
        loss = files("l.json", {"variant": "tabular", "values": {"0": 0, "1": 4, "2": 1}})
        args = ["minimize", "--prior", prior, "--loss", loss, "--g", "hellinger", "--out", str(files.dir / "o.json"), "--max-iters", "1"]
        assert run(args) == EXIT_CONTRACT

    def test_coherence_kl(self, files, capsys):
        rep = str(files.dir / "r.json")
        assert run(["coherence", "--g", "kl", "--trials", "100", "--seed", "0", "--report", rep]) == EXIT_OK
        report = read_json(rep)
        assert report["result"]["gap"] <= 1e-8
        assert report["behaves_as_expected"] is True
        assert capsys.readouterr().out.startswith("gap=")

    def test_coherence_chi2(self, files):
        rep = str(files.dir / "r.json")
        assert run(["coherence", "--g", "chi2", "--trials", "50", "--seed", "1", "--report", rep]) == EXIT_OK
        report = read_json(rep)
        assert report["confirmed"] and report["result"]["gap"] > 1e-3
        assert set(report["instance"]) == {"p0", "hI_delta", "hJ_delta", "generator"}


    def test_coherence_mismatch_exits_2(self, capsys):
        # a single chi2 draw whose gap stays below the incoherence threshold
        assert run(["coherence", "--g", "chi2", "--trials", "1", "--seed", "11"]) == EXIT_CONTRACT
        assert "behaves_as_expected=False" in capsys.readouterr().out

def test_module_entry_point(tmp_path):
    prior = _write(tmp_path / "p.json", DIE)
    loss = _write(tmp_path / "l.json", {"variant": "restriction", "B": [1, 2, 3]})
    proc = subprocess.run(
        [sys.executable, "-m", "lossupdate", "update", "--prior", prior, "--loss", loss, "--out", str(tmp_path / "o.json")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("log_normalizer=")
