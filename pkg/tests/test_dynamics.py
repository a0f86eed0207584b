import csv
import json

import numpy as np
import pytest

from polyntk.dynamics import TrainConfig, gd_train, max_safe_lr, stability_report, write_trace
from polyntk.experiments import stability_dataset
from polyntk.kernels import KernelModel
from polyntk.nets import ArchSpec, flatten, init_params
from polyntk.regression import GramMatrix, assemble_gram


@pytest.fixture(scope="module")
def problem():
    data = stability_dataset(0, n=8, dim=4)
    gram = assemble_gram(KernelModel("pnn", 2, 4), data.X)
    return data, gram


def net(width=256, seed=0):
    return init_params(ArchSpec("pnn", 2, width, 4, seed))


class TestMaxSafeLr:
    def test_examples(self):
        assert max_safe_lr(np.array([[4.0]])) == pytest.approx(0.25)
        assert max_safe_lr(np.diag([1.0, 3.0])) == pytest.approx(0.5)

    def test_matches_eigensolve(self, problem):
        _, gram = problem
        ev = np.linalg.eigvalsh(gram.entries)
        assert max_safe_lr(gram) == pytest.approx(2 / (ev[0] + ev[-1]), rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            max_safe_lr(GramMatrix(np.zeros((2, 2))))


class TestTrainConfig:
    @pytest.mark.parametrize("kw", [dict(learning_rate=-1, steps=1), dict(learning_rate=0.1, steps=-1),
                                    dict(learning_rate=0.1, steps=1, record_ntk_every=0)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            TrainConfig(**kw)


class TestTraining:
    def test_zero_steps(self, problem):
        data, gram = problem
        trace = gd_train(net(), data, TrainConfig(0.1, 0))
        assert trace.loss.size == 1 and trace.steps == 0
        rep = stability_report(trace, gram, 0.1)
        assert rep["total_param_drift"] == 0.0 and rep["sup_ntk_drift"] == 0.0

    def test_zero_learning_rate(self, problem):
        data, gram = problem
        p0 = net()
        trace = gd_train(p0, data, TrainConfig(0.0, 20, 5))
        assert np.array_equal(flatten(trace.final_params), flatten(p0))
        assert np.all(trace.loss == trace.loss[0])
        rep = stability_report(trace, gram, 0.0)
        assert rep["total_param_drift"] == 0.0 and rep["sup_ntk_drift"] == 0.0

    def test_readout_frozen(self, problem):
        data, gram = problem
        p0 = net()
        trace = gd_train(p0, data, TrainConfig(0.5 * max_safe_lr(gram), 5))
        assert np.array_equal(trace.final_params.w_out, p0.w_out)
        assert not np.array_equal(trace.final_params.layers, p0.layers)

    def test_loss_non_increasing_early(self, problem):
        data, gram = problem
        eta = 0.5 * max_safe_lr(gram)
        ok = 0
        for s in range(10):
            loss = gd_train(net(1024, s), data, TrainConfig(eta, 50, 50)).loss
            ok += bool(np.all(np.diff(loss) <= 1e-12 * loss[0]))
        assert ok >= 9

    def test_ntk_record_schedule(self, problem):
        data, _ = problem
        trace = gd_train(net(), data, TrainConfig(0.01, 7, 3))
        assert trace.ntk_steps.tolist() == [0, 3, 6, 7]
        assert trace.ntk_drift[0] == 0.0

    def test_duplicate_inputs(self, problem):
        data, _ = problem
        from polyntk.regression import Dataset

        dup = Dataset(np.vstack([data.X[:1], data.X[:1]]), np.zeros(2))
        with pytest.raises(ValueError):
            gd_train(net(), dup, TrainConfig(0.01, 1))

    def test_size_mismatch(self, problem):
        data, _ = problem
        trace = gd_train(net(), data, TrainConfig(0.01, 1))
        with pytest.raises(ValueError):
            stability_report(trace, np.eye(3), 0.01)


class TestWriteTrace:
    def test_format(self, problem, tmp_path):
        data, _ = problem
        trace = gd_train(net(), data, TrainConfig(0.01, 4, 2))
        write_trace(trace, tmp_path / "t.csv", tmp_path / "t.json", {"r0": float(trace.loss[0])})
        raw = (tmp_path / "t.csv").read_bytes()
        assert b"\r" not in raw
        rows = list(csv.reader(raw.decode().splitlines()))
        assert rows[0] == ["step", "loss", "step_norm", "cum_step_norm", "ntk_drift_fro"]
        assert len(rows) == 6
        assert [r[4] == "" for r in rows[1:]] == [False, True, False, True, False]
        assert float(rows[1][1]) == trace.loss[0]
        assert json.loads((tmp_path / "t.json").read_text())["r0"] == trace.loss[0]
