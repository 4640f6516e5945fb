import numpy as np
import pytest

from ipcopt.core import Algorithm
from ipcopt.harness import io as hio
from ipcopt.harness.cli import main
from ipcopt.harness.experiments import (
    ExperimentSpec,
    Problem,
    run_order_study,
    run_single,
    run_sweep,
    sweep_to_csv,
)
from ipcopt.problems import make_arctan_quadratic, make_fractional, make_quadratic


def small_adaptive(**kw):
    base = dict(problem=Problem.QUADRATIC, n=8, seed=3, cond=20.0, algorithm=Algorithm.IPC_ADAPTIVE, beta=0.8)
    base.update(kw)
    return ExperimentSpec(**base)


class TestTraceCsv:
    @pytest.mark.parametrize("alg, beta", [(Algorithm.IPC_ADAPTIVE, 0.8), (Algorithm.CONVEX_IPC, 0.5)])
    def test_round_trip_bit_exact(self, tmp_path, alg, beta):
        path = tmp_path / "t.csv"
        trace, _ = run_single(small_adaptive(algorithm=alg, beta=beta, output_path=str(path)))
        back, meta = hio.read_trace(path)
        assert back.status is trace.status
        assert back.total_grad_evals == trace.total_grad_evals
        assert back.records == trace.records
        assert meta["algorithm"] == alg.value
        assert meta["beta"] == hio.fmt(beta)

    def test_fallback_column(self, tmp_path):
        path = tmp_path / "t.csv"
        spec = ExperimentSpec(algorithm=Algorithm.CONVEX_IPC, beta=0.5, h=0.09, trapezoid_mode=True, n=2, cond=10.0,
                              output_path=str(path))
        trace, _ = run_single(spec)
        header = [line for line in path.read_text().splitlines() if not line.startswith("#")][0]
        assert header.endswith(",trapezoid_fallback")
        back, _ = hio.read_trace(path)
        assert back.records == trace.records
        assert not any(r.fallback for r in back.records)

    def test_rejects_foreign_csv(self):
        with pytest.raises(ValueError):
            hio.parse_trace("# status=Converged\n# total_grad_evals=1\na,b\n1,2\n")


class TestSweep:
    def test_deterministic_except_timestamp(self):
        spec = small_adaptive(beta_list=[0.9, 0.6, 0.75])
        a = sweep_to_csv(run_sweep(spec), timestamp="T")
        b = sweep_to_csv(run_sweep(spec), timestamp="T")
        assert a == b
        betas = [line.split(",")[0] for line in a.splitlines() if line and not line.startswith("#")][1:]
        assert betas == ["0.59999999999999998", "0.75", "0.90000000000000002"]

    def test_timestamp_line_first(self, tmp_path):
        path = tmp_path / "s.csv"
        run_sweep(small_adaptive(beta_list=[0.8], output_path=str(path)))
        assert path.read_text().startswith("# generated=")

    def test_single_element_matches_run_single(self):
        trace, report = run_single(small_adaptive())
        row = run_sweep(small_adaptive(beta_list=[0.8])).rows[0]
        assert row.iterations == trace.iterations
        assert row.grad_evals == trace.total_grad_evals
        assert row.final_grad_norm == trace.final_grad_norm
        assert row.report == report

    def test_invalid_beta_fails_before_running(self):
        with pytest.raises(Exception, match="beta"):
            run_sweep(small_adaptive(beta_list=[0.9, 0.2]))

    def test_thread_count_does_not_change_results(self, monkeypatch):
        spec = small_adaptive(beta_list=[0.6, 0.7, 0.8, 0.9])
        monkeypatch.setenv("IPC_THREADS", "1")
        serial = sweep_to_csv(run_sweep(spec), timestamp="T")
        monkeypatch.setenv("IPC_THREADS", "4")
        assert sweep_to_csv(run_sweep(spec), timestamp="T") == serial


class TestProblemFiles:
    @pytest.mark.parametrize(
        "oracle, gen",
        [
            (make_fractional(5, 1), "fractional"),
            (make_arctan_quadratic(5, 1), "arctan_quadratic"),
            (make_quadratic(5, 9.0, 1), "quadratic"),
        ],
    )
    def test_round_trip(self, tmp_path, oracle, gen):
        path = tmp_path / "p.npz"
        hio.save_problem(path, oracle, gen, 1)
        back, header = hio.load_problem(path)
        assert header["generator"] == gen and header["n"] == 5
        x = np.linspace(0.5, 1.5, 5)
        np.testing.assert_array_equal(back.eval_grad(x), oracle.eval_grad(x))
        assert back.eval_f(x) == oracle.eval_f(x)
        np.testing.assert_array_equal(back.x0, oracle.x0)
        assert back.lipschitz == oracle.lipschitz

    def test_bad_version(self, tmp_path):
        path = tmp_path / "p.npz"
        hio.save_problem(path, make_quadratic(2, 2.0, 0), "quadratic", 0)
        with np.load(path) as z:
            d = dict(z)
        d["version"] = np.int64(99)
        np.savez(path, **d)
        with pytest.raises(ValueError, match="version"):
            hio.load_problem(path)


def test_read_config(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("# comment\nbeta = 0.7\nmax-iters=50\n\n")
    assert hio.read_config(path) == {"beta": "0.7", "max_iters": "50"}


def test_order_study_default_oracle():
    slopes = run_order_study(["ExplicitEuler", "Midpoint"])
    assert slopes["ExplicitEuler"] == pytest.approx(1.0, abs=0.15)
    assert slopes["Midpoint"] == pytest.approx(2.0, abs=0.15)


class TestCli:
    def test_solve_ok(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        rc = main(["solve", "--problem", "quadratic", "--n", "10", "--cond", "10", "--algorithm", "ipc-constant",
                   "--h", "0.09", "--beta", "0.9", "--out", str(out)])
        assert rc == 0
        assert "Converged" in capsys.readouterr().out
        assert out.exists()

    def test_beta_out_of_range(self, capsys):
        rc = main(["solve", "--problem", "quadratic", "--algorithm", "ipc-adaptive", "--beta", "0.2"])
        assert rc == 2
        err = capsys.readouterr().err
        assert "0.5359" in err and "1]" in err

    def test_io_error(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        rc = main(["solve", "--problem", "quadratic", "--algorithm", "ipc-adaptive", "--beta", "0.8",
                   "--out", str(blocker / "sub" / "t.csv")])
        assert rc == 4

    def test_missing_problem_file(self, tmp_path):
        rc = main(["solve", "--problem-file", str(tmp_path / "nope.npz"), "--beta", "0.8"])
        assert rc == 4

    def test_non_convergence(self):
        rc = main(["solve", "--problem", "quadratic", "--cond", "100", "--algorithm", "ipc-adaptive",
                   "--beta", "0.8", "--max-iters", "3"])
        assert rc == 3

    def test_config_and_override(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("problem=quadratic\nalgorithm=ipc-adaptive\nbeta=0.2\nmax-iters=3\n")
        assert main(["solve", "--config", str(cfg)]) == 2
        assert main(["solve", "--config", str(cfg), "--beta", "0.8"]) == 3
        assert main(["solve", "--config", str(cfg), "--beta", "0.8", "--max-iters", "100000"]) == 0

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("colour=blue\n")
        assert main(["solve", "--config", str(cfg)]) == 2

    def test_gen_problem_then_solve(self, tmp_path):
        path = tmp_path / "p.npz"
        assert main(["gen-problem", "--problem", "arctan", "--n", "6", "--seed", "2", "--out", str(path)]) == 0
        assert main(["solve", "--problem-file", str(path), "--algorithm", "convex-ipc", "--beta", "0.5"]) == 0

    def test_ode_order(self, tmp_path, capsys):
        out = tmp_path / "o.csv"
        assert main(["ode-order", "--out", str(out)]) == 0
        assert out.read_text().startswith("scheme,slope")
        assert "Midpoint" in capsys.readouterr().out

    def test_sweep(self, tmp_path):
        out = tmp_path / "s.csv"
        rc = main(["sweep", "--problem", "quadratic", "--algorithm", "ipc-adaptive", "--betas", "0.7,0.9", "--out", str(out)])
        assert rc == 0
        assert "argmin_beta" in out.read_text()
