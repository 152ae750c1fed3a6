#!/usr/bin/env python3
"""
命令行测试 - 子命令输出与退出码
"""
import json
import os
import shutil
import tempfile

import numpy as np
import pytest

from cmp_recovery.cli import EXIT_ERROR, EXIT_NOT_MET, EXIT_OK, main, parse_index_list
from cmp_recovery.core.error_handler import InputFormatError
from cmp_recovery.core.linalg import counterexample_matrix


@pytest.fixture
def workdir():
    """临时目录，设置文件也放在其中"""
    temp_dir = tempfile.mkdtemp()
    yield temp_dir
    shutil.rmtree(temp_dir, ignore_errors=True)


def run_cli(workdir, *args):
    """以临时设置文件运行命令行"""
    return main(["--settings", os.path.join(workdir, "settings.json"), "--log-level", "WARNING", *args])


def write_csv_file(workdir, name, data):
    path = os.path.join(workdir, name)
    np.savetxt(path, np.atleast_1d(data), delimiter=",")
    return path


def read_json(path):
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def counterexample_observation():
    """反例矩阵在 z = (1, 1, 1, 0) 处的观测"""
    return counterexample_matrix().entries @ np.array([1.0, 1.0, 1.0, 0.0])


def test_parse_index_list():
    """测试 1 起下标解析"""
    assert parse_index_list("3,1,2") == [2, 0, 1], "转为 0 起并保持顺序"
    for text in ("", "0,1", "a,b"):
        with pytest.raises(InputFormatError):
            parse_index_list(text)


def test_recover_single_step(workdir, capsys):
    """测试单位矩阵一步恢复"""
    print("🧪 测试 recover 子命令...")
    capsys.readouterr()
    matrix = write_csv_file(workdir, "A.csv", np.eye(8))
    y = write_csv_file(workdir, "y.csv", np.eye(8)[2])
    code = run_cli(workdir, "recover", "--matrix", matrix, "--y", y)
    assert code == EXIT_OK, "残差为零时退出码为 0"
    result = json.loads(capsys.readouterr().out)
    assert result['converged'], "应该收敛"
    steps = result['trace']['steps']
    assert len(steps) == 1 and steps[0]['chosen'] == 3, "一步选中第 3 列（1 起）"
    assert result['constraint']['type'] == "box", "缺省约束为 ℝᴺ"
    print("✅ recover 子命令测试通过")


def test_recover_max_iter_not_met(workdir):
    """测试达到迭代上限但残差未达标时退出码为 2"""
    matrix = write_csv_file(workdir, "A.csv", np.eye(8))
    y = write_csv_file(workdir, "y.csv", np.ones(8))
    out = os.path.join(workdir, "trace.json")
    code = run_cli(workdir, "recover", "--matrix", matrix, "--y", y, "--max-iter", "5", "--out", out)
    assert code == EXIT_NOT_MET, "残差未达标时退出码为 2"
    result = read_json(out)
    assert len(result['trace']['steps']) == 5, "应该执行 5 步"
    assert result['trace']['terminated_by'] == "max_iter", "终止原因为迭代上限"
    assert abs(result['trace']['final_residual_sq'] - 3.0) <= 1e-12, "剩余 3 个坐标"


def test_recover_nonconvex_demo(workdir):
    """测试非凸演示集合的两步运行"""
    matrix = write_csv_file(workdir, "A.csv", np.array([[0.75, 1.0]]))
    y = write_csv_file(workdir, "y.csv", np.array([1.5]))
    out = os.path.join(workdir, "demo.json")
    code = run_cli(workdir, "recover", "--matrix", matrix, "--y", y, "--constraint", '{"type": "nonconvex-demo"}',
                   "--tol", "1e-8", "--out", out)
    assert code == EXIT_OK, "第二步后 Ax = y"
    steps = read_json(out)['trace']['steps']
    assert [s['chosen'] for s in steps] == [2, 1], "先选第 2 列，再选第 1 列"
    assert np.allclose(steps[0]["x"], [0.0, 1.0]), "第一步为 (0, 1)"


def test_recover_branch_all(workdir):
    """测试反例上的全分支枚举"""
    y = write_csv_file(workdir, "y.csv", counterexample_observation())
    out = os.path.join(workdir, "branches.json")
    code = run_cli(workdir, "recover", "--matrix", "counterexample", "--y", y, "--branch-all", "--out", out)
    assert code == EXIT_OK, "所有分支都应该收敛"
    traces = read_json(out)['traces']
    assert len(traces) >= 3, "第一步三路并列"
    assert all(sorted(t['steps'][-1]['J']) == [1, 2, 3] for t in traces), "每条分支都得到支撑 {1,2,3}"


def test_certify_counterexample(workdir, capsys):
    """测试反例支撑的认证"""
    print("🧪 测试 certify 子命令...")
    capsys.readouterr()
    code = run_cli(workdir, "certify", "--matrix", "counterexample", "--support", "1,2,3",
                   "--mode", "rational", "--samples", "3")
    assert code == EXIT_NOT_MET, "总判定不是 Holds 时退出码为 2"
    result = json.loads(capsys.readouterr().out)
    certificate = result['certificate']
    assert certificate['case'] == "b" and certificate['verdict'] == "UndecidedSampled", "情形 (b) 采样未决"
    erc = [r for r in certificate['reports'] if r['condition_id'] == "erc"][0]
    assert erc['numeric_margins']['erc_margin']['state'] == "boundary", "ERC 裕量落在边界"
    print("✅ certify 子命令测试通过")


def test_certify_orthonormal_holds(workdir):
    """测试正交列的认证成功"""
    matrix = write_csv_file(workdir, "A.csv", np.eye(4))
    code = run_cli(workdir, "certify", "--matrix", matrix, "--support", "1,2", "--constraint", "nonneg",
                   "--out", os.path.join(workdir, "cert.json"))
    assert code == EXIT_OK, "条件成立时退出码为 0"
    assert read_json(os.path.join(workdir, "cert.json"))['certificate']['verdict'] == "Holds", "判定成立"


def test_counterexample_command(workdir):
    """测试反例复现子命令"""
    print("🧪 测试 counterexample 子命令...")
    out = os.path.join(workdir, "counterexample.json")
    code = run_cli(workdir, "counterexample", "--grid", "3", "--out", out)
    assert code == EXIT_OK, "全部断言通过时退出码为 0"
    report = read_json(out)
    assert report['all_passed'] and len(report['items']) == 8, "8 项全部通过"
    print("✅ counterexample 子命令测试通过")


def test_montecarlo_byte_identical(workdir):
    """测试相同参数两次运行的 CSV 字节一致"""
    print("🧪 测试 montecarlo 子命令...")
    outputs = []
    for name, jobs in (("first.csv", "1"), ("second.csv", "3")):
        path = os.path.join(workdir, name)
        code = run_cli(workdir, "--jobs", jobs, "montecarlo", "--m", "8", "--n", "12", "--k", "1,2",
                       "--trials", "4", "--seed", "7", "--out", path)
        assert code == EXIT_OK, "实验正常完成"
        with open(path, 'rb') as f:
            outputs.append(f.read())
    assert outputs[0] == outputs[1], "输出应该逐字节一致"
    lines = outputs[0].decode('utf-8').strip().split("\n")
    assert len(lines) == 3, "表头加每个 K 一行"
    assert lines[0].startswith("m,N,K,constraint"), "表头列顺序"
    print("✅ montecarlo 子命令测试通过")


def test_constants_command(workdir):
    """测试恢复常数子命令"""
    matrix = write_csv_file(workdir, "A.csv", np.eye(4))
    out = os.path.join(workdir, "constants.json")
    code = run_cli(workdir, "constants", "--matrix", matrix, "--k", "1,2", "--out", out)
    assert code == EXIT_OK, "正交列满足常数不等式"
    result = read_json(out)
    assert result['K=2']['constants']['delta_hat'] == 0.0, "δ̂ = 0"

    code = run_cli(workdir, "constants", "--matrix", "counterexample", "--k", "3",
                   "--out", os.path.join(workdir, "counter.json"))
    assert code == EXIT_NOT_MET, "反例不满足常数不等式"


def test_input_errors(workdir):
    """测试输入错误的退出码"""
    print("🧪 测试输入错误...")
    assert run_cli(workdir, "recover") == EXIT_ERROR, "缺少必需参数"
    assert run_cli(workdir, "unknown-command") == EXIT_ERROR, "未知子命令"
    assert run_cli(workdir, "certify", "--matrix", "counterexample", "--support", "0,1") == EXIT_ERROR, \
        "下标从 1 开始"
    missing = os.path.join(workdir, "missing.csv")
    assert run_cli(workdir, "recover", "--matrix", missing, "--y", missing) == EXIT_ERROR, "文件不存在"

    matrix = write_csv_file(workdir, "A.csv", np.eye(3))
    y = write_csv_file(workdir, "y.csv", np.ones(4))
    assert run_cli(workdir, "recover", "--matrix", matrix, "--y", y) == EXIT_ERROR, "维数不一致"
    assert run_cli(workdir, "certify", "--matrix", matrix, "--support", "1", "--constraint",
                   '{"type": "simplex", "weights": [1, 1, 1]}') == EXIT_ERROR, "单纯形不支持固定支撑检查"
    print("✅ 输入错误测试通过")


if __name__ == "__main__":
    print("🧪 开始命令行测试...")
    pytest.main([__file__, "-v"])
