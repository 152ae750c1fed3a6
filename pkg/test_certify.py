#!/usr/bin/env python3
"""
恢复条件认证测试 - ERC、支配性、固定支撑、恢复常数、实例证书、反例复现
"""
import json
import math
from fractions import Fraction
from itertools import chain, combinations, product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmp_recovery.core.certify import (
    ABS, COUNTEREXAMPLE_SUPPORT, NECESSARY_AND_SUFFICIENT, SUFFICIENT, MarginState, MarginValue, Verdict,
    _h_vectors, check_fixed_support, condition_H_falsify, condition_H_margin, counterexample_grid,
    erc_norm, gram_table, instance_certificate, motzkin_dominance, perturbation_stability,
    recovery_constants, theta_hat_maximizer, verify_counterexample
)
from cmp_recovery.core.constraint import BoxProduct, WeightedSimplex, classify_cone
from cmp_recovery.core.error_handler import (
    BudgetExceededError, InputFormatError, NotIrreducibleError, NumericallyAmbiguousError,
    UnsupportedCombinationError
)
from cmp_recovery.core.linalg import counterexample_gram_exact, counterexample_matrix, random_unit_matrix
from cmp_recovery.core.pursuit import verify_exact_recovery

COUNTER_S = list(COUNTEREXAMPLE_SUPPORT)


def skewed_matrix():
    """第三列为前两列的等权组合，ERC 与支配性都不成立"""
    r = 1.0 / math.sqrt(2.0)
    return np.array([[1.0, 0.0, r], [0.0, 1.0, r]])


def test_margin_value_states():
    """测试裕量的三种状态"""
    assert MarginValue.of(0.5, 1e-9).state is MarginState.POSITIVE, "正裕量"
    assert MarginValue.of(-0.5, 1e-9).state is MarginState.NEGATIVE, "负裕量"
    assert MarginValue.of(1e-12, 1e-9).state is MarginState.BOUNDARY, "带内为边界"
    assert MarginValue.of(Fraction(0)).state is MarginState.BOUNDARY, "精确模式下 0 为边界"
    assert not MarginValue.of(Fraction(0)).holds, "边界不算成立"


def test_erc_norm_counterexample():
    """测试反例的 ERC 恰为 1"""
    print("🧪 测试 ERC 范数...")
    exact = erc_norm(None, COUNTER_S, theta=counterexample_gram_exact())
    assert isinstance(exact, Fraction) and exact == 1, "精确 Gram 下 ERC 恰为 1"
    value = erc_norm(counterexample_matrix(), COUNTER_S)
    assert abs(value - 1.0) <= 1e-12, "浮点 ERC 应该接近 1"
    assert erc_norm(np.eye(4), [0, 1]) == 0.0, "正交列的 ERC 为 0"
    assert erc_norm(skewed_matrix(), [0, 1]) > 1.4, "等权组合列的列和为 √2"
    with pytest.raises(InputFormatError):
        erc_norm(np.eye(3), [])
    with pytest.raises(InputFormatError):
        gram_table(np.eye(3), mode="decimal")
    print("✅ ERC 范数测试通过")


def test_motzkin_dominance_trivial_failure():
    """测试 P、Q 完全相同时支配性不成立"""
    report = motzkin_dominance([[1, 0]], [ABS], [[1, 0]], [ABS])
    assert report.verdict is Verdict.FAILS, "相同的行不能严格支配"
    v = report.witness['v']
    assert all(value >= 1 for value in v), "违例向量在正象限内"
    assert report.witness['gap'] == 0, "差值为 0"
    assert report.numeric_margins['dominance_gap'].state is MarginState.BOUNDARY, "违例落在边界"


def test_motzkin_dominance_counterexample():
    """测试反例第一步的支撑内支配性"""
    print("🧪 测试反例支配性...")
    T = counterexample_gram_exact()
    h = _h_vectors(T, COUNTER_S)
    report = motzkin_dominance(h[:3], [ABS] * 3, [h[3]], [ABS], sign_free=range(3))
    assert report.verdict is Verdict.HOLDS, "支撑内评分应该严格支配"
    assert report.details['systems_checked'] >= 8, "至少检查每个符号模式一次"
    print("✅ 反例支配性测试通过")


def test_fixed_support_counterexample():
    """测试反例支撑：情形 (b)，ERC 落在边界"""
    print("🧪 测试反例固定支撑...")
    cert = check_fixed_support(counterexample_matrix(), COUNTER_S, BoxProduct.free(4), mode="rational",
                               theta=counterexample_gram_exact(), n_samples=5)
    assert cert.case == "b" and cert.label == SUFFICIENT, "自由 |S| = 3 为情形 (b)"
    assert cert.report("rank").verdict is Verdict.HOLDS, "A_S 列满秩"
    erc = cert.report("erc")
    assert erc.verdict is Verdict.FAILS, "ERC 不严格成立"
    assert erc.numeric_margins['erc_margin'].state is MarginState.BOUNDARY, "ERC 裕量恰为 0"
    assert erc.numeric_margins['erc_margin'].value == 0, "精确模式裕量为 0"
    assert cert.report("claim_step1").verdict is Verdict.HOLDS, "第一步支配性成立"
    assert cert.verdict is Verdict.UNDECIDED_SAMPLED, "充分条件不满足且采样未发现失败"

    shown = cert.to_dict()
    json.dumps(shown)
    assert shown['support'] == [1, 2, 3], "序列化下标从 1 开始"

    floating = erc_norm(counterexample_matrix(), COUNTER_S)
    assert MarginValue.of(1.0 - floating, 1e-9).state is MarginState.BOUNDARY, "浮点模式下 ERC 裕量也在边界带内"
    print("✅ 反例固定支撑测试通过")


@pytest.mark.parametrize("n,S,P,case", [
    (4, [0, 1], BoxProduct.free(4), "a"),
    (4, [0, 1], BoxProduct.nonneg(4), "c"),
    (4, [0, 1, 2], BoxProduct.nonneg(4), "d"),
    (5, [0, 1, 2, 3], BoxProduct.nonneg(5), "e"),
    (4, [0, 1], BoxProduct(["-inf", 0, 0, "-inf"], ["inf", "inf", "inf", "inf"]), "f"),
])
def test_fixed_support_orthonormal_holds(n, S, P, case):
    """测试正交列时各情形都成立"""
    cert = check_fixed_support(np.eye(n), S, P)
    assert cert.case == case, f"应该分派到情形 ({case})"
    assert cert.verdict is Verdict.HOLDS, f"情形 ({case}) 在正交列下应该成立"
    assert all(r.verdict is Verdict.HOLDS for r in cert.reports), "每一项条件都应该成立"


def test_fixed_support_failure_matches_simulation():
    """测试支配性失败与追踪模拟一致"""
    print("🧪 测试固定支撑失败情形...")
    A = skewed_matrix()
    cert = check_fixed_support(A, [0, 1], BoxProduct.free(3))
    assert cert.case == "a" and cert.label == NECESSARY_AND_SUFFICIENT, "自由 |S| = 2 为情形 (a)"
    dominance = cert.report("ii_dominance")
    assert dominance.verdict is Verdict.FAILS, "第三列的评分更大"
    assert dominance.witness["gap"] <= 1e-9, "违例向量处差值不为正"
    assert cert.verdict is Verdict.FAILS, "必要条件失败时总判定失败"

    verdict = verify_exact_recovery(A, np.array([1.0, 1.0, 0.0]), BoxProduct.free(3))
    assert not verdict.support_recovered, "模拟也应该选错列"
    print("✅ 固定支撑失败情形测试通过")


def test_fixed_support_parallel_consistent():
    """测试并发检查与串行检查的结果一致"""
    rng = np.random.default_rng(3)
    A = random_unit_matrix(12, 6, rng).entries
    serial = check_fixed_support(A, [0, 2, 4], BoxProduct.nonneg(6))
    parallel = check_fixed_support(A, [0, 2, 4], BoxProduct.nonneg(6), max_workers=3)
    assert [r.condition_id for r in serial.reports] == [r.condition_id for r in parallel.reports], \
        "报告顺序应该一致"
    assert [r.verdict for r in serial.reports] == [r.verdict for r in parallel.reports], "各项判定应该一致"
    assert serial.verdict is parallel.verdict, "总判定应该一致"


def test_fixed_support_errors():
    """测试不支持的约束组合"""
    with pytest.raises(UnsupportedCombinationError):
        check_fixed_support(np.eye(3), [0, 1], WeightedSimplex([1.0, 1.0, 1.0]))
    with pytest.raises(UnsupportedCombinationError):
        check_fixed_support(np.eye(3), [0, 1], BoxProduct([0, 0, 0], ["inf", 0, "inf"]))
    with pytest.raises(UnsupportedCombinationError):
        check_fixed_support(np.eye(3), [0, 1], BoxProduct([-1, -1, -1], [1, 1, 1]))
    with pytest.raises(InputFormatError):
        check_fixed_support(np.eye(3), [0, 5], BoxProduct.free(3))
    with pytest.raises(BudgetExceededError):
        check_fixed_support(np.eye(14), list(range(13)), BoxProduct.nonneg(14))


@given(seed=st.integers(min_value=0, max_value=10 ** 6))
@settings(max_examples=15, deadline=None)
def test_erc_implies_pair_dominance(seed):
    """属性测试：自由 |S| = 2 时 ERC 严格成立蕴含总判定成立"""
    rng = np.random.default_rng(seed)
    A = random_unit_matrix(10, 8, rng).entries
    cert = check_fixed_support(A, [0, 1], BoxProduct.free(8))
    if cert.report("erc").numeric_margins['erc_margin'].state is MarginState.POSITIVE:
        assert cert.verdict is Verdict.HOLDS, "ERC 是充分条件"


GRID_LEVELS = np.linspace(0.25, 5.0, 20)

# 情形 → (约束, 支撑, 可取负号的支撑坐标, 是否利用 z 与 −z 等价)
SIMULATION_CASES = {
    "a": (BoxProduct.free(5), [0, 1], {0, 1}, True),
    "c": (BoxProduct.nonneg(5), [0, 1], set(), False),
    "d": (BoxProduct.nonneg(5), [0, 1, 2], set(), False),
    "f": (BoxProduct(["-inf", 0, 0, "-inf", 0], ["inf"] * 5), [0, 1], {0}, False),
}


def grid_targets(n, support, signed, mirror=False):
    """支撑上每坐标 20 点的目标网格，signed 中的坐标取 ±(0, 5]"""
    axes = []
    for k, s in enumerate(support):
        if s in signed and not (mirror and k == 0):
            axes.append(np.concatenate([-GRID_LEVELS[::-1], GRID_LEVELS]))
        else:
            axes.append(GRID_LEVELS)
    for values in product(*axes):
        z = np.zeros(n)
        z[support] = values
        yield z


def first_recovery_failure(A, P, targets):
    """返回第一个未能精确恢复的目标，全部恢复时返回 None"""
    for z in targets:
        verdict = verify_exact_recovery(A, z, P)
        if not (verdict.support_recovered and verdict.vector_recovered):
            return z
    return None


def float_margins(cert):
    return [float(margin.value) for report in cert.reports for margin in report.numeric_margins.values()]


def step1_witness_target(cert, n):
    """第一步支配性的违例 v 就是支撑上的目标向量"""
    report = next((r for r in cert.reports if r.condition_id == "ii_dominance"), None)
    if report is None or report.verdict is not Verdict.FAILS or 'v' not in (report.witness or {}):
        return None
    z = np.zeros(n)
    z[list(cert.support)] = [float(v) for v in report.witness['v']]
    return z


@pytest.mark.parametrize("case", sorted(SIMULATION_CASES))
def test_verdict_matches_grid_simulation(case):
    """测试充要情形的判定与网格模拟一致：成立则网格全部恢复，不成立则能找到失败或边界并列"""
    print(f"🧪 测试情形 ({case}) 的判定与模拟一致性...")
    P, support, signed, mirror = SIMULATION_CASES[case]
    holds = fails = 0
    disagreements = []
    for seed in range(200):
        A = random_unit_matrix(4, 5, np.random.default_rng([seed, 17])).entries
        try:
            cert = check_fixed_support(A, support, P)
        except NumericallyAmbiguousError:
            continue
        assert cert.case == case and cert.label == NECESSARY_AND_SUFFICIENT, "情形分派应该正确"
        on_boundary = any(abs(value) <= 1e-6 for value in float_margins(cert))

        if cert.verdict is Verdict.HOLDS:
            if on_boundary:
                continue
            holds += 1
            failure = first_recovery_failure(A, P, grid_targets(5, support, signed, mirror))
            if failure is not None:
                disagreements.append((seed, "Holds", failure[support].tolist()))
        else:
            fails += 1
            if on_boundary:
                continue
            targets = grid_targets(5, support, signed, mirror)
            witness = step1_witness_target(cert, 5)
            if witness is not None:
                targets = chain([witness], targets)
            if first_recovery_failure(A, P, targets) is None:
                disagreements.append((seed, "Fails", None))

    assert not disagreements, f"情形 ({case}) 判定与模拟不一致: {disagreements[:5]}"
    assert holds > 0 and fails > 0, f"两个方向都应该被检查到（成立 {holds}，不成立 {fails}）"
    print(f"✅ 情形 ({case}) 一致：成立 {holds} 例，不成立 {fails} 例")


def test_recovery_constants_orthonormal():
    """测试正交列的恢复常数"""
    print("🧪 测试恢复常数...")
    constants = recovery_constants(np.eye(4), 2)
    assert constants.delta_hat == 0.0 and constants.theta_hat == 0.0, "正交列时两个常数都是 0"
    assert constants.satisfied and constants.margin == 1.0, "常数不等式成立"
    assert abs(constants.theta_hat_literal - 1.0) <= 1e-12, "字面定义包含 j 自身"
    assert constants.to_dict()['K'] == 2, "序列化包含 K"
    print("✅ 恢复常数测试通过")


def test_recovery_constants_counterexample():
    """测试反例的 δ̂₃ 等于支撑 Gram 最小特征值的补"""
    theta = counterexample_matrix().entries.T @ counterexample_matrix().entries
    min_eig = min(np.linalg.eigvalsh(theta[np.ix_(S, S)])[0] for S in map(list, combinations(range(4), 3)))
    constants = recovery_constants(counterexample_matrix(), 3)
    assert abs(constants.delta_hat - (1.0 - min_eig)) <= 1e-10, "δ̂₃ = 1 − min λ_min"
    assert constants.delta_hat >= 2.0 / 3.0 - 1e-10, "支撑 {1,2,3} 的最小特征值是 1/3"
    assert not constants.satisfied, "反例不满足常数不等式"


def test_theta_hat_maximizer_attains_value():
    """测试 θ̂ 的最大化方向取到闭式值，随机方向不超过它"""
    rng = np.random.default_rng(8)
    A = random_unit_matrix(8, 14, rng).entries
    K = 2
    constants = recovery_constants(A, K)
    j, x = theta_hat_maximizer(A, K)
    assert x[j] == 0.0, "j 不在 supp(x) 内"
    assert np.count_nonzero(x) <= K, "x 是 K 稀疏的"
    value = abs(float((A @ x) @ A[:, j])) / float(np.linalg.norm(x))
    assert abs(value - constants.theta_hat) <= 1e-12, "最大化方向取到 θ̂"

    for _ in range(500):
        j = int(rng.integers(14))
        support = rng.choice([i for i in range(14) if i != j], size=K, replace=False)
        x = np.zeros(14)
        x[support] = rng.standard_normal(K)
        value = abs(float((A @ x) @ A[:, j])) / float(np.linalg.norm(x))
        assert value <= constants.theta_hat + 1e-12, "随机方向不超过 θ̂"


def test_recovery_constants_errors():
    """测试恢复常数的输入检查"""
    with pytest.raises(InputFormatError):
        recovery_constants(2.0 * np.eye(3), 1)
    with pytest.raises(InputFormatError):
        recovery_constants(np.eye(3), 4)
    with pytest.raises(BudgetExceededError):
        recovery_constants(np.eye(4), 2, budget=3)


def perturbed_identity(seed, n=8, noise=0.05):
    """单位阵加小扰动后列归一化"""
    rng = np.random.default_rng([seed, 62])
    A = np.eye(n) + noise * rng.standard_normal((n, n))
    return A / np.linalg.norm(A, axis=0)


@pytest.mark.parametrize("cone", ["free", "nonneg"])
def test_constants_satisfied_admit_no_condition_H_witness(cone):
    """测试常数不等式成立时条件 (H) 采样找不到违例"""
    print(f"🧪 测试常数不等式与条件 (H) 的一致性（{cone}）...")
    P = BoxProduct.free(8) if cone == "free" else BoxProduct.nonneg(8)
    classification = classify_cone(P)
    checked = 0
    for seed in range(6):
        A = perturbed_identity(seed)
        constants = recovery_constants(A, 2, classification)
        if not constants.satisfied:
            continue
        checked += 1
        report = condition_H_falsify(A, P, 2, n_samples=10_000, seed=seed)
        assert report.verdict is not Verdict.FAILS, f"种子 {seed} 满足常数不等式却找到违例 {report.witness}"
    assert checked >= 5, "小扰动单位阵应该满足常数不等式"
    print("✅ 常数不等式与条件 (H) 一致性测试通过")


def rounded_exact_gram(A):
    """Gram 表按分母 ≤ 10⁶ 取有理近似，对角为 1"""
    T = A.T @ A
    n = T.shape[0]
    table = [[Fraction(1) if i == j else None for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            table[i][j] = table[j][i] = Fraction(float(T[i, j])).limit_denominator(10 ** 6)
    return table


@given(seed=st.integers(min_value=0, max_value=10 ** 6), case=st.sampled_from(sorted(SIMULATION_CASES)))
@settings(max_examples=60, deadline=None)
def test_float_and_rational_verdicts_agree(seed, case):
    """属性测试：同一有理 Gram 表上，浮点裕量超过 1e-7 的判定与有理模式一致"""
    P, support, _, _ = SIMULATION_CASES[case]
    A = random_unit_matrix(4, 5, np.random.default_rng(seed)).entries
    exact_table = rounded_exact_gram(A)
    float_table = [[float(value) for value in row] for row in exact_table]
    try:
        float_cert = check_fixed_support(A, support, P, theta=float_table)
    except NumericallyAmbiguousError:
        return
    exact_cert = check_fixed_support(A, support, P, mode="rational", theta=exact_table)
    if any(abs(float(m.value)) <= 1e-7 for m in float_cert.reports[0].numeric_margins.values()):
        return

    clear = True
    for report in float_cert.reports:
        margins = [abs(float(m.value)) for m in report.numeric_margins.values()]
        if any(value <= 1e-7 for value in margins):
            clear = False
            continue
        assert exact_cert.report(report.condition_id).verdict is report.verdict, \
            f"{report.condition_id} 的浮点与有理判定不一致"
    if clear:
        assert exact_cert.verdict is float_cert.verdict, "总判定应该一致"


def test_condition_H_margin_tie():
    """测试反例上 v = 0 处四个评分相等，裕量为边界"""
    report = condition_H_margin(counterexample_matrix(), BoxProduct.free(4), [1.0, 1.0, 0.0, 0.0], [])
    margin = report.numeric_margins['margin']
    assert margin.state is MarginState.BOUNDARY, "支撑内外的最小评分相等"
    assert report.witness['J'] == [], "J 为空"
    with pytest.raises(InputFormatError):
        condition_H_margin(np.eye(3), BoxProduct.free(3), [1.0, 0.0, 0.0], [0])


def test_condition_H_falsify_orthonormal():
    """测试正交列时采样找不到违例"""
    print("🧪 测试条件 (H) 采样...")
    report = condition_H_falsify(np.eye(4), BoxProduct.free(4), 2, n_samples=100, seed=1)
    assert report.verdict is Verdict.UNDECIDED_SAMPLED, "采样不能证明，只能给出未决"
    assert report.details['subsets_checked'] > 0, "应该检查过若干 (u, J)"
    assert report.numeric_margins['min_margin'].value > 0, "最小裕量为正"

    failing = condition_H_falsify(skewed_matrix(), BoxProduct.free(3), 2, n_samples=50, seed=2,
                                  support=[0, 1])
    assert failing.verdict is Verdict.FAILS, "等权组合列应该出现违例"
    assert failing.witness is not None and 'u' in failing.witness, "违例附带 (u, J, v)"
    print("✅ 条件 (H) 采样测试通过")


def test_instance_certificate_free_and_nonneg():
    """测试自由与非负约束下的下标划分"""
    print("🧪 测试实例证书...")
    rng = np.random.default_rng(21)
    A = random_unit_matrix(12, 10, rng).entries
    u = np.zeros(10)
    u[[1, 4, 7]] = [0.8, 1.3, 0.5]

    free = instance_certificate(A, BoxProduct.free(10), u, [4])
    assert free.index_sets['L_uc'] == (1, 7), "自由坐标都属于 L_uc"
    assert free.shrink_factor == 1.0, "没有截断"
    assert free.c1_satisfied, "C1 成立"

    nonneg = instance_certificate(A, BoxProduct.nonneg(10), u, [])
    assert nonneg.index_sets['L_zero_a'] == (1, 4, 7), "v_j = 0 时区间下端为 0"
    assert all(not nonneg.index_sets[name] for name in ("L0", "L_minus_a", "L_plus_b", "L_zero_b", "L_uc")), \
        "其余类别为空"
    assert nonneg.c1_satisfied, "u > 0 时 C1 成立"
    json.dumps(nonneg.to_dict())
    print("✅ 实例证书测试通过")


def test_instance_certificate_truncation():
    """测试盒约束上界截断时的收缩因子"""
    A = np.array([[1.0, 0.5], [0.0, math.sqrt(0.75)]])
    P = BoxProduct([-1, -1], [1, 1])
    cert = instance_certificate(A, P, [1.0, 1.0], [])
    assert cert.index_sets['L_plus_b'] == (0, 1), "t̃ = 1.5 超过上端 1"
    assert abs(cert.shrink_factor - math.sqrt(1.0 / 1.5)) <= 1e-12, "收缩因子为 √(b/t̃)"
    assert not cert.c2_satisfied, "强相关列不满足 C2"
    with pytest.raises(NotIrreducibleError):
        instance_certificate(A, BoxProduct([0, 0], ["inf", 0]), [1.0, 0.0], [])


def test_perturbation_stability_orthonormal():
    """测试正交列在小扰动下保持常数不等式"""
    print("🧪 测试扰动稳定性...")
    report = perturbation_stability(np.eye(8), 2, eta_grid=[0.0, 1e-4], trials=5, seed=4)
    assert report.base.satisfied, "未扰动时成立"
    assert report.certified_radius > 0, "认证半径为正"
    assert len(report.points) == 3, "网格加入认证半径"
    assert report.points[0].eta == 0.0 and report.points[0].trials == 1, "η = 0 只算一次"
    assert all(p.satisfied_fraction == 1.0 for p in report.points), "小扰动下都成立"
    assert report.largest_stable_eta == 1e-4, "最大稳定幅度为网格最大值"
    assert report.radius_ok, "认证半径内成立"
    json.dumps(report.to_dict())
    print("✅ 扰动稳定性测试通过")


def test_counterexample_grid():
    """测试反例网格不含 0"""
    points = counterexample_grid(5)
    assert len(points) == 4 ** 3, "每坐标 4 个非零值"
    assert all(np.all(p != 0.0) for p in points), "网格点不含 0"


def test_verify_counterexample():
    """测试反例复现的全部断言"""
    print("🧪 测试反例复现...")
    report = verify_counterexample(grid_points=3, extension=(6, 6))
    assert report.all_passed, "全部断言应该通过"
    assert [item.item for item in report.items] == list(range(1, 9)), "共 8 项"
    assert report.item(3).details['erc_exact'] == 1, "精确 ERC 为 1"
    tie = report.item(7).details['tie_scores']
    assert tie == [Fraction(2, 3)] * 4, "并列评分都是 2/3"
    assert report.item(8).details['shape'] == [6, 6], "扩展矩阵尺寸"
    json.dumps(report.to_dict())
    print("✅ 反例复现测试通过")


if __name__ == "__main__":
    print("🧪 开始恢复条件认证测试...")
    test_margin_value_states()
    test_erc_norm_counterexample()
    test_motzkin_dominance_trivial_failure()
    test_motzkin_dominance_counterexample()
    test_fixed_support_counterexample()
    test_fixed_support_orthonormal_holds(4, [0, 1], BoxProduct.free(4), "a")
    test_fixed_support_failure_matches_simulation()
    test_fixed_support_parallel_consistent()
    test_fixed_support_errors()
    test_erc_implies_pair_dominance()
    for case in sorted(SIMULATION_CASES):
        test_verdict_matches_grid_simulation(case)
    test_recovery_constants_orthonormal()
    test_recovery_constants_counterexample()
    test_theta_hat_maximizer_attains_value()
    test_recovery_constants_errors()
    test_constants_satisfied_admit_no_condition_H_witness("free")
    test_constants_satisfied_admit_no_condition_H_witness("nonneg")
    test_float_and_rational_verdicts_agree()
    test_condition_H_margin_tie()
    test_condition_H_falsify_orthonormal()
    test_instance_certificate_free_and_nonneg()
    test_instance_certificate_truncation()
    test_perturbation_stability_orthonormal()
    test_counterexample_grid()
    test_verify_counterexample()
    print("\n🎉 所有恢复条件认证测试通过！")
