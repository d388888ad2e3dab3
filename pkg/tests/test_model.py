import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import contract_forge.model as m
from contract_forge import (
    ExplicitSetting,
    InputError,
    Linear,
    Mixed,
    ProductSetting,
    Separable,
    Sparse,
    agent_utility,
    best_response,
    expected_payment,
    expected_reward,
    ic_slack,
    is_normalized,
    outcome_probability,
    product_to_explicit,
    verify_delta_ic,
)
from contract_forge.errors import CapacityError


@pytest.fixture
def two_action():
    # Two actions over one item: free action succeeds w.p. 0.1, costly one always.
    return ProductSetting(costs=(0.0, 8.1), rewards=(10.0,), probs=((0.1,), (1.0,)))


def test_expected_reward(two_action):
    assert expected_reward(two_action, 0) == pytest.approx(1.0)
    assert expected_reward(two_action, 1) == pytest.approx(10.0)


def test_tie_break_favors_principal(two_action):
    # Paying 9.0 on the success outcome makes both actions give utility 0.9;
    # the principal nets 1.0 from action 1 vs 0.1 from action 0.
    con = Sparse(payments={1: 9.0})
    assert agent_utility(two_action, 0, con) == pytest.approx(0.9)
    assert agent_utility(two_action, 1, con) == pytest.approx(0.9)
    choice = best_response(two_action, con)
    assert choice.action == 1
    assert choice.payoff == pytest.approx(1.0)
    assert verify_delta_ic(two_action, con, 1, 0.0, "add")


def test_ic_slack_signs(two_action):
    con = Sparse(payments={1: 8.0})
    # action 1 nets 8 - 8.1 < 0.8 from action 0, so IC fails there
    assert ic_slack(two_action, con, 1) < 0
    assert ic_slack(two_action, con, 0) > 0
    # multiplicative slack scales with payments and costs together
    s1 = ic_slack(two_action, con, 1, 0.05, "mult")
    scaled = ProductSetting(
        costs=(0.0, 16.2), rewards=(20.0,), probs=two_action.probs
    )
    s2 = ic_slack(scaled, Sparse(payments={1: 16.0}), 1, 0.05, "mult")
    assert s2 == pytest.approx(2 * s1)


def test_best_response_zero_ic():
    setting = ProductSetting(
        costs=(0.0, 0.2, 0.5),
        rewards=(0.4, 0.6),
        probs=((0.1, 0.2), (0.5, 0.4), (0.8, 0.9)),
    )
    for alpha in (0.0, 0.3, 0.7, 1.0):
        choice = best_response(setting, Linear(alpha=alpha))
        assert ic_slack(setting, Linear(alpha=alpha), choice.action) >= -1e-9


def test_outcome_probability_product():
    setting = ProductSetting(costs=(0.0,), rewards=(1.0, 1.0), probs=((0.3, 0.6),))
    assert outcome_probability(setting, 0, 0b00) == pytest.approx(0.7 * 0.4)
    assert outcome_probability(setting, 0, 0b01) == pytest.approx(0.3 * 0.4)
    assert outcome_probability(setting, 0, 0b10) == pytest.approx(0.7 * 0.6)
    assert outcome_probability(setting, 0, 0b11) == pytest.approx(0.3 * 0.6)


@given(
    st.lists(st.floats(0.01, 0.99), min_size=1, max_size=6),
)
def test_outcome_probabilities_sum_to_one(qs):
    setting = ProductSetting(costs=(0.0,), rewards=tuple(1.0 for _ in qs), probs=(tuple(qs),))
    total = sum(outcome_probability(setting, 0, s) for s in range(1 << len(qs)))
    assert total == pytest.approx(1.0)


def test_product_to_explicit_matches(two_action):
    explicit = product_to_explicit(two_action)
    assert explicit.outcome_rewards == (0.0, 10.0)
    assert explicit.dist[0] == pytest.approx((0.9, 0.1))
    assert explicit.dist[1] == pytest.approx((0.0, 1.0))
    con = Sparse(base=0.1, payments={1: 3.0})
    for i in range(2):
        assert expected_payment(explicit, i, con) == pytest.approx(
            expected_payment(two_action, i, con)
        )


def test_product_to_explicit_column_order():
    setting = ProductSetting(costs=(0.0,), rewards=(1.0, 2.0, 4.0), probs=((0.2, 0.5, 0.9),))
    explicit = product_to_explicit(setting)
    # column b carries the rewards of the items in bitmask b
    assert explicit.outcome_rewards == tuple(float(b & 1) + 2.0 * ((b >> 1) & 1) + 4.0 * ((b >> 2) & 1) for b in range(8))
    for b in range(8):
        assert explicit.dist[0][b] == pytest.approx(outcome_probability(setting, 0, b))


def test_product_to_explicit_capacity():
    big = ProductSetting(costs=(0.0,), rewards=tuple([1.0] * 21), probs=(tuple([0.5] * 21),))
    with pytest.raises(CapacityError):
        product_to_explicit(big)


def test_separable_payment_explicit_agrees():
    setting = ProductSetting(
        costs=(0.0, 0.1), rewards=(1.0, 1.0, 1.0), probs=((0.2, 0.5, 0.9), (0.4, 0.1, 0.7))
    )
    con = Separable(item_payments=(0.3, 0.0, 0.8))
    explicit = product_to_explicit(setting)
    for i in range(2):
        assert expected_payment(explicit, i, con) == pytest.approx(
            expected_payment(setting, i, con)
        )


def test_mixed_payment(two_action):
    con = Mixed(sparse=Sparse(base=0.2, payments={1: 1.0}), alpha=0.25)
    want = 0.2 + 1.0 * 0.1 + 0.25 * 1.0
    assert expected_payment(two_action, 0, con) == pytest.approx(want)


def test_is_normalized(two_action):
    assert not is_normalized(two_action)
    small = ProductSetting(costs=(0.0,), rewards=(0.5,), probs=((0.9,),))
    assert is_normalized(small)


def test_additive_unnormalized_warns(two_action):
    with pytest.warns(UserWarning):
        verify_delta_ic(two_action, Sparse(payments={1: 9.5}), 1, 0.1, "add")


def test_notion_aliases(two_action):
    con = Sparse(payments={1: 9.0})
    assert verify_delta_ic(two_action, con, 1, 0.0, "mult")
    assert verify_delta_ic(two_action, con, 1, 0.0, "multiplicative")
    with pytest.raises(InputError):
        ic_slack(two_action, con, 1, 0.0, "nope")


def test_validation_errors():
    with pytest.raises(InputError):
        ProductSetting(costs=(0.0,), rewards=(1.0,), probs=((1.5,),))
    with pytest.raises(InputError):
        ProductSetting(costs=(-1.0,), rewards=(1.0,), probs=((0.5,),))
    with pytest.raises(InputError):
        # cost exceeds expected reward: negative welfare
        ProductSetting(costs=(0.0, 5.0), rewards=(1.0,), probs=((0.1,), (0.9,)))
    with pytest.raises(InputError):
        ExplicitSetting(costs=(0.0,), outcome_rewards=(1.0, 2.0), dist=((0.5, 0.4),))
    with pytest.raises(InputError):
        Sparse(payments={1: -0.5})
    with pytest.raises(InputError):
        Linear(alpha=1.5)
    with pytest.raises(InputError):
        Separable(item_payments=(0.1, -0.2))


def test_sparse_drops_zero_payments():
    con = Sparse(payments={1: 0.0, 2: 3.0})
    assert con.payments == {2: 3.0}
    built = m.make_sparse(0.0, {1: 1e-15, 3: 0.4})
    assert built.payments == {3: 0.4}


def test_outcome_items_round_trip():
    for mask in (0, 1, 0b1010, 0b11111):
        assert m.items_to_outcome(m.outcome_to_items(mask)) == mask


def test_setting_json_round_trip(two_action):
    data = json.loads(m.dumps(two_action))
    back = m.setting_from_dict(data)
    assert back == two_action
    explicit = product_to_explicit(two_action)
    back2 = m.setting_from_dict(json.loads(m.dumps(explicit)))
    assert back2 == explicit


def test_setting_json_requires_free_action():
    data = {"kind": "product", "costs": [0.5, 1.0], "rewards": [10.0], "probs": [[0.3], [0.6]]}
    with pytest.raises(InputError):
        m.setting_from_dict(data)
    setting = m.setting_from_dict(data, allow_no_free_action=True)
    assert setting.costs[0] == 0.5


def test_contract_json_round_trip():
    contracts = [
        Sparse(base=0.5, payments={0b101: 2.0, 0b1: 1.0}),
        Linear(alpha=0.4),
        Separable(item_payments=(0.1, 0.0, 0.3)),
        Mixed(sparse=Sparse(payments={3: 1.0}), alpha=0.2),
    ]
    for con in contracts:
        back = m.contract_from_dict(json.loads(m.dumps(con)))
        assert back == con


def test_contract_json_bad_kind():
    with pytest.raises(InputError):
        m.contract_from_dict({"kind": "affine"})
    with pytest.raises(InputError):
        m.contract_from_dict({"base": 1.0})


def test_min_nonzero_outcome_probability(two_action):
    # action 1 always succeeds, so its failure prob 0 is skipped
    assert m.min_nonzero_outcome_probability(two_action) == pytest.approx(0.1)


def test_agent_utility_explicit_matches_product(two_action):
    explicit = product_to_explicit(two_action)
    con = Sparse(payments={1: 9.0})
    for i in range(2):
        assert agent_utility(explicit, i, con) == pytest.approx(agent_utility(two_action, i, con))
