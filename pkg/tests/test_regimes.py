from decimal import Decimal, getcontext

import numpy
import pytest
from nlallee.errors import DomainError
from nlallee.model import ModelParams
from nlallee.regimes import (
    Prediction,
    RegimeCell,
    alpha_sharp,
    classify_regime,
    extinction_threshold,
    growth_rate_bound,
    lambda1_dirichlet,
    predict_outcome,
    thresholds,
)
from nlallee.spectral import EigenPair, solve_eigen

SUPERCRITICAL = ModelParams(d=1.0, alpha=5e-3, theta_min=0.2, theta_max=0.9)

PI = Decimal("3.14159265358979323846264338327950288419716939937510")


def _alpha_sharp_decimal(M, theta_min, theta_max):
    """Closed form evaluated with 50 significant digits."""
    getcontext().prec = 50
    M, t_min, t_max = Decimal(str(M)), Decimal(str(theta_min)), Decimal(str(theta_max))
    eta = min((t_max + t_min - 1) / 10, t_min / 4)
    m1 = M + 1
    bracket = (
        m1 * (1 + PI) * t_max
        - m1 * t_min
        + PI / 4
        + (m1 ** 2 / (eta ** 2 * Decimal(3).sqrt())) * ((t_max ** 3 - t_min ** 3) * (t_max - t_min)).sqrt()
    )
    return (t_max - t_min) ** 2 / PI ** 3 * bracket


def test_alpha_sharp_reference_value():
    value = alpha_sharp(1.0, SUPERCRITICAL)
    assert 258.0 <= value <= 261.0
    assert value == pytest.approx(259.4, abs=0.1)


@pytest.mark.parametrize(
    "M, theta_min, theta_max",
    [(1.0, 0.2, 0.9), (2.0, 0.2, 0.9), (0.5, 0.3, 0.8), (3.0, 0.45, 0.95), (1.0, 0.1, 0.95)],
)
def test_alpha_sharp_matches_high_precision(M, theta_min, theta_max):
    params = ModelParams(d=1.0, alpha=1e-3, theta_min=theta_min, theta_max=theta_max)
    expected = float(_alpha_sharp_decimal(M, theta_min, theta_max))
    assert alpha_sharp(M, params) == pytest.approx(expected, rel=1e-10)


def test_alpha_sharp_none_outside_supercritical():
    assert alpha_sharp(1.0, ModelParams(d=1.0, alpha=1e-3, theta_min=0.2, theta_max=0.8)) is None
    assert alpha_sharp(1.0, ModelParams(d=1.0, alpha=1e-3, theta_min=0.1, theta_max=0.5)) is None


def test_alpha_sharp_none_for_negative_theta_min():
    # theta_max < 1 keeps theta_min + theta_max below 1 whenever theta_min <= 0
    assert alpha_sharp(1.0, ModelParams(d=1.0, alpha=1e-3, theta_min=-0.1, theta_max=0.99)) is None


def test_alpha_sharp_needs_positive_M():
    with pytest.raises(DomainError):
        alpha_sharp(0.0, SUPERCRITICAL)


def test_lambda1_dirichlet():
    assert lambda1_dirichlet(SUPERCRITICAL) == pytest.approx(numpy.pi ** 2 / 0.7 ** 2, rel=1e-14)


def test_growth_rate_bound():
    assert growth_rate_bound(SUPERCRITICAL) == pytest.approx(0.16)


class TestClassifyRegime:
    def test_systematic_extinction(self):
        params = ModelParams(d=1.0, alpha=5e-3, theta_min=0.55, theta_max=0.9)
        assert classify_regime(params, solve_eigen(params)).cell == RegimeCell.SYSTEMATIC_EXTINCTION

    def test_systematic_persistence(self):
        params = ModelParams(d=1.0, alpha=5e-3, theta_min=-0.6, theta_max=0.5)
        report = classify_regime(params, solve_eigen(params))
        assert report.cell == RegimeCell.SYSTEMATIC_PERSISTENCE
        assert report.lam < 0

    def test_supercritical_split(self):
        report = classify_regime(SUPERCRITICAL, solve_eigen(SUPERCRITICAL))
        assert report.cell == RegimeCell.SUPERCRITICAL_SPLIT
        assert report.alpha_sharp == pytest.approx(alpha_sharp(1.0, SUPERCRITICAL))
        assert "alpha_sharp" in str(report)

    def test_subcritical_conditional(self):
        params = ModelParams(d=1.0, alpha=5e-3, theta_min=0.2, theta_max=0.7)
        assert classify_regime(params, solve_eigen(params)).cell == RegimeCell.CONDITIONAL_EP

    def test_critical_conjectured(self):
        params = ModelParams(d=1.0, alpha=5e-3, theta_min=0.2, theta_max=0.8)
        assert classify_regime(params, solve_eigen(params)).cell == RegimeCell.CONDITIONAL_EP_CONJECTURED

    def test_negative_theta_min_with_positive_lambda(self):
        params = ModelParams(d=1.0, alpha=0.5, theta_min=-0.1, theta_max=0.8)
        pair = solve_eigen(params)
        assert pair.lam > 0
        assert classify_regime(params, pair).cell == RegimeCell.CONDITIONAL_EP

    def test_dead_band_is_reported(self):
        lam = solve_eigen(SUPERCRITICAL).lam
        params = SUPERCRITICAL.shifted(-lam)
        report = classify_regime(params, solve_eigen(params))
        assert report.indeterminate
        assert report.cell == RegimeCell.CONDITIONAL_EP
        assert any("Indeterminate" in note for note in report.notes)

    def test_dead_band_with_even_ntheta(self):
        lam = solve_eigen(SUPERCRITICAL, 512).lam
        params = SUPERCRITICAL.shifted(-lam)
        pair = solve_eigen(params, 512)
        assert abs(pair.lam) < 10.0 * pair.dtheta ** 2
        report = classify_regime(params, pair)
        assert report.indeterminate
        assert any("dead-band" in note for note in report.notes)
        assert any("Indeterminate" in note for note in report.notes)


def _table_consistency(count, ntheta):
    rng = numpy.random.default_rng(7)
    for _ in range(count):
        theta_min = rng.uniform(-1.0, 0.9)
        theta_max = rng.uniform(theta_min + 0.05, 0.999) if theta_min < 0.949 else 0.999
        params = ModelParams(d=1.0, alpha=10.0 ** rng.uniform(-4.0, 1.0), theta_min=theta_min, theta_max=theta_max)
        pair = solve_eigen(params, ntheta)
        report = classify_regime(params, pair)
        assert isinstance(report.cell, RegimeCell)
        if params.theta_min >= 0:
            assert pair.lam > 0
        if params.theta_min + params.theta_max <= 0:
            assert pair.lam < 0


def test_table_consistency():
    _table_consistency(300, 129)


@pytest.mark.slow
def test_table_consistency_full():
    _table_consistency(10000, 129)


class TestThresholds:
    def setup_method(self, method):
        self.pair = solve_eigen(SUPERCRITICAL)

    def test_extinction_threshold_formula(self):
        expected = self.pair.lam * self.pair.phi.min() / (0.7 * 1.9)
        assert extinction_threshold(self.pair, SUPERCRITICAL) == pytest.approx(expected)

    def test_extinction_threshold_linear_in_lambda(self):
        doubled = EigenPair(
            lam=2.0 * self.pair.lam, phi=self.pair.phi, alpha=self.pair.alpha, params=SUPERCRITICAL
        )
        assert extinction_threshold(doubled, SUPERCRITICAL) == pytest.approx(
            2.0 * extinction_threshold(self.pair, SUPERCRITICAL)
        )

    def test_no_threshold_when_lambda_negative(self):
        params = ModelParams(d=1.0, alpha=5e-3, theta_min=-0.6, theta_max=0.5)
        assert extinction_threshold(solve_eigen(params), params) is None

    def test_record(self):
        record = thresholds(SUPERCRITICAL, self.pair)
        assert record.u0_sup_bound > 0
        assert record.alpha_sharp == pytest.approx(alpha_sharp(1.0, SUPERCRITICAL))
        assert record.eta_star == pytest.approx(0.01)
        assert record.lambda1_dirichlet == pytest.approx(numpy.pi ** 2 / 0.49)


class TestPredictOutcome:
    def setup_method(self, method):
        self.pair = solve_eigen(SUPERCRITICAL)

    def test_persistence_when_lambda_negative(self):
        params = ModelParams(d=1.0, alpha=5e-3, theta_min=-0.6, theta_max=0.5)
        prediction = predict_outcome(params, solve_eigen(params), u0_sup=1e-6, M=1.0)
        assert prediction.outcome == Prediction.GUARANTEED_PERSISTENCE

    def test_small_data_extinction(self):
        bound = extinction_threshold(self.pair, SUPERCRITICAL)
        prediction = predict_outcome(SUPERCRITICAL, self.pair, u0_sup=0.5 * bound, M=0.1)
        assert prediction.outcome == Prediction.GUARANTEED_EXTINCTION

    def test_large_mutation_extinction(self):
        prediction = predict_outcome(SUPERCRITICAL, self.pair, u0_sup=1.0 / 0.7, M=1.0, alpha=300.0)
        assert prediction.outcome == Prediction.GUARANTEED_EXTINCTION

    def test_unknown(self):
        prediction = predict_outcome(SUPERCRITICAL, self.pair, u0_sup=1.0 / 0.7, M=1.0)
        assert prediction.outcome == Prediction.UNKNOWN
        assert prediction.notes

    def test_theta_min_above_half(self):
        params = ModelParams(d=1.0, alpha=5e-3, theta_min=0.55, theta_max=0.9)
        prediction = predict_outcome(params, solve_eigen(params), u0_sup=10.0, M=10.0)
        assert prediction.outcome == Prediction.GUARANTEED_EXTINCTION
