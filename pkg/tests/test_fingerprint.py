"""Fingerprint consistency testing and classification."""

import numpy as np
import pytest

from rankfit import (EmptyReferenceSet, InsufficientTokens, MissingUncertainty,
                     UnconvergedFit)
from rankfit.fingerprint import (FingerprintReference, classify,
                                 parameter_distance, sampling_reference,
                                 starter_references)
from rankfit.fingerprint import test_consistency as check_consistency
from rankfit.model import FitResult, MandelbrotParams


def make_fit(q, s, sd_q=0.05, sd_s=0.02, cov=0.0, total=100_000,
             converged=True, with_bootstrap=True) -> FitResult:
    return FitResult(
        params=MandelbrotParams(q, s, 10_000), count_scale_c=1000.0,
        log_likelihood=-1e5, r_squared=0.95, ks_stat=0.02, aic=2e5,
        bootstrap_sd_q=sd_q if with_bootstrap else None,
        bootstrap_sd_s=sd_s if with_bootstrap else None,
        bootstrap_cov_qs=cov if with_bootstrap else None,
        fit_range=(1, 10_000), n_bootstrap=100 if with_bootstrap else 0,
        n_params=2, total_tokens=total, converged=converged)


def make_ref(name, q, s, sd_q=0.06, sd_s=0.06, cov=0.0) -> FingerprintReference:
    return FingerprintReference(model_name=name, q_ref=q, s_ref=s,
                                sd_q=sd_q, sd_s=sd_s, cov_qs=cov)


class TestConsistency:
    def test_exact_match(self):
        fit = make_fit(2.5, 1.0)
        v = check_consistency(fit, make_ref("m", 2.5, 1.0))
        assert v.z_q == 0.0 and v.z_s == 0.0
        assert v.mahalanobis_d == 0.0
        assert v.consistent
        assert not v.covariance_regularized

    def test_z_scores_use_summed_variances(self):
        fit = make_fit(2.6, 1.0, sd_q=0.03, sd_s=0.01)
        ref = make_ref("m", 2.5, 1.0, sd_q=0.04, sd_s=0.02)
        v = check_consistency(fit, ref)
        assert v.z_q == pytest.approx(0.1 / np.hypot(0.03, 0.04), abs=1e-12)
        assert v.z_s == 0.0

    def test_tens_of_sds_between_extremes(self):
        # the two extreme bundled fingerprints are separated by far more
        # than the consistency threshold at corpus-scale dispersions
        fit = make_fit(3.69, 1.03, sd_q=0.06, sd_s=0.06)
        v = check_consistency(fit, make_ref("mistral-like", 1.63, 1.00))
        assert abs(v.z_q) > 10
        assert not v.consistent

    def test_threshold_monotonicity(self):
        fit = make_fit(2.7, 1.02)
        ref = make_ref("m", 2.5, 1.0)
        verdicts = [check_consistency(fit, ref, threshold=t)
                    for t in (0.5, 1.0, 2.0, 4.0, 8.0, 1000.0)]
        flips = [v.consistent for v in verdicts]
        assert flips == sorted(flips)  # once consistent, stays consistent
        assert verdicts[-1].consistent

    def test_symmetry_under_swapped_covariances(self):
        a, b = (2.0, 1.0), (3.0, 1.1)
        cov_a = dict(sd_q=0.05, sd_s=0.01, cov=0.0002)
        cov_b = dict(sd_q=0.09, sd_s=0.03, cov=-0.0005)
        v1 = check_consistency(make_fit(*a, **cov_a), make_ref("b", *b, **cov_b))
        v2 = check_consistency(make_fit(*b, **cov_b), make_ref("a", *a, **cov_a))
        assert v1.mahalanobis_d == pytest.approx(v2.mahalanobis_d, rel=1e-12)

    def test_missing_uncertainty(self):
        fit = make_fit(2.5, 1.0, with_bootstrap=False)
        with pytest.raises(MissingUncertainty):
            check_consistency(fit, make_ref("m", 2.5, 1.0))

    def test_unconverged(self):
        fit = make_fit(2.5, 1.0, converged=False)
        with pytest.raises(UnconvergedFit):
            check_consistency(fit, make_ref("m", 2.5, 1.0))

    def test_minimum_token_gate(self):
        fit = make_fit(2.5, 1.0, total=1500)
        ref = make_ref("m", 2.5, 1.0)
        with pytest.raises(InsufficientTokens):
            check_consistency(fit, ref)
        assert check_consistency(fit, ref, force=True).consistent

    def test_singular_covariance_regularized(self):
        # perfectly correlated reference covariance is singular
        ref = make_ref("m", 2.5, 1.0, sd_q=0.1, sd_s=0.1, cov=0.01)
        fit = make_fit(2.6, 1.05, sd_q=1e-9, sd_s=1e-9, cov=0.0)
        v = check_consistency(fit, ref)
        assert v.covariance_regularized
        assert np.isfinite(v.mahalanobis_d)


class TestClassify:
    def test_starter_set_places_llama_first(self):
        refs = starter_references()
        fit = make_fit(2.58, 0.98, sd_q=0.01, sd_s=0.01)
        ranked = classify(fit, refs)
        assert ranked[0][0] == "Llama 3.1 8B"
        assert ranked[0][1] < ranked[1][1]

    def test_single_reference(self):
        ranked = classify(make_fit(9.0, 2.0), [make_ref("only", 1.0, 1.0)])
        assert [name for name, _ in ranked] == ["only"]

    def test_alphabetical_tie_break(self):
        refs = [make_ref("zeta", 2.5, 1.0), make_ref("alpha", 2.5, 1.0)]
        ranked = classify(make_fit(2.5, 1.0), refs)
        assert [name for name, _ in ranked] == ["alpha", "zeta"]

    def test_empty_reference_set(self):
        with pytest.raises(EmptyReferenceSet):
            classify(make_fit(2.5, 1.0), [])


class TestReferenceValidation:
    def test_psd_required(self):
        with pytest.raises(ValueError):
            FingerprintReference("m", 2.0, 1.0, sd_q=0.1, sd_s=0.1, cov_qs=0.02)

    def test_positive_sds_required(self):
        with pytest.raises(ValueError):
            FingerprintReference("m", 2.0, 1.0, sd_q=0.0, sd_s=0.1)

    def test_starter_rows(self):
        refs = starter_references()
        assert len(refs) == 6
        names = {r.model_name for r in refs}
        assert "GPT-5.1" in names and "Mistral Large" in names
        qs = sorted(r.q_ref for r in refs)
        assert qs[0] == 1.63 and qs[-1] == 3.69
        assert all("approximate" in r.notes for r in refs)


class TestParameterDistance:
    def test_self_distance_zero(self):
        ref = make_ref("m", 2.5, 1.0, sd_q=0.2, sd_s=0.05, cov=0.005)
        _, _, d, _ = parameter_distance(2.5, 1.0, ref)
        assert d == 0.0

    def test_correlation_shapes_distance(self):
        # a displacement along the correlation ridge is nearer than the
        # same displacement against it
        ref_corr = make_ref("m", 0.0, 0.0, sd_q=1.0, sd_s=1.0, cov=0.9)
        _, _, d_along, _ = parameter_distance(1.0, 1.0, ref_corr)
        _, _, d_against, _ = parameter_distance(1.0, -1.0, ref_corr)
        assert d_along < d_against


class TestSamplingReference:
    def test_deterministic_and_centered(self):
        params = MandelbrotParams(2.0, 1.0, 500)
        a = sampling_reference("m", params, n_tokens=40_000, n_fits=5, seed=3)
        b = sampling_reference("m", params, n_tokens=40_000, n_fits=5, seed=3)
        assert a == b
        assert a.q_ref == pytest.approx(2.0, abs=0.3)
        assert a.s_ref == pytest.approx(1.0, abs=0.05)

    def test_dispersion_scale_multiplies_sds(self):
        params = MandelbrotParams(2.0, 1.0, 500)
        one = sampling_reference("m", params, 20_000, n_fits=4, seed=1)
        two = sampling_reference("m", params, 20_000, n_fits=4, seed=1,
                                 dispersion_scale=2.0)
        assert two.sd_q == pytest.approx(2 * one.sd_q, rel=1e-12)
        assert two.sd_s == pytest.approx(2 * one.sd_s, rel=1e-12)
        assert two.cov_qs == pytest.approx(4 * one.cov_qs, rel=1e-12)
