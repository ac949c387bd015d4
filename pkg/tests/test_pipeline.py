import numpy as np
import pytest

from seqretinex.denoisers import DenoiserSpec
from seqretinex.errors import ConfigError, StageError
from seqretinex.image_core import ImageRGB, rgb_to_hsv
from seqretinex.pipeline import EnhanceConfig, enhance, gamma_correct


def identity_cfg():
    return EnhanceConfig(alpha=0.0, beta=0.0, gamma1=1.0, gamma2=1.0,
                         denoiser=DenoiserSpec("identity"))


class TestConfig:
    def test_defaults_match_algorithm(self):
        cfg = EnhanceConfig()
        assert (cfg.alpha, cfg.theta0, cfg.rho) == (0.1, 0.0045, 1.08)
        assert (cfg.eps, cfg.kappa, cfg.sigma) == (1.0, 2.5, 10.0)
        assert (cfg.mu, cfg.beta) == (0.001, 0.001)
        assert cfg.noise_level == pytest.approx(25 / 255)
        assert cfg.iota == 1e-5

    def test_validation(self):
        for bad in (dict(rho=1.0), dict(theta0=0.0), dict(mu=-1.0),
                    dict(gamma1=0.0), dict(gamma2=-2.0), dict(iota=0.0),
                    dict(gamma_mode="triple"), dict(sigma=0.0)):
            with pytest.raises(ConfigError):
                EnhanceConfig(**bad)

    def test_profiles(self):
        lol = EnhanceConfig().with_profile("lol")
        assert (lol.gamma1, lol.gamma2, lol.gamma_mode) == (1.5, 4.0, "dual")
        set12 = EnhanceConfig().with_profile("set12")
        assert (set12.gamma1, set12.gamma2, set12.gamma_mode) == (1.0, 2.2, "single")
        with pytest.raises(ConfigError):
            EnhanceConfig().with_profile("set13")

    def test_json_roundtrip(self):
        cfg = EnhanceConfig(alpha=0.25, denoiser=DenoiserSpec("total_variation"))
        assert EnhanceConfig.from_json(cfg.to_json()) == cfg

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            EnhanceConfig.from_json('{"alpha": 0.1, "blorp": 3}')
        with pytest.raises(ConfigError):
            EnhanceConfig().with_overrides(blorp=3)

    def test_malformed_json(self):
        with pytest.raises(ConfigError):
            EnhanceConfig.from_json("{nope")


class TestGammaCorrect:
    def test_unit_illumination(self):
        R = np.full((2, 2, 3), 0.8)
        L = np.ones((2, 2))
        out = gamma_correct(R, L, "dual", gamma1=2.0, gamma2=2.2)
        assert np.allclose(np.asarray(out), 0.8**0.5)

    def test_frozen_single_mode_value(self):
        # 0.25^(1/2.2) = 0.5325205...
        R = np.ones((1, 1, 3))
        L = np.full((1, 1), 0.25)
        out = gamma_correct(R, L, "single", gamma1=1.0, gamma2=2.2)
        assert np.asarray(out)[0, 0, 0] == pytest.approx(0.25 ** (1 / 2.2), abs=1e-12)
        assert np.asarray(out)[0, 0, 0] == pytest.approx(0.5325205, abs=1e-6)

    def test_unit_gammas_recover_product(self):
        rng = np.random.Generator(np.random.Philox(51))
        R = rng.uniform(0, 2, size=(4, 4, 3))
        L = rng.uniform(0.1, 1, size=(4, 4))
        out = gamma_correct(R, L, "dual", gamma1=1.0, gamma2=1.0)
        assert np.allclose(np.asarray(out), np.clip(R * L[:, :, None], 0, 1))

    def test_single_mode_ignores_gamma1(self):
        R = np.full((2, 2, 3), 0.5)
        L = np.full((2, 2), 0.5)
        a = gamma_correct(R, L, "single", gamma1=1.0, gamma2=2.2)
        b = gamma_correct(R, L, "single", gamma1=9.0, gamma2=2.2)
        assert np.array_equal(np.asarray(a), np.asarray(b))

    def test_clamped_output(self):
        out = gamma_correct(np.full((2, 2, 3), 3.0), np.ones((2, 2)),
                            "single", 1.0, 2.2)
        assert np.asarray(out).max() <= 1.0


class TestEnhance:
    def test_all_white_identity(self):
        img = ImageRGB(np.ones((8, 8, 3)))
        res = enhance(img, EnhanceConfig(denoiser=DenoiserSpec("identity"),
                                         gamma1=1.0, gamma2=1.0))
        assert np.allclose(np.asarray(res.enhanced), 1.0, atol=1e-10)
        assert np.allclose(np.asarray(res.L), 1.0)

    def test_constant_quarter_gray_gamma_lift(self):
        # closed form: L = 0.25, R = 1, output = 0.25^(1/2.2)
        img = ImageRGB(np.full((8, 8, 3), 0.25))
        cfg = EnhanceConfig(alpha=0.0, beta=0.0, gamma_mode="single", gamma2=2.2,
                            denoiser=DenoiserSpec("identity"))
        res = enhance(img, cfg)
        assert np.allclose(np.asarray(res.enhanced), 0.25 ** (1 / 2.2), atol=1e-8)

    def test_pipeline_identity(self, desk_corpus_small):
        cfg = identity_cfg()
        for img in desk_corpus_small:
            res = enhance(ImageRGB(img), cfg)
            assert np.abs(np.asarray(res.enhanced) - np.clip(img, 0, 1)).max() <= 1e-8

    def test_gamma_monotonicity(self, desk_corpus_small):
        img = ImageRGB(desk_corpus_small[0])
        means = []
        for g2 in (1.0, 2.2, 4.0):
            res = enhance(img, EnhanceConfig(gamma2=g2))
            means.append(np.asarray(res.enhanced).mean())
        assert means[0] <= means[1] + 1e-12 <= means[2] + 2e-12

    def test_dark_input_brightened(self, desk_corpus_small):
        cfg = EnhanceConfig()
        dark = [img for img in desk_corpus_small
                if np.asarray(rgb_to_hsv(ImageRGB(img))[2]).mean() < 0.3]
        assert dark, "corpus must include dark images"
        for img in dark:
            res = enhance(ImageRGB(img), cfg)
            v_in = np.asarray(rgb_to_hsv(ImageRGB(img))[2]).mean()
            v_out = np.asarray(rgb_to_hsv(res.enhanced)[2]).mean()
            assert v_out > v_in

    def test_output_bounded_and_finite(self, desk_corpus_small):
        for img in desk_corpus_small[:3]:
            res = enhance(ImageRGB(img), EnhanceConfig())
            out = np.asarray(res.enhanced)
            assert np.all(np.isfinite(out))
            assert out.min() >= 0.0
            assert out.max() <= 1.0

    def test_stage_tagged_failure(self):
        img = ImageRGB(np.full((8, 8, 3), 0.5))
        cfg = EnhanceConfig(denoiser=DenoiserSpec(
            "external", params={"command": "/nonexistent-denoiser"}))
        with pytest.raises(StageError) as exc_info:
            enhance(img, cfg)
        assert exc_info.value.stage == "reflectance"
