import numpy as np
import pytest

from mprim import metrics
from mprim.basis import PhaseConfig, default_basis, build_phi
from mprim.dataset import WPP_SPLITS, apply_split, generate_rtp, generate_wpp
from mprim.promp import PrompWeights
from mprim.regressor import ridge_fit
from mprim.training import (TrainConfig, TrainedModel, TrainReport,
                            _weight_targets, evaluate, random_split, train,
                            train_ddmp, train_deep_mp,
                            train_residual_deep_mp)


@pytest.fixture(scope="module")
def small_rtp():
    return generate_rtp(seed=21, counts=(24, 12, 8, 6))


@pytest.fixture(scope="module")
def tiny_wpp():
    return generate_wpp(seed=22, trials_per_cell=2)


def grids_for(dataset, n_basis=8):
    pc = PhaseConfig(dataset.sampling_frequency, dataset.n_samples_per_traj)
    bc = default_basis(pc, n_basis)
    return pc, bc, build_phi(pc, bc)


class TestSplits:
    def test_deterministic_membership(self):
        a = random_split(100, 0.85, seed=4)
        b = random_split(100, 0.85, seed=4)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_disjoint_and_covering(self):
        train_idx, test_idx = random_split(50, 0.85, seed=0)
        assert set(train_idx).isdisjoint(test_idx)
        assert set(train_idx) | set(test_idx) == set(range(50))

    def test_two_samples_train_side(self):
        train_idx, test_idx = random_split(2, 0.85, seed=0)
        assert len(train_idx) == 2 and len(test_idx) == 0


class TestTrainDeepMp:
    def test_zero_epochs_returns_init(self, small_rtp):
        pc, bc, _ = grids_for(small_rtp)
        model, report = train_deep_mp(small_rtp, bc, pc,
                                      TrainConfig(epochs=0, seed=1))
        assert report.final_epoch == 0
        assert report.stopping_reason == "zero_epochs"
        assert isinstance(model, TrainedModel)
        assert model.mlp.n_outputs == 7 * bc.n_basis

    def test_single_sample_memorization(self):
        # pure memorization: the loss floor scales with the Adam step
        # size, so a small rate plus many cheap single-sample epochs gets
        # below 1e-3
        ds = generate_rtp(seed=5, counts=(1, 1, 1, 1))
        ds.samples = ds.samples[:1]
        pc, bc, _ = grids_for(ds)
        cfg = TrainConfig(epochs=12_000, batch_size=1, learning_rate=5e-5,
                          seed=2, early_stop_patience=12_000)
        model, report = train_deep_mp(ds, bc, pc, cfg,
                                      split=(np.array([0]), np.array([], int)))
        assert report.train_loss[-1] < 1e-3

    def test_checkpoint_is_best_validation(self, small_rtp):
        pc, bc, _ = grids_for(small_rtp)
        model, report = train_deep_mp(small_rtp, bc, pc,
                                      TrainConfig(epochs=30, seed=3))
        assert report.best_epoch == int(np.argmin(report.val_loss))

    def test_seeded_curves_are_identical(self, small_rtp):
        pc, bc, _ = grids_for(small_rtp)
        cfg = TrainConfig(epochs=8, seed=9)
        _, r1 = train_deep_mp(small_rtp, bc, pc, cfg)
        _, r2 = train_deep_mp(small_rtp, bc, pc, cfg)
        assert r1.train_loss == r2.train_loss
        assert r1.val_loss == r2.val_loss

    def test_affine_map_close_to_ridge_oracle(self):
        # context-to-weights map exactly affine plus observation noise:
        # ridge is the right model here, so landing within 2x of it is
        # the bar the net has to clear
        rng = np.random.default_rng(12)
        ds = generate_rtp(seed=23, counts=(120, 40, 30, 20))
        pc, bc, phi = grids_for(ds)
        targets_map = rng.standard_normal((3, 7 * 8)) * 0.3
        for s in ds.samples:
            flat = s.context @ targets_map
            clean = phi.values @ flat.reshape(7, 8).T
            s.trajectory.values[:] = clean + 0.05 * rng.standard_normal(
                clean.shape)
        cfg = TrainConfig(epochs=300, learning_rate=5e-4, seed=4,
                          early_stop_patience=300)
        model, _ = train_deep_mp(ds, bc, pc, cfg, hidden=(32,))
        test_idx = np.asarray(model.test_indices)
        train_idx = np.asarray(model.train_indices)
        targets = _weight_targets(ds, phi)
        ctx = ds.contexts()
        rmap = ridge_fit(ctx[train_idx], targets[train_idx], ridge=1e-8)
        gt = [PrompWeights(targets[i].reshape(7, 8)) for i in test_idx]
        net = [model.predict_weights(ctx[i]) for i in test_idx]
        ora = [PrompWeights(rmap.predict(ctx[i]).reshape(7, 8))
               for i in test_idx]
        net_mse = metrics.ave_mse(net, gt, phi)
        ridge_mse = metrics.ave_mse(ora, gt, phi)
        assert net_mse <= 2 * ridge_mse

    def test_inconsistent_lengths_rejected(self, small_rtp):
        import copy
        ds = copy.deepcopy(small_rtp)
        short = generate_rtp(seed=1, counts=(1, 1, 1, 1),
                             n_samples_traj=100)
        ds.samples[3] = short.samples[0]
        pc, bc, _ = grids_for(small_rtp)
        with pytest.raises(ValueError, match="sample 3"):
            train_deep_mp(ds, bc, pc, TrainConfig(epochs=1))


class TestTrainResidual:
    def test_two_demo_dataset_trains(self):
        ds = generate_rtp(seed=6, counts=(1, 1, 1, 1))
        ds.samples = ds.samples[:2]
        pc, bc, _ = grids_for(ds)
        model, report = train_residual_deep_mp(ds, bc, pc,
                                               TrainConfig(epochs=2, seed=0))
        assert report.final_epoch == 2

    def test_single_demo_rejected(self):
        ds = generate_rtp(seed=6, counts=(1, 1, 1, 1))
        ds.samples = ds.samples[:1]
        pc, bc, _ = grids_for(ds)
        with pytest.raises(ValueError, match="at least 2"):
            train_residual_deep_mp(
                ds, bc, pc, TrainConfig(epochs=1),
                split=(np.array([0]), np.array([], int)))

    def test_identical_demos_reconstruct_common_trajectory(self):
        ds = generate_rtp(seed=7, counts=(1, 1, 1, 1))
        clone = ds.samples[0]
        for s in ds.samples[1:]:
            s.context[:] = clone.context
            s.trajectory.values[:] = clone.trajectory.values
            s.tags["region"] = "A"
        for s in ds.samples:
            s.tags["region"] = "A"
        pc, bc, _ = grids_for(ds)
        cfg = TrainConfig(epochs=5, seed=1)
        split = (np.arange(4), np.array([], int))
        model, _ = train_residual_deep_mp(ds, bc, pc, cfg, split=split)
        traj = model.predict_trajectory(clone.context, "A")
        rmse = np.sqrt(np.mean((traj.values - clone.trajectory.values) ** 2))
        assert rmse < 1e-3

    def test_residual_targets_mean_center(self, small_rtp):
        # residuals across the training split average to the zero vector
        pc, bc, phi = grids_for(small_rtp)
        cfg = TrainConfig(epochs=1, seed=8)
        model, _ = train_residual_deep_mp(small_rtp, bc, pc, cfg)
        train_idx = np.asarray(model.train_indices)
        targets = _weight_targets(small_rtp, phi)
        residuals = []
        for i in train_idx:
            region = small_rtp.samples[i].tags["region"]
            residuals.append(targets[i] - model.mean_weights[region])
        np.testing.assert_allclose(np.mean(residuals, axis=0), 0.0,
                                   atol=1e-10)

    def test_no_leakage_into_mean(self, small_rtp):
        pc, bc, _ = grids_for(small_rtp)
        model, _ = train_residual_deep_mp(small_rtp, bc, pc,
                                          TrainConfig(epochs=1, seed=9))
        assert set(model.mean_source_indices).isdisjoint(model.test_indices)
        assert set(model.mean_source_indices) == set(model.train_indices)

    def test_region_means_exist_with_global_fallback(self, small_rtp):
        pc, bc, _ = grids_for(small_rtp)
        model, _ = train_residual_deep_mp(small_rtp, bc, pc,
                                          TrainConfig(epochs=1, seed=10))
        assert "__global__" in model.mean_weights
        assert {"A", "B", "C", "D"} <= set(model.mean_weights)

    def test_residual_not_worse_than_full_subset_of_seeds(self, small_rtp):
        # paired-run check, recorded rather than hard-asserted per seed:
        # the residual variant should win on most seeds
        pc, bc, _ = grids_for(small_rtp)
        wins = 0
        for seed in range(5):
            cfg = TrainConfig(epochs=12, seed=seed)
            _, full = train_deep_mp(small_rtp, bc, pc, cfg)
            _, res = train_residual_deep_mp(small_rtp, bc, pc, cfg)
            if res.train_loss[-1] <= full.train_loss[-1]:
                wins += 1
        assert wins >= 3


class TestTrainDdmp:
    def test_rtp_head_excludes_start(self, small_rtp):
        cfg = TrainConfig(epochs=1, seed=0)
        model, _ = train_ddmp(small_rtp, cfg, n_basis_dmp=25)
        assert model.task == "rtp"
        assert model.mlp.n_outputs == 7 * (25 + 1)
        assert model.home is not None

    def test_wpp_head_includes_start(self, tiny_wpp):
        cfg = TrainConfig(epochs=1, seed=0)
        model, _ = train_ddmp(tiny_wpp, cfg, n_basis_dmp=25)
        assert model.task == "wpp"
        assert model.mlp.n_outputs == 7 * (25 + 2)

    def test_predicted_model_round_trip(self, small_rtp):
        cfg = TrainConfig(epochs=2, seed=1)
        model, _ = train_ddmp(small_rtp, cfg, n_basis_dmp=10)
        sample = small_rtp.samples[0]
        dmp_model = model.predict_dmp(sample.context)
        assert dmp_model.forcing_weights.shape == (7, 10)
        traj = model.predict_trajectory(sample.context)
        assert traj.values.shape == (150, 7)

    def test_zero_loss_on_perfect_prediction(self, small_rtp):
        # prediction identical to the target parameter vector gives a
        # zero-loss epoch immediately
        from mprim.regressor import batch_loss_and_grad
        from mprim.training import _ddmp_targets
        targets = _ddmp_targets(small_rtp, 10, 7.6, "rtp")
        losses, grads = batch_loss_and_grad(targets[:4], targets[:4],
                                            "ddmp_rtp", n_joint=7)
        assert np.all(losses == 0.0) and np.all(grads == 0.0)


class TestEvaluate:
    def test_oracle_model_scores_zero(self, small_rtp):
        # a bias-only net that always outputs the exact weights of a
        # constant dataset must score zero everywhere
        pc, bc, phi = grids_for(small_rtp)
        import copy
        ds = copy.deepcopy(small_rtp)
        base = ds.samples[0]
        for s in ds.samples:
            s.context[:] = base.context
            s.trajectory.values[:] = base.trajectory.values
        targets = _weight_targets(ds, phi)
        from mprim.regressor import MlpParams
        mlp = MlpParams((3, 56), (np.zeros((3, 56)),), (targets[0].copy(),))
        model = TrainedModel(
            kind="deep_mp", task="rtp", mlp=mlp, ctx_mean=np.zeros(3),
            ctx_std=np.ones(3), n_joint=7, phase_cfg=pc, basis_cfg=bc,
            test_indices=tuple(range(len(ds))))
        records, overall = evaluate(model, ds, np.arange(len(ds)))
        assert overall.ave_mse == 0.0
        assert overall.ave_ed_mm == 0.0

    def test_grouping_by_region(self, small_rtp):
        pc, bc, _ = grids_for(small_rtp)
        model, _ = train_deep_mp(small_rtp, bc, pc,
                                 TrainConfig(epochs=2, seed=5))
        records, overall = evaluate(model, small_rtp,
                                    np.arange(len(small_rtp)))
        assert [r.group for r in records] == ["A", "B", "C", "D"]
        assert overall.count == len(small_rtp)
        assert sum(r.count for r in records) == overall.count

    def test_wpp_grouping_by_config(self, tiny_wpp):
        cfg = TrainConfig(epochs=1, seed=0)
        split = apply_split(tiny_wpp, WPP_SPLITS["WPP9"], seed=0)
        model, _ = train_ddmp(tiny_wpp, cfg, n_basis_dmp=5, split=split)
        records, _ = evaluate(model, tiny_wpp, split[1])
        assert [r.group for r in records] == ["I", "II", "III", "IV"]

    def test_ave_mse_matches_recomputation(self, small_rtp):
        pc, bc, phi = grids_for(small_rtp)
        model, _ = train_deep_mp(small_rtp, bc, pc,
                                 TrainConfig(epochs=3, seed=6))
        idx = np.asarray(model.test_indices)
        _, overall = evaluate(model, small_rtp, idx)
        targets = _weight_targets(small_rtp, phi)
        gt = [PrompWeights(targets[i].reshape(7, 8)) for i in idx]
        pred = [model.predict_weights(small_rtp.samples[i].context)
                for i in idx]
        assert overall.ave_mse == pytest.approx(
            metrics.ave_mse(pred, gt, phi), rel=1e-12)

    def test_empty_split_rejected(self, small_rtp):
        pc, bc, _ = grids_for(small_rtp)
        model, _ = train_deep_mp(small_rtp, bc, pc,
                                 TrainConfig(epochs=1, seed=7))
        with pytest.raises(ValueError):
            evaluate(model, small_rtp, np.array([], int))


class TestDispatchAndReport:
    def test_train_dispatch(self, small_rtp):
        model, _ = train("deep-mp", small_rtp, TrainConfig(epochs=1, seed=0))
        assert model.kind == "deep_mp"
        assert model.basis_cfg.n_basis == 8   # rtp default
        with pytest.raises(ValueError, match="unknown method"):
            train("mystery", small_rtp, TrainConfig(epochs=1))

    def test_wpp_basis_default(self, tiny_wpp):
        model, _ = train("deep-mp", tiny_wpp, TrainConfig(epochs=1, seed=0))
        assert model.basis_cfg.n_basis == 10

    def test_report_csv(self, tmp_path):
        report = TrainReport(train_loss=[0.5, 0.25], val_loss=[0.6, 0.3],
                             best_epoch=1, stopping_reason="max_epochs")
        path = tmp_path / "curve.csv"
        report.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "epoch,train_loss,val_loss"
        assert len(lines) == 3
        assert report.final_epoch == 2

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=-1)
        with pytest.raises(ValueError):
            TrainConfig(epochs=1, train_fraction=1.5)
