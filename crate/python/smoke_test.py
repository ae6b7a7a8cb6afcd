"""Smoke test for the pyharsweep extension module.

Build and install first:

    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/pyharsweep-*.whl
    python python/smoke_test.py
"""

import math

import pyharsweep as hs


def main():
    cfg = hs.WindowConfig(500, 0.8)
    assert cfg.step == 100
    assert cfg.window_count(1000) == 6

    eps = hs.hoeffding_bound(1.0, 0.05, 1000)
    assert abs(eps - math.sqrt(math.log(20) / 2000)) < 1e-12
    assert abs(hs.hoeffding_bound(1.0, 1e-7, 4000) * 2 - hs.hoeffding_bound(1.0, 1e-7, 1000)) < 1e-15

    spec = hs.SyntheticSpec(seed=3, users=3, class_count=3, samples_per_class=1500)
    streams = spec.generate()
    assert [s.user_id for s in streams] == [1, 2, 3]
    assert len(streams[0]) == 4500

    names = hs.feature_names()
    assert len(names) == hs.FEATURE_COUNT == 81

    small = hs.WindowConfig(200, 0.5)
    train = [fv for s in streams[1:] for fv in hs.extract_features(s, small)]
    test = hs.extract_features(streams[0], small)
    assert all(len(fv) == 81 for fv in train)

    model = hs.EnsembleModel.train(train)
    pred = model.classify(test[0].values)
    assert 0.0 <= pred.confidence <= 1.0
    assert len(pred.members) == 3

    frozen_rows, frozen = model.run_online(test, "sup")
    assert frozen.state_hash() == model.state_hash()
    semi_rows, _ = model.run_online(test, "semi")
    assert len(frozen_rows) == len(semi_rows) == len(test)
    accuracy = sum(r[1] == r[2] for r in semi_rows) / len(semi_rows)

    result = hs.evaluate_user(streams, 1, small, mode="semi")
    assert result.windows == len(test)
    assert abs(result.accuracy - accuracy) < 1e-12

    cells = hs.sweep(streams, [200, 400], [0.0, 0.5], seed=3)
    assert len(cells) == 3 * 2 * 2 * 2

    try:
        hs.WindowConfig(1, 0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("window size 1 accepted")

    print(f"pyharsweep smoke test passed: {len(cells)} cells, user 1 accuracy {accuracy:.3f}")


if __name__ == "__main__":
    main()
