from __future__ import annotations

import numpy as np
import pytest

from lingrowth.seeds import MASK64, derive_seed, derive_seeds, site_seed, splitmix64


def test_splitmix64_reference_value() -> None:
    # first output of the reference SplitMix64 generator seeded with 0
    assert splitmix64(0x9E3779B97F4A7C15) == 0xE220A8397B1DCDAF


def test_derived_seeds_are_distinct_and_64_bit() -> None:
    seeds = [derive_seed(123, index) for index in range(10_000)]
    assert len(set(seeds)) == len(seeds)
    assert all(0 <= s <= MASK64 for s in seeds)


def test_million_run_seeds_do_not_collide() -> None:
    seeds = derive_seeds(123, np.arange(10**6))
    assert len(np.unique(seeds)) == 10**6
    assert int(seeds[999_999]) == derive_seed(123, 999_999)


def test_vectorised_matches_scalar() -> None:
    master = 2**64 - 5
    indices = np.arange(257)
    vector = derive_seeds(master, indices)
    assert vector.dtype == np.uint64
    assert [int(v) for v in vector] == [derive_seed(master, int(i)) for i in indices]


def test_negative_index_is_rejected() -> None:
    with pytest.raises(ValueError):
        derive_seed(0, -1)


def test_site_seed_depends_on_every_coordinate() -> None:
    base = site_seed(7, (0, 0, 0))
    assert site_seed(7, (0, 0, 0)) == base
    assert len({base, site_seed(7, (1, 0, 0)), site_seed(7, (0, 0, 1))}) == 3
    assert site_seed(7, (-1,)) != site_seed(7, (1,))
