from __future__ import annotations

import numpy as np
import pytest

from lingrowth.identities import (
    IdentityCheck,
    IdentityReport,
    check_hausdorff_young,
    check_walk_identity,
    corrupt_beta,
    random_potlatch,
    run_identities,
)
from lingrowth.kernel import beta_matrix, make_bcpp
from lingrowth.lattice import origin

SMALL = dict(
    potlatch_instances=1, drift_instances=5, drift_kernels=1, hausdorff_instances=20
)

DRIFT_CHECKS = [
    "drift_u_identity",
    "drift_w_identity",
    "drift_lower_bound",
    "drift_v_bound",
    "drift_f_bounds",
]


def test_default_battery_passes() -> None:
    report = run_identities(seed=1, **SMALL)
    assert report.passed, [c.to_dict() for c in report.failures]
    names = [check.name for check in report.checks]
    assert names[:5] == [
        "green_identity",
        "harmonic_h",
        "potlatch_statistic",
        "walk_identity",
        "hausdorff_young",
    ]
    assert names[5:] == DRIFT_CHECKS
    assert not any(check.skipped for check in report.checks)


def test_corrupted_beta_fails_u_identity(caplog) -> None:
    report = run_identities(make_bcpp(1, 1.0), seed=2, corrupt=True, **SMALL)
    assert not report.passed
    assert [c.name for c in report.failures] == ["drift_u_identity"]
    assert report.get("drift_u_identity").residual > 1e-3
    assert "drift_u_identity" in caplog.text


def test_green_checks_are_skipped_in_low_dimension() -> None:
    report = run_identities(make_bcpp(1, 1.0), seed=3, **SMALL)
    assert report.passed
    for name in ("green_identity", "harmonic_h", "potlatch_statistic"):
        check = report.get(name)
        assert check.skipped
        assert check.status == "skipped"
        assert "d=1" in check.note
    assert report.get("walk_identity").status == "pass"


def test_report_serialization() -> None:
    checks = (
        IdentityCheck("a", True, 0.0, 1e-12),
        IdentityCheck("b", False, 1.0, 1e-12, instances=4),
        IdentityCheck("c", True, 0.0, 0.0, skipped=True, note="why"),
    )
    report = IdentityReport(checks)
    data = report.to_dict()
    assert data["passed"] is False
    assert [c["status"] for c in data["checks"]] == ["pass", "fail", "skipped"]
    assert data["checks"][2]["note"] == "why"
    with pytest.raises(KeyError):
        report.get("missing")


def test_random_potlatch_has_mean_one_weight() -> None:
    rng = np.random.default_rng(4)
    for _ in range(5):
        dist = random_potlatch(rng, 2)
        w_atoms = dist.params["w_atoms"]
        assert sum(p * w for p, w in w_atoms) == pytest.approx(1.0)


def test_corrupt_beta_moves_origin_entry() -> None:
    dist = make_bcpp(2, 1.0)
    zero = origin(2)
    original = beta_matrix(dist)[(zero, zero)]
    assert corrupt_beta(dist, 0.5)[(zero, zero)] == pytest.approx(original + 0.5)


def test_walk_and_hausdorff_checks() -> None:
    assert check_walk_identity(make_bcpp(2, 0.5), n=4).passed
    assert check_hausdorff_young(np.random.default_rng(5), 2, 50).passed
