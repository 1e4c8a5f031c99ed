import numpy as np
import pytest

from irs_maxmin.config import SystemConfig


def make_cfg(**kw):
    """Small strong-IRS scenario: UEs near the surface, attenuated direct
    link, Von Mises phase noise.  Gradients and IRS gains are well scaled."""
    base = dict(
        M=8, N=4, K=2,
        kappa_bs=0.05 ** 2, kappa_ue=0.05 ** 2,
        phase_noise="von_mises", kappa_theta=2.0,
        penetration_loss_db=25.0,
        bs_position=np.array([0.0, 0.0, 10.0]),
        irs_position=np.array([40.0, 0.0, 10.0]),
        ue_center=np.array([42.0, 5.0, 1.5]),
        ue_radius=1.5,
        seed=7,
    )
    base.update(kw)
    return SystemConfig(**base)


@pytest.fixture
def small_cfg():
    return make_cfg()


@pytest.fixture
def mid_cfg():
    return make_cfg(M=16, N=8, K=2)
