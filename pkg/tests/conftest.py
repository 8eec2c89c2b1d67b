import numpy as np
import pytest

from Contracts.ContractTypes import MarketState, TypeLadder
from Economics.EconModel import EdgeProfile, QualityHyper, cost_coeffs


@pytest.fixture
def edge():
    return EdgeProfile()


@pytest.fixture
def hyper():
    return QualityHyper()


@pytest.fixture
def costs(edge):
    # c = 24.576, E = 20.384 at σ = 0.5
    return cost_coeffs(edge)


@pytest.fixture
def ladder():
    return TypeLadder(theta1=[15.0, 20.0], theta2=[15.0, 20.0], p1=[0.5, 0.5],
                      p2=[[0.6, 0.4], [0.4, 0.6]])


@pytest.fixture
def market(ladder, edge, hyper):
    return MarketState(n_servers=3, ladder=ladder, profile=edge, hyper=hyper,
                       alpha=200.0, beta=0.5, e_cloud=20.0)


@pytest.fixture
def worked_rounds():
    return np.array([10.0, 20.0]), np.array([[10.0, 20.0], [12.0, 22.0]])


@pytest.fixture
def single_type_market(edge, hyper):
    ladder = TypeLadder(theta1=[20.0], theta2=[20.0], p1=[1.0], p2=[[1.0]])
    return MarketState(n_servers=1, ladder=ladder, profile=edge, hyper=hyper,
                       alpha=200.0, beta=0.0, e_cloud=0.0)
